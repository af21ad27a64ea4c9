//! Diff files: JSON lines, a header followed by one log entry per line.

use serde::{Deserialize, Serialize};

use super::{EditError, LogEntry, Session};
use crate::graph::Document;

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffHeader {
    pub base_id: String,
    pub content_hash: String,
    pub format_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffLog {
    pub header: DiffHeader,
    pub entries: Vec<LogEntry>,
}

impl DiffLog {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serializes");
        out.push('\n');
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("entry serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(input: &str) -> Result<DiffLog, EditError> {
        let mut lines = input.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let bad =
            |line: usize, e: serde_json::Error| EditError::MalformedDiff { line: line + 1, reason: e.to_string() };
        let (n, first) = lines.next().ok_or(EditError::MalformedDiff { line: 1, reason: "missing header".into() })?;
        let header: DiffHeader = serde_json::from_str(first).map_err(|e| bad(n, e))?;
        if header.format_version != FORMAT_VERSION {
            return Err(EditError::MalformedDiff {
                line: n + 1,
                reason: format!("unsupported format version {:?}", header.format_version),
            });
        }
        let mut entries: Vec<LogEntry> = Vec::new();
        for (n, line) in lines {
            let entry: LogEntry = serde_json::from_str(line).map_err(|e| bad(n, e))?;
            if entries.last().is_some_and(|prev| prev.seq >= entry.seq) {
                return Err(EditError::MalformedDiff { line: n + 1, reason: "sequence numbers must increase".into() });
            }
            entries.push(entry);
        }
        Ok(DiffLog { header, entries })
    }

    /// True when every entry is a presentation op (or the undo of one).
    pub fn presentation_only(&self) -> bool {
        self.entries.iter().all(|e| e.presentation)
    }
}

/// Applies a diff to its base document. Taxonomy recolors do not touch the
/// document and are skipped.
pub fn replay(base: &Document, diff: &DiffLog) -> Result<Document, EditError> {
    Ok(Session::replay(base.clone(), None, diff)?.document().clone())
}
