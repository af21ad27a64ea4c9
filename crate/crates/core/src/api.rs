//! Request and response bodies shared by the HTTP service and its client.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::edit::{Applied, LogEntry};
use crate::format::{parse_bioc, parse_brat, parse_conllx, FormatError, Report};
use crate::graph::{AnchorRef, Color, Document, Issue, SourceFormat};
use crate::layout::{LayoutError, RowRange, ViewConfig};

/// One document available from the service.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentEntry {
    pub id: String,
    pub format: SourceFormat,
    /// Source files; empty for uploaded documents.
    #[serde(default)]
    pub paths: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taxonomy: Option<String>,
}

/// Body of `POST /api/documents`. BRAT needs `txt` and `ann`, the other
/// formats `content`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Upload {
    pub id: String,
    pub format: Option<SourceFormat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub txt: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ann: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content: Option<String>,
    /// Taxonomy file text, registered under the document id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taxonomy: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum UploadError {
    #[error("upload has no format")]
    MissingFormat,
    #[error("{format} upload needs `{field}`")]
    MissingField { format: SourceFormat, field: &'static str },
    #[error(transparent)]
    Format(#[from] FormatError),
}

impl UploadError {
    pub fn code(&self) -> &'static str {
        match self {
            UploadError::MissingFormat | UploadError::MissingField { .. } => "MALFORMED_BODY",
            UploadError::Format(e) => e.code(),
        }
    }
}

impl Upload {
    /// Parses the uploaded content. BioC may yield several documents.
    pub fn parse(&self) -> Result<(SourceFormat, Vec<Document>, Report), UploadError> {
        let format = self.format.ok_or(UploadError::MissingFormat)?;
        fn need<'u>(
            value: &'u Option<String>,
            format: SourceFormat,
            field: &'static str,
        ) -> Result<&'u str, UploadError> {
            value.as_deref().ok_or(UploadError::MissingField { format, field })
        }
        let (docs, report) = match format {
            SourceFormat::Brat => {
                let (doc, report) =
                    parse_brat(&self.id, need(&self.txt, format, "txt")?, need(&self.ann, format, "ann")?)?;
                (vec![doc], report)
            }
            SourceFormat::Conllx => {
                let (doc, report) = parse_conllx(&self.id, need(&self.content, format, "content")?)?;
                (vec![doc], report)
            }
            SourceFormat::Bioc => parse_bioc(need(&self.content, format, "content")?)?,
        };
        Ok((format, docs, report))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UploadResponse {
    pub entries: Vec<DocumentEntry>,
    pub report: Report,
}

/// Display options accepted by the layout and SVG endpoints.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ViewQuery {
    pub width: Option<f64>,
    /// `a..b`, inclusive, or `a..last`.
    pub rows: Option<String>,
    pub hide_syntax: bool,
    pub hide_semantics: bool,
}

impl ViewQuery {
    /// The layout settings these options describe.
    pub fn view_config(&self, default_width: f64) -> ViewConfig {
        let mut cfg = ViewConfig::with_width(self.width.unwrap_or(default_width));
        cfg.filter.show_syntactic = !self.hide_syntax;
        cfg.filter.show_semantic = !self.hide_semantics;
        cfg
    }

    pub fn row_range(&self) -> Result<RowRange, LayoutError> {
        self.rows.as_deref().map_or(Ok(RowRange::ALL), str::parse)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeQuery {
    /// Element id, or `token:N`.
    pub select: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditResponse {
    pub applied: Applied,
    pub entry: LogEntry,
    pub content_hash: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayResponse {
    pub entries: usize,
    pub content_hash: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecolorRequest {
    pub type_name: String,
    pub color: Color,
    #[serde(default)]
    pub cascade: bool,
}

/// A document written in one format: file extension to content.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportResponse {
    pub format: SourceFormat,
    pub files: BTreeMap<String, String>,
    pub report: Report,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidateResponse {
    pub valid: bool,
    pub issues: Vec<Issue>,
}

/// Resolves a selection string: an element id or `token:N`.
pub fn resolve_select(doc: &Document, select: &str) -> Option<AnchorRef> {
    match select.strip_prefix("token:") {
        Some(n) => n.parse().ok().map(AnchorRef::Token).filter(|a| doc.resolves(a)),
        None => doc.anchor_for(select),
    }
}
