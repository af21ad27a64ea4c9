//! Readers and writers for BRAT standoff, CoNLL-X, BioC XML and taxonomy
//! files.
//!
//! Parsers fail on content that violates the grammar and record anything
//! skippable in a [`Report`], so no input fragment disappears silently.

pub mod bioc;
pub mod brat;
pub mod conllx;
pub mod files;
pub mod taxonomy;

use serde::{Deserialize, Serialize};

use crate::graph::{Document, GraphError, SourceFormat, Span};

pub use bioc::{parse_bioc, serialize_bioc};
pub use brat::{parse_brat, serialize_brat};
pub use conllx::{parse_conllx, serialize_conllx};
pub use taxonomy::{parse_taxonomy, serialize_taxonomy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementKind {
    Mention,
    Relation,
    Attribute,
    Metadata,
    Line,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Note {
    /// Line number, XML node or element id the note refers to.
    pub locator: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<ElementKind>,
}

/// Warnings and dropped fragments from a parse or a serialization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub source_format: SourceFormat,
    pub warnings: Vec<Note>,
    pub dropped: Vec<Note>,
}

impl Report {
    pub fn new(source_format: SourceFormat) -> Self {
        Report { source_format, warnings: Vec::new(), dropped: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.warnings.is_empty() && self.dropped.is_empty()
    }

    pub fn warn(&mut self, locator: impl Into<String>, message: impl Into<String>) {
        self.warnings.push(Note { locator: locator.into(), message: message.into(), kind: None });
    }

    pub fn drop(&mut self, locator: impl Into<String>, message: impl Into<String>, kind: ElementKind) {
        self.dropped.push(Note { locator: locator.into(), message: message.into(), kind: Some(kind) });
    }

    /// Number of dropped entries of one kind.
    pub fn dropped_count(&self, kind: ElementKind) -> usize {
        self.dropped.iter().filter(|n| n.kind == Some(kind)).count()
    }

    pub fn lines(&self) -> Vec<String> {
        let w = self.warnings.iter().map(|n| format!("warning: {}: {}", n.locator, n.message));
        let d = self.dropped.iter().map(|n| format!("dropped: {}: {}", n.locator, n.message));
        w.chain(d).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormatError {
    #[error("{locator}: malformed record: {reason}")]
    MalformedLine { locator: String, reason: String },
    #[error("{locator}: span {span} out of bounds for text of length {len}")]
    OffsetOutOfBounds { locator: String, span: Span, len: usize },
    #[error("{locator}: annotated text {expected:?} does not match document text {found:?}")]
    TextMismatch { locator: String, expected: String, found: String },
    #[error("{locator}: {owner} references unknown id {target}")]
    DanglingReference { locator: String, owner: String, target: String },
    #[error("{locator}: duplicate id {id}")]
    DuplicateId { locator: String, id: String },
    #[error("{locator}: relation {id} is part of a reference cycle")]
    CycleDetected { locator: String, id: String },
    #[error("line {line}: expected 10 tab-separated columns, found {found}")]
    ColumnCountMismatch { line: usize, found: usize },
    #[error("line {line}: HEAD {value:?} is not a number")]
    NonNumericHead { line: usize, value: String },
    #[error("line {line}: HEAD {head} outside sentence of {len} tokens")]
    HeadOutOfRange { line: usize, head: usize, len: usize },
    #[error("malformed XML: {0}")]
    XmlMalformed(String),
    #[error("relation {relation}: node refid {refid} names no annotation or relation")]
    UnknownRefId { relation: String, refid: String },
    #[error("line {line}: duplicate type name {name}")]
    DuplicateTypeName { line: usize, name: String },
    #[error("line {line}: {reason}")]
    IndentationError { line: usize, reason: String },
    #[error("cannot express document in {format}: {reason}")]
    NotRepresentable { format: SourceFormat, reason: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl FormatError {
    pub fn code(&self) -> &'static str {
        match self {
            FormatError::MalformedLine { .. } => "MALFORMED_LINE",
            FormatError::OffsetOutOfBounds { .. } => "OFFSET_OUT_OF_BOUNDS",
            FormatError::TextMismatch { .. } => "TEXT_MISMATCH",
            FormatError::DanglingReference { .. } => "DANGLING_REFERENCE",
            FormatError::DuplicateId { .. } => "DUPLICATE_ID",
            FormatError::CycleDetected { .. } => "CYCLE_DETECTED",
            FormatError::ColumnCountMismatch { .. } => "COLUMN_COUNT_MISMATCH",
            FormatError::NonNumericHead { .. } => "NON_NUMERIC_HEAD",
            FormatError::HeadOutOfRange { .. } => "HEAD_OUT_OF_RANGE",
            FormatError::XmlMalformed(_) => "XML_MALFORMED",
            FormatError::UnknownRefId { .. } => "UNKNOWN_REF_ID",
            FormatError::DuplicateTypeName { .. } => "DUPLICATE_TYPE_NAME",
            FormatError::IndentationError { .. } => "INDENTATION_ERROR",
            FormatError::NotRepresentable { .. } => "NOT_REPRESENTABLE",
            FormatError::Graph(g) => g.code(),
        }
    }
}

/// Output of [`serialize`]: BRAT produces a text/annotation pair, the other
/// formats a single string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Serialized {
    Brat { txt: String, ann: String },
    Single(String),
}

pub fn serialize(doc: &Document, format: SourceFormat) -> Result<(Serialized, Report), FormatError> {
    match format {
        SourceFormat::Brat => {
            let (txt, ann, report) = serialize_brat(doc);
            Ok((Serialized::Brat { txt, ann }, report))
        }
        SourceFormat::Conllx => serialize_conllx(doc).map(|(s, r)| (Serialized::Single(s), r)),
        SourceFormat::Bioc => {
            let (s, r) = serialize_bioc(std::slice::from_ref(doc));
            Ok((Serialized::Single(s), r))
        }
    }
}

/// Sort key that orders `T2` before `T10`.
pub(crate) fn natural_key(id: &str) -> (String, u64, String) {
    let prefix: String = id.chars().take_while(|c| !c.is_ascii_digit()).collect();
    let rest = &id[prefix.len()..];
    let digits: String = rest.chars().take_while(|c| c.is_ascii_digit()).collect();
    let n = digits.parse().unwrap_or(u64::MAX);
    (prefix, n, rest[digits.len()..].to_string())
}
