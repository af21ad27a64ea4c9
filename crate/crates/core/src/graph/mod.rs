//! The unified annotation graph.
//!
//! A [`Document`] holds the source text, its tokens, text-bound mentions and
//! relations. Relation endpoints are [`AnchorRef`]s, so a relation may point
//! at a token, a mention or another relation. The relation-reference graph is
//! kept acyclic by every operation that can add edges to it.

mod filter;
mod ops;
mod taxonomy;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use filter::{apply_filter, FilterOutcome, VisibilityFilter};
pub(crate) use ops::check_shape;
pub use taxonomy::{recolor_type, Color, Taxonomy, TypeEntry, DEFAULT_COLOR, PALETTE};
pub use validate::{Issue, Severity};

/// Half-open character range `[start, end)` into [`Document::text`].
///
/// Offsets count Unicode scalar values, not bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layer {
    Semantic,
    Syntactic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceFormat {
    Brat,
    Conllx,
    Bioc,
}

impl fmt::Display for SourceFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SourceFormat::Brat => "brat",
            SourceFormat::Conllx => "conllx",
            SourceFormat::Bioc => "bioc",
        })
    }
}

impl std::str::FromStr for SourceFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "brat" | "ann" | "standoff" => Ok(SourceFormat::Brat),
            "conllx" | "conll" | "conll-x" => Ok(SourceFormat::Conllx),
            "bioc" | "xml" => Ok(SourceFormat::Bioc),
            other => Err(format!("unknown format `{other}` (expected brat, conllx or bioc)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Directionality {
    #[default]
    Directed,
    Undirected,
    Bidirectional,
}

/// The CoNLL-X columns that have no place in the graph but must survive a
/// round trip. Values are stored verbatim, `_` included.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConllColumns {
    pub lemma: String,
    pub cpostag: String,
    pub feats: String,
    pub phead: String,
    pub pdeprel: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub index: usize,
    pub span: Span,
    pub surface: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub columns: Option<ConllColumns>,
}

/// A decoration attached to a mention or relation (BRAT `A` lines, extra
/// BioC infons). Rendered as a label suffix, never as a node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub id: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
}

fn decorate(label: &str, attributes: &[Attribute]) -> String {
    if attributes.is_empty() {
        return label.to_string();
    }
    let parts: Vec<String> = attributes
        .iter()
        .map(|a| match &a.value {
            Some(v) => format!("{}={}", a.name, v),
            None => a.name.clone(),
        })
        .collect();
    format!("{} [{}]", label, parts.join(", "))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub id: String,
    pub label: String,
    #[serde(rename = "type", default, skip_serializing_if = "Option::is_none")]
    pub type_name: Option<String>,
    /// Sorted, non-overlapping; more than one entry means a discontinuous span.
    pub anchors: Vec<Span>,
    pub layer: Layer,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attributes: Vec<Attribute>,
}

impl Mention {
    pub fn new(id: impl Into<String>, label: impl Into<String>, anchors: Vec<Span>) -> Self {
        let label = label.into();
        Mention {
            id: id.into(),
            type_name: Some(label.clone()),
            label,
            anchors,
            layer: Layer::Semantic,
            attributes: Vec::new(),
        }
    }

    pub fn display_label(&self) -> String {
        decorate(&self.label, &self.attributes)
    }

    /// Extent from the first anchor start to the last anchor end.
    pub fn extent(&self) -> Option<Span> {
        Some(Span::new(self.anchors.first()?.start, self.anchors.last()?.end))
    }
}

/// Endpoint of a relation: exactly one of a token, a mention or a relation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnchorRef {
    Token(usize),
    Mention(String),
    Relation(String),
}

impl AnchorRef {
    pub fn relation_id(&self) -> Option<&str> {
        match self {
            AnchorRef::Relation(id) => Some(id),
            _ => None,
        }
    }

    /// The element id used in visibility sets and delete cascades. Tokens
    /// have none.
    pub fn element_id(&self) -> Option<&str> {
        match self {
            AnchorRef::Token(_) => None,
            AnchorRef::Mention(id) | AnchorRef::Relation(id) => Some(id),
        }
    }
}

impl fmt::Display for AnchorRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnchorRef::Token(i) => write!(f, "token:{i}"),
            AnchorRef::Mention(id) | AnchorRef::Relation(id) => f.write_str(id),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Argument {
    pub role: String,
    pub target: AnchorRef,
}

impl Argument {
    pub fn new(role: impl Into<String>, target: AnchorRef) -> Self {
        Argument { role: role.into(), target }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub id: String,
    /// `None` for a trigger-free relation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trigger: Option<AnchorRef>,
    pub arguments: Vec<Argument>,
    #[serde(default)]
    pub directionality: Directionality,
    pub label: String,
    #[serde(rename = "type", default, skip_serializing_if = "Option::is_none")]
    pub type_name: Option<String>,
    pub layer: Layer,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attributes: Vec<Attribute>,
}

impl Relation {
    pub fn new(
        id: impl Into<String>,
        label: impl Into<String>,
        trigger: Option<AnchorRef>,
        arguments: Vec<Argument>,
    ) -> Self {
        let label = label.into();
        Relation {
            id: id.into(),
            trigger,
            arguments,
            directionality: Directionality::Directed,
            type_name: Some(label.clone()),
            label,
            layer: Layer::Semantic,
            attributes: Vec::new(),
        }
    }

    pub fn display_label(&self) -> String {
        decorate(&self.label, &self.attributes)
    }

    /// Trigger first, then arguments in stored order.
    pub fn endpoints(&self) -> impl Iterator<Item = &AnchorRef> {
        self.trigger.iter().chain(self.arguments.iter().map(|a| &a.target))
    }

    /// Ids of the relations this relation points at.
    pub fn referenced_relations(&self) -> impl Iterator<Item = &str> {
        self.endpoints().filter_map(AnchorRef::relation_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    Sentence,
    Passage,
}

/// A sentence (CoNLL-X) or passage (BioC) boundary inside the merged text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub span: Span,
    /// Offset the segment had in its source file, when that differs from its
    /// position in the merged text.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_offset: Option<usize>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub infons: BTreeMap<String, String>,
}

/// Verbatim metadata record (BRAT `N` and `#` lines, BioC collection fields).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaRecord {
    pub id: String,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub tokens: Vec<Token>,
    pub mentions: BTreeMap<String, Mention>,
    pub relations: BTreeMap<String, Relation>,
    pub source_format: SourceFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taxonomy_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub segments: Vec<Segment>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub metadata: Vec<MetaRecord>,
}

/// Errors raised by graph operations.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("{owner} references unknown element {target}")]
    DanglingReference { owner: String, target: String },
    #[error("relation {0} would become its own (transitive) argument")]
    CycleDetected(String),
    #[error("duplicate element id {0}")]
    DuplicateId(String),
    #[error("unknown element id {0}")]
    UnknownId(String),
    #[error("unknown taxonomy type {0}")]
    UnknownType(String),
    #[error("relation {id} is malformed: {reason}")]
    InvalidRelation { id: String, reason: String },
    #[error("mention {id} has an invalid anchor: {reason}")]
    InvalidAnchor { id: String, reason: String },
}

impl GraphError {
    pub fn code(&self) -> &'static str {
        match self {
            GraphError::DanglingReference { .. } => "DANGLING_REFERENCE",
            GraphError::CycleDetected(_) => "CYCLE_DETECTED",
            GraphError::DuplicateId(_) => "DUPLICATE_ID",
            GraphError::UnknownId(_) => "UNKNOWN_ID",
            GraphError::UnknownType(_) => "UNKNOWN_TYPE",
            GraphError::InvalidRelation { .. } => "INVALID_RELATION",
            GraphError::InvalidAnchor { .. } => "INVALID_ANCHOR",
        }
    }
}

/// Maps character offsets to byte offsets for one text.
pub struct CharIndex {
    bytes: Vec<usize>,
}

impl CharIndex {
    pub fn new(text: &str) -> Self {
        let mut bytes: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
        bytes.push(text.len());
        CharIndex { bytes }
    }

    pub fn char_len(&self) -> usize {
        self.bytes.len() - 1
    }

    pub fn slice<'t>(&self, text: &'t str, span: Span) -> Option<&'t str> {
        if span.start > span.end || span.end > self.char_len() {
            return None;
        }
        Some(&text[self.bytes[span.start]..self.bytes[span.end]])
    }
}

/// The annotation content of a document, without provenance (id, source
/// format, metadata, segment boundaries and CoNLL-only columns). Two
/// documents are structurally equal when their contents are equal.
#[derive(Debug, PartialEq, Eq)]
pub struct Content<'a> {
    pub text: &'a str,
    pub tokens: Vec<(usize, Span, &'a str)>,
    pub mentions: &'a BTreeMap<String, Mention>,
    pub relations: &'a BTreeMap<String, Relation>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>, source_format: SourceFormat) -> Self {
        Document {
            id: id.into(),
            text: text.into(),
            tokens: Vec::new(),
            mentions: BTreeMap::new(),
            relations: BTreeMap::new(),
            source_format,
            taxonomy_ref: None,
            segments: Vec::new(),
            metadata: Vec::new(),
        }
    }

    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }

    pub fn char_index(&self) -> CharIndex {
        CharIndex::new(&self.text)
    }

    /// Text covered by `span`, or `None` when out of bounds.
    pub fn slice(&self, span: Span) -> Option<&str> {
        self.char_index().slice(&self.text, span)
    }

    /// Surface text of a mention; discontinuous pieces are joined by a space.
    pub fn mention_surface(&self, mention: &Mention) -> String {
        let index = self.char_index();
        mention.anchors.iter().filter_map(|s| index.slice(&self.text, *s)).collect::<Vec<_>>().join(" ")
    }

    pub fn contains_id(&self, id: &str) -> bool {
        self.mentions.contains_key(id) || self.relations.contains_key(id)
    }

    pub fn resolves(&self, anchor: &AnchorRef) -> bool {
        match anchor {
            AnchorRef::Token(i) => *i < self.tokens.len(),
            AnchorRef::Mention(id) => self.mentions.contains_key(id),
            AnchorRef::Relation(id) => self.relations.contains_key(id),
        }
    }

    /// Builds the anchor for an element id (`token:N` selects a token).
    pub fn anchor_for(&self, id: &str) -> Option<AnchorRef> {
        if let Some(rest) = id.strip_prefix("token:") {
            let index: usize = rest.parse().ok()?;
            return (index < self.tokens.len()).then_some(AnchorRef::Token(index));
        }
        if self.mentions.contains_key(id) {
            Some(AnchorRef::Mention(id.to_string()))
        } else if self.relations.contains_key(id) {
            Some(AnchorRef::Relation(id.to_string()))
        } else {
            None
        }
    }

    /// Display text for any endpoint.
    pub fn describe(&self, anchor: &AnchorRef) -> String {
        match anchor {
            AnchorRef::Token(i) => self.tokens.get(*i).map(|t| t.surface.clone()).unwrap_or_default(),
            AnchorRef::Mention(id) => self.mentions.get(id).map(|m| m.display_label()).unwrap_or_default(),
            AnchorRef::Relation(id) => self.relations.get(id).map(|r| r.display_label()).unwrap_or_default(),
        }
    }

    /// Relations no other relation points at, in id order.
    pub fn root_relations(&self) -> Vec<&Relation> {
        let referenced: BTreeSet<&str> = self.relations.values().flat_map(|r| r.referenced_relations()).collect();
        self.relations.values().filter(|r| !referenced.contains(r.id.as_str())).collect()
    }

    pub fn content(&self) -> Content<'_> {
        Content {
            text: &self.text,
            tokens: self.tokens.iter().map(|t| (t.index, t.span, t.surface.as_str())).collect(),
            mentions: &self.mentions,
            relations: &self.relations,
        }
    }

    pub fn structurally_equal(&self, other: &Document) -> bool {
        self.content() == other.content()
    }

    /// Canonical JSON encoding; maps are ordered so equal documents encode
    /// to equal bytes.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("document serialization is infallible")
    }

    /// SHA-256 of the canonical JSON without the document id and taxonomy
    /// reference, hex encoded. The same content under another name hashes
    /// the same.
    pub fn content_hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("document serialization is infallible");
        if let Some(m) = v.as_object_mut() {
            m.remove("id");
            m.remove("taxonomy_ref");
        }
        hex::encode(Sha256::digest(v.to_string().as_bytes()))
    }

    /// Token index containing the character offset, if any.
    pub fn token_at(&self, offset: usize) -> Option<usize> {
        let i = self.tokens.partition_point(|t| t.span.end <= offset);
        (i < self.tokens.len() && self.tokens[i].span.start <= offset).then_some(i)
    }

    /// Builds whitespace-delimited tokens for the current text.
    pub fn tokenize_whitespace(&mut self) {
        self.tokens = whitespace_tokens(&self.text);
    }
}

pub(crate) fn whitespace_tokens(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut start: Option<(usize, usize)> = None;
    let mut chars = 0usize;
    for (byte, ch) in text.char_indices() {
        if ch.is_whitespace() {
            if let Some((cs, bs)) = start.take() {
                tokens.push(Token {
                    index: tokens.len(),
                    span: Span::new(cs, chars),
                    surface: text[bs..byte].to_string(),
                    columns: None,
                });
            }
        } else if start.is_none() {
            start = Some((chars, byte));
        }
        chars += 1;
    }
    if let Some((cs, bs)) = start {
        tokens.push(Token {
            index: tokens.len(),
            span: Span::new(cs, chars),
            surface: text[bs..].to_string(),
            columns: None,
        });
    }
    tokens
}
