//! Row-based arc-diagram geometry.
//!
//! Tokens are packed into rows of fixed width. Mention labels sit in tiers
//! next to the text (semantic above, syntactic below) and relations are
//! drawn as arcs whose horizontal runs occupy numbered slots beyond the
//! label tiers. All y coordinates are row-local: `0` is the top edge of the
//! token boxes, negative values lie above the text. A renderer stacks rows
//! using each row's `height_above`/`height_below`, which keeps every row's
//! geometry independent of the window it was computed in.

mod crossings;
mod slots;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::graph::{apply_filter, AnchorRef, Directionality, Document, Layer, Relation, Taxonomy, VisibilityFilter};

pub use crossings::{count_crossings, count_segment_crossings, interleaved_pair_crosses, CrossingSegment};
pub use slots::{assign_slots, refine_slots, Run, RunEnd, SlotItem};

/// Monotone text width function.
pub trait FontMetrics: Send + Sync + fmt::Debug {
    fn width(&self, text: &str, font_size: f64) -> f64;
}

/// Every character advances by `advance` em.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monospace {
    pub advance: f64,
}

impl FontMetrics for Monospace {
    fn width(&self, text: &str, font_size: f64) -> f64 {
        text.chars().count() as f64 * self.advance * font_size
    }
}

/// A user drag: the token starts row `row` at offset `x`. Later tokens
/// reflow from there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RowOverride {
    pub row: usize,
    pub x: f64,
}

#[derive(Debug, Clone)]
pub struct ViewConfig {
    pub row_width: f64,
    pub token_gap: f64,
    pub metrics: Arc<dyn FontMetrics>,
    pub font_size: f64,
    pub label_font_size: f64,
    pub token_height: f64,
    pub label_height: f64,
    pub label_padding: f64,
    pub slot_height: f64,
    /// Vertical space between stacked rows.
    pub row_gap: f64,
    pub row_overrides: BTreeMap<usize, RowOverride>,
    pub filter: VisibilityFilter,
}

impl Default for ViewConfig {
    fn default() -> Self {
        ViewConfig {
            row_width: 800.0,
            token_gap: 8.0,
            metrics: Arc::new(Monospace { advance: 0.6 }),
            font_size: 14.0,
            label_font_size: 10.0,
            token_height: 20.0,
            label_height: 14.0,
            label_padding: 3.0,
            slot_height: 16.0,
            row_gap: 12.0,
            row_overrides: BTreeMap::new(),
            filter: VisibilityFilter::default(),
        }
    }
}

impl ViewConfig {
    pub fn with_width(row_width: f64) -> Self {
        ViewConfig { row_width, ..Default::default() }
    }

    pub fn text_width(&self, text: &str) -> f64 {
        self.metrics.width(text, self.font_size)
    }

    pub fn label_width(&self, label: &str) -> f64 {
        self.metrics.width(label, self.label_font_size) + 2.0 * self.label_padding
    }

    fn box_height(&self) -> f64 {
        self.label_height - 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LayoutError {
    #[error("token {index} ({surface:?}) is wider than the row")]
    TokenTooWide { index: usize, surface: String },
    #[error("rows {start}..{end} outside the document's {rows} rows")]
    RangeOutOfBounds { start: usize, end: usize, rows: usize },
    #[error("invalid row range {0:?}")]
    BadRange(String),
}

impl LayoutError {
    pub fn code(&self) -> &'static str {
        match self {
            LayoutError::TokenTooWide { .. } => "TOKEN_TOO_WIDE",
            LayoutError::RangeOutOfBounds { .. } => "RANGE_OUT_OF_BOUNDS",
            LayoutError::BadRange(_) => "BAD_RANGE",
        }
    }
}

/// Inclusive row window; `end == None` means through the last row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowRange {
    pub start: usize,
    pub end: Option<usize>,
}

impl RowRange {
    pub const ALL: RowRange = RowRange { start: 0, end: None };

    pub fn new(start: usize, end: usize) -> Self {
        RowRange { start, end: Some(end) }
    }
}

impl FromStr for RowRange {
    type Err = LayoutError;

    /// `a..b` (inclusive) or `a..last`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || LayoutError::BadRange(s.to_string());
        let (a, b) = s.split_once("..").ok_or_else(bad)?;
        let start = a.trim().parse().map_err(|_| bad())?;
        let end = match b.trim() {
            "last" | "" => None,
            b => Some(b.parse().map_err(|_| bad())?),
        };
        if end.is_some_and(|e| e < start) {
            return Err(bad());
        }
        Ok(RowRange { start, end })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Above,
    Below,
}

impl Side {
    fn of(layer: Layer) -> Side {
        match layer {
            Layer::Semantic => Side::Above,
            Layer::Syntactic => Side::Below,
        }
    }
}

/// Token position from [`assign_rows`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub row: usize,
    pub x: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenBox {
    pub index: usize,
    pub x: f64,
    pub width: f64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub index: usize,
    /// Distance from the row's top edge to the top of its token boxes.
    pub y_baseline: f64,
    pub height_above: f64,
    pub height_below: f64,
    pub tokens: Vec<TokenBox>,
}

impl Row {
    pub fn height(&self) -> f64 {
        self.height_above + self.height_below
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelBox {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl LabelBox {
    fn centered(cx: f64, cy: f64, width: f64, height: f64) -> Self {
        LabelBox { x: cx - width / 2.0, y: cy - height / 2.0, width, height }
    }

    pub fn right(&self) -> f64 {
        self.x + self.width
    }

    pub fn center_x(&self) -> f64 {
        self.x + self.width / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MentionLabel {
    pub id: String,
    pub row: usize,
    pub side: Side,
    pub tier: u32,
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub type_name: Option<String>,
    /// Horizontal extent of the covered text on this row.
    pub underline: (f64, f64),
    #[serde(rename = "box")]
    pub label_box: LabelBox,
}

/// Vertical line from an arc's run to one of its endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Drop {
    pub x: f64,
    pub y_end: f64,
    pub target: String,
    /// Slot the drop ends on: 0 for text, the referenced arc's slot for a
    /// relation endpoint.
    pub floor: u32,
    pub arrow: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcSegment {
    pub row: usize,
    pub left: f64,
    pub right: f64,
    pub slot: u32,
    /// Row-local y of the horizontal run.
    pub y: f64,
    pub drops: Vec<Drop>,
    /// The arc continues on the previous / next row.
    pub continues_left: bool,
    pub continues_right: bool,
}

impl ArcSegment {
    fn floor_at(&self, x: f64) -> Option<u32> {
        self.drops.iter().filter(|d| d.x == x).map(|d| d.floor).min()
    }

    pub fn crossing_view(&self) -> CrossingSegment {
        CrossingSegment {
            left: self.left,
            right: self.right,
            slot: self.slot,
            left_floor: if self.continues_left { None } else { self.floor_at(self.left) },
            right_floor: if self.continues_right { None } else { self.floor_at(self.right) },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcPath {
    pub relation_id: String,
    pub side: Side,
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub type_name: Option<String>,
    pub label_row: usize,
    /// Present when the label row lies inside the computed window.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label_box: Option<LabelBox>,
    pub segments: Vec<ArcSegment>,
}

impl ArcPath {
    pub fn slot_on(&self, row: usize) -> Option<u32> {
        self.segments.iter().find(|s| s.row == row).map(|s| s.slot)
    }
}

/// Where arcs attach to another arc: the outer edge of its label box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Handle {
    pub relation_id: String,
    pub row: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutGeometry {
    pub row_width: f64,
    pub total_rows: usize,
    pub rows: Vec<Row>,
    pub mentions: Vec<MentionLabel>,
    pub arcs: Vec<ArcPath>,
    pub handles: Vec<Handle>,
    pub warnings: Vec<String>,
    /// Number of relations whose arc geometry was built for this window.
    #[serde(default)]
    pub relations_visited: usize,
}

/// Everything the geometry holds for one row, for comparing windows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowView<'a> {
    pub row: &'a Row,
    pub mentions: Vec<&'a MentionLabel>,
    pub segments: Vec<(&'a str, &'a ArcSegment)>,
    pub labels: Vec<(&'a str, LabelBox)>,
    pub handles: Vec<&'a Handle>,
}

impl LayoutGeometry {
    pub fn arc(&self, relation_id: &str) -> Option<&ArcPath> {
        self.arcs.iter().find(|a| a.relation_id == relation_id)
    }

    pub fn row_view(&self, index: usize) -> Option<RowView<'_>> {
        let row = self.rows.iter().find(|r| r.index == index)?;
        Some(RowView {
            row,
            mentions: self.mentions.iter().filter(|m| m.row == index).collect(),
            segments: self
                .arcs
                .iter()
                .flat_map(|a| a.segments.iter().filter(|s| s.row == index).map(move |s| (a.relation_id.as_str(), s)))
                .collect(),
            labels: self
                .arcs
                .iter()
                .filter(|a| a.label_row == index)
                .filter_map(|a| a.label_box.map(|b| (a.relation_id.as_str(), b)))
                .collect(),
            handles: self.handles.iter().filter(|h| h.row == index).collect(),
        })
    }

    /// Sum of row heights and gaps.
    pub fn height(&self, row_gap: f64) -> f64 {
        let rows: f64 = self.rows.iter().map(Row::height).sum();
        rows + row_gap * self.rows.len().saturating_sub(1) as f64
    }
}

pub(crate) fn natural_cmp(a: &str, b: &str) -> Ordering {
    crate::format::natural_key(a).cmp(&crate::format::natural_key(b))
}

/// Greedy left-to-right packing; overrides move a token to a later row or
/// further right and the following tokens continue from there. Overrides
/// never move a token backwards, so token boxes stay disjoint.
pub fn assign_rows(doc: &Document, cfg: &ViewConfig) -> Result<Vec<Placement>, LayoutError> {
    let mut out = Vec::with_capacity(doc.tokens.len());
    let mut row = 0usize;
    let mut cursor = 0.0f64;
    let mut first_in_row = true;
    for tok in &doc.tokens {
        let width = cfg.text_width(&tok.surface);
        if width > cfg.row_width {
            return Err(LayoutError::TokenTooWide { index: tok.index, surface: tok.surface.clone() });
        }
        let mut x = if first_in_row { 0.0 } else { cursor + cfg.token_gap };
        if let Some(o) = cfg.row_overrides.get(&tok.index) {
            let requested = o.x.clamp(0.0, cfg.row_width - width);
            if o.row > row {
                row = o.row;
                x = requested;
            } else {
                x = x.max(requested);
            }
        }
        if x + width > cfg.row_width {
            row += 1;
            x = 0.0;
        }
        out.push(Placement { row, x, width });
        cursor = x + width;
        first_in_row = false;
    }
    Ok(out)
}

#[derive(Debug, Clone)]
struct MentionPlan {
    row: usize,
    side: Side,
    x1: f64,
    x2: f64,
    label: String,
    width: f64,
}

#[derive(Debug, Clone)]
struct Endpoint {
    anchor: AnchorRef,
    row: usize,
    x: f64,
    arrow: bool,
}

#[derive(Debug, Clone)]
struct ArcPlan {
    side: Side,
    endpoints: Vec<Endpoint>,
    first_row: usize,
    last_row: usize,
    label_row: usize,
    label_x: f64,
    label: String,
    label_width: f64,
    depth: usize,
    refs: Vec<String>,
}

/// The cheap whole-document pass: token rows, label positions and the row
/// span of every visible relation.
pub struct LayoutPlan<'a> {
    doc: &'a Document,
    cfg: &'a ViewConfig,
    placements: Vec<Placement>,
    total_rows: usize,
    mentions: BTreeMap<String, MentionPlan>,
    arcs: BTreeMap<String, ArcPlan>,
    arcs_by_row: Vec<Vec<String>>,
    mentions_by_row: Vec<Vec<String>>,
    warnings: Vec<String>,
}

/// Lays out all rows.
pub fn layout(doc: &Document, taxonomy: Option<&Taxonomy>, cfg: &ViewConfig) -> Result<LayoutGeometry, LayoutError> {
    LayoutPlan::new(doc, taxonomy, cfg)?.window(RowRange::ALL)
}

/// Lays out the rows in `range`. Arc geometry is built only for relations
/// whose row span intersects the window.
pub fn layout_window(
    doc: &Document,
    taxonomy: Option<&Taxonomy>,
    cfg: &ViewConfig,
    range: RowRange,
) -> Result<LayoutGeometry, LayoutError> {
    LayoutPlan::new(doc, taxonomy, cfg)?.window(range)
}

impl<'a> LayoutPlan<'a> {
    pub fn new(doc: &'a Document, taxonomy: Option<&Taxonomy>, cfg: &'a ViewConfig) -> Result<Self, LayoutError> {
        let placements = assign_rows(doc, cfg)?;
        let total_rows = placements.last().map_or(0, |p| p.row + 1);
        let outcome = apply_filter(doc, &cfg.filter, taxonomy);
        let mut plan = LayoutPlan {
            doc,
            cfg,
            placements,
            total_rows,
            mentions: BTreeMap::new(),
            arcs: BTreeMap::new(),
            arcs_by_row: vec![Vec::new(); total_rows],
            mentions_by_row: vec![Vec::new(); total_rows],
            warnings: outcome.warnings,
        };
        if total_rows == 0 {
            return Ok(plan);
        }
        for m in doc.mentions.values().filter(|m| outcome.visible.contains(&m.id)) {
            let Some(extent) = m.extent() else { continue };
            let Some(first) = plan.token_from(extent.start) else { continue };
            let row = plan.placements[first].row;
            let x1 = plan.char_x(first, extent.start);
            let mut x2 = x1;
            for t in first..doc.tokens.len() {
                let tok = &doc.tokens[t];
                if tok.span.start >= extent.end || plan.placements[t].row != row {
                    break;
                }
                x2 = plan.char_x(t, extent.end.min(tok.span.end));
            }
            let label = m.display_label();
            let width = cfg.label_width(&label).max(x2 - x1);
            plan.mentions_by_row[row].push(m.id.clone());
            plan.mentions.insert(m.id.clone(), MentionPlan { row, side: Side::of(m.layer), x1, x2, label, width });
        }
        let visible: Vec<&Relation> = doc.relations.values().filter(|r| outcome.visible.contains(&r.id)).collect();
        for rel in &visible {
            plan.plan_arc(&rel.id);
        }
        for (id, arc) in &plan.arcs {
            for r in arc.first_row..=arc.last_row {
                plan.arcs_by_row[r].push(id.clone());
            }
        }
        Ok(plan)
    }

    pub fn total_rows(&self) -> usize {
        self.total_rows
    }

    pub fn placements(&self) -> &[Placement] {
        &self.placements
    }

    /// Ids of relations whose row span intersects the rows.
    pub fn incident_relations(&self, start: usize, end: usize) -> BTreeSet<&str> {
        (start..=end.min(self.total_rows.saturating_sub(1)))
            .flat_map(|r| self.arcs_by_row.get(r).into_iter().flatten())
            .map(String::as_str)
            .collect()
    }

    /// The token containing `offset`, else the next token to its right,
    /// else the last token.
    fn token_from(&self, offset: usize) -> Option<usize> {
        let toks = &self.doc.tokens;
        if toks.is_empty() {
            return None;
        }
        let i = toks.partition_point(|t| t.span.end <= offset);
        Some(i.min(toks.len() - 1))
    }

    fn char_x(&self, token: usize, offset: usize) -> f64 {
        let tok = &self.doc.tokens[token];
        let p = self.placements[token];
        let n = offset.clamp(tok.span.start, tok.span.end) - tok.span.start;
        let prefix: String = tok.surface.chars().take(n).collect();
        p.x + self.cfg.text_width(&prefix)
    }

    fn token_center(&self, token: usize) -> (usize, f64) {
        let p = self.placements[token];
        (p.row, p.x + p.width / 2.0)
    }

    fn plan_arc(&mut self, id: &str) -> Option<(usize, f64, usize)> {
        if let Some(a) = self.arcs.get(id) {
            return Some((a.label_row, a.label_x, a.depth));
        }
        let rel = self.doc.relations.get(id)?;
        let mut endpoints = Vec::new();
        let mut depth = 0;
        let mut refs = Vec::new();
        let args_from = match (&rel.trigger, rel.directionality) {
            (None, Directionality::Directed) => 1,
            _ => 0,
        };
        let anchors: Vec<(&AnchorRef, bool)> = rel
            .trigger
            .iter()
            .map(|t| (t, false))
            .chain(
                rel.arguments
                    .iter()
                    .enumerate()
                    .map(|(i, a)| (&a.target, rel.directionality == Directionality::Directed && i >= args_from)),
            )
            .collect();
        for (anchor, arrow) in anchors {
            let (row, x) = match anchor {
                AnchorRef::Token(i) if *i < self.placements.len() => self.token_center(*i),
                AnchorRef::Mention(m) => {
                    let mp = self.mentions.get(m)?;
                    (mp.row, (mp.x1 + mp.x2) / 2.0)
                }
                AnchorRef::Relation(r) => {
                    let (row, x, d) = self.plan_arc(r)?;
                    depth = depth.max(d + 1);
                    refs.push(r.clone());
                    (row, x)
                }
                AnchorRef::Token(_) => return None,
            };
            endpoints.push(Endpoint { anchor: anchor.clone(), row, x, arrow });
        }
        if rel.directionality == Directionality::Bidirectional {
            let key = |e: &Endpoint| (e.row, e.x);
            let lo = (0..endpoints.len()).min_by(|&a, &b| key(&endpoints[a]).partial_cmp(&key(&endpoints[b])).unwrap());
            let hi = (0..endpoints.len()).max_by(|&a, &b| key(&endpoints[a]).partial_cmp(&key(&endpoints[b])).unwrap());
            for i in lo.into_iter().chain(hi) {
                endpoints[i].arrow = true;
            }
        }
        let first_row = endpoints.iter().map(|e| e.row).min()?;
        let last_row = endpoints.iter().map(|e| e.row).max()?;
        let (label_row, label_x) = if rel.trigger.is_some() {
            (endpoints[0].row, endpoints[0].x)
        } else {
            let on_first = endpoints.iter().filter(|e| e.row == first_row);
            let left = on_first.clone().map(|e| e.x).fold(f64::INFINITY, f64::min);
            let right = if last_row > first_row {
                self.cfg.row_width
            } else {
                on_first.map(|e| e.x).fold(f64::NEG_INFINITY, f64::max)
            };
            (first_row, (left + right) / 2.0)
        };
        let label = rel.display_label();
        let label_width = self.cfg.label_width(&label);
        self.arcs.insert(
            id.to_string(),
            ArcPlan {
                side: Side::of(rel.layer),
                endpoints,
                first_row,
                last_row,
                label_row,
                label_x,
                label,
                label_width,
                depth,
                refs,
            },
        );
        Some((label_row, label_x, depth))
    }

    /// Builds geometry for the rows in `range`.
    pub fn window(&self, range: RowRange) -> Result<LayoutGeometry, LayoutError> {
        let start = range.start;
        let end = range.end.unwrap_or(self.total_rows.saturating_sub(1));
        let empty_all = self.total_rows == 0 && start == 0 && range.end.is_none();
        if !empty_all && (start >= self.total_rows || end >= self.total_rows) {
            return Err(LayoutError::RangeOutOfBounds { start, end, rows: self.total_rows });
        }
        let mut geometry = LayoutGeometry {
            row_width: self.cfg.row_width,
            total_rows: self.total_rows,
            rows: Vec::new(),
            mentions: Vec::new(),
            arcs: Vec::new(),
            handles: Vec::new(),
            warnings: self.warnings.clone(),
            relations_visited: 0,
        };
        if empty_all {
            return Ok(geometry);
        }
        let visited = self.incident_relations(start, end);
        geometry.relations_visited = visited.len();
        let mut paths: BTreeMap<&str, ArcPath> = BTreeMap::new();
        for id in &visited {
            let plan = &self.arcs[*id];
            let rel = &self.doc.relations[*id];
            paths.insert(
                id,
                ArcPath {
                    relation_id: id.to_string(),
                    side: plan.side,
                    label: plan.label.clone(),
                    type_name: rel.type_name.clone(),
                    label_row: plan.label_row,
                    label_box: None,
                    segments: Vec::new(),
                },
            );
        }
        let mut first_token = self.placements.partition_point(|p| p.row < start);
        for r in start..=end {
            let row_geo = self.row_geometry(r, first_token);
            first_token += row_geo.row.tokens.len();
            geometry.rows.push(row_geo.row);
            geometry.mentions.extend(row_geo.mentions);
            geometry.handles.extend(row_geo.handles);
            for (id, seg, label_box) in row_geo.segments {
                let path = paths.get_mut(id.as_str()).expect("incident relation");
                path.segments.push(seg);
                if label_box.is_some() {
                    path.label_box = label_box;
                }
            }
        }
        let mut arcs: Vec<ArcPath> = paths.into_values().collect();
        arcs.sort_by(|a, b| natural_cmp(&a.relation_id, &b.relation_id));
        geometry.arcs = arcs;
        geometry.handles.sort_by(|a, b| natural_cmp(&a.relation_id, &b.relation_id).then(a.row.cmp(&b.row)));
        Ok(geometry)
    }

    fn row_geometry(&self, r: usize, first_token: usize) -> RowGeometry {
        let cfg = self.cfg;
        let lh = cfg.label_height;
        let th = cfg.token_height;
        let mut tokens = Vec::new();
        let mut t = first_token;
        while t < self.placements.len() && self.placements[t].row == r {
            let p = self.placements[t];
            tokens.push(TokenBox { index: t, x: p.x, width: p.width, text: self.doc.tokens[t].surface.clone() });
            t += 1;
        }

        // mention label tiers, per side
        let mut tiers: BTreeMap<&str, u32> = BTreeMap::new();
        let mut tier_count = [0u32; 2];
        for (si, side) in [Side::Above, Side::Below].into_iter().enumerate() {
            let mut items: Vec<(&str, f64, f64)> = self.mentions_by_row[r]
                .iter()
                .map(|id| (id.as_str(), &self.mentions[id]))
                .filter(|(_, m)| m.side == side)
                .map(|(id, m)| {
                    let c = (m.x1 + m.x2) / 2.0;
                    (id, c - m.width / 2.0, c + m.width / 2.0)
                })
                .collect();
            items.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| natural_cmp(a.0, b.0)));
            let mut tier_right: Vec<f64> = Vec::new();
            for (id, left, right) in items {
                let k = match tier_right.iter().position(|&end| end < left) {
                    Some(k) => k,
                    None => {
                        tier_right.push(f64::NEG_INFINITY);
                        tier_right.len() - 1
                    }
                };
                tier_right[k] = right;
                tiers.insert(id, k as u32 + 1);
            }
            tier_count[si] = tier_right.len() as u32;
        }
        let [ta, tb] = tier_count.map(f64::from);
        let mention_edge = |side: Side, tier: u32| match side {
            Side::Above => -(f64::from(tier) * lh) + 1.0,
            Side::Below => th + f64::from(tier) * lh - 1.0,
        };
        let mut mentions = Vec::new();
        for id in &self.mentions_by_row[r] {
            let m = &self.mentions[id];
            let tier = tiers[id.as_str()];
            let cy = match m.side {
                Side::Above => -(f64::from(tier) - 0.5) * lh,
                Side::Below => th + (f64::from(tier) - 0.5) * lh,
            };
            let mention = &self.doc.mentions[id];
            mentions.push(MentionLabel {
                id: id.clone(),
                row: r,
                side: m.side,
                tier,
                label: m.label.clone(),
                type_name: mention.type_name.clone(),
                underline: (m.x1, m.x2),
                label_box: LabelBox::centered((m.x1 + m.x2) / 2.0, cy, m.width, cfg.box_height()),
            });
        }
        mentions.sort_by(|a, b| natural_cmp(&a.id, &b.id));

        let run_y = |side: Side, slot: u32| match side {
            Side::Above => -(ta * lh + f64::from(slot) * cfg.slot_height),
            Side::Below => th + tb * lh + f64::from(slot) * cfg.slot_height,
        };

        // segments on this row
        struct Pending<'p> {
            id: &'p str,
            plan: &'p ArcPlan,
            left: f64,
            right: f64,
            occ: (f64, f64),
        }
        let mut pending: Vec<Pending> = Vec::new();
        for id in &self.arcs_by_row[r] {
            let plan = &self.arcs[id];
            let here: Vec<f64> = plan.endpoints.iter().filter(|e| e.row == r).map(|e| e.x).collect();
            let min = here.iter().copied().fold(f64::INFINITY, f64::min);
            let max = here.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let left = if r > plan.first_row { 0.0 } else { min };
            let right = if r < plan.last_row { cfg.row_width } else { max };
            let mut occ = (left, right);
            if plan.label_row == r {
                occ.0 = occ.0.min(plan.label_x - plan.label_width / 2.0);
                occ.1 = occ.1.max(plan.label_x + plan.label_width / 2.0);
            }
            pending.push(Pending { id, plan, left, right, occ });
        }
        let index: BTreeMap<&str, usize> = pending.iter().enumerate().map(|(i, p)| (p.id, i)).collect();
        // effective extents grow with the referenced arcs on the same side
        let mut effective: Vec<Option<(f64, f64)>> = vec![None; pending.len()];
        fn effective_of(
            i: usize,
            pending: &[Pending],
            index: &BTreeMap<&str, usize>,
            row: usize,
            memo: &mut Vec<Option<(f64, f64)>>,
        ) -> (f64, f64) {
            if let Some(e) = memo[i] {
                return e;
            }
            let mut e = pending[i].occ;
            for r in &pending[i].plan.refs {
                if let Some(&j) = index.get(r.as_str()) {
                    if pending[j].plan.side == pending[i].plan.side && pending[j].plan.label_row == row {
                        let (l, rr) = effective_of(j, pending, index, row, memo);
                        e = (e.0.min(l), e.1.max(rr));
                    }
                }
            }
            memo[i] = Some(e);
            e
        }
        for i in 0..pending.len() {
            effective_of(i, &pending, &index, r, &mut effective);
        }
        let mut slot_of: BTreeMap<&str, u32> = BTreeMap::new();
        let mut max_slot = [0u32; 2];
        for (si, side) in [Side::Above, Side::Below].into_iter().enumerate() {
            let members: Vec<usize> = (0..pending.len()).filter(|&i| pending[i].plan.side == side).collect();
            let local: BTreeMap<usize, usize> = members.iter().enumerate().map(|(k, &i)| (i, k)).collect();
            let items: Vec<SlotItem> = members
                .iter()
                .map(|&i| {
                    let p = &pending[i];
                    let (left, right) = effective[i].expect("computed");
                    let refs = p
                        .plan
                        .refs
                        .iter()
                        .filter_map(|r| index.get(r.as_str()))
                        .filter(|j| pending[**j].plan.label_row == r)
                        .filter_map(|j| local.get(j).copied())
                        .collect();
                    SlotItem { left, right, refs, depth: p.plan.depth, key: p.id.to_string() }
                })
                .collect();
            let runs: Vec<Run> = members
                .iter()
                .map(|&i| {
                    let p = &pending[i];
                    let end = |x: f64, open: bool| {
                        if open {
                            return RunEnd::Open;
                        }
                        let mut targets = Vec::new();
                        for e in p.plan.endpoints.iter().filter(|e| e.row == r && e.x == x) {
                            let item = match &e.anchor {
                                AnchorRef::Relation(id) => index.get(id.as_str()).and_then(|j| local.get(j)),
                                _ => None,
                            };
                            match item {
                                Some(&k) => targets.push(k),
                                None => return RunEnd::Text,
                            }
                        }
                        if targets.is_empty() {
                            RunEnd::Text
                        } else {
                            RunEnd::Items(targets)
                        }
                    };
                    Run {
                        left: p.left,
                        right: p.right,
                        left_end: end(p.left, r > p.plan.first_row),
                        right_end: end(p.right, r < p.plan.last_row),
                    }
                })
                .collect();
            let mut slots = assign_slots(&items);
            refine_slots(&items, &runs, &mut slots);
            for (k, &i) in members.iter().enumerate() {
                slot_of.insert(pending[i].id, slots[k]);
                max_slot[si] = max_slot[si].max(slots[k]);
            }
        }

        let mut segments = Vec::new();
        let mut handles = Vec::new();
        for p in &pending {
            let slot = slot_of[p.id];
            let side = p.plan.side;
            let y = run_y(side, slot);
            let mut drops = Vec::new();
            for e in p.plan.endpoints.iter().filter(|e| e.row == r) {
                let text_edge = match side {
                    Side::Above => 0.0,
                    Side::Below => th,
                };
                let (y_end, floor) = match &e.anchor {
                    AnchorRef::Token(_) => (text_edge, 0),
                    AnchorRef::Mention(m) => match (self.mentions.get(m), tiers.get(m.as_str())) {
                        (Some(mp), Some(&tier)) if mp.side == side => (mention_edge(side, tier), 0),
                        _ => (text_edge, 0),
                    },
                    AnchorRef::Relation(x) => match (self.arcs.get(x), slot_of.get(x.as_str())) {
                        (Some(xp), Some(&s)) if xp.side == side => {
                            let half = cfg.box_height() / 2.0;
                            let edge = match side {
                                Side::Above => run_y(side, s) - half,
                                Side::Below => run_y(side, s) + half,
                            };
                            (edge, s)
                        }
                        _ => (text_edge, 0),
                    },
                };
                drops.push(Drop { x: e.x, y_end, target: e.anchor.to_string(), floor, arrow: e.arrow });
            }
            let label_box = (p.plan.label_row == r)
                .then(|| LabelBox::centered(p.plan.label_x, y, p.plan.label_width, cfg.box_height()));
            if let Some(b) = label_box {
                let y = match side {
                    Side::Above => b.y,
                    Side::Below => b.y + b.height,
                };
                handles.push(Handle { relation_id: p.id.to_string(), row: r, x: p.plan.label_x, y });
            }
            let seg = ArcSegment {
                row: r,
                left: p.left,
                right: p.right,
                slot,
                y,
                drops,
                continues_left: r > p.plan.first_row,
                continues_right: r < p.plan.last_row,
            };
            segments.push((p.id.to_string(), seg, label_box));
        }

        let margin = cfg.slot_height / 2.0;
        let height_above = ta * lh + f64::from(max_slot[0]) * cfg.slot_height + margin;
        let height_below = th + tb * lh + f64::from(max_slot[1]) * cfg.slot_height + margin;
        RowGeometry {
            row: Row { index: r, y_baseline: height_above, height_above, height_below, tokens },
            mentions,
            segments,
            handles,
        }
    }
}

struct RowGeometry {
    row: Row,
    mentions: Vec<MentionLabel>,
    segments: Vec<(String, ArcSegment, Option<LabelBox>)>,
    handles: Vec<Handle>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Argument, Mention, SourceFormat, Span};

    fn cfg(width: f64) -> ViewConfig {
        ViewConfig {
            token_gap: 2.0,
            metrics: Arc::new(Monospace { advance: 1.0 }),
            font_size: 1.0,
            ..ViewConfig::with_width(width)
        }
    }

    fn tokens(text: &str) -> Document {
        let mut d = Document::new("d", text, SourceFormat::Brat);
        d.tokenize_whitespace();
        d
    }

    #[test]
    fn greedy_rows() {
        let d = tokens("aaaaaaaaaa bbbbbbbbbb cccccccccc");
        let p = assign_rows(&d, &cfg(35.0)).unwrap();
        assert_eq!(p.iter().map(|p| (p.row, p.x)).collect::<Vec<_>>(), vec![(0, 0.0), (0, 12.0), (0, 24.0)]);
        let p = assign_rows(&d, &cfg(25.0)).unwrap();
        assert_eq!(p.iter().map(|p| p.row).collect::<Vec<_>>(), vec![0, 0, 1]);
    }

    #[test]
    fn token_too_wide() {
        let d = tokens("a bbbbbbbbbbbb");
        assert!(matches!(assign_rows(&d, &cfg(10.0)), Err(LayoutError::TokenTooWide { index: 1, .. })));
    }

    #[test]
    fn override_reflows_following_tokens() {
        let d = tokens("aa bb cc dd");
        let mut c = cfg(100.0);
        c.row_overrides.insert(1, RowOverride { row: 1, x: 5.0 });
        let p = assign_rows(&d, &c).unwrap();
        assert_eq!(p.iter().map(|p| (p.row, p.x)).collect::<Vec<_>>(), vec![(0, 0.0), (1, 5.0), (1, 9.0), (1, 13.0)]);
    }

    #[test]
    fn backwards_override_is_clamped() {
        let d = tokens("aa bb cc");
        let mut c = cfg(100.0);
        c.row_overrides.insert(2, RowOverride { row: 0, x: 0.0 });
        let p = assign_rows(&d, &c).unwrap();
        assert_eq!(p[2].x, 8.0);
    }

    #[test]
    fn range_parse() {
        assert_eq!("0..9".parse::<RowRange>().unwrap(), RowRange::new(0, 9));
        assert_eq!("2..last".parse::<RowRange>().unwrap(), RowRange { start: 2, end: None });
        assert!("5..2".parse::<RowRange>().is_err());
        assert!("x".parse::<RowRange>().is_err());
    }

    #[test]
    fn cross_row_split() {
        // three rows of one token each
        let d = tokens("aaaa bbbb cccc");
        let d = d
            .add_relation(Relation::new(
                "R1",
                "link",
                Some(AnchorRef::Token(0)),
                vec![Argument::new("x", AnchorRef::Token(2))],
            ))
            .unwrap();
        let g = layout(&d, None, &cfg(5.0)).unwrap();
        let arc = g.arc("R1").unwrap();
        let spans: Vec<_> = arc.segments.iter().map(|s| (s.row, s.left, s.right)).collect();
        assert_eq!(spans, vec![(0, 2.0, 5.0), (1, 0.0, 5.0), (2, 0.0, 2.0)]);
        assert_eq!(arc.label_row, 0);
        assert!(arc.segments[1].drops.is_empty());
        assert!(arc.segments[2].drops[0].arrow);
        assert!(matches!(
            layout_window(&d, None, &cfg(5.0), RowRange::new(3, 4)),
            Err(LayoutError::RangeOutOfBounds { .. })
        ));
    }

    #[test]
    fn window_matches_full_layout() {
        let d = tokens("aa bb cc dd ee ff");
        let d = d
            .add_mention(Mention::new("T1", "X", vec![Span::new(0, 2)]))
            .unwrap()
            .add_relation(Relation::new(
                "R1",
                "r",
                None,
                vec![Argument::new("a", AnchorRef::Mention("T1".into())), Argument::new("b", AnchorRef::Token(4))],
            ))
            .unwrap();
        let c = cfg(9.0);
        let full = layout(&d, None, &c).unwrap();
        assert_eq!(full.total_rows, 3);
        for r in 0..3 {
            let w = layout_window(&d, None, &c, RowRange::new(r, r)).unwrap();
            assert_eq!(w.row_view(r), full.row_view(r), "row {r}");
        }
    }

    #[test]
    fn empty_document() {
        let g = layout(&tokens(""), None, &cfg(10.0)).unwrap();
        assert!(g.rows.is_empty());
        assert!(layout_window(&tokens(""), None, &cfg(10.0), RowRange::new(0, 0)).is_err());
    }
}
