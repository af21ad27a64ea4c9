//! Editing sessions with linear undo and a replayable operation log.
//!
//! Content operations go through the graph operations (so cascades and the
//! acyclicity check apply); `MoveToken`, `Hide` and `Unhide` only change the
//! presentation state and are flagged as such in the log.

mod diff;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::graph::{recolor_type, AnchorRef, Color, Document, GraphError, Mention, Relation, Taxonomy};
use crate::layout::{RowOverride, ViewConfig};

pub use diff::{replay, DiffHeader, DiffLog, FORMAT_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op")]
pub enum EditOp {
    Relabel {
        id: String,
        label: String,
    },
    Retype {
        id: String,
        type_name: Option<String>,
    },
    Reattach {
        relation_id: String,
        arg_index: usize,
        target: AnchorRef,
    },
    CreateMention {
        mention: Mention,
    },
    CreateRelation {
        relation: Relation,
    },
    Delete {
        id: String,
    },
    Hide {
        id: String,
    },
    Unhide {
        id: String,
    },
    RecolorType {
        type_name: String,
        color: Color,
        cascade: bool,
    },
    MoveToken {
        token: usize,
        row: usize,
        x: f64,
    },
    /// Retracts the most recent op that has not been undone yet.
    Undo,
}

impl EditOp {
    pub fn is_presentation(&self) -> bool {
        matches!(self, EditOp::Hide { .. } | EditOp::Unhide { .. } | EditOp::MoveToken { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub seq: u64,
    pub timestamp: String,
    pub presentation: bool,
    pub op: EditOp,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EditError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("relation {relation} has {len} arguments, no index {index}")]
    InvalidArgIndex { relation: String, index: usize, len: usize },
    #[error("no token {0}")]
    UnknownToken(usize),
    #[error("nothing to undo")]
    NothingToUndo,
    #[error("no taxonomy is attached to the session")]
    NoTaxonomy,
    #[error("diff was recorded against {expected}, base hashes to {found}")]
    BaseMismatch { expected: String, found: String },
    #[error("op {seq} failed during replay: {source}")]
    ReplayConflict { seq: u64, source: Box<EditError> },
    #[error("diff line {line}: {reason}")]
    MalformedDiff { line: usize, reason: String },
}

impl EditError {
    pub fn code(&self) -> &'static str {
        match self {
            EditError::Graph(g) => g.code(),
            EditError::InvalidArgIndex { .. } => "INVALID_ARG_INDEX",
            EditError::UnknownToken(_) => "UNKNOWN_ID",
            EditError::NothingToUndo => "NOTHING_TO_UNDO",
            EditError::NoTaxonomy => "NO_TAXONOMY",
            EditError::BaseMismatch { .. } => "BASE_MISMATCH",
            EditError::ReplayConflict { .. } => "REPLAY_CONFLICT",
            EditError::MalformedDiff { .. } => "MALFORMED_DIFF",
        }
    }
}

/// Per-session view state: token drags and hidden elements.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Presentation {
    pub row_overrides: BTreeMap<usize, RowOverride>,
    pub hidden: BTreeSet<String>,
}

#[derive(Debug, Clone)]
struct State {
    document: Document,
    taxonomy: Option<Taxonomy>,
    presentation: Presentation,
}

/// What an applied op changed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Applied {
    pub seq: u64,
    /// Ids removed by a delete, including cascaded dependents.
    pub removed: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Session {
    base: Document,
    base_hash: String,
    state: State,
    undo_stack: Vec<State>,
    log: Vec<LogEntry>,
    clock: fn() -> String,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl Session {
    pub fn new(base: Document, taxonomy: Option<Taxonomy>) -> Self {
        let base_hash = base.content_hash();
        Session {
            state: State { document: base.clone(), taxonomy, presentation: Presentation::default() },
            base,
            base_hash,
            undo_stack: Vec::new(),
            log: Vec::new(),
            clock: now,
        }
    }

    /// Replaces the timestamp source, for reproducible logs.
    pub fn with_clock(mut self, clock: fn() -> String) -> Self {
        self.clock = clock;
        self
    }

    pub fn base(&self) -> &Document {
        &self.base
    }

    pub fn document(&self) -> &Document {
        &self.state.document
    }

    pub fn taxonomy(&self) -> Option<&Taxonomy> {
        self.state.taxonomy.as_ref()
    }

    pub fn presentation(&self) -> &Presentation {
        &self.state.presentation
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    /// `base` with this session's drags and hidden ids merged in.
    pub fn view_config(&self, base: &ViewConfig) -> ViewConfig {
        let mut cfg = base.clone();
        let p = &self.state.presentation;
        cfg.row_overrides.extend(p.row_overrides.iter().map(|(k, v)| (*k, *v)));
        cfg.filter.hidden_ids.extend(p.hidden.iter().cloned());
        cfg
    }

    pub fn apply(&mut self, op: EditOp) -> Result<Applied, EditError> {
        if op == EditOp::Undo {
            return self.undo();
        }
        let (next, removed) = step(&self.state, &op, false)?;
        let previous = std::mem::replace(&mut self.state, next);
        self.undo_stack.push(previous);
        let seq = self.record(op);
        Ok(Applied { seq, removed })
    }

    /// Restores the state before the last applied op; the log keeps the op
    /// and records the retraction.
    pub fn undo(&mut self) -> Result<Applied, EditError> {
        let previous = self.undo_stack.pop().ok_or(EditError::NothingToUndo)?;
        self.state = previous;
        let seq = self.record(EditOp::Undo);
        Ok(Applied { seq, removed: Vec::new() })
    }

    fn record(&mut self, op: EditOp) -> u64 {
        let seq = self.log.last().map_or(1, |e| e.seq + 1);
        let presentation = match &op {
            EditOp::Undo => self.undone_is_presentation(),
            op => op.is_presentation(),
        };
        self.log.push(LogEntry { seq, timestamp: (self.clock)(), presentation, op });
        seq
    }

    /// Whether the op just retracted was a presentation op.
    fn undone_is_presentation(&self) -> bool {
        let mut pending = 0usize;
        for e in self.log.iter().rev() {
            if e.op == EditOp::Undo {
                pending += 1;
            } else if pending == 0 {
                return e.presentation;
            } else {
                pending -= 1;
            }
        }
        false
    }

    pub fn export_diff(&self) -> DiffLog {
        DiffLog {
            header: DiffHeader {
                base_id: self.base.id.clone(),
                content_hash: self.base_hash.clone(),
                format_version: FORMAT_VERSION.into(),
            },
            entries: self.log.clone(),
        }
    }

    /// Rebuilds a session by applying a diff to its base. The new session's
    /// log equals the diff's entries. Without a taxonomy, recolor entries are
    /// skipped.
    pub fn replay(base: Document, taxonomy: Option<Taxonomy>, diff: &DiffLog) -> Result<Session, EditError> {
        let found = base.content_hash();
        if found != diff.header.content_hash {
            return Err(EditError::BaseMismatch { expected: diff.header.content_hash.clone(), found });
        }
        let mut session = Session::new(base, taxonomy);
        for entry in &diff.entries {
            let result = match &entry.op {
                EditOp::Undo => session.undo_stack.pop().map(|s| session.state = s).ok_or(EditError::NothingToUndo),
                op => step(&session.state, op, true).map(|(next, _)| {
                    let prev = std::mem::replace(&mut session.state, next);
                    session.undo_stack.push(prev);
                }),
            };
            result.map_err(|e| EditError::ReplayConflict { seq: entry.seq, source: Box::new(e) })?;
            session.log.push(entry.clone());
        }
        Ok(session)
    }
}

fn step(state: &State, op: &EditOp, replaying: bool) -> Result<(State, Vec<String>), EditError> {
    let doc = &state.document;
    let mut next = state.clone();
    let mut removed = Vec::new();
    match op {
        EditOp::Relabel { id, label } => next.document = doc.relabel(id, label)?,
        EditOp::Retype { id, type_name } => next.document = doc.retype(id, type_name.as_deref())?,
        EditOp::Reattach { relation_id, arg_index, target } => {
            let rel = doc.relations.get(relation_id).ok_or_else(|| GraphError::UnknownId(relation_id.clone()))?;
            let mut rel = rel.clone();
            let len = rel.arguments.len();
            let arg = rel.arguments.get_mut(*arg_index).ok_or(EditError::InvalidArgIndex {
                relation: relation_id.clone(),
                index: *arg_index,
                len,
            })?;
            arg.target = target.clone();
            next.document = doc.replace_relation(rel)?;
        }
        EditOp::CreateMention { mention } => next.document = doc.add_mention(mention.clone())?,
        EditOp::CreateRelation { relation } => next.document = doc.add_relation(relation.clone())?,
        EditOp::Delete { id } => {
            let (d, gone) = doc.delete_element(id)?;
            next.document = d;
            for g in &gone {
                next.presentation.hidden.remove(g);
            }
            removed = gone.into_iter().collect();
        }
        EditOp::Hide { id } | EditOp::Unhide { id } => {
            if !doc.contains_id(id) {
                return Err(GraphError::UnknownId(id.clone()).into());
            }
            if matches!(op, EditOp::Hide { .. }) {
                next.presentation.hidden.insert(id.clone());
            } else {
                next.presentation.hidden.remove(id);
            }
        }
        EditOp::RecolorType { type_name, color, cascade } => match &state.taxonomy {
            Some(tax) => next.taxonomy = Some(recolor_type(tax, type_name, *color, *cascade)?),
            None if replaying => {}
            None => return Err(EditError::NoTaxonomy),
        },
        EditOp::MoveToken { token, row, x } => {
            if *token >= doc.tokens.len() {
                return Err(EditError::UnknownToken(*token));
            }
            next.presentation.row_overrides.insert(*token, RowOverride { row: *row, x: *x });
        }
        EditOp::Undo => unreachable!("handled by the session"),
    }
    Ok((next, removed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_brat;

    const TXT: &str = "Induction of p21 by p53 following DNA damage inhibits both Cdk4 and Cdk2\n";
    const ANN: &str = "T1\tGene_or_gene_product 13 16\tp21\nT2\tGene_or_gene_product 20 23\tp53\n\
T3\tGene_or_gene_product 59 63\tCdk4\nT4\tGene_or_gene_product 68 72\tCdk2\n\
T5\tNegative_regulation 45 53\tinhibits\nT6\tPositive_activation 0 9\tInduction\n\
E1\tPositive_activation:T6 Controller:T2 Controlled:T1\n\
E2\tNegative_regulation:T5 Controller:E1 Controlled:T3\nE3\tNegative_regulation:T5 Controller:E1 Controlled:T4\n";

    fn session() -> Session {
        Session::new(parse_brat("fig5", TXT, ANN).unwrap().0, None).with_clock(|| "t".into())
    }

    #[test]
    fn reattach_and_cycle() {
        let mut s = session();
        s.apply(EditOp::Reattach { relation_id: "E2".into(), arg_index: 0, target: AnchorRef::Mention("T2".into()) })
            .unwrap();
        assert_eq!(s.document().relations["E2"].arguments[0].target, AnchorRef::Mention("T2".into()));
        assert_eq!(s.document().relations["E1"], s.base().relations["E1"]);

        let mut s = session();
        let err = s
            .apply(EditOp::Reattach {
                relation_id: "E1".into(),
                arg_index: 0,
                target: AnchorRef::Relation("E2".into()),
            })
            .unwrap_err();
        assert_eq!(err.code(), "CYCLE_DETECTED");
        assert!(s.log().is_empty());
    }

    #[test]
    fn delete_then_undo_restores() {
        let mut s = session();
        let applied = s.apply(EditOp::Delete { id: "T2".into() }).unwrap();
        assert_eq!(applied.removed, vec!["E1", "E2", "E3", "T2"]);
        s.undo().unwrap();
        assert!(s.document().structurally_equal(s.base()));
        assert_eq!(s.log().len(), 2);
        assert_eq!(s.undo(), Err(EditError::NothingToUndo));
    }

    #[test]
    fn relabel_deleted_is_unknown() {
        let mut s = session();
        s.apply(EditOp::Delete { id: "T3".into() }).unwrap();
        assert_eq!(
            s.apply(EditOp::Relabel { id: "T3".into(), label: "x".into() }),
            Err(EditError::Graph(GraphError::UnknownId("T3".into())))
        );
    }

    #[test]
    fn invalid_arg_index() {
        let mut s = session();
        let op = EditOp::Reattach { relation_id: "E1".into(), arg_index: 7, target: AnchorRef::Token(0) };
        assert!(matches!(s.apply(op), Err(EditError::InvalidArgIndex { index: 7, len: 2, .. })));
    }

    #[test]
    fn presentation_ops_leave_document_alone() {
        let mut s = session();
        s.apply(EditOp::MoveToken { token: 8, row: 1, x: 0.0 }).unwrap();
        s.apply(EditOp::Hide { id: "E3".into() }).unwrap();
        assert!(s.document().structurally_equal(s.base()));
        assert!(s.log().iter().all(|e| e.presentation));
        let cfg = s.view_config(&ViewConfig::default());
        assert!(cfg.filter.hidden_ids.contains("E3"));
        assert_eq!(cfg.row_overrides[&8].row, 1);
        s.undo().unwrap();
        assert!(s.log()[2].presentation);
    }
}
