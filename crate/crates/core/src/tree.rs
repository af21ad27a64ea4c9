//! Summary trees: the relation-reference graph unfolded from one element.

use serde::{Deserialize, Serialize};

use crate::graph::{AnchorRef, Document, Relation};

/// Role on the edge from a selected trigger to the relations it triggers.
pub const TRIGGERS_ROLE: &str = "triggers";
pub const TRIGGER_ROLE: &str = "trigger";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryNode {
    pub element: AnchorRef,
    pub label: String,
    /// Covered text: the surface of a token or mention, the trigger text of
    /// a relation (empty when trigger-free).
    pub text: String,
    pub children: Vec<Edge>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub role: String,
    pub node: SummaryNode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryTree {
    pub root: SummaryNode,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TreeError {
    #[error("unknown element {0}")]
    UnknownRef(String),
}

impl TreeError {
    pub fn code(&self) -> &'static str {
        "UNKNOWN_REF"
    }
}

impl SummaryNode {
    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(|e| e.node.node_count()).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(|e| e.node.depth()).max().unwrap_or(0)
    }

    /// Leaves print their text, inner nodes bracket their children:
    /// `[un [lock able]]`.
    pub fn bracketed(&self) -> String {
        if self.children.is_empty() {
            return if self.text.is_empty() { self.label.clone() } else { self.text.clone() };
        }
        let parts: Vec<String> = self.children.iter().map(|e| e.node.bracketed()).collect();
        format!("[{}]", parts.join(" "))
    }
}

impl SummaryTree {
    pub fn node_count(&self) -> usize {
        self.root.node_count()
    }

    pub fn bracketed(&self) -> String {
        self.root.bracketed()
    }
}

/// Unfolds the graph below `selected`. A token or mention becomes the root
/// over every relation it triggers (a token also stands for the mentions
/// anchored on it); a relation lists its trigger and then its arguments.
/// Shared sub-relations are repeated under each parent.
pub fn extract_tree(doc: &Document, selected: &AnchorRef) -> Result<SummaryTree, TreeError> {
    if !doc.resolves(selected) {
        return Err(TreeError::UnknownRef(selected.to_string()));
    }
    let root = match selected {
        AnchorRef::Relation(id) => relation_node(doc, &doc.relations[id], false),
        _ => {
            let mut node = leaf(doc, selected);
            for rel in triggered_by(doc, selected) {
                node.children.push(Edge { role: TRIGGERS_ROLE.into(), node: relation_node(doc, rel, true) });
            }
            node
        }
    };
    Ok(SummaryTree { root })
}

fn triggered_by<'d>(doc: &'d Document, selected: &AnchorRef) -> Vec<&'d Relation> {
    let matches = |t: &AnchorRef| -> bool {
        if t == selected {
            return true;
        }
        match (selected, t) {
            (AnchorRef::Token(i), AnchorRef::Mention(m)) => {
                let span = doc.tokens[*i].span;
                doc.mentions.get(m).is_some_and(|m| m.anchors.iter().any(|a| a.overlaps(&span)))
            }
            _ => false,
        }
    };
    doc.relations.values().filter(|r| r.trigger.as_ref().is_some_and(matches)).collect()
}

fn leaf(doc: &Document, anchor: &AnchorRef) -> SummaryNode {
    let (label, text) = match anchor {
        AnchorRef::Token(i) => {
            let s = doc.tokens[*i].surface.clone();
            (s.clone(), s)
        }
        AnchorRef::Mention(id) => {
            let m = &doc.mentions[id];
            (m.display_label(), doc.mention_surface(m))
        }
        AnchorRef::Relation(id) => (doc.relations[id].display_label(), String::new()),
    };
    SummaryNode { element: anchor.clone(), label, text, children: Vec::new() }
}

fn relation_node(doc: &Document, rel: &Relation, from_trigger: bool) -> SummaryNode {
    let mut children = Vec::new();
    let mut text = String::new();
    if let Some(t) = &rel.trigger {
        let trigger = leaf(doc, t);
        text = trigger.text.clone();
        if !from_trigger {
            children.push(Edge { role: TRIGGER_ROLE.into(), node: trigger });
        }
    }
    for arg in &rel.arguments {
        let node = match &arg.target {
            AnchorRef::Relation(id) => relation_node(doc, &doc.relations[id], false),
            other => leaf(doc, other),
        };
        children.push(Edge { role: arg.role.clone(), node });
    }
    SummaryNode { element: AnchorRef::Relation(rel.id.clone()), label: rel.display_label(), text, children }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_brat;

    const TXT: &str = "unlockable\n";

    fn doc(ann: &str) -> Document {
        parse_brat("u", TXT, ann).unwrap().0
    }

    const MORPHS: &str = "T1\tPrefix 0 2\tun\nT2\tStem 2 6\tlock\nT3\tSuffix 6 10\table\n";

    #[test]
    fn bracketing_follows_attachment() {
        let a = doc(&format!("{MORPHS}R1\tSuffixation Arg1:T2 Arg2:T3\nR2\tPrefixation Arg1:T1 Arg2:R1\n"));
        let b = doc(&format!("{MORPHS}R1\tPrefixation Arg1:T1 Arg2:T2\nR2\tSuffixation Arg1:R1 Arg2:T3\n"));
        let ta = extract_tree(&a, &AnchorRef::Relation("R2".into())).unwrap();
        let tb = extract_tree(&b, &AnchorRef::Relation("R2".into())).unwrap();
        assert_eq!(ta.bracketed(), "[un [lock able]]");
        assert_eq!(tb.bracketed(), "[[un lock] able]");
        assert_ne!(ta, tb);
    }

    #[test]
    fn isolated_mention_is_single_node() {
        let d = doc(MORPHS);
        let t = extract_tree(&d, &AnchorRef::Mention("T1".into())).unwrap();
        assert_eq!(t.node_count(), 1);
        assert_eq!(t.root.text, "un");
    }

    #[test]
    fn unknown_selection() {
        let d = doc(MORPHS);
        assert_eq!(extract_tree(&d, &AnchorRef::Mention("T9".into())), Err(TreeError::UnknownRef("T9".into())));
        assert!(extract_tree(&d, &AnchorRef::Token(5)).is_err());
    }
}
