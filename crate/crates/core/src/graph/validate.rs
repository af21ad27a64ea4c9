use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ops::check_shape;
use super::Document;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

/// One invariant violation found by [`Document::validate`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub severity: Severity,
    pub element: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{sev}: {}: {}", self.element, self.message)
    }
}

impl Document {
    /// Checks every document invariant and reports all violations.
    pub fn validate(&self) -> Vec<Issue> {
        let mut issues = Vec::new();
        let mut err = |element: &str, message: String| {
            issues.push(Issue { severity: Severity::Error, element: element.to_string(), message })
        };
        let index = self.char_index();
        let len = index.char_len();

        for (i, tok) in self.tokens.iter().enumerate() {
            let name = format!("token:{i}");
            if tok.index != i {
                err(&name, format!("index {} out of sequence", tok.index));
            }
            if tok.span.start >= tok.span.end || tok.span.end > len {
                err(&name, format!("span {} invalid for text length {len}", tok.span));
            } else if index.slice(&self.text, tok.span) != Some(tok.surface.as_str()) {
                err(&name, "surface does not match text".into());
            }
            if i > 0 && self.tokens[i - 1].span.end > tok.span.start {
                err(&name, "overlaps or precedes previous token".into());
            }
        }

        for (id, m) in &self.mentions {
            if id != &m.id {
                err(id, format!("keyed under a different id {}", m.id));
            }
            if let Err(e) = self.check_anchors(m) {
                err(id, e.to_string());
            }
        }

        for (id, rel) in &self.relations {
            if id != &rel.id {
                err(id, format!("keyed under a different id {}", rel.id));
            }
            if let Err(e) = check_shape(rel) {
                err(id, e.to_string());
            }
            for endpoint in rel.endpoints() {
                if !self.resolves(endpoint) {
                    err(id, format!("references unknown element {endpoint}"));
                }
            }
        }

        if let Some(cycle) = self.find_cycle() {
            err(&cycle, "relation is part of a reference cycle".into());
        }

        for rel in self.relations.values() {
            let mut seen = BTreeMap::new();
            for arg in &rel.arguments {
                if let Some(prev) = seen.insert(&arg.target, &arg.role) {
                    issues.push(Issue {
                        severity: Severity::Warning,
                        element: rel.id.clone(),
                        message: format!("{} fills both {} and {}", arg.target, prev, arg.role),
                    });
                }
            }
        }
        issues
    }

    /// Returns a relation on a reference cycle, if any. Three-colour DFS.
    pub fn find_cycle(&self) -> Option<String> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Open,
            Done,
        }
        let mut marks: BTreeMap<&str, Mark> = BTreeMap::new();
        for root in self.relations.keys() {
            if marks.contains_key(root.as_str()) {
                continue;
            }
            // (relation, next child position)
            let mut stack: Vec<(&str, usize)> = vec![(root, 0)];
            marks.insert(root, Mark::Open);
            while let Some((id, pos)) = stack.pop() {
                let children: Vec<&str> =
                    self.relations.get(id).map(|r| r.referenced_relations().collect()).unwrap_or_default();
                if pos < children.len() {
                    stack.push((id, pos + 1));
                    let child = children[pos];
                    match marks.get(child) {
                        Some(Mark::Open) => return Some(child.to_string()),
                        Some(Mark::Done) => {}
                        None => {
                            marks.insert(child, Mark::Open);
                            stack.push((child, 0));
                        }
                    }
                } else {
                    marks.insert(id, Mark::Done);
                }
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{AnchorRef, Argument, Mention, Relation, SourceFormat, Span};

    #[test]
    fn reports_cycles_and_reflexive_roles() {
        let mut doc = Document::new("d", "ab cd", SourceFormat::Brat);
        doc.tokenize_whitespace();
        doc.mentions.insert("T1".into(), Mention::new("T1", "X", vec![Span::new(0, 2)]));
        let t1 = AnchorRef::Mention("T1".into());
        let a = Relation::new(
            "R1",
            "r",
            None,
            vec![Argument::new("A", AnchorRef::Relation("R2".into())), Argument::new("B", t1.clone())],
        );
        let b = Relation::new(
            "R2",
            "r",
            None,
            vec![Argument::new("A", AnchorRef::Relation("R1".into())), Argument::new("B", t1.clone())],
        );
        doc.relations.insert("R1".into(), a);
        doc.relations.insert("R2".into(), b);
        assert!(doc.find_cycle().is_some());
        let issues = doc.validate();
        assert!(issues.iter().any(|i| i.message.contains("cycle")));

        doc.relations.clear();
        let refl = Relation::new("R3", "r", None, vec![Argument::new("A", t1.clone()), Argument::new("B", t1)]);
        doc.relations.insert("R3".into(), refl);
        let issues = doc.validate();
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].severity, Severity::Warning);
    }

    #[test]
    fn flags_bad_tokens() {
        let mut doc = Document::new("d", "ab cd", SourceFormat::Brat);
        doc.tokenize_whitespace();
        doc.tokens[1].surface = "zz".into();
        assert_eq!(doc.validate().len(), 1);
    }
}
