use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{AnchorRef, Document, Layer, Taxonomy};

/// Which annotations to show. An empty filter shows everything.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct VisibilityFilter {
    pub include_types: Option<BTreeSet<String>>,
    pub exclude_types: Option<BTreeSet<String>>,
    pub show_semantic: bool,
    pub show_syntactic: bool,
    pub hidden_ids: BTreeSet<String>,
}

impl Default for VisibilityFilter {
    fn default() -> Self {
        VisibilityFilter {
            include_types: None,
            exclude_types: None,
            show_semantic: true,
            show_syntactic: true,
            hidden_ids: BTreeSet::new(),
        }
    }
}

impl VisibilityFilter {
    pub fn shows(&self, layer: Layer) -> bool {
        match layer {
            Layer::Semantic => self.show_semantic,
            Layer::Syntactic => self.show_syntactic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FilterOutcome {
    /// Visible mention and relation ids. Tokens are always visible.
    pub visible: BTreeSet<String>,
    pub warnings: Vec<String>,
}

/// Applies layer toggles, type include/exclude sets and hidden ids. A
/// relation is visible only when all of its endpoints are.
///
/// With a taxonomy, a type set also matches every descendant type. Type
/// names missing from the taxonomy produce warnings, not errors.
pub fn apply_filter(doc: &Document, filter: &VisibilityFilter, taxonomy: Option<&Taxonomy>) -> FilterOutcome {
    let mut warnings = Vec::new();
    if let Some(tax) = taxonomy {
        for name in filter.include_types.iter().chain(&filter.exclude_types).flatten() {
            if !tax.contains(name) {
                warnings.push(format!("filter names unknown type {name}"));
            }
        }
    }
    if let (Some(inc), Some(exc)) = (&filter.include_types, &filter.exclude_types) {
        for both in inc.intersection(exc) {
            warnings.push(format!("type {both} is both included and excluded; exclusion wins"));
        }
    }

    let lineage = |type_name: &Option<String>| -> Vec<String> {
        let Some(name) = type_name else { return Vec::new() };
        let mut names = vec![name.clone()];
        if let Some(anc) = taxonomy.and_then(|t| t.ancestors(name)) {
            names.extend(anc);
        }
        names
    };
    let type_ok = |type_name: &Option<String>| -> bool {
        let names = lineage(type_name);
        if let Some(inc) = &filter.include_types {
            if !names.iter().any(|n| inc.contains(n)) {
                return false;
            }
        }
        if let Some(exc) = &filter.exclude_types {
            if names.iter().any(|n| exc.contains(n)) {
                return false;
            }
        }
        true
    };

    let mut visible = BTreeSet::new();
    for m in doc.mentions.values() {
        if filter.shows(m.layer) && !filter.hidden_ids.contains(&m.id) && type_ok(&m.type_name) {
            visible.insert(m.id.clone());
        }
    }

    // Relations depend on each other; memoised DFS over the (acyclic)
    // reference graph.
    let mut memo: BTreeMap<&str, bool> = BTreeMap::new();
    for id in doc.relations.keys() {
        relation_visible(doc, id, filter, &type_ok, &visible, &mut memo);
    }
    visible.extend(memo.into_iter().filter(|(_, v)| *v).map(|(k, _)| k.to_string()));
    FilterOutcome { visible, warnings }
}

fn relation_visible<'a>(
    doc: &'a Document,
    id: &'a str,
    filter: &VisibilityFilter,
    type_ok: &impl Fn(&Option<String>) -> bool,
    mentions: &BTreeSet<String>,
    memo: &mut BTreeMap<&'a str, bool>,
) -> bool {
    if let Some(v) = memo.get(id) {
        return *v;
    }
    // Provisional entry guards against malformed cyclic input.
    memo.insert(id, false);
    let Some(rel) = doc.relations.get(id) else { return false };
    let mut ok = filter.shows(rel.layer) && !filter.hidden_ids.contains(id) && type_ok(&rel.type_name);
    if ok {
        for endpoint in rel.endpoints() {
            let v = match endpoint {
                AnchorRef::Token(i) => *i < doc.tokens.len(),
                AnchorRef::Mention(m) => mentions.contains(m),
                AnchorRef::Relation(r) => relation_visible(doc, r, filter, type_ok, mentions, memo),
            };
            if !v {
                ok = false;
                break;
            }
        }
    }
    memo.insert(id, ok);
    ok
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Argument, Color, Mention, Relation, SourceFormat, Span, TypeEntry};

    fn doc() -> Document {
        let mut d = Document::new("d", "aa bb cc", SourceFormat::Brat);
        d.tokenize_whitespace();
        d = d.add_mention(Mention::new("T1", "Gene", vec![Span::new(0, 2)])).unwrap();
        d = d.add_mention(Mention::new("T2", "Chemical", vec![Span::new(3, 5)])).unwrap();
        let mut pos = Mention::new("T3", "NN", vec![Span::new(6, 8)]);
        pos.layer = Layer::Syntactic;
        d = d.add_mention(pos).unwrap();
        let r1 = Relation::new(
            "R1",
            "Binding",
            None,
            vec![
                Argument::new("A", AnchorRef::Mention("T1".into())),
                Argument::new("B", AnchorRef::Mention("T2".into())),
            ],
        );
        d = d.add_relation(r1).unwrap();
        let r2 = Relation::new(
            "R2",
            "Regulation",
            Some(AnchorRef::Token(2)),
            vec![Argument::new("Theme", AnchorRef::Relation("R1".into()))],
        );
        d.add_relation(r2).unwrap()
    }

    fn ids(v: &[&str]) -> BTreeSet<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn identity_filter_shows_all() {
        let out = apply_filter(&doc(), &VisibilityFilter::default(), None);
        assert_eq!(out.visible, ids(&["R1", "R2", "T1", "T2", "T3"]));
    }

    #[test]
    fn hiding_cascades_through_relations() {
        let f = VisibilityFilter { hidden_ids: ids(&["T2"]), ..Default::default() };
        assert_eq!(apply_filter(&doc(), &f, None).visible, ids(&["T1", "T3"]));
    }

    #[test]
    fn layer_toggle() {
        let f = VisibilityFilter { show_syntactic: false, ..Default::default() };
        assert_eq!(apply_filter(&doc(), &f, None).visible, ids(&["R1", "R2", "T1", "T2"]));
    }

    #[test]
    fn include_matches_descendants() {
        let gray = Color([1, 2, 3]);
        let tax = Taxonomy {
            id: None,
            roots: vec![TypeEntry {
                name: "Entity".into(),
                color: gray,
                children: vec![TypeEntry::leaf("Gene", gray), TypeEntry::leaf("Chemical", gray)],
            }],
        };
        let f = VisibilityFilter { include_types: Some(ids(&["Entity"])), ..Default::default() };
        let out = apply_filter(&doc(), &f, Some(&tax));
        assert_eq!(out.visible, ids(&["T1", "T2"]));
        assert!(out.warnings.is_empty());

        let f = VisibilityFilter { exclude_types: Some(ids(&["Nope"])), ..Default::default() };
        let out = apply_filter(&doc(), &f, Some(&tax));
        assert_eq!(out.warnings.len(), 1);
        assert_eq!(out.visible.len(), 5);
    }
}
