use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use tag_core::graph::{AnchorRef, Argument, Document, GraphError, Mention, Relation, SourceFormat, Span};
use tag_core::tree::extract_tree;

const ELEMENTS: usize = 20;

fn base() -> Document {
    let mut doc = Document::new("g", "a b c d e", SourceFormat::Brat);
    doc.tokenize_whitespace();
    doc.add_mention(Mention::new("T1", "X", vec![Span::new(0, 1)])).unwrap()
}

/// Transitive closure by repeated squaring of a boolean matrix.
fn closure(edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut m = vec![vec![false; ELEMENTS]; ELEMENTS];
    for &(a, b) in edges {
        m[a][b] = true;
    }
    for k in 0..ELEMENTS {
        for i in 0..ELEMENTS {
            if m[i][k] {
                let via = m[k].clone();
                for (to, &hop) in m[i].iter_mut().zip(&via) {
                    *to |= hop;
                }
            }
        }
    }
    m
}

fn edges_of(doc: &Document) -> Vec<(usize, usize)> {
    let idx = |id: &str| id[1..].parse::<usize>().unwrap();
    doc.relations.values().flat_map(|r| r.referenced_relations().map(move |t| (idx(&r.id), idx(t)))).collect()
}

fn cyclic(edges: &[(usize, usize)]) -> bool {
    let c = closure(edges);
    (0..ELEMENTS).any(|i| c[i][i])
}

/// One seeded run of attempts; returns (accepted, rejected).
fn run(seed: u64, attempts: usize) -> (usize, usize) {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut doc = base();
    let (mut ok, mut rejected) = (0, 0);
    for _ in 0..attempts {
        let id = format!("R{}", rng.gen_range(0..ELEMENTS));
        let args = (0..rng.gen_range(2..=3))
            .map(|_| {
                let target = if rng.gen_bool(0.8) {
                    AnchorRef::Relation(format!("R{}", rng.gen_range(0..ELEMENTS)))
                } else {
                    AnchorRef::Mention("T1".into())
                };
                Argument::new("arg", target)
            })
            .collect();
        let rel = Relation::new(id.clone(), "r", None, args);
        let dangling = rel.endpoints().any(|e| !doc.resolves(e));
        let mut candidate = doc.clone();
        candidate.relations.insert(id.clone(), rel.clone());
        let would_cycle = cyclic(&edges_of(&candidate));
        let result = if doc.relations.contains_key(&id) { doc.replace_relation(rel) } else { doc.add_relation(rel) };
        match result {
            Ok(next) => {
                assert!(!would_cycle && !dangling, "seed {seed}: accepted a bad edge set for {id}");
                doc = next;
                ok += 1;
            }
            Err(GraphError::CycleDetected(_)) => {
                assert!(would_cycle, "seed {seed}: rejected {id} without a cycle");
                rejected += 1;
            }
            Err(GraphError::DanglingReference { .. }) => assert!(dangling),
            Err(e) => panic!("seed {seed}: unexpected {e}"),
        }
        assert!(!cyclic(&edges_of(&doc)));
        assert_eq!(doc.find_cycle(), None);
    }
    (ok, rejected)
}

#[test]
fn cycle_rejections_match_reachability_oracle() {
    let mut totals = (0, 0);
    for seed in 0..200 {
        let (a, r) = run(seed, 100);
        totals.0 += a;
        totals.1 += r;
    }
    // both branches are exercised
    assert!(totals.0 > 1000 && totals.1 > 100, "{totals:?}");
}

#[test]
fn chain_closing_edge_is_rejected() {
    let mut doc = base();
    let t1 = || Argument::new("a", AnchorRef::Mention("T1".into()));
    doc = doc.add_relation(Relation::new("E1", "r", None, vec![t1(), t1()])).unwrap();
    for i in 2..=4 {
        let arg = Argument::new("b", AnchorRef::Relation(format!("E{}", i - 1)));
        doc = doc.add_relation(Relation::new(format!("E{i}"), "r", None, vec![t1(), arg])).unwrap();
    }
    let mut e1 = doc.relations["E1"].clone();
    e1.arguments.push(Argument::new("b", AnchorRef::Relation("E4".into())));
    assert!(matches!(doc.replace_relation(e1), Err(GraphError::CycleDetected(_))));
}

fn naive_count(doc: &Document, anchor: &AnchorRef, via_trigger: bool) -> usize {
    match anchor {
        AnchorRef::Relation(id) => {
            let rel = &doc.relations[id];
            let trigger = if via_trigger { 0 } else { rel.trigger.iter().count() };
            1 + trigger + rel.arguments.iter().map(|a| naive_count(doc, &a.target, false)).sum::<usize>()
        }
        _ => 1,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tree_size_matches_unfolding(seed in 0u64..10_000) {
        let doc = tag_core::synth::synthetic_document(60, 25, seed);
        for rel in doc.relations.values().filter(|r| r.trigger.is_none()) {
            let anchor = AnchorRef::Relation(rel.id.clone());
            let tree = extract_tree(&doc, &anchor).unwrap();
            prop_assert_eq!(tree.node_count(), naive_count(&doc, &anchor, false));
        }
    }

    #[test]
    fn delete_cascade_is_transitive_closure(seed in 0u64..10_000, pick in 0usize..1000) {
        let doc = tag_core::synth::synthetic_document(60, 25, seed);
        let ids: Vec<&String> = doc.mentions.keys().chain(doc.relations.keys()).collect();
        let id = ids[pick % ids.len()];
        let (next, removed) = doc.delete_element(id).unwrap();
        // fixpoint oracle
        let mut gone = std::collections::BTreeSet::from([id.clone()]);
        loop {
            let before = gone.len();
            for rel in doc.relations.values() {
                if rel.endpoints().any(|e| e.element_id().is_some_and(|t| gone.contains(t))) {
                    gone.insert(rel.id.clone());
                }
            }
            if gone.len() == before { break; }
        }
        prop_assert_eq!(&removed, &gone);
        prop_assert!(next.relations.values().all(|r| r.endpoints().all(|e| next.resolves(e))));
    }
}
