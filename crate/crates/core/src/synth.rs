//! Seeded generators for large synthetic documents and random edit
//! sessions, used by benchmarks and property tests.

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use crate::edit::{EditOp, Session};
use crate::graph::{
    AnchorRef, Argument, Color, Directionality, Document, Layer, Mention, Relation, SourceFormat, Span,
};

const WORDS: [&str; 12] =
    ["p53", "binds", "the", "MDM2", "protein", "and", "inhibits", "Cdk4", "in", "cells", "via", "RAS"];

/// A document of `tokens` words with a mention on every other token and
/// `relations` relations between nearby elements. Roughly one relation in
/// five is syntactic; some take an earlier nearby relation as argument.
pub fn synthetic_document(tokens: usize, relations: usize, seed: u64) -> Document {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut text = String::new();
    for i in 0..tokens {
        if i > 0 {
            text.push(if i % 15 == 0 { '\n' } else { ' ' });
        }
        text.push_str(WORDS.choose(&mut rng).expect("non-empty"));
    }
    let mut doc = Document::new(format!("synthetic-{seed}"), text, SourceFormat::Brat);
    doc.tokenize_whitespace();
    for i in (0..tokens).step_by(2) {
        let id = format!("T{}", i / 2 + 1);
        let mut m =
            Mention::new(id.clone(), if rng.gen_bool(0.5) { "Protein" } else { "Event" }, vec![doc.tokens[i].span]);
        if rng.gen_bool(0.1) {
            m.layer = Layer::Syntactic;
        }
        doc.mentions.insert(id, m);
    }
    if tokens < 2 {
        return doc;
    }
    let mut made: Vec<(usize, String)> = Vec::new();
    for r in 0..relations {
        let at = rng.gen_range(0..tokens);
        let near = |rng: &mut StdRng, doc: &Document| -> AnchorRef {
            let t = (at + rng.gen_range(0..12)).min(tokens - 1);
            if t % 2 == 0 && doc.mentions.contains_key(&format!("T{}", t / 2 + 1)) {
                AnchorRef::Mention(format!("T{}", t / 2 + 1))
            } else {
                AnchorRef::Token(t)
            }
        };
        let layer = if rng.gen_bool(0.2) { Layer::Syntactic } else { Layer::Semantic };
        let mut args = vec![Argument::new("Theme", near(&mut rng, &doc))];
        let earlier: Vec<&String> = made.iter().filter(|(pos, _)| pos.abs_diff(at) < 12).map(|(_, id)| id).collect();
        if !earlier.is_empty() && rng.gen_bool(0.3) {
            args.push(Argument::new(
                "Cause",
                AnchorRef::Relation((*earlier.choose(&mut rng).expect("non-empty")).clone()),
            ));
        } else {
            args.push(Argument::new("Cause", near(&mut rng, &doc)));
        }
        let trigger = rng.gen_bool(0.5).then(|| near(&mut rng, &doc));
        let id = if trigger.is_some() { format!("E{}", r + 1) } else { format!("R{}", r + 1) };
        let mut rel =
            Relation::new(id.clone(), if layer == Layer::Syntactic { "dep" } else { "Regulation" }, trigger, args);
        rel.layer = layer;
        if rng.gen_bool(0.1) {
            rel.directionality = Directionality::Undirected;
        }
        doc.relations.insert(id.clone(), rel);
        made.push((at, id));
    }
    doc
}

/// One random op that names elements of `doc`; it may still be rejected
/// (for example when it would close a cycle).
pub fn random_op(doc: &Document, rng: &mut impl Rng, fresh: usize) -> EditOp {
    let ids: Vec<&String> = doc.mentions.keys().chain(doc.relations.keys()).collect();
    let rels: Vec<&Relation> = doc.relations.values().collect();
    let mentions: Vec<&String> = doc.mentions.keys().collect();
    let any_anchor = |rng: &mut dyn rand::RngCore| -> AnchorRef {
        match rng.gen_range(0..3) {
            0 if !doc.tokens.is_empty() => AnchorRef::Token(rng.gen_range(0..doc.tokens.len())),
            1 if !rels.is_empty() => AnchorRef::Relation(rels[rng.gen_range(0..rels.len())].id.clone()),
            _ if !mentions.is_empty() => AnchorRef::Mention(mentions[rng.gen_range(0..mentions.len())].clone()),
            _ => AnchorRef::Token(0),
        }
    };
    let pick = |rng: &mut dyn rand::RngCore| -> String {
        if ids.is_empty() {
            "T1".into()
        } else {
            ids[rng.gen_range(0..ids.len())].clone()
        }
    };
    match rng.gen_range(0..10) {
        0 => EditOp::Relabel { id: pick(rng), label: format!("L{}", rng.gen_range(0..5)) },
        1 => EditOp::Retype {
            id: pick(rng),
            type_name: rng.gen_bool(0.8).then(|| format!("Type{}", rng.gen_range(0..3))),
        },
        2 if !rels.is_empty() => {
            let rel = rels[rng.gen_range(0..rels.len())];
            EditOp::Reattach {
                relation_id: rel.id.clone(),
                arg_index: rng.gen_range(0..rel.arguments.len()),
                target: any_anchor(rng),
            }
        }
        3 if !doc.tokens.is_empty() => {
            let t = &doc.tokens[rng.gen_range(0..doc.tokens.len())];
            let end = t.span.start + rng.gen_range(1..=t.span.len());
            EditOp::CreateMention {
                mention: Mention::new(format!("T{}", 100 + fresh), "Protein", vec![Span::new(t.span.start, end)]),
            }
        }
        4 => {
            let trigger = rng.gen_bool(0.5).then(|| any_anchor(rng));
            let id = format!("{}{}", if trigger.is_some() { 'E' } else { 'R' }, 100 + fresh);
            let args = vec![Argument::new("Theme", any_anchor(rng)), Argument::new("Cause", any_anchor(rng))];
            EditOp::CreateRelation { relation: Relation::new(id, "Regulation", trigger, args) }
        }
        5 => EditOp::Delete { id: pick(rng) },
        6 => EditOp::Hide { id: pick(rng) },
        7 => EditOp::Unhide { id: pick(rng) },
        8 if !doc.tokens.is_empty() => EditOp::MoveToken {
            token: rng.gen_range(0..doc.tokens.len()),
            row: rng.gen_range(0..3),
            x: f64::from(rng.gen_range(0..40u8)),
        },
        _ => EditOp::RecolorType {
            type_name: "Protein".into(),
            color: Color([rng.gen(), rng.gen(), rng.gen()]),
            cascade: rng.gen(),
        },
    }
}

/// Applies up to `max_ops` random ops (rejected candidates are skipped) and
/// occasional undos.
pub fn random_session(base: Document, seed: u64, max_ops: usize) -> Session {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut session = Session::new(base, None).with_clock(|| "1970-01-01T00:00:00.000Z".into());
    let target = rng.gen_range(0..=max_ops);
    let mut attempts = 0;
    while session.log().len() < target && attempts < max_ops * 20 {
        attempts += 1;
        if rng.gen_bool(0.1) {
            let _ = session.undo();
            continue;
        }
        let op = random_op(session.document(), &mut rng, attempts);
        let _ = session.apply(op);
    }
    session
}

/// Presentation-only ops (drags and hides) over `doc`.
pub fn random_presentation_session(base: Document, seed: u64, ops: usize) -> Session {
    let mut rng = StdRng::seed_from_u64(seed);
    let ids: Vec<String> = base.mentions.keys().chain(base.relations.keys()).cloned().collect();
    let tokens = base.tokens.len();
    let mut session = Session::new(base, None).with_clock(|| "1970-01-01T00:00:00.000Z".into());
    for _ in 0..ops {
        let op = match rng.gen_range(0..3) {
            0 if tokens > 0 => EditOp::MoveToken { token: rng.gen_range(0..tokens), row: rng.gen_range(0..3), x: 0.0 },
            1 if !ids.is_empty() => EditOp::Hide { id: ids[rng.gen_range(0..ids.len())].clone() },
            _ if !ids.is_empty() => EditOp::Unhide { id: ids[rng.gen_range(0..ids.len())].clone() },
            _ => continue,
        };
        session.apply(op).expect("presentation ops on existing elements succeed");
    }
    session
}
