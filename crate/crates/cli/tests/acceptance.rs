//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Document-level checks go through a live service
//! with the HTTP client; algorithm properties run in-process against
//! brute-force oracles written here.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use tag_client::Client;
use tag_core::api::{Upload, ViewQuery};
use tag_core::edit::{replay, DiffLog};
use tag_core::format::{serialize, Serialized};
use tag_core::graph::{AnchorRef, Argument, Document, GraphError, Mention, Relation, SourceFormat, Span};
use tag_core::layout::{count_crossings, layout, layout_window, CrossingSegment, LayoutGeometry, RowRange, ViewConfig};
use tag_core::synth::{random_presentation_session, random_session, synthetic_document};
use tag_service::{router, spawn, Store};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn data() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

// p53 / p21 / Cdk events

async fn fig5(client: &Client) -> Outcome {
    let start = Instant::now();
    let doc = client.document("fig5").await.map_err(e)?;
    let proteins = doc.mentions.values().filter(|m| m.type_name.as_deref() == Some("Gene_or_gene_product")).count();
    ensure!(proteins == 4, "{proteins} protein mentions");
    ensure!(doc.relations.len() == 3, "{} events", doc.relations.len());
    for id in ["E2", "E3"] {
        let controller = doc.relations[id].arguments.iter().find(|a| a.role == "Controller");
        ensure!(
            controller.map(|a| &a.target) == Some(&AnchorRef::Relation("E1".into())),
            "{id} controller is {controller:?}"
        );
    }
    let g = client.layout("fig5", &ViewQuery::default()).await.map_err(e)?;
    let slot = |id: &str| g.arc(id).map(|a| a.segments[0].slot);
    ensure!(
        slot("E2") > slot("E1") && slot("E3") > slot("E1"),
        "slots {:?} {:?} {:?}",
        slot("E1"),
        slot("E2"),
        slot("E3")
    );
    let took = start.elapsed();
    ensure!(took < Duration::from_secs(1), "took {took:?}");
    Ok(format!("slots E1={} E2={} E3={}", slot("E1").unwrap(), slot("E2").unwrap(), slot("E3").unwrap()))
}

// "unlockable": two bracketings

async fn unlockable(client: &Client) -> Outcome {
    let mut trees = Vec::new();
    for id in ["unlockable-a", "unlockable-b"] {
        let doc = client.document(id).await.map_err(e)?;
        let roots = doc.root_relations();
        ensure!(roots.len() == 1, "{id} has {} roots", roots.len());
        trees.push(client.tree(id, &roots[0].id).await.map_err(e)?);
    }
    let (a, b) = (trees[0].bracketed(), trees[1].bracketed());
    ensure!(a == "[un [lock able]]", "a is {a}");
    ensure!(b == "[[un lock] able]", "b is {b}");
    ensure!(trees[0] != trees[1], "trees compare equal");
    Ok(format!("{a} vs {b}"))
}

// Same-format round trip through export and re-upload

async fn round_trip(client: &Client) -> Outcome {
    let entries = client.documents().await.map_err(e)?;
    let mut formats = BTreeSet::new();
    for entry in &entries {
        let export = client.export(&entry.id, None).await.map_err(e)?;
        let mut up = Upload { id: format!("rt-{}", entry.id), format: Some(entry.format), ..Upload::default() };
        if entry.format == SourceFormat::Brat {
            up.txt = export.files.get("txt").cloned();
            up.ann = export.files.get("ann").cloned();
        } else {
            up.content = export.files.values().next().cloned();
        }
        let back = client.upload(&up).await.map_err(e)?;
        ensure!(back.entries.len() == 1, "{} re-uploaded as {} documents", entry.id, back.entries.len());
        let original = client.document(&entry.id).await.map_err(e)?;
        let reparsed = client.document(&back.entries[0].id).await.map_err(e)?;
        ensure!(original.structurally_equal(&reparsed), "{} differs after round trip", entry.id);
        formats.insert(entry.format.to_string());
    }
    ensure!(formats.len() == 3, "only formats {formats:?}");
    Ok(format!(
        "{}/{} fixtures, formats {}",
        entries.len(),
        entries.len(),
        formats.into_iter().collect::<Vec<_>>().join(",")
    ))
}

// Acyclicity against transitive closure

const ELEMENTS: usize = 20;

fn has_cycle(doc: &Document) -> bool {
    let idx = |id: &str| id[1..].parse::<usize>().unwrap();
    // reach[i] has bit j set when j is reachable from i
    let mut reach = [0u32; ELEMENTS];
    for r in doc.relations.values() {
        for t in r.referenced_relations() {
            reach[idx(&r.id)] |= 1 << idx(t);
        }
    }
    for k in 0..ELEMENTS {
        for i in 0..ELEMENTS {
            if reach[i] & (1 << k) != 0 {
                reach[i] |= reach[k];
            }
        }
    }
    (0..ELEMENTS).any(|i| reach[i] & (1 << i) != 0)
}

fn acyclicity() -> Outcome {
    let start = Instant::now();
    let mut rejected = 0;
    for seed in 0..1000u64 {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut doc = Document::new("g", "a b c", SourceFormat::Brat);
        doc.tokenize_whitespace();
        doc = doc.add_mention(Mention::new("T1", "X", vec![Span::new(0, 1)])).map_err(e)?;
        for _ in 0..100 {
            let id = format!("R{}", rng.gen_range(0..ELEMENTS));
            let args = (0..rng.gen_range(2..=3))
                .map(|_| {
                    let t = if rng.gen_bool(0.8) {
                        AnchorRef::Relation(format!("R{}", rng.gen_range(0..ELEMENTS)))
                    } else {
                        AnchorRef::Mention("T1".into())
                    };
                    Argument::new("arg", t)
                })
                .collect();
            let rel = Relation::new(id.clone(), "r", None, args);
            let mut candidate = doc.clone();
            candidate.relations.insert(id.clone(), rel.clone());
            let result =
                if doc.relations.contains_key(&id) { doc.replace_relation(rel) } else { doc.add_relation(rel) };
            match result {
                Ok(next) => doc = next,
                Err(GraphError::CycleDetected(_)) => {
                    ensure!(has_cycle(&candidate), "seed {seed}: {id} rejected without a cycle");
                    rejected += 1;
                }
                Err(GraphError::DanglingReference { .. }) => {}
                Err(other) => return Err(format!("seed {seed}: {other}")),
            }
            ensure!(!has_cycle(&doc), "seed {seed}: document became cyclic");
        }
    }
    let took = start.elapsed();
    ensure!(took < Duration::from_secs(10), "took {took:?}");
    Ok(format!("1000 seeds x 100 attempts, {rejected} genuine cycles rejected"))
}

// Crossings: pairwise oracle and median over slot assignments

fn pairwise(segs: &[CrossingSegment]) -> usize {
    let mut n = 0;
    for a in segs {
        for b in segs {
            if !(a.left < b.left && b.left < a.right && a.right < b.right) {
                continue;
            }
            n += usize::from(match a.slot.cmp(&b.slot) {
                std::cmp::Ordering::Equal => true,
                std::cmp::Ordering::Greater => a.right_floor.is_some_and(|f| f < b.slot),
                std::cmp::Ordering::Less => b.left_floor.is_some_and(|f| f < a.slot),
            });
        }
    }
    n
}

fn segments_with(g: &LayoutGeometry, slots: &BTreeMap<&str, u32>) -> Vec<CrossingSegment> {
    g.arcs
        .iter()
        .flat_map(|a| a.segments.iter().map(move |s| (a, s)))
        .map(|(a, s)| {
            let floor_at = |x: f64| {
                s.drops.iter().filter(|d| d.x == x).map(|d| slots.get(d.target.as_str()).copied().unwrap_or(0)).min()
            };
            CrossingSegment {
                left: s.left,
                right: s.right,
                slot: slots[a.relation_id.as_str()],
                left_floor: floor_at(s.left),
                right_floor: floor_at(s.right),
            }
        })
        .collect()
}

fn for_each_permutation(n: usize, mut f: impl FnMut(&[u32])) {
    let mut p: Vec<u32> = (1..=n as u32).collect();
    let mut c = vec![0; n];
    f(&p);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            let j = if i % 2 == 0 { 0 } else { c[i] };
            p.swap(j, i);
            f(&p);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

fn row_instance(rng: &mut StdRng, arcs: usize) -> Document {
    let tokens = 16;
    let mut doc = Document::new("row", vec!["w"; tokens].join(" "), SourceFormat::Brat);
    doc.tokenize_whitespace();
    for i in 0..tokens {
        let id = format!("T{}", i + 1);
        doc.mentions.insert(id.clone(), Mention::new(id, "M", vec![Span::new(2 * i, 2 * i + 1)]));
    }
    for r in 0..arcs {
        let a = rng.gen_range(0..tokens);
        let b = (a + rng.gen_range(1..tokens)) % tokens;
        let second = if r > 0 && rng.gen_bool(0.25) {
            AnchorRef::Relation(format!("R{}", rng.gen_range(0..r) + 1))
        } else {
            AnchorRef::Mention(format!("T{}", b + 1))
        };
        let args = vec![Argument::new("a", AnchorRef::Mention(format!("T{}", a + 1))), Argument::new("b", second)];
        let id = format!("R{}", r + 1);
        doc.relations.insert(id.clone(), Relation::new(id, "r", None, args));
    }
    doc
}

fn crossings() -> Outcome {
    let start = Instant::now();
    let cfg = ViewConfig::with_width(10_000.0);
    let mut rng = StdRng::seed_from_u64(2024);
    let mut checked_median = 0;
    for i in 0..500 {
        let n = rng.gen_range(1..=12);
        let doc = row_instance(&mut rng, n);
        let g = layout(&doc, None, &cfg).map_err(e)?;
        ensure!(g.total_rows == 1, "instance {i} spans {} rows", g.total_rows);
        let own: BTreeMap<&str, u32> = g.arcs.iter().map(|a| (a.relation_id.as_str(), a.segments[0].slot)).collect();
        let actual = count_crossings(&g);
        let oracle = pairwise(&segments_with(&g, &own));
        ensure!(actual == oracle, "instance {i}: count_crossings {actual}, oracle {oracle}");
        if n <= 8 {
            let ids: Vec<&str> = g.arcs.iter().map(|a| a.relation_id.as_str()).collect();
            let mut counts = Vec::new();
            for_each_permutation(ids.len(), |p| {
                let slots = ids.iter().copied().zip(p.iter().copied()).collect();
                counts.push(pairwise(&segments_with(&g, &slots)));
            });
            counts.sort_unstable();
            let median = counts[counts.len() / 2];
            ensure!(actual <= median, "instance {i}: heuristic {actual} > median {median}");
            checked_median += 1;
        }
    }
    let took = start.elapsed();
    ensure!(took < Duration::from_secs(30), "took {took:?}");
    Ok(format!("500 instances exact, {checked_median} within median"))
}

// Progressive layout on a large synthetic document

fn progressive_local(doc: &Document) -> Outcome {
    let cfg = ViewConfig::with_width(800.0);
    let mut best = Duration::MAX;
    let mut win = None;
    for _ in 0..3 {
        let t = Instant::now();
        win = Some(layout_window(doc, None, &cfg, RowRange::new(0, 9)).map_err(e)?);
        best = best.min(t.elapsed());
    }
    let win = win.unwrap();
    let full = layout(doc, None, &cfg).map_err(e)?;
    // incident: the arc has a segment on one of rows 0..=9 in the full layout
    let incident = full.arcs.iter().filter(|a| a.segments.iter().any(|s| s.row <= 9)).count();
    ensure!(win.relations_visited == incident, "visited {} of {incident} incident", win.relations_visited);
    ensure!(incident < doc.relations.len(), "window touched every relation");
    ensure!(best < Duration::from_millis(100), "window took {best:?}");

    let mut rng = StdRng::seed_from_u64(77);
    for _ in 0..20 {
        let a = rng.gen_range(0..full.total_rows);
        let b = (a + rng.gen_range(0..12)).min(full.total_rows - 1);
        let w = layout_window(doc, None, &cfg, RowRange::new(a, b)).map_err(e)?;
        for r in a..=b {
            ensure!(w.row_view(r) == full.row_view(r), "row {r} differs in window {a}..{b}");
        }
    }
    Ok(format!(
        "{} of {} relations visited, {:.1} ms, 20 windows consistent",
        incident,
        doc.relations.len(),
        best.as_secs_f64() * 1e3
    ))
}

fn on_mentions(mut doc: Document) -> Document {
    let mut used = BTreeSet::new();
    let mut swap = |a: &mut AnchorRef| {
        if let AnchorRef::Token(i) = *a {
            used.insert(i);
            *a = AnchorRef::Mention(format!("T{}", 100_000 + i));
        }
    };
    for r in doc.relations.values_mut() {
        r.trigger.iter_mut().for_each(&mut swap);
        r.arguments.iter_mut().for_each(|arg| swap(&mut arg.target));
    }
    for i in used {
        let id = format!("T{}", 100_000 + i);
        doc.mentions.insert(id.clone(), Mention::new(id, "Word", vec![doc.tokens[i].span]));
    }
    doc
}

async fn progressive(client: &Client) -> Outcome {
    let doc = synthetic_document(10_000, 2_000, 9);
    ensure!(doc.tokens.len() == 10_000 && doc.relations.len() == 2_000, "synthetic size");
    let local = progressive_local(&doc)?;
    // the same window served over HTTP; BRAT has no token endpoints, so
    // those are re-anchored on one mention per token first
    let doc = on_mentions(doc);
    let (out, report) = serialize(&doc, SourceFormat::Brat).map_err(e)?;
    ensure!(report.is_empty(), "BRAT export lost {} elements", report.lines().len());
    let Serialized::Brat { txt, ann } = out else {
        return Err("BRAT export is not a pair".into());
    };
    let up = Upload {
        id: "big".into(),
        format: Some(SourceFormat::Brat),
        txt: Some(txt),
        ann: Some(ann),
        ..Upload::default()
    };
    let reparsed = up.parse().map_err(e)?.1.remove(0);
    ensure!(reparsed.structurally_equal(&doc), "BRAT reparse differs");
    client.upload(&up).await.map_err(e)?;
    let view = ViewQuery { width: Some(800.0), rows: Some("0..9".into()), ..ViewQuery::default() };
    let served = client.layout("big", &view).await.map_err(e)?;
    let direct = layout_window(&doc, None, &ViewConfig::with_width(800.0), RowRange::new(0, 9)).map_err(e)?;
    ensure!(served.relations_visited == direct.relations_visited, "service visited {}", served.relations_visited);
    for r in 0..=9 {
        ensure!(served.row_view(r) == direct.row_view(r), "served row {r} differs");
    }
    Ok(local)
}

// Diff replay through the service

async fn diff_replay(client: &Client) -> Outcome {
    let base = client.document("fig5").await.map_err(e)?;
    let up = |id: String| {
        let txt = std::fs::read_to_string(data().join("fig5.txt")).unwrap();
        let ann = std::fs::read_to_string(data().join("fig5.ann")).unwrap();
        Upload { id, format: Some(SourceFormat::Brat), txt: Some(txt), ann: Some(ann), ..Upload::default() }
    };
    let mut ops = 0;
    for seed in 0..200u64 {
        let script = random_session(base.clone(), seed, 30);
        let live_id = format!("live-{seed}");
        client.upload(&up(live_id.clone())).await.map_err(e)?;
        for entry in script.log() {
            client.apply(&live_id, &entry.op).await.map_err(|err| format!("seed {seed} seq {}: {err}", entry.seq))?;
            ops += 1;
        }
        let live = client.document(&live_id).await.map_err(e)?;
        ensure!(live.structurally_equal(script.document()), "seed {seed}: service state differs from script");
        let text = client.diff_text(&live_id).await.map_err(e)?;
        let diff = DiffLog::from_jsonl(&text).map_err(e)?;
        ensure!(diff.entries.len() <= 30, "seed {seed}: {} entries", diff.entries.len());

        let fresh = format!("fresh-{seed}");
        client.upload(&up(fresh.clone())).await.map_err(e)?;
        let replayed = client.replay(&fresh, &text).await.map_err(e)?;
        ensure!(replayed.content_hash == live.content_hash(), "seed {seed}: replay hash differs");
        let doc = client.document(&fresh).await.map_err(e)?;
        ensure!(doc.structurally_equal(&live), "seed {seed}: replayed document differs");
    }
    for seed in 0..50u64 {
        let s = random_presentation_session(base.clone(), seed, 20);
        let diff = s.export_diff();
        ensure!(diff.presentation_only(), "seed {seed}: not presentation-only");
        ensure!(replay(&base, &diff).map_err(e)?.structurally_equal(&base), "seed {seed}: base changed");
    }
    Ok(format!("200 sequences, {ops} ops replayed; 50 presentation-only diffs"))
}

// Determinism: CLI and service, two runs each

async fn determinism(client: &Client, url: &str) -> Outcome {
    let view = ViewQuery { width: Some(800.0), ..ViewQuery::default() };
    let mut checked = 0;
    for (file, id) in [
        ("fig5.ann", "fig5"),
        ("fig1.ann", "fig1"),
        ("fig1-syntax.conll", "fig1-syntax"),
        ("unlockable-a.ann", "unlockable-a"),
    ] {
        let input = data().join(file);
        let input = input.to_str().unwrap();
        let mut outputs = Vec::new();
        for server in [None, Some(url)] {
            for _ in 0..2 {
                let mut cmd = Command::new(env!("CARGO_BIN_EXE_tag"));
                if let Some(u) = server {
                    cmd.args(["--server", u]);
                }
                let out = cmd.args(["render", input, "--width", "800"]).output().map_err(e)?;
                ensure!(out.status.success(), "tag render {file}: {}", String::from_utf8_lossy(&out.stderr));
                outputs.push(String::from_utf8(out.stdout).map_err(e)?);
            }
        }
        for _ in 0..2 {
            outputs.push(client.svg(id, &view).await.map_err(e)?);
        }
        ensure!(outputs.iter().all(|o| *o == outputs[0]), "{file}: outputs differ");
        ensure!(outputs[0].starts_with("<?xml"), "{file}: not SVG");
        checked += 1;
    }
    Ok(format!("{checked} inputs, 6 renders each byte-identical"))
}

// Nothing browser-side is part of the build

fn no_browser() -> Outcome {
    let crates = Path::new(env!("CARGO_MANIFEST_DIR")).join("..");
    let mut names = Vec::new();
    for entry in std::fs::read_dir(&crates).map_err(e)? {
        let path = entry.map_err(e)?.path();
        if path.join("Cargo.toml").is_file() {
            names.push(path.file_name().unwrap().to_string_lossy().into_owned());
        }
    }
    names.sort();
    ensure!(!names.is_empty(), "no workspace crates found");
    ensure!(!names.iter().any(|n| n.contains("web")), "web crate in workspace: {names:?}");
    Ok(format!("crates {}; suite driven by HTTP client", names.join(",")))
}

fn report(name: &str, took: Duration, outcome: &Outcome) {
    let ms = took.as_secs_f64() * 1e3;
    match outcome {
        Ok(detail) => println!("PASS {name:<14} {ms:>9.1} ms  {detail}"),
        Err(why) => println!("FAIL {name:<14} {ms:>9.1} ms  {why}"),
    }
}

macro_rules! check {
    ($results:ident, $name:expr, $body:expr) => {{
        let t = Instant::now();
        let outcome = $body;
        report($name, t.elapsed(), &outcome);
        $results.push(outcome.is_ok());
    }};
}

#[tokio::main(flavor = "multi_thread")]
async fn main() -> ExitCode {
    let (store, problems) = Store::open(&data(), 800.0).expect("open data folder");
    assert!(problems.is_empty(), "{problems:?}");
    let (addr, _server) = spawn(router(Arc::new(store)), "127.0.0.1:0".parse().unwrap()).await.expect("bind");
    let url = format!("http://{addr}");
    let client = Client::new(&url).unwrap();

    let mut results = Vec::new();
    check!(results, "fig5", fig5(&client).await);
    check!(results, "unlockable", unlockable(&client).await);
    check!(results, "round-trip", round_trip(&client).await);
    check!(results, "acyclicity", acyclicity());
    check!(results, "crossings", crossings());
    check!(results, "progressive", progressive(&client).await);
    check!(results, "diff-replay", diff_replay(&client).await);
    check!(results, "determinism", determinism(&client, &url).await);
    check!(results, "no-browser", no_browser());

    let failed = results.iter().filter(|ok| !**ok).count();
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
