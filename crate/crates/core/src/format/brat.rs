//! BRAT standoff (`.txt` + `.ann`).
//!
//! Record kinds: `T` text-bound mentions, `E` events (trigger + role
//! arguments), `R` trigger-free relations, `A`/`M` attributes, `N` and `#`
//! metadata. Event and relation arguments may name other events or
//! relations.
//!
//! Features of the graph model that BRAT lacks are written as `#` notes whose
//! body starts with `tag:` (`tag:layer`, `tag:direction`, `tag:label`,
//! `tag:untyped`); the reader consumes them instead of keeping them as
//! metadata.

use std::collections::{BTreeMap, BTreeSet};

use super::{natural_key, ElementKind, FormatError, Report};
use crate::graph::{
    AnchorRef, Argument, Attribute, Directionality, Document, Layer, Mention, MetaRecord, Relation, SourceFormat, Span,
};

const NOTE_PREFIX: &str = "tag:";

enum Pending {
    Event { line: usize, id: String, ty: String, trigger: String, args: Vec<(String, String)> },
    Relation { line: usize, id: String, ty: String, args: Vec<(String, String)> },
    Attribute { line: usize, id: String, name: String, target: String, value: Option<String> },
    Note { line: usize, key: String, target: String, value: String },
}

fn malformed(line: usize, reason: impl Into<String>) -> FormatError {
    FormatError::MalformedLine { locator: format!("line {line}"), reason: reason.into() }
}

/// Parses a BRAT text/annotation pair into a [`Document`] with
/// whitespace tokens.
pub fn parse_brat(id: &str, txt: &str, ann: &str) -> Result<(Document, Report), FormatError> {
    let mut doc = Document::new(id, txt, SourceFormat::Brat);
    doc.tokenize_whitespace();
    let mut report = Report::new(SourceFormat::Brat);
    let index = doc.char_index();
    let len = index.char_len();
    let mut pending = Vec::new();
    let mut seen_ids: BTreeSet<String> = BTreeSet::new();

    for (n, raw) in ann.lines().enumerate() {
        let line = n + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        if raw.trim().is_empty() {
            continue;
        }
        let (rid, body) = raw.split_once('\t').ok_or_else(|| malformed(line, "missing tab after id"))?;
        let kind = rid.chars().next().unwrap_or(' ');
        if matches!(kind, 'T' | 'E' | 'R' | 'A' | 'M') && !seen_ids.insert(rid.to_string()) {
            return Err(FormatError::DuplicateId { locator: format!("line {line}"), id: rid.to_string() });
        }
        match kind {
            'T' => {
                let (head, text) = body.split_once('\t').ok_or_else(|| malformed(line, "missing text column"))?;
                let (ty, offsets) = head.split_once(' ').ok_or_else(|| malformed(line, "expected TYPE START END"))?;
                let mut anchors = Vec::new();
                for piece in offsets.split(';') {
                    let nums: Vec<&str> = piece.split_whitespace().collect();
                    if nums.len() != 2 {
                        return Err(malformed(line, format!("bad offset pair {piece:?}")));
                    }
                    let start: usize = nums[0].parse().map_err(|_| malformed(line, "non-numeric offset"))?;
                    let end: usize = nums[1].parse().map_err(|_| malformed(line, "non-numeric offset"))?;
                    let span = Span::new(start, end);
                    if start >= end {
                        return Err(malformed(line, format!("empty or reversed span {start} {end}")));
                    }
                    if end > len {
                        return Err(FormatError::OffsetOutOfBounds { locator: format!("line {line}"), span, len });
                    }
                    anchors.push(span);
                }
                anchors.sort();
                if anchors.windows(2).any(|w| w[0].end > w[1].start) {
                    return Err(malformed(line, "overlapping fragments"));
                }
                let found: Vec<&str> = anchors.iter().map(|s| index.slice(txt, *s).unwrap_or("")).collect();
                let found = found.join(" ");
                if found != text {
                    return Err(FormatError::TextMismatch {
                        locator: format!("line {line}"),
                        expected: text.to_string(),
                        found,
                    });
                }
                doc.mentions.insert(rid.to_string(), Mention::new(rid, ty, anchors));
            }
            'E' => {
                let mut items = body.split_whitespace();
                let first = items.next().ok_or_else(|| malformed(line, "empty event"))?;
                let (ty, trigger) = first.split_once(':').ok_or_else(|| malformed(line, "expected TYPE:TRIGGER"))?;
                let args = role_pairs(line, items)?;
                if args.is_empty() {
                    report.drop(format!("line {line}"), format!("event {rid} has no arguments"), ElementKind::Relation);
                    seen_ids.remove(rid);
                    continue;
                }
                pending.push(Pending::Event {
                    line,
                    id: rid.to_string(),
                    ty: ty.to_string(),
                    trigger: trigger.to_string(),
                    args,
                });
            }
            'R' => {
                let mut items = body.split_whitespace();
                let ty = items.next().ok_or_else(|| malformed(line, "empty relation"))?;
                let args = role_pairs(line, items)?;
                if args.len() < 2 {
                    return Err(malformed(line, "relation needs two arguments"));
                }
                pending.push(Pending::Relation { line, id: rid.to_string(), ty: ty.to_string(), args });
            }
            'A' | 'M' => {
                let parts: Vec<&str> = body.split_whitespace().collect();
                if parts.len() < 2 || parts.len() > 3 {
                    return Err(malformed(line, "expected NAME TARGET [VALUE]"));
                }
                pending.push(Pending::Attribute {
                    line,
                    id: rid.to_string(),
                    name: parts[0].to_string(),
                    target: parts[1].to_string(),
                    value: parts.get(2).map(|s| s.to_string()),
                });
            }
            '#' if body.starts_with(NOTE_PREFIX) => {
                let (head, value) = body.split_once('\t').unwrap_or((body, ""));
                let (key, target) = head[NOTE_PREFIX.len()..]
                    .split_once(' ')
                    .ok_or_else(|| malformed(line, "expected tag:KEY TARGET"))?;
                pending.push(Pending::Note {
                    line,
                    key: key.to_string(),
                    target: target.trim().to_string(),
                    value: value.to_string(),
                });
            }
            'N' | '#' | '*' => doc.metadata.push(MetaRecord { id: rid.to_string(), body: body.to_string() }),
            _ => report.drop(format!("line {line}"), format!("unsupported record {raw:?}"), ElementKind::Line),
        }
    }

    let kinds: BTreeMap<String, char> = pending
        .iter()
        .filter_map(|p| match p {
            Pending::Event { id, .. } => Some((id.clone(), 'E')),
            Pending::Relation { id, .. } => Some((id.clone(), 'R')),
            _ => None,
        })
        .chain(doc.mentions.keys().map(|k| (k.clone(), 'T')))
        .collect();
    let resolve = |line: usize, owner: &str, target: &str| -> Result<AnchorRef, FormatError> {
        match kinds.get(target) {
            Some('T') => Ok(AnchorRef::Mention(target.to_string())),
            Some(_) => Ok(AnchorRef::Relation(target.to_string())),
            None => Err(FormatError::DanglingReference {
                locator: format!("line {line}"),
                owner: owner.to_string(),
                target: target.to_string(),
            }),
        }
    };
    let mut lines: BTreeMap<String, usize> = BTreeMap::new();
    let mut deferred = Vec::new();
    for p in pending {
        match p {
            Pending::Event { line, id, ty, trigger, args } => {
                let trigger = resolve(line, &id, &trigger)?;
                let args = args
                    .into_iter()
                    .map(|(role, t)| Ok(Argument::new(role, resolve(line, &id, &t)?)))
                    .collect::<Result<Vec<_>, FormatError>>()?;
                lines.insert(id.clone(), line);
                doc.relations.insert(id.clone(), Relation::new(id, ty, Some(trigger), args));
            }
            Pending::Relation { line, id, ty, args } => {
                let args = args
                    .into_iter()
                    .map(|(role, t)| Ok(Argument::new(role, resolve(line, &id, &t)?)))
                    .collect::<Result<Vec<_>, FormatError>>()?;
                lines.insert(id.clone(), line);
                doc.relations.insert(id.clone(), Relation::new(id, ty, None, args));
            }
            other => deferred.push(other),
        }
    }
    for p in deferred {
        match p {
            Pending::Attribute { line, id, name, target, value } => {
                let attr = Attribute { id, name, value };
                if let Some(m) = doc.mentions.get_mut(&target) {
                    m.attributes.push(attr);
                } else if let Some(r) = doc.relations.get_mut(&target) {
                    r.attributes.push(attr);
                } else {
                    return Err(FormatError::DanglingReference {
                        locator: format!("line {line}"),
                        owner: attr.id,
                        target,
                    });
                }
            }
            Pending::Note { line, key, target, value } => {
                apply_note(&mut doc, &mut report, line, &key, &target, &value)
            }
            _ => unreachable!(),
        }
    }
    if let Some(id) = doc.find_cycle() {
        let line = lines.get(&id).copied().unwrap_or(0);
        return Err(FormatError::CycleDetected { locator: format!("line {line}"), id });
    }
    Ok((doc, report))
}

fn role_pairs<'a>(line: usize, items: impl Iterator<Item = &'a str>) -> Result<Vec<(String, String)>, FormatError> {
    items
        .map(|item| {
            item.split_once(':')
                .map(|(r, t)| (r.to_string(), t.to_string()))
                .ok_or_else(|| malformed(line, format!("expected ROLE:ID, got {item:?}")))
        })
        .collect()
}

fn apply_note(doc: &mut Document, report: &mut Report, line: usize, key: &str, target: &str, value: &str) {
    let here = format!("line {line}");
    let (layer, label, type_name, dir) = if let Some(m) = doc.mentions.get_mut(target) {
        (&mut m.layer, &mut m.label, &mut m.type_name, None)
    } else if let Some(r) = doc.relations.get_mut(target) {
        (&mut r.layer, &mut r.label, &mut r.type_name, Some(&mut r.directionality))
    } else {
        report.drop(here, format!("note for unknown element {target}"), ElementKind::Metadata);
        return;
    };
    match (key, value) {
        ("layer", "syntactic") => *layer = Layer::Syntactic,
        ("layer", "semantic") => *layer = Layer::Semantic,
        ("label", v) => *label = v.to_string(),
        ("untyped", _) => *type_name = None,
        ("direction", v) if dir.is_some() => {
            let d = dir.expect("checked");
            match v {
                "undirected" => *d = Directionality::Undirected,
                "bidirectional" => *d = Directionality::Bidirectional,
                "directed" => *d = Directionality::Directed,
                _ => report.warn(here, format!("unknown direction {v:?}")),
            }
        }
        _ => report.drop(here, format!("unknown note tag:{key}"), ElementKind::Metadata),
    }
}

/// Writes a document as a BRAT text/annotation pair.
///
/// Elements BRAT cannot hold (token endpoints, empty spans) are dropped and
/// listed in the report together with every relation that depended on them.
pub fn serialize_brat(doc: &Document) -> (String, String, Report) {
    let mut report = Report::new(SourceFormat::Brat);
    let mut out: Vec<String> = Vec::new();
    let mut notes: Vec<NoteLine> = Vec::new();
    let index = doc.char_index();

    let mut mentions: Vec<&Mention> = doc.mentions.values().collect();
    mentions.sort_by_key(|m| natural_key(&m.id));
    let mut relations: Vec<&Relation> = doc.relations.values().collect();
    relations.sort_by_key(|r| natural_key(&r.id));

    // Drop what BRAT cannot express, then everything depending on it.
    let mut dropped: BTreeSet<&str> = BTreeSet::new();
    for m in &mentions {
        if m.anchors.iter().any(|s| s.is_empty()) {
            report.drop(&m.id, "empty span", ElementKind::Mention);
            dropped.insert(&m.id);
        }
    }
    loop {
        let before = dropped.len();
        for r in &relations {
            if dropped.contains(r.id.as_str()) {
                continue;
            }
            let reason = r.endpoints().find_map(|e| match e {
                AnchorRef::Token(i) => Some(format!("token endpoint token:{i}")),
                other => {
                    other.element_id().filter(|id| dropped.contains(id)).map(|id| format!("depends on dropped {id}"))
                }
            });
            if let Some(reason) = reason {
                report.drop(&r.id, reason, ElementKind::Relation);
                dropped.insert(&r.id);
            }
        }
        if dropped.len() == before {
            break;
        }
    }

    // BRAT infers the record kind from the id prefix; rename misfits.
    let mut renames: BTreeMap<String, String> = BTreeMap::new();
    let mut taken: BTreeSet<String> = doc.mentions.keys().chain(doc.relations.keys()).cloned().collect();
    let mut rename = |id: &str, prefix: char, report: &mut Report| -> String {
        if id.starts_with(prefix) && id.len() > 1 && !id.contains(char::is_whitespace) {
            return id.to_string();
        }
        let fresh = (1..).map(|n| format!("{prefix}{n}")).find(|c| !taken.contains(c)).expect("unbounded");
        taken.insert(fresh.clone());
        report.warn(id, format!("renamed to {fresh}"));
        fresh
    };
    for m in mentions.iter().filter(|m| !dropped.contains(m.id.as_str())) {
        let new = rename(&m.id, 'T', &mut report);
        renames.insert(m.id.clone(), new);
    }
    for r in relations.iter().filter(|r| !dropped.contains(r.id.as_str())) {
        let prefix = if r.trigger.is_some() { 'E' } else { 'R' };
        let new = rename(&r.id, prefix, &mut report);
        renames.insert(r.id.clone(), new);
    }
    let name = |a: &AnchorRef| a.element_id().map(|id| renames[id].clone()).unwrap_or_default();

    let mut attrs: Vec<(String, String)> = Vec::new();
    for m in mentions.iter().filter(|m| !dropped.contains(m.id.as_str())) {
        let id = &renames[&m.id];
        let ty = m.type_name.as_deref().unwrap_or(&m.label);
        let offsets: Vec<String> = m.anchors.iter().map(|s| format!("{} {}", s.start, s.end)).collect();
        let text: Vec<&str> = m.anchors.iter().map(|s| index.slice(&doc.text, *s).unwrap_or("")).collect();
        out.push(format!("{id}\t{} {}\t{}", ty, offsets.join(";"), text.join(" ")));
        push_common(&mut notes, &mut attrs, id, &m.label, &m.type_name, m.layer, &m.attributes);
    }
    for r in relations.iter().filter(|r| !dropped.contains(r.id.as_str())) {
        let id = &renames[&r.id];
        let ty = r.type_name.as_deref().unwrap_or(&r.label);
        let args: Vec<String> = r.arguments.iter().map(|a| format!("{}:{}", a.role, name(&a.target))).collect();
        match &r.trigger {
            Some(t) => out.push(format!("{id}\t{}:{} {}", ty, name(t), args.join(" "))),
            None => out.push(format!("{id}\t{} {}", ty, args.join(" "))),
        }
        if r.directionality != Directionality::Directed {
            let d = match r.directionality {
                Directionality::Undirected => "undirected",
                _ => "bidirectional",
            };
            notes.push(("direction".into(), id.clone(), d.into()));
        }
        push_common(&mut notes, &mut attrs, id, &r.label, &r.type_name, r.layer, &r.attributes);
    }

    let mut used_attr_ids: BTreeSet<String> = BTreeSet::new();
    for (aid, body) in attrs {
        let aid = if aid.starts_with('A') && aid.len() > 1 && used_attr_ids.insert(aid.clone()) {
            aid
        } else {
            let fresh = (1..).map(|n| format!("A{n}")).find(|c| !used_attr_ids.contains(c)).expect("unbounded");
            used_attr_ids.insert(fresh.clone());
            fresh
        };
        out.push(format!("{aid}\t{body}"));
    }
    for meta in &doc.metadata {
        out.push(format!("{}\t{}", meta.id, meta.body));
    }
    for (n, (key, target, value)) in notes.iter().enumerate() {
        out.push(format!("#tag{}\t{NOTE_PREFIX}{key} {target}\t{value}", n + 1));
    }

    let mut ann = out.join("\n");
    if !ann.is_empty() {
        ann.push('\n');
    }
    (doc.text.clone(), ann, report)
}

type NoteLine = (String, String, String);

fn push_common(
    notes: &mut Vec<NoteLine>,
    attrs: &mut Vec<(String, String)>,
    id: &str,
    label: &str,
    ty: &Option<String>,
    layer: Layer,
    attributes: &[Attribute],
) {
    if layer == Layer::Syntactic {
        notes.push(("layer".into(), id.to_string(), "syntactic".into()));
    }
    match ty {
        Some(t) if t != label => notes.push(("label".into(), id.to_string(), label.to_string())),
        None => notes.push(("untyped".into(), id.to_string(), String::new())),
        _ => {}
    }
    for a in attributes {
        let body = match &a.value {
            Some(v) => format!("{} {} {}", a.name, id, v),
            None => format!("{} {}", a.name, id),
        };
        attrs.push((a.id.clone(), body));
    }
}
