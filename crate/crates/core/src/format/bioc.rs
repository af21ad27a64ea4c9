//! BioC XML collections.
//!
//! Passages are concatenated with a blank line between them and annotation
//! offsets are rebased onto that text; each passage is kept as a segment so
//! the writer can restore the original offsets. Relations are trigger-free
//! unless a node has the role `trigger`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use roxmltree::Node;

use super::{natural_key, ElementKind, FormatError, Report};
use crate::graph::{
    AnchorRef, Argument, Attribute, Directionality, Document, Layer, Mention, MetaRecord, Relation, Segment,
    SegmentKind, SourceFormat, Span,
};

const PASSAGE_SEPARATOR: &str = "\n\n";
const COLLECTION_KEYS: [&str; 3] = ["source", "date", "key"];

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|c| c.has_tag_name(name))
}

fn child_text(node: Node, name: &str) -> Option<String> {
    child(node, name).map(|c| c.text().unwrap_or("").to_string())
}

fn infons(node: Node) -> Vec<(String, String)> {
    node.children()
        .filter(|c| c.has_tag_name("infon"))
        .map(|c| (c.attribute("key").unwrap_or("").to_string(), c.text().unwrap_or("").to_string()))
        .collect()
}

fn locator(node: Node) -> String {
    match node.attribute("id") {
        Some(id) => format!("<{} id={id}>", node.tag_name().name()),
        None => format!("<{}>", node.tag_name().name()),
    }
}

fn number(node: Node, raw: Option<&str>, what: &str) -> Result<usize, FormatError> {
    let raw =
        raw.ok_or_else(|| FormatError::MalformedLine { locator: locator(node), reason: format!("missing {what}") })?;
    raw.trim().parse().map_err(|_| FormatError::MalformedLine {
        locator: locator(node),
        reason: format!("{what} {raw:?} is not a number"),
    })
}

/// Parses every `<document>` of a collection. Collection-level source, date
/// and key become metadata records of each document.
pub fn parse_bioc(input: &str) -> Result<(Vec<Document>, Report), FormatError> {
    let options = roxmltree::ParsingOptions { allow_dtd: true, ..Default::default() };
    let xml = roxmltree::Document::parse_with_options(input, options)
        .map_err(|e| FormatError::XmlMalformed(e.to_string()))?;
    let root = xml.root_element();
    if !root.has_tag_name("collection") {
        return Err(FormatError::XmlMalformed(format!(
            "root element is <{}>, not <collection>",
            root.tag_name().name()
        )));
    }
    let mut report = Report::new(SourceFormat::Bioc);
    let collection_meta: Vec<MetaRecord> = COLLECTION_KEYS
        .iter()
        .filter_map(|k| child_text(root, k).map(|body| MetaRecord { id: (*k).to_string(), body }))
        .collect();
    let mut docs = Vec::new();
    for (n, node) in root.children().filter(|c| c.has_tag_name("document")).enumerate() {
        let id = child_text(node, "id").unwrap_or_else(|| format!("doc{}", n + 1));
        let mut doc = parse_document(node, &id, &mut report)?;
        let mut meta = collection_meta.clone();
        meta.append(&mut doc.metadata);
        doc.metadata = meta;
        docs.push(doc);
    }
    Ok((docs, report))
}

fn parse_document(node: Node, id: &str, report: &mut Report) -> Result<Document, FormatError> {
    let mut text = String::new();
    let mut segments = Vec::new();
    let mut pending_mentions = Vec::new();
    let mut relation_nodes = Vec::new();
    let mut pos = 0usize;

    for (k, passage) in node.children().filter(|c| c.has_tag_name("passage")).enumerate() {
        if k > 0 {
            text.push_str(PASSAGE_SEPARATOR);
            pos += PASSAGE_SEPARATOR.chars().count();
        }
        let source_offset = number(passage, child_text(passage, "offset").as_deref(), "passage offset")?;
        let body = child_text(passage, "text").unwrap_or_default();
        let len = body.chars().count();
        for sentence in passage.children().filter(|c| c.has_tag_name("sentence")) {
            report.drop(locator(sentence), "sentence elements are not imported", ElementKind::Line);
        }
        for ann in passage.children().filter(|c| c.has_tag_name("annotation")) {
            let mut anchors = Vec::new();
            for loc in ann.children().filter(|c| c.has_tag_name("location")) {
                let offset = number(loc, loc.attribute("offset"), "location offset")?;
                let length = number(loc, loc.attribute("length"), "location length")?;
                let local = offset.checked_sub(source_offset).filter(|l| l + length <= len).ok_or_else(|| {
                    FormatError::OffsetOutOfBounds {
                        locator: locator(ann),
                        span: Span::new(offset, offset + length),
                        len: source_offset + len,
                    }
                })?;
                if length == 0 {
                    return Err(FormatError::MalformedLine {
                        locator: locator(ann),
                        reason: "zero-length location".into(),
                    });
                }
                anchors.push(Span::new(pos + local, pos + local + length));
            }
            pending_mentions.push((ann, anchors, child_text(ann, "text")));
        }
        relation_nodes.extend(passage.children().filter(|c| c.has_tag_name("relation")));
        text.push_str(&body);
        segments.push(Segment {
            kind: SegmentKind::Passage,
            span: Span::new(pos, pos + len),
            source_offset: Some(source_offset),
            infons: infons(passage).into_iter().collect(),
        });
        pos += len;
    }
    relation_nodes.extend(node.children().filter(|c| c.has_tag_name("relation")));

    let mut doc = Document::new(id, text, SourceFormat::Bioc);
    doc.tokenize_whitespace();
    doc.segments = segments;
    for (key, value) in infons(node) {
        doc.metadata.push(MetaRecord { id: format!("infon:{key}"), body: value });
    }

    let index = doc.char_index();
    let mut attr_seq = 0usize;
    let mut next_attr = || {
        attr_seq += 1;
        format!("A{attr_seq}")
    };
    let mut seen = BTreeSet::new();
    for (ann, mut anchors, expected) in pending_mentions {
        let mid = ann.attribute("id").map(str::to_string).ok_or_else(|| FormatError::MalformedLine {
            locator: locator(ann),
            reason: "annotation without id".into(),
        })?;
        if !seen.insert(mid.clone()) {
            return Err(FormatError::DuplicateId { locator: locator(ann), id: mid });
        }
        if anchors.is_empty() {
            return Err(FormatError::MalformedLine {
                locator: locator(ann),
                reason: "annotation without location".into(),
            });
        }
        anchors.sort();
        if let Some(expected) = expected {
            let found: Vec<&str> = anchors.iter().map(|s| index.slice(&doc.text, *s).unwrap_or("")).collect();
            let joined = found.join(" ");
            if joined != expected && found.concat() != expected {
                return Err(FormatError::TextMismatch { locator: locator(ann), expected, found: joined });
            }
        }
        let (common, attributes) = split_infons(infons(ann), &mut next_attr);
        let mut m = Mention::new(mid.clone(), common.label.clone().unwrap_or_default(), anchors);
        m.type_name = common.type_name;
        if let Some(label) = common.label.or_else(|| m.type_name.clone()) {
            m.label = label;
        }
        m.layer = common.layer;
        m.attributes = attributes;
        doc.check_anchors(&m)?;
        doc.mentions.insert(mid, m);
    }

    let relation_ids: BTreeSet<String> =
        relation_nodes.iter().filter_map(|r| r.attribute("id").map(str::to_string)).collect();
    for rnode in relation_nodes {
        let rid = rnode.attribute("id").map(str::to_string).ok_or_else(|| FormatError::MalformedLine {
            locator: locator(rnode),
            reason: "relation without id".into(),
        })?;
        if !seen.insert(rid.clone()) {
            return Err(FormatError::DuplicateId { locator: locator(rnode), id: rid });
        }
        let mut trigger = None;
        let mut args = Vec::new();
        for n in rnode.children().filter(|c| c.has_tag_name("node")) {
            let refid = n.attribute("refid").unwrap_or("").to_string();
            let target = if doc.mentions.contains_key(&refid) {
                AnchorRef::Mention(refid)
            } else if relation_ids.contains(&refid) {
                AnchorRef::Relation(refid)
            } else {
                return Err(FormatError::UnknownRefId { relation: rid, refid });
            };
            let role = n.attribute("role").unwrap_or("").to_string();
            if role == "trigger" && trigger.is_none() {
                trigger = Some(target);
            } else {
                args.push(Argument::new(role, target));
            }
        }
        let (common, attributes) = split_infons(infons(rnode), &mut next_attr);
        let mut rel = Relation::new(rid.clone(), String::new(), trigger, args);
        rel.type_name = common.type_name;
        rel.label = common.label.or_else(|| rel.type_name.clone()).unwrap_or_default();
        rel.layer = common.layer;
        rel.directionality = common.direction;
        rel.attributes = attributes;
        crate::graph::check_shape(&rel)?;
        doc.relations.insert(rid, rel);
    }
    if let Some(id) = doc.find_cycle() {
        return Err(FormatError::CycleDetected { locator: format!("<relation id={id}>"), id });
    }
    Ok(doc)
}

struct Common {
    type_name: Option<String>,
    label: Option<String>,
    layer: Layer,
    direction: Directionality,
}

fn split_infons(infons: Vec<(String, String)>, next_id: &mut impl FnMut() -> String) -> (Common, Vec<Attribute>) {
    let mut common =
        Common { type_name: None, label: None, layer: Layer::Semantic, direction: Directionality::Directed };
    let mut attributes = Vec::new();
    for (key, value) in infons {
        match key.as_str() {
            "type" => common.type_name = Some(value),
            "label" => common.label = Some(value),
            "layer" if value == "syntactic" => common.layer = Layer::Syntactic,
            "layer" if value == "semantic" => {}
            "direction" if value == "undirected" => common.direction = Directionality::Undirected,
            "direction" if value == "bidirectional" => common.direction = Directionality::Bidirectional,
            "direction" if value == "directed" => {}
            _ => attributes.push(Attribute { id: next_id(), name: key, value: (!value.is_empty()).then_some(value) }),
        }
    }
    (common, attributes)
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

fn write_infon(out: &mut String, indent: &str, key: &str, value: &str) {
    let _ = writeln!(out, "{indent}<infon key=\"{}\">{}</infon>", escape(key), escape(value));
}

fn write_common(out: &mut String, indent: &str, label: &str, ty: &Option<String>, layer: Layer, attrs: &[Attribute]) {
    if let Some(t) = ty {
        write_infon(out, indent, "type", t);
    }
    if ty.as_deref() != Some(label) {
        write_infon(out, indent, "label", label);
    }
    if layer == Layer::Syntactic {
        write_infon(out, indent, "layer", "syntactic");
    }
    for a in attrs {
        write_infon(out, indent, &a.name, a.value.as_deref().unwrap_or(""));
    }
}

/// Writes documents as one BioC collection. Relations are written at
/// document level; token endpoints cannot be expressed and are dropped
/// together with relations that depend on them.
pub fn serialize_bioc(docs: &[Document]) -> (String, Report) {
    let mut report = Report::new(SourceFormat::Bioc);
    let mut out = String::from(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<!DOCTYPE collection SYSTEM \"BioC.dtd\">\n<collection>\n",
    );
    let first_meta = docs.first().map(|d| d.metadata.as_slice()).unwrap_or(&[]);
    for key in COLLECTION_KEYS {
        let body = first_meta.iter().find(|m| m.id == key).map(|m| m.body.as_str()).unwrap_or("");
        let _ = writeln!(out, "  <{key}>{}</{key}>", escape(body));
    }
    for doc in docs {
        write_document(&mut out, doc, &mut report);
    }
    out.push_str("</collection>\n");
    (out, report)
}

fn write_document(out: &mut String, doc: &Document, report: &mut Report) {
    let index = doc.char_index();
    let _ = writeln!(out, "  <document>\n    <id>{}</id>", escape(&doc.id));
    for meta in &doc.metadata {
        if let Some(key) = meta.id.strip_prefix("infon:") {
            write_infon(out, "    ", key, &meta.body);
        } else if !COLLECTION_KEYS.contains(&meta.id.as_str()) {
            report.drop(&meta.id, "metadata record", ElementKind::Metadata);
        }
    }

    let mut passages: Vec<(Span, usize, BTreeMap<String, String>)> = doc
        .segments
        .iter()
        .filter(|s| s.kind == SegmentKind::Passage)
        .map(|s| (s.span, s.source_offset.unwrap_or(s.span.start), s.infons.clone()))
        .collect();
    if passages.is_empty() {
        passages.push((Span::new(0, doc.char_len()), 0, BTreeMap::new()));
    }
    let to_source = |offset: usize| -> usize {
        passages
            .iter()
            .find(|(span, _, _)| span.start <= offset && offset <= span.end)
            .map(|(span, src, _)| offset - span.start + src)
            .unwrap_or(offset)
    };

    let mut mentions: Vec<&Mention> = doc.mentions.values().collect();
    mentions.sort_by_key(|m| natural_key(&m.id));
    for (span, source_offset, infons) in &passages {
        out.push_str("    <passage>\n");
        for (k, v) in infons {
            write_infon(out, "      ", k, v);
        }
        let _ = writeln!(out, "      <offset>{source_offset}</offset>");
        let _ = writeln!(out, "      <text>{}</text>", escape(index.slice(&doc.text, *span).unwrap_or("")));
        for m in mentions
            .iter()
            .filter(|m| span.start <= m.anchors[0].start && m.anchors[0].start < span.end.max(span.start + 1))
        {
            let _ = writeln!(out, "      <annotation id=\"{}\">", escape(&m.id));
            write_common(out, "        ", &m.label, &m.type_name, m.layer, &m.attributes);
            for a in &m.anchors {
                let _ = writeln!(out, "        <location offset=\"{}\" length=\"{}\"/>", to_source(a.start), a.len());
            }
            let parts: Vec<&str> = m.anchors.iter().map(|s| index.slice(&doc.text, *s).unwrap_or("")).collect();
            let _ = writeln!(out, "        <text>{}</text>", escape(&parts.join(" ")));
            out.push_str("      </annotation>\n");
        }
        out.push_str("    </passage>\n");
    }

    let mut dropped: BTreeSet<&str> = BTreeSet::new();
    loop {
        let before = dropped.len();
        for r in doc.relations.values() {
            if dropped.contains(r.id.as_str()) {
                continue;
            }
            let reason = r.endpoints().find_map(|e| match e {
                AnchorRef::Token(i) => Some(format!("token endpoint token:{i}")),
                AnchorRef::Relation(x) if dropped.contains(x.as_str()) => Some(format!("depends on dropped {x}")),
                _ => None,
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
    let mut relations: Vec<&Relation> = doc.relations.values().filter(|r| !dropped.contains(r.id.as_str())).collect();
    relations.sort_by_key(|r| natural_key(&r.id));
    for r in relations {
        let _ = writeln!(out, "    <relation id=\"{}\">", escape(&r.id));
        write_common(out, "      ", &r.label, &r.type_name, r.layer, &r.attributes);
        match r.directionality {
            Directionality::Directed => {}
            Directionality::Undirected => write_infon(out, "      ", "direction", "undirected"),
            Directionality::Bidirectional => write_infon(out, "      ", "direction", "bidirectional"),
        }
        let node = |out: &mut String, target: &AnchorRef, role: &str| {
            let id = target.element_id().unwrap_or("");
            let _ = writeln!(out, "      <node refid=\"{}\" role=\"{}\"/>", escape(id), escape(role));
        };
        if let Some(t) = &r.trigger {
            node(out, t, "trigger");
        }
        for a in &r.arguments {
            node(out, &a.target, &a.role);
        }
        out.push_str("    </relation>\n");
    }
    out.push_str("  </document>\n");
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_PASSAGES: &str = r#"<collection><source>s</source><date>d</date><key>k</key>
<document><id>D1</id>
<passage><infon key="type">title</infon><offset>0</offset><text>p53 binds</text>
<annotation id="T1"><infon key="type">Protein</infon><infon key="score">0.9</infon><location offset="0" length="3"/><text>p53</text></annotation>
</passage>
<passage><offset>10</offset><text>MDM2 here</text>
<annotation id="T2"><infon key="type">Protein</infon><location offset="10" length="4"/><text>MDM2</text></annotation>
<relation id="R1"><infon key="type">Binding</infon><node refid="T1" role="Theme"/><node refid="T2" role="Theme"/></relation>
</passage></document></collection>"#;

    #[test]
    fn offsets_are_rebased() {
        let (docs, _) = parse_bioc(TWO_PASSAGES).unwrap();
        let doc = &docs[0];
        assert_eq!(doc.text, "p53 binds\n\nMDM2 here");
        assert_eq!(doc.mentions["T2"].anchors, vec![Span::new(11, 15)]);
        assert_eq!(doc.mention_surface(&doc.mentions["T2"]), "MDM2");
        assert_eq!(doc.mentions["T1"].attributes[0].name, "score");
        assert_eq!(doc.relations["R1"].trigger, None);
        assert_eq!(doc.segments[1].source_offset, Some(10));
        assert!(doc.metadata.iter().any(|m| m.id == "source" && m.body == "s"));
    }

    #[test]
    fn round_trip() {
        let (docs, _) = parse_bioc(TWO_PASSAGES).unwrap();
        let (xml, report) = serialize_bioc(&docs);
        assert!(report.is_empty(), "{report:?}");
        let (again, _) = parse_bioc(&xml).unwrap();
        assert!(docs[0].structurally_equal(&again[0]));
        assert_eq!(again[0].segments, docs[0].segments);
    }

    #[test]
    fn unknown_refid() {
        let xml = TWO_PASSAGES.replace("refid=\"T2\"", "refid=\"T9\"");
        assert_eq!(
            parse_bioc(&xml).unwrap_err(),
            FormatError::UnknownRefId { relation: "R1".into(), refid: "T9".into() }
        );
    }

    #[test]
    fn malformed_xml() {
        assert!(matches!(parse_bioc("<collection><document>"), Err(FormatError::XmlMalformed(_))));
    }

    #[test]
    fn location_outside_passage() {
        let xml = TWO_PASSAGES.replace("offset=\"10\" length=\"4\"", "offset=\"18\" length=\"4\"");
        assert!(matches!(parse_bioc(&xml), Err(FormatError::OffsetOutOfBounds { .. })));
    }

    #[test]
    fn trigger_role_and_direction() {
        let xml = TWO_PASSAGES.replace(
            "<infon key=\"type\">Binding</infon><node refid=\"T1\" role=\"Theme\"/>",
            "<infon key=\"type\">Binding</infon><infon key=\"direction\">undirected</infon><node refid=\"T1\" role=\"trigger\"/>",
        );
        let (docs, _) = parse_bioc(&xml).unwrap();
        let r = &docs[0].relations["R1"];
        assert_eq!(r.trigger, Some(AnchorRef::Mention("T1".into())));
        assert_eq!(r.arguments.len(), 1);
        assert_eq!(r.directionality, Directionality::Undirected);
    }
}
