//! CoNLL-X dependency files.
//!
//! Every token line becomes a [`Token`] plus a syntactic POS mention `T<n>`
//! (n = 1-based position in the whole document). Each sentence gets a
//! synthetic `ROOT` mention spanning the sentence, and every HEAD/DEPREL pair
//! becomes a syntactic relation `E<n>` whose trigger is the head's mention
//! and whose single argument (role = DEPREL) is the dependent's mention.
//! Sentences are joined with a newline, tokens with a single space.

use std::collections::BTreeMap;

use super::{ElementKind, FormatError, Report};
use crate::graph::{
    AnchorRef, Argument, ConllColumns, Document, Layer, Mention, Relation, Segment, SegmentKind, SourceFormat, Span,
    Token,
};

pub const ROOT_LABEL: &str = "ROOT";

struct Row {
    line: usize,
    form: String,
    postag: String,
    head: Option<usize>,
    deprel: String,
    columns: ConllColumns,
}

pub fn parse_conllx(id: &str, input: &str) -> Result<(Document, Report), FormatError> {
    let mut report = Report::new(SourceFormat::Conllx);
    let mut sentences: Vec<Vec<Row>> = Vec::new();
    let mut current: Vec<Row> = Vec::new();

    for (n, raw) in input.lines().enumerate() {
        let line = n + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        if raw.trim().is_empty() {
            if !current.is_empty() {
                sentences.push(std::mem::take(&mut current));
            }
            continue;
        }
        let cols: Vec<&str> = raw.split('\t').collect();
        if cols.len() != 10 {
            return Err(FormatError::ColumnCountMismatch { line, found: cols.len() });
        }
        let expected = current.len() + 1;
        if cols[0].parse::<usize>().ok() != Some(expected) {
            return Err(FormatError::MalformedLine {
                locator: format!("line {line}"),
                reason: format!("token ID {:?} should be {expected}", cols[0]),
            });
        }
        let head = match cols[6] {
            "_" => {
                report.warn(format!("line {line}"), "no HEAD; token has no dependency");
                None
            }
            h => Some(h.parse::<usize>().map_err(|_| FormatError::NonNumericHead { line, value: h.to_string() })?),
        };
        current.push(Row {
            line,
            form: cols[1].to_string(),
            postag: cols[4].to_string(),
            head,
            deprel: cols[7].to_string(),
            columns: ConllColumns {
                lemma: cols[2].to_string(),
                cpostag: cols[3].to_string(),
                feats: cols[5].to_string(),
                phead: cols[8].to_string(),
                pdeprel: cols[9].to_string(),
            },
        });
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    for sentence in &sentences {
        for row in sentence {
            if let Some(h) = row.head {
                if h > sentence.len() {
                    return Err(FormatError::HeadOutOfRange { line: row.line, head: h, len: sentence.len() });
                }
            }
        }
    }

    let total: usize = sentences.iter().map(Vec::len).sum();
    let mut doc = Document::new(id, String::new(), SourceFormat::Conllx);
    let mut text = String::new();
    let mut offset = 0usize;
    let mut base = 0usize;
    for (s, sentence) in sentences.into_iter().enumerate() {
        if s > 0 {
            text.push('\n');
            offset += 1;
        }
        let sentence_start = offset;
        for (i, row) in sentence.iter().enumerate() {
            if i > 0 {
                text.push(' ');
                offset += 1;
            }
            let width = row.form.chars().count();
            let span = Span::new(offset, offset + width);
            text.push_str(&row.form);
            offset += width;
            doc.tokens.push(Token {
                index: base + i,
                span,
                surface: row.form.clone(),
                columns: Some(row.columns.clone()),
            });
            let mut pos = Mention::new(format!("T{}", base + i + 1), row.postag.clone(), vec![span]);
            pos.layer = Layer::Syntactic;
            doc.mentions.insert(pos.id.clone(), pos);
        }
        let sentence_span = Span::new(sentence_start, offset);
        let root_id = format!("T{}", total + s + 1);
        let mut root = Mention::new(root_id.clone(), ROOT_LABEL, vec![sentence_span]);
        root.layer = Layer::Syntactic;
        doc.mentions.insert(root_id.clone(), root);
        doc.segments.push(Segment {
            kind: SegmentKind::Sentence,
            span: sentence_span,
            source_offset: None,
            infons: BTreeMap::new(),
        });
        for (i, row) in sentence.iter().enumerate() {
            let Some(head) = row.head else { continue };
            let trigger = if head == 0 { root_id.clone() } else { format!("T{}", base + head) };
            let mut rel = Relation::new(
                format!("E{}", base + i + 1),
                row.deprel.clone(),
                Some(AnchorRef::Mention(trigger)),
                vec![Argument::new(row.deprel.clone(), AnchorRef::Mention(format!("T{}", base + i + 1)))],
            );
            rel.layer = Layer::Syntactic;
            doc.relations.insert(rel.id.clone(), rel);
        }
        base += sentence.len();
    }
    doc.text = text;
    Ok((doc, report))
}

/// Maps an endpoint to the token it stands for: the token itself or a
/// mention whose single anchor is exactly one token span.
fn endpoint_token(doc: &Document, by_span: &BTreeMap<Span, usize>, anchor: &AnchorRef) -> Option<usize> {
    match anchor {
        AnchorRef::Token(i) => Some(*i),
        AnchorRef::Mention(id) => {
            let m = doc.mentions.get(id)?;
            match m.anchors.as_slice() {
                [span] => by_span.get(span).copied(),
                _ => None,
            }
        }
        AnchorRef::Relation(_) => None,
    }
}

fn is_root(doc: &Document, anchor: &AnchorRef) -> bool {
    matches!(anchor, AnchorRef::Mention(id)
        if doc.mentions.get(id).is_some_and(|m| m.label == ROOT_LABEL && m.layer == Layer::Syntactic))
}

/// Writes tokens and syntactic dependencies; everything else is listed in
/// the loss report.
pub fn serialize_conllx(doc: &Document) -> Result<(String, Report), FormatError> {
    if doc.tokens.is_empty() {
        return Err(FormatError::NotRepresentable {
            format: SourceFormat::Conllx,
            reason: "document has no tokens".into(),
        });
    }
    let mut report = Report::new(SourceFormat::Conllx);
    let by_span: BTreeMap<Span, usize> = doc.tokens.iter().map(|t| (t.span, t.index)).collect();

    // Sentence of every token.
    let mut sentence_of = vec![0usize; doc.tokens.len()];
    let sentence_spans: Vec<Span> =
        doc.segments.iter().filter(|s| s.kind == SegmentKind::Sentence).map(|s| s.span).collect();
    if sentence_spans.is_empty() {
        let mut line = 0;
        let mut prev_end = 0;
        let chars: Vec<char> = doc.text.chars().collect();
        for (i, t) in doc.tokens.iter().enumerate() {
            line += chars[prev_end..t.span.start].iter().filter(|c| **c == '\n').count();
            sentence_of[i] = line;
            prev_end = t.span.start;
        }
    } else {
        for (i, t) in doc.tokens.iter().enumerate() {
            sentence_of[i] =
                sentence_spans.iter().position(|s| s.start <= t.span.start && t.span.start < s.end).unwrap_or(0);
        }
    }
    let mut first_of: BTreeMap<usize, usize> = BTreeMap::new();
    for (i, s) in sentence_of.iter().enumerate() {
        first_of.entry(*s).or_insert(i);
    }

    let mut postag: Vec<Option<&str>> = vec![None; doc.tokens.len()];
    let mut consumed_mentions = std::collections::BTreeSet::new();
    for m in doc.mentions.values() {
        if m.layer != Layer::Syntactic {
            continue;
        }
        if m.label == ROOT_LABEL {
            // implied by HEAD=0
            consumed_mentions.insert(m.id.as_str());
            continue;
        }
        if let [span] = m.anchors.as_slice() {
            if let Some(&t) = by_span.get(span) {
                if postag[t].is_none() {
                    postag[t] = Some(&m.label);
                    consumed_mentions.insert(m.id.as_str());
                }
            }
        }
    }

    let mut heads: Vec<Option<(usize, &str)>> = vec![None; doc.tokens.len()];
    for r in doc.relations.values() {
        let fits = r.layer == Layer::Syntactic && r.arguments.len() == 1 && r.trigger.is_some();
        let dep = fits.then(|| endpoint_token(doc, &by_span, &r.arguments[0].target)).flatten();
        let trigger = r.trigger.as_ref();
        let head =
            trigger.and_then(
                |t| {
                    if is_root(doc, t) {
                        Some(0)
                    } else {
                        endpoint_token(doc, &by_span, t).map(|h| h + 1)
                    }
                },
            );
        match (dep, head) {
            (Some(d), Some(h)) if heads[d].is_none() => {
                let local = if h == 0 {
                    Some(0)
                } else if sentence_of[h - 1] == sentence_of[d] {
                    Some(h - 1 - first_of[&sentence_of[d]] + 1)
                } else {
                    None
                };
                match local {
                    Some(local) => heads[d] = Some((local, r.arguments[0].role.as_str())),
                    None => report.drop(&r.id, "dependency crosses sentences", ElementKind::Relation),
                }
            }
            (Some(_), Some(_)) => report.drop(&r.id, "second head for one token", ElementKind::Relation),
            _ => {
                let what = if r.layer == Layer::Semantic { "semantic relation" } else { "non-dependency relation" };
                report.drop(&r.id, what, ElementKind::Relation);
            }
        }
    }
    for m in doc.mentions.values() {
        if !consumed_mentions.contains(m.id.as_str()) {
            let what = if m.layer == Layer::Semantic { "semantic mention" } else { "extra syntactic mention" };
            report.drop(&m.id, what, ElementKind::Mention);
        }
        for a in &m.attributes {
            report.drop(&a.id, format!("attribute on {}", m.id), ElementKind::Attribute);
        }
    }
    for meta in &doc.metadata {
        report.drop(&meta.id, "metadata", ElementKind::Metadata);
    }

    let mut out = String::new();
    for (i, tok) in doc.tokens.iter().enumerate() {
        if i > 0 && sentence_of[i] != sentence_of[i - 1] {
            out.push('\n');
        }
        let blank = ConllColumns {
            lemma: "_".into(),
            cpostag: "_".into(),
            feats: "_".into(),
            phead: "_".into(),
            pdeprel: "_".into(),
        };
        let cols = tok.columns.as_ref().unwrap_or(&blank);
        let (head, deprel) = match heads[i] {
            Some((h, d)) => (h.to_string(), d.to_string()),
            None => ("_".to_string(), "_".to_string()),
        };
        let local_id = i - first_of[&sentence_of[i]] + 1;
        let fields = [
            local_id.to_string(),
            tok.surface.clone(),
            cols.lemma.clone(),
            cols.cpostag.clone(),
            postag[i].unwrap_or("_").to_string(),
            cols.feats.clone(),
            head,
            deprel,
            cols.phead.clone(),
            cols.pdeprel.clone(),
        ];
        out.push_str(&fields.join("\t"));
        out.push('\n');
    }
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_root_token() {
        let (doc, _) = parse_conllx("s", "1\tinhibits\t_\t_\tVBZ\t_\t0\tROOT\t_\t_\n").unwrap();
        assert_eq!(doc.tokens.len(), 1);
        assert_eq!(doc.mentions["T1"].label, "VBZ");
        assert_eq!(doc.mentions["T1"].layer, Layer::Syntactic);
        let dep = &doc.relations["E1"];
        assert_eq!(dep.trigger, Some(AnchorRef::Mention("T2".into())));
        assert_eq!(doc.mentions["T2"].label, ROOT_LABEL);
        assert_eq!(dep.arguments[0].role, "ROOT");
    }

    #[test]
    fn head_column_builds_arc() {
        let input = "1\tCdk4\t_\t_\tNN\t_\t2\tnsubj\t_\t_\n2\tinhibits\t_\t_\tVBZ\t_\t0\tROOT\t_\t_\n";
        let (doc, _) = parse_conllx("s", input).unwrap();
        assert_eq!(doc.text, "Cdk4 inhibits");
        let arc = &doc.relations["E1"];
        assert_eq!(arc.trigger, Some(AnchorRef::Mention("T2".into())));
        assert_eq!(arc.arguments, vec![Argument::new("nsubj", AnchorRef::Mention("T1".into()))]);
        assert_eq!(doc.mentions["T2"].anchors, vec![doc.tokens[1].span]);
    }

    #[test]
    fn column_count_names_line() {
        let input = "1\ta\t_\t_\tNN\t_\t0\tROOT\t_\t_\n2\tb\t_\t_\tNN\t_\t1\tdep\t_\n";
        assert_eq!(parse_conllx("s", input).unwrap_err(), FormatError::ColumnCountMismatch { line: 2, found: 9 });
    }

    #[test]
    fn head_errors() {
        let bad = "1\ta\t_\t_\tNN\t_\tx\tROOT\t_\t_\n";
        assert!(matches!(parse_conllx("s", bad), Err(FormatError::NonNumericHead { line: 1, .. })));
        let far = "1\ta\t_\t_\tNN\t_\t3\tdep\t_\t_\n";
        assert!(matches!(parse_conllx("s", far), Err(FormatError::HeadOutOfRange { head: 3, len: 1, .. })));
    }

    #[test]
    fn round_trip_two_sentences() {
        let input = "1\tp53\tp53\tNN\tNN\t_\t2\tnsubj\t_\t_\n2\tbinds\tbind\tVB\tVBZ\tper=3\t0\tROOT\t0\tROOT\n\n\
                     1\tIt\tit\tPR\tPRP\t_\t2\tnsubj\t_\t_\n2\tworks\twork\tVB\tVBZ\t_\t0\tROOT\t_\t_\n";
        let (doc, _) = parse_conllx("s", input).unwrap();
        assert_eq!(doc.text, "p53 binds\nIt works");
        assert_eq!(doc.segments.len(), 2);
        let (out, report) = serialize_conllx(&doc).unwrap();
        assert!(report.is_empty(), "{report:?}");
        assert_eq!(out, input);
    }

    #[test]
    fn empty_is_not_representable() {
        let (doc, _) = parse_conllx("s", "").unwrap();
        assert!(doc.tokens.is_empty());
        assert!(matches!(serialize_conllx(&doc), Err(FormatError::NotRepresentable { .. })));
    }
}
