//! Indented taxonomy files.
//!
//! ```text
//! Entity: #1F77B4
//!   Gene_or_gene_product
//!   Chemical: #9467BD
//! Event
//! ```
//!
//! Two spaces per level. Types without a color inherit from the nearest
//! colored ancestor; uncolored roots take the next palette entry.

use std::collections::BTreeSet;

use super::FormatError;
use crate::graph::{Color, Taxonomy, TypeEntry, PALETTE};

struct Line {
    number: usize,
    depth: usize,
    name: String,
    color: Option<Color>,
}

pub fn parse_taxonomy(id: Option<&str>, input: &str) -> Result<Taxonomy, FormatError> {
    let mut lines = Vec::new();
    let mut names = BTreeSet::new();
    let mut prev_depth: Option<usize> = None;
    for (n, raw) in input.lines().enumerate() {
        let number = n + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        let body = raw.trim_start_matches(' ');
        if body.trim().is_empty() || body.starts_with('#') {
            continue;
        }
        let indent = raw.len() - body.len();
        if body.starts_with('\t') {
            return Err(FormatError::IndentationError { line: number, reason: "tab in indentation".into() });
        }
        if indent % 2 != 0 {
            return Err(FormatError::IndentationError {
                line: number,
                reason: format!("odd indentation of {indent} spaces"),
            });
        }
        let depth = indent / 2;
        let allowed = prev_depth.map_or(0, |d| d + 1);
        if depth > allowed {
            return Err(FormatError::IndentationError { line: number, reason: "indented more than one level".into() });
        }
        prev_depth = Some(depth);
        let (name, color) = match body.split_once(':') {
            Some((name, color)) => {
                let color = color
                    .trim()
                    .parse::<Color>()
                    .map_err(|reason| FormatError::MalformedLine { locator: format!("line {number}"), reason })?;
                (name.trim(), Some(color))
            }
            None => (body.trim(), None),
        };
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(FormatError::MalformedLine {
                locator: format!("line {number}"),
                reason: format!("bad type name {name:?}"),
            });
        }
        if !names.insert(name.to_string()) {
            return Err(FormatError::DuplicateTypeName { line: number, name: name.to_string() });
        }
        lines.push(Line { number, depth, name: name.to_string(), color });
    }

    let mut palette = PALETTE.iter().cycle();
    let mut pos = 0;
    let mut roots = Vec::new();
    while pos < lines.len() {
        let color = lines[pos].color.unwrap_or_else(|| *palette.next().expect("cycled palette"));
        roots.push(build(&lines, &mut pos, color));
    }
    Ok(Taxonomy { id: id.map(str::to_string), roots })
}

fn build(lines: &[Line], pos: &mut usize, color: Color) -> TypeEntry {
    let line = &lines[*pos];
    debug_assert!(line.number > 0);
    *pos += 1;
    let mut entry = TypeEntry::leaf(line.name.clone(), color);
    while *pos < lines.len() && lines[*pos].depth > line.depth {
        let c = lines[*pos].color.unwrap_or(color);
        entry.children.push(build(lines, pos, c));
    }
    entry
}

/// Writes a taxonomy with every color explicit.
pub fn serialize_taxonomy(tax: &Taxonomy) -> String {
    let mut out = String::new();
    tax.walk(|entry, path| {
        out.push_str(&"  ".repeat(path.len()));
        out.push_str(&format!("{}: {}\n", entry.name, entry.color));
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inherits_and_uses_palette() {
        let tax =
            parse_taxonomy(None, "Entity: #112233\n  Gene\n    Sub: #445566\n      Leaf\nEvent\n  Bind\n").unwrap();
        assert_eq!(tax.color_of("Gene").unwrap().to_string(), "#112233");
        assert_eq!(tax.color_of("Leaf").unwrap().to_string(), "#445566");
        assert_eq!(tax.color_of("Event"), Some(PALETTE[0]));
        assert_eq!(tax.color_of("Bind"), Some(PALETTE[0]));
        assert_eq!(tax.ancestors("Leaf").unwrap(), vec!["Sub", "Gene", "Entity"]);
    }

    #[test]
    fn indentation_errors() {
        for (input, line) in [("A\n\tB\n", 2), ("A\n   B\n", 2), ("A\n    B\n", 2), ("  A\n", 1)] {
            match parse_taxonomy(None, input) {
                Err(FormatError::IndentationError { line: l, .. }) => assert_eq!(l, line, "{input:?}"),
                other => panic!("{input:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn duplicate_name() {
        assert_eq!(
            parse_taxonomy(None, "A\n  B\nC\n  B\n").unwrap_err(),
            FormatError::DuplicateTypeName { line: 4, name: "B".into() }
        );
    }

    #[test]
    fn serialize_round_trip() {
        let tax = parse_taxonomy(Some("t"), "A\n  B: #FF0000\n    C\n  D\nE: #00FF00\n").unwrap();
        let again = parse_taxonomy(Some("t"), &serialize_taxonomy(&tax)).unwrap();
        assert_eq!(tax, again);
    }
}
