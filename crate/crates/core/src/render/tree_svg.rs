use std::fmt::Write as _;

use super::{escape, header, num, StyleSheet};
use crate::graph::AnchorRef;
use crate::layout::Side;
use crate::tree::{SummaryNode, SummaryTree};

const LEVEL_HEIGHT: f64 = 64.0;
const NODE_HEIGHT: f64 = 30.0;
const H_GAP: f64 = 16.0;
const PADDING: f64 = 8.0;

struct Placed<'t> {
    node: &'t SummaryNode,
    x: f64,
    depth: usize,
    width: f64,
    parent: Option<(usize, &'t str)>,
}

fn node_width(node: &SummaryNode, style: &StyleSheet) -> f64 {
    let label = style.metrics.width(&node.label, style.label_font_size);
    let text = style.metrics.width(&node.text, style.label_font_size);
    label.max(text) + 2.0 * PADDING
}

/// Width of the subtree rooted at `node`.
fn measure(node: &SummaryNode, style: &StyleSheet) -> f64 {
    let own = node_width(node, style);
    if node.children.is_empty() {
        return own;
    }
    let kids: f64 =
        node.children.iter().map(|e| measure(&e.node, style)).sum::<f64>() + H_GAP * (node.children.len() - 1) as f64;
    own.max(kids)
}

fn place<'t>(
    node: &'t SummaryNode,
    left: f64,
    depth: usize,
    parent: Option<(usize, &'t str)>,
    style: &StyleSheet,
    out: &mut Vec<Placed<'t>>,
) {
    let total = measure(node, style);
    let me = out.len();
    out.push(Placed { node, x: left + total / 2.0, depth, width: node_width(node, style), parent });
    let kids: f64 = node.children.iter().map(|e| measure(&e.node, style)).sum::<f64>()
        + H_GAP * node.children.len().saturating_sub(1) as f64;
    let mut x = left + (total - kids) / 2.0;
    for edge in &node.children {
        let w = measure(&edge.node, style);
        place(&edge.node, x, depth + 1, Some((me, edge.role.as_str())), style, out);
        x += w + H_GAP;
    }
}

/// Layered drawing: root on top, one level per depth, role names on edges.
pub fn render_tree_svg(tree: &SummaryTree, style: &StyleSheet) -> String {
    let mut placed = Vec::new();
    place(&tree.root, 0.0, 0, None, style, &mut placed);
    let m = style.margin;
    let width = measure(&tree.root, style) + 2.0 * m;
    let depth = placed.iter().map(|p| p.depth).max().unwrap_or(0);
    let height = depth as f64 * LEVEL_HEIGHT + NODE_HEIGHT + 2.0 * m;
    let mut out = String::new();
    header(&mut out, width, height, style.background);
    let font = escape(&style.font_family);
    let fs = num(style.label_font_size);
    let top = |d: usize| m + d as f64 * LEVEL_HEIGHT;

    for p in &placed {
        let Some((parent, role)) = p.parent else { continue };
        let q = &placed[parent];
        let (x1, y1, x2, y2) = (q.x + m, top(q.depth) + NODE_HEIGHT, p.x + m, top(p.depth));
        let _ = writeln!(
            out,
            "<g class=\"edge\"><line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\"/>\
<text x=\"{}\" y=\"{}\" font-family=\"{font}\" font-size=\"{fs}\" text-anchor=\"middle\" fill=\"{}\">{}</text></g>",
            num(x1),
            num(y1),
            num(x2),
            num(y2),
            style.syntactic_color,
            num((x1 + x2) / 2.0),
            num((y1 + y2) / 2.0),
            style.text_color,
            escape(role)
        );
    }
    for p in &placed {
        let n = p.node;
        let (kind, type_color) = match &n.element {
            AnchorRef::Relation(_) => ("relation", style.color_for(Some(&n.label), Side::Above)),
            AnchorRef::Mention(_) => ("mention", style.color_for(Some(&n.label), Side::Above)),
            AnchorRef::Token(_) => ("token", style.text_color),
        };
        let y = top(p.depth);
        let x = p.x + m - p.width / 2.0;
        let _ = writeln!(
            out,
            "<g class=\"node {kind}\" data-element=\"{}\" data-depth=\"{}\">",
            escape(&n.element.to_string()),
            p.depth
        );
        let _ = writeln!(
            out,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" rx=\"3.0\" fill=\"{}\" stroke=\"{type_color}\"/>",
            num(x),
            num(y),
            num(p.width),
            num(NODE_HEIGHT),
            style.background
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-family=\"{font}\" font-size=\"{fs}\" text-anchor=\"middle\" fill=\"{type_color}\">{}</text>",
            num(p.x + m),
            num(y + 12.0),
            escape(&n.label)
        );
        if !n.text.is_empty() && n.text != n.label {
            let _ = writeln!(
                out,
                "<text x=\"{}\" y=\"{}\" font-family=\"{font}\" font-size=\"{fs}\" text-anchor=\"middle\" fill=\"{}\">{}</text>",
                num(p.x + m),
                num(y + 25.0),
                style.text_color,
                escape(&n.text)
            );
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}
