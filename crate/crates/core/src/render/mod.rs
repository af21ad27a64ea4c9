//! Standalone SVG output for layouts and summary trees.
//!
//! Numbers are printed with one decimal and attributes in a fixed order, so
//! identical inputs give byte-identical files.

mod tree_svg;

use std::fmt::Write as _;
use std::sync::Arc;

use crate::graph::{Color, Document, Taxonomy};
use crate::layout::{layout, ArcSegment, FontMetrics, LayoutError, LayoutGeometry, Side, ViewConfig};

pub use tree_svg::render_tree_svg;

#[derive(Debug, Clone)]
pub struct StyleSheet {
    pub semantic_color: Color,
    pub syntactic_color: Color,
    pub text_color: Color,
    pub background: Color,
    /// Type name to color; missing types fall back to the layer color.
    pub taxonomy: Option<Taxonomy>,
    pub font_family: String,
    pub font_size: f64,
    pub label_font_size: f64,
    pub corner_radius: f64,
    pub row_gap: f64,
    pub margin: f64,
    pub metrics: Arc<dyn FontMetrics>,
}

impl StyleSheet {
    pub fn new(cfg: &ViewConfig, taxonomy: Option<&Taxonomy>) -> Self {
        StyleSheet {
            semantic_color: Color([0x33, 0x33, 0x99]),
            syntactic_color: Color([0x55, 0x55, 0x55]),
            text_color: Color([0x11, 0x11, 0x11]),
            background: Color([0xFF, 0xFF, 0xFF]),
            taxonomy: taxonomy.cloned(),
            font_family: "monospace".into(),
            font_size: cfg.font_size,
            label_font_size: cfg.label_font_size,
            corner_radius: 4.0,
            row_gap: cfg.row_gap,
            margin: 10.0,
            metrics: cfg.metrics.clone(),
        }
    }

    fn layer_color(&self, side: Side) -> Color {
        match side {
            Side::Above => self.semantic_color,
            Side::Below => self.syntactic_color,
        }
    }

    /// Taxonomy color of `type_name`, else the layer default.
    pub fn color_for(&self, type_name: Option<&str>, side: Side) -> Color {
        type_name.and_then(|t| self.taxonomy.as_ref()?.color_of(t)).unwrap_or_else(|| self.layer_color(side))
    }
}

impl Default for StyleSheet {
    fn default() -> Self {
        StyleSheet::new(&ViewConfig::default(), None)
    }
}

pub(crate) fn num(v: f64) -> String {
    let s = format!("{v:.1}");
    if s == "-0.0" {
        "0.0".into()
    } else {
        s
    }
}

pub(crate) fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

pub(crate) fn header(out: &mut String, width: f64, height: f64, background: Color) {
    let (w, h) = (num(width), num(height));
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    );
    let _ = writeln!(
        out,
        "<rect class=\"background\" x=\"0.0\" y=\"0.0\" width=\"{w}\" height=\"{h}\" fill=\"{background}\"/>"
    );
}

struct Paint {
    class: &'static str,
    fill: Color,
    stroke: Color,
    text: Color,
}

fn label(out: &mut String, paint: Paint, b: &crate::layout::LabelBox, dy: f64, text: &str, style: &StyleSheet) {
    let Paint { class, fill, stroke, text: text_fill } = paint;
    let _ = writeln!(
        out,
        "<rect class=\"{class}\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" rx=\"2.0\" fill=\"{fill}\" stroke=\"{stroke}\"/>",
        num(b.x),
        num(b.y + dy),
        num(b.width),
        num(b.height)
    );
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" font-family=\"{}\" font-size=\"{}\" text-anchor=\"middle\" fill=\"{text_fill}\">{}</text>",
        num(b.center_x()),
        num(b.y + dy + b.height / 2.0 + style.label_font_size * 0.35),
        escape(&style.font_family),
        num(style.label_font_size),
        escape(text)
    );
}

fn segment_path(seg: &ArcSegment, dy: f64, radius: f64) -> String {
    let ry = seg.y + dy;
    let mut d = String::new();
    let end_drop = |x: f64, continues: bool| -> Option<f64> {
        if continues {
            return None;
        }
        seg.drops.iter().filter(|p| p.x == x).map(|p| p.y_end + dy).next()
    };
    let left_end = end_drop(seg.left, seg.continues_left);
    let right_end = end_drop(seg.right, seg.continues_right);
    let span = seg.right - seg.left;
    let corner = |end: Option<f64>| -> f64 {
        match end {
            Some(y) => radius.min((y - ry).abs()).min(span / 2.0),
            None => 0.0,
        }
    };
    let (rl, rr) = (corner(left_end), corner(right_end));
    let toward = |y: f64| if y > ry { 1.0 } else { -1.0 };
    match left_end {
        Some(y) => {
            let s = toward(y);
            let _ = write!(
                d,
                "M{},{} V{} Q{},{} {},{}",
                num(seg.left),
                num(y),
                num(ry + s * rl),
                num(seg.left),
                num(ry),
                num(seg.left + rl),
                num(ry)
            );
        }
        None => {
            let _ = write!(d, "M{},{}", num(seg.left), num(ry));
        }
    }
    let _ = write!(d, " H{}", num(seg.right - rr));
    if let Some(y) = right_end {
        let s = toward(y);
        let _ = write!(d, " Q{},{} {},{} V{}", num(seg.right), num(ry), num(seg.right), num(ry + s * rr), num(y));
    }
    let mut used_left = left_end.is_some();
    let mut used_right = right_end.is_some();
    for drop in &seg.drops {
        if used_left && drop.x == seg.left {
            used_left = false;
            continue;
        }
        if used_right && drop.x == seg.right {
            used_right = false;
            continue;
        }
        let _ = write!(d, " M{},{} V{}", num(drop.x), num(ry), num(drop.y_end + dy));
    }
    d
}

fn arrowhead(x: f64, tip: f64, side: Side) -> String {
    let back = match side {
        Side::Above => tip - 6.0,
        Side::Below => tip + 6.0,
    };
    format!("M{},{} L{},{} L{},{} Z", num(x - 3.5), num(back), num(x), num(tip), num(x + 3.5), num(back))
}

/// Draws a layout. Rows are stacked top to bottom in window order.
pub fn render_annotation_svg(geometry: &LayoutGeometry, style: &StyleSheet) -> String {
    let m = style.margin;
    let width = geometry.row_width + 2.0 * m;
    let height = geometry.height(style.row_gap) + 2.0 * m;
    let mut out = String::new();
    header(&mut out, width, height, style.background);

    // y of each row's token top, by row index
    let mut tops = std::collections::BTreeMap::new();
    let mut y = m;
    for row in &geometry.rows {
        tops.insert(row.index, y + row.y_baseline);
        y += row.height() + style.row_gap;
    }
    let font = escape(&style.font_family);

    for row in &geometry.rows {
        let top = tops[&row.index];
        let _ = writeln!(out, "<g class=\"row\" data-row=\"{}\">", row.index);
        for t in &row.tokens {
            let _ = writeln!(
                out,
                "<text class=\"token\" data-token=\"{}\" x=\"{}\" y=\"{}\" font-family=\"{font}\" font-size=\"{}\" fill=\"{}\">{}</text>",
                t.index,
                num(t.x + m),
                num(top + style.font_size),
                num(style.font_size),
                style.text_color,
                escape(&t.text)
            );
        }
        out.push_str("</g>\n");
    }

    let shift = |b: &crate::layout::LabelBox| crate::layout::LabelBox { x: b.x + m, ..*b };
    for mention in &geometry.mentions {
        let top = tops[&mention.row];
        let color = style.color_for(mention.type_name.as_deref().or(Some(&mention.label)), mention.side);
        let (x1, x2) = mention.underline;
        let uy = match mention.side {
            Side::Above => top,
            Side::Below => top + style.font_size * 1.4,
        };
        let _ = writeln!(out, "<g class=\"mention {}\" data-id=\"{}\">", side_name(mention.side), escape(&mention.id));
        let _ = writeln!(
            out,
            "<line class=\"underline\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\"/>",
            num(x1 + m),
            num(uy),
            num(x2 + m),
            num(uy)
        );
        let paint = Paint { class: "mention-label", fill: color, stroke: color, text: style.background };
        label(&mut out, paint, &shift(&mention.label_box), top, &mention.label, style);
        out.push_str("</g>\n");
    }

    for arc in &geometry.arcs {
        let color = style.color_for(arc.type_name.as_deref().or(Some(&arc.label)), arc.side);
        let _ = writeln!(out, "<g class=\"arc {}\" data-id=\"{}\">", side_name(arc.side), escape(&arc.relation_id));
        for seg in &arc.segments {
            let top = tops[&seg.row];
            let shifted = ArcSegment {
                left: seg.left + m,
                right: seg.right + m,
                drops: seg.drops.iter().map(|d| crate::layout::Drop { x: d.x + m, ..d.clone() }).collect(),
                ..seg.clone()
            };
            let _ = writeln!(
                out,
                "<path class=\"arc-segment\" data-row=\"{}\" d=\"{}\" fill=\"none\" stroke=\"{color}\"/>",
                seg.row,
                segment_path(&shifted, top, style.corner_radius)
            );
            for d in shifted.drops.iter().filter(|d| d.arrow) {
                let _ = writeln!(
                    out,
                    "<path class=\"arrowhead\" d=\"{}\" fill=\"{color}\"/>",
                    arrowhead(d.x, d.y_end + top, arc.side)
                );
            }
        }
        if let Some(b) = &arc.label_box {
            let top = tops[&arc.label_row];
            let paint = Paint { class: "arc-label", fill: style.background, stroke: color, text: color };
            label(&mut out, paint, &shift(b), top, &arc.label, style);
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

fn side_name(side: Side) -> &'static str {
    match side {
        Side::Above => "above",
        Side::Below => "below",
    }
}

/// Lays out the whole document and renders it. The CLI and the service both
/// go through this function.
pub fn render_document(doc: &Document, taxonomy: Option<&Taxonomy>, cfg: &ViewConfig) -> Result<String, LayoutError> {
    let geometry = layout(doc, taxonomy, cfg)?;
    Ok(render_annotation_svg(&geometry, &StyleSheet::new(cfg, taxonomy)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_are_stable() {
        assert_eq!(num(1.0), "1.0");
        assert_eq!(num(-0.0001), "0.0");
        assert_eq!(num(2.26), "2.3");
    }

    #[test]
    fn empty_document_is_blank_canvas() {
        let doc = Document::new("e", "", crate::graph::SourceFormat::Brat);
        let svg = render_document(&doc, None, &ViewConfig::with_width(300.0)).unwrap();
        assert!(svg.contains("width=\"320.0\""));
        assert!(!svg.contains("<g "));
        roxmltree::Document::parse(&svg).unwrap();
    }
}
