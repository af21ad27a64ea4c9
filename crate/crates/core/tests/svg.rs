use std::path::Path;

use tag_core::format::files::{load, load_taxonomy};
use tag_core::graph::{recolor_type, Color, Document, Taxonomy};
use tag_core::layout::ViewConfig;
use tag_core::render::{render_document, render_tree_svg, StyleSheet};
use tag_core::tree::extract_tree;

fn fixture(name: &str) -> Document {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name);
    load(&path, None).unwrap().0.remove(0)
}

fn taxonomy() -> Taxonomy {
    load_taxonomy(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/taxonomy.tax")).unwrap()
}

fn groups<'a>(svg: &'a roxmltree::Document, class: &str) -> Vec<roxmltree::Node<'a, 'a>> {
    svg.descendants().filter(|n| n.has_tag_name("g") && n.attribute("class") == Some(class)).collect()
}

#[test]
fn fig5_has_three_directed_arcs_above() {
    let doc = fixture("fig5.ann");
    let out = render_document(&doc, None, &ViewConfig::default()).unwrap();
    let svg = roxmltree::Document::parse(&out).unwrap();
    let arcs = groups(&svg, "arc above");
    assert_eq!(arcs.len(), 3);
    assert!(groups(&svg, "arc below").is_empty());
    for arc in &arcs {
        let id = arc.attribute("data-id").unwrap();
        let heads = arc.descendants().filter(|n| n.attribute("class") == Some("arrowhead")).count();
        // triggered, directed: one head per argument
        assert_eq!(heads, doc.relations[id].arguments.len(), "{id}");
    }
    let ids: Vec<&str> = arcs.iter().map(|a| a.attribute("data-id").unwrap()).collect();
    assert_eq!(ids, ["E1", "E2", "E3"]);
}

#[test]
fn recolored_type_reaches_every_label() {
    let doc = fixture("fig5.ann");
    let tax = recolor_type(&taxonomy(), "Gene_or_gene_product", Color([0xFF, 0, 0]), false).unwrap();
    let out = render_document(&doc, Some(&tax), &ViewConfig::default()).unwrap();
    let svg = roxmltree::Document::parse(&out).unwrap();
    let red: Vec<&str> = groups(&svg, "mention above")
        .into_iter()
        .filter(|g| {
            g.children()
                .any(|c| c.attribute("class") == Some("mention-label") && c.attribute("fill") == Some("#FF0000"))
        })
        .map(|g| g.attribute("data-id").unwrap())
        .collect();
    assert_eq!(red, ["T1", "T2", "T3", "T4"]);
}

#[test]
fn rendering_is_byte_stable_and_keeps_ids() {
    for name in ["fig5.ann", "fig1.ann", "unlockable-a.ann", "fig1-syntax.conll", "reach.xml"] {
        let doc = fixture(name);
        let tax = taxonomy();
        let cfg = ViewConfig::with_width(320.0);
        let a = render_document(&doc, Some(&tax), &cfg).unwrap();
        assert_eq!(a, render_document(&doc, Some(&tax), &cfg).unwrap(), "{name}");
        let svg = roxmltree::Document::parse(&a).unwrap();
        let mut seen: Vec<&str> = svg
            .descendants()
            .filter(|n| n.has_tag_name("g"))
            .filter(|n| n.attribute("class").is_some_and(|c| c.starts_with("arc ") || c.starts_with("mention ")))
            .map(|n| n.attribute("data-id").unwrap())
            .collect();
        seen.sort_unstable();
        let mut expected: Vec<&str> = doc.mentions.keys().chain(doc.relations.keys()).map(String::as_str).collect();
        expected.sort_unstable();
        assert_eq!(seen, expected, "{name}");
        let tokens = svg.descendants().filter(|n| n.attribute("class") == Some("token")).count();
        assert_eq!(tokens, doc.tokens.len());
    }
}

#[test]
fn tree_svg_draws_one_node_per_tree_node() {
    let doc = fixture("fig5.ann");
    let inhibits = doc.tokens.iter().position(|t| t.surface == "inhibits").unwrap();
    let tree = extract_tree(&doc, &tag_core::graph::AnchorRef::Token(inhibits)).unwrap();
    let out = render_tree_svg(&tree, &StyleSheet::default());
    let svg = roxmltree::Document::parse(&out).unwrap();
    let nodes = svg.descendants().filter(|n| n.attribute("class").is_some_and(|c| c.starts_with("node "))).count();
    assert_eq!(nodes, tree.node_count());
    assert_eq!(groups(&svg, "edge").len(), tree.node_count() - 1);
}
