//! Dendrogram export. Leaves are labelled with 1-based vertex indices.

use std::fmt::Write;

use netred_core::cluster::Dendrogram;

fn heights(tree: &Dendrogram) -> Vec<f64> {
    let n = tree.leaf_count();
    let mut h = vec![0.0; n];
    h.extend(tree.merges().iter().map(|m| m.height));
    h
}

/// Newick text with branch lengths equal to parent height minus child height.
pub fn newick(tree: &Dendrogram) -> String {
    let n = tree.leaf_count();
    let h = heights(tree);
    let mut text: Vec<String> = (1..=n).map(|v| v.to_string()).collect();
    for m in tree.merges() {
        let child = |id: usize| format!("{}:{}", text[id], m.height - h[id]);
        let node = format!("({},{})", child(m.a), child(m.b));
        text.push(node);
    }
    let mut out = text.pop().expect("a dendrogram has at least one leaf");
    out.push(';');
    out.push('\n');
    out
}

/// Graphviz digraph with edges from each merge to its two children.
pub fn dot(tree: &Dendrogram) -> String {
    let n = tree.leaf_count();
    let mut out = String::from("digraph dendrogram {\n");
    for v in 0..n {
        writeln!(out, "  n{v} [label=\"{}\", shape=box];", v + 1).unwrap();
    }
    for m in tree.merges() {
        writeln!(out, "  n{} [label=\"{}\"];", m.merged, m.height).unwrap();
        writeln!(out, "  n{} -> n{};", m.merged, m.a).unwrap();
        writeln!(out, "  n{} -> n{};", m.merged, m.b).unwrap();
    }
    out.push_str("}\n");
    out
}
