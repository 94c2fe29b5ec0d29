use std::fmt::Write as _;
use std::path::Path;

use super::{write, RenderError};
use crate::rf::{NodeKind, Tree};

fn quoted(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Graphviz digraph of one tree: splits labelled by covariate, leaves by
/// `Terminus`, edges parent to child in node-id order.
pub fn tree_dot(tree: &Tree, covariate_names: &[String], class_names: &[String]) -> String {
    let mut out = String::from("digraph tree {\n  node [shape=box, fontname=\"sans-serif\"];\n");
    for (id, node) in tree.nodes().iter().enumerate() {
        match node.kind {
            NodeKind::Leaf { prediction } => {
                let class = class_names.get(prediction).map_or("?", String::as_str);
                let _ = writeln!(
                    out,
                    "  n{id} [label=\"Terminus\", shape=ellipse, tooltip={}];",
                    quoted(&format!("class {class}"))
                );
            }
            NodeKind::Internal { covariate, .. } => {
                let _ = writeln!(out, "  n{id} [label={}];", quoted(&covariate_names[covariate]));
            }
        }
    }
    for (id, node) in tree.nodes().iter().enumerate() {
        if let NodeKind::Internal { threshold, left, right, .. } = node.kind {
            let _ = writeln!(out, "  n{id} -> n{left} [label=\"<= {threshold}\"];");
            let _ = writeln!(out, "  n{id} -> n{right} [label=\"> {threshold}\"];");
        }
    }
    out.push_str("}\n");
    out
}

pub fn export_tree_graph(
    tree: &Tree,
    covariate_names: &[String],
    class_names: &[String],
    path: &Path,
) -> Result<(), RenderError> {
    write(path, &tree_dot(tree, covariate_names, class_names))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::paths_fixtures::{five_node, stump};
    use crate::rf::TreeNode;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn single_leaf() {
        let t = Tree::new(vec![TreeNode::leaf(0, 3)], 0, 1, 1).unwrap();
        let dot = tree_dot(&t, &names(&["x.1"]), &names(&["c1"]));
        assert_eq!(dot.matches("label=\"Terminus\"").count(), 1);
        assert!(!dot.contains("->"));
    }

    #[test]
    fn stump_on_x17() {
        let dot = tree_dot(&stump(0, 0, 1), &names(&["x.17"]), &names(&["c1", "c2"]));
        assert!(dot.contains("n0 [label=\"x.17\"];"));
        assert_eq!(dot.matches("label=\"Terminus\"").count(), 2);
        assert!(dot.contains("n0 -> n1 [label=\"<= 0.5\"];"));
        assert!(dot.contains("n0 -> n2 [label=\"> 0.5\"];"));
    }

    #[test]
    fn five_nodes_four_edges() {
        let dot = tree_dot(&five_node(), &names(&["A", "B"]), &names(&["c1", "c2"]));
        assert_eq!(dot.lines().filter(|l| l.contains("[label=") && !l.contains("->")).count(), 5);
        assert_eq!(dot.matches("->").count(), 4);
    }

    #[test]
    fn quotes_are_escaped() {
        assert_eq!(quoted("a\"b"), "\"a\\\"b\"");
    }
}
