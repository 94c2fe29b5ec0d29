//! Helpers shared by the integration tests: random valid trees and forests,
//! and a brute-force flow aggregation used as an oracle.
#![allow(dead_code)]

use std::collections::BTreeMap;

use forestflow::flow::{GroupLabel, RankedGroup};
use forestflow::rf::{ForestModel, NodeKind, Tree, TreeNode};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random valid tree with `n_internal` splits (so `2 * n_internal + 1`
/// nodes), grown by splitting random leaves, with node ids shuffled.
pub fn random_tree(rng: &mut impl Rng, n_internal: usize, p: usize, k: usize) -> Tree {
    // (covariate, children) per node in creation order; None = leaf
    let mut shape: Vec<Option<(usize, usize, usize)>> = vec![None];
    let mut leaves = vec![0usize];
    for _ in 0..n_internal {
        let at = rng.random_range(0..leaves.len());
        let id = leaves.swap_remove(at);
        let (l, r) = (shape.len(), shape.len() + 1);
        shape.push(None);
        shape.push(None);
        shape[id] = Some((rng.random_range(0..p), l, r));
        leaves.push(l);
        leaves.push(r);
    }
    let mut perm: Vec<usize> = (0..shape.len()).collect();
    perm.shuffle(rng);
    let mut nodes = vec![TreeNode::leaf(0, 0); shape.len()];
    for (old, s) in shape.iter().enumerate() {
        nodes[perm[old]] = match *s {
            None => TreeNode::leaf(rng.random_range(0..k), rng.random_range(1..20)),
            Some((c, l, r)) => TreeNode::internal(
                c,
                rng.random_range(-10.0..10.0),
                perm[l],
                perm[r],
                rng.random_range(0.0..1.0),
                rng.random_range(2..40),
            ),
        };
    }
    Tree::new(nodes, perm[0], p, k).expect("generated tree is valid")
}

pub fn names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

pub fn random_forest(seed: u64, n_trees: usize, p: usize, k: usize) -> ForestModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trees = (0..n_trees)
        .map(|_| {
            let splits = rng.random_range(0..20);
            random_tree(&mut rng, splits, p, k)
        })
        .collect();
    ForestModel {
        trees,
        covariate_names: names("x.", p),
        class_names: names("c", k),
        config: None,
        oob_indices: None,
    }
}

pub type Edges = BTreeMap<(RankedGroup, RankedGroup), u64>;
pub type Totals = BTreeMap<RankedGroup, u64>;

/// Enumerates every root-to-leaf path recursively and tallies its first
/// `max_rank` positions.
pub fn brute_force(
    trees: &[Tree],
    max_rank: usize,
    class: Option<usize>,
) -> (Edges, Totals, u64) {
    fn walk(tree: &Tree, id: usize, prefix: &mut Vec<GroupLabel>, out: &mut Vec<(Vec<GroupLabel>, usize)>) {
        match tree.node(id).kind {
            NodeKind::Leaf { prediction } => {
                let mut labels = prefix.clone();
                labels.push(GroupLabel::Terminus);
                out.push((labels, prediction));
            }
            NodeKind::Internal { covariate, left, right, .. } => {
                prefix.push(GroupLabel::Covariate(covariate));
                walk(tree, left, prefix, out);
                walk(tree, right, prefix, out);
                prefix.pop();
            }
        }
    }
    let mut edges = Edges::new();
    let mut totals = Totals::new();
    let mut n_paths = 0;
    for tree in trees {
        let mut paths = Vec::new();
        walk(tree, tree.root(), &mut Vec::new(), &mut paths);
        for (labels, leaf) in paths {
            if class.is_some_and(|c| c != leaf) {
                continue;
            }
            n_paths += 1;
            let shown = labels.len().min(max_rank);
            for i in 0..shown {
                let g = RankedGroup::new(i + 1, labels[i]);
                *totals.entry(g).or_default() += 1;
                if i + 1 < shown {
                    *edges.entry((g, RankedGroup::new(i + 2, labels[i + 1]))).or_default() += 1;
                }
            }
        }
    }
    (edges, totals, n_paths)
}

/// Two-class data where `x.1 + x.2 > 1` decides the class and `x.3..x.p`
/// are independent uniform noise.
pub fn synthetic(n: usize, p: usize, seed: u64) -> (Vec<String>, Vec<Vec<f64>>, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..p).map(|_| rng.random_range(0.0..1.0)).collect())
        .collect();
    let classes = rows
        .iter()
        .map(|r| if r[0] + r[1] > 1.0 { "hi" } else { "lo" }.to_string())
        .collect();
    (names("x.", p), rows, classes)
}

pub fn csv_text(names: &[String], rows: &[Vec<f64>], classes: &[String]) -> String {
    let mut out = names.join(",") + ",y\n";
    for (r, c) in rows.iter().zip(classes) {
        let cells: Vec<String> = r.iter().map(|v| v.to_string()).collect();
        out += &format!("{},{c}\n", cells.join(","));
    }
    out
}

/// Stump on `x.17`: left leaf `c1`, right leaf `c2`.
pub fn stump_forest() -> ForestModel {
    let tree = Tree::new(
        vec![
            TreeNode::internal(0, 0.5, 1, 2, 0.5, 4),
            TreeNode::leaf(0, 2),
            TreeNode::leaf(1, 2),
        ],
        0,
        1,
        2,
    )
    .unwrap();
    ForestModel {
        trees: vec![tree],
        covariate_names: vec!["x.17".into()],
        class_names: vec!["c1".into(), "c2".into()],
        config: None,
        oob_indices: None,
    }
}

/// Root `A` splits to `B` (two leaves, `c1` and `c2`) and a `c2` leaf.
pub fn five_node_forest() -> ForestModel {
    let tree = Tree::new(
        vec![
            TreeNode::internal(0, 1.0, 1, 2, 0.3, 6),
            TreeNode::internal(1, 2.0, 3, 4, 0.2, 4),
            TreeNode::leaf(1, 2),
            TreeNode::leaf(0, 2),
            TreeNode::leaf(1, 2),
        ],
        0,
        2,
        2,
    )
    .unwrap();
    ForestModel {
        trees: vec![tree],
        covariate_names: vec!["A".into(), "B".into()],
        class_names: vec!["c1".into(), "c2".into()],
        config: None,
        oob_indices: None,
    }
}

/// Reference outputs checked into `tests/golden`, by file name.
pub fn golden_outputs() -> Vec<(String, String)> {
    use forestflow::flow::FlowDocument;
    use forestflow::render::{
        extract_island, importance_svg, pcp_svg, sankey_html, RenderOptions, ViewerBundle,
    };
    use forestflow::rf::{impurity_importance, ImportanceMetric, ImportanceReport};

    let opts = RenderOptions::default();
    let viewer = ViewerBundle::embedded().unwrap();
    let mut out = Vec::new();
    for (name, forest) in [("stump", stump_forest()), ("five_node", five_node_forest())] {
        let doc = FlowDocument::build(&forest, 5, None, 0.0).unwrap();
        out.push((format!("{name}_pcp.svg"), pcp_svg(&doc.view().unwrap(), &opts).unwrap()));
        let html = sankey_html(&doc, &opts, &viewer).unwrap();
        out.push((format!("{name}_island.json"), extract_island(&html).unwrap()));
        let report = ImportanceReport::from_parts(
            &forest.covariate_names,
            &impurity_importance(&forest),
            None,
        );
        out.push((
            format!("{name}_importance.svg"),
            importance_svg(&report, ImportanceMetric::Impurity, &opts).unwrap(),
        ));
    }
    // threshold fixtures for cross-checking client-side filtering
    for theta in ["0.4", "0.5"] {
        let doc = FlowDocument::build(&five_node_forest(), 5, None, theta.parse().unwrap()).unwrap();
        out.push((format!("five_node_theta_{theta}.json"), doc.to_json()));
    }
    out
}

pub fn golden_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Compares against the checked-in files; `FORESTFLOW_BLESS=1` rewrites them.
pub fn check_goldens() -> Result<usize, String> {
    let dir = golden_dir();
    let bless = std::env::var("FORESTFLOW_BLESS").is_ok_and(|v| v == "1");
    let outputs = golden_outputs();
    for (name, text) in &outputs {
        let path = dir.join(name);
        if bless {
            std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
            std::fs::write(&path, text).map_err(|e| e.to_string())?;
            continue;
        }
        let expected = std::fs::read_to_string(&path)
            .map_err(|e| format!("{}: {e}", path.display()))?;
        if &expected != text {
            return Err(format!("{name} differs from the checked-in reference"));
        }
    }
    Ok(outputs.len())
}
