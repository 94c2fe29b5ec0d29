use crate::rf::{NodeKind, Tree};

use super::GroupLabel;

/// One root-to-leaf path: the split covariates from the root down to the
/// leaf's parent, then `Terminus`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    pub labels: Vec<GroupLabel>,
    pub leaf_class: usize,
}

/// All root-to-leaf paths, depth-first with left before right.
pub fn enumerate_paths(tree: &Tree) -> Vec<Path> {
    let mut paths = Vec::with_capacity(tree.n_leaves());
    let mut stack = vec![(tree.root(), 0usize)];
    let mut prefix: Vec<GroupLabel> = Vec::new();
    while let Some((id, depth)) = stack.pop() {
        prefix.truncate(depth);
        match tree.node(id).kind {
            NodeKind::Leaf { prediction } => {
                let mut labels = prefix.clone();
                labels.push(GroupLabel::Terminus);
                paths.push(Path {
                    labels,
                    leaf_class: prediction,
                });
            }
            NodeKind::Internal {
                covariate,
                left,
                right,
                ..
            } => {
                prefix.push(GroupLabel::Covariate(covariate));
                stack.push((right, depth + 1));
                stack.push((left, depth + 1));
            }
        }
    }
    paths
}

/// Leaves below each node (indexed by node id). This is also the number of
/// root-to-leaf paths passing through the node.
pub fn subtree_leaf_counts(tree: &Tree) -> Vec<u64> {
    leaf_counts_where(tree, |_| true)
}

/// Like [`subtree_leaf_counts`], counting only leaves whose class passes `keep`.
pub(crate) fn leaf_counts_where(tree: &Tree, keep: impl Fn(usize) -> bool) -> Vec<u64> {
    let mut order = Vec::with_capacity(tree.len());
    let mut stack = vec![tree.root()];
    while let Some(id) = stack.pop() {
        order.push(id);
        if let Some((l, r)) = tree.node(id).children() {
            stack.push(r);
            stack.push(l);
        }
    }
    // Reverse preorder visits children before parents.
    let mut counts = vec![0u64; tree.len()];
    for &id in order.iter().rev() {
        counts[id] = match tree.node(id).kind {
            NodeKind::Leaf { prediction } => u64::from(keep(prediction)),
            NodeKind::Internal { left, right, .. } => counts[left] + counts[right],
        };
    }
    counts
}
