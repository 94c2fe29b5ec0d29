use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TreeError {
    #[error("tree has no nodes")]
    Empty,
    #[error("root {root} is outside the node array of length {len}")]
    RootOutOfRange { root: usize, len: usize },
    #[error("node {node} references child {child}, which does not exist")]
    DanglingChild { node: usize, child: usize },
    #[error("node {node} is its own ancestor")]
    Cycle { node: usize },
    #[error("node {node} has more than one parent")]
    MultipleParents { node: usize },
    #[error("node {node} is not reachable from the root")]
    Unreachable { node: usize },
    #[error("node {node} splits on covariate {covariate}, but only {n_covariates} exist")]
    CovariateOutOfRange {
        node: usize,
        covariate: usize,
        n_covariates: usize,
    },
    #[error("node {node} predicts class {class}, but only {n_classes} exist")]
    ClassOutOfRange {
        node: usize,
        class: usize,
        n_classes: usize,
    },
    #[error("node {node} has a non-finite split threshold")]
    NonFiniteThreshold { node: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    /// Rows with `value <= threshold` go to `left`.
    Internal {
        covariate: usize,
        threshold: f64,
        left: usize,
        right: usize,
        impurity_decrease: f64,
    },
    Leaf {
        prediction: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub kind: NodeKind,
    /// Bootstrap observations that reached this node during training (0 when unknown).
    pub n_train: usize,
}

impl TreeNode {
    pub fn leaf(prediction: usize, n_train: usize) -> Self {
        Self {
            kind: NodeKind::Leaf { prediction },
            n_train,
        }
    }

    pub fn internal(
        covariate: usize,
        threshold: f64,
        left: usize,
        right: usize,
        impurity_decrease: f64,
        n_train: usize,
    ) -> Self {
        Self {
            kind: NodeKind::Internal {
                covariate,
                threshold,
                left,
                right,
                impurity_decrease,
            },
            n_train,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf { .. })
    }

    pub fn children(&self) -> Option<(usize, usize)> {
        match self.kind {
            NodeKind::Internal { left, right, .. } => Some((left, right)),
            NodeKind::Leaf { .. } => None,
        }
    }
}

/// A validated binary decision tree. Node ids are indices into the node array.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<TreeNode>,
    root: usize,
}

impl Tree {
    /// Validates structure and index ranges before accepting the nodes.
    pub fn new(
        nodes: Vec<TreeNode>,
        root: usize,
        n_covariates: usize,
        n_classes: usize,
    ) -> Result<Self, TreeError> {
        validate(&nodes, root, n_covariates, n_classes)?;
        Ok(Self { nodes, root })
    }

    /// Trainer output is valid by construction.
    pub(crate) fn from_trusted(nodes: Vec<TreeNode>, root: usize) -> Self {
        debug_assert!(validate(&nodes, root, usize::MAX, usize::MAX).is_ok());
        Self { nodes, root }
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    pub fn n_internal(&self) -> usize {
        self.nodes.len() - self.n_leaves()
    }

    pub fn uses_covariate(&self, covariate: usize) -> bool {
        self.nodes.iter().any(
            |n| matches!(n.kind, NodeKind::Internal { covariate: c, .. } if c == covariate),
        )
    }

    /// Id of the leaf that `row` reaches.
    pub fn route(&self, row: &[f64]) -> usize {
        self.route_by(|j| row[j])
    }

    /// Leaf class for `row`.
    pub fn predict(&self, row: &[f64]) -> usize {
        self.leaf_class(self.route(row))
    }

    /// Like [`Tree::predict`] but reading `value` in place of `row[covariate]`.
    pub fn predict_with(&self, row: &[f64], covariate: usize, value: f64) -> usize {
        self.leaf_class(self.route_by(|j| if j == covariate { value } else { row[j] }))
    }

    fn route_by(&self, value: impl Fn(usize) -> f64) -> usize {
        let mut id = self.root;
        loop {
            match self.nodes[id].kind {
                NodeKind::Leaf { .. } => return id,
                NodeKind::Internal {
                    covariate,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    id = if value(covariate) <= threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    fn leaf_class(&self, id: usize) -> usize {
        match self.nodes[id].kind {
            NodeKind::Leaf { prediction } => prediction,
            NodeKind::Internal { .. } => unreachable!("route ends at a leaf"),
        }
    }
}

fn validate(
    nodes: &[TreeNode],
    root: usize,
    n_covariates: usize,
    n_classes: usize,
) -> Result<(), TreeError> {
    if nodes.is_empty() {
        return Err(TreeError::Empty);
    }
    if root >= nodes.len() {
        return Err(TreeError::RootOutOfRange {
            root,
            len: nodes.len(),
        });
    }
    for (id, node) in nodes.iter().enumerate() {
        match node.kind {
            NodeKind::Internal {
                covariate,
                threshold,
                left,
                right,
                ..
            } => {
                for child in [left, right] {
                    if child >= nodes.len() {
                        return Err(TreeError::DanglingChild { node: id, child });
                    }
                }
                if covariate >= n_covariates {
                    return Err(TreeError::CovariateOutOfRange {
                        node: id,
                        covariate,
                        n_covariates,
                    });
                }
                if !threshold.is_finite() {
                    return Err(TreeError::NonFiniteThreshold { node: id });
                }
            }
            NodeKind::Leaf { prediction } => {
                if prediction >= n_classes {
                    return Err(TreeError::ClassOutOfRange {
                        node: id,
                        class: prediction,
                        n_classes,
                    });
                }
            }
        }
    }

    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        OnStack,
        Done,
    }
    let mut marks = vec![Mark::New; nodes.len()];
    // Iterative DFS; a child already on the stack closes a cycle, a finished
    // child means a second parent.
    let visit = |start: usize, marks: &mut Vec<Mark>| -> Result<(), TreeError> {
        let mut stack = vec![(start, 0u8)];
        marks[start] = Mark::OnStack;
        while let Some((id, next)) = stack.pop() {
            let child = match (nodes[id].children(), next) {
                (Some((l, _)), 0) => Some(l),
                (Some((_, r)), 1) => Some(r),
                _ => None,
            };
            match child {
                None => marks[id] = Mark::Done,
                Some(c) => {
                    stack.push((id, next + 1));
                    match marks[c] {
                        Mark::OnStack => return Err(TreeError::Cycle { node: c }),
                        Mark::Done => return Err(TreeError::MultipleParents { node: c }),
                        Mark::New => {
                            marks[c] = Mark::OnStack;
                            stack.push((c, 0));
                        }
                    }
                }
            }
        }
        Ok(())
    };
    visit(root, &mut marks)?;
    if let Some(orphan) = marks.iter().position(|m| *m == Mark::New) {
        // Report a cycle hidden in an unreachable component before the orphan itself.
        for id in 0..nodes.len() {
            if marks[id] == Mark::New {
                if let Err(e @ TreeError::Cycle { .. }) = visit(id, &mut marks) {
                    return Err(e);
                }
            }
        }
        return Err(TreeError::Unreachable { node: orphan });
    }
    Ok(())
}
