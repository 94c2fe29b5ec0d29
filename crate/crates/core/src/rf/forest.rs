use std::collections::VecDeque;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::rng;
use super::split::SplitFinder;
use super::tree::{NodeKind, Tree, TreeNode};
use super::ForestError;

/// Training parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RFConfig {
    pub n_trees: usize,
    /// Covariates sampled (without replacement) as split candidates at each node.
    pub mtry: usize,
    /// Nodes with fewer than `2 * min_node_size` observations are not split.
    pub min_node_size: usize,
    pub max_nodes: Option<usize>,
    pub seed: u64,
    /// Bootstrap sample size; `None` means the number of observations.
    pub bootstrap_size: Option<usize>,
}

impl RFConfig {
    /// 500 trees, `mtry = floor(sqrt(p))`, terminal nodes of size 1.
    pub fn for_covariates(n_covariates: usize) -> Self {
        Self {
            n_trees: 500,
            mtry: default_mtry(n_covariates),
            min_node_size: 1,
            max_nodes: None,
            seed: 0,
            bootstrap_size: None,
        }
    }

    pub fn validate(&self, n_covariates: usize) -> Result<(), ForestError> {
        if self.n_trees == 0 {
            return Err(ForestError::InvalidConfig("n_trees must be positive".into()));
        }
        if self.mtry == 0 || self.mtry > n_covariates {
            return Err(ForestError::MtryOutOfRange {
                mtry: self.mtry,
                n_covariates,
            });
        }
        if self.min_node_size == 0 {
            return Err(ForestError::InvalidConfig(
                "min_node_size must be positive".into(),
            ));
        }
        if self.max_nodes == Some(0) {
            return Err(ForestError::InvalidConfig("max_nodes must be positive".into()));
        }
        if self.bootstrap_size == Some(0) {
            return Err(ForestError::InvalidConfig(
                "bootstrap_size must be positive".into(),
            ));
        }
        Ok(())
    }
}

pub fn default_mtry(n_covariates: usize) -> usize {
    ((n_covariates as f64).sqrt().floor() as usize).clamp(1, n_covariates.max(1))
}

/// An ordered collection of trees over a fixed covariate and class vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub covariate_names: Vec<String>,
    pub class_names: Vec<String>,
    /// Absent for forests ingested from elsewhere.
    pub config: Option<RFConfig>,
    /// Per tree, ascending indices of observations outside its bootstrap sample.
    pub oob_indices: Option<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Index into the forest's `class_names`.
    pub class: usize,
    /// Vote share per class, in `class_names` order.
    pub fractions: Vec<f64>,
}

impl ForestModel {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.class_names.iter().position(|c| c == name)
    }

    /// Majority vote over all trees; ties go to the earliest class.
    pub fn predict(&self, row: &[f64]) -> Result<Prediction, ForestError> {
        if row.len() != self.covariate_names.len() {
            return Err(ForestError::DimensionMismatch {
                expected: self.covariate_names.len(),
                found: row.len(),
            });
        }
        let mut votes = vec![0usize; self.class_names.len()];
        for tree in &self.trees {
            votes[tree.predict(row)] += 1;
        }
        let n = self.trees.len() as f64;
        Ok(Prediction {
            class: majority(&votes),
            fractions: votes.iter().map(|&v| v as f64 / n).collect(),
        })
    }

    pub(crate) fn require_oob(&self, data: &Dataset) -> Result<&[Vec<usize>], ForestError> {
        let oob = self
            .oob_indices
            .as_deref()
            .ok_or(ForestError::MissingOobIndices)?;
        if data.n_covariates() != self.covariate_names.len() {
            return Err(ForestError::DimensionMismatch {
                expected: self.covariate_names.len(),
                found: data.n_covariates(),
            });
        }
        if data.class_names() != self.class_names.as_slice() {
            return Err(ForestError::ClassMismatch);
        }
        if oob.len() != self.trees.len() || oob.iter().flatten().any(|&i| i >= data.n_rows()) {
            return Err(ForestError::OobMismatch);
        }
        Ok(oob)
    }
}

/// Index of the largest count, earliest on ties.
pub(crate) fn majority(votes: &[usize]) -> usize {
    let mut best = 0;
    for (i, &v) in votes.iter().enumerate() {
        if v > votes[best] {
            best = i;
        }
    }
    best
}

/// Grows `config.n_trees` trees, each on its own bootstrap sample.
///
/// Tree `t` draws from a stream keyed by `(config.seed, t)`, so the forest is
/// identical whatever the size of the rayon pool.
pub fn train_forest(data: &Dataset, config: &RFConfig) -> Result<ForestModel, ForestError> {
    if data.is_empty() {
        return Err(ForestError::EmptyDataset);
    }
    let present = data.class_counts().iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return Err(ForestError::TooFewClasses { found: present });
    }
    config.validate(data.n_covariates())?;

    let grown: Vec<(Tree, Vec<usize>)> = (0..config.n_trees)
        .into_par_iter()
        .map(|t| grow_tree(data, config, t))
        .collect();
    let (trees, oob): (Vec<_>, Vec<_>) = grown.into_iter().unzip();

    Ok(ForestModel {
        trees,
        covariate_names: data.covariate_names().to_vec(),
        class_names: data.class_names().to_vec(),
        config: Some(config.clone()),
        oob_indices: Some(oob),
    })
}

fn grow_tree(data: &Dataset, config: &RFConfig, tree_index: usize) -> (Tree, Vec<usize>) {
    let n = data.n_rows();
    let mut rng = rng::stream(config.seed, rng::BOOTSTRAP, &[tree_index as u64]);
    let size = config.bootstrap_size.unwrap_or(n);
    let sample: Vec<usize> = (0..size).map(|_| rng.random_range(0..n)).collect();
    let mut in_bag = vec![false; n];
    for &i in &sample {
        in_bag[i] = true;
    }
    let oob = (0..n).filter(|&i| !in_bag[i]).collect();
    (grow_on_sample(data, config, sample, &mut rng), oob)
}

/// Breadth-first growth so that `max_nodes` truncates evenly.
pub(crate) fn grow_on_sample(
    data: &Dataset,
    config: &RFConfig,
    sample: Vec<usize>,
    rng: &mut impl Rng,
) -> Tree {
    let k = data.n_classes();
    let p = data.n_covariates();
    let mut finder = SplitFinder::new(k);
    let mut nodes = vec![TreeNode::leaf(0, sample.len())];
    let mut queue = VecDeque::from([(0usize, sample)]);
    let mut counts = vec![0usize; k];

    while let Some((id, samples)) = queue.pop_front() {
        counts.iter_mut().for_each(|c| *c = 0);
        for &i in &samples {
            counts[data.response(i)] += 1;
        }
        let prediction = majority(&counts);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let budget_left = config.max_nodes.is_none_or(|m| nodes.len() + 2 <= m);
        let n = samples.len();
        nodes[id] = TreeNode::leaf(prediction, n);
        if pure || n < 2 * config.min_node_size || !budget_left {
            continue;
        }

        let mut candidates = index::sample(rng, p, config.mtry).into_vec();
        candidates.sort_unstable();
        let Some(split) = finder.find(data, &samples, &candidates) else {
            continue;
        };
        let (left, right): (Vec<usize>, Vec<usize>) = samples
            .into_iter()
            .partition(|&i| data.value(i, split.covariate) <= split.threshold);
        let left_id = nodes.len();
        let right_id = left_id + 1;
        nodes.push(TreeNode::leaf(0, left.len()));
        nodes.push(TreeNode::leaf(0, right.len()));
        nodes[id].kind = NodeKind::Internal {
            covariate: split.covariate,
            threshold: split.threshold,
            left: left_id,
            right: right_id,
            impurity_decrease: split.impurity_decrease,
        };
        queue.push_back((left_id, left));
        queue.push_back((right_id, right));
    }
    Tree::from_trusted(nodes, 0)
}

/// Out-of-bag accuracy: each observation is voted on only by trees that did
/// not see it. Observations inside every bootstrap sample are skipped.
pub fn oob_accuracy(forest: &ForestModel, data: &Dataset) -> Result<f64, ForestError> {
    let oob = forest.require_oob(data)?;
    let k = forest.class_names.len();
    let per_tree: Vec<Vec<(usize, usize)>> = forest
        .trees
        .par_iter()
        .zip(oob.par_iter())
        .map(|(tree, rows)| rows.iter().map(|&i| (i, tree.predict(data.row(i)))).collect())
        .collect();
    let mut votes = vec![0usize; data.n_rows() * k];
    for (i, class) in per_tree.into_iter().flatten() {
        votes[i * k + class] += 1;
    }
    let (mut voted, mut correct) = (0usize, 0usize);
    for i in 0..data.n_rows() {
        let v = &votes[i * k..(i + 1) * k];
        if v.iter().all(|&c| c == 0) {
            continue;
        }
        voted += 1;
        if majority(v) == data.response(i) {
            correct += 1;
        }
    }
    if voted == 0 {
        return Err(ForestError::NoOobObservations);
    }
    Ok(correct as f64 / voted as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn four_rows() -> Dataset {
        Dataset::new(
            vec!["x".into()],
            vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]],
            &["a", "a", "b", "b"],
        )
        .unwrap()
    }

    fn leaf_tree(class: usize) -> Tree {
        Tree::new(vec![TreeNode::leaf(class, 1)], 0, 1, 2).unwrap()
    }

    fn stump_voting(left: usize, right: usize) -> Tree {
        Tree::new(
            vec![
                TreeNode::internal(0, 0.5, 1, 2, 0.0, 0),
                TreeNode::leaf(left, 0),
                TreeNode::leaf(right, 0),
            ],
            0,
            1,
            2,
        )
        .unwrap()
    }

    fn forest(trees: Vec<Tree>, oob: Option<Vec<Vec<usize>>>) -> ForestModel {
        ForestModel {
            trees,
            covariate_names: vec!["x".into()],
            class_names: vec!["a".into(), "b".into()],
            config: None,
            oob_indices: oob,
        }
    }

    #[test]
    fn identity_bootstrap_gives_pure_stump() {
        let d = four_rows();
        let config = RFConfig {
            n_trees: 1,
            mtry: 1,
            min_node_size: 1,
            max_nodes: None,
            seed: 0,
            bootstrap_size: Some(4),
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let tree = grow_on_sample(&d, &config, vec![0, 1, 2, 3], &mut rng);
        assert_eq!(tree.len(), 3);
        match tree.node(0).kind {
            NodeKind::Internal {
                covariate,
                threshold,
                impurity_decrease,
                ..
            } => {
                assert_eq!(covariate, 0);
                assert_eq!(threshold, 2.5);
                assert_eq!(impurity_decrease, 0.5);
            }
            _ => panic!("root should split"),
        }
        assert_eq!(tree.predict(&[1.0]), 0);
        assert_eq!(tree.predict(&[4.0]), 1);
    }

    #[test]
    fn pure_sample_is_a_leaf() {
        let d = four_rows();
        let config = RFConfig::for_covariates(1);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let tree = grow_on_sample(&d, &config, vec![2, 3, 3], &mut rng);
        assert_eq!(tree.nodes(), [TreeNode::leaf(1, 3)]);
    }

    #[test]
    fn min_node_size_and_max_nodes_stop_growth() {
        let d = four_rows();
        let mut config = RFConfig::for_covariates(1);
        config.min_node_size = 3;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let tree = grow_on_sample(&d, &config, vec![0, 1, 2, 3], &mut rng);
        assert_eq!(tree.len(), 1);

        config.min_node_size = 1;
        config.max_nodes = Some(2);
        let tree = grow_on_sample(&d, &config, vec![0, 1, 2, 3], &mut rng);
        assert_eq!(tree.len(), 1);
    }

    #[test]
    fn training_errors() {
        let single = Dataset::new(vec!["x".into()], vec![vec![1.0], vec![2.0]], &["a", "a"])
            .unwrap();
        let config = RFConfig::for_covariates(1);
        assert_eq!(
            train_forest(&single, &config).unwrap_err(),
            ForestError::TooFewClasses { found: 1 }
        );
        let mut bad = config.clone();
        bad.mtry = 2;
        assert!(matches!(
            train_forest(&four_rows(), &bad).unwrap_err(),
            ForestError::MtryOutOfRange { mtry: 2, .. }
        ));
        let empty = Dataset::new(vec!["x".into()], vec![], &[] as &[&str]).unwrap();
        assert_eq!(
            train_forest(&empty, &config).unwrap_err(),
            ForestError::EmptyDataset
        );
    }

    #[test]
    fn predict_majority_and_ties() {
        let f = forest(vec![leaf_tree(0), leaf_tree(0), leaf_tree(1)], None);
        let p = f.predict(&[0.0]).unwrap();
        assert_eq!(p.class, 0);
        assert_eq!(p.fractions, vec![2.0 / 3.0, 1.0 / 3.0]);

        let f = forest(vec![leaf_tree(1)], None);
        assert_eq!(f.predict(&[0.0]).unwrap().fractions, vec![0.0, 1.0]);

        let f = forest(
            vec![leaf_tree(0), leaf_tree(0), leaf_tree(1), leaf_tree(1)],
            None,
        );
        assert_eq!(f.predict(&[0.0]).unwrap().class, 0);
        assert_eq!(
            f.predict(&[0.0, 1.0]).unwrap_err(),
            ForestError::DimensionMismatch {
                expected: 1,
                found: 2
            }
        );
    }

    #[test]
    fn oob_constant_predictors() {
        let d = Dataset::with_classes(
            vec!["x".into()],
            vec![vec![0.0], vec![1.0], vec![2.0]],
            &["a", "a", "a"],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let oob = Some(vec![vec![0, 1], vec![2]]);
        let right = forest(vec![leaf_tree(0), leaf_tree(0)], oob.clone());
        assert_eq!(oob_accuracy(&right, &d).unwrap(), 1.0);
        let wrong = forest(vec![leaf_tree(1), leaf_tree(1)], oob);
        assert_eq!(oob_accuracy(&wrong, &d).unwrap(), 0.0);
        assert_eq!(
            oob_accuracy(&forest(vec![leaf_tree(0)], None), &d).unwrap_err(),
            ForestError::MissingOobIndices
        );
    }

    #[test]
    fn oob_hand_tabulated_votes() {
        // Rows x = 0, 1, 2 with classes a, b, b.
        // Tree 0 (x <= 0.5 -> a, else b), OOB rows {0, 1}: votes row0 a, row1 b.
        // Tree 1 (x <= 0.5 -> b, else a), OOB rows {1, 2}: votes row1 a, row2 a.
        // Row 0: a (correct). Row 1: a=1, b=1 tie -> a (wrong). Row 2: a (wrong).
        let d = Dataset::new(
            vec!["x".into()],
            vec![vec![0.0], vec![1.0], vec![2.0]],
            &["a", "b", "b"],
        )
        .unwrap();
        let f = forest(
            vec![stump_voting(0, 1), stump_voting(1, 0)],
            Some(vec![vec![0, 1], vec![1, 2]]),
        );
        assert_eq!(oob_accuracy(&f, &d).unwrap(), 1.0 / 3.0);

        // Row 2 in every bootstrap sample drops out of the denominator.
        let f = forest(
            vec![stump_voting(0, 1), stump_voting(1, 0)],
            Some(vec![vec![0, 1], vec![1]]),
        );
        assert_eq!(oob_accuracy(&f, &d).unwrap(), 0.5);
    }
}
