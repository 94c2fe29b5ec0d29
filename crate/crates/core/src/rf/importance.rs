use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::forest::ForestModel;
use super::rng;
use super::tree::NodeKind;
use super::ForestError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateImportance {
    pub covariate: String,
    pub impurity_importance: f64,
    /// `None` when no data was supplied to compute it.
    pub permutation_importance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub covariates: Vec<CovariateImportance>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImportanceMetric {
    Impurity,
    Permutation,
}

impl ImportanceReport {
    pub fn from_parts(
        names: &[String],
        impurity: &[f64],
        permutation: Option<&[f64]>,
    ) -> ImportanceReport {
        ImportanceReport {
            covariates: names
                .iter()
                .enumerate()
                .map(|(j, name)| CovariateImportance {
                    covariate: name.clone(),
                    impurity_importance: impurity[j],
                    permutation_importance: permutation.map(|p| p[j]),
                })
                .collect(),
        }
    }

    pub fn value(&self, covariate: usize, metric: ImportanceMetric) -> Option<f64> {
        let c = &self.covariates[covariate];
        match metric {
            ImportanceMetric::Impurity => Some(c.impurity_importance),
            ImportanceMetric::Permutation => c.permutation_importance,
        }
    }

    /// Covariate indices by descending `metric`, ties in index order.
    pub fn ranking(&self, metric: ImportanceMetric) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.covariates.len()).collect();
        order.sort_by(|&a, &b| {
            let va = self.value(a, metric).unwrap_or(f64::NEG_INFINITY);
            let vb = self.value(b, metric).unwrap_or(f64::NEG_INFINITY);
            vb.total_cmp(&va).then(a.cmp(&b))
        });
        order
    }
}

/// Mean decrease in Gini impurity per covariate.
///
/// Each split contributes its node-level decrease weighted by the fraction of
/// the tree's training sample that reached the node; the sum is averaged over
/// trees. Trees without training counts contribute nothing.
pub fn impurity_importance(forest: &ForestModel) -> Vec<f64> {
    let mut totals = vec![0.0; forest.covariate_names.len()];
    for tree in &forest.trees {
        let root_n = tree.node(tree.root()).n_train;
        if root_n == 0 {
            continue;
        }
        for node in tree.nodes() {
            if let NodeKind::Internal {
                covariate,
                impurity_decrease,
                ..
            } = node.kind
            {
                totals[covariate] += impurity_decrease * node.n_train as f64 / root_n as f64;
            }
        }
    }
    let n = forest.trees.len().max(1) as f64;
    totals.iter().map(|t| t / n).collect()
}

/// Mean drop in per-tree OOB accuracy after shuffling one covariate among the
/// tree's OOB rows, averaged over trees (with at least one OOB row) and
/// `repeats` shuffles. Covariates a tree never splits on contribute exactly 0.
pub fn permutation_importance(
    forest: &ForestModel,
    data: &Dataset,
    repeats: usize,
    seed: u64,
) -> Result<Vec<f64>, ForestError> {
    if repeats == 0 {
        return Err(ForestError::InvalidConfig("repeats must be positive".into()));
    }
    let oob = forest.require_oob(data)?;
    let p = forest.covariate_names.len();

    let per_tree: Vec<Option<Vec<f64>>> = forest
        .trees
        .par_iter()
        .zip(oob.par_iter())
        .enumerate()
        .map(|(t, (tree, rows))| {
            if rows.is_empty() {
                return None;
            }
            let baseline = rows
                .iter()
                .filter(|&&i| tree.predict(data.row(i)) == data.response(i))
                .count() as i64;
            let mut drops = vec![0.0; p];
            let mut shuffled: Vec<f64> = Vec::with_capacity(rows.len());
            for (j, drop) in drops.iter_mut().enumerate() {
                if !tree.uses_covariate(j) {
                    continue;
                }
                let mut sum = 0i64;
                for r in 0..repeats {
                    let mut rng =
                        rng::stream(seed, rng::PERMUTATION, &[t as u64, j as u64, r as u64]);
                    shuffled.clear();
                    shuffled.extend(rows.iter().map(|&i| data.value(i, j)));
                    shuffled.shuffle(&mut rng);
                    let permuted = rows
                        .iter()
                        .zip(&shuffled)
                        .filter(|(&i, &v)| tree.predict_with(data.row(i), j, v) == data.response(i))
                        .count() as i64;
                    sum += baseline - permuted;
                }
                *drop = sum as f64 / (repeats * rows.len()) as f64;
            }
            Some(drops)
        })
        .collect();

    let mut totals = vec![0.0; p];
    let mut counted = 0usize;
    for drops in per_tree.into_iter().flatten() {
        counted += 1;
        for (total, d) in totals.iter_mut().zip(drops) {
            *total += d;
        }
    }
    if counted == 0 {
        return Err(ForestError::NoOobObservations);
    }
    Ok(totals.iter().map(|t| t / counted as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rf::tree::{Tree, TreeNode};

    fn forest_of(trees: Vec<Tree>, p: usize, oob: Option<Vec<Vec<usize>>>) -> ForestModel {
        ForestModel {
            trees,
            covariate_names: (1..=p).map(|i| format!("x.{i}")).collect(),
            class_names: vec!["a".into(), "b".into()],
            config: None,
            oob_indices: oob,
        }
    }

    #[test]
    fn stump_importance() {
        let tree = Tree::new(
            vec![
                TreeNode::internal(1, 2.5, 1, 2, 0.5, 10),
                TreeNode::leaf(0, 5),
                TreeNode::leaf(1, 5),
            ],
            0,
            3,
            2,
        )
        .unwrap();
        assert_eq!(impurity_importance(&forest_of(vec![tree], 3, None)), vec![0.0, 0.5, 0.0]);
    }

    #[test]
    fn hand_accumulated_depth_three() {
        // root(x0, dec .4, n 20) -> left(x1, dec .3, n 12) -> left(x0, dec .2, n 5)
        let tree = Tree::new(
            vec![
                TreeNode::internal(0, 1.0, 1, 2, 0.4, 20),
                TreeNode::internal(1, 1.0, 3, 4, 0.3, 12),
                TreeNode::leaf(1, 8),
                TreeNode::internal(0, 0.5, 5, 6, 0.2, 5),
                TreeNode::leaf(1, 7),
                TreeNode::leaf(0, 2),
                TreeNode::leaf(1, 3),
            ],
            0,
            2,
            2,
        )
        .unwrap();
        let stump = Tree::new(
            vec![
                TreeNode::internal(1, 1.0, 1, 2, 0.1, 4),
                TreeNode::leaf(0, 2),
                TreeNode::leaf(1, 2),
            ],
            0,
            2,
            2,
        )
        .unwrap();
        let imp = impurity_importance(&forest_of(vec![tree, stump], 2, None));
        let x0 = (0.4 * 20.0 / 20.0 + 0.2 * 5.0 / 20.0) / 2.0;
        let x1 = (0.3 * 12.0 / 20.0 + 0.1) / 2.0;
        assert!((imp[0] - x0).abs() < 1e-15);
        assert!((imp[1] - x1).abs() < 1e-15);
    }

    #[test]
    fn ranking_ties_by_index() {
        let names = vec!["p".to_string(), "q".into(), "r".into()];
        let report = ImportanceReport::from_parts(&names, &[0.1, 0.3, 0.1], None);
        assert_eq!(report.ranking(ImportanceMetric::Impurity), vec![1, 0, 2]);
    }

    fn separable() -> (Dataset, ForestModel) {
        // x0 separates the classes, x1 is unused by the trees.
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64, (i * 7 % 8) as f64]).collect();
        let classes: Vec<&str> = (0..8).map(|i| if i < 4 { "a" } else { "b" }).collect();
        let d = Dataset::new(vec!["x.1".into(), "x.2".into()], rows, &classes).unwrap();
        let stump = || {
            Tree::new(
                vec![
                    TreeNode::internal(0, 3.5, 1, 2, 0.5, 8),
                    TreeNode::leaf(0, 4),
                    TreeNode::leaf(1, 4),
                ],
                0,
                2,
                2,
            )
            .unwrap()
        };
        let f = forest_of(
            vec![stump(), stump()],
            2,
            Some(vec![(0..8).collect(), vec![0, 2, 5, 7]]),
        );
        (d, f)
    }

    /// Independent tabulation of the same shuffles the implementation draws.
    fn tabulate(d: &Dataset, f: &ForestModel, j: usize, repeats: usize, seed: u64) -> f64 {
        let oob = f.oob_indices.as_ref().unwrap();
        let mut total = 0.0;
        for (t, rows) in oob.iter().enumerate() {
            let mut tree_total = 0.0;
            for r in 0..repeats {
                let mut rng = rng::stream(seed, rng::PERMUTATION, &[t as u64, j as u64, r as u64]);
                let mut col: Vec<f64> = rows.iter().map(|&i| d.value(i, j)).collect();
                col.shuffle(&mut rng);
                let mut base_ok = 0.0;
                let mut perm_ok = 0.0;
                for (k, &i) in rows.iter().enumerate() {
                    let mut row = d.row(i).to_vec();
                    if f.trees[t].predict(&row) == d.response(i) {
                        base_ok += 1.0;
                    }
                    row[j] = col[k];
                    if f.trees[t].predict(&row) == d.response(i) {
                        perm_ok += 1.0;
                    }
                }
                tree_total += (base_ok - perm_ok) / rows.len() as f64;
            }
            total += tree_total / repeats as f64;
        }
        total / oob.len() as f64
    }

    #[test]
    fn permutation_hits_only_used_covariate() {
        let (d, f) = separable();
        let imp = permutation_importance(&f, &d, 3, 11).unwrap();
        assert_eq!(imp[1], 0.0);
        assert!(imp[0] > 0.0);
        assert!((imp[0] - tabulate(&d, &f, 0, 3, 11)).abs() < 1e-12);
        assert_eq!(imp, permutation_importance(&f, &d, 3, 11).unwrap());
    }

    #[test]
    fn permutation_requires_oob() {
        let (d, mut f) = separable();
        f.oob_indices = None;
        assert_eq!(
            permutation_importance(&f, &d, 1, 0).unwrap_err(),
            ForestError::MissingOobIndices
        );
    }
}
