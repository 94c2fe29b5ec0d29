use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::forest::{train_forest, RFConfig};
use super::rng;
use super::ForestError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningResult {
    pub selected_mtry: usize,
    /// `(mtry, mean held-out accuracy)` in candidate order.
    pub scores: Vec<(usize, f64)>,
}

/// Splits row indices into `n_folds` folds with near-identical class mix.
///
/// Fold sizes differ by at most one. Each (class, fold) count is the fair
/// share `fold_size * class_size / n` rounded up or down, with the roundings
/// chosen so every class and every fold total comes out exact; hence each
/// fold's class proportion is within `1 / fold_size` of the overall one.
/// Members of each class are shuffled before being dealt out.
pub fn stratified_folds(
    data: &Dataset,
    n_folds: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>, ForestError> {
    if n_folds < 2 {
        return Err(ForestError::InvalidFolds(format!(
            "need at least 2 folds, got {n_folds}"
        )));
    }
    let counts = data.class_counts();
    if let Some((class, &count)) = counts
        .iter()
        .enumerate()
        .find(|(_, &c)| c > 0 && c < n_folds)
    {
        return Err(ForestError::InvalidFolds(format!(
            "class {:?} has {count} rows, fewer than {n_folds} folds",
            data.class_names()[class]
        )));
    }

    let n = data.n_rows();
    let sizes: Vec<usize> = (0..n_folds)
        .map(|f| n / n_folds + usize::from(f < n % n_folds))
        .collect();
    let allocation = round_shares(&counts, &sizes);

    let mut rng = rng::stream(seed, rng::FOLDS, &[n_folds as u64]);
    let mut folds = vec![Vec::new(); n_folds];
    for (class, quota) in allocation.iter().enumerate() {
        let mut members: Vec<usize> = (0..n).filter(|&i| data.response(i) == class).collect();
        members.shuffle(&mut rng);
        let mut rest = members.as_slice();
        for (fold, &take) in folds.iter_mut().zip(quota) {
            let (head, tail) = rest.split_at(take);
            fold.extend_from_slice(head);
            rest = tail;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Integer matrix `a[c][f]` in `{floor, ceil}` of `rows[c] * cols[f] / n`
/// whose row sums are `rows` and column sums are `cols`.
///
/// Starts from the floors and hands out the remaining units over fractional
/// cells along augmenting paths. A fractional solution exists, so an integral
/// one does too.
fn round_shares(rows: &[usize], cols: &[usize]) -> Vec<Vec<usize>> {
    let n: usize = rows.iter().sum();
    let (nr, nc) = (rows.len(), cols.len());
    let mut alloc = vec![vec![0usize; nc]; nr];
    let mut open = vec![vec![false; nc]; nr];
    for c in 0..nr {
        for f in 0..nc {
            let share = rows[c] * cols[f];
            alloc[c][f] = share / n;
            open[c][f] = share % n != 0;
        }
    }
    let mut row_need: Vec<usize> = (0..nr)
        .map(|c| rows[c] - alloc[c].iter().sum::<usize>())
        .collect();
    let mut col_need: Vec<usize> = (0..nc)
        .map(|f| cols[f] - (0..nr).map(|c| alloc[c][f]).sum::<usize>())
        .collect();
    // Cells bumped from floor to ceiling.
    let mut raised = vec![vec![false; nc]; nr];

    while let Some(start) = row_need.iter().position(|&r| r > 0) {
        // Alternating BFS: a row may raise an open cell in a column; a column
        // may pass a unit back to any row holding a raised cell in it.
        let mut col_from: Vec<Option<usize>> = vec![None; nc];
        let mut row_via: Vec<Option<usize>> = vec![None; nr];
        let mut row_seen = vec![false; nr];
        row_seen[start] = true;
        let mut queue = std::collections::VecDeque::from([start]);
        let mut end = None;
        'search: while let Some(c) = queue.pop_front() {
            for f in 0..nc {
                if !open[c][f] || raised[c][f] || col_from[f].is_some() {
                    continue;
                }
                col_from[f] = Some(c);
                if col_need[f] > 0 {
                    end = Some(f);
                    break 'search;
                }
                for c2 in 0..nr {
                    if raised[c2][f] && !row_seen[c2] {
                        row_seen[c2] = true;
                        row_via[c2] = Some(f);
                        queue.push_back(c2);
                    }
                }
            }
        }

        let mut f = end.expect("a consistent rounding always exists");
        col_need[f] -= 1;
        row_need[start] -= 1;
        loop {
            let c = col_from[f].expect("reached columns record their row");
            raised[c][f] = true;
            if c == start {
                break;
            }
            let back = row_via[c].expect("non-start rows are reached via a column");
            raised[c][back] = false;
            f = back;
        }
    }

    for c in 0..nr {
        for f in 0..nc {
            alloc[c][f] += usize::from(raised[c][f]);
        }
    }
    alloc
}

/// Picks `mtry` by stratified k-fold cross-validated accuracy.
///
/// Every candidate sees the same folds and the same forest seed. The highest
/// mean accuracy wins; ties go to the smaller `mtry`.
pub fn tune_mtry(
    data: &Dataset,
    candidates: &[usize],
    n_folds: usize,
    base_config: &RFConfig,
) -> Result<TuningResult, ForestError> {
    if candidates.is_empty() {
        return Err(ForestError::InvalidConfig("no mtry candidates".into()));
    }
    let p = data.n_covariates();
    if let Some(&bad) = candidates.iter().find(|&&m| m == 0 || m > p) {
        return Err(ForestError::MtryOutOfRange {
            mtry: bad,
            n_covariates: p,
        });
    }
    let folds = stratified_folds(data, n_folds, base_config.seed)?;

    let mut scores = Vec::with_capacity(candidates.len());
    for &mtry in candidates {
        let config = RFConfig {
            mtry,
            ..base_config.clone()
        };
        let mut sum = 0.0;
        for (f, held_out) in folds.iter().enumerate() {
            let train_rows: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|(g, _)| *g != f)
                .flat_map(|(_, rows)| rows.iter().copied())
                .collect();
            let train = data.subset(&train_rows);
            let forest = train_forest(&train, &config)?;
            let mut correct = 0usize;
            for &i in held_out {
                if forest.predict(data.row(i))?.class == data.response(i) {
                    correct += 1;
                }
            }
            sum += correct as f64 / held_out.len() as f64;
        }
        scores.push((mtry, sum / folds.len() as f64));
    }

    let mut best = scores[0];
    for &(mtry, score) in &scores[1..] {
        if score > best.1 || (score == best.1 && mtry < best.0) {
            best = (mtry, score);
        }
    }
    Ok(TuningResult {
        selected_mtry: best.0,
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dataset(classes: &[usize]) -> Dataset {
        let labels: Vec<String> = classes.iter().map(|c| format!("c{c}")).collect();
        let rows = classes
            .iter()
            .enumerate()
            .map(|(i, &c)| vec![c as f64 + (i % 3) as f64 * 0.1, (i % 5) as f64])
            .collect();
        Dataset::new(vec!["x.1".into(), "x.2".into()], rows, &labels).unwrap()
    }

    fn config() -> RFConfig {
        RFConfig {
            n_trees: 5,
            mtry: 1,
            min_node_size: 1,
            max_nodes: None,
            seed: 3,
            bootstrap_size: None,
        }
    }

    #[test]
    fn singleton_candidate_is_selected() {
        let d = dataset(&[0, 1, 0, 1, 0, 1, 0, 1, 2, 2, 2, 2]);
        let r = tune_mtry(&d, &[2], 3, &config()).unwrap();
        assert_eq!(r.selected_mtry, 2);
        assert_eq!(r.scores.len(), 1);
    }

    #[test]
    fn rejects_bad_candidates_and_folds() {
        let d = dataset(&[0, 1, 0, 1, 0, 1]);
        assert!(matches!(
            tune_mtry(&d, &[0], 2, &config()),
            Err(ForestError::MtryOutOfRange { mtry: 0, .. })
        ));
        assert!(matches!(
            tune_mtry(&d, &[1, 3], 2, &config()),
            Err(ForestError::MtryOutOfRange { mtry: 3, .. })
        ));
        assert!(matches!(
            tune_mtry(&d, &[1], 4, &config()),
            Err(ForestError::InvalidFolds(_))
        ));
    }

    #[test]
    fn tuning_is_deterministic() {
        let d = dataset(&[0, 1, 0, 1, 0, 1, 0, 1, 2, 2, 2, 2, 0, 1, 2]);
        let a = tune_mtry(&d, &[1, 2], 3, &config()).unwrap();
        let b = tune_mtry(&d, &[1, 2], 3, &config()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rounding_keeps_margins() {
        let rows = [5, 3, 9];
        let cols = [6, 6, 5];
        let a = round_shares(&rows, &cols);
        for (c, r) in rows.iter().enumerate() {
            assert_eq!(a[c].iter().sum::<usize>(), *r);
            for (f, m) in cols.iter().enumerate() {
                let share = (r * m) as f64 / 17.0;
                assert!((a[c][f] as f64 - share).abs() < 1.0);
            }
        }
        for (f, m) in cols.iter().enumerate() {
            assert_eq!((0..3).map(|c| a[c][f]).sum::<usize>(), *m);
        }
    }

    proptest! {
        #[test]
        fn folds_partition_and_stratify(
            classes in proptest::collection::vec(0usize..4, 20..200),
            k in 2usize..6,
            seed in any::<u64>(),
        ) {
            let d = dataset(&classes);
            let counts = d.class_counts();
            prop_assume!(counts.iter().all(|&c| c >= k));
            let folds = stratified_folds(&d, k, seed).unwrap();

            let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..d.n_rows()).collect::<Vec<_>>());

            let n = d.n_rows() as f64;
            for fold in &folds {
                let m = fold.len() as f64;
                for (class, &total) in counts.iter().enumerate() {
                    let in_fold = fold.iter().filter(|&&i| d.response(i) == class).count();
                    let gap = (in_fold as f64 / m - total as f64 / n).abs();
                    prop_assert!(gap <= 1.0 / m + 1e-12, "gap {} > 1/{}", gap, m);
                }
            }
        }
    }
}
