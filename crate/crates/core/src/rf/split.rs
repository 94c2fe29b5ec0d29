//! Exhaustive Gini split search.
//!
//! For a node with class counts `c_k` (total `n`) and a candidate partition
//! into left/right counts, the weighted Gini decrease is
//! `(Σ l_k²/n_l + Σ r_k²/n_r − Σ c_k²/n) / n`. Only the bracketed score
//! `Σ l_k²/n_l + Σ r_k²/n_r` varies between candidates, so candidates are
//! ranked by comparing that score as an exact integer fraction; ties and the
//! "strictly positive" test are therefore free of rounding.

use super::dataset::Dataset;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub covariate: usize,
    /// Midpoint between two consecutive distinct values; `<=` goes left.
    pub threshold: f64,
    /// Parent Gini minus the size-weighted Gini of the two children.
    pub impurity_decrease: f64,
}

/// Best Gini split of `samples` over `candidates`, or `None` when no split
/// strictly decreases impurity.
///
/// Ties are broken by lowest covariate index, then lowest threshold.
pub fn best_split(data: &Dataset, samples: &[usize], candidates: &[usize]) -> Option<Split> {
    SplitFinder::new(data.n_classes()).find(data, samples, candidates)
}

/// Reusable scratch space for repeated split searches within one tree.
pub(crate) struct SplitFinder {
    pairs: Vec<(f64, usize)>,
    totals: Vec<u64>,
    left: Vec<u64>,
    right: Vec<u64>,
    order: Vec<usize>,
}

struct Candidate {
    split: Split,
    num: u128,
    den: u128,
}

impl SplitFinder {
    pub(crate) fn new(n_classes: usize) -> Self {
        Self {
            pairs: Vec::new(),
            totals: vec![0; n_classes],
            left: vec![0; n_classes],
            right: vec![0; n_classes],
            order: Vec::new(),
        }
    }

    pub(crate) fn find(
        &mut self,
        data: &Dataset,
        samples: &[usize],
        candidates: &[usize],
    ) -> Option<Split> {
        let n = samples.len();
        if n < 2 || candidates.is_empty() {
            return None;
        }
        self.totals.iter_mut().for_each(|c| *c = 0);
        for &i in samples {
            self.totals[data.response(i)] += 1;
        }
        if self.totals.iter().filter(|&&c| c > 0).count() < 2 {
            return None;
        }
        let total_sq: u64 = self.totals.iter().map(|c| c * c).sum();

        self.order.clear();
        self.order.extend_from_slice(candidates);
        self.order.sort_unstable();
        self.order.dedup();

        let mut best: Option<Candidate> = None;
        for oi in 0..self.order.len() {
            let covariate = self.order[oi];
            self.pairs.clear();
            self.pairs
                .extend(samples.iter().map(|&i| (data.value(i, covariate), data.response(i))));
            self.pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            if self.pairs[0].0 == self.pairs[n - 1].0 {
                continue;
            }

            self.left.iter_mut().for_each(|c| *c = 0);
            self.right.copy_from_slice(&self.totals);
            let (mut left_sq, mut right_sq) = (0u64, total_sq);
            for k in 0..n - 1 {
                let class = self.pairs[k].1;
                left_sq += 2 * self.left[class] + 1;
                self.left[class] += 1;
                right_sq -= 2 * self.right[class] - 1;
                self.right[class] -= 1;

                let (lo, hi) = (self.pairs[k].0, self.pairs[k + 1].0);
                if lo == hi {
                    continue;
                }
                let n_left = (k + 1) as u128;
                let n_right = (n - k - 1) as u128;
                let num = left_sq as u128 * n_right + right_sq as u128 * n_left;
                let den = n_left * n_right;
                let better = match &best {
                    None => true,
                    Some(b) => num * b.den > b.num * den,
                };
                if better {
                    best = Some(Candidate {
                        split: Split {
                            covariate,
                            threshold: midpoint(lo, hi),
                            impurity_decrease: 0.0,
                        },
                        num,
                        den,
                    });
                }
            }
        }

        let best = best?;
        // Strictly positive decrease: score > Σc²/n.
        if best.num * n as u128 <= total_sq as u128 * best.den {
            return None;
        }
        let nf = n as f64;
        let decrease = (best.num as f64 / best.den as f64 - total_sq as f64 / nf) / nf;
        Some(Split {
            impurity_decrease: decrease,
            ..best.split
        })
    }
}

/// Midpoint of `lo < hi`, kept strictly below `hi` so `hi` routes right.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid < hi && mid >= lo {
        mid
    } else {
        lo
    }
}
