use std::collections::{BTreeMap, BTreeSet};

use super::aggregate::{FlowAggregate, ThresholdReport};
use super::{FlowError, RankedGroup};

/// Drops groups carrying less than `theta` of their rank's path mass.
///
/// 1. A group `g` at rank `r` is removed when
///    `total(g) < theta * (sum of totals at rank r)`, judged on the input.
/// 2. Edges touching a removed group are dropped.
/// 3. Totals are recomputed rank by rank from surviving edges: rank-1 groups
///    keep their totals, deeper groups get their surviving inflow. A group
///    left with no inflow disappears, and its outgoing edges with it.
///
/// `total_paths` is kept, so shares stay relative to the whole forest. The
/// removed fraction of each rank is recorded in the threshold report.
pub fn apply_threshold(agg: &FlowAggregate, theta: f64) -> Result<FlowAggregate, FlowError> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(FlowError::ThetaOutOfRange(theta));
    }
    let max_rank = agg.max_rank;
    let rank_sums: Vec<u64> = (1..=max_rank).map(|r| agg.rank_total(r)).collect();

    let removed: BTreeSet<RankedGroup> = agg
        .group_totals
        .iter()
        .filter(|(g, &t)| (t as f64) < theta * rank_sums[g.rank - 1] as f64)
        .map(|(&g, _)| g)
        .collect();

    let mut totals: BTreeMap<RankedGroup, u64> = BTreeMap::new();
    let mut edges = BTreeMap::new();
    for rank in 1..=max_rank {
        if rank == 1 {
            for (g, t) in agg.groups_at(1) {
                if !removed.contains(&g) {
                    totals.insert(g, t);
                }
            }
        }
        // Outgoing edges of surviving groups at this rank feed the next rank.
        if rank < max_rank {
            for (&(from, to), &w) in &agg.edges {
                if from.rank == rank
                    && totals.contains_key(&from)
                    && !removed.contains(&to)
                {
                    edges.insert((from, to), w);
                    *totals.entry(to).or_default() += w;
                }
            }
        }
    }

    let removed_fraction = (1..=max_rank)
        .map(|r| {
            let before = rank_sums[r - 1];
            if before == 0 {
                return 0.0;
            }
            let after: u64 = totals.iter().filter(|(g, _)| g.rank == r).map(|(_, t)| t).sum();
            (before - after) as f64 / before as f64
        })
        .collect();

    Ok(FlowAggregate {
        edges,
        group_totals: totals,
        threshold: Some(ThresholdReport {
            theta,
            removed_fraction,
        }),
        ..agg.clone()
    })
}
