use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::rf::{ForestModel, NodeKind, Tree};

use super::paths::leaf_counts_where;
use super::{FlowError, GroupLabel, RankedGroup};

/// Paths through the forest that pass `from` and then `to` (one rank later).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowEdge {
    pub from: RankedGroup,
    pub to: RankedGroup,
    pub weight: u64,
}

/// Removed share of each rank's paths after thresholding.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdReport {
    pub theta: f64,
    /// Entry `r - 1` is the fraction of rank-`r` path mass that was removed.
    pub removed_fraction: Vec<f64>,
}

/// The rank-indexed flow network of a forest.
///
/// Weights count root-to-leaf paths. `Terminus` is absorbing: a path ending
/// at rank `r` contributes nothing beyond rank `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowAggregate {
    pub(crate) edges: BTreeMap<(RankedGroup, RankedGroup), u64>,
    pub(crate) group_totals: BTreeMap<RankedGroup, u64>,
    pub(crate) total_paths: u64,
    pub(crate) max_rank: usize,
    pub(crate) class_restriction: Option<String>,
    pub(crate) n_trees: usize,
    pub(crate) covariate_names: Vec<String>,
    pub(crate) threshold: Option<ThresholdReport>,
}

impl FlowAggregate {
    /// The merge identity for the given parameters.
    pub fn empty(
        max_rank: usize,
        class_restriction: Option<String>,
        covariate_names: Vec<String>,
    ) -> Self {
        Self {
            edges: BTreeMap::new(),
            group_totals: BTreeMap::new(),
            total_paths: 0,
            max_rank,
            class_restriction,
            n_trees: 0,
            covariate_names,
            threshold: None,
        }
    }

    /// Edges ordered by (from, to).
    pub fn edges(&self) -> impl Iterator<Item = FlowEdge> + '_ {
        self.edges.iter().map(|(&(from, to), &weight)| FlowEdge { from, to, weight })
    }

    pub fn edge_weights(&self) -> &BTreeMap<(RankedGroup, RankedGroup), u64> {
        &self.edges
    }

    pub fn group_totals(&self) -> &BTreeMap<RankedGroup, u64> {
        &self.group_totals
    }

    pub fn total_paths(&self) -> u64 {
        self.total_paths
    }

    pub fn max_rank(&self) -> usize {
        self.max_rank
    }

    pub fn class_restriction(&self) -> Option<&str> {
        self.class_restriction.as_deref()
    }

    pub fn n_trees(&self) -> usize {
        self.n_trees
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn threshold(&self) -> Option<&ThresholdReport> {
        self.threshold.as_ref()
    }

    pub fn is_empty(&self) -> bool {
        self.group_totals.is_empty()
    }

    /// Sum of group totals at `rank`.
    pub fn rank_total(&self, rank: usize) -> u64 {
        self.groups_at(rank).map(|(_, t)| t).sum()
    }

    pub fn groups_at(&self, rank: usize) -> impl Iterator<Item = (RankedGroup, u64)> + '_ {
        let lo = RankedGroup::new(rank, GroupLabel::Terminus);
        self.group_totals
            .range(lo..)
            .take_while(move |(g, _)| g.rank == rank)
            .map(|(&g, &t)| (g, t))
    }

    pub fn inflow(&self, group: RankedGroup) -> u64 {
        self.edges().filter(|e| e.to == group).map(|e| e.weight).sum()
    }

    pub fn outflow(&self, group: RankedGroup) -> u64 {
        self.edges().filter(|e| e.from == group).map(|e| e.weight).sum()
    }

    /// Display name of a group's label.
    pub fn label_name(&self, label: GroupLabel) -> &str {
        match label {
            GroupLabel::Terminus => "Terminus",
            GroupLabel::Covariate(c) => &self.covariate_names[c],
        }
    }
}

/// Aggregates every root-to-leaf path of `forest`, truncated after `max_rank`.
///
/// With `class_restriction`, only paths ending in a leaf that predicts that
/// class are counted. Each tree is aggregated from its subtree leaf counts
/// (the weight of edge parent→child is the child's leaf count) and the
/// per-tree results are merged.
pub fn aggregate_flows(
    forest: &ForestModel,
    max_rank: usize,
    class_restriction: Option<&str>,
) -> Result<FlowAggregate, FlowError> {
    if max_rank == 0 {
        return Err(FlowError::InvalidMaxRank);
    }
    let class = match class_restriction {
        None => None,
        Some(name) => Some(forest.class_index(name).ok_or_else(|| FlowError::UnknownClass {
            class: name.to_string(),
            valid: forest.class_names.clone(),
        })?),
    };
    let restriction = class_restriction.map(str::to_string);
    let names = &forest.covariate_names;

    let merged = forest
        .trees
        .par_iter()
        .map(|t| aggregate_tree(t, max_rank, class, restriction.clone(), names.clone()))
        .reduce(
            || FlowAggregate::empty(max_rank, restriction.clone(), names.clone()),
            |a, b| merge_unchecked(a, &b),
        );
    Ok(merged)
}

/// Aggregate of a single tree.
pub fn aggregate_tree(
    tree: &Tree,
    max_rank: usize,
    class: Option<usize>,
    class_restriction: Option<String>,
    covariate_names: Vec<String>,
) -> FlowAggregate {
    let counts = leaf_counts_where(tree, |c| class.is_none_or(|k| k == c));
    let mut agg = FlowAggregate::empty(max_rank, class_restriction, covariate_names);
    agg.n_trees = 1;
    agg.total_paths = counts[tree.root()];

    let group_of = |id: usize, rank: usize| {
        let label = match tree.node(id).kind {
            NodeKind::Leaf { .. } => GroupLabel::Terminus,
            NodeKind::Internal { covariate, .. } => GroupLabel::Covariate(covariate),
        };
        RankedGroup::new(rank, label)
    };

    let mut stack = vec![(tree.root(), 1usize)];
    while let Some((id, rank)) = stack.pop() {
        if counts[id] == 0 {
            continue;
        }
        let group = group_of(id, rank);
        *agg.group_totals.entry(group).or_default() += counts[id];
        if rank == max_rank {
            continue;
        }
        if let Some((l, r)) = tree.node(id).children() {
            for child in [l, r] {
                if counts[child] > 0 {
                    *agg.edges.entry((group, group_of(child, rank + 1))).or_default() +=
                        counts[child];
                    stack.push((child, rank + 1));
                }
            }
        }
    }
    agg
}

/// Edge-wise and group-wise sum of two aggregates built with the same
/// `max_rank`, class restriction and covariates.
pub fn merge(a: &FlowAggregate, b: &FlowAggregate) -> Result<FlowAggregate, FlowError> {
    if a.max_rank != b.max_rank {
        return Err(FlowError::Mismatch(format!(
            "max_rank {} vs {}",
            a.max_rank, b.max_rank
        )));
    }
    if a.class_restriction != b.class_restriction {
        return Err(FlowError::Mismatch(format!(
            "class restriction {:?} vs {:?}",
            a.class_restriction, b.class_restriction
        )));
    }
    if a.covariate_names != b.covariate_names {
        return Err(FlowError::Mismatch("covariate names differ".into()));
    }
    if a.threshold.is_some() || b.threshold.is_some() {
        return Err(FlowError::Mismatch(
            "thresholded aggregates cannot be merged".into(),
        ));
    }
    Ok(merge_unchecked(a.clone(), b))
}

fn merge_unchecked(mut a: FlowAggregate, b: &FlowAggregate) -> FlowAggregate {
    for (&k, &w) in &b.edges {
        *a.edges.entry(k).or_default() += w;
    }
    for (&g, &t) in &b.group_totals {
        *a.group_totals.entry(g).or_default() += t;
    }
    a.total_paths += b.total_paths;
    a.n_trees += b.n_trees;
    a
}
