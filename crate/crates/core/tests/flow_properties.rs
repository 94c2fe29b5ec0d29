mod common;

use common::{brute_force, random_forest};
use forestflow::flow::{
    aggregate_flows, aggregate_tree, apply_threshold, merge, FlowAggregate, GroupLabel,
};
use forestflow::rf::ForestModel;
use proptest::prelude::*;

fn single(forest: &ForestModel, i: usize, max_rank: usize) -> FlowAggregate {
    aggregate_tree(&forest.trees[i], max_rank, None, None, forest.covariate_names.clone())
}

fn assert_conserved(agg: &FlowAggregate) {
    let max_rank = agg.max_rank();
    for (&g, &total) in agg.group_totals() {
        if g.rank > 1 {
            assert_eq!(agg.inflow(g), total, "inflow of {g:?}");
        }
        if g.label != GroupLabel::Terminus && g.rank < max_rank {
            assert_eq!(agg.outflow(g), total, "outflow of {g:?}");
        }
        if g.label == GroupLabel::Terminus || g.rank == max_rank {
            assert_eq!(agg.outflow(g), 0, "{g:?} must be absorbing");
        }
    }
    assert_eq!(agg.rank_total(1), agg.total_paths());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matches_brute_force(seed: u64, n_trees in 1usize..6, p in 1usize..=10, k in 1usize..=4, max_rank in 1usize..=8) {
        let f = random_forest(seed, n_trees, p, k);
        for class in std::iter::once(None).chain((0..k).map(Some)) {
            let name = class.map(|c| f.class_names[c].clone());
            let agg = aggregate_flows(&f, max_rank, name.as_deref()).unwrap();
            let (edges, totals, n) = brute_force(&f.trees, max_rank, class);
            prop_assert_eq!(agg.edge_weights(), &edges);
            prop_assert_eq!(agg.group_totals(), &totals);
            prop_assert_eq!(agg.total_paths(), n);
        }
    }

    #[test]
    fn conservation_and_class_decomposition(seed: u64, k in 1usize..=4, max_rank in 1usize..=8) {
        let f = random_forest(seed, 4, 6, k);
        let all = aggregate_flows(&f, max_rank, None).unwrap();
        assert_conserved(&all);
        let (mut edges, mut totals, mut n) = (common::Edges::new(), common::Totals::new(), 0);
        for c in &f.class_names {
            let part = aggregate_flows(&f, max_rank, Some(c)).unwrap();
            assert_conserved(&part);
            for (&k, &w) in part.edge_weights() {
                *edges.entry(k).or_default() += w;
            }
            for (&g, &t) in part.group_totals() {
                *totals.entry(g).or_default() += t;
            }
            n += part.total_paths();
        }
        prop_assert_eq!(&edges, all.edge_weights());
        prop_assert_eq!(&totals, all.group_totals());
        prop_assert_eq!(n, all.total_paths());
    }

    #[test]
    fn merge_is_commutative_and_associative(seed: u64, max_rank in 1usize..=6) {
        let f = random_forest(seed, 3, 5, 3);
        let (a, b, c) = (single(&f, 0, max_rank), single(&f, 1, max_rank), single(&f, 2, max_rank));
        prop_assert_eq!(merge(&a, &b).unwrap(), merge(&b, &a).unwrap());
        prop_assert_eq!(
            merge(&merge(&a, &b).unwrap(), &c).unwrap(),
            merge(&a, &merge(&b, &c).unwrap()).unwrap()
        );
        prop_assert_eq!(merge(&merge(&a, &b).unwrap(), &c).unwrap(), aggregate_flows(&f, max_rank, None).unwrap());
    }

    #[test]
    fn threshold_is_idempotent_and_monotone(seed: u64, theta in 0.0f64..=1.0, max_rank in 1usize..=6) {
        let f = random_forest(seed, 5, 4, 2);
        let agg = aggregate_flows(&f, max_rank, None).unwrap();
        let once = apply_threshold(&agg, theta).unwrap();
        // surviving groups at rank 1 keep their totals; deeper ones never grow
        for (g, t) in once.group_totals() {
            prop_assert!(*t <= agg.group_totals()[g]);
            if g.rank == 1 {
                prop_assert_eq!(*t, agg.group_totals()[g]);
            }
        }
        for ((from, to), w) in once.edge_weights() {
            prop_assert_eq!(Some(w), agg.edge_weights().get(&(*from, *to)));
        }
        let zero = apply_threshold(&agg, 0.0).unwrap();
        prop_assert_eq!(zero.edge_weights(), agg.edge_weights());
        prop_assert_eq!(zero.group_totals(), agg.group_totals());
        for r in once.threshold().unwrap().removed_fraction.iter() {
            prop_assert!((0.0..=1.0).contains(r));
        }
    }
}

#[test]
fn ten_tree_forest_equals_merged_singletons() {
    let f = random_forest(11, 10, 8, 3);
    for max_rank in [1, 2, 3, 5, 8] {
        let whole = aggregate_flows(&f, max_rank, None).unwrap();
        let mut acc = FlowAggregate::empty(max_rank, None, f.covariate_names.clone());
        for i in 0..f.trees.len() {
            acc = merge(&acc, &single(&f, i, max_rank)).unwrap();
        }
        assert_eq!(acc, whole);
        assert_eq!(whole.n_trees(), 10);
    }
}
