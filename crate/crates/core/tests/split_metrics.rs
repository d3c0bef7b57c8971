mod common;

use std::collections::HashSet;

use common::random_instance;
use ganc_core::dataset::{compute_item_stats, split_per_user};
use ganc_core::metrics::{
    coverage_at_n, evaluate, gini, lt_accuracy_at_n, micro_recall, strat_recall_at_n,
};
use ganc_core::rerank::{independent_topn, Sequential};
use ganc_core::scoring::StatCoverage;
use ganc_core::{Protocol, Rating, TopNCollection};
use proptest::prelude::*;

fn ratings(seed: u64) -> Vec<Rating> {
    (0..30u64)
        .flat_map(|u| {
            (0..(5 + (u * 7 + seed) % 20))
                .map(move |k| Rating::new(u, (k * 13 + u * seed) % 60, (1 + k % 5) as f64))
        })
        .collect::<Vec<_>>()
}

proptest! {
    #[test]
    fn split_partitions_each_user(seed in any::<u64>(), kappa in 0.1f64..=1.0, tau in 1usize..12) {
        let rs = ganc_core::dataset::dedup_last_wins(ratings(seed % 97));
        let Ok(split) = split_per_user(&rs, kappa, tau, seed) else { return Ok(()); };
        let train: HashSet<(u64, u64)> = split.train().iter().map(|r| (r.user.0, r.item.0)).collect();
        for r in split.test() {
            prop_assert!(!train.contains(&(r.user.0, r.item.0)));
            prop_assert!(split.item_index(r.item).is_some() && split.user_index(r.user).is_some());
        }
        for u in 0..split.num_users() {
            let id = split.user_id(u).0;
            let total = rs.iter().filter(|r| r.user.0 == id).count();
            prop_assert!(total >= tau);
            let want = ((kappa * total as f64 - 1e-9).ceil() as usize).clamp(1, total);
            prop_assert_eq!(split.train_items(u).len(), want);
        }
        let again = split_per_user(&rs, kappa, tau, seed).unwrap();
        prop_assert_eq!(again.train(), split.train());
        prop_assert_eq!(again.test(), split.test());
    }

    #[test]
    fn gini_is_bounded_and_scale_free(counts in prop::collection::vec(0u32..50, 1..40), k in 1u32..5) {
        prop_assume!(counts.iter().any(|&c| c > 0));
        let g = gini(&counts).unwrap();
        prop_assert!((0.0..1.0).contains(&g));
        let scaled: Vec<u32> = counts.iter().map(|c| c * k).collect();
        prop_assert!((gini(&scaled).unwrap() - g).abs() < 1e-12);
    }

    #[test]
    fn metrics_stay_in_range(seed in any::<u64>(), theta in 0.0f64..=1.0) {
        let inst = random_instance(seed, 8, 14, 2);
        let s = &inst.split;
        prop_assume!(!s.test().is_empty());
        let stats = compute_item_stats(s);
        let theta = vec![theta; s.num_users()];
        let coll = independent_topn(s, &theta, &inst.arec, &StatCoverage::new(&stats), 2, Protocol::AllUnrated, &Sequential).unwrap();
        // threshold 1 keeps every test rating relevant, so nothing is undefined
        let r = evaluate(&coll, s, &stats, Protocol::AllUnrated, 2, 0.5, 1.0).unwrap();
        for v in [r.precision, r.recall, r.f_measure, r.lt_accuracy, r.coverage, r.gini] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        if let Ok(m) = micro_recall(&coll, s, 3.0) {
            prop_assert!((strat_recall_at_n(&coll, s, &stats, 0.0, 3.0).unwrap() - m).abs() < 1e-12);
        }
        prop_assert_eq!(coverage_at_n(&coll, s), r.coverage);
    }
}

#[test]
fn long_tail_only_lists_score_one() {
    let inst = random_instance(4, 6, 30, 1);
    let s = &inst.split;
    let stats = compute_item_stats(s);
    let lt = stats.long_tail_items();
    let lists = (0..s.num_users())
        .map(|u| {
            lt.iter()
                .copied()
                .filter(|&i| !s.has_seen(u, i))
                .take(1)
                .collect()
        })
        .collect();
    let coll = TopNCollection::new(1, Protocol::AllUnrated, lists);
    if coll.evaluated_users().count() > 0 {
        assert_eq!(lt_accuracy_at_n(&coll, &stats).unwrap(), 1.0);
    }
}
