//! Metric properties and agreement with brute-force references.

mod common;

use common::brute;
use notewatch::metrics::*;
use proptest::prelude::*;
use rand::Rng;

fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (2usize..60).prop_flat_map(|n| {
        (
            prop::collection::vec(prop_oneof![(0u8..8).prop_map(|v| v as f64 / 7.0), 0.0f64..1.0], n),
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_map(|(s, mut l)| {
                l[0] = true;
                l[1] = false;
                (s, l)
            })
    })
}

/// Replace each distinct score by a new value that keeps the order exactly.
fn monotone_remap(scores: &[f64]) -> Vec<f64> {
    let mut uniq = scores.to_vec();
    uniq.sort_by(|a, b| a.partial_cmp(b).unwrap());
    uniq.dedup();
    scores
        .iter()
        .map(|s| {
            let r = uniq.partition_point(|u| u < s) as f64;
            r * r * 3.0 - 7.5
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn matches_brute_force((scores, labels) in instance()) {
        prop_assert!((pr_auc(&scores, &labels).unwrap() - brute::pr_auc(&scores, &labels)).abs() < 1e-9);
        prop_assert!((roc_auc(&scores, &labels).unwrap() - brute::roc_auc(&scores, &labels)).abs() < 1e-9);
        prop_assert!((f2_max(&scores, &labels).unwrap().1 - brute::f2_max(&scores, &labels)).abs() < 1e-9);
    }

    #[test]
    fn confusion_partitions_the_sample((scores, labels) in instance(), t in -0.1f64..1.1) {
        let c = confusion_at(&scores, &labels, t).unwrap();
        prop_assert_eq!(c.total(), scores.len());
        prop_assert_eq!((c.true_pos, c.false_pos, c.false_neg, c.true_neg), brute::counts(&scores, &labels, t));
        prop_assert_eq!(c.recall(), c.tpr());
    }

    #[test]
    fn values_lie_in_unit_interval((scores, labels) in instance()) {
        for v in [pr_auc(&scores, &labels).unwrap(), roc_auc(&scores, &labels).unwrap(), f2_max(&scores, &labels).unwrap().1] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn curves_are_monotone((scores, labels) in instance()) {
        let roc = roc_curve(&scores, &labels).unwrap();
        for w in roc.points.windows(2) {
            prop_assert!(w[1].x >= w[0].x && w[1].y >= w[0].y);
            prop_assert!(w[1].threshold <= w[0].threshold);
        }
        let pr = pr_curve(&scores, &labels).unwrap();
        for w in pr.points.windows(2) {
            prop_assert!(w[1].x >= w[0].x);
        }
    }

    #[test]
    fn aucs_are_rank_invariant((scores, labels) in instance()) {
        let mapped = monotone_remap(&scores);
        prop_assert_eq!(pr_auc(&scores, &labels).unwrap(), pr_auc(&mapped, &labels).unwrap());
        prop_assert_eq!(roc_auc(&scores, &labels).unwrap(), roc_auc(&mapped, &labels).unwrap());
    }

    #[test]
    fn flipping_labels_complements_roc(seed in 0u64..10_000) {
        let mut rng = common::rng(seed);
        let (scores, labels) = common::tie_free_instance(&mut rng, 60);
        let flipped: Vec<bool> = labels.iter().map(|l| !l).collect();
        let sum = roc_auc(&scores, &labels).unwrap() + roc_auc(&scores, &flipped).unwrap();
        prop_assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn f2_max_dominates_always_positive((scores, labels) in instance()) {
        let anchor = f_beta(&confusion_at(&scores, &labels, 0.0).unwrap(), 2.0);
        let (t, v) = f2_max(&scores, &labels).unwrap();
        prop_assert!(v >= anchor);
        prop_assert!((f_beta(&confusion_at(&scores, &labels, t).unwrap(), 2.0) - v).abs() < 1e-12);
    }

    #[test]
    fn kappa_is_symmetric_and_matches_closed_form(
        a in prop::collection::vec(any::<bool>(), 1..80),
        flips in prop::collection::vec(any::<bool>(), 80),
    ) {
        let b: Vec<bool> = a.iter().zip(&flips).map(|(x, f)| x ^ f).collect();
        let ab = cohens_kappa(&a, &b).unwrap();
        prop_assert_eq!(ab, cohens_kappa(&b, &a).unwrap());
        prop_assert!((ab - brute::kappa(&a, &b)).abs() < 1e-12);
    }
}

#[test]
fn large_random_confusion_matches_naive_loop() {
    let mut rng = common::rng(40);
    let scores: Vec<f64> = (0..100).map(|_| rng.random()).collect();
    let labels: Vec<bool> = (0..100).map(|_| rng.random()).collect();
    for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let c = confusion_at(&scores, &labels, t).unwrap();
        assert_eq!((c.true_pos, c.false_pos, c.false_neg, c.true_neg), brute::counts(&scores, &labels, t));
    }
}

#[test]
fn independent_scores_give_chance_auc() {
    let mut rng = common::rng(41);
    let scores: Vec<f64> = (0..10_000).map(|_| rng.random()).collect();
    let labels: Vec<bool> = (0..10_000).map(|_| rng.random()).collect();
    assert!((roc_auc(&scores, &labels).unwrap() - 0.5).abs() < 0.02);
}

#[test]
fn random_scores_give_prevalence_pr_auc() {
    let mut rng = common::rng(42);
    let scores: Vec<f64> = (0..10_000).map(|_| rng.random()).collect();
    let labels: Vec<bool> = (0..10_000).map(|_| rng.random::<f64>() < 0.10).collect();
    assert!((pr_auc(&scores, &labels).unwrap() - 0.10).abs() < 0.02);
}

#[test]
fn independent_raters_have_near_zero_kappa() {
    let mut rng = common::rng(43);
    let a: Vec<bool> = (0..10_000).map(|_| rng.random()).collect();
    let b: Vec<bool> = (0..10_000).map(|_| rng.random()).collect();
    assert!(cohens_kappa(&a, &b).unwrap().abs() < 0.05);
}

#[test]
fn mann_whitney_identity_on_tie_free_data() {
    let mut rng = common::rng(44);
    for _ in 0..50 {
        let (scores, labels) = common::tie_free_instance(&mut rng, 50);
        assert!((roc_auc(&scores, &labels).unwrap() - brute::mann_whitney(&scores, &labels)).abs() < 1e-9);
    }
}
