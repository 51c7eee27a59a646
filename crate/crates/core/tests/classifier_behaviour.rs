//! Forest and SVM behaviour on constructed datasets.

mod common;

use notewatch::classifiers::*;
use proptest::prelude::*;
use rand::Rng;

fn matrix(rows: &[Vec<f64>]) -> FeatureMatrix {
    let names = (0..rows[0].len()).map(|j| format!("f{j}")).collect();
    FeatureMatrix::from_rows(names, rows).unwrap()
}

fn forest(n_estimators: usize, seed: u64) -> RandomForestConfig {
    RandomForestConfig {
        n_estimators,
        min_samples_leaf: 1,
        max_features: MaxFeatures::Count(2),
        criterion: Criterion::Gini,
        seed,
    }
}

fn xor(n: usize, noise: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<bool>) {
    let mut rng = common::rng(seed);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for _ in 0..n {
        let (a, b) = (rng.random::<f64>(), rng.random::<f64>());
        let label = (a > 0.5) ^ (b > 0.5);
        x.push(vec![a, b]);
        y.push(if rng.random::<f64>() < noise { !label } else { label });
    }
    (x, y)
}

#[test]
fn xor_is_learned_out_of_fold() {
    let (x, y) = xor(200, 0.05, 1);
    let mut correct = 0;
    for fold in 0..5 {
        let train: Vec<usize> = (0..200).filter(|i| i % 5 != fold).collect();
        let test: Vec<usize> = (0..200).filter(|i| i % 5 == fold).collect();
        let xt: Vec<Vec<f64>> = train.iter().map(|&i| x[i].clone()).collect();
        let yt: Vec<bool> = train.iter().map(|&i| y[i]).collect();
        let f = fit_forest(&matrix(&xt), &yt, [1.0, 1.0], &forest(100, fold as u64)).unwrap();
        correct += test.iter().filter(|&&i| (f.predict_row(&x[i]) >= 0.5) == y[i]).count();
    }
    let acc = correct as f64 / 200.0;
    assert!(acc > 0.9, "accuracy {acc}");
}

#[test]
fn symmetric_point_is_undecided() {
    // mirror-image classes around x = 0; queries sit on the mirror
    let mut rng = common::rng(2);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for _ in 0..100 {
        let (a, b) = (rng.random_range(0.05..1.0), rng.random_range(-1.0..1.0));
        x.push(vec![a, b]);
        y.push(true);
        x.push(vec![-a, b]);
        y.push(false);
    }
    let mut cfg = forest(500, 3);
    cfg.max_features = MaxFeatures::Count(1);
    let f = fit_forest(&matrix(&x), &y, [1.0, 1.0], &cfg).unwrap();
    let p = (-9..=9).map(|b| f.predict_row(&[0.0, b as f64 / 10.0])).sum::<f64>() / 19.0;
    assert!((p - 0.5).abs() <= 0.1, "p = {p}");
}

#[test]
fn planted_feature_ranks_first() {
    let mut first = 0;
    for seed in 0..10 {
        let mut rng = common::rng(100 + seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..300 {
            let label = rng.random::<f64>() < 0.3;
            let mut row: Vec<f64> = (0..21).map(|_| rng.random::<f64>()).collect();
            row[7] = if label { 0.6 } else { 0.0 } + rng.random::<f64>() * 0.7;
            x.push(row);
            y.push(label);
        }
        let w = class_weights(&y).unwrap();
        let cfg = RandomForestConfig {
            n_estimators: 100,
            min_samples_leaf: 3,
            max_features: MaxFeatures::Sqrt,
            criterion: Criterion::Gini,
            seed,
        };
        let f = fit_forest(&matrix(&x), &y, w, &cfg).unwrap();
        let best = (0..21).max_by(|&a, &b| f.importances[a].partial_cmp(&f.importances[b]).unwrap()).unwrap();
        if best == 7 {
            first += 1;
        }
    }
    assert!(first >= 9, "planted feature first in {first}/10");
}

#[test]
fn inverse_frequency_class_weights() {
    let mut y = vec![true; 425];
    y.extend(vec![false; 3855]);
    let [neg, pos] = class_weights(&y).unwrap();
    assert!((pos - 4280.0 / 850.0).abs() < 1e-12);
    assert!((neg - 4280.0 / 7710.0).abs() < 1e-12);
}

fn dataset() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<bool>)> {
    (6usize..40).prop_flat_map(|n| {
        (
            prop::collection::vec(prop::collection::vec((0u8..10).prop_map(|v| v as f64), 3), n),
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_map(|(x, mut y)| {
                y[0] = true;
                y[1] = false;
                (x, y)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn forest_probabilities_are_vote_fractions((x, y) in dataset(), trees in 1usize..12, seed in 0u64..100) {
        let f = fit_forest(&matrix(&x), &y, class_weights(&y).unwrap(), &forest(trees, seed)).unwrap();
        for row in &x {
            let p = f.predict_row(row);
            prop_assert!((0.0..=1.0).contains(&p));
            let votes = p * trees as f64;
            prop_assert!((votes - votes.round()).abs() < 1e-9);
        }
        prop_assert!((f.importances.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(f.importances.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn accepted_splits_separate_rows((x, y) in dataset(), seed in 0u64..100) {
        let f = fit_forest(&matrix(&x), &y, [1.0, 1.0], &forest(5, seed)).unwrap();
        for tree in &f.trees {
            for node in tree.nodes.iter().filter(|n| !n.is_leaf()) {
                let col: Vec<f64> = x.iter().map(|r| r[node.feature as usize]).collect();
                prop_assert!(col.iter().any(|&v| v <= node.threshold) && col.iter().any(|&v| v > node.threshold));
                let (l, r) = (&tree.nodes[node.left as usize], &tree.nodes[node.right as usize]);
                prop_assert!(l.positive_fraction != node.positive_fraction || r.positive_fraction != node.positive_fraction);
            }
        }
    }

    #[test]
    fn scaling_class_weights_keeps_forest_splits((x, y) in dataset(), seed in 0u64..100, scale in prop_oneof![Just(0.25), Just(2.0), Just(8.0)]) {
        let w = class_weights(&y).unwrap();
        let a = fit_forest(&matrix(&x), &y, w, &forest(5, seed)).unwrap();
        let b = fit_forest(&matrix(&x), &y, [w[0] * scale, w[1] * scale], &forest(5, seed)).unwrap();
        for (ta, tb) in a.trees.iter().zip(&b.trees) {
            prop_assert_eq!(ta.nodes.len(), tb.nodes.len());
            for (na, nb) in ta.nodes.iter().zip(&tb.nodes) {
                prop_assert_eq!((na.feature, na.threshold, na.left, na.right), (nb.feature, nb.threshold, nb.left, nb.right));
            }
        }
    }

    #[test]
    fn smo_solution_is_feasible(seed in 0u64..500, n in 4usize..30) {
        let p = common::dual::random_problem(seed, n);
        let mut cache = KernelCache::new(&p.x, p.gamma, n);
        let s = solve_dual(&mut cache, &p.y, &p.c, 1e-3, 1_000_000);
        let ya: f64 = s.alpha.iter().zip(&p.y).map(|(a, y)| a * y).sum();
        prop_assert!(ya.abs() <= 1e-9);
        for (a, c) in s.alpha.iter().zip(&p.c) {
            prop_assert!(*a >= -1e-9 && *a <= c + 1e-9);
        }
    }
}

#[test]
fn scaling_class_weights_keeps_svm_decision_argmax() {
    // separable data: no multiplier reaches its bound, so the solution does
    // not depend on the weight scale
    let mut rng = common::rng(7);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..40 {
        let label = i % 2 == 0;
        let centre = if label { 1.5 } else { -1.5 };
        x.push(vec![centre + rng.random_range(-0.5..0.5), rng.random_range(-1.0..1.0)]);
        y.push(label);
    }
    let cfg = SvmConfig { c: 100.0, gamma: 0.5, ..Default::default() };
    let grid: Vec<Vec<f64>> = (0..21)
        .flat_map(|i| (0..21).map(move |j| vec![-2.0 + 0.2 * i as f64, -2.0 + 0.2 * j as f64]))
        .collect();
    let argmax = |m: &SvmKernelModel| {
        (0..grid.len())
            .max_by(|&a, &b| m.decision(&grid[a]).partial_cmp(&m.decision(&grid[b])).unwrap())
            .unwrap()
    };
    let a = fit_kernel_machine(&x, &y, [1.0, 1.0], &cfg);
    for scale in [0.5, 3.0] {
        let b = fit_kernel_machine(&x, &y, [scale, scale], &cfg);
        assert_eq!(argmax(&a), argmax(&b));
        for row in &grid {
            assert_eq!(a.decision(row) > 0.0, b.decision(row) > 0.0);
        }
    }
}
