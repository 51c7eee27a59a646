//! Class-weighted random forest with exact best-split search.
//!
//! Each tree sees a bootstrap sample; drawn multiplicities and class weights
//! together form per-row weights that enter every impurity and leaf
//! computation. `min_samples_leaf` counts distinct training rows. Trees vote
//! hard, so a forest probability is the fraction of trees voting positive.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::FeatureMatrix;
use crate::error::{Error, Result};
use crate::util;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Criterion {
    Gini,
    Entropy,
}

impl Criterion {
    fn impurity(self, w0: f64, w1: f64) -> f64 {
        let total = w0 + w1;
        if total <= 0.0 {
            return 0.0;
        }
        let (p0, p1) = (w0 / total, w1 / total);
        match self {
            Criterion::Gini => 1.0 - p0 * p0 - p1 * p1,
            Criterion::Entropy => {
                let h = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
                h(p0) + h(p1)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MaxFeatures {
    Count(usize),
    /// `floor(sqrt(n_features))`, at least 1.
    Sqrt,
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        let want = match self {
            MaxFeatures::Count(c) => c,
            MaxFeatures::Sqrt => ((n_features as f64).sqrt().floor() as usize).max(1),
        };
        if want > n_features {
            log::warn!("max_features {want} exceeds {n_features} features; clamping");
        }
        want.clamp(1, n_features.max(1))
    }
}

impl std::fmt::Display for MaxFeatures {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MaxFeatures::Count(c) => write!(f, "{c}"),
            MaxFeatures::Sqrt => f.write_str("sqrt"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomForestConfig {
    pub n_estimators: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    pub criterion: Criterion,
    pub seed: u64,
}

impl Default for RandomForestConfig {
    fn default() -> Self {
        RandomForestConfig {
            n_estimators: 500,
            min_samples_leaf: 3,
            max_features: MaxFeatures::Sqrt,
            criterion: Criterion::Gini,
            seed: 0,
        }
    }
}

impl RandomForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_estimators == 0 {
            return Err(Error::Config("n_estimators must be at least 1".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::Config("min_samples_leaf must be at least 1".into()));
        }
        if self.max_features == MaxFeatures::Count(0) {
            return Err(Error::Config("max_features must be at least 1".into()));
        }
        Ok(())
    }
}

const LEAF: u32 = u32::MAX;
/// Minimum impurity decrease, relative to the root weight, for a split.
const MIN_DECREASE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    /// Split feature, or `u32::MAX` for a leaf.
    pub feature: u32,
    pub threshold: f64,
    pub left: u32,
    pub right: u32,
    /// Weighted positive fraction of the training rows in this node.
    pub positive_fraction: f64,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.feature == LEAF
    }

    /// Hard vote of a leaf: positive iff positive weight strictly dominates.
    pub fn vote(&self) -> bool {
        self.positive_fraction > 0.5
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_for(&self, row: &[f64]) -> &Node {
        let mut n = &self.nodes[0];
        while !n.is_leaf() {
            n = if row[n.feature as usize] <= n.threshold {
                &self.nodes[n.left as usize]
            } else {
                &self.nodes[n.right as usize]
            };
        }
        n
    }

    pub fn predict(&self, row: &[f64]) -> bool {
        self.leaf_for(row).vote()
    }

    pub fn n_splits(&self) -> usize {
        self.nodes.iter().filter(|n| !n.is_leaf()).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
    pub n_features: usize,
    /// Mean decrease in impurity per feature, summing to 1.
    pub importances: Vec<f64>,
}

impl Forest {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let votes = self.trees.iter().filter(|t| t.predict(row)).count();
        votes as f64 / self.trees.len() as f64
    }
}

/// Per-feature ranks among the distinct training values, computed once per
/// fit and shared by all trees.
struct Presorted {
    n: usize,
    /// Column-major ranks, `rank[f * n + i]`.
    rank: Vec<u32>,
    /// Sorted distinct values per feature.
    values: Vec<Vec<f64>>,
}

impl Presorted {
    fn new(x: &FeatureMatrix) -> Self {
        let (n, p) = (x.n_rows(), x.n_cols());
        let mut rank = vec![0u32; n * p];
        let mut values = Vec::with_capacity(p);
        let mut order: Vec<usize> = (0..n).collect();
        for f in 0..p {
            order.sort_by(|&a, &b| x.get(a, f).total_cmp(&x.get(b, f)));
            let mut vals: Vec<f64> = Vec::new();
            for &i in &order {
                let v = x.get(i, f);
                if vals.last() != Some(&v) {
                    vals.push(v);
                }
                rank[f * n + i] = (vals.len() - 1) as u32;
            }
            values.push(vals);
        }
        Presorted { n, rank, values }
    }

    fn rank(&self, f: usize, i: u32) -> u32 {
        self.rank[f * self.n + i as usize]
    }
}

struct Split {
    feature: usize,
    /// Rows with rank ≤ this go left.
    rank: u32,
    decrease: f64,
}

struct TreeBuilder<'a> {
    data: &'a Presorted,
    labels: &'a [bool],
    weights: Vec<f64>,
    criterion: Criterion,
    min_leaf: usize,
    mtry: usize,
    root_weight: f64,
    features: Vec<usize>,
    keys: Vec<u64>,
    /// `(rank, negative weight, positive weight, rows)` per distinct value.
    groups: Vec<(u32, f64, f64, u32)>,
    hist_w0: Vec<f64>,
    hist_w1: Vec<f64>,
    hist_n: Vec<u32>,
    importance: Vec<f64>,
}

impl TreeBuilder<'_> {
    fn totals(&self, rows: &[u32]) -> (f64, f64) {
        rows.iter().fold((0.0, 0.0), |(w0, w1), &i| {
            let w = self.weights[i as usize];
            if self.labels[i as usize] {
                (w0, w1 + w)
            } else {
                (w0 + w, w1)
            }
        })
    }

    /// Best boundary for one feature, or `None` if every row shares a value.
    /// Groups are visited in increasing rank.
    fn best_for_feature(&mut self, f: usize, rows: &[u32], w0: f64, w1: f64, parent: f64) -> Option<Option<Split>> {
        let n_unique = self.data.values[f].len();
        let m = rows.len();
        let use_sort = m * 8 < n_unique;
        let mut groups = std::mem::take(&mut self.groups);
        groups.clear();
        if use_sort {
            self.keys.clear();
            self.keys
                .extend(rows.iter().map(|&i| (self.data.rank(f, i) as u64) << 32 | i as u64));
            self.keys.sort_unstable();
            for &k in &self.keys {
                let (r, i) = ((k >> 32) as u32, (k & 0xFFFF_FFFF) as usize);
                let w = self.weights[i];
                let (a, b) = if self.labels[i] { (0.0, w) } else { (w, 0.0) };
                match groups.last_mut() {
                    Some(g) if g.0 == r => {
                        g.1 += a;
                        g.2 += b;
                        g.3 += 1;
                    }
                    _ => groups.push((r, a, b, 1)),
                }
            }
        } else {
            for &i in rows {
                let r = self.data.rank(f, i) as usize;
                let w = self.weights[i as usize];
                if self.labels[i as usize] {
                    self.hist_w1[r] += w;
                } else {
                    self.hist_w0[r] += w;
                }
                self.hist_n[r] += 1;
            }
            for r in 0..n_unique {
                if self.hist_n[r] > 0 {
                    groups.push((r as u32, self.hist_w0[r], self.hist_w1[r], self.hist_n[r]));
                    self.hist_w0[r] = 0.0;
                    self.hist_w1[r] = 0.0;
                    self.hist_n[r] = 0;
                }
            }
        }
        if groups.len() < 2 {
            self.groups = groups;
            return None;
        }
        let total = w0 + w1;
        let (mut l0, mut l1, mut ln) = (0.0, 0.0, 0usize);
        let mut best: Option<Split> = None;
        // Weighted child impurity is concave between boundary points (cuts
        // separating two groups that are not pure in the same class), so only
        // those and the ends of the feasible range can hold the minimum.
        let pure = |g: &(u32, f64, f64, u32)| -> u8 {
            match (g.1 > 0.0, g.2 > 0.0) {
                (true, false) => 0,
                (false, true) => 1,
                _ => 2,
            }
        };
        let last = groups.len() - 2;
        let mut was_feasible = false;
        for (k, g) in groups[..=last].iter().enumerate() {
            l0 += g.1;
            l1 += g.2;
            ln += g.3 as usize;
            let rn = m - ln;
            if ln < self.min_leaf || rn < self.min_leaf {
                continue;
            }
            let next = &groups[k + 1];
            let first_feasible = !was_feasible;
            was_feasible = true;
            let last_feasible = k == last || rn - (next.3 as usize) < self.min_leaf;
            let (a, b) = (pure(g), pure(next));
            let boundary = a == 2 || a != b;
            if !(boundary || first_feasible || last_feasible) {
                continue;
            }
            let (r0, r1) = ((w0 - l0).max(0.0), (w1 - l1).max(0.0));
            let child = (l0 + l1) * self.criterion.impurity(l0, l1) + (r0 + r1) * self.criterion.impurity(r0, r1);
            let decrease = parent * total - child;
            if best.as_ref().is_none_or(|b| decrease > b.decrease) {
                best = Some(Split {
                    feature: f,
                    rank: g.0,
                    decrease,
                });
            }
        }
        self.groups = groups;
        Some(best)
    }

    fn build(&mut self, rows: &mut [u32], nodes: &mut Vec<Node>, rng: &mut util::Rng) -> u32 {
        let (w0, w1) = self.totals(rows);
        let id = nodes.len() as u32;
        let positive_fraction = if w0 + w1 > 0.0 { w1 / (w0 + w1) } else { 0.0 };
        nodes.push(Node {
            feature: LEAF,
            threshold: 0.0,
            left: LEAF,
            right: LEAF,
            positive_fraction,
        });
        if rows.len() < 2 * self.min_leaf || w0 == 0.0 || w1 == 0.0 {
            return id;
        }
        let parent = self.criterion.impurity(w0, w1);

        // sample features without replacement until mtry non-constant seen
        let p = self.features.len();
        let mut visited = 0;
        let mut drawn = 0;
        let mut best: Option<Split> = None;
        while drawn < p && visited < self.mtry {
            let j = rng.random_range(drawn..p);
            self.features.swap(drawn, j);
            let f = self.features[drawn];
            drawn += 1;
            if let Some(candidate) = self.best_for_feature(f, rows, w0, w1, parent) {
                visited += 1;
                if let Some(c) = candidate {
                    if best.as_ref().is_none_or(|b| c.decrease > b.decrease) {
                        best = Some(c);
                    }
                }
            }
        }
        let Some(split) = best.filter(|s| s.decrease / self.root_weight > MIN_DECREASE) else {
            return id;
        };
        self.importance[split.feature] += split.decrease;

        let f = split.feature;
        let mut mid = 0;
        for k in 0..rows.len() {
            if self.data.rank(f, rows[k]) <= split.rank {
                rows.swap(mid, k);
                mid += 1;
            }
        }
        let vals = &self.data.values[f];
        let (lo, hi) = (vals[split.rank as usize], vals[split.rank as usize + 1]);
        let mut threshold = lo + (hi - lo) / 2.0;
        if threshold >= hi || !threshold.is_finite() {
            threshold = lo;
        }
        let (left_rows, right_rows) = rows.split_at_mut(mid);
        let left = self.build(left_rows, nodes, rng);
        let right = self.build(right_rows, nodes, rng);
        nodes[id as usize] = Node {
            feature: f as u32,
            threshold,
            left,
            right,
            positive_fraction,
        };
        id
    }
}

/// Fit a forest. `class_weight` is `[w_negative, w_positive]`.
pub fn fit_forest(x: &FeatureMatrix, y: &[bool], class_weight: [f64; 2], cfg: &RandomForestConfig) -> Result<Forest> {
    cfg.validate()?;
    let (n, p) = (x.n_rows(), x.n_cols());
    if n != y.len() {
        return Err(Error::InvalidInput(format!("{n} rows but {} labels", y.len())));
    }
    if p == 0 || n == 0 {
        return Err(Error::InvalidInput("empty feature matrix".into()));
    }
    let mtry = cfg.max_features.resolve(p);
    let data = Presorted::new(x);
    let max_unique = data.values.iter().map(Vec::len).max().unwrap_or(0);

    let fitted: Vec<(Tree, Vec<f64>)> = (0..cfg.n_estimators)
        .into_par_iter()
        .map(|t| {
            let mut rng = util::rng(cfg.seed.wrapping_add(t as u64));
            let mut counts = vec![0u32; n];
            for _ in 0..n {
                counts[rng.random_range(0..n)] += 1;
            }
            let weights: Vec<f64> = counts
                .iter()
                .zip(y)
                .map(|(&c, &label)| c as f64 * class_weight[label as usize])
                .collect();
            let mut rows: Vec<u32> = (0..n as u32).filter(|&i| counts[i as usize] > 0).collect();
            let root_weight: f64 = weights.iter().sum();
            let mut builder = TreeBuilder {
                data: &data,
                labels: y,
                weights,
                criterion: cfg.criterion,
                min_leaf: cfg.min_samples_leaf,
                mtry,
                root_weight,
                features: (0..p).collect(),
                keys: Vec::new(),
                groups: Vec::new(),
                hist_w0: vec![0.0; max_unique],
                hist_w1: vec![0.0; max_unique],
                hist_n: vec![0; max_unique],
                importance: vec![0.0; p],
            };
            let mut nodes = Vec::new();
            builder.build(&mut rows, &mut nodes, &mut rng);
            (Tree { nodes }, builder.importance)
        })
        .collect();

    let mut importances = vec![0.0; p];
    let mut contributing = 0;
    for (_, imp) in &fitted {
        let s: f64 = imp.iter().sum();
        if s > 0.0 {
            contributing += 1;
            for (a, v) in importances.iter_mut().zip(imp) {
                *a += v / s;
            }
        }
    }
    let total: f64 = importances.iter().sum();
    if contributing == 0 || total <= 0.0 {
        importances = vec![1.0 / p as f64; p];
    } else {
        importances.iter_mut().for_each(|v| *v /= total);
    }
    Ok(Forest {
        trees: fitted.into_iter().map(|(t, _)| t).collect(),
        n_features: p,
        importances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[Vec<f64>]) -> FeatureMatrix {
        let names = (0..rows[0].len()).map(|i| format!("f{i}")).collect();
        FeatureMatrix::from_rows(names, rows).unwrap()
    }

    fn cfg(trees: usize) -> RandomForestConfig {
        RandomForestConfig {
            n_estimators: trees,
            min_samples_leaf: 1,
            max_features: MaxFeatures::Count(2),
            criterion: Criterion::Gini,
            seed: 3,
        }
    }

    #[test]
    fn impurities() {
        assert_eq!(Criterion::Gini.impurity(1.0, 1.0), 0.5);
        assert_eq!(Criterion::Entropy.impurity(2.0, 2.0), 1.0);
        assert_eq!(Criterion::Gini.impurity(3.0, 0.0), 0.0);
        assert_eq!(Criterion::Entropy.impurity(0.0, 3.0), 0.0);
    }

    #[test]
    fn max_features_resolution() {
        assert_eq!(MaxFeatures::Sqrt.resolve(310), 17);
        assert_eq!(MaxFeatures::Sqrt.resolve(1), 1);
        assert_eq!(MaxFeatures::Count(8).resolve(5), 5);
    }

    #[test]
    fn separable_toy_fits_training_set() {
        let mut rng = util::rng(1);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for _ in 0..40 {
            let a: f64 = rng.random_range(-1.0..1.0);
            let b: f64 = rng.random_range(-1.0..1.0);
            rows.push(vec![a, b]);
            y.push(a + b > 0.0);
        }
        let f = fit_forest(&matrix(&rows), &y, [1.0, 1.0], &cfg(50)).unwrap();
        let acc = rows.iter().zip(&y).filter(|(r, &l)| (f.predict_row(r) >= 0.5) == l).count();
        assert_eq!(acc, 40);
    }

    #[test]
    fn single_feature_gets_all_importance() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64]).collect();
        let y: Vec<bool> = (0..30).map(|i| i >= 15).collect();
        let f = fit_forest(&matrix(&rows), &y, [1.0, 1.0], &cfg(10)).unwrap();
        assert_eq!(f.importances, vec![1.0]);
    }

    #[test]
    fn all_positive_votes_give_one() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i % 3) as f64]).collect();
        let y: Vec<bool> = (0..20).map(|i| i >= 10).collect();
        let f = fit_forest(&matrix(&rows), &y, [1.0, 1.0], &cfg(25)).unwrap();
        assert_eq!(f.predict_row(&[100.0, 0.0]), 1.0);
        assert_eq!(f.predict_row(&[-100.0, 0.0]), 0.0);
    }

    #[test]
    fn splits_respect_min_leaf_and_decrease() {
        let mut rng = util::rng(8);
        let rows: Vec<Vec<f64>> = (0..120).map(|_| vec![rng.random(), rng.random(), rng.random()]).collect();
        let y: Vec<bool> = rows.iter().map(|r| r[0] + 0.3 * rng.random::<f64>() > 0.6).collect();
        let x = matrix(&rows);
        let c = RandomForestConfig {
            min_samples_leaf: 5,
            ..cfg(20)
        };
        let f = fit_forest(&x, &y, [0.6, 3.0], &c).unwrap();
        // bootstrap rows are a subset of the training rows, so every leaf
        // must be reached by at least min_samples_leaf training rows
        for t in &f.trees {
            let mut per_leaf = vec![0usize; t.nodes.len()];
            for r in &rows {
                let leaf = t.leaf_for(r) as *const Node;
                let idx = t.nodes.iter().position(|n| std::ptr::eq(n, leaf)).unwrap();
                per_leaf[idx] += 1;
            }
            for (n, &count) in t.nodes.iter().zip(&per_leaf) {
                if n.is_leaf() && t.nodes.len() > 1 {
                    assert!(count >= 5, "leaf with {count} rows");
                }
            }
        }
        assert!((f.importances.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(f.importances[0] > f.importances[1]);
    }

    #[test]
    fn deterministic_for_seed() {
        let mut rng = util::rng(2);
        let rows: Vec<Vec<f64>> = (0..60).map(|_| vec![rng.random(), rng.random()]).collect();
        let y: Vec<bool> = rows.iter().map(|r| r[1] > 0.4).collect();
        let a = fit_forest(&matrix(&rows), &y, [1.0, 2.0], &cfg(30)).unwrap();
        let b = fit_forest(&matrix(&rows), &y, [1.0, 2.0], &cfg(30)).unwrap();
        assert_eq!(a, b);
    }
}
