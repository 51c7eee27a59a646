//! Soft-margin RBF support vector machine.
//!
//! The dual
//!
//! ```text
//! min ½ αᵀQα − eᵀα   s.t.  0 ≤ α_i ≤ C_i,  yᵀα = 0,   Q_ij = y_i y_j k(x_i, x_j)
//! ```
//!
//! is solved by SMO, always updating the maximal violating pair. Each `C_i`
//! is the global `C` times the class weight of sample `i`. Probabilities come
//! from a Platt sigmoid fitted to held-out decision values of an internal
//! stratified 3-fold split.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::features::{FeatureMatrix, StandardScaler};
use crate::error::{Error, Result};
use crate::util;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub c: f64,
    pub gamma: f64,
    /// Stopping tolerance on the maximal KKT violation.
    pub tol: f64,
    pub max_iter: usize,
    pub cache_mb: usize,
    pub platt_folds: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            gamma: 1e-3,
            tol: 1e-3,
            max_iter: 10_000_000,
            cache_mb: 200,
            platt_folds: 3,
            seed: 0,
        }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!("C must be positive, got {}", self.c)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config("tolerance must be positive".into()));
        }
        if self.platt_folds < 2 {
            return Err(Error::Config("Platt calibration needs at least 2 folds".into()));
        }
        Ok(())
    }
}

pub fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

/// Kernel rows on demand with a least-recently-used row budget.
pub struct KernelCache<'a> {
    x: &'a [Vec<f64>],
    gamma: f64,
    rows: HashMap<usize, Vec<f64>>,
    last_used: Vec<u64>,
    clock: u64,
    capacity: usize,
    pub hits: u64,
    pub misses: u64,
}

impl<'a> KernelCache<'a> {
    pub fn new(x: &'a [Vec<f64>], gamma: f64, capacity_rows: usize) -> Self {
        KernelCache {
            x,
            gamma,
            rows: HashMap::new(),
            last_used: vec![0; x.len()],
            clock: 0,
            capacity: capacity_rows.max(2),
            hits: 0,
            misses: 0,
        }
    }

    pub fn row(&mut self, i: usize) -> &[f64] {
        self.clock += 1;
        self.last_used[i] = self.clock;
        if self.rows.contains_key(&i) {
            self.hits += 1;
        } else {
            self.misses += 1;
            if self.rows.len() >= self.capacity {
                let victim = *self
                    .rows
                    .keys()
                    .filter(|&&k| k != i)
                    .min_by_key(|&&k| (self.last_used[k], k))
                    .unwrap();
                self.rows.remove(&victim);
            }
            let xi = &self.x[i];
            let row = self.x.iter().map(|xj| rbf(self.gamma, xi, xj)).collect();
            self.rows.insert(i, row);
        }
        &self.rows[&i]
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    /// Decision offset: `f(x) = Σ α_i y_i k(x_i, x) − rho`.
    pub rho: f64,
    pub objective: f64,
    /// Final gradient of the dual objective, `Qα − e`.
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// SMO with maximal-violating-pair working sets. `y` holds ±1.
pub fn solve_dual(cache: &mut KernelCache, y: &[f64], c: &[f64], tol: f64, max_iter: usize) -> DualSolution {
    let n = y.len();
    let mut alpha = vec![0.0; n];
    let mut g = vec![-1.0; n];
    let at_upper = |a: f64, ci: f64| a >= ci;
    let at_lower = |a: f64| a <= 0.0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let (mut gmax, mut gmin) = (f64::NEG_INFINITY, f64::INFINITY);
        let (mut i, mut j) = (usize::MAX, usize::MAX);
        for t in 0..n {
            let v = -y[t] * g[t];
            let in_up = if y[t] > 0.0 { !at_upper(alpha[t], c[t]) } else { !at_lower(alpha[t]) };
            let in_low = if y[t] > 0.0 { !at_lower(alpha[t]) } else { !at_upper(alpha[t], c[t]) };
            if in_up && v > gmax {
                gmax = v;
                i = t;
            }
            if in_low && v < gmin {
                gmin = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < tol {
            converged = true;
            break;
        }
        iterations += 1;

        let kij = cache.row(i)[j];
        let (kii, kjj) = (1.0, 1.0);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (ci, cj) = (c[i], c[j]);
        if y[i] != y[j] {
            let quad = (kii + kjj + 2.0 * (-kij)).max(1e-12);
            let delta = (-g[i] - g[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > ci - cj {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = ci - diff;
                }
            } else if alpha[j] > cj {
                alpha[j] = cj;
                alpha[i] = cj + diff;
            }
        } else {
            let quad = (kii + kjj - 2.0 * kij).max(1e-12);
            let delta = (g[i] - g[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > ci {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = sum - ci;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > cj {
                if alpha[j] > cj {
                    alpha[j] = cj;
                    alpha[i] = sum - cj;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        let row_i = cache.row(i);
        for t in 0..n {
            g[t] += y[t] * y[i] * row_i[t] * di;
        }
        let row_j = cache.row(j);
        for t in 0..n {
            g[t] += y[t] * y[j] * row_j[t] * dj;
        }
    }
    if !converged {
        log::warn!("SMO stopped at the iteration cap ({max_iter}) before reaching tolerance {tol}");
    }

    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum_free) = (0usize, 0.0);
    for t in 0..n {
        let yg = y[t] * g[t];
        if at_upper(alpha[t], c[t]) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if at_lower(alpha[t]) {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    let rho = if free > 0 { sum_free / free as f64 } else { (ub + lb) / 2.0 };
    let objective = 0.5 * alpha.iter().zip(&g).map(|(a, gi)| a * (gi - 1.0)).sum::<f64>();
    DualSolution {
        alpha,
        rho,
        objective,
        gradient: g,
        iterations,
        converged,
    }
}

/// Sigmoid `1 / (1 + exp(A·f + B))` mapping decision values to probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Platt {
    pub a: f64,
    pub b: f64,
}

impl Platt {
    pub fn probability(&self, decision: f64) -> f64 {
        let f = decision * self.a + self.b;
        if f >= 0.0 {
            (-f).exp() / (1.0 + (-f).exp())
        } else {
            1.0 / (1.0 + f.exp())
        }
    }

    /// Newton fit with backtracking on regularized targets.
    pub fn fit(decisions: &[f64], labels: &[bool]) -> Platt {
        let prior1 = labels.iter().filter(|&&l| l).count() as f64;
        let prior0 = labels.len() as f64 - prior1;
        let hi = (prior1 + 1.0) / (prior1 + 2.0);
        let lo = 1.0 / (prior0 + 2.0);
        let t: Vec<f64> = labels.iter().map(|&l| if l { hi } else { lo }).collect();
        let objective = |a: f64, b: f64| -> f64 {
            decisions
                .iter()
                .zip(&t)
                .map(|(&d, &ti)| {
                    let f = d * a + b;
                    if f >= 0.0 {
                        ti * f + (-f).exp().ln_1p()
                    } else {
                        (ti - 1.0) * f + f.exp().ln_1p()
                    }
                })
                .sum()
        };
        let (mut a, mut b) = (0.0, ((prior0 + 1.0) / (prior1 + 1.0)).ln());
        let mut fval = objective(a, b);
        for _ in 0..100 {
            let (mut h11, mut h22, mut h21, mut g1, mut g2) = (1e-12, 1e-12, 0.0, 0.0, 0.0);
            for (&d, &ti) in decisions.iter().zip(&t) {
                let f = d * a + b;
                let (p, q) = if f >= 0.0 {
                    let e = (-f).exp();
                    (e / (1.0 + e), 1.0 / (1.0 + e))
                } else {
                    let e = f.exp();
                    (1.0 / (1.0 + e), e / (1.0 + e))
                };
                let d2 = p * q;
                h11 += d * d * d2;
                h22 += d2;
                h21 += d * d2;
                let d1 = ti - p;
                g1 += d * d1;
                g2 += d1;
            }
            if g1.abs() < 1e-5 && g2.abs() < 1e-5 {
                break;
            }
            let det = h11 * h22 - h21 * h21;
            let da = -(h22 * g1 - h21 * g2) / det;
            let db = -(-h21 * g1 + h11 * g2) / det;
            let gd = g1 * da + g2 * db;
            let mut step = 1.0;
            while step >= 1e-10 {
                let (na, nb) = (a + step * da, b + step * db);
                let nf = objective(na, nb);
                if nf < fval + 1e-4 * step * gd {
                    a = na;
                    b = nb;
                    fval = nf;
                    break;
                }
                step /= 2.0;
            }
            if step < 1e-10 {
                log::debug!("Platt line search failed");
                break;
            }
        }
        Platt { a, b }
    }
}

/// Support vectors and coefficients of a solved machine, in standardized
/// feature space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmKernelModel {
    pub gamma: f64,
    pub support: Vec<Vec<f64>>,
    /// `α_i · y_i` for each support vector.
    pub coef: Vec<f64>,
    pub rho: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl SvmKernelModel {
    pub fn decision(&self, row: &[f64]) -> f64 {
        self.support
            .iter()
            .zip(&self.coef)
            .map(|(sv, c)| c * rbf(self.gamma, sv, row))
            .sum::<f64>()
            - self.rho
    }
}

/// Fit the kernel machine on already standardized rows.
pub fn fit_kernel_machine(x: &[Vec<f64>], y: &[bool], class_weight: [f64; 2], cfg: &SvmConfig) -> SvmKernelModel {
    let n = x.len();
    let ys: Vec<f64> = y.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();
    let c: Vec<f64> = y.iter().map(|&l| cfg.c * class_weight[l as usize]).collect();
    let capacity = (cfg.cache_mb * 1024 * 1024 / (8 * n.max(1))).max(2);
    let mut cache = KernelCache::new(x, cfg.gamma, capacity);
    let sol = solve_dual(&mut cache, &ys, &c, cfg.tol, cfg.max_iter);
    let (mut support, mut coef) = (Vec::new(), Vec::new());
    for i in 0..n {
        if sol.alpha[i] > 0.0 {
            support.push(x[i].clone());
            coef.push(sol.alpha[i] * ys[i]);
        }
    }
    SvmKernelModel {
        gamma: cfg.gamma,
        support,
        coef,
        rho: sol.rho,
        converged: sol.converged,
        iterations: sol.iterations,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Svm {
    pub scaler: StandardScaler,
    pub machine: SvmKernelModel,
    pub platt: Platt,
}

impl Svm {
    pub fn decision_row(&self, row: &[f64]) -> f64 {
        let mut buf = Vec::with_capacity(row.len());
        self.scaler.transform_row(row, &mut buf);
        self.machine.decision(&buf)
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.platt.probability(self.decision_row(row))
    }

    /// False when the final solve hit the iteration cap.
    pub fn converged(&self) -> bool {
        self.machine.converged
    }
}

/// Stratified assignment of rows to `k` folds.
fn stratified_folds(y: &[bool], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = util::rng(seed);
    let mut fold = vec![0; y.len()];
    for class in [false, true] {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        idx.shuffle(&mut rng);
        for (pos, i) in idx.into_iter().enumerate() {
            fold[i] = pos % k;
        }
    }
    fold
}

pub fn fit_svm(x: &FeatureMatrix, y: &[bool], cfg: &SvmConfig) -> Result<Svm> {
    cfg.validate()?;
    if x.n_rows() != y.len() {
        return Err(Error::InvalidInput(format!("{} rows but {} labels", x.n_rows(), y.len())));
    }
    let class_weight = super::class_weights(y)?;
    let scaler = StandardScaler::fit(x);
    let mut buf = Vec::new();
    let rows: Vec<Vec<f64>> = (0..x.n_rows())
        .map(|i| {
            scaler.transform_row(x.row(i), &mut buf);
            buf.clone()
        })
        .collect();

    let k = cfg.platt_folds;
    let n_pos = y.iter().filter(|&&l| l).count();
    let n_neg = y.len() - n_pos;
    let platt = if n_pos >= k && n_neg >= k {
        let folds = stratified_folds(y, k, cfg.seed);
        let mut decisions = vec![0.0; y.len()];
        for f in 0..k {
            let train: Vec<usize> = (0..y.len()).filter(|&i| folds[i] != f).collect();
            let tx: Vec<Vec<f64>> = train.iter().map(|&i| rows[i].clone()).collect();
            let ty: Vec<bool> = train.iter().map(|&i| y[i]).collect();
            let cw = super::class_weights(&ty)?;
            let m = fit_kernel_machine(&tx, &ty, cw, cfg);
            for i in (0..y.len()).filter(|&i| folds[i] == f) {
                decisions[i] = m.decision(&rows[i]);
            }
        }
        Platt::fit(&decisions, y)
    } else {
        log::warn!("too few samples per class for {k}-fold Platt calibration; fitting on training decisions");
        let m = fit_kernel_machine(&rows, y, class_weight, cfg);
        let d: Vec<f64> = rows.iter().map(|r| m.decision(r)).collect();
        Platt::fit(&d, y)
    };
    let machine = fit_kernel_machine(&rows, y, class_weight, cfg);
    Ok(Svm {
        scaler,
        machine,
        platt,
    })
}
