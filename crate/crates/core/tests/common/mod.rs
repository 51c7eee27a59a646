//! Independent reference implementations shared by the integration tests and
//! the acceptance target. Nothing here calls into the library under test.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Scores and labels with both classes present. Half the instances draw
/// scores from a coarse grid so ties are common.
pub fn random_instance(rng: &mut ChaCha8Rng, max_n: usize) -> (Vec<f64>, Vec<bool>) {
    let n = rng.random_range(2..=max_n);
    let tied = rng.random::<bool>();
    let scores: Vec<f64> = (0..n)
        .map(|_| {
            if tied {
                rng.random_range(0..6) as f64 / 5.0
            } else {
                rng.random::<f64>()
            }
        })
        .collect();
    let mut labels: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < 0.3).collect();
    labels[0] = true;
    labels[1] = false;
    (scores, labels)
}

/// Tie-free scores: a random permutation of distinct values.
pub fn tie_free_instance(rng: &mut ChaCha8Rng, max_n: usize) -> (Vec<f64>, Vec<bool>) {
    let n = rng.random_range(2..=max_n);
    let mut scores: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    for i in (1..n).rev() {
        scores.swap(i, rng.random_range(0..=i));
    }
    let mut labels: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
    labels[0] = true;
    labels[1] = false;
    (scores, labels)
}

pub mod brute {
    /// (tp, fp, fn, tn) counting predictions `score >= t` as positive.
    pub fn counts(scores: &[f64], labels: &[bool], t: f64) -> (usize, usize, usize, usize) {
        let mut c = (0, 0, 0, 0);
        for i in 0..scores.len() {
            let pred = scores[i] >= t;
            match (pred, labels[i]) {
                (true, true) => c.0 += 1,
                (true, false) => c.1 += 1,
                (false, true) => c.2 += 1,
                (false, false) => c.3 += 1,
            }
        }
        c
    }

    /// Every threshold that yields a distinct binarization, high to low.
    fn cut_points(scores: &[f64]) -> Vec<f64> {
        let mut v = scores.to_vec();
        v.sort_by(|a, b| b.partial_cmp(a).unwrap());
        v.dedup();
        v
    }

    pub fn roc_auc(scores: &[f64], labels: &[bool]) -> f64 {
        let p = labels.iter().filter(|&&l| l).count() as f64;
        let n = labels.len() as f64 - p;
        let mut prev = (0.0, 0.0);
        let mut area = 0.0;
        for t in cut_points(scores) {
            let (tp, fp, _, _) = counts(scores, labels, t);
            let cur = (fp as f64 / n, tp as f64 / p);
            area += (cur.0 - prev.0) * (cur.1 + prev.1) / 2.0;
            prev = cur;
        }
        area
    }

    /// Average precision: precision at each cut weighted by its recall gain.
    pub fn pr_auc(scores: &[f64], labels: &[bool]) -> f64 {
        let p = labels.iter().filter(|&&l| l).count() as f64;
        let mut prev_recall = 0.0;
        let mut ap = 0.0;
        for t in cut_points(scores) {
            let (tp, fp, _, _) = counts(scores, labels, t);
            let recall = tp as f64 / p;
            let precision = tp as f64 / (tp + fp) as f64;
            ap += (recall - prev_recall) * precision;
            prev_recall = recall;
        }
        ap
    }

    pub fn f2(tp: usize, fp: usize, fn_: usize) -> f64 {
        let den = 5 * tp + 4 * fn_ + fp;
        if den == 0 {
            0.0
        } else {
            5.0 * tp as f64 / den as f64
        }
    }

    /// Best F2 over every achievable binarization, including "all positive"
    /// and "all negative".
    pub fn f2_max(scores: &[f64], labels: &[bool]) -> f64 {
        let mut best = 0.0f64;
        for t in cut_points(scores).into_iter().chain([f64::INFINITY]) {
            let (tp, fp, fn_, _) = counts(scores, labels, t);
            best = best.max(f2(tp, fp, fn_));
        }
        best
    }

    /// Kappa from the 2x2 table in closed form.
    pub fn kappa(a: &[bool], b: &[bool]) -> f64 {
        let (mut n11, mut n10, mut n01, mut n00) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..a.len() {
            match (a[i], b[i]) {
                (true, true) => n11 += 1.0,
                (true, false) => n10 += 1.0,
                (false, true) => n01 += 1.0,
                (false, false) => n00 += 1.0,
            }
        }
        let den = (n11 + n10) * (n10 + n00) + (n11 + n01) * (n01 + n00);
        if den == 0.0 {
            return 1.0;
        }
        2.0 * (n11 * n00 - n10 * n01) / den
    }

    /// Mann-Whitney U over positives vs negatives, normalized.
    pub fn mann_whitney(scores: &[f64], labels: &[bool]) -> f64 {
        let (mut u, mut pairs) = (0.0, 0.0);
        for i in 0..scores.len() {
            for j in 0..scores.len() {
                if labels[i] && !labels[j] {
                    pairs += 1.0;
                    if scores[i] > scores[j] {
                        u += 1.0;
                    } else if scores[i] == scores[j] {
                        u += 0.5;
                    }
                }
            }
        }
        u / pairs
    }
}

pub mod dual {
    use super::*;

    pub struct Problem {
        pub x: Vec<Vec<f64>>,
        pub y: Vec<f64>,
        pub c: Vec<f64>,
        pub q: Vec<Vec<f64>>,
        pub gamma: f64,
    }

    pub fn random_problem(seed: u64, n: usize) -> Problem {
        let mut rng = rng(seed);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..3).map(|_| rng.random_range(-1.5..1.5)).collect())
            .collect();
        let y: Vec<f64> = x
            .iter()
            .map(|r| if r[0] * r[0] + r[1] - 0.5 * r[2] + rng.random_range(-0.4..0.4) > 0.5 { 1.0 } else { -1.0 })
            .collect();
        let n_pos = y.iter().filter(|&&v| v > 0.0).count() as f64;
        let n_neg = n as f64 - n_pos;
        let c0 = [0.5, 1.0, 4.0][(seed % 3) as usize];
        let c = y
            .iter()
            .map(|&v| c0 * n as f64 / (2.0 * if v > 0.0 { n_pos } else { n_neg }))
            .collect();
        let gamma = 0.7;
        let q = (0..n)
            .map(|i| (0..n).map(|j| y[i] * y[j] * (-gamma * sq_dist(&x[i], &x[j])).exp()).collect())
            .collect();
        Problem { x, y, c, q, gamma }
    }

    pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum()
    }

    pub fn objective(q: &[Vec<f64>], a: &[f64]) -> f64 {
        let n = a.len();
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += a[i] * q[i][j] * a[j];
            }
        }
        0.5 * quad - a.iter().sum::<f64>()
    }

    /// Euclidean projection onto {0 ≤ a ≤ c, yᵀa = 0} by bisection on the
    /// multiplier of the equality constraint.
    fn project(v: &[f64], y: &[f64], c: &[f64]) -> Vec<f64> {
        let at = |lam: f64| -> Vec<f64> {
            v.iter()
                .zip(y)
                .zip(c)
                .map(|((vi, yi), ci)| (vi - lam * yi).clamp(0.0, *ci))
                .collect()
        };
        let h = |a: &[f64]| a.iter().zip(y).map(|(ai, yi)| ai * yi).sum::<f64>();
        let bound = v.iter().map(|x| x.abs()).fold(0.0, f64::max) + c.iter().cloned().fold(0.0, f64::max) + 1.0;
        let (mut lo, mut hi) = (-bound, bound);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if h(&at(mid)) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        at(0.5 * (lo + hi))
    }

    /// Accelerated projected gradient with adaptive restart. Returns the best
    /// iterate and its objective.
    pub fn projected_gradient(p: &Problem, iters: usize) -> (Vec<f64>, f64) {
        let n = p.y.len();
        // power iteration for the Lipschitz constant
        let mut v = vec![1.0; n];
        let mut lmax = 0.0;
        for _ in 0..200 {
            let w: Vec<f64> = (0..n).map(|i| (0..n).map(|j| p.q[i][j] * v[j]).sum()).collect();
            lmax = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            v = w.iter().map(|x| x / lmax).collect();
        }
        let step = 1.0 / (lmax * 1.05);
        let mut a = vec![0.0; n];
        let mut z = a.clone();
        let mut t = 1.0f64;
        let mut best = (a.clone(), objective(&p.q, &a));
        for _ in 0..iters {
            let g: Vec<f64> = (0..n).map(|i| (0..n).map(|j| p.q[i][j] * z[j]).sum::<f64>() - 1.0).collect();
            let next = project(&z.iter().zip(&g).map(|(zi, gi)| zi - step * gi).collect::<Vec<_>>(), &p.y, &p.c);
            let f_next = objective(&p.q, &next);
            if f_next > best.1 {
                t = 1.0;
                z = best.0.clone();
                continue;
            }
            let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
            z = next.iter().zip(&a).map(|(n, o)| n + (t - 1.0) / t_next * (n - o)).collect();
            a = next;
            t = t_next;
            best = (a.clone(), f_next);
        }
        best
    }

    /// Largest KKT violation of `alpha` with offset `rho`, measured on the
    /// functional margin `y_i f(x_i)`.
    pub fn kkt_violation(p: &Problem, alpha: &[f64], rho: f64) -> f64 {
        let n = p.y.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            let f: f64 = (0..n)
                .map(|j| alpha[j] * p.y[j] * (-p.gamma * sq_dist(&p.x[j], &p.x[i])).exp())
                .sum::<f64>()
                - rho;
            let m = p.y[i] * f;
            let v = if alpha[i] <= 0.0 {
                (1.0 - m).max(0.0)
            } else if alpha[i] >= p.c[i] {
                (m - 1.0).max(0.0)
            } else {
                (m - 1.0).abs()
            };
            worst = worst.max(v);
        }
        worst
    }
}

pub mod topics {
    pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        dot / (na * nb)
    }

    /// Greedy one-to-one matching of estimated to planted topics by highest
    /// cosine first. Returns the matched cosines in matching order.
    pub fn greedy_match(planted: &[Vec<f64>], estimated: &[Vec<f64>]) -> Vec<f64> {
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (i, p) in planted.iter().enumerate() {
            for (j, e) in estimated.iter().enumerate() {
                pairs.push((cosine(p, e), i, j));
            }
        }
        pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let (mut used_p, mut used_e) = (vec![false; planted.len()], vec![false; estimated.len()]);
        let mut out = Vec::new();
        for (c, i, j) in pairs {
            if !used_p[i] && !used_e[j] {
                used_p[i] = true;
                used_e[j] = true;
                out.push(c);
            }
        }
        out
    }

    /// Unnormalized collapsed-Gibbs conditional computed from scratch by
    /// counting every other token's assignment.
    pub fn naive_conditional(
        docs: &[Vec<u32>],
        z: &[Vec<u16>],
        v: usize,
        k: usize,
        alpha: f64,
        beta: f64,
        doc: usize,
        pos: usize,
    ) -> Vec<f64> {
        let w = docs[doc][pos];
        let mut p = Vec::with_capacity(k);
        for t in 0..k {
            let (mut ndk, mut nwk, mut nk) = (0.0, 0.0, 0.0);
            for d in 0..docs.len() {
                for i in 0..docs[d].len() {
                    if (d, i) == (doc, pos) || z[d][i] as usize != t {
                        continue;
                    }
                    nk += 1.0;
                    if d == doc {
                        ndk += 1.0;
                    }
                    if docs[d][i] == w {
                        nwk += 1.0;
                    }
                }
            }
            p.push((ndk + alpha) * (nwk + beta) / (nk + v as f64 * beta));
        }
        let s: f64 = p.iter().sum();
        p.into_iter().map(|x| x / s).collect()
    }
}
