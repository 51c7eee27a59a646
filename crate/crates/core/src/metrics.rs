//! Threshold-agnostic evaluation of probabilistic binary classifiers.
//!
//! A sample is predicted positive iff `score >= threshold`. Curves are built
//! by sweeping the distinct scores from the highest down, so tied scores
//! enter together. ROC-AUC uses trapezoids (and therefore equals the
//! Mann-Whitney rank statistic with ties counted half); PR-AUC is the
//! step-wise average precision `sum (R_n - R_{n-1}) * P_n`, which never
//! interpolates between operating points.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub true_pos: usize,
    pub false_pos: usize,
    pub false_neg: usize,
    pub true_neg: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.true_pos + self.false_pos + self.false_neg + self.true_neg
    }

    /// Precision with no predicted positives is reported as 0.
    pub fn precision(&self) -> f64 {
        ratio(self.true_pos, self.true_pos + self.false_pos)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.true_pos, self.true_pos + self.false_neg)
    }

    pub fn tpr(&self) -> f64 {
        self.recall()
    }

    pub fn fpr(&self) -> f64 {
        ratio(self.false_pos, self.true_neg + self.false_pos)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn check_lengths(scores: &[f64], labels: &[bool]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite score {bad}")));
    }
    Ok(())
}

fn class_counts(labels: &[bool]) -> (usize, usize) {
    let pos = labels.iter().filter(|&&l| l).count();
    (pos, labels.len() - pos)
}

pub fn confusion_at(scores: &[f64], labels: &[bool], threshold: f64) -> Result<Confusion> {
    check_lengths(scores, labels)?;
    let mut c = Confusion::default();
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= threshold, l) {
            (true, true) => c.true_pos += 1,
            (true, false) => c.false_pos += 1,
            (false, true) => c.false_neg += 1,
            (false, false) => c.true_neg += 1,
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub threshold: f64,
    pub x: f64,
    pub y: f64,
}

/// A ROC curve holds (FPR, TPR) points; a PR curve holds (recall, precision).
/// Points are ordered by decreasing threshold; the first point is the anchor
/// at threshold `+inf` where nothing is predicted positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub points: Vec<CurvePoint>,
}

/// Cumulative (tp, fp) after each group of tied scores, highest score first.
fn cumulative_by_threshold(scores: &[f64], labels: &[bool]) -> Vec<(f64, usize, usize)> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut out = Vec::new();
    let (mut tp, mut fp) = (0, 0);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        out.push((s, tp, fp));
    }
    out
}

pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<Curve> {
    check_lengths(scores, labels)?;
    let (pos, neg) = class_counts(labels);
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedMetric(
            "ROC needs both positive and negative samples".into(),
        ));
    }
    let mut points = vec![CurvePoint {
        threshold: f64::INFINITY,
        x: 0.0,
        y: 0.0,
    }];
    for (t, tp, fp) in cumulative_by_threshold(scores, labels) {
        points.push(CurvePoint {
            threshold: t,
            x: fp as f64 / neg as f64,
            y: tp as f64 / pos as f64,
        });
    }
    Ok(Curve { points })
}

pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let curve = roc_curve(scores, labels)?;
    Ok(curve
        .points
        .windows(2)
        .map(|w| (w[1].x - w[0].x) * (w[1].y + w[0].y) / 2.0)
        .sum())
}

pub fn pr_curve(scores: &[f64], labels: &[bool]) -> Result<Curve> {
    check_lengths(scores, labels)?;
    let (pos, _) = class_counts(labels);
    if pos == 0 {
        return Err(Error::UndefinedMetric(
            "precision-recall needs at least one positive sample".into(),
        ));
    }
    let mut points = vec![CurvePoint {
        threshold: f64::INFINITY,
        x: 0.0,
        y: 1.0,
    }];
    for (t, tp, fp) in cumulative_by_threshold(scores, labels) {
        points.push(CurvePoint {
            threshold: t,
            x: tp as f64 / pos as f64,
            y: tp as f64 / (tp + fp) as f64,
        });
    }
    Ok(Curve { points })
}

pub fn pr_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let curve = pr_curve(scores, labels)?;
    Ok(curve
        .points
        .windows(2)
        .map(|w| (w[1].x - w[0].x) * w[1].y)
        .sum())
}

/// PR-AUC of a random scorer: the positive prevalence.
pub fn baseline_pr_auc(labels: &[bool]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    class_counts(labels).0 as f64 / labels.len() as f64
}

pub fn f_beta(confusion: &Confusion, beta: f64) -> f64 {
    let p = confusion.precision();
    let r = confusion.recall();
    let b2 = beta * beta;
    let den = b2 * p + r;
    if den == 0.0 {
        0.0
    } else {
        (1.0 + b2) * p * r / den
    }
}

/// Best F2 over all thresholds: every distinct score plus 0 and 1. Returns
/// `(threshold, value)`, taking the smallest threshold among ties.
pub fn f2_max(scores: &[f64], labels: &[bool]) -> Result<(f64, f64)> {
    f_beta_max(scores, labels, 2.0)
}

pub fn f_beta_max(scores: &[f64], labels: &[bool], beta: f64) -> Result<(f64, f64)> {
    check_lengths(scores, labels)?;
    let (pos, neg) = class_counts(labels);
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedMetric(
            "F-beta maximum needs both classes".into(),
        ));
    }
    let mut sorted: Vec<(f64, bool)> = scores.iter().copied().zip(labels.iter().copied()).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut candidates: Vec<f64> = sorted.iter().map(|p| p.0).collect();
    candidates.push(0.0);
    candidates.push(1.0);
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    let (mut pos_below, mut neg_below) = (0usize, 0usize);
    let mut cursor = 0;
    let mut best: Option<(f64, f64)> = None;
    for t in candidates {
        while cursor < sorted.len() && sorted[cursor].0 < t {
            if sorted[cursor].1 {
                pos_below += 1;
            } else {
                neg_below += 1;
            }
            cursor += 1;
        }
        let c = Confusion {
            true_pos: pos - pos_below,
            false_pos: neg - neg_below,
            false_neg: pos_below,
            true_neg: neg_below,
        };
        let f = f_beta(&c, beta);
        if best.is_none_or(|(_, bf)| f > bf) {
            best = Some((t, f));
        }
    }
    Ok(best.expect("candidate set always contains 0 and 1"))
}

/// Chance-corrected agreement of two binary labelings. Two constant raters
/// that agree everywhere have expected agreement 1; kappa is then defined 1.
pub fn cohens_kappa(a: &[bool], b: &[bool]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!(
            "labelings have lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::InvalidInput("cohen's kappa of empty labelings".into()));
    }
    let n = a.len() as f64;
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64;
    let pa = a.iter().filter(|&&x| x).count() as f64 / n;
    let pb = b.iter().filter(|&&x| x).count() as f64 / n;
    let p_o = agree / n;
    let p_e = pa * pb + (1.0 - pa) * (1.0 - pb);
    if (1.0 - p_e).abs() < 1e-15 {
        return Ok(1.0);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaPoint {
    pub threshold: f64,
    pub kappa: Option<f64>,
}

/// Kappa between two score vectors binarized at the same threshold, for
/// `n_thresholds` equidistant thresholds spanning [0, 1].
pub fn kappa_sweep(scores_a: &[f64], scores_b: &[f64], n_thresholds: usize) -> Result<Vec<KappaPoint>> {
    if scores_a.len() != scores_b.len() {
        return Err(Error::InvalidInput(format!(
            "score vectors have lengths {} and {}",
            scores_a.len(),
            scores_b.len()
        )));
    }
    let steps = n_thresholds.saturating_sub(1).max(1) as f64;
    Ok((0..n_thresholds)
        .map(|i| {
            let t = i as f64 / steps;
            let la: Vec<bool> = scores_a.iter().map(|&s| s >= t).collect();
            let lb: Vec<bool> = scores_b.iter().map(|&s| s >= t).collect();
            let kappa = cohens_kappa(&la, &lb).ok().filter(|k| k.is_finite());
            KappaPoint { threshold: t, kappa }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub pr_auc: f64,
    pub roc_auc: f64,
    pub f2_max: f64,
    pub f2_threshold: f64,
}

impl FoldMetrics {
    pub fn compute(fold: usize, scores: &[f64], labels: &[bool]) -> Result<Self> {
        let (f2_threshold, f2_max) = f2_max(scores, labels)?;
        Ok(FoldMetrics {
            fold,
            pr_auc: pr_auc(scores, labels)?,
            roc_auc: roc_auc(scores, labels)?,
            f2_max,
            f2_threshold,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        MeanStd {
            mean: util::mean(values),
            std: util::sample_std(values),
        }
    }
}

/// Per-fold metrics plus their mean and sample standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub folds: Vec<FoldMetrics>,
    pub pr_auc: MeanStd,
    pub roc_auc: MeanStd,
    pub f2_max: MeanStd,
}

impl MetricSummary {
    pub fn from_folds(folds: Vec<FoldMetrics>) -> Self {
        let col = |f: fn(&FoldMetrics) -> f64| folds.iter().map(f).collect::<Vec<_>>();
        let pr = MeanStd::of(&col(|m| m.pr_auc));
        let roc = MeanStd::of(&col(|m| m.roc_auc));
        let f2 = MeanStd::of(&col(|m| m.f2_max));
        MetricSummary {
            folds,
            pr_auc: pr,
            roc_auc: roc,
            f2_max: f2,
        }
    }
}

pub const CURVE_CSV_HEADER: &str = "threshold,x,y";

pub fn curve_csv(curve: &Curve) -> String {
    let mut s = String::from(CURVE_CSV_HEADER);
    s.push('\n');
    for p in &curve.points {
        let _ = writeln!(s, "{},{},{}", p.threshold, p.x, p.y);
    }
    s
}

pub fn write_curve_csv(path: &Path, curve: &Curve) -> Result<()> {
    util::write_string(path, &curve_csv(curve))
}

pub const KAPPA_CSV_HEADER: &str = "threshold,kappa";

pub fn kappa_sweep_csv(points: &[KappaPoint]) -> String {
    let mut s = String::from(KAPPA_CSV_HEADER);
    s.push('\n');
    for p in points {
        match p.kappa {
            Some(k) => {
                let _ = writeln!(s, "{},{}", p.threshold, k);
            }
            None => {
                let _ = writeln!(s, "{},", p.threshold);
            }
        }
    }
    s
}
