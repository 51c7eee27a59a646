//! Patient-grouped nested cross-validation, inter-classifier agreement and
//! feature-importance audits.

mod output;
mod pipeline;

pub use output::{
    importance_csv, kappa_folds_csv, scores_csv, summary_csv, write_run_artifacts, IMPORTANCE_CSV_HEADER,
    KAPPA_FOLDS_CSV_HEADER, SCORES_CSV_HEADER, SUMMARY_CSV_HEADER,
};
pub use pipeline::{
    build_features, prepare_corpus, train_representations, FeatureSpec, FixedFeatures, PerFoldFeatures,
    PreparedCorpus, RepresentationConfig, Representations,
};

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{
    self, ClassifierConfig, Criterion, FeatureMatrix, ImportanceReport, MaxFeatures, RandomForestConfig, SvmConfig,
};
use crate::corpus::PeriodRecord;
use crate::error::{Error, Result};
use crate::metrics::{self, FoldMetrics, KappaPoint, MeanStd, MetricSummary};
use crate::util;

/// Assignment of every patient to one of `k` folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub patient_fold: BTreeMap<String, usize>,
}

impl FoldPlan {
    pub fn fold_of(&self, patient: &str) -> Option<usize> {
        self.patient_fold.get(patient).copied()
    }

    /// Rows (by index into `patients`) whose patient is in `fold`, and the rest.
    pub fn split(&self, patients: &[&str], fold: usize) -> (Vec<usize>, Vec<usize>) {
        (0..patients.len()).partition(|&i| self.fold_of(patients[i]) != Some(fold))
    }
}

/// Shuffle the distinct patients with `seed` and deal them round-robin into
/// `k` folds.
pub fn make_folds<S: AsRef<str>>(patient_ids: &[S], k: usize, seed: u64) -> Result<FoldPlan> {
    let distinct: BTreeSet<&str> = patient_ids.iter().map(AsRef::as_ref).collect();
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    if distinct.len() < k {
        return Err(Error::InvalidInput(format!(
            "{} distinct patients cannot fill {k} folds",
            distinct.len()
        )));
    }
    let mut patients: Vec<&str> = distinct.into_iter().collect();
    patients.shuffle(&mut util::rng(seed));
    let patient_fold = patients
        .into_iter()
        .enumerate()
        .map(|(i, p)| (p.to_string(), i % k))
        .collect();
    Ok(FoldPlan { k, seed, patient_fold })
}

/// Identity and label of each dataset row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledRows {
    pub period_ids: Vec<String>,
    pub patient_ids: Vec<String>,
    pub labels: Vec<bool>,
}

impl LabeledRows {
    pub fn from_records(records: &[PeriodRecord]) -> Self {
        LabeledRows {
            period_ids: records.iter().map(|r| r.period_id.clone()).collect(),
            patient_ids: records.iter().map(|r| r.patient_id.clone()).collect(),
            labels: records.iter().map(|r| r.label).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn patients(&self) -> Vec<&str> {
        self.patient_ids.iter().map(String::as_str).collect()
    }
}

/// Supplies the feature matrix for all rows once the outer-train rows of a
/// fold are known. Implementations must not look at labels.
pub trait FeatureSource: Sync {
    fn features(&self, fold: usize, train_rows: &[usize]) -> Result<Arc<FeatureMatrix>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMetric {
    PrAuc,
    RocAuc,
}

impl SelectionMetric {
    pub fn score(self, scores: &[f64], labels: &[bool]) -> Result<f64> {
        match self {
            SelectionMetric::PrAuc => metrics::pr_auc(scores, labels),
            SelectionMetric::RocAuc => metrics::roc_auc(scores, labels),
        }
    }
}

impl std::str::FromStr for SelectionMetric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pr_auc" => Ok(SelectionMetric::PrAuc),
            "roc_auc" => Ok(SelectionMetric::RocAuc),
            _ => Err(Error::Config(format!("selection metric must be pr_auc or roc_auc, got `{s}`"))),
        }
    }
}

/// Forest grid in canonical order: leaf size, then feature count, then
/// criterion.
pub fn forest_grid(n_estimators: usize) -> Vec<ClassifierConfig> {
    let mut grid = Vec::new();
    for min_samples_leaf in [3, 5, 10] {
        for max_features in [MaxFeatures::Count(5), MaxFeatures::Count(8), MaxFeatures::Sqrt] {
            for criterion in [Criterion::Gini, Criterion::Entropy] {
                grid.push(ClassifierConfig::Forest(RandomForestConfig {
                    n_estimators,
                    min_samples_leaf,
                    max_features,
                    criterion,
                    seed: 0,
                }));
            }
        }
    }
    grid
}

/// SVM grid in canonical order: C, then gamma.
pub fn svm_grid() -> Vec<ClassifierConfig> {
    let mut grid = Vec::new();
    for c in [0.1, 1.0, 10.0] {
        for e in -5..=0 {
            grid.push(ClassifierConfig::Svm(SvmConfig {
                c,
                gamma: 10f64.powi(e),
                ..Default::default()
            }));
        }
    }
    grid
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub outer_folds: usize,
    pub inner_folds: usize,
    pub grid: Vec<ClassifierConfig>,
    pub selection: SelectionMetric,
    pub seed: u64,
}

impl CvConfig {
    pub fn new(grid: Vec<ClassifierConfig>, seed: u64) -> Self {
        CvConfig {
            outer_folds: 5,
            inner_folds: 5,
            grid,
            selection: SelectionMetric::PrAuc,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::Config("classifier grid is empty".into()));
        }
        if self.outer_folds < 2 || self.inner_folds < 2 {
            return Err(Error::Config("need at least 2 outer and 2 inner folds".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterFold {
    pub fold: usize,
    pub test_rows: Vec<usize>,
    /// Scores aligned with `test_rows`.
    pub scores: Vec<f64>,
    pub labels: Vec<bool>,
    pub metrics: FoldMetrics,
    pub selected: usize,
    pub selected_config: ClassifierConfig,
    /// Mean inner selection metric per grid cell; `None` if never evaluable.
    pub inner_scores: Vec<Option<f64>>,
    pub importances: Option<ImportanceReport>,
    pub train_patients: BTreeSet<String>,
    pub test_patients: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRun {
    pub plan: FoldPlan,
    pub folds: Vec<OuterFold>,
    pub summary: MetricSummary,
}

impl CvRun {
    /// Out-of-fold score per dataset row.
    pub fn pooled_scores(&self, n_rows: usize) -> Vec<f64> {
        let mut out = vec![f64::NAN; n_rows];
        for f in &self.folds {
            for (&r, &s) in f.test_rows.iter().zip(&f.scores) {
                out[r] = s;
            }
        }
        out
    }

    /// Panics if any patient sits on both sides of an outer split.
    pub fn assert_grouping(&self) {
        for f in &self.folds {
            let shared: Vec<&String> = f.train_patients.intersection(&f.test_patients).collect();
            assert!(shared.is_empty(), "fold {}: patients in train and test: {shared:?}", f.fold);
        }
    }
}

fn both_classes(labels: &[bool]) -> bool {
    labels.iter().any(|&l| l) && labels.iter().any(|&l| !l)
}

fn pick<T: Copy>(values: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| values[i]).collect()
}

/// Mean inner-fold selection metric of one grid cell on the outer-train rows.
fn inner_score(
    x: &FeatureMatrix,
    labels: &[bool],
    outer_train: &[usize],
    inner_plan: &FoldPlan,
    patients: &[&str],
    cell: &ClassifierConfig,
    cfg: &CvConfig,
    seed_path: [u64; 2],
) -> Result<Option<f64>> {
    let mut values = Vec::new();
    for g in 0..inner_plan.k {
        let (train, test): (Vec<usize>, Vec<usize>) = outer_train
            .iter()
            .partition(|&&r| inner_plan.fold_of(patients[r]) != Some(g));
        let (ytr, yte) = (pick(labels, &train), pick(labels, &test));
        if !both_classes(&ytr) || !both_classes(&yte) {
            log::warn!(
                "search {} inner fold {g}: single class, grid evaluation skipped",
                seed_path[0]
            );
            continue;
        }
        let seed = util::derive_seed(cfg.seed, &[seed_path[0], seed_path[1], g as u64]);
        let model = classifiers::train(&x.select_rows(&train), &ytr, &cell.with_seed(seed))?;
        let scores = model.predict_proba(&x.select_rows(&test))?;
        values.push(cfg.selection.score(&scores, &yte)?);
    }
    Ok(if values.is_empty() { None } else { Some(util::mean(&values)) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearch {
    pub selected: usize,
    /// Mean inner selection metric per grid cell; `None` if never evaluable.
    pub scores: Vec<Option<f64>>,
}

/// Grouped k-fold grid search over the dataset rows `subset`. `tag`
/// separates the seed streams of independent searches.
pub fn grid_search(x: &FeatureMatrix, rows: &LabeledRows, subset: &[usize], cfg: &CvConfig, tag: u64) -> Result<GridSearch> {
    cfg.validate()?;
    let patients = rows.patients();
    let inner_patients: Vec<&str> = subset.iter().map(|&r| patients[r]).collect();
    let inner_plan = make_folds(&inner_patients, cfg.inner_folds, util::derive_seed(cfg.seed, &[1, tag]))?;
    let scores: Vec<Option<f64>> = cfg
        .grid
        .par_iter()
        .enumerate()
        .map(|(c, cell)| inner_score(x, &rows.labels, subset, &inner_plan, &patients, cell, cfg, [tag, c as u64]))
        .collect::<Result<_>>()?;
    let mut best: Option<(usize, f64)> = None;
    for (c, s) in scores.iter().enumerate() {
        if let Some(s) = *s {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((c, s));
            }
        }
    }
    let (selected, _) = best.ok_or_else(|| Error::Degenerate(format!("search {tag}: no grid cell could be evaluated")))?;
    Ok(GridSearch { selected, scores })
}

/// Nested cross-validation: per outer fold, grid search by inner CV on the
/// outer-train patients, refit the best cell, score the outer-test rows.
pub fn nested_cv(rows: &LabeledRows, features: &dyn FeatureSource, cfg: &CvConfig) -> Result<CvRun> {
    cfg.validate()?;
    let patients = rows.patients();
    let plan = make_folds(&patients, cfg.outer_folds, util::derive_seed(cfg.seed, &[0]))?;
    let folds: Vec<OuterFold> = (0..cfg.outer_folds)
        .into_par_iter()
        .map(|f| -> Result<OuterFold> {
            let (train, test) = plan.split(&patients, f);
            let train_patients: BTreeSet<String> = train.iter().map(|&r| patients[r].to_string()).collect();
            let test_patients: BTreeSet<String> = test.iter().map(|&r| patients[r].to_string()).collect();
            let x = features.features(f, &train)?;
            let ytr = pick(&rows.labels, &train);
            let yte = pick(&rows.labels, &test);
            if !both_classes(&ytr) {
                return Err(Error::Degenerate(format!("outer fold {f}: training rows hold one class")));
            }
            let search = grid_search(&x, rows, &train, cfg, f as u64)?;
            let selected = search.selected;
            let inner_scores = search.scores;
            let refit_seed = util::derive_seed(cfg.seed, &[2, f as u64]);
            let selected_config = cfg.grid[selected].with_seed(refit_seed);
            let model = classifiers::train(&x.select_rows(&train), &ytr, &selected_config)?;
            let scores = model.predict_proba(&x.select_rows(&test))?;
            let metrics = FoldMetrics::compute(f, &scores, &yte)?;
            log::info!(
                "outer fold {f}: cell {selected} ({}) pr_auc {:.4} roc_auc {:.4}",
                selected_config.describe(),
                metrics.pr_auc,
                metrics.roc_auc
            );
            Ok(OuterFold {
                fold: f,
                test_rows: test,
                scores,
                labels: yte,
                metrics,
                selected,
                selected_config,
                inner_scores,
                importances: model.feature_importances().ok(),
                train_patients,
                test_patients,
            })
        })
        .collect::<Result<_>>()?;
    let summary = MetricSummary::from_folds(folds.iter().map(|f| f.metrics).collect());
    let run = CvRun { plan, folds, summary };
    run.assert_grouping();
    Ok(run)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldKappa {
    pub fold: usize,
    pub threshold_a: f64,
    pub threshold_b: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaReport {
    pub folds: Vec<FoldKappa>,
    pub summary: MeanStd,
    /// Agreement on pooled out-of-fold scores across a threshold sweep.
    pub sweep: Vec<KappaPoint>,
}

pub const KAPPA_SWEEP_POINTS: usize = 200;

/// Binarize each run at its own per-fold F2-max threshold and measure
/// agreement on the outer-test rows.
pub fn compare_classifiers(a: &CvRun, b: &CvRun) -> Result<KappaReport> {
    if a.plan != b.plan || a.folds.len() != b.folds.len() {
        return Err(Error::InvalidInput("runs use different fold plans".into()));
    }
    let mut folds = Vec::new();
    let mut pooled_a = Vec::new();
    let mut pooled_b = Vec::new();
    for (fa, fb) in a.folds.iter().zip(&b.folds) {
        if fa.test_rows != fb.test_rows {
            return Err(Error::InvalidInput(format!("fold {} covers different rows", fa.fold)));
        }
        let la: Vec<bool> = fa.scores.iter().map(|&s| s >= fa.metrics.f2_threshold).collect();
        let lb: Vec<bool> = fb.scores.iter().map(|&s| s >= fb.metrics.f2_threshold).collect();
        folds.push(FoldKappa {
            fold: fa.fold,
            threshold_a: fa.metrics.f2_threshold,
            threshold_b: fb.metrics.f2_threshold,
            kappa: metrics::cohens_kappa(&la, &lb)?,
        });
        pooled_a.extend_from_slice(&fa.scores);
        pooled_b.extend_from_slice(&fb.scores);
    }
    let summary = MeanStd::of(&folds.iter().map(|f| f.kappa).collect::<Vec<_>>());
    let sweep = metrics::kappa_sweep(&pooled_a, &pooled_b, KAPPA_SWEEP_POINTS)?;
    Ok(KappaReport { folds, summary, sweep })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceAudit {
    /// Top features of the refit model in each outer fold.
    pub per_fold: Vec<Vec<(String, f64)>>,
    /// Features by number of folds in whose top list they appear.
    pub most_repeated: Vec<(String, usize)>,
    /// Features by summed importance over the per-fold top lists.
    pub highest_total: Vec<(String, f64)>,
}

pub const AUDIT_TOP_N: usize = 10;

pub fn importance_audit(run: &CvRun, top_n: usize) -> Result<ImportanceAudit> {
    let mut per_fold = Vec::new();
    for f in &run.folds {
        let report = f
            .importances
            .as_ref()
            .ok_or_else(|| Error::Unsupported("importance audit needs forest runs".into()))?;
        per_fold.push(report.top(top_n).to_vec());
    }
    let mut count: HashMap<&str, usize> = HashMap::new();
    let mut total: HashMap<&str, f64> = HashMap::new();
    for list in &per_fold {
        for (name, v) in list {
            *count.entry(name).or_default() += 1;
            *total.entry(name).or_default() += v;
        }
    }
    let mut most_repeated: Vec<(String, usize)> = count.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    most_repeated.sort_by(|a, b| {
        b.1.cmp(&a.1)
            .then_with(|| total[b.0.as_str()].total_cmp(&total[a.0.as_str()]))
            .then_with(|| a.0.cmp(&b.0))
    });
    let mut highest_total: Vec<(String, f64)> = total.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    highest_total.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    most_repeated.truncate(top_n);
    highest_total.truncate(top_n);
    Ok(ImportanceAudit {
        per_fold,
        most_repeated,
        highest_total,
    })
}
