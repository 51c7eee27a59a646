//! CSV exports of cross-validation runs. Headers are fixed.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{CvRun, ImportanceAudit, KappaReport, LabeledRows};
use crate::error::Result;
use crate::metrics;
use crate::util;

pub const SUMMARY_CSV_HEADER: &str =
    "run,features,estimator,fold,pr_auc,roc_auc,f2_max,f2_threshold,pr_auc_std,roc_auc_std,f2_max_std,selected";
pub const SCORES_CSV_HEADER: &str = "period_id,patient_id,fold,label,score";
pub const IMPORTANCE_CSV_HEADER: &str = "list,rank,feature,value";
pub const KAPPA_FOLDS_CSV_HEADER: &str = "fold,threshold_a,threshold_b,kappa";

/// One row per outer fold and one `mean` row per run.
pub fn summary_csv(runs: &[(&str, &str, &CvRun)]) -> String {
    let mut out = format!("{SUMMARY_CSV_HEADER}\n");
    for &(name, features, run) in runs {
        let estimator = run.folds.first().map_or("", |f| f.selected_config.kind());
        for f in &run.folds {
            let m = &f.metrics;
            writeln!(
                out,
                "{name},{features},{estimator},{},{},{},{},{},,,,{}",
                f.fold,
                m.pr_auc,
                m.roc_auc,
                m.f2_max,
                m.f2_threshold,
                f.selected_config.describe()
            )
            .unwrap();
        }
        let s = &run.summary;
        writeln!(
            out,
            "{name},{features},{estimator},mean,{},{},{},,{},{},{},",
            s.pr_auc.mean, s.roc_auc.mean, s.f2_max.mean, s.pr_auc.std, s.roc_auc.std, s.f2_max.std
        )
        .unwrap();
    }
    out
}

/// Out-of-fold score of every row, in dataset order.
pub fn scores_csv(run: &CvRun, rows: &LabeledRows) -> String {
    let mut entries: Vec<(usize, usize, f64)> = run
        .folds
        .iter()
        .flat_map(|f| f.test_rows.iter().zip(&f.scores).map(move |(&r, &s)| (r, f.fold, s)))
        .collect();
    entries.sort_by_key(|e| e.0);
    let mut out = format!("{SCORES_CSV_HEADER}\n");
    for (r, fold, score) in entries {
        writeln!(
            out,
            "{},{},{fold},{},{score}",
            rows.period_ids[r],
            rows.patient_ids[r],
            u8::from(rows.labels[r])
        )
        .unwrap();
    }
    out
}

pub fn importance_csv(audit: &ImportanceAudit) -> String {
    let mut out = format!("{IMPORTANCE_CSV_HEADER}\n");
    for (f, list) in audit.per_fold.iter().enumerate() {
        for (rank, (name, v)) in list.iter().enumerate() {
            writeln!(out, "fold_{f},{},{name},{v}", rank + 1).unwrap();
        }
    }
    for (rank, (name, n)) in audit.most_repeated.iter().enumerate() {
        writeln!(out, "most_repeated,{},{name},{n}", rank + 1).unwrap();
    }
    for (rank, (name, v)) in audit.highest_total.iter().enumerate() {
        writeln!(out, "highest_total,{},{name},{v}", rank + 1).unwrap();
    }
    out
}

pub fn kappa_folds_csv(report: &KappaReport) -> String {
    let mut out = format!("{KAPPA_FOLDS_CSV_HEADER}\n");
    for f in &report.folds {
        writeln!(out, "{},{},{},{}", f.fold, f.threshold_a, f.threshold_b, f.kappa).unwrap();
    }
    writeln!(out, "mean,,,{}", report.summary.mean).unwrap();
    writeln!(out, "std,,,{}", report.summary.std).unwrap();
    out
}

/// Write `<name>_scores.csv`, pooled `<name>_pr.csv` / `<name>_roc.csv` and
/// per-fold `<name>_pr_fold<i>.csv` / `<name>_roc_fold<i>.csv` into `dir`.
pub fn write_run_artifacts(dir: &Path, name: &str, run: &CvRun, rows: &LabeledRows) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut put = |file: String, body: String| -> Result<()> {
        let path = dir.join(file);
        util::write_string(&path, &body)?;
        written.push(path);
        Ok(())
    };
    put(format!("{name}_scores.csv"), scores_csv(run, rows))?;
    let (mut scores, mut labels) = (Vec::new(), Vec::new());
    for f in &run.folds {
        scores.extend_from_slice(&f.scores);
        labels.extend_from_slice(&f.labels);
        put(
            format!("{name}_pr_fold{}.csv", f.fold),
            metrics::curve_csv(&metrics::pr_curve(&f.scores, &f.labels)?),
        )?;
        put(
            format!("{name}_roc_fold{}.csv", f.fold),
            metrics::curve_csv(&metrics::roc_curve(&f.scores, &f.labels)?),
        )?;
    }
    put(format!("{name}_pr.csv"), metrics::curve_csv(&metrics::pr_curve(&scores, &labels)?))?;
    put(format!("{name}_roc.csv"), metrics::curve_csv(&metrics::roc_curve(&scores, &labels)?))?;
    Ok(written)
}
