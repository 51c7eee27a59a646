//! The `notewatch` command line.

pub mod config;
pub mod svg;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{ArgGroup, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::classifiers::{self, ImportanceReport};
use crate::corpus::{self, CorpusPaths, PeriodRecord, RawCorpus};
use crate::embeddings::{train_pv, ParagraphVectorConfig, TrainMode};
use crate::error::{Error, Result};
use crate::harness::{
    self, build_features, compare_classifiers, grid_search, importance_audit, importance_csv, kappa_folds_csv,
    nested_cv, prepare_corpus, summary_csv, train_representations, write_run_artifacts, CvRun, FeatureSource,
    FixedFeatures, PerFoldFeatures, PreparedCorpus,
};
use crate::metrics::kappa_sweep_csv;
use crate::synthgen::{self, DatasetStats, SynthConfig};
use crate::textnorm::{self, NormalizationResources};
use crate::topics::{build_vocab, select_topic_count, train_lda, LdaConfig, SelectConfig, DEFAULT_TOP_N, DEFAULT_WINDOW};
use crate::util;
use config::{Estimator, RunConfig, SEED_ENV};
use svg::Series;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const DATASET_FILE: &str = "dataset.jsonl";
pub const TOKENS_FILE: &str = "tokens.jsonl";
pub const LDA_MODEL_FILE: &str = "model.lda";
pub const PV_MODEL_FILE: &str = "model.pv";
pub const CLASSIFIER_FILE: &str = "classifier.json";
pub const SUMMARY_FILE: &str = "summary.csv";

#[derive(Debug, Parser)]
#[command(name = "notewatch", version, about = "Violence-risk classification of clinical notes")]
#[command(arg_required_else_help = true)]
pub struct Cli {
    /// Maximum number of worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus in the ingestion schema.
    Synth {
        #[arg(long, default_value_t = synthgen::DEFAULT_SCALE)]
        scale: f64,
        #[arg(long)]
        seed: Option<u64>,
        /// Outcome association of the planted topic, in [0, 1].
        #[arg(long)]
        association: Option<f64>,
        /// No label signal at all: zero association, equal class distributions.
        #[arg(long)]
        null: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Assemble admission periods from a corpus directory and drop short ones.
    Ingest {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Normalize period notes of a dataset, or individual notes.
    #[command(group(ArgGroup::new("input").required(true).args(["dataset", "notes"])))]
    Normalize {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        notes: Option<PathBuf>,
        #[arg(long)]
        stopwords: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a topic model; several `--k` values select the most coherent.
    TrainLda {
        #[arg(long)]
        tokens: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "25")]
        k: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        iterations: usize,
        #[arg(long, default_value_t = 20)]
        min_count: u64,
        #[arg(long, default_value_t = 10)]
        min_doc_len: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a paragraph-vector model.
    TrainEmbeddings {
        #[arg(long)]
        tokens: PathBuf,
        #[arg(long, default_value_t = 300)]
        vector_size: usize,
        #[arg(long, default_value_t = 20)]
        epochs: usize,
        #[arg(long, default_value_t = 2)]
        window: usize,
        #[arg(long, default_value_t = 20)]
        min_count: u64,
        #[arg(long)]
        seed: Option<u64>,
        /// Parallel sharded training; not bit-identical across --jobs.
        #[arg(long)]
        fast: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Select hyperparameters by grouped CV on all rows and fit a final model.
    TrainClassifier {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Nested cross-validation for every feature set and estimator in the config.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        /// Retrain representations per outer fold on outer-train notes only.
        #[arg(long)]
        representation_per_fold: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Agreement between two evaluated runs.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render SVG plots from the CSVs in an output directory.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Serialize)]
struct Manifest {
    tool: &'static str,
    version: &'static str,
    command: String,
    args: Vec<String>,
    seed: Option<u64>,
    config: serde_json::Value,
    resources: BTreeMap<String, String>,
    inputs: BTreeMap<String, String>,
    outputs: Vec<String>,
    wall_time_s: f64,
}

struct Run {
    name: &'static str,
    args: Vec<String>,
    out: PathBuf,
    seed: Option<u64>,
    config: serde_json::Value,
    resources: BTreeMap<String, String>,
    inputs: BTreeMap<String, String>,
    started: Instant,
}

fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(format!("{:x}", Sha256::digest(bytes)))
}

impl Run {
    fn new(name: &'static str, args: &[String], out: &Path) -> Result<Self> {
        std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        Ok(Run {
            name,
            args: args.to_vec(),
            out: out.to_path_buf(),
            seed: None,
            config: serde_json::Value::Null,
            resources: BTreeMap::new(),
            inputs: BTreeMap::new(),
            started: Instant::now(),
        })
    }

    fn input(&mut self, path: &Path) -> Result<()> {
        if path.is_dir() {
            let mut entries: Vec<PathBuf> = std::fs::read_dir(path)
                .map_err(|e| Error::io(path, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file())
                .collect();
            entries.sort();
            for p in entries {
                self.inputs.insert(p.display().to_string(), file_sha256(&p)?);
            }
        } else {
            self.inputs.insert(path.display().to_string(), file_sha256(path)?);
        }
        Ok(())
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write(&self, name: &str, body: &str) -> Result<()> {
        util::write_string(&self.path(name), body)
    }

    fn finish(self) -> Result<()> {
        let mut outputs: Vec<String> = std::fs::read_dir(&self.out)
            .map_err(|e| Error::io(&self.out, e))?
            .filter_map(|e| e.ok())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .filter(|n| n != MANIFEST_FILE)
            .collect();
        outputs.sort();
        let manifest = Manifest {
            tool: "notewatch",
            version: env!("CARGO_PKG_VERSION"),
            command: self.name.to_string(),
            args: self.args,
            seed: self.seed,
            config: self.config,
            resources: self.resources,
            inputs: self.inputs,
            outputs,
            wall_time_s: self.started.elapsed().as_secs_f64(),
        };
        let path = self.out.join(MANIFEST_FILE);
        util::write_string(&path, &serde_json::to_string_pretty(&manifest)?)
    }
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("{SEED_ENV}: cannot parse `{s}`"))),
        Err(_) => Ok(None),
    }
}

/// Flag, then environment, then `default`.
fn resolve_seed(flag: Option<u64>, default: u64) -> Result<u64> {
    Ok(flag.or(env_seed()?).unwrap_or(default))
}

fn resources(path: Option<&Path>) -> Result<NormalizationResources> {
    match path {
        Some(p) => NormalizationResources::from_file(p),
        None => Ok(NormalizationResources::dutch()),
    }
}

fn require_exists(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::Config(format!("path does not exist: {}", path.display())))
    }
}

/// Ingest a corpus directory, assemble periods and drop short ones.
pub fn load_dataset(data: &Path) -> Result<(RawCorpus, Vec<PeriodRecord>)> {
    require_exists(data)?;
    let raw = corpus::ingest(&CorpusPaths::in_dir(data))?;
    if raw.warnings.total() > 0 {
        log::warn!("ingestion skipped {} malformed records", raw.warnings.total());
    }
    let (records, report) = corpus::assemble_periods(&raw);
    let (records, dropped) = corpus::filter_short(records);
    log::info!(
        "{} admission periods kept, {dropped} dropped as too short ({report:?})",
        records.len()
    );
    Ok((raw, records))
}

fn stats_outputs(run: &Run, stats: &DatasetStats) -> Result<()> {
    run.write("dataset_stats.json", &serde_json::to_string_pretty(stats)?)?;
    run.write("age_histogram.csv", &stats.age_histogram.to_csv())?;
    run.write("words_histogram.csv", &stats.words_histogram.to_csv())
}

fn run_name(features: &harness::FeatureSpec, estimator: Estimator) -> String {
    format!("{}_{}", features.to_string().replace('+', "-"), estimator.name())
}

fn cmd_synth(run: &mut Run, scale: f64, seed: Option<u64>, association: Option<f64>, null: bool) -> Result<()> {
    let seed = resolve_seed(seed, 1)?;
    let mut cfg = if null { SynthConfig::null(scale, seed) } else { SynthConfig::scaled(scale, seed) };
    if let Some(a) = association {
        cfg.association = a;
    }
    cfg.validate()?;
    run.seed = Some(seed);
    run.config = serde_json::to_value(&cfg)?;
    let corpus = synthgen::generate(&cfg)?;
    synthgen::write(&corpus, &run.out)?;
    let (records, _) = corpus::assemble_periods(&corpus.to_raw());
    let (records, _) = corpus::filter_short(records);
    stats_outputs(run, &synthgen::describe(&records))
}

fn cmd_ingest(run: &mut Run, data: &Path) -> Result<()> {
    run.input(data)?;
    let (raw, records) = load_dataset(data)?;
    corpus::write_dataset(&run.path(DATASET_FILE), &records)?;
    run.config = serde_json::json!({ "ingest_warnings": raw.warnings });
    stats_outputs(run, &synthgen::describe(&records))
}

fn cmd_normalize(run: &mut Run, dataset: Option<&Path>, notes: Option<&Path>, stopwords: Option<&Path>) -> Result<()> {
    let res = resources(stopwords)?;
    run.resources.insert("stopwords_sha256".into(), res.checksum().to_string());
    let docs = if let Some(p) = dataset {
        run.input(p)?;
        corpus::read_dataset(p)?
            .iter()
            .map(|r| textnorm::normalize_doc(&r.period_id, &r.period_note, &res))
            .collect::<Vec<_>>()
    } else {
        let p = notes.expect("clap requires one input");
        run.input(p)?;
        let (notes, bad) = corpus::ingest_notes(p)?;
        if bad > 0 {
            log::warn!("{bad} malformed notes skipped");
        }
        notes
            .iter()
            .map(|n| textnorm::normalize_doc(&n.note_id, &n.text, &res))
            .collect()
    };
    textnorm::write_token_docs(&run.path(TOKENS_FILE), &docs)
}

#[allow(clippy::too_many_arguments)]
fn cmd_train_lda(
    run: &mut Run,
    tokens: &Path,
    ks: &[usize],
    iterations: usize,
    min_count: u64,
    min_doc_len: usize,
    seed: Option<u64>,
) -> Result<()> {
    run.input(tokens)?;
    let seed = resolve_seed(seed, 1)?;
    run.seed = Some(seed);
    let docs = textnorm::read_token_docs(tokens)?;
    let vocab = build_vocab(&docs, min_count, min_doc_len)?;
    let bows: Vec<_> = docs
        .iter()
        .filter(|d| d.tokens.len() >= min_doc_len)
        .map(|d| vocab.bow(d))
        .filter(|b| !b.is_empty())
        .collect();
    let mut lda = LdaConfig::new(ks[0], seed);
    lda.iterations = iterations;
    if ks.len() > 1 {
        let select = SelectConfig { lda, top_n: DEFAULT_TOP_N, window: DEFAULT_WINDOW };
        let (best, scores) = select_topic_count(&bows, &vocab, &docs, ks, &select)?;
        let mut csv = String::from("k,coherence\n");
        for s in &scores {
            csv.push_str(&format!("{},{}\n", s.k, s.coherence.mean));
        }
        run.write("coherence.csv", &csv)?;
        lda.k = best;
    }
    run.config = serde_json::to_value(lda)?;
    let model = train_lda(&bows, &vocab, &lda)?;
    model.save(&run.path(LDA_MODEL_FILE))?;
    let mut topics = String::from("topic,rank,term,weight\n");
    for t in 0..model.num_topics() {
        for (rank, id) in model.top_terms(t, DEFAULT_TOP_N).into_iter().enumerate() {
            topics.push_str(&format!("{t},{},{},{}\n", rank + 1, vocab.term(id), model.phi_row(t)[id as usize]));
        }
    }
    run.write("topics.csv", &topics)?;
    let mut trace = String::from("sweep,log_likelihood\n");
    for (it, ll) in &model.log_likelihood {
        trace.push_str(&format!("{it},{ll}\n"));
    }
    run.write("log_likelihood.csv", &trace)
}

fn cmd_train_embeddings(run: &mut Run, tokens: &Path, cfg: ParagraphVectorConfig) -> Result<()> {
    run.input(tokens)?;
    run.seed = Some(cfg.seed);
    run.config = serde_json::to_value(&cfg)?;
    let docs = textnorm::read_token_docs(tokens)?;
    let model = train_pv(&docs, &cfg)?;
    model.save(&run.path(PV_MODEL_FILE))?;
    let mut loss = String::from("epoch,loss\n");
    for (e, l) in model.epoch_loss.iter().enumerate() {
        loss.push_str(&format!("{},{l}\n", e + 1));
    }
    run.write("loss.csv", &loss)
}

fn load_config(run: &mut Run, path: &Path) -> Result<(RunConfig, NormalizationResources)> {
    require_exists(path)?;
    let cfg = RunConfig::load(path)?;
    cfg.check_paths()?;
    let res = resources(cfg.stopwords.as_deref())?;
    run.input(path)?;
    run.input(&cfg.data)?;
    run.seed = Some(cfg.seed);
    run.config = serde_json::to_value(&cfg)?;
    run.resources.insert("stopwords_sha256".into(), res.checksum().to_string());
    run.write("config.resolved", &cfg.to_text())?;
    Ok((cfg, res))
}

fn prepared(cfg: &RunConfig, res: &NormalizationResources) -> Result<PreparedCorpus> {
    let (raw, records) = load_dataset(&cfg.data)?;
    Ok(prepare_corpus(records, &raw.notes, res))
}

fn importance_rows(report: &ImportanceReport) -> String {
    let mut s = String::from("rank,feature,importance\n");
    for (i, (name, v)) in report.features.iter().enumerate() {
        s.push_str(&format!("{},{name},{v}\n", i + 1));
    }
    s
}

fn cmd_train_classifier(run: &mut Run, config: &Path) -> Result<()> {
    let (cfg, res) = load_config(run, config)?;
    let corpus = prepared(&cfg, &res)?;
    let (spec, estimator) = (cfg.features[0], cfg.estimators[0]);
    if cfg.features.len() > 1 || cfg.estimators.len() > 1 {
        log::warn!("training only the first feature set and estimator ({})", run_name(&spec, estimator));
    }
    let reps = train_representations(spec, &corpus.note_docs, &cfg.representation)?;
    let x = build_features(spec, &reps, &corpus, &cfg.representation)?;
    let cv = cfg.cv_config(estimator);
    let all: Vec<usize> = (0..corpus.rows.len()).collect();
    let search = grid_search(&x, &corpus.rows, &all, &cv, u64::MAX)?;
    let cell = cv.grid[search.selected].with_seed(util::derive_seed(cfg.seed, &[3]));
    log::info!("selected {}", cell.describe());
    let model = classifiers::train(&x, &corpus.rows.labels, &cell)?;
    model.save(&run.path(CLASSIFIER_FILE))?;
    if let Some(lda) = &reps.lda {
        lda.save(&run.path(LDA_MODEL_FILE))?;
    }
    if let Some(pv) = &reps.pv {
        pv.save(&run.path(PV_MODEL_FILE))?;
    }
    if let Ok(report) = model.feature_importances() {
        run.write("importance.csv", &importance_rows(&report))?;
    }
    let mut grid = String::from("cell,config,inner_score\n");
    for (c, s) in search.scores.iter().enumerate() {
        let score = s.map(|v| v.to_string()).unwrap_or_default();
        grid.push_str(&format!("{c},{},{score}\n", cv.grid[c].describe()));
    }
    run.write("grid.csv", &grid)
}

fn write_comparison(run: &Run, prefix: &str, a: &CvRun, b: &CvRun) -> Result<()> {
    let report = compare_classifiers(a, b)?;
    log::info!("{prefix}: kappa {:.4} +- {:.4}", report.summary.mean, report.summary.std);
    run.write(&format!("{prefix}_folds.csv"), &kappa_folds_csv(&report))?;
    run.write(&format!("{prefix}_sweep.csv"), &kappa_sweep_csv(&report.sweep))
}

fn cmd_evaluate(run: &mut Run, config: &Path, per_fold: bool) -> Result<()> {
    let (mut cfg, res) = load_config(run, config)?;
    cfg.representation_per_fold |= per_fold;
    run.config = serde_json::to_value(&cfg)?;
    let corpus = prepared(&cfg, &res)?;
    stats_outputs(run, &synthgen::describe(&corpus.records))?;
    let mut runs: Vec<(String, String, CvRun)> = Vec::new();
    for &spec in &cfg.features {
        let source: Box<dyn FeatureSource> = if cfg.representation_per_fold {
            Box::new(PerFoldFeatures { spec, corpus: &corpus, config: cfg.representation })
        } else {
            let reps = train_representations(spec, &corpus.note_docs, &cfg.representation)?;
            Box::new(FixedFeatures(Arc::new(build_features(spec, &reps, &corpus, &cfg.representation)?)))
        };
        for &estimator in &cfg.estimators {
            let name = run_name(&spec, estimator);
            log::info!("evaluating {name}");
            let cv = nested_cv(&corpus.rows, source.as_ref(), &cfg.cv_config(estimator))?;
            write_run_artifacts(&run.out, &name, &cv, &corpus.rows)?;
            run.write(&format!("{name}_cv.json"), &serde_json::to_string(&cv)?)?;
            if estimator == Estimator::Forest {
                let audit = importance_audit(&cv, cfg.importance_top_n)?;
                run.write(&format!("{name}_importance.csv"), &importance_csv(&audit))?;
            }
            runs.push((name, spec.to_string(), cv));
        }
    }
    let table: Vec<(&str, &str, &CvRun)> = runs.iter().map(|(n, f, r)| (n.as_str(), f.as_str(), r)).collect();
    run.write(SUMMARY_FILE, &summary_csv(&table))?;
    for i in 0..runs.len() {
        for j in i + 1..runs.len() {
            write_comparison(run, &format!("kappa_{}_vs_{}", runs[i].0, runs[j].0), &runs[i].2, &runs[j].2)?;
        }
    }
    Ok(())
}

fn read_run(path: &Path) -> Result<CvRun> {
    require_exists(path)?;
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn cmd_compare(run: &mut Run, a: &Path, b: &Path) -> Result<()> {
    let (ra, rb) = (read_run(a)?, read_run(b)?);
    run.input(a)?;
    run.input(b)?;
    write_comparison(run, "kappa", &ra, &rb)
}

fn read_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        rows.push(rec.iter().map(|v| v.parse().unwrap_or(f64::NAN)).collect());
    }
    Ok(rows)
}

fn files_with_suffix(dir: &Path, suffix: &str) -> Result<Vec<(String, PathBuf)>> {
    let mut out: Vec<(String, PathBuf)> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let name = e.file_name().to_string_lossy().into_owned();
            name.strip_suffix(suffix).map(|stem| (stem.to_string(), e.path()))
        })
        .collect();
    out.sort();
    Ok(out)
}

fn curve_series(files: &[(String, PathBuf)]) -> Result<Vec<Series>> {
    files
        .iter()
        .map(|(name, path)| {
            Ok(Series {
                name: name.clone(),
                points: read_csv(path)?.iter().map(|r| (r[1], r[2])).collect(),
            })
        })
        .collect()
}

fn fractions(counts: &[f64]) -> Vec<f64> {
    let total: f64 = counts.iter().sum();
    counts.iter().map(|&c| if total > 0.0 { c / total } else { 0.0 }).collect()
}

fn histogram_svg(path: &Path, title: &str, x_label: &str) -> Result<String> {
    let rows = read_csv(path)?;
    if rows.is_empty() {
        return Err(Error::Format(format!("{}: no bins", path.display())));
    }
    let mut edges: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    edges.push(rows[rows.len() - 1][1]);
    let pos: Vec<f64> = rows.iter().map(|r| r[2]).collect();
    let neg: Vec<f64> = rows.iter().map(|r| r[3]).collect();
    Ok(svg::histogram_chart(
        title,
        x_label,
        &edges,
        &[("violent", fractions(&pos)), ("non-violent", fractions(&neg))],
    ))
}

fn cmd_report(run: &mut Run, input: &Path) -> Result<()> {
    require_exists(input)?;
    let unit = Some((0.0, 1.0));
    let pr: Vec<_> = files_with_suffix(input, "_pr.csv")?;
    if !pr.is_empty() {
        let series = curve_series(&pr)?;
        run.write("pr_curves.svg", &svg::line_chart("Precision-recall", "recall", "precision", &series, unit, unit))?;
    }
    let roc = files_with_suffix(input, "_roc.csv")?;
    if !roc.is_empty() {
        let series = curve_series(&roc)?;
        run.write("roc_curves.svg", &svg::line_chart("ROC", "false positive rate", "true positive rate", &series, unit, unit))?;
    }
    for (stem, path) in files_with_suffix(input, "_sweep.csv")? {
        run.input(&path)?;
        let points = read_csv(&path)?.iter().map(|r| (r[0], r[1])).collect();
        let series = [Series { name: stem.clone(), points }];
        run.write(
            &format!("{stem}_sweep.svg"),
            &svg::line_chart("Inter-classifier agreement", "threshold", "Cohen's kappa", &series, unit, None),
        )?;
    }
    for (file, title, x_label) in [
        ("age_histogram.csv", "Age at admission", "age (years)"),
        ("words_histogram.csv", "Period note length", "words"),
    ] {
        let path = input.join(file);
        if path.exists() {
            run.input(&path)?;
            run.write(&file.replace(".csv", ".svg"), &histogram_svg(&path, title, x_label)?)?;
        }
    }
    for (_, path) in pr.iter().chain(&roc) {
        run.input(path)?;
    }
    Ok(())
}

fn execute(cli: Cli, args: &[String]) -> Result<()> {
    use Command::*;
    let (name, out) = match &cli.command {
        Synth { out, .. } => ("synth", out),
        Ingest { out, .. } => ("ingest", out),
        Normalize { out, .. } => ("normalize", out),
        TrainLda { out, .. } => ("train-lda", out),
        TrainEmbeddings { out, .. } => ("train-embeddings", out),
        TrainClassifier { out, .. } => ("train-classifier", out),
        Evaluate { out, .. } => ("evaluate", out),
        Compare { out, .. } => ("compare", out),
        Report { out, .. } => ("report", out),
    };
    let mut run = Run::new(name, args, out)?;
    match &cli.command {
        Synth { scale, seed, association, null, .. } => cmd_synth(&mut run, *scale, *seed, *association, *null)?,
        Ingest { data, .. } => cmd_ingest(&mut run, data)?,
        Normalize { dataset, notes, stopwords, .. } => {
            cmd_normalize(&mut run, dataset.as_deref(), notes.as_deref(), stopwords.as_deref())?
        }
        TrainLda { tokens, k, iterations, min_count, min_doc_len, seed, .. } => {
            cmd_train_lda(&mut run, tokens, k, *iterations, *min_count, *min_doc_len, *seed)?
        }
        TrainEmbeddings { tokens, vector_size, epochs, window, min_count, seed, fast, .. } => {
            let cfg = ParagraphVectorConfig {
                vector_size: *vector_size,
                epochs: *epochs,
                window: *window,
                min_count: *min_count,
                seed: resolve_seed(*seed, 1)?,
                mode: if *fast { TrainMode::Fast } else { TrainMode::Deterministic },
                ..Default::default()
            };
            cfg.validate()?;
            cmd_train_embeddings(&mut run, tokens, cfg)?
        }
        TrainClassifier { config, .. } => cmd_train_classifier(&mut run, config)?,
        Evaluate { config, representation_per_fold, .. } => cmd_evaluate(&mut run, config, *representation_per_fold)?,
        Compare { a, b, .. } => cmd_compare(&mut run, a, b)?,
        Report { input, .. } => cmd_report(&mut run, input)?,
    }
    run.finish()
}

/// Parse `args` (program name first), run, and return the exit code:
/// 0 on success, 1 on usage or validation errors, 2 on runtime failures.
pub fn main_with_args(args: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_env("NOTEWATCH_LOG").try_init();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return 1;
        }
        if rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global().is_err() {
            log::warn!("worker pool already initialized; --jobs ignored");
        }
    }
    match execute(cli, &args[1..]) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}
