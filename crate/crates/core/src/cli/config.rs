//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. List values are
//! comma-separated. Relative paths resolve against the config file's
//! directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifiers::{ClassifierConfig, Criterion, MaxFeatures, RandomForestConfig, SvmConfig};
use crate::embeddings::TrainMode;
use crate::error::{Error, Result};
use crate::harness::{CvConfig, FeatureSpec, RepresentationConfig, SelectionMetric};

pub const SEED_ENV: &str = "NOTEWATCH_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Forest,
    Svm,
}

impl FromStr for Estimator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forest" | "rf" => Ok(Estimator::Forest),
            "svm" => Ok(Estimator::Svm),
            _ => Err(Error::Config(format!("estimator must be forest or svm, got `{s}`"))),
        }
    }
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Forest => "forest",
            Estimator::Svm => "svm",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Directory holding the four corpus files.
    pub data: PathBuf,
    pub stopwords: Option<PathBuf>,
    pub features: Vec<FeatureSpec>,
    pub estimators: Vec<Estimator>,
    pub seed: u64,
    pub outer_folds: usize,
    pub inner_folds: usize,
    pub selection: SelectionMetric,
    pub representation_per_fold: bool,
    pub importance_top_n: usize,
    pub representation: RepresentationConfig,
    pub n_estimators: usize,
    pub forest_min_samples_leaf: Vec<usize>,
    pub forest_max_features: Vec<MaxFeatures>,
    pub forest_criterion: Vec<Criterion>,
    pub svm_c: Vec<f64>,
    pub svm_gamma: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: PathBuf::from("data"),
            stopwords: None,
            features: vec![FeatureSpec::LDA, FeatureSpec::EMBEDDINGS],
            estimators: vec![Estimator::Forest],
            seed: 1,
            outer_folds: 5,
            inner_folds: 5,
            selection: SelectionMetric::PrAuc,
            representation_per_fold: false,
            importance_top_n: 10,
            representation: RepresentationConfig::new(1),
            n_estimators: 500,
            forest_min_samples_leaf: vec![3, 5, 10],
            forest_max_features: vec![MaxFeatures::Count(5), MaxFeatures::Count(8), MaxFeatures::Sqrt],
            forest_criterion: vec![Criterion::Gini, Criterion::Entropy],
            svm_c: vec![0.1, 1.0, 10.0],
            svm_gamma: vec![1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0],
        }
    }
}

fn list<T, F: Fn(&str) -> Result<T>>(value: &str, parse: F) -> Result<Vec<T>> {
    let items: Vec<T> = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(parse)
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(Error::Config(format!("empty list `{value}`")));
    }
    Ok(items)
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got `{value}`"))),
    }
}

fn parse_max_features(s: &str) -> Result<MaxFeatures> {
    if s == "sqrt" {
        Ok(MaxFeatures::Sqrt)
    } else {
        Ok(MaxFeatures::Count(num("forest_max_features", s)?))
    }
}

fn parse_criterion(s: &str) -> Result<Criterion> {
    match s {
        "gini" => Ok(Criterion::Gini),
        "entropy" => Ok(Criterion::Entropy),
        _ => Err(Error::Config(format!("criterion must be gini or entropy, got `{s}`"))),
    }
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

/// Split text into key/value pairs, rejecting duplicates and malformed lines.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut pairs = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
        let k = k.trim().to_string();
        if pairs.insert(k.clone(), v.trim().to_string()).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key `{k}`", n + 1)));
        }
    }
    Ok(pairs)
}

impl RunConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seed_set = false;
        let mut lda_seed = None;
        let mut pv_seed = None;
        for (key, value) in parse_pairs(text)? {
            let v = value.as_str();
            let r = &mut cfg.representation;
            match key.as_str() {
                "data" => cfg.data = base_dir.join(v),
                "stopwords" => cfg.stopwords = Some(base_dir.join(v)),
                "features" => cfg.features = list(v, FeatureSpec::from_str)?,
                "estimators" | "estimator" => cfg.estimators = list(v, Estimator::from_str)?,
                "seed" => {
                    cfg.seed = num(&key, v)?;
                    seed_set = true;
                }
                "outer_folds" => cfg.outer_folds = num(&key, v)?,
                "inner_folds" => cfg.inner_folds = num(&key, v)?,
                "selection" => cfg.selection = v.parse()?,
                "representation_per_fold" => cfg.representation_per_fold = parse_bool(&key, v)?,
                "importance_top_n" => cfg.importance_top_n = num(&key, v)?,
                "lda_k" => r.lda.k = num(&key, v)?,
                "lda_alpha" => r.lda.alpha = Some(num(&key, v)?),
                "lda_beta" => r.lda.beta = num(&key, v)?,
                "lda_iterations" => r.lda.iterations = num(&key, v)?,
                "lda_seed" => lda_seed = Some(num(&key, v)?),
                "lda_min_count" => r.lda_min_count = num(&key, v)?,
                "lda_min_doc_len" => r.lda_min_doc_len = num(&key, v)?,
                "infer_iterations" => r.infer.iterations = num(&key, v)?,
                "infer_burn_in" => r.infer.burn_in = num(&key, v)?,
                "pv_vector_size" => r.pv.vector_size = num(&key, v)?,
                "pv_window" => r.pv.window = num(&key, v)?,
                "pv_min_count" => r.pv.min_count = num(&key, v)?,
                "pv_min_doc_len" => r.pv.min_doc_len = num(&key, v)?,
                "pv_epochs" => r.pv.epochs = num(&key, v)?,
                "pv_negative" => r.pv.negative = num(&key, v)?,
                "pv_initial_lr" => r.pv.initial_lr = num(&key, v)?,
                "pv_final_lr" => r.pv.final_lr = num(&key, v)?,
                "pv_seed" => pv_seed = Some(num(&key, v)?),
                "pv_infer_epochs" => r.pv_infer_epochs = Some(num(&key, v)?),
                "pv_mode" => {
                    r.pv.mode = match v {
                        "deterministic" => TrainMode::Deterministic,
                        "fast" => TrainMode::Fast,
                        _ => return Err(Error::Config(format!("pv_mode must be deterministic or fast, got `{v}`"))),
                    }
                }
                "n_estimators" => cfg.n_estimators = num(&key, v)?,
                "forest_min_samples_leaf" => cfg.forest_min_samples_leaf = list(v, |s| num(&key, s))?,
                "forest_max_features" => cfg.forest_max_features = list(v, parse_max_features)?,
                "forest_criterion" => cfg.forest_criterion = list(v, parse_criterion)?,
                "svm_c" => cfg.svm_c = list(v, |s| num(&key, s))?,
                "svm_gamma" => cfg.svm_gamma = list(v, |s| num(&key, s))?,
                _ => return Err(Error::Config(format!("unknown key `{key}`"))),
            }
        }
        if let Ok(s) = std::env::var(SEED_ENV) {
            cfg.seed = num(SEED_ENV, &s)?;
            seed_set = true;
        }
        if seed_set || lda_seed.is_some() || pv_seed.is_some() {
            cfg.representation.seed = cfg.seed;
            cfg.representation.lda.seed = lda_seed.unwrap_or(cfg.seed);
            cfg.representation.pv.seed = pv_seed.unwrap_or(cfg.seed);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        RunConfig::parse(&text, base)
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.is_empty() || self.estimators.is_empty() {
            return Err(Error::Config("features and estimators must be non-empty".into()));
        }
        if self.forest_min_samples_leaf.contains(&0) || self.n_estimators == 0 {
            return Err(Error::Config("forest sizes must be positive".into()));
        }
        if self.svm_c.iter().chain(&self.svm_gamma).any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::Config("svm_c and svm_gamma must be positive".into()));
        }
        self.representation.pv.validate()?;
        if self.representation.lda.k == 0 || self.representation.lda.iterations == 0 {
            return Err(Error::Config("lda_k and lda_iterations must be positive".into()));
        }
        if self.representation.infer.burn_in >= self.representation.infer.iterations {
            return Err(Error::Config("infer_burn_in must be below infer_iterations".into()));
        }
        Ok(())
    }

    /// Input paths must exist before a run starts.
    pub fn check_paths(&self) -> Result<()> {
        let mut paths = vec![self.data.clone()];
        paths.extend(self.stopwords.clone());
        for p in paths {
            if !p.exists() {
                return Err(Error::Config(format!("path does not exist: {}", p.display())));
            }
        }
        Ok(())
    }

    pub fn grid(&self, estimator: Estimator) -> Vec<ClassifierConfig> {
        let mut grid = Vec::new();
        match estimator {
            Estimator::Forest => {
                for &min_samples_leaf in &self.forest_min_samples_leaf {
                    for &max_features in &self.forest_max_features {
                        for &criterion in &self.forest_criterion {
                            grid.push(ClassifierConfig::Forest(RandomForestConfig {
                                n_estimators: self.n_estimators,
                                min_samples_leaf,
                                max_features,
                                criterion,
                                seed: 0,
                            }));
                        }
                    }
                }
            }
            Estimator::Svm => {
                for &c in &self.svm_c {
                    for &gamma in &self.svm_gamma {
                        grid.push(ClassifierConfig::Svm(SvmConfig { c, gamma, ..Default::default() }));
                    }
                }
            }
        }
        grid
    }

    pub fn cv_config(&self, estimator: Estimator) -> CvConfig {
        CvConfig {
            outer_folds: self.outer_folds,
            inner_folds: self.inner_folds,
            grid: self.grid(estimator),
            selection: self.selection,
            seed: self.seed,
        }
    }

    /// The fully resolved configuration in the input format.
    pub fn to_text(&self) -> String {
        let r = &self.representation;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| writeln!(out, "{k} = {v}").unwrap();
        kv("data", self.data.display().to_string());
        if let Some(s) = &self.stopwords {
            kv("stopwords", s.display().to_string());
        }
        kv("features", join(&self.features));
        kv("estimators", self.estimators.iter().map(|e| e.name()).collect::<Vec<_>>().join(", "));
        kv("seed", self.seed.to_string());
        kv("outer_folds", self.outer_folds.to_string());
        kv("inner_folds", self.inner_folds.to_string());
        kv(
            "selection",
            match self.selection {
                SelectionMetric::PrAuc => "pr_auc",
                SelectionMetric::RocAuc => "roc_auc",
            }
            .into(),
        );
        kv("representation_per_fold", self.representation_per_fold.to_string());
        kv("importance_top_n", self.importance_top_n.to_string());
        kv("lda_k", r.lda.k.to_string());
        if let Some(a) = r.lda.alpha {
            kv("lda_alpha", a.to_string());
        }
        kv("lda_beta", r.lda.beta.to_string());
        kv("lda_iterations", r.lda.iterations.to_string());
        kv("lda_seed", r.lda.seed.to_string());
        kv("lda_min_count", r.lda_min_count.to_string());
        kv("lda_min_doc_len", r.lda_min_doc_len.to_string());
        kv("infer_iterations", r.infer.iterations.to_string());
        kv("infer_burn_in", r.infer.burn_in.to_string());
        kv("pv_vector_size", r.pv.vector_size.to_string());
        kv("pv_window", r.pv.window.to_string());
        kv("pv_min_count", r.pv.min_count.to_string());
        kv("pv_min_doc_len", r.pv.min_doc_len.to_string());
        kv("pv_epochs", r.pv.epochs.to_string());
        kv("pv_negative", r.pv.negative.to_string());
        kv("pv_initial_lr", r.pv.initial_lr.to_string());
        kv("pv_final_lr", r.pv.final_lr.to_string());
        kv("pv_seed", r.pv.seed.to_string());
        if let Some(e) = r.pv_infer_epochs {
            kv("pv_infer_epochs", e.to_string());
        }
        kv(
            "pv_mode",
            match r.pv.mode {
                TrainMode::Deterministic => "deterministic",
                TrainMode::Fast => "fast",
            }
            .into(),
        );
        kv("n_estimators", self.n_estimators.to_string());
        kv("forest_min_samples_leaf", join(&self.forest_min_samples_leaf));
        kv("forest_max_features", join(&self.forest_max_features));
        kv(
            "forest_criterion",
            self.forest_criterion
                .iter()
                .map(|c| match c {
                    Criterion::Gini => "gini",
                    Criterion::Entropy => "entropy",
                })
                .collect::<Vec<_>>()
                .join(", "),
        );
        kv("svm_c", join(&self.svm_c));
        kv("svm_gamma", join(&self.svm_gamma));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_give_eighteen_cell_grids() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.grid(Estimator::Forest).len(), 18);
        assert_eq!(cfg.grid(Estimator::Svm).len(), 18);
    }

    #[test]
    fn parses_lists_and_resolves_paths() {
        let text = "# run\ndata = corpus\nfeatures = lda+struct, emb\nestimators = svm\nsvm_c = 1\nlda_k = 12\n";
        let cfg = RunConfig::parse(text, Path::new("/base")).unwrap();
        assert_eq!(cfg.data, PathBuf::from("/base/corpus"));
        assert_eq!(cfg.features.len(), 2);
        assert_eq!(cfg.grid(Estimator::Svm).len(), 6);
        assert_eq!(cfg.representation.lda.k, 12);
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        assert!(matches!(RunConfig::parse("colour = red", Path::new(".")), Err(Error::Config(_))));
        assert!(matches!(RunConfig::parse("seed = 1\nseed = 2", Path::new(".")), Err(Error::Config(_))));
        assert!(matches!(RunConfig::parse("seed", Path::new(".")), Err(Error::Config(_))));
    }

    #[test]
    fn resolved_text_parses_back_to_the_same_config() {
        let cfg = RunConfig::parse("data = /d\nseed = 9\nlda_k = 7\npv_infer_epochs = 5", Path::new("/")).unwrap();
        assert_eq!(RunConfig::parse(&cfg.to_text(), Path::new("/")).unwrap(), cfg);
    }
}
