//! Class-weighted random forests and RBF SVMs with probability outputs.

mod features;
mod forest;
mod svm;

pub use features::{
    standardize, structured_features, vector_features, FeatureMatrix, StandardScaler, STRUCTURED_COLUMNS,
};
pub use forest::{fit_forest, Criterion, Forest, MaxFeatures, Node, RandomForestConfig, Tree};
pub use svm::{
    fit_kernel_machine, fit_svm, rbf, solve_dual, DualSolution, KernelCache, Platt, Svm, SvmConfig, SvmKernelModel,
};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util;

/// Balanced class weights `[w_negative, w_positive]` with `w_c = N / (2 N_c)`.
pub fn class_weights(labels: &[bool]) -> Result<[f64; 2]> {
    let n = labels.len() as f64;
    let pos = labels.iter().filter(|&&l| l).count() as f64;
    let neg = n - pos;
    if pos == 0.0 || neg == 0.0 {
        return Err(Error::InvalidInput("class weights need both classes present".into()));
    }
    Ok([n / (2.0 * neg), n / (2.0 * pos)])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassifierConfig {
    Forest(RandomForestConfig),
    Svm(SvmConfig),
}

impl ClassifierConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ClassifierConfig::Forest(_) => "forest",
            ClassifierConfig::Svm(_) => "svm",
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        match &mut self {
            ClassifierConfig::Forest(c) => c.seed = seed,
            ClassifierConfig::Svm(c) => c.seed = seed,
        }
        self
    }

    /// Grid-cell description without the seed, e.g.
    /// `min_samples_leaf=3;max_features=sqrt;criterion=gini`.
    pub fn describe(&self) -> String {
        match self {
            ClassifierConfig::Forest(c) => format!(
                "min_samples_leaf={};max_features={};criterion={}",
                c.min_samples_leaf,
                c.max_features,
                match c.criterion {
                    Criterion::Gini => "gini",
                    Criterion::Entropy => "entropy",
                }
            ),
            ClassifierConfig::Svm(c) => format!("C={};gamma={}", c.c, c.gamma),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Forest(Forest),
    Svm(Svm),
}

const MODEL_FORMAT: &str = "notewatch-classifier";
const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedClassifier {
    pub format: String,
    pub version: u32,
    pub feature_names: Vec<String>,
    pub config: ClassifierConfig,
    pub model: Model,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    /// `(feature, importance)` sorted by decreasing importance, ties by name.
    pub features: Vec<(String, f64)>,
}

impl ImportanceReport {
    pub fn top(&self, n: usize) -> &[(String, f64)] {
        &self.features[..n.min(self.features.len())]
    }
}

pub fn train(x: &FeatureMatrix, y: &[bool], config: &ClassifierConfig) -> Result<TrainedClassifier> {
    let model = match config {
        ClassifierConfig::Forest(c) => Model::Forest(fit_forest(x, y, class_weights(y)?, c)?),
        ClassifierConfig::Svm(c) => Model::Svm(fit_svm(x, y, c)?),
    };
    Ok(TrainedClassifier {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        feature_names: x.names().to_vec(),
        config: *config,
        model,
    })
}

impl TrainedClassifier {
    /// Positive-class scores in `[0, 1]`. Columns must match training by
    /// count and name.
    pub fn predict_proba(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        if x.n_cols() != self.feature_names.len() {
            return Err(Error::WidthMismatch {
                expected: self.feature_names.len(),
                got: x.n_cols(),
            });
        }
        if x.names() != self.feature_names.as_slice() {
            return Err(Error::InvalidInput("feature names differ from training".into()));
        }
        Ok((0..x.n_rows()).map(|i| self.predict_row(x.row(i))).collect())
    }

    /// Score one raw row; the caller is responsible for column order.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        match &self.model {
            Model::Forest(f) => f.predict_row(row),
            Model::Svm(s) => s.predict_row(row),
        }
    }

    pub fn feature_importances(&self) -> Result<ImportanceReport> {
        let Model::Forest(f) = &self.model else {
            return Err(Error::Unsupported("feature importances exist only for forests".into()));
        };
        let mut features: Vec<(String, f64)> = self.feature_names.iter().cloned().zip(f.importances.iter().copied()).collect();
        features.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Ok(ImportanceReport { features })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let w = util::create_file(path)?;
        serde_json::to_writer(w, self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: TrainedClassifier = serde_json::from_str(text)?;
        if m.format != MODEL_FORMAT || m.version != MODEL_VERSION {
            return Err(Error::Format(format!("unsupported classifier {} v{}", m.format, m.version)));
        }
        Ok(m)
    }
}
