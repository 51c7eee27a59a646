//! From period records to feature matrices: normalization, representation
//! training and inference, structured columns.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{FeatureSource, LabeledRows};
use crate::classifiers::{structured_features, vector_features, FeatureMatrix};
use crate::corpus::{NoteRecord, PeriodRecord};
use crate::embeddings::{train_pv, ParagraphVectorConfig, ParagraphVectorModel};
use crate::error::{Error, Result};
use crate::textnorm::{normalize_doc, NormalizationResources, TokenDoc};
use crate::topics::{build_vocab, train_lda, InferConfig, LdaConfig, TopicModel};
use crate::util;

/// Which feature blocks a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub lda: bool,
    pub embeddings: bool,
    pub structured: bool,
}

impl FeatureSpec {
    pub const LDA: FeatureSpec = FeatureSpec { lda: true, embeddings: false, structured: false };
    pub const EMBEDDINGS: FeatureSpec = FeatureSpec { lda: false, embeddings: true, structured: false };

    pub fn with_structured(self) -> Self {
        FeatureSpec { structured: true, ..self }
    }
}

impl FromStr for FeatureSpec {
    type Err = Error;

    /// `lda`, `emb`, `struct` joined by `+`; `both` is `lda+emb` and `all`
    /// adds the structured block.
    fn from_str(s: &str) -> Result<Self> {
        let mut spec = FeatureSpec { lda: false, embeddings: false, structured: false };
        for part in s.split('+').map(str::trim) {
            match part {
                "lda" => spec.lda = true,
                "emb" | "embeddings" => spec.embeddings = true,
                "struct" | "structured" => spec.structured = true,
                "both" => {
                    spec.lda = true;
                    spec.embeddings = true;
                }
                "all" => spec = FeatureSpec { lda: true, embeddings: true, structured: true },
                _ => return Err(Error::Config(format!("unknown feature block `{part}` in `{s}`"))),
            }
        }
        Ok(spec)
    }
}

impl fmt::Display for FeatureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.lda {
            parts.push("lda");
        }
        if self.embeddings {
            parts.push("emb");
        }
        if self.structured {
            parts.push("struct");
        }
        f.write_str(&parts.join("+"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepresentationConfig {
    pub lda: LdaConfig,
    pub lda_min_count: u64,
    pub lda_min_doc_len: usize,
    pub infer: InferConfig,
    pub pv: ParagraphVectorConfig,
    /// Inference epochs for period notes; `None` uses the training epochs.
    pub pv_infer_epochs: Option<usize>,
    pub seed: u64,
}

impl RepresentationConfig {
    pub fn new(seed: u64) -> Self {
        RepresentationConfig {
            lda: LdaConfig::new(25, seed),
            lda_min_count: 20,
            lda_min_doc_len: 10,
            infer: InferConfig::default(),
            pv: ParagraphVectorConfig { seed, ..Default::default() },
            pv_infer_epochs: None,
            seed,
        }
    }
}

/// Normalized text for every dataset row plus the individual notes the
/// representation models are trained on.
#[derive(Debug, Clone)]
pub struct PreparedCorpus {
    pub records: Vec<PeriodRecord>,
    pub rows: LabeledRows,
    pub period_docs: Vec<TokenDoc>,
    pub note_docs: Vec<TokenDoc>,
    /// Patient of each entry in `note_docs`.
    pub note_patients: Vec<String>,
}

pub fn prepare_corpus(records: Vec<PeriodRecord>, notes: &[NoteRecord], res: &NormalizationResources) -> PreparedCorpus {
    let period_docs = records
        .par_iter()
        .map(|r| normalize_doc(&r.period_id, &r.period_note, res))
        .collect();
    let note_docs = notes
        .par_iter()
        .map(|n| normalize_doc(&n.note_id, &n.text, res))
        .collect();
    PreparedCorpus {
        rows: LabeledRows::from_records(&records),
        records,
        period_docs,
        note_docs,
        note_patients: notes.iter().map(|n| n.patient_id.clone()).collect(),
    }
}

#[derive(Debug, Clone, Default)]
pub struct Representations {
    pub lda: Option<TopicModel>,
    pub pv: Option<ParagraphVectorModel>,
}

/// Train the representation models `spec` needs on `docs`.
pub fn train_representations(spec: FeatureSpec, docs: &[TokenDoc], cfg: &RepresentationConfig) -> Result<Representations> {
    let mut reps = Representations::default();
    if spec.lda {
        let vocab = build_vocab(docs, cfg.lda_min_count, cfg.lda_min_doc_len)?;
        let bows: Vec<_> = docs
            .iter()
            .filter(|d| d.tokens.len() >= cfg.lda_min_doc_len)
            .map(|d| vocab.bow(d))
            .filter(|b| !b.is_empty())
            .collect();
        log::info!("training LDA: K={}, {} documents, {} terms", cfg.lda.k, bows.len(), vocab.len());
        reps.lda = Some(train_lda(&bows, &vocab, &cfg.lda)?);
    }
    if spec.embeddings {
        log::info!("training paragraph vectors: {} documents, dim {}", docs.len(), cfg.pv.vector_size);
        reps.pv = Some(train_pv(docs, &cfg.pv)?);
    }
    Ok(reps)
}

/// Feature matrix for every row of `corpus`, columns ordered embeddings,
/// topics, structured.
pub fn build_features(
    spec: FeatureSpec,
    reps: &Representations,
    corpus: &PreparedCorpus,
    cfg: &RepresentationConfig,
) -> Result<FeatureMatrix> {
    let mut blocks = Vec::new();
    if spec.embeddings {
        let pv = reps.pv.as_ref().ok_or_else(|| Error::Config("embedding model missing".into()))?;
        let seed = util::derive_seed(cfg.seed, &[10]);
        let vecs = pv.infer_all(&corpus.period_docs, cfg.pv_infer_epochs, seed);
        let flagged = vecs.iter().filter(|v| v.flagged).count();
        if flagged > 0 {
            log::warn!("{flagged} period notes had no in-vocabulary tokens for the embedding model");
        }
        blocks.push(vector_features("emb_", &vecs.into_iter().map(|v| v.vector).collect::<Vec<_>>())?);
    }
    if spec.lda {
        let lda = reps.lda.as_ref().ok_or_else(|| Error::Config("topic model missing".into()))?;
        let bows: Vec<_> = corpus.period_docs.iter().map(|d| lda.vocab().bow(d)).collect();
        let seed = util::derive_seed(cfg.seed, &[11]);
        let vecs = lda.infer_all(&bows, &cfg.infer, seed);
        let flagged = vecs.iter().filter(|v| v.flagged).count();
        if flagged > 0 {
            log::warn!("{flagged} period notes had no in-vocabulary tokens for the topic model");
        }
        blocks.push(vector_features("topic_", &vecs.into_iter().map(|v| v.weights).collect::<Vec<_>>())?);
    }
    if spec.structured {
        blocks.push(structured_features(&corpus.records)?);
    }
    let mut blocks = blocks.into_iter();
    let first = blocks
        .next()
        .ok_or_else(|| Error::Config("feature set selects no blocks".into()))?;
    blocks.try_fold(first, |acc, b| acc.hstack(&b))
}

/// Representations trained once on every note; the same matrix serves all
/// folds.
pub struct FixedFeatures(pub Arc<FeatureMatrix>);

impl FeatureSource for FixedFeatures {
    fn features(&self, _fold: usize, _train_rows: &[usize]) -> Result<Arc<FeatureMatrix>> {
        Ok(Arc::clone(&self.0))
    }
}

/// Representations retrained per outer fold on the notes of outer-train
/// patients only.
pub struct PerFoldFeatures<'a> {
    pub spec: FeatureSpec,
    pub corpus: &'a PreparedCorpus,
    pub config: RepresentationConfig,
}

impl FeatureSource for PerFoldFeatures<'_> {
    fn features(&self, fold: usize, train_rows: &[usize]) -> Result<Arc<FeatureMatrix>> {
        let train_patients: HashSet<&str> = train_rows
            .iter()
            .map(|&r| self.corpus.rows.patient_ids[r].as_str())
            .collect();
        let docs: Vec<TokenDoc> = self
            .corpus
            .note_docs
            .iter()
            .zip(&self.corpus.note_patients)
            .filter(|(_, p)| train_patients.contains(p.as_str()))
            .map(|(d, _)| d.clone())
            .collect();
        let mut cfg = self.config;
        cfg.seed = util::derive_seed(self.config.seed, &[20, fold as u64]);
        cfg.lda.seed = util::derive_seed(self.config.lda.seed, &[20, fold as u64]);
        cfg.pv.seed = util::derive_seed(self.config.pv.seed, &[20, fold as u64]);
        log::info!("fold {fold}: training representations on {} notes", docs.len());
        let reps = train_representations(self.spec, &docs, &cfg)?;
        Ok(Arc::new(build_features(self.spec, &reps, self.corpus, &cfg)?))
    }
}
