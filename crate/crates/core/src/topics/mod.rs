//! Topic modelling: shared vocabulary, LDA training and inference, and
//! coherence-driven choice of the topic count.

mod coherence;
mod lda;
mod vocab;

pub use coherence::{
    coherence_cv, coherence_of_terms, npmi, top_term_strings, CoherenceScore, DEFAULT_TOP_N, DEFAULT_WINDOW,
};
pub use lda::{train_lda, GibbsSampler, InferConfig, LdaConfig, TopicModel, TopicVector};
pub(crate) use lda::{read_f64, read_u32, read_vocab, write_vocab};
pub use vocab::{build_vocab, BowDoc, Vocabulary};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textnorm::TokenDoc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectConfig {
    pub lda: LdaConfig,
    pub top_n: usize,
    pub window: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicCountScore {
    pub k: usize,
    pub coherence: CoherenceScore,
}

/// Train one model per candidate (in parallel) and keep the most coherent
/// topic count. Ties go to the smaller K.
pub fn select_topic_count(
    bow_docs: &[BowDoc],
    vocab: &Vocabulary,
    token_docs: &[TokenDoc],
    candidates: &[usize],
    cfg: &SelectConfig,
) -> Result<(usize, Vec<TopicCountScore>)> {
    if candidates.is_empty() {
        return Err(Error::Config("no topic-count candidates".into()));
    }
    let scores: Vec<TopicCountScore> = candidates
        .par_iter()
        .map(|&k| {
            let lda = LdaConfig { k, alpha: None, ..cfg.lda };
            let model = train_lda(bow_docs, vocab, &lda)?;
            let coherence = coherence_cv(&model, token_docs, cfg.top_n, cfg.window)?;
            log::info!("K={k}: coherence {:.4}", coherence.mean);
            Ok(TopicCountScore { k, coherence })
        })
        .collect::<Result<_>>()?;
    let best = scores
        .iter()
        .fold(None::<&TopicCountScore>, |best, s| match best {
            Some(b) if b.coherence.mean > s.coherence.mean => Some(b),
            Some(b) if b.coherence.mean == s.coherence.mean && b.k < s.k => Some(b),
            _ => Some(s),
        })
        .unwrap();
    Ok((best.k, scores))
}
