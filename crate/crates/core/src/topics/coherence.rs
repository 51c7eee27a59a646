//! C_v topic coherence.
//!
//! Word probabilities are estimated from boolean sliding windows over the
//! reference corpus. Each top term `w'` of a topic gets a context vector of
//! NPMI values against every top term, and the topic score is the mean
//! cosine between `v(w')` and the summed vector of the whole top-term set.

use serde::{Deserialize, Serialize};

use super::lda::TopicModel;
use super::vocab::Vocabulary;
use crate::error::{Error, Result};
use crate::textnorm::TokenDoc;

pub const DEFAULT_WINDOW: usize = 110;
pub const DEFAULT_TOP_N: usize = 10;
const EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceScore {
    pub per_topic: Vec<f64>,
    pub mean: f64,
    pub top_n: usize,
}

/// Window starts covering each occurrence, merged into disjoint inclusive
/// intervals. `positions` must be ascending.
fn window_intervals(positions: &[usize], len: usize, window: usize) -> Vec<(usize, usize)> {
    let last_start = len.saturating_sub(window);
    let mut out: Vec<(usize, usize)> = Vec::new();
    for &p in positions {
        let lo = (p + 1).saturating_sub(window);
        let hi = p.min(last_start);
        match out.last_mut() {
            Some(iv) if lo <= iv.1 + 1 => iv.1 = iv.1.max(hi),
            _ => out.push((lo, hi)),
        }
    }
    out
}

fn span(iv: &[(usize, usize)]) -> u64 {
    iv.iter().map(|&(a, b)| (b - a + 1) as u64).sum()
}

fn overlap(a: &[(usize, usize)], b: &[(usize, usize)]) -> u64 {
    let (mut i, mut j, mut total) = (0, 0, 0u64);
    while i < a.len() && j < b.len() {
        let lo = a[i].0.max(b[j].0);
        let hi = a[i].1.min(b[j].1);
        if lo <= hi {
            total += (hi - lo + 1) as u64;
        }
        if a[i].1 < b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    total
}

/// Window counts for a fixed set of terms.
struct WindowStats {
    windows: u64,
    single: Vec<u64>,
    /// Row-major `n × n` joint counts.
    joint: Vec<u64>,
}

fn count_windows(terms: &[&str], docs: &[TokenDoc], window: usize) -> WindowStats {
    let n = terms.len();
    let index: std::collections::HashMap<&str, usize> =
        terms.iter().enumerate().map(|(i, &t)| (t, i)).collect();
    let mut stats = WindowStats {
        windows: 0,
        single: vec![0; n],
        joint: vec![0; n * n],
    };
    let mut positions: Vec<Vec<usize>> = vec![Vec::new(); n];
    for doc in docs {
        let len = doc.tokens.len();
        if len == 0 {
            continue;
        }
        stats.windows += (len.saturating_sub(window) + 1) as u64;
        positions.iter_mut().for_each(Vec::clear);
        for (p, t) in doc.tokens.iter().enumerate() {
            if let Some(&i) = index.get(t.as_str()) {
                positions[i].push(p);
            }
        }
        let present: Vec<(usize, Vec<(usize, usize)>)> = positions
            .iter()
            .enumerate()
            .filter(|(_, ps)| !ps.is_empty())
            .map(|(i, ps)| (i, window_intervals(ps, len, window)))
            .collect();
        for (a, (i, ia)) in present.iter().enumerate() {
            let s = span(ia);
            stats.single[*i] += s;
            stats.joint[i * n + i] += s;
            for (j, ib) in &present[a + 1..] {
                let o = overlap(ia, ib);
                stats.joint[i * n + j] += o;
                stats.joint[j * n + i] += o;
            }
        }
    }
    stats
}

/// Normalized PMI from window probabilities. A term that never occurs has
/// no defined association and scores -1, the value a vanishing joint count
/// tends to.
pub fn npmi(p_i: f64, p_j: f64, p_ij: f64) -> f64 {
    if p_i == 0.0 || p_j == 0.0 {
        return -1.0;
    }
    let joint = p_ij + EPSILON;
    ((joint) / (p_i * p_j)).ln() / -joint.ln()
}

/// C_v score of one ordered top-term list given its window statistics.
fn topic_cv(ids: &[usize], stats: &WindowStats, n: usize) -> f64 {
    let total = stats.windows.max(1) as f64;
    let p = |i: usize| stats.single[i] as f64 / total;
    let vectors: Vec<Vec<f64>> = ids
        .iter()
        .map(|&i| {
            ids.iter()
                .map(|&j| npmi(p(i), p(j), stats.joint[i * n + j] as f64 / total))
                .collect()
        })
        .collect();
    let mut whole = vec![0.0; ids.len()];
    for v in &vectors {
        for (w, x) in whole.iter_mut().zip(v) {
            *w += x;
        }
    }
    let sims: Vec<f64> = vectors.iter().map(|v| crate::util::cosine(v, &whole)).collect();
    crate::util::mean(&sims)
}

/// C_v coherence for explicit top-term lists.
pub fn coherence_of_terms(topics: &[Vec<String>], docs: &[TokenDoc], window: usize) -> Result<CoherenceScore> {
    if window == 0 {
        return Err(Error::Config("coherence window must be at least 1".into()));
    }
    if topics.is_empty() {
        return Err(Error::InvalidInput("no topics to score".into()));
    }
    let mut all: Vec<&str> = topics.iter().flatten().map(String::as_str).collect();
    all.sort_unstable();
    all.dedup();
    let stats = count_windows(&all, docs, window);
    let n = all.len();
    let per_topic: Vec<f64> = topics
        .iter()
        .map(|t| {
            let ids: Vec<usize> = t.iter().map(|w| all.binary_search(&w.as_str()).unwrap()).collect();
            topic_cv(&ids, &stats, n)
        })
        .collect();
    Ok(CoherenceScore {
        mean: crate::util::mean(&per_topic),
        top_n: topics.iter().map(Vec::len).max().unwrap_or(0),
        per_topic,
    })
}

pub fn top_term_strings(model: &TopicModel, top_n: usize) -> Vec<Vec<String>> {
    let vocab: &Vocabulary = model.vocab();
    (0..model.num_topics())
        .map(|t| {
            model
                .top_terms(t, top_n)
                .into_iter()
                .map(|id| vocab.term(id).to_string())
                .collect()
        })
        .collect()
}

pub fn coherence_cv(model: &TopicModel, docs: &[TokenDoc], top_n: usize, window: usize) -> Result<CoherenceScore> {
    if top_n < 2 {
        return Err(Error::Config("coherence needs at least 2 top terms".into()));
    }
    coherence_of_terms(&top_term_strings(model, top_n), docs, window)
}
