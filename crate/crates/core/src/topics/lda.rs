//! Latent Dirichlet allocation trained by collapsed Gibbs sampling.
//!
//! For token `i` of document `d` with word `w`, the sampler draws its topic
//! from
//!
//! ```text
//! p(z = k | rest) ∝ (n_dk + α) · (n_kw + β) / (n_k + V·β)
//! ```
//!
//! where every count excludes token `i` itself. Topic-term distributions are
//! read off the final counts as `φ_kw = (n_kw + β) / (n_k + V·β)`.
//!
//! # Model file layout
//!
//! All integers are little-endian `u32`, floats little-endian IEEE-754 `f64`:
//!
//! ```text
//! magic  "NWLDA\0"        6 bytes
//! version                u32 (= 1)
//! K, V                   u32, u32
//! alpha, beta            f64, f64
//! V terms                (u32 byte length, UTF-8 bytes) each
//! V corpus frequencies   u64 each
//! V document frequencies u64 each
//! phi                    K·V f64, row-major (topic-major)
//! ```

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::vocab::{BowDoc, Vocabulary};
use crate::error::{Error, Result};
use crate::util::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub k: usize,
    /// Symmetric document-topic prior; `None` means `5.0 / k`.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
    /// Record the log-likelihood every this many sweeps.
    pub ll_every: usize,
}

impl LdaConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        LdaConfig {
            k,
            alpha: None,
            beta: 0.01,
            iterations: 1000,
            seed,
            ll_every: 10,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(5.0 / self.k as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    k: usize,
    alpha: f64,
    beta: f64,
    vocab: Vocabulary,
    phi: Vec<f64>,
    /// `(sweep, log p(w | z))` pairs recorded during training.
    pub log_likelihood: Vec<(usize, f64)>,
    pub iterations: usize,
}

/// Mutable sampler state. Public so the conditional distribution can be
/// audited against a direct computation.
pub struct GibbsSampler {
    k: usize,
    v: usize,
    alpha: f64,
    beta: f64,
    docs: Vec<Vec<u32>>,
    z: Vec<Vec<u16>>,
    n_dk: Vec<u32>,
    n_wk: Vec<u32>,
    n_k: Vec<u32>,
    rng: Rng,
    probs: Vec<f64>,
}

impl GibbsSampler {
    /// `docs` are token id sequences over a vocabulary of size `v`. Topics are
    /// initialized uniformly at random.
    pub fn new(docs: Vec<Vec<u32>>, v: usize, k: usize, alpha: f64, beta: f64, seed: u64) -> Result<Self> {
        if k == 0 || k > u16::MAX as usize {
            return Err(Error::Config(format!("topic count {k} out of range")));
        }
        let total: usize = docs.iter().map(Vec::len).sum();
        if total == 0 {
            return Err(Error::Degenerate("corpus has no in-vocabulary tokens".into()));
        }
        if k > total {
            return Err(Error::Degenerate(format!(
                "{k} topics for only {total} tokens"
            )));
        }
        if let Some(bad) = docs.iter().flatten().find(|&&w| w as usize >= v) {
            return Err(Error::InvalidInput(format!("term id {bad} outside vocabulary of {v}")));
        }
        let mut rng = util::rng(seed);
        let mut n_dk = vec![0u32; docs.len() * k];
        let mut n_wk = vec![0u32; v * k];
        let mut n_k = vec![0u32; k];
        let z: Vec<Vec<u16>> = docs
            .iter()
            .enumerate()
            .map(|(d, doc)| {
                doc.iter()
                    .map(|&w| {
                        let t = rng.random_range(0..k);
                        n_dk[d * k + t] += 1;
                        n_wk[w as usize * k + t] += 1;
                        n_k[t] += 1;
                        t as u16
                    })
                    .collect()
            })
            .collect();
        Ok(GibbsSampler {
            k,
            v,
            alpha,
            beta,
            docs,
            z,
            n_dk,
            n_wk,
            n_k,
            rng,
            probs: vec![0.0; k],
        })
    }

    pub fn assignments(&self) -> &[Vec<u16>] {
        &self.z
    }

    pub fn docs(&self) -> &[Vec<u32>] {
        &self.docs
    }

    /// Normalized full conditional of token `pos` in document `doc`, with the
    /// token's own assignment excluded from the counts.
    pub fn conditional(&self, doc: usize, pos: usize) -> Vec<f64> {
        let (k, vb) = (self.k, self.v as f64 * self.beta);
        let w = self.docs[doc][pos] as usize;
        let own = self.z[doc][pos] as usize;
        let mut p: Vec<f64> = (0..k)
            .map(|t| {
                let minus = if t == own { 1.0 } else { 0.0 };
                let ndk = self.n_dk[doc * k + t] as f64 - minus;
                let nwk = self.n_wk[w * k + t] as f64 - minus;
                let nk = self.n_k[t] as f64 - minus;
                (ndk + self.alpha) * (nwk + self.beta) / (nk + vb)
            })
            .collect();
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= s);
        p
    }

    /// One full sweep over every token.
    pub fn sweep(&mut self) {
        let k = self.k;
        let vb = self.v as f64 * self.beta;
        let (alpha, beta) = (self.alpha, self.beta);
        for d in 0..self.docs.len() {
            let ndk = &mut self.n_dk[d * k..(d + 1) * k];
            for (pos, &w) in self.docs[d].iter().enumerate() {
                let w = w as usize;
                let old = self.z[d][pos] as usize;
                let nwk = &mut self.n_wk[w * k..(w + 1) * k];
                ndk[old] -= 1;
                nwk[old] -= 1;
                self.n_k[old] -= 1;

                let mut total = 0.0;
                for t in 0..k {
                    total += (ndk[t] as f64 + alpha) * (nwk[t] as f64 + beta)
                        / (self.n_k[t] as f64 + vb);
                    self.probs[t] = total;
                }
                let u = self.rng.random::<f64>() * total;
                let new = self.probs.partition_point(|&c| c <= u).min(k - 1);

                ndk[new] += 1;
                nwk[new] += 1;
                self.n_k[new] += 1;
                self.z[d][pos] = new as u16;
            }
        }
    }

    /// `log p(w | z)` with φ integrated out.
    pub fn log_likelihood(&self) -> f64 {
        let (k, v, beta) = (self.k, self.v, self.beta);
        let mut ll = k as f64 * (ln_gamma(v as f64 * beta) - v as f64 * ln_gamma(beta));
        for t in 0..k {
            ll -= ln_gamma(self.n_k[t] as f64 + v as f64 * beta);
        }
        for &n in &self.n_wk {
            if n > 0 {
                ll += ln_gamma(n as f64 + beta) - ln_gamma(beta);
            }
        }
        ll
    }

    /// Check the running counts against the assignments. Returns false on any
    /// drift.
    pub fn counts_consistent(&self) -> bool {
        let k = self.k;
        let mut n_dk = vec![0u32; self.docs.len() * k];
        let mut n_wk = vec![0u32; self.v * k];
        let mut n_k = vec![0u32; k];
        for (d, doc) in self.docs.iter().enumerate() {
            for (&w, &t) in doc.iter().zip(&self.z[d]) {
                n_dk[d * k + t as usize] += 1;
                n_wk[w as usize * k + t as usize] += 1;
                n_k[t as usize] += 1;
            }
        }
        n_dk == self.n_dk && n_wk == self.n_wk && n_k == self.n_k
    }

    /// Topic-major `K × V` matrix of smoothed topic-term probabilities.
    pub fn phi(&self) -> Vec<f64> {
        let (k, v) = (self.k, self.v);
        let vb = v as f64 * self.beta;
        let mut phi = vec![0.0; k * v];
        for t in 0..k {
            let den = self.n_k[t] as f64 + vb;
            for w in 0..v {
                phi[t * v + w] = (self.n_wk[w * k + t] as f64 + self.beta) / den;
            }
        }
        phi
    }
}

fn expand(doc: &BowDoc) -> Vec<u32> {
    doc.terms
        .iter()
        .flat_map(|&(w, c)| std::iter::repeat_n(w, c as usize))
        .collect()
}

pub fn train_lda(docs: &[BowDoc], vocab: &Vocabulary, cfg: &LdaConfig) -> Result<TopicModel> {
    if cfg.iterations == 0 {
        return Err(Error::Config("iterations must be at least 1".into()));
    }
    if docs.is_empty() {
        return Err(Error::Degenerate("empty training corpus".into()));
    }
    let alpha = cfg.alpha();
    let mut sampler = GibbsSampler::new(
        docs.iter().map(expand).collect(),
        vocab.len(),
        cfg.k,
        alpha,
        cfg.beta,
        cfg.seed,
    )?;
    let every = cfg.ll_every.max(1);
    let mut trace = Vec::new();
    for it in 1..=cfg.iterations {
        sampler.sweep();
        if it % every == 0 || it == 1 || it == cfg.iterations {
            trace.push((it, sampler.log_likelihood()));
        }
    }
    Ok(TopicModel {
        k: cfg.k,
        alpha,
        beta: cfg.beta,
        vocab: vocab.clone(),
        phi: sampler.phi(),
        log_likelihood: trace,
        iterations: cfg.iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InferConfig {
    pub iterations: usize,
    pub burn_in: usize,
}

impl Default for InferConfig {
    fn default() -> Self {
        InferConfig {
            iterations: 100,
            burn_in: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicVector {
    pub doc_id: String,
    pub weights: Vec<f64>,
    /// Set when the document had no in-vocabulary tokens and the uniform
    /// fallback was returned.
    pub flagged: bool,
}

impl TopicModel {
    pub fn from_parts(k: usize, alpha: f64, beta: f64, vocab: Vocabulary, phi: Vec<f64>) -> Result<Self> {
        if k == 0 || phi.len() != k * vocab.len() {
            return Err(Error::Format(format!(
                "phi has {} entries, expected {k} x {}",
                phi.len(),
                vocab.len()
            )));
        }
        Ok(TopicModel {
            k,
            alpha,
            beta,
            vocab,
            phi,
            log_likelihood: Vec::new(),
            iterations: 0,
        })
    }

    pub fn num_topics(&self) -> usize {
        self.k
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn phi_row(&self, topic: usize) -> &[f64] {
        let v = self.vocab.len();
        &self.phi[topic * v..(topic + 1) * v]
    }

    /// The `n` highest-probability term ids of `topic`, ties by id.
    pub fn top_terms(&self, topic: usize, n: usize) -> Vec<u32> {
        let row = self.phi_row(topic);
        let mut ids: Vec<u32> = (0..row.len() as u32).collect();
        ids.sort_by(|&a, &b| row[b as usize].total_cmp(&row[a as usize]).then(a.cmp(&b)));
        ids.truncate(n);
        ids
    }

    /// Topic proportions for an unseen document, sampling its assignments with
    /// φ held fixed. Weights are the post-burn-in average assignment counts,
    /// smoothed by α.
    pub fn infer(&self, doc: &BowDoc, cfg: &InferConfig, seed: u64) -> TopicVector {
        let k = self.k;
        let v = self.vocab.len();
        let tokens: Vec<u32> = expand(doc).into_iter().filter(|&w| (w as usize) < v).collect();
        if tokens.is_empty() {
            return TopicVector {
                doc_id: doc.doc_id.clone(),
                weights: vec![1.0 / k as f64; k],
                flagged: true,
            };
        }
        let mut rng = util::rng(seed);
        let mut z: Vec<usize> = tokens.iter().map(|_| rng.random_range(0..k)).collect();
        let mut n_dk = vec![0u32; k];
        for &t in &z {
            n_dk[t] += 1;
        }
        let mut acc = vec![0.0f64; k];
        let mut kept = 0usize;
        let mut cum = vec![0.0; k];
        let iterations = cfg.iterations.max(cfg.burn_in + 1);
        for it in 0..iterations {
            for (pos, &w) in tokens.iter().enumerate() {
                n_dk[z[pos]] -= 1;
                let mut total = 0.0;
                for t in 0..k {
                    total += (n_dk[t] as f64 + self.alpha) * self.phi[t * v + w as usize];
                    cum[t] = total;
                }
                let u = rng.random::<f64>() * total;
                let new = cum.partition_point(|&c| c <= u).min(k - 1);
                n_dk[new] += 1;
                z[pos] = new;
            }
            if it >= cfg.burn_in {
                for t in 0..k {
                    acc[t] += n_dk[t] as f64;
                }
                kept += 1;
            }
        }
        let n = tokens.len() as f64;
        let den = n + k as f64 * self.alpha;
        let weights = acc
            .iter()
            .map(|&a| (a / kept as f64 + self.alpha) / den)
            .collect();
        TopicVector {
            doc_id: doc.doc_id.clone(),
            weights,
            flagged: false,
        }
    }

    /// Infer every document in parallel; document `i` uses a seed derived
    /// from `(seed, i)`, so results do not depend on scheduling.
    pub fn infer_all(&self, docs: &[BowDoc], cfg: &InferConfig, seed: u64) -> Vec<TopicVector> {
        docs.par_iter()
            .enumerate()
            .map(|(i, d)| self.infer(d, cfg, util::derive_seed(seed, &[i as u64])))
            .collect()
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(b"NWLDA\0")?;
        w.write_all(&1u32.to_le_bytes())?;
        w.write_all(&(self.k as u32).to_le_bytes())?;
        w.write_all(&(self.vocab.len() as u32).to_le_bytes())?;
        w.write_all(&self.alpha.to_le_bytes())?;
        w.write_all(&self.beta.to_le_bytes())?;
        write_vocab(&mut w, &self.vocab)?;
        for x in &self.phi {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 6];
        read_exact(&mut r, &mut magic)?;
        if &magic != b"NWLDA\0" {
            return Err(Error::Format("not a topic model file".into()));
        }
        let version = read_u32(&mut r)?;
        if version != 1 {
            return Err(Error::Format(format!("unsupported topic model version {version}")));
        }
        let k = read_u32(&mut r)? as usize;
        let v = read_u32(&mut r)? as usize;
        let alpha = read_f64(&mut r)?;
        let beta = read_f64(&mut r)?;
        let vocab = read_vocab(&mut r, v)?;
        let phi = (0..k * v).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
        TopicModel::from_parts(k, alpha, beta, vocab, phi)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = util::create_file(path)?;
        self.write_to(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(std::io::BufReader::new(f))
    }
}

pub(crate) fn write_vocab<W: Write>(w: &mut W, vocab: &Vocabulary) -> std::io::Result<()> {
    for t in vocab.terms() {
        w.write_all(&(t.len() as u32).to_le_bytes())?;
        w.write_all(t.as_bytes())?;
    }
    for id in 0..vocab.len() as u32 {
        w.write_all(&vocab.corpus_freq(id).to_le_bytes())?;
    }
    for id in 0..vocab.len() as u32 {
        w.write_all(&vocab.doc_freq(id).to_le_bytes())?;
    }
    Ok(())
}

pub(crate) fn read_vocab<R: Read>(r: &mut R, v: usize) -> Result<Vocabulary> {
    let mut terms = Vec::with_capacity(v);
    for _ in 0..v {
        let len = read_u32(r)? as usize;
        let mut buf = vec![0u8; len];
        read_exact(r, &mut buf)?;
        terms.push(String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))?);
    }
    let cf = (0..v).map(|_| read_u64(r)).collect::<Result<Vec<_>>>()?;
    let df = (0..v).map(|_| read_u64(r)).collect::<Result<Vec<_>>>()?;
    Vocabulary::from_parts(terms, df, cf)
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf)
        .map_err(|e| Error::Format(format!("truncated model file: {e}")))
}

pub(crate) fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub(crate) fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(f64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textnorm::TokenDoc;
    use crate::topics::vocab::build_vocab;

    fn toy() -> (Vec<BowDoc>, Vocabulary) {
        let docs: Vec<TokenDoc> = ["a b a c", "b b c", "a c c d d"]
            .iter()
            .enumerate()
            .map(|(i, t)| TokenDoc {
                doc_id: i.to_string(),
                tokens: t.split(' ').map(String::from).collect(),
            })
            .collect();
        let vocab = build_vocab(&docs, 1, 0).unwrap();
        (docs.iter().map(|d| vocab.bow(d)).collect(), vocab)
    }

    #[test]
    fn single_topic_is_smoothed_frequency() {
        let (bows, vocab) = toy();
        let mut cfg = LdaConfig::new(1, 3);
        cfg.iterations = 5;
        let m = train_lda(&bows, &vocab, &cfg).unwrap();
        let total: u64 = (0..vocab.len() as u32).map(|i| vocab.corpus_freq(i)).sum();
        let vb = vocab.len() as f64 * cfg.beta;
        for w in 0..vocab.len() {
            let expect = (vocab.corpus_freq(w as u32) as f64 + cfg.beta) / (total as f64 + vb);
            assert!((m.phi_row(0)[w] - expect).abs() < 1e-12);
        }
        let tv = m.infer(&bows[0], &InferConfig::default(), 1);
        assert_eq!(tv.weights, vec![1.0]);
    }

    #[test]
    fn too_many_topics_is_degenerate() {
        let (bows, vocab) = toy();
        let cfg = LdaConfig::new(100, 1);
        assert!(matches!(train_lda(&bows, &vocab, &cfg), Err(Error::Degenerate(_))));
    }

    #[test]
    fn empty_doc_infers_uniform() {
        let (bows, vocab) = toy();
        let mut cfg = LdaConfig::new(4, 1);
        cfg.iterations = 3;
        let m = train_lda(&bows, &vocab, &cfg).unwrap();
        let empty = BowDoc {
            doc_id: "e".into(),
            terms: vec![],
        };
        let tv = m.infer(&empty, &InferConfig::default(), 9);
        assert!(tv.flagged);
        assert_eq!(tv.weights, vec![0.25; 4]);
    }

    #[test]
    fn counts_stay_consistent() {
        let (bows, vocab) = toy();
        let mut s = GibbsSampler::new(bows.iter().map(expand).collect(), vocab.len(), 3, 0.5, 0.01, 4).unwrap();
        for _ in 0..20 {
            s.sweep();
            assert!(s.counts_consistent());
        }
    }

    #[test]
    fn phi_rows_are_simplices() {
        let (bows, vocab) = toy();
        let mut cfg = LdaConfig::new(3, 5);
        cfg.iterations = 50;
        let m = train_lda(&bows, &vocab, &cfg).unwrap();
        for t in 0..3 {
            let row = m.phi_row(t);
            assert!(row.iter().all(|&p| p >= 0.0));
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn binary_round_trip() {
        let (bows, vocab) = toy();
        let mut cfg = LdaConfig::new(2, 5);
        cfg.iterations = 10;
        let m = train_lda(&bows, &vocab, &cfg).unwrap();
        let mut buf = Vec::new();
        m.write_to(&mut buf).unwrap();
        let back = TopicModel::read_from(&buf[..]).unwrap();
        assert_eq!(back.phi, m.phi);
        assert_eq!(back.vocab.terms(), m.vocab.terms());
        assert_eq!(back.alpha, m.alpha);
        assert_eq!(back.vocab.id("c"), m.vocab.id("c"));
        assert!(TopicModel::read_from(&buf[..20]).is_err());
    }
}
