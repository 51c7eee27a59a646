//! Paragraph vectors, distributed-memory variant.
//!
//! Every training example averages the document vector with the word vectors
//! of up to `window` neighbours on each side, and scores the centre word
//! against `negative` noise words drawn from the unigram distribution raised
//! to 0.75. With `h` the averaged context, `o_u` the output vector of word `u`
//! and `σ` the logistic function, the per-example loss is
//!
//! ```text
//! L = -ln σ(o_c · h) - Σ_n ln σ(-o_n · h)
//! ```
//!
//! Training is plain SGD with a learning rate decaying linearly from
//! `initial_lr` at the first step to `final_lr` at the last.
//!
//! # Model file layout
//!
//! Little-endian throughout:
//!
//! ```text
//! magic "NWPV\0\0", version u32 (= 1)
//! config as u32 length + JSON bytes
//! V u32, then the vocabulary (see the topic model layout)
//! N u32, then N doc ids (u32 length + UTF-8)
//! word vectors V·D f64, doc vectors N·D f64, output vectors V·D f64
//! epoch count u32, then per-epoch mean losses f64
//! ```

use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textnorm::TokenDoc;
use crate::topics::{build_vocab, read_f64, read_u32, read_vocab, write_vocab, Vocabulary};
use crate::util::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum TrainMode {
    /// Single-threaded; bit-identical for a fixed seed.
    #[default]
    Deterministic,
    /// Documents are split into one shard per worker, each shard trains
    /// against its own copy of the shared weights, and the copies are averaged
    /// after every epoch. Results depend on the worker count.
    Fast,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParagraphVectorConfig {
    pub vector_size: usize,
    pub window: usize,
    pub min_count: u64,
    pub min_doc_len: usize,
    pub epochs: usize,
    pub negative: usize,
    pub initial_lr: f64,
    pub final_lr: f64,
    pub seed: u64,
    #[serde(default)]
    pub mode: TrainMode,
}

impl Default for ParagraphVectorConfig {
    fn default() -> Self {
        ParagraphVectorConfig {
            vector_size: 300,
            window: 2,
            min_count: 20,
            min_doc_len: 10,
            epochs: 20,
            negative: 5,
            initial_lr: 0.025,
            final_lr: 0.0001,
            seed: 1,
            mode: TrainMode::Deterministic,
        }
    }
}

impl ParagraphVectorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.vector_size == 0 {
            return bad("vector_size must be at least 1");
        }
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if !(self.final_lr > 0.0 && self.final_lr <= self.initial_lr) {
            return bad("learning rates must satisfy 0 < final_lr <= initial_lr");
        }
        Ok(())
    }
}

/// Learning rate at `step` of `total` steps: linear from `initial` to `last`,
/// hitting both end points exactly.
pub fn learning_rate(initial: f64, last: f64, step: u64, total: u64) -> f64 {
    if total <= 1 {
        return last;
    }
    if step + 1 >= total {
        return last;
    }
    initial - (initial - last) * (step as f64 / (total - 1) as f64)
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Negative-sampling loss of one example. `targets` are `(word, label)` with
/// label 1 for the centre word and 0 for noise words. Fills `grad_h` with
/// ∂L/∂h and `gs[j]` with ∂L/∂(o_j · h), so ∂L/∂o_j = gs[j] · h.
fn example_loss(h: &[f64], out: &[f64], dim: usize, targets: &[(u32, f64)], grad_h: &mut [f64], gs: &mut [f64]) -> f64 {
    grad_h.iter_mut().for_each(|g| *g = 0.0);
    let mut loss = 0.0;
    for (j, &(w, label)) in targets.iter().enumerate() {
        let o = &out[w as usize * dim..(w as usize + 1) * dim];
        let x = dot(o, h);
        loss += if label > 0.5 { softplus(-x) } else { softplus(x) };
        let g = sigmoid(x) - label;
        gs[j] = g;
        axpy(g, o, grad_h);
    }
    loss
}

/// Cumulative unigram^0.75 weights for noise sampling.
fn noise_table(vocab: &Vocabulary) -> Vec<f64> {
    let mut acc = 0.0;
    (0..vocab.len() as u32)
        .map(|i| {
            acc += (vocab.corpus_freq(i) as f64).powf(0.75);
            acc
        })
        .collect()
}

fn draw_noise(table: &[f64], rng: &mut Rng) -> u32 {
    let u = rng.random::<f64>() * table[table.len() - 1];
    table.partition_point(|&c| c <= u).min(table.len() - 1) as u32
}

fn init_vector(rng: &mut Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| (rng.random::<f64>() - 0.5) / dim as f64).collect()
}

/// Scratch buffers reused across examples.
struct Scratch {
    h: Vec<f64>,
    grad_h: Vec<f64>,
    gs: Vec<f64>,
    targets: Vec<(u32, f64)>,
    context: Vec<u32>,
}

impl Scratch {
    fn new(dim: usize, negative: usize) -> Self {
        Scratch {
            h: vec![0.0; dim],
            grad_h: vec![0.0; dim],
            gs: vec![0.0; negative + 1],
            targets: Vec::with_capacity(negative + 1),
            context: Vec::new(),
        }
    }
}

/// The shared weights an SGD step reads, and writes unless frozen.
enum Weights<'a> {
    Train { words: &'a mut [f64], out: &'a mut [f64] },
    Frozen { words: &'a [f64], out: &'a [f64] },
}

impl Weights<'_> {
    fn words(&self) -> &[f64] {
        match self {
            Weights::Train { words, .. } => words,
            Weights::Frozen { words, .. } => words,
        }
    }

    fn out(&self) -> &[f64] {
        match self {
            Weights::Train { out, .. } => out,
            Weights::Frozen { out, .. } => out,
        }
    }
}

struct StepParams<'a> {
    dim: usize,
    window: usize,
    negative: usize,
    table: &'a [f64],
}

/// One pass of SGD over a single document. Returns the summed loss and the
/// number of examples.
fn train_document(
    p: &StepParams,
    ids: &[u32],
    doc_vec: &mut [f64],
    w: &mut Weights,
    s: &mut Scratch,
    rng: &mut Rng,
    mut lr: impl FnMut() -> f64,
) -> (f64, u64) {
    let dim = p.dim;
    let mut total = 0.0;
    for (i, &center) in ids.iter().enumerate() {
        let lo = i.saturating_sub(p.window);
        let hi = (i + p.window + 1).min(ids.len());
        s.context.clear();
        s.context.extend(ids[lo..i].iter().chain(&ids[i + 1..hi]));
        let c = (1 + s.context.len()) as f64;
        s.h.copy_from_slice(doc_vec);
        for &cw in &s.context {
            axpy(1.0, &w.words()[cw as usize * dim..(cw as usize + 1) * dim], &mut s.h);
        }
        s.h.iter_mut().for_each(|x| *x /= c);

        s.targets.clear();
        s.targets.push((center, 1.0));
        for _ in 0..p.negative {
            let n = draw_noise(p.table, rng);
            if n != center {
                s.targets.push((n, 0.0));
            }
        }
        total += example_loss(&s.h, w.out(), dim, &s.targets, &mut s.grad_h, &mut s.gs);

        let rate = lr();
        let step = -rate / c;
        axpy(step, &s.grad_h, doc_vec);
        if let Weights::Train { words, out } = w {
            for (j, &(t, _)) in s.targets.iter().enumerate() {
                axpy(-rate * s.gs[j], &s.h, &mut out[t as usize * dim..(t as usize + 1) * dim]);
            }
            for &cw in &s.context {
                axpy(step, &s.grad_h, &mut words[cw as usize * dim..(cw as usize + 1) * dim]);
            }
        }
    }
    (total, ids.len() as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParagraphVectorModel {
    config: ParagraphVectorConfig,
    vocab: Vocabulary,
    doc_ids: Vec<String>,
    words: Vec<f64>,
    docs: Vec<f64>,
    out: Vec<f64>,
    /// Mean per-example loss of each epoch.
    pub epoch_loss: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocVector {
    pub doc_id: String,
    pub vector: Vec<f64>,
    /// Set when the document had no in-vocabulary tokens.
    pub flagged: bool,
}

fn all_finite(xs: &[f64]) -> bool {
    xs.iter().all(|x| x.is_finite())
}

pub fn train_pv(docs: &[TokenDoc], config: &ParagraphVectorConfig) -> Result<ParagraphVectorModel> {
    config.validate()?;
    if docs.is_empty() {
        return Err(Error::Degenerate("empty training corpus".into()));
    }
    let vocab = build_vocab(docs, config.min_count, config.min_doc_len)?;
    let dim = config.vector_size;
    let v = vocab.len();
    let mut rng = util::rng(config.seed);
    let mut words = Vec::with_capacity(v * dim);
    for _ in 0..v {
        words.extend(init_vector(&mut rng, dim));
    }
    let mut doc_vecs = Vec::with_capacity(docs.len() * dim);
    for _ in 0..docs.len() {
        doc_vecs.extend(init_vector(&mut rng, dim));
    }
    let mut out = vec![0.0; v * dim];
    let encoded: Vec<Vec<u32>> = docs.iter().map(|d| vocab.encode(&d.tokens)).collect();
    let table = noise_table(&vocab);
    let params = StepParams {
        dim,
        window: config.window,
        negative: config.negative,
        table: &table,
    };
    let per_epoch: u64 = encoded.iter().map(|d| d.len() as u64).sum();
    if per_epoch == 0 {
        return Err(Error::EmptyVocabulary);
    }
    let total_steps = per_epoch * config.epochs as u64;
    let mut order: Vec<usize> = (0..docs.len()).collect();
    let mut epoch_loss = Vec::with_capacity(config.epochs);

    match config.mode {
        TrainMode::Deterministic => {
            let mut scratch = Scratch::new(dim, config.negative);
            let mut step = 0u64;
            for epoch in 0..config.epochs {
                order.shuffle(&mut rng);
                let (mut loss, mut n) = (0.0, 0u64);
                let mut weights = Weights::Train {
                    words: &mut words,
                    out: &mut out,
                };
                for &d in &order {
                    let dv = &mut doc_vecs[d * dim..(d + 1) * dim];
                    let (l, c) = train_document(&params, &encoded[d], dv, &mut weights, &mut scratch, &mut rng, || {
                        let r = learning_rate(config.initial_lr, config.final_lr, step, total_steps);
                        step += 1;
                        r
                    });
                    loss += l;
                    n += c;
                }
                epoch_loss.push(loss / n as f64);
                check_epoch(epoch, &words, &doc_vecs, &out)?;
                log::debug!("epoch {}: mean loss {:.5}", epoch + 1, loss / n as f64);
            }
        }
        TrainMode::Fast => {
            let shards = rayon::current_num_threads().max(1);
            for epoch in 0..config.epochs {
                order.shuffle(&mut rng);
                let epoch_seed = rng.random::<u64>();
                let start = per_epoch * epoch as u64;
                let chunk = order.len().div_ceil(shards);
                let mut doc_slices: Vec<(usize, Vec<f64>)> = order
                    .iter()
                    .map(|&d| (d, doc_vecs[d * dim..(d + 1) * dim].to_vec()))
                    .collect();
                let results: Vec<(Vec<f64>, Vec<f64>, f64, u64)> = doc_slices
                    .par_chunks_mut(chunk)
                    .enumerate()
                    .map(|(s, part)| {
                        let mut local_words = words.clone();
                        let mut local_out = out.clone();
                        let mut rng = util::rng(util::derive_seed(epoch_seed, &[s as u64]));
                        let mut scratch = Scratch::new(dim, config.negative);
                        let mut weights = Weights::Train {
                            words: &mut local_words,
                            out: &mut local_out,
                        };
                        let shard_len: u64 = part.iter().map(|(d, _)| encoded[*d].len() as u64).sum();
                        // each shard walks the epoch's share of the schedule
                        let mut step = start;
                        let stride = shard_len.max(1);
                        let (mut loss, mut n) = (0.0, 0u64);
                        for (d, dv) in part.iter_mut() {
                            let (l, c) = train_document(&params, &encoded[*d], dv, &mut weights, &mut scratch, &mut rng, || {
                                let local = start + (step - start) * per_epoch / stride;
                                step += 1;
                                learning_rate(config.initial_lr, config.final_lr, local, total_steps)
                            });
                            loss += l;
                            n += c;
                        }
                        (local_words, local_out, loss, n)
                    })
                    .collect();
                let k = results.len() as f64;
                words.iter_mut().for_each(|x| *x = 0.0);
                out.iter_mut().for_each(|x| *x = 0.0);
                let (mut loss, mut n) = (0.0, 0u64);
                for (lw, lo, l, c) in &results {
                    axpy(1.0 / k, lw, &mut words);
                    axpy(1.0 / k, lo, &mut out);
                    loss += l;
                    n += c;
                }
                for (d, dv) in doc_slices {
                    doc_vecs[d * dim..(d + 1) * dim].copy_from_slice(&dv);
                }
                epoch_loss.push(loss / n as f64);
                check_epoch(epoch, &words, &doc_vecs, &out)?;
            }
        }
    }

    Ok(ParagraphVectorModel {
        config: *config,
        vocab,
        doc_ids: docs.iter().map(|d| d.doc_id.clone()).collect(),
        words,
        docs: doc_vecs,
        out,
        epoch_loss,
    })
}

fn check_epoch(epoch: usize, words: &[f64], docs: &[f64], out: &[f64]) -> Result<()> {
    if all_finite(words) && all_finite(docs) && all_finite(out) {
        Ok(())
    } else {
        Err(Error::Degenerate(format!(
            "non-finite parameters after epoch {}",
            epoch + 1
        )))
    }
}

impl ParagraphVectorModel {
    pub fn config(&self) -> &ParagraphVectorConfig {
        &self.config
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.config.vector_size
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    /// Trained vector of training document `i`.
    pub fn doc_vector(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.docs[i * d..(i + 1) * d]
    }

    pub fn word_vector(&self, id: u32) -> &[f64] {
        let d = self.dim();
        &self.words[id as usize * d..(id as usize + 1) * d]
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.words) && all_finite(&self.docs) && all_finite(&self.out)
    }

    /// Fit a fresh document vector for `tokens` with word and output vectors
    /// frozen. `epochs` of `None` uses the training epoch count.
    pub fn infer_vector(&self, doc_id: &str, tokens: &[String], epochs: Option<usize>, seed: u64) -> DocVector {
        let dim = self.dim();
        let ids = self.vocab.encode(tokens);
        if ids.is_empty() {
            return DocVector {
                doc_id: doc_id.to_string(),
                vector: vec![0.0; dim],
                flagged: true,
            };
        }
        let epochs = epochs.unwrap_or(self.config.epochs).max(1);
        let mut rng = util::rng(seed);
        let mut vector = init_vector(&mut rng, dim);
        let table = noise_table(&self.vocab);
        let params = StepParams {
            dim,
            window: self.config.window,
            negative: self.config.negative,
            table: &table,
        };
        let mut weights = Weights::Frozen {
            words: &self.words,
            out: &self.out,
        };
        let mut scratch = Scratch::new(dim, self.config.negative);
        let total = ids.len() as u64 * epochs as u64;
        let mut step = 0u64;
        for _ in 0..epochs {
            train_document(&params, &ids, &mut vector, &mut weights, &mut scratch, &mut rng, || {
                let r = learning_rate(self.config.initial_lr, self.config.final_lr, step, total);
                step += 1;
                r
            });
        }
        DocVector {
            doc_id: doc_id.to_string(),
            vector,
            flagged: false,
        }
    }

    /// Infer every document in parallel with per-document derived seeds.
    pub fn infer_all(&self, docs: &[TokenDoc], epochs: Option<usize>, seed: u64) -> Vec<DocVector> {
        docs.par_iter()
            .enumerate()
            .map(|(i, d)| self.infer_vector(&d.doc_id, &d.tokens, epochs, util::derive_seed(seed, &[i as u64])))
            .collect()
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(b"NWPV\0\0")?;
        w.write_all(&1u32.to_le_bytes())?;
        let cfg = serde_json::to_vec(&self.config).map_err(std::io::Error::other)?;
        w.write_all(&(cfg.len() as u32).to_le_bytes())?;
        w.write_all(&cfg)?;
        w.write_all(&(self.vocab.len() as u32).to_le_bytes())?;
        write_vocab(&mut w, &self.vocab)?;
        w.write_all(&(self.doc_ids.len() as u32).to_le_bytes())?;
        for id in &self.doc_ids {
            w.write_all(&(id.len() as u32).to_le_bytes())?;
            w.write_all(id.as_bytes())?;
        }
        for x in self.words.iter().chain(&self.docs).chain(&self.out) {
            w.write_all(&x.to_le_bytes())?;
        }
        w.write_all(&(self.epoch_loss.len() as u32).to_le_bytes())?;
        for x in &self.epoch_loss {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 6];
        r.read_exact(&mut magic)
            .map_err(|e| Error::Format(format!("truncated model file: {e}")))?;
        if &magic != b"NWPV\0\0" {
            return Err(Error::Format("not a paragraph-vector model file".into()));
        }
        let version = read_u32(&mut r)?;
        if version != 1 {
            return Err(Error::Format(format!("unsupported paragraph-vector version {version}")));
        }
        let cfg_len = read_u32(&mut r)? as usize;
        let cfg_bytes = read_bytes(&mut r, cfg_len)?;
        let config: ParagraphVectorConfig = serde_json::from_slice(&cfg_bytes)?;
        config.validate()?;
        let v = read_u32(&mut r)? as usize;
        let vocab = read_vocab(&mut r, v)?;
        let n = read_u32(&mut r)? as usize;
        let mut doc_ids = Vec::with_capacity(n);
        for _ in 0..n {
            let len = read_u32(&mut r)? as usize;
            doc_ids.push(String::from_utf8(read_bytes(&mut r, len)?).map_err(|e| Error::Format(e.to_string()))?);
        }
        let dim = config.vector_size;
        let mut floats = |count: usize| (0..count).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>();
        let words = floats(v * dim)?;
        let docs = floats(n * dim)?;
        let out = floats(v * dim)?;
        let epochs = read_u32(&mut r)? as usize;
        let epoch_loss = (0..epochs).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
        Ok(ParagraphVectorModel {
            config,
            vocab,
            doc_ids,
            words,
            docs,
            out,
            epoch_loss,
        })
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

fn read_bytes<R: Read>(r: &mut R, len: usize) -> Result<Vec<u8>> {
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated model file: {e}")))?;
    Ok(buf)
}

/// Which block a checked parameter belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ParamKind {
    Word,
    Doc,
    Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamCheck {
    pub kind: ParamKind,
    pub row: usize,
    pub col: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradientReport {
    pub checked: Vec<ParamCheck>,
    pub max_rel_error: f64,
    pub tolerance: f64,
    /// Checks whose relative error exceeded the tolerance.
    pub offending: Vec<ParamCheck>,
}

impl GradientReport {
    pub fn passed(&self) -> bool {
        self.offending.is_empty()
    }
}

/// Parameters and examples of a tiny model for gradient checking. Examples
/// are `(doc, context words, targets)`.
pub struct TinyProblem {
    pub dim: usize,
    pub words: Vec<f64>,
    pub docs: Vec<f64>,
    pub out: Vec<f64>,
    pub examples: Vec<(usize, Vec<u32>, Vec<(u32, f64)>)>,
}

impl TinyProblem {
    pub fn random(vocab: usize, dim: usize, n_docs: usize, n_examples: usize, negative: usize, seed: u64) -> Self {
        let mut rng = util::rng(seed);
        let mut fill = |n: usize| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
        let words = fill(vocab * dim);
        let docs = fill(n_docs * dim);
        let out = fill(vocab * dim);
        let mut rng = util::rng(seed ^ 0x5eed);
        let examples = (0..n_examples)
            .map(|_| {
                let doc = rng.random_range(0..n_docs);
                let ctx = (0..rng.random_range(0..=4)).map(|_| rng.random_range(0..vocab as u32)).collect();
                let center = rng.random_range(0..vocab as u32);
                let mut targets = vec![(center, 1.0)];
                targets.extend((0..negative).map(|_| (rng.random_range(0..vocab as u32), 0.0)));
                (doc, ctx, targets)
            })
            .collect();
        TinyProblem {
            dim,
            words,
            docs,
            out,
            examples,
        }
    }

    fn block(&self, kind: ParamKind) -> &[f64] {
        match kind {
            ParamKind::Word => &self.words,
            ParamKind::Doc => &self.docs,
            ParamKind::Output => &self.out,
        }
    }

    fn block_mut(&mut self, kind: ParamKind) -> &mut Vec<f64> {
        match kind {
            ParamKind::Word => &mut self.words,
            ParamKind::Doc => &mut self.docs,
            ParamKind::Output => &mut self.out,
        }
    }

    fn context_mean(&self, doc: usize, ctx: &[u32]) -> Vec<f64> {
        let d = self.dim;
        let mut h = self.docs[doc * d..(doc + 1) * d].to_vec();
        for &w in ctx {
            axpy(1.0, &self.words[w as usize * d..(w as usize + 1) * d], &mut h);
        }
        let c = (1 + ctx.len()) as f64;
        h.iter_mut().for_each(|x| *x /= c);
        h
    }

    /// Summed loss over all examples, with analytic gradients for every
    /// parameter block (words, docs, outputs).
    pub fn loss_and_gradients(&self) -> (f64, Vec<f64>, Vec<f64>, Vec<f64>) {
        let d = self.dim;
        let mut gw = vec![0.0; self.words.len()];
        let mut gd = vec![0.0; self.docs.len()];
        let mut go = vec![0.0; self.out.len()];
        let mut grad_h = vec![0.0; d];
        let mut total = 0.0;
        for (doc, ctx, targets) in &self.examples {
            let h = self.context_mean(*doc, ctx);
            let mut gs = vec![0.0; targets.len()];
            total += example_loss(&h, &self.out, d, targets, &mut grad_h, &mut gs);
            for (j, &(t, _)) in targets.iter().enumerate() {
                axpy(gs[j], &h, &mut go[t as usize * d..(t as usize + 1) * d]);
            }
            let c = (1 + ctx.len()) as f64;
            axpy(1.0 / c, &grad_h, &mut gd[doc * d..(doc + 1) * d]);
            for &w in ctx {
                axpy(1.0 / c, &grad_h, &mut gw[w as usize * d..(w as usize + 1) * d]);
            }
        }
        (total, gw, gd, go)
    }

    pub fn loss(&self) -> f64 {
        self.loss_and_gradients().0
    }
}

/// Compare analytic gradients with central finite differences on `samples`
/// parameters that at least one example touches.
pub fn gradient_check_problem(problem: &mut TinyProblem, samples: usize, seed: u64, tolerance: f64) -> GradientReport {
    let (_, gw, gd, go) = problem.loss_and_gradients();
    let d = problem.dim;
    let mut touched: Vec<(ParamKind, usize)> = Vec::new();
    for (doc, ctx, targets) in &problem.examples {
        touched.push((ParamKind::Doc, *doc));
        touched.extend(ctx.iter().map(|&w| (ParamKind::Word, w as usize)));
        touched.extend(targets.iter().map(|&(t, _)| (ParamKind::Output, t as usize)));
    }
    touched.sort_by_key(|&(k, r)| (k as u8, r));
    touched.dedup();
    let mut rng = util::rng(seed);
    let eps = 1e-5;
    let mut checked = Vec::with_capacity(samples);
    for _ in 0..samples {
        let (kind, row) = touched[rng.random_range(0..touched.len())];
        let col = rng.random_range(0..d);
        let idx = row * d + col;
        let analytic = match kind {
            ParamKind::Word => gw[idx],
            ParamKind::Doc => gd[idx],
            ParamKind::Output => go[idx],
        };
        let orig = problem.block(kind)[idx];
        problem.block_mut(kind)[idx] = orig + eps;
        let up = problem.loss();
        problem.block_mut(kind)[idx] = orig - eps;
        let down = problem.loss();
        problem.block_mut(kind)[idx] = orig;
        let numeric = (up - down) / (2.0 * eps);
        let rel_error = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
        checked.push(ParamCheck {
            kind,
            row,
            col,
            analytic,
            numeric,
            rel_error,
        });
    }
    let max_rel_error = checked.iter().map(|c| c.rel_error).fold(0.0, f64::max);
    let offending = checked.iter().copied().filter(|c| !(c.rel_error < tolerance)).collect();
    GradientReport {
        checked,
        max_rel_error,
        tolerance,
        offending,
    }
}

/// Gradient check on a random tiny model (V = 10, D = 4) using the
/// configured negative-sample count: 100 parameters, tolerance 1e-4.
pub fn gradient_check(config: &ParagraphVectorConfig) -> GradientReport {
    let mut problem = TinyProblem::random(10, 4, 3, 12, config.negative, config.seed);
    gradient_check_problem(&mut problem, 100, util::derive_seed(config.seed, &[1]), 1e-4)
}
