//! Seeded synthetic corpus in the ingestion schema.
//!
//! Period notes are drawn from an LDA generative process over gibberish
//! Dutch-like lemmas, one disjoint lemma block per topic. For positive
//! periods the topic mixture is pulled toward topic 0:
//! `θ = (1 − a)·θ + a·e_0` with `a` the association strength. Ages and note
//! lengths are drawn per class; every other structured variable is
//! independent of the label.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Gamma, LogNormal, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    AdmissionPeriod, CorpusPaths, IncidentRecord, NoteRecord, PeriodRecord, RawCorpus, StructuredRow, ADMISSIONS_FILE,
    INCIDENTS_FILE, NOTES_FILE, STRUCTURED_FILE,
};
use crate::error::{Error, Result};
use crate::textnorm::{stem, TokenDoc, DUTCH_STOPWORDS};
use crate::util::{self, Rng};

pub const FULL_PATIENTS: usize = 2892;
pub const FULL_PERIODS: usize = 4280;
pub const DEFAULT_SCALE: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassDistribution {
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_patients: usize,
    pub n_periods: usize,
    pub positive_fraction: f64,
    /// Total number of lemmas, split evenly over the topics.
    pub vocab_size: usize,
    pub n_true_topics: usize,
    /// Strength in `[0, 1]` of the pull toward the outcome topic.
    pub association: f64,
    /// Symmetric Dirichlet concentration of per-period topic mixtures.
    pub doc_alpha: f64,
    pub age_positive: ClassDistribution,
    pub age_negative: ClassDistribution,
    /// Period word counts are log-normal with this median and log-sd.
    pub words_positive: ClassDistribution,
    pub words_negative: ClassDistribution,
    pub stopword_rate: f64,
    pub inflection_rate: f64,
    pub noise_rate: f64,
    pub seed: u64,
}

impl SynthConfig {
    pub fn scaled(scale: f64, seed: u64) -> Self {
        let scale = if scale > 0.0 { scale } else { DEFAULT_SCALE };
        SynthConfig {
            n_patients: ((FULL_PATIENTS as f64 * scale).round() as usize).max(1),
            n_periods: ((FULL_PERIODS as f64 * scale).round() as usize).max(1),
            positive_fraction: 0.0993,
            vocab_size: 2000,
            n_true_topics: 10,
            association: 0.35,
            doc_alpha: 0.3,
            age_positive: ClassDistribution { mean: 35.0, sd: 11.0 },
            age_negative: ClassDistribution { mean: 44.0, sd: 15.0 },
            words_positive: ClassDistribution { mean: 520.0, sd: 0.45 },
            words_negative: ClassDistribution { mean: 400.0, sd: 0.45 },
            stopword_rate: 0.25,
            inflection_rate: 0.4,
            noise_rate: 0.05,
            seed,
        }
    }

    /// No label signal anywhere: association 0 and identical per-class age
    /// and note-length distributions.
    pub fn null(scale: f64, seed: u64) -> Self {
        let mut c = Self::scaled(scale, seed);
        c.association = 0.0;
        c.age_positive = c.age_negative;
        c.words_positive = c.words_negative;
        c
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.positive_fraction > 0.0 && self.positive_fraction < 1.0) {
            return bad(format!("positive_fraction {} outside (0, 1)", self.positive_fraction));
        }
        if !(0.0..=1.0).contains(&self.association) {
            return bad(format!("association {} outside [0, 1]", self.association));
        }
        if self.n_patients == 0 || self.n_periods < self.n_patients {
            return bad(format!(
                "need at least one period per patient ({} patients, {} periods)",
                self.n_patients, self.n_periods
            ));
        }
        if self.n_true_topics == 0 {
            return bad("n_true_topics must be at least 1".into());
        }
        if self.vocab_size < self.n_true_topics * MIN_LEMMAS_PER_TOPIC {
            return bad(format!(
                "vocabulary of {} lemmas is too small for {} topics (need {} per topic)",
                self.vocab_size, self.n_true_topics, MIN_LEMMAS_PER_TOPIC
            ));
        }
        if self.vocab_size > 20_000 {
            return bad("vocab_size above 20000 is not supported".into());
        }
        if !(self.doc_alpha > 0.0) {
            return bad("doc_alpha must be positive".into());
        }
        for (name, d) in [
            ("age_positive", self.age_positive),
            ("age_negative", self.age_negative),
            ("words_positive", self.words_positive),
            ("words_negative", self.words_negative),
        ] {
            if !(d.mean > 0.0 && d.sd >= 0.0 && d.mean.is_finite() && d.sd.is_finite()) {
                return bad(format!("{name} needs a positive mean and non-negative sd"));
            }
        }
        for (name, r) in [
            ("stopword_rate", self.stopword_rate),
            ("inflection_rate", self.inflection_rate),
            ("noise_rate", self.noise_rate),
        ] {
            if !(0.0..1.0).contains(&r) {
                return bad(format!("{name} {r} outside [0, 1)"));
            }
        }
        Ok(())
    }
}

const MIN_LEMMAS_PER_TOPIC: usize = 10;
const ONSETS: [&str; 22] = [
    "b", "d", "f", "g", "h", "k", "l", "m", "n", "p", "r", "s", "t", "v", "w", "z", "br", "kr", "tr", "gr", "pl", "sl",
];
const VOWELS: [&str; 9] = ["a", "e", "i", "o", "u", "oe", "ui", "ie", "ou"];
const CODAS: [&str; 9] = ["k", "t", "p", "l", "m", "n", "r", "f", "x"];

fn stopword_list() -> Vec<&'static str> {
    DUTCH_STOPWORDS
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect()
}

/// Distinct lemmas whose bare, "-en" and "-s" forms all stem to one stem
/// that no other lemma or stopword shares.
pub fn generate_lemmas(n: usize, seed: u64) -> Vec<String> {
    let mut rng = util::rng(seed);
    let stop: HashSet<String> = stopword_list().iter().map(|s| s.to_string()).collect();
    let mut stems: HashSet<String> = HashSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let syllables = rng.random_range(1..=2);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push_str(ONSETS[rng.random_range(0..ONSETS.len())]);
            w.push_str(VOWELS[rng.random_range(0..VOWELS.len())]);
        }
        w.push_str(CODAS[rng.random_range(0..CODAS.len())]);
        if w.len() < 4 || stop.contains(&w) {
            continue;
        }
        let s = stem(&w);
        if stem(&format!("{w}en")) != s || stem(&format!("{w}s")) != s || stop.contains(&s) || !stems.insert(s) {
            continue;
        }
        out.push(w);
    }
    out
}

/// Ground truth kept for evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodTruth {
    pub period_id: String,
    pub patient_id: String,
    pub label: bool,
    pub theta: Vec<f64>,
    pub target_words: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub notes: Vec<NoteRecord>,
    pub admissions: Vec<AdmissionPeriod>,
    pub incidents: Vec<IncidentRecord>,
    pub structured: Vec<StructuredRow>,
    pub truth: Vec<PeriodTruth>,
    /// Lemmas of each planted topic, most probable first.
    pub topic_lemmas: Vec<Vec<String>>,
}

impl SynthCorpus {
    /// The corpus as ingestion would return it, without a round trip
    /// through files.
    pub fn to_raw(&self) -> RawCorpus {
        RawCorpus {
            notes: self.notes.clone(),
            admissions: self.admissions.clone(),
            incidents: self.incidents.clone(),
            structured: self.structured.clone(),
            warnings: Default::default(),
        }
    }
}

/// Zipf weights `1/(r+1)` over a block, normalized into a cumulative table.
fn zipf_cumulative(n: usize) -> Vec<f64> {
    let total: f64 = (0..n).map(|r| 1.0 / (r + 1) as f64).sum();
    let mut acc = 0.0;
    (0..n)
        .map(|r| {
            acc += 1.0 / (r + 1) as f64 / total;
            acc
        })
        .collect()
}

fn draw_cumulative(cum: &[f64], rng: &mut Rng) -> usize {
    let u = rng.random::<f64>() * cum[cum.len() - 1];
    cum.partition_point(|&c| c <= u).min(cum.len() - 1)
}

fn dirichlet(alpha: f64, k: usize, rng: &mut Rng) -> Vec<f64> {
    let g = Gamma::new(alpha, 1.0).unwrap();
    let mut v: Vec<f64> = (0..k).map(|_| g.sample(rng)).collect();
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    } else {
        v = vec![1.0 / k as f64; k];
    }
    v
}

const DIACRITICS: [(char, char); 5] = [('a', 'á'), ('e', 'ë'), ('i', 'ï'), ('o', 'ö'), ('u', 'ü')];

fn surface_form(lemma: &str, cfg: &SynthConfig, rng: &mut Rng) -> String {
    let mut w = if rng.random::<f64>() < cfg.inflection_rate {
        if rng.random::<bool>() {
            format!("{lemma}en")
        } else {
            format!("{lemma}s")
        }
    } else {
        lemma.to_string()
    };
    if rng.random::<f64>() < cfg.noise_rate {
        match rng.random_range(0..3) {
            0 => {
                let mut c = w.chars();
                w = c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or(w);
            }
            1 => {
                let (plain, accented) = DIACRITICS[rng.random_range(0..DIACRITICS.len())];
                if let Some(pos) = w.find(plain) {
                    w.replace_range(pos..pos + 1, &accented.to_string());
                }
            }
            _ => w.push([',', '.', ';', ':'][rng.random_range(0..4)]),
        }
    }
    w
}

fn base_time() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2015, 1, 1, 0, 0, 0).unwrap()
}

struct PeriodPlan {
    index: usize,
    patient: usize,
    start: DateTime<Utc>,
    label: bool,
}

struct PeriodOutput {
    notes: Vec<NoteRecord>,
    incidents: Vec<IncidentRecord>,
    structured: StructuredRow,
    truth: PeriodTruth,
}

fn patient_id(p: usize) -> String {
    format!("P{p:05}")
}

fn period_id(i: usize) -> String {
    format!("A{i:05}")
}

fn generate_period(
    plan: &PeriodPlan,
    cfg: &SynthConfig,
    lemmas: &[Vec<String>],
    zipf: &[f64],
    stopwords: &[&str],
) -> PeriodOutput {
    let mut rng = util::rng(util::derive_seed(cfg.seed, &[1, plan.index as u64]));
    let k = cfg.n_true_topics;
    let mut theta = dirichlet(cfg.doc_alpha, k, &mut rng);
    if plan.label && cfg.association > 0.0 {
        for (t, v) in theta.iter_mut().enumerate() {
            *v = (1.0 - cfg.association) * *v + if t == 0 { cfg.association } else { 0.0 };
        }
    }
    let mut cum = theta.clone();
    for t in 1..k {
        cum[t] += cum[t - 1];
    }
    let words_dist = if plan.label { cfg.words_positive } else { cfg.words_negative };
    let target = LogNormal::new(words_dist.mean.ln(), words_dist.sd)
        .unwrap()
        .sample(&mut rng)
        .round()
        .clamp(20.0, 20_000.0) as usize;
    let n_notes = rng.random_range(1..=6usize).min(target / 15).max(1);
    let words: Vec<String> = (0..target)
        .map(|_| {
            if rng.random::<f64>() < cfg.stopword_rate {
                stopwords[rng.random_range(0..stopwords.len())].to_string()
            } else {
                let t = draw_cumulative(&cum, &mut rng);
                let lemma = &lemmas[t][draw_cumulative(zipf, &mut rng)];
                surface_form(lemma, cfg, &mut rng)
            }
        })
        .collect();

    let window_start = plan.start - Duration::days(crate::corpus::NOTE_LOOKBACK_DAYS);
    let window_secs = (crate::corpus::NOTE_LOOKBACK_DAYS + crate::corpus::NOTE_LOOKAHEAD_DAYS) * 86_400;
    let mut cuts: Vec<usize> = (0..n_notes - 1).map(|_| rng.random_range(1..target)).collect();
    cuts.sort_unstable();
    cuts.dedup();
    let mut bounds = vec![0];
    bounds.extend(cuts);
    bounds.push(target);
    let mut stamps: Vec<i64> = (0..bounds.len() - 1).map(|_| rng.random_range(0..=window_secs)).collect();
    stamps.sort_unstable();
    let notes = bounds
        .windows(2)
        .zip(&stamps)
        .enumerate()
        .map(|(j, (b, &s))| NoteRecord {
            note_id: format!("{}-N{j}", period_id(plan.index)),
            patient_id: patient_id(plan.patient),
            timestamp: window_start + Duration::seconds(s),
            text: words[b[0]..b[1]].join(" "),
        })
        .collect();

    let mut incidents = Vec::new();
    if plan.label {
        let s = rng.random_range(1..=(crate::corpus::OUTCOME_HORIZON_DAYS - 1) * 86_400);
        incidents.push(IncidentRecord {
            patient_id: patient_id(plan.patient),
            timestamp: plan.start + Duration::days(1) + Duration::seconds(s),
        });
    } else if rng.random::<f64>() < 0.05 {
        // outside every outcome window: after this one, before the next
        // admission (starts are at least 90 days apart)
        incidents.push(IncidentRecord {
            patient_id: patient_id(plan.patient),
            timestamp: plan.start + Duration::days(rng.random_range(35..=60)),
        });
    }

    let age_dist = if plan.label { cfg.age_positive } else { cfg.age_negative };
    let age = Normal::new(age_dist.mean, age_dist.sd)
        .unwrap()
        .sample(&mut rng)
        .clamp(18.0, 90.0);
    let prescribed = rng.random_range(0..=12u32);
    let structured = StructuredRow {
        period_id: period_id(plan.index),
        age_admission: (age * 10.0).round() / 10.0,
        gender: if rng.random::<f64>() < 0.62 { "M" } else { "F" }.to_string(),
        n_meds_prescribed: prescribed,
        n_meds_administered: rng.random_range(0..=prescribed),
        has_diagnosis: rng.random::<f64>() < 0.7,
    };
    PeriodOutput {
        notes,
        incidents,
        structured,
        truth: PeriodTruth {
            period_id: period_id(plan.index),
            patient_id: patient_id(plan.patient),
            label: plan.label,
            theta,
            target_words: target,
        },
    }
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthCorpus> {
    cfg.validate()?;
    let k = cfg.n_true_topics;
    let per_topic = cfg.vocab_size / k;
    let all = generate_lemmas(per_topic * k, util::derive_seed(cfg.seed, &[0]));
    let lemmas: Vec<Vec<String>> = all.chunks(per_topic).map(<[String]>::to_vec).collect();
    let zipf = zipf_cumulative(per_topic);
    let stopwords = stopword_list();

    let mut rng = util::rng(util::derive_seed(cfg.seed, &[2]));
    // every patient gets one period, the rest are spread at random
    let mut periods_of = vec![1usize; cfg.n_patients];
    for _ in cfg.n_patients..cfg.n_periods {
        periods_of[rng.random_range(0..cfg.n_patients)] += 1;
    }
    let n_pos = (cfg.n_periods as f64 * cfg.positive_fraction).round() as usize;
    let mut labels = vec![false; cfg.n_periods];
    labels[..n_pos].iter_mut().for_each(|l| *l = true);
    labels.shuffle(&mut rng);

    let mut plans = Vec::with_capacity(cfg.n_periods);
    for (p, &count) in periods_of.iter().enumerate() {
        let mut start = base_time()
            + Duration::days(rng.random_range(0..5 * 365))
            + Duration::hours(rng.random_range(0..24))
            + Duration::minutes(rng.random_range(0..60));
        for _ in 0..count {
            let index = plans.len();
            plans.push(PeriodPlan {
                index,
                patient: p,
                start,
                label: labels[index],
            });
            start = start + Duration::days(rng.random_range(90..=400)) + Duration::hours(rng.random_range(0..24));
        }
    }

    let outputs: Vec<PeriodOutput> = plans
        .par_iter()
        .map(|plan| generate_period(plan, cfg, &lemmas, &zipf, &stopwords))
        .collect();

    let admissions = plans
        .iter()
        .map(|p| AdmissionPeriod {
            period_id: period_id(p.index),
            patient_id: patient_id(p.patient),
            start: p.start,
            end: None,
            sub_department: ["acute", "intensive", "closed"][p.index % 3].to_string(),
        })
        .collect();
    let mut corpus = SynthCorpus {
        notes: Vec::new(),
        admissions,
        incidents: Vec::new(),
        structured: Vec::new(),
        truth: Vec::new(),
        topic_lemmas: lemmas,
    };
    for o in outputs {
        corpus.notes.extend(o.notes);
        corpus.incidents.extend(o.incidents);
        corpus.structured.push(o.structured);
        corpus.truth.push(o.truth);
    }
    corpus
        .incidents
        .sort_by(|a, b| (&a.patient_id, a.timestamp).cmp(&(&b.patient_id, b.timestamp)));
    Ok(corpus)
}

/// Write the four corpus files into `dir`.
pub fn write(corpus: &SynthCorpus, dir: &Path) -> Result<CorpusPaths> {
    let paths = CorpusPaths::in_dir(dir);
    util::write_jsonl(&dir.join(NOTES_FILE), &corpus.notes)?;
    util::write_jsonl(&dir.join(ADMISSIONS_FILE), &corpus.admissions)?;
    util::write_jsonl(&dir.join(INCIDENTS_FILE), &corpus.incidents)?;
    util::write_jsonl(&dir.join(STRUCTURED_FILE), &corpus.structured)?;
    Ok(paths)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// Bin edges; bin `i` is `[edges[i], edges[i+1])`, the last bin closed.
    pub edges: Vec<f64>,
    pub positive: Vec<usize>,
    pub negative: Vec<usize>,
}

impl Histogram {
    pub fn new(edges: Vec<f64>) -> Self {
        let bins = edges.len().saturating_sub(1);
        Histogram {
            edges,
            positive: vec![0; bins],
            negative: vec![0; bins],
        }
    }

    /// Values outside the edges are clamped into the end bins.
    pub fn add(&mut self, value: f64, positive: bool) {
        let bins = self.positive.len();
        if bins == 0 {
            return;
        }
        let b = self.edges[1..bins].partition_point(|&e| e <= value);
        if positive {
            self.positive[b] += 1;
        } else {
            self.negative[b] += 1;
        }
    }

    pub const CSV_HEADER: &'static str = "bin_start,bin_end,positive,negative";

    pub fn to_csv(&self) -> String {
        let mut s = format!("{}\n", Self::CSV_HEADER);
        for i in 0..self.positive.len() {
            s.push_str(&format!(
                "{},{},{},{}\n",
                self.edges[i],
                self.edges[i + 1],
                self.positive[i],
                self.negative[i]
            ));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_patients: usize,
    pub n_periods: usize,
    pub n_positive: usize,
    pub prevalence: f64,
    pub mean_age_positive: f64,
    pub mean_age_negative: f64,
    pub mean_words_positive: f64,
    pub mean_words_negative: f64,
    pub age_histogram: Histogram,
    pub words_histogram: Histogram,
}

fn mean_or_zero(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        util::mean(v)
    }
}

/// Prevalence, per-class age and note-length summaries and histograms.
pub fn describe(records: &[PeriodRecord]) -> DatasetStats {
    let patients: HashSet<&str> = records.iter().map(|r| r.patient_id.as_str()).collect();
    let mut age_h = Histogram::new((0..=16).map(|i| 10.0 + 5.0 * i as f64).collect());
    let mut words_h = Histogram::new((0..=20).map(|i| 100.0 * i as f64).collect());
    let mut by_class: BTreeMap<bool, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in records {
        age_h.add(r.structured.age_admission, r.label);
        words_h.add(r.word_count as f64, r.label);
        let e = by_class.entry(r.label).or_default();
        e.0.push(r.structured.age_admission);
        e.1.push(r.word_count as f64);
    }
    let empty = (Vec::new(), Vec::new());
    let pos = by_class.get(&true).unwrap_or(&empty);
    let neg = by_class.get(&false).unwrap_or(&empty);
    let n_positive = pos.0.len();
    DatasetStats {
        n_patients: patients.len(),
        n_periods: records.len(),
        n_positive,
        prevalence: if records.is_empty() { 0.0 } else { n_positive as f64 / records.len() as f64 },
        mean_age_positive: mean_or_zero(&pos.0),
        mean_age_negative: mean_or_zero(&neg.0),
        mean_words_positive: mean_or_zero(&pos.1),
        mean_words_negative: mean_or_zero(&neg.1),
        age_histogram: age_h,
        words_histogram: words_h,
    }
}

/// Small planted-topic corpus: `n_topics` disjoint vocabularies, each
/// document drawn from a single topic.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedCorpus {
    pub docs: Vec<TokenDoc>,
    /// Topic of each document.
    pub doc_topic: Vec<usize>,
    /// Term → probability for each planted topic.
    pub phi: Vec<BTreeMap<String, f64>>,
}

pub fn planted_topic_corpus(n_docs: usize, n_topics: usize, terms_per_topic: usize, doc_len: usize, seed: u64) -> PlantedCorpus {
    let mut rng = util::rng(seed);
    let zipf = zipf_cumulative(terms_per_topic);
    let mut prev = 0.0;
    let probs: Vec<f64> = zipf
        .iter()
        .map(|&c| {
            let p = c - prev;
            prev = c;
            p
        })
        .collect();
    let term = |t: usize, j: usize| format!("t{t}w{j}");
    let phi = (0..n_topics)
        .map(|t| (0..terms_per_topic).map(|j| (term(t, j), probs[j])).collect())
        .collect();
    let mut doc_topic = Vec::with_capacity(n_docs);
    let docs = (0..n_docs)
        .map(|d| {
            let t = d % n_topics;
            doc_topic.push(t);
            TokenDoc {
                doc_id: format!("d{d}"),
                tokens: (0..doc_len).map(|_| term(t, draw_cumulative(&zipf, &mut rng))).collect(),
            }
        })
        .collect();
    PlantedCorpus { docs, doc_topic, phi }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lemmas_stem_consistently() {
        let l = generate_lemmas(300, 4);
        let stems: HashSet<String> = l.iter().map(|w| stem(w)).collect();
        assert_eq!(stems.len(), 300);
        for w in &l {
            assert_eq!(stem(&format!("{w}en")), stem(w));
        }
    }

    #[test]
    fn infeasible_vocabulary_is_rejected() {
        let mut c = SynthConfig::scaled(0.01, 1);
        c.vocab_size = 50;
        assert!(matches!(generate(&c), Err(Error::Config(_))));
    }

    #[test]
    fn exact_positive_count_and_patients() {
        let c = SynthConfig::scaled(0.05, 3);
        let s = generate(&c).unwrap();
        let pos = s.truth.iter().filter(|t| t.label).count();
        assert_eq!(pos, (c.n_periods as f64 * 0.0993).round() as usize);
        let patients: HashSet<&str> = s.admissions.iter().map(|a| a.patient_id.as_str()).collect();
        assert_eq!(patients.len(), c.n_patients);
        assert_eq!(s.admissions.len(), c.n_periods);
    }

    #[test]
    fn histogram_clamps_and_counts() {
        let mut h = Histogram::new(vec![0.0, 10.0, 20.0]);
        h.add(-5.0, true);
        h.add(10.0, true);
        h.add(25.0, false);
        assert_eq!(h.positive, vec![1, 1]);
        assert_eq!(h.negative, vec![0, 1]);
    }

    #[test]
    fn empty_dataset_describes_to_zero() {
        let d = describe(&[]);
        assert_eq!(d.n_periods, 0);
        assert_eq!(d.prevalence, 0.0);
        assert_eq!(d.mean_age_positive, 0.0);
        assert!(d.age_histogram.positive.iter().all(|&c| c == 0));
    }
}
