//! Raw clinical records and admission-period assembly.
//!
//! Input files are JSON Lines, one record per line:
//!
//! | file               | fields                                                        |
//! |--------------------|---------------------------------------------------------------|
//! | `notes.jsonl`      | `note_id`, `patient_id`, `timestamp`, `text`                  |
//! | `admissions.jsonl` | `period_id`, `patient_id`, `start`, `end` (optional), `sub_department` |
//! | `incidents.jsonl`  | `patient_id`, `timestamp`                                     |
//! | `structured.jsonl` | `period_id`, `age_admission`, `gender`, `n_meds_prescribed`, `n_meds_administered`, `has_diagnosis` |
//!
//! Timestamps are RFC 3339 / ISO-8601 in UTC, e.g. `2019-03-04T10:15:00Z`.
//! Unknown fields are ignored.

use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, TimeZone, Timelike, Utc};
use log::warn;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util;

pub const NOTES_FILE: &str = "notes.jsonl";
pub const ADMISSIONS_FILE: &str = "admissions.jsonl";
pub const INCIDENTS_FILE: &str = "incidents.jsonl";
pub const STRUCTURED_FILE: &str = "structured.jsonl";

/// Notes up to this long before the period start are part of the period note.
pub const NOTE_LOOKBACK_DAYS: i64 = 28;
/// Notes up to this long after the period start are part of the period note;
/// incidents must come strictly later to count as an outcome.
pub const NOTE_LOOKAHEAD_DAYS: i64 = 1;
/// End of the outcome window, inclusive.
pub const OUTCOME_HORIZON_DAYS: i64 = 28;
/// Period notes with this many words or fewer are discarded.
pub const MIN_WORDS_EXCLUSIVE: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoteRecord {
    pub note_id: String,
    pub patient_id: String,
    pub timestamp: DateTime<Utc>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissionPeriod {
    pub period_id: String,
    pub patient_id: String,
    pub start: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<DateTime<Utc>>,
    pub sub_department: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncidentRecord {
    pub patient_id: String,
    pub timestamp: DateTime<Utc>,
}

/// Period-level structured variables as supplied by the hospital export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuredRow {
    pub period_id: String,
    pub age_admission: f64,
    pub gender: String,
    pub n_meds_prescribed: u32,
    pub n_meds_administered: u32,
    pub has_diagnosis: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuredFeatures {
    pub age_admission: f64,
    pub gender: String,
    pub num_words: usize,
    pub first_note_ts: Option<DateTime<Utc>>,
    pub last_note_ts: Option<DateTime<Utc>>,
    pub n_meds_prescribed: u32,
    pub n_meds_administered: u32,
    pub has_diagnosis: bool,
    pub admission_start_hour: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodRecord {
    pub period_id: String,
    pub patient_id: String,
    pub start: DateTime<Utc>,
    pub period_note: String,
    pub label: bool,
    pub structured: StructuredFeatures,
    pub note_count: usize,
    pub word_count: usize,
}

trait Validate {
    fn validate(&self) -> std::result::Result<(), String>;
}

fn valid_timestamp(ts: &DateTime<Utc>) -> std::result::Result<(), String> {
    let lo = Utc.with_ymd_and_hms(1990, 1, 1, 0, 0, 0).unwrap();
    let hi = Utc.with_ymd_and_hms(2100, 1, 1, 0, 0, 0).unwrap();
    if *ts < lo || *ts >= hi {
        return Err(format!("timestamp {ts} outside [1990, 2100)"));
    }
    Ok(())
}

impl Validate for NoteRecord {
    fn validate(&self) -> std::result::Result<(), String> {
        if self.text.trim().is_empty() {
            return Err(format!("note {} has empty text", self.note_id));
        }
        valid_timestamp(&self.timestamp)
    }
}

impl Validate for AdmissionPeriod {
    fn validate(&self) -> std::result::Result<(), String> {
        valid_timestamp(&self.start)?;
        if let Some(end) = self.end {
            if end < self.start {
                return Err(format!("period {} ends before it starts", self.period_id));
            }
        }
        Ok(())
    }
}

impl Validate for IncidentRecord {
    fn validate(&self) -> std::result::Result<(), String> {
        valid_timestamp(&self.timestamp)
    }
}

impl Validate for StructuredRow {
    fn validate(&self) -> std::result::Result<(), String> {
        if !(0.0..=120.0).contains(&self.age_admission) {
            return Err(format!(
                "period {}: age {} outside [0, 120]",
                self.period_id, self.age_admission
            ));
        }
        Ok(())
    }
}

/// Parse one JSONL file. Blank lines are ignored; lines that fail to parse or
/// validate are skipped and counted.
fn read_records<T: DeserializeOwned + Validate>(path: &Path) -> Result<(Vec<T>, usize)> {
    let mut records = Vec::new();
    let mut malformed = 0;
    for (lineno, line) in util::read_lines(path)?.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<T>(line) {
            Ok(rec) => match rec.validate() {
                Ok(()) => records.push(rec),
                Err(why) => {
                    warn!("{}:{}: {why}", path.display(), lineno + 1);
                    malformed += 1;
                }
            },
            Err(e) => {
                warn!("{}:{}: {e}", path.display(), lineno + 1);
                malformed += 1;
            }
        }
    }
    Ok((records, malformed))
}

#[derive(Debug, Clone)]
pub struct CorpusPaths {
    pub notes: PathBuf,
    pub admissions: PathBuf,
    pub incidents: PathBuf,
    pub structured: PathBuf,
}

impl CorpusPaths {
    /// The four standard file names inside `dir`.
    pub fn in_dir(dir: &Path) -> Self {
        CorpusPaths {
            notes: dir.join(NOTES_FILE),
            admissions: dir.join(ADMISSIONS_FILE),
            incidents: dir.join(INCIDENTS_FILE),
            structured: dir.join(STRUCTURED_FILE),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestWarnings {
    pub notes: usize,
    pub admissions: usize,
    pub incidents: usize,
    pub structured: usize,
}

impl IngestWarnings {
    pub fn total(&self) -> usize {
        self.notes + self.admissions + self.incidents + self.structured
    }
}

#[derive(Debug, Clone, Default)]
pub struct RawCorpus {
    pub notes: Vec<NoteRecord>,
    pub admissions: Vec<AdmissionPeriod>,
    pub incidents: Vec<IncidentRecord>,
    pub structured: Vec<StructuredRow>,
    pub warnings: IngestWarnings,
}

pub fn ingest_notes(path: &Path) -> Result<(Vec<NoteRecord>, usize)> {
    let (notes, bad) = read_records::<NoteRecord>(path)?;
    let mut seen = HashSet::with_capacity(notes.len());
    for n in &notes {
        if !seen.insert(n.note_id.as_str()) {
            return Err(Error::DuplicateNoteId(n.note_id.clone()));
        }
    }
    Ok((notes, bad))
}

pub fn ingest(paths: &CorpusPaths) -> Result<RawCorpus> {
    let (notes, wn) = ingest_notes(&paths.notes)?;
    let (admissions, wa) = read_records::<AdmissionPeriod>(&paths.admissions)?;
    let mut seen = HashSet::with_capacity(admissions.len());
    for a in &admissions {
        if !seen.insert(a.period_id.as_str()) {
            return Err(Error::DuplicatePeriodId(a.period_id.clone()));
        }
    }
    let (incidents, wi) = read_records::<IncidentRecord>(&paths.incidents)?;
    let (structured, ws) = read_records::<StructuredRow>(&paths.structured)?;
    Ok(RawCorpus {
        notes,
        admissions,
        incidents,
        structured,
        warnings: IngestWarnings {
            notes: wn,
            admissions: wa,
            incidents: wi,
            structured: ws,
        },
    })
}

/// Number of maximal non-whitespace runs in raw text.
pub fn count_words(text: &str) -> usize {
    text.split_whitespace().count()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssemblyReport {
    pub periods: usize,
    pub empty_windows: usize,
    pub missing_structured: usize,
}

/// Build one record per admission period (sorted by `period_id`). Periods
/// without a structured row are skipped and counted.
pub fn assemble_periods(corpus: &RawCorpus) -> (Vec<PeriodRecord>, AssemblyReport) {
    let mut notes_by_patient: HashMap<&str, Vec<&NoteRecord>> = HashMap::new();
    for n in &corpus.notes {
        notes_by_patient.entry(&n.patient_id).or_default().push(n);
    }
    for v in notes_by_patient.values_mut() {
        v.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.note_id.cmp(&b.note_id)));
    }
    let mut incidents_by_patient: HashMap<&str, Vec<DateTime<Utc>>> = HashMap::new();
    for i in &corpus.incidents {
        incidents_by_patient.entry(&i.patient_id).or_default().push(i.timestamp);
    }
    let structured: HashMap<&str, &StructuredRow> = corpus
        .structured
        .iter()
        .map(|s| (s.period_id.as_str(), s))
        .collect();

    let mut report = AssemblyReport::default();
    let mut out = Vec::with_capacity(corpus.admissions.len());
    for adm in &corpus.admissions {
        let Some(extra) = structured.get(adm.period_id.as_str()) else {
            warn!("period {} has no structured row; skipped", adm.period_id);
            report.missing_structured += 1;
            continue;
        };
        let lo = adm.start - Duration::days(NOTE_LOOKBACK_DAYS);
        let hi = adm.start + Duration::days(NOTE_LOOKAHEAD_DAYS);
        let window: Vec<&NoteRecord> = notes_by_patient
            .get(adm.patient_id.as_str())
            .map(|notes| {
                let from = notes.partition_point(|n| n.timestamp < lo);
                let to = notes.partition_point(|n| n.timestamp <= hi);
                notes[from..to].to_vec()
            })
            .unwrap_or_default();
        if window.is_empty() {
            report.empty_windows += 1;
        }
        let period_note = window
            .iter()
            .map(|n| n.text.as_str())
            .collect::<Vec<_>>()
            .join(" ");

        let outcome_lo = adm.start + Duration::days(NOTE_LOOKAHEAD_DAYS);
        let outcome_hi = adm.start + Duration::days(OUTCOME_HORIZON_DAYS);
        let label = incidents_by_patient
            .get(adm.patient_id.as_str())
            .is_some_and(|ts| ts.iter().any(|&t| t > outcome_lo && t <= outcome_hi));

        let word_count = count_words(&period_note);
        out.push(PeriodRecord {
            period_id: adm.period_id.clone(),
            patient_id: adm.patient_id.clone(),
            start: adm.start,
            label,
            structured: StructuredFeatures {
                age_admission: extra.age_admission,
                gender: extra.gender.clone(),
                num_words: word_count,
                first_note_ts: window.first().map(|n| n.timestamp),
                last_note_ts: window.last().map(|n| n.timestamp),
                n_meds_prescribed: extra.n_meds_prescribed,
                n_meds_administered: extra.n_meds_administered,
                has_diagnosis: extra.has_diagnosis,
                admission_start_hour: adm.start.hour(),
            },
            note_count: window.len(),
            word_count,
            period_note,
        });
    }
    out.sort_by(|a, b| a.period_id.cmp(&b.period_id));
    report.periods = out.len();
    (out, report)
}

/// Keep records with more than 100 words; returns the kept records and the
/// number dropped.
pub fn filter_short(records: Vec<PeriodRecord>) -> (Vec<PeriodRecord>, usize) {
    let before = records.len();
    let kept: Vec<_> = records
        .into_iter()
        .filter(|r| r.word_count > MIN_WORDS_EXCLUSIVE)
        .collect();
    let dropped = before - kept.len();
    (kept, dropped)
}

pub fn write_dataset(path: &Path, records: &[PeriodRecord]) -> Result<()> {
    util::write_jsonl(path, records)
}

pub fn read_dataset(path: &Path) -> Result<Vec<PeriodRecord>> {
    let mut out = Vec::new();
    for (i, line) in util::read_lines(path)?.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: PeriodRecord = serde_json::from_str(line).map_err(|e| {
            Error::InvalidInput(format!("{}:{}: {e}", path.display(), i + 1))
        })?;
        out.push(rec);
    }
    Ok(out)
}
