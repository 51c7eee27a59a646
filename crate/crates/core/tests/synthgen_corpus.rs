//! Generated corpora run through file ingestion and period assembly.

use std::collections::HashMap;

use chrono::{Duration, TimeZone, Utc};
use notewatch::corpus::*;
use notewatch::synthgen::*;
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

fn written(cfg: &SynthConfig) -> (tempfile::TempDir, SynthCorpus, RawCorpus) {
    let dir = tempfile::tempdir().unwrap();
    let synth = generate(cfg).unwrap();
    let paths = write(&synth, dir.path()).unwrap();
    let raw = ingest(&paths).unwrap();
    (dir, synth, raw)
}

#[test]
fn generated_files_ingest_without_warnings() {
    let (_dir, synth, raw) = written(&SynthConfig::scaled(0.05, 1));
    assert_eq!(raw.warnings.total(), 0);
    assert_eq!(raw.notes.len(), synth.notes.len());
    let ids: Vec<&str> = raw.notes.iter().map(|n| n.note_id.as_str()).collect();
    let expected: Vec<&str> = synth.notes.iter().map(|n| n.note_id.as_str()).collect();
    assert_eq!(ids, expected);
}

#[test]
fn hundred_note_fixture_round_trips() {
    let synth = generate(&SynthConfig::scaled(0.05, 2)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("notes.jsonl");
    let body: String = synth.notes[..100]
        .iter()
        .map(|n| serde_json::to_string(n).unwrap() + "\n")
        .collect();
    std::fs::write(&path, body).unwrap();
    let (notes, bad) = ingest_notes(&path).unwrap();
    assert_eq!(bad, 0);
    assert_eq!(notes, synth.notes[..100].to_vec());
}

#[test]
fn most_periods_survive_the_length_filter() {
    let synth = generate(&SynthConfig::scaled(0.1, 3)).unwrap();
    let (records, _) = assemble_periods(&synth.to_raw());
    let long = records.iter().filter(|r| r.word_count > MIN_WORDS_EXCLUSIVE).count();
    assert!(long as f64 >= 0.95 * records.len() as f64, "{long}/{}", records.len());
    for r in &records {
        assert_eq!(r.word_count, r.period_note.split_whitespace().count());
        assert_eq!(r.structured.num_words, r.word_count);
    }
}

#[test]
fn realized_prevalence_matches_the_cohort() {
    let synth = generate(&SynthConfig::scaled(0.25, 4)).unwrap();
    let (records, _) = assemble_periods(&synth.to_raw());
    let stats = describe(&records);
    assert!((stats.prevalence - 0.0993).abs() <= 0.01, "{}", stats.prevalence);
    assert!(stats.mean_age_positive < stats.mean_age_negative);
    assert!(stats.mean_words_positive > stats.mean_words_negative);
}

#[test]
fn assembled_labels_match_the_planted_truth() {
    let synth = generate(&SynthConfig::scaled(0.05, 5)).unwrap();
    let (records, _) = assemble_periods(&synth.to_raw());
    let truth: HashMap<&str, bool> = synth.truth.iter().map(|t| (t.period_id.as_str(), t.label)).collect();
    for r in &records {
        assert_eq!(r.label, truth[r.period_id.as_str()], "{}", r.period_id);
    }
}

#[test]
fn planted_topic_weight_correlates_with_label() {
    let synth = generate(&SynthConfig::scaled(0.25, 6)).unwrap();
    let x: Vec<f64> = synth.truth.iter().map(|t| t.theta[0]).collect();
    let y: Vec<f64> = synth.truth.iter().map(|t| t.label as u8 as f64).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let r = sxy / (sxx * syy).sqrt();
    let t = r * ((n - 2.0) / (1.0 - r * r)).sqrt();
    let p = 1.0 - StudentsT::new(0.0, 1.0, n - 2.0).unwrap().cdf(t);
    assert!(r > 0.0 && p < 0.01, "r = {r}, p = {p}");
}

#[test]
fn same_seed_writes_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = SynthConfig::scaled(0.03, 8);
    write(&generate(&cfg).unwrap(), a.path()).unwrap();
    write(&generate(&cfg).unwrap(), b.path()).unwrap();
    for name in [NOTES_FILE, ADMISSIONS_FILE, INCIDENTS_FILE, STRUCTURED_FILE] {
        assert_eq!(std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap());
    }
}

#[test]
fn empty_dataset_describes_to_zero() {
    let s = describe(&[]);
    assert_eq!((s.n_periods, s.n_positive, s.prevalence), (0, 0, 0.0));
}

fn at(minutes: i64) -> chrono::DateTime<Utc> {
    Utc.with_ymd_and_hms(2020, 6, 1, 0, 0, 0).unwrap() + Duration::minutes(minutes)
}

const DAY: i64 = 24 * 60;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn windows_and_labels_follow_the_rules(
        note_offsets in prop::collection::vec(-40 * DAY..10 * DAY, 0..12),
        incident_offsets in prop::collection::vec(-5 * DAY..40 * DAY, 0..4),
        words in 1usize..40,
    ) {
        let start = at(0);
        let notes: Vec<NoteRecord> = note_offsets
            .iter()
            .enumerate()
            .map(|(i, &m)| NoteRecord {
                note_id: format!("n{i:02}"),
                patient_id: "p".into(),
                timestamp: at(m),
                text: vec!["woord"; words].join(" "),
            })
            .collect();
        let raw = RawCorpus {
            notes: notes.clone(),
            admissions: vec![AdmissionPeriod { period_id: "a".into(), patient_id: "p".into(), start, end: None, sub_department: "x".into() }],
            incidents: incident_offsets.iter().map(|&m| IncidentRecord { patient_id: "p".into(), timestamp: at(m) }).collect(),
            structured: vec![StructuredRow { period_id: "a".into(), age_admission: 40.0, gender: "M".into(), n_meds_prescribed: 1, n_meds_administered: 1, has_diagnosis: true }],
            warnings: Default::default(),
        };
        let (records, _) = assemble_periods(&raw);
        prop_assert_eq!(records.len(), 1);
        let r = &records[0];
        let in_window = note_offsets.iter().filter(|&&m| (-28 * DAY..=DAY).contains(&m)).count();
        prop_assert_eq!(r.note_count, in_window);
        prop_assert_eq!(r.word_count, in_window * words);
        prop_assert_eq!(r.structured.num_words, count_words(&r.period_note));
        let label = incident_offsets.iter().any(|&m| m > DAY && m <= 28 * DAY);
        prop_assert_eq!(r.label, label);
        prop_assert_eq!(assemble_periods(&raw).0, records.clone());

        let (kept, dropped) = filter_short(records.clone());
        prop_assert_eq!(kept.len() + dropped, records.len());
        prop_assert!(kept.iter().all(|k| k.word_count > MIN_WORDS_EXCLUSIVE));
    }
}
