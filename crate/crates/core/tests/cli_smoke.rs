//! End-to-end runs of the command-line binary.

use std::path::Path;
use std::process::{Command, Output};

fn notewatch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_notewatch"))
        .args(args)
        .env_remove("NOTEWATCH_SEED")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

const CONFIG: &str = "\
# small evaluation for the smoke test
data = data
features = lda, emb+struct
estimators = forest
seed = 7
inner_folds = 3
n_estimators = 20
forest_min_samples_leaf = 3
forest_max_features = sqrt
forest_criterion = gini
lda_k = 3
lda_iterations = 30
lda_min_count = 2
pv_vector_size = 8
pv_epochs = 2
pv_min_count = 2
";

fn lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path).unwrap().lines().map(String::from).collect()
}

#[test]
fn synth_evaluate_report() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let data = root.join("data");
    let out = notewatch(&["synth", "--scale", "0.05", "--seed", "7", "--out", data.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(data.join("notes.jsonl").exists() && data.join("manifest.json").exists());

    std::fs::write(root.join("run.conf"), CONFIG).unwrap();
    let eval = root.join("eval");
    let out = notewatch(&["evaluate", "--config", root.join("run.conf").to_str().unwrap(), "--out", eval.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let summary = lines(&eval.join("summary.csv"));
    assert_eq!(summary[0], notewatch::harness::SUMMARY_CSV_HEADER);
    for run in ["lda_forest", "emb-struct_forest"] {
        let rows: Vec<&String> = summary.iter().filter(|l| l.starts_with(&format!("{run},"))).collect();
        assert_eq!(rows.len(), 6, "{run}: {summary:?}");
        assert_eq!(rows.iter().filter(|l| l.contains(",mean,")).count(), 1);
        assert!(eval.join(format!("{run}_pr.csv")).exists());
        assert!(eval.join(format!("{run}_cv.json")).exists());
    }
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(eval.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);

    let report = root.join("report");
    let out = notewatch(&["report", "--input", eval.to_str().unwrap(), "--out", report.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for svg in ["pr_curves.svg", "roc_curves.svg", "age_histogram.svg", "words_histogram.svg"] {
        let body = std::fs::read_to_string(report.join(svg)).unwrap();
        assert!(body.starts_with("<svg") && body.trim_end().ends_with("</svg>"), "{svg}");
    }
    let sweeps = std::fs::read_dir(&report)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().ends_with("_sweep.svg"))
        .count();
    assert!(sweeps >= 1);
}

#[test]
fn no_arguments_prints_usage_and_fails() {
    let out = notewatch(&[]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).to_lowercase().contains("usage"));
}

#[test]
fn help_succeeds() {
    assert_eq!(code(&notewatch(&["--help"])), 0);
}

#[test]
fn invalid_config_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = tmp.path().join("bad.conf");
    std::fs::write(&conf, "data = .\nno_such_key = 3\n").unwrap();
    let out = notewatch(&["evaluate", "--config", conf.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&out), 1);
}

#[test]
fn corrupt_input_is_a_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a.json");
    std::fs::write(&a, "{ not json").unwrap();
    let out = notewatch(&[
        "compare",
        "--a",
        a.to_str().unwrap(),
        "--b",
        a.to_str().unwrap(),
        "--out",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn seed_precedence_is_flag_then_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let seed_of = |dir: &Path| -> serde_json::Value {
        let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
        m["seed"].clone()
    };
    let synth = |out: &Path, flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_notewatch"));
        cmd.args(["synth", "--scale", "0.01", "--out", out.to_str().unwrap()]).env("NOTEWATCH_SEED", "11");
        if let Some(f) = flag {
            cmd.args(["--seed", f]);
        }
        assert_eq!(code(&cmd.output().unwrap()), 0);
    };
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    synth(&a, None);
    synth(&b, Some("4"));
    assert_eq!(seed_of(&a), 11);
    assert_eq!(seed_of(&b), 4);
    let conf = tmp.path().join("seed.conf");
    std::fs::write(&conf, "data = a\nseed = 3\n").unwrap();
    let cfg = notewatch::cli::config::RunConfig::parse(&std::fs::read_to_string(&conf).unwrap(), tmp.path());
    assert_eq!(cfg.unwrap().seed, 3);
}
