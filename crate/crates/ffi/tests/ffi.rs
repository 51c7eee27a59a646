//! The C interface exercised from Rust through its extern functions, plus a
//! compile check of the generated header.

use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use notewatch::classifiers::{train, ClassifierConfig, FeatureMatrix, RandomForestConfig};
use notewatch::embeddings::{train_pv, ParagraphVectorConfig};
use notewatch::synthgen::planted_topic_corpus;
use notewatch::topics::{build_vocab, train_lda, BowDoc, LdaConfig};
use notewatch_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    unsafe {
        nw_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn cstr(p: &Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

#[test]
fn metrics_match_the_library() {
    let scores = [0.9, 0.8, 0.3, 0.2, 0.6];
    let labels = [1u8, 0, 1, 0, 0];
    let bools: Vec<bool> = labels.iter().map(|&l| l != 0).collect();
    let (mut pr, mut roc, mut t, mut f2) = (0.0, 0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(nw_pr_auc(scores.as_ptr(), labels.as_ptr(), 5, &mut pr), NwStatus::Ok);
        assert_eq!(nw_roc_auc(scores.as_ptr(), labels.as_ptr(), 5, &mut roc), NwStatus::Ok);
        assert_eq!(nw_f2_max(scores.as_ptr(), labels.as_ptr(), 5, &mut t, &mut f2), NwStatus::Ok);
    }
    assert_eq!(pr, notewatch::metrics::pr_auc(&scores, &bools).unwrap());
    assert_eq!(roc, notewatch::metrics::roc_auc(&scores, &bools).unwrap());
    assert_eq!((t, f2), notewatch::metrics::f2_max(&scores, &bools).unwrap());

    let (a, b) = ([1u8, 1, 0, 0], [1u8, 0, 1, 0]);
    let mut k = f64::NAN;
    assert_eq!(unsafe { nw_cohens_kappa(a.as_ptr(), b.as_ptr(), 4, &mut k) }, NwStatus::Ok);
    assert_eq!(k, 0.0);
}

#[test]
fn errors_carry_status_and_message() {
    let mut out = 0.0;
    let labels = [1u8, 1];
    let scores = [0.1, 0.2];
    unsafe {
        assert_eq!(nw_pr_auc(ptr::null(), labels.as_ptr(), 2, &mut out), NwStatus::NullPointer);
        assert!(last_error().contains("scores"));
        assert_eq!(nw_roc_auc(scores.as_ptr(), labels.as_ptr(), 2, &mut out), NwStatus::UndefinedMetric);
        let mixed = [1u8, 0];
        assert_eq!(nw_pr_auc(scores.as_ptr(), mixed.as_ptr(), 2, ptr::null_mut()), NwStatus::NullPointer);
        assert!(last_error().contains("out"));
        let nan = [f64::NAN, 0.2];
        assert_eq!(nw_pr_auc(nan.as_ptr(), mixed.as_ptr(), 2, &mut out), NwStatus::InvalidArgument);
    }
    let len = unsafe { nw_last_error(ptr::null_mut(), 0) };
    assert!(len > 0);
}

#[test]
fn normalizer_round_trip() {
    let mut h = ptr::null_mut();
    let mut s = ptr::null_mut();
    let text = CString::new("De patiënt was erg boos, en verward!").unwrap();
    unsafe {
        assert_eq!(nw_normalizer_new(&mut h), NwStatus::Ok);
        assert_eq!(nw_normalize(h, text.as_ptr(), &mut s), NwStatus::Ok);
        let got = CStr::from_ptr(s).to_str().unwrap().to_string();
        nw_string_free(s);
        let expected = notewatch::textnorm::normalize(
            text.to_str().unwrap(),
            &notewatch::textnorm::NormalizationResources::dutch(),
        );
        assert_eq!(got, expected.join(" "));
        let bad = [0xffu8, 0xfe, 0];
        assert_eq!(nw_normalize(h, bad.as_ptr().cast(), &mut s), NwStatus::InvalidUtf8);
        nw_normalizer_free(h);
        nw_normalizer_free(ptr::null_mut());
    }
}

#[test]
fn classifier_handle_predicts_like_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, (i % 7) as f64]).collect();
    let y: Vec<bool> = (0..40).map(|i| i >= 20).collect();
    let x = FeatureMatrix::from_rows(vec!["a".into(), "b".into()], &rows).unwrap();
    let cfg = ClassifierConfig::Forest(RandomForestConfig { n_estimators: 10, ..Default::default() });
    let model = train(&x, &y, &cfg).unwrap();
    let path = dir.path().join("model.json");
    model.save(&path).unwrap();

    let mut h = ptr::null_mut();
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    let mut out = vec![0.0; 40];
    let mut n = 0usize;
    unsafe {
        assert_eq!(nw_classifier_load(cstr(&path).as_ptr(), &mut h), NwStatus::Ok);
        assert_eq!(nw_classifier_n_features(h, &mut n), NwStatus::Ok);
        assert_eq!(n, 2);
        assert_eq!(nw_classifier_predict(h, flat.as_ptr(), 40, 2, out.as_mut_ptr()), NwStatus::Ok);
        assert_eq!(nw_classifier_predict(h, flat.as_ptr(), 20, 4, out.as_mut_ptr()), NwStatus::WidthMismatch);
        nw_classifier_free(h);
    }
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(out[i], model.predict_row(r));
    }

    let missing = dir.path().join("missing.json");
    unsafe {
        assert_eq!(nw_classifier_load(cstr(&missing).as_ptr(), &mut h), NwStatus::Io);
    }
    std::fs::write(&missing, "not a model").unwrap();
    unsafe {
        assert_eq!(nw_classifier_load(cstr(&missing).as_ptr(), &mut h), NwStatus::Format);
    }
}

#[test]
fn topic_and_embedding_handles_infer() {
    let dir = tempfile::tempdir().unwrap();
    let docs = planted_topic_corpus(40, 2, 15, 30, 1).docs;
    let vocab = build_vocab(&docs, 1, 1).unwrap();
    let bow: Vec<BowDoc> = docs.iter().map(|d| vocab.bow(d)).collect();
    let mut lda = LdaConfig::new(2, 1);
    lda.iterations = 30;
    let topics = train_lda(&bow, &vocab, &lda).unwrap();
    let tpath = dir.path().join("model.lda");
    topics.save(&tpath).unwrap();
    let pv = train_pv(&docs, &ParagraphVectorConfig { vector_size: 6, min_count: 1, epochs: 2, ..Default::default() }).unwrap();
    let ppath = dir.path().join("model.pv");
    pv.save(&ppath).unwrap();

    let tokens = CString::new(docs[0].tokens.join(" ")).unwrap();
    let (mut th, mut eh) = (ptr::null_mut(), ptr::null_mut());
    let (mut k, mut dim) = (0usize, 0usize);
    unsafe {
        assert_eq!(nw_topic_model_load(cstr(&tpath).as_ptr(), &mut th), NwStatus::Ok);
        assert_eq!(nw_topic_model_num_topics(th, &mut k), NwStatus::Ok);
        let mut w = vec![0.0; k];
        assert_eq!(nw_topic_model_infer(th, tokens.as_ptr(), 3, w.as_mut_ptr(), k), NwStatus::Ok);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        let direct = topics.infer(&vocab.bow(&docs[0]), &Default::default(), 3);
        assert_eq!(w, direct.weights);
        assert_eq!(nw_topic_model_infer(th, tokens.as_ptr(), 3, w.as_mut_ptr(), k + 1), NwStatus::WidthMismatch);
        nw_topic_model_free(th);

        assert_eq!(nw_embedding_model_load(cstr(&ppath).as_ptr(), &mut eh), NwStatus::Ok);
        assert_eq!(nw_embedding_model_dim(eh, &mut dim), NwStatus::Ok);
        assert_eq!(dim, 6);
        let mut v = vec![0.0; dim];
        assert_eq!(nw_embedding_model_infer(eh, tokens.as_ptr(), 3, v.as_mut_ptr(), dim), NwStatus::Ok);
        assert_eq!(v, pv.infer_vector("", &docs[0].tokens, None, 3).vector);
        nw_embedding_model_free(eh);
    }
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(nw_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_interface_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/notewatch.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "NW_STATUS_OK",
        "NW_STATUS_WIDTH_MISMATCH",
        "typedef struct NwClassifier NwClassifier",
        "nw_last_error",
        "nw_pr_auc",
        "nw_roc_auc",
        "nw_f2_max",
        "nw_cohens_kappa",
        "nw_normalize",
        "nw_string_free",
        "nw_classifier_predict",
        "nw_topic_model_infer",
        "nw_embedding_model_infer",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
    for compiler in [("cc", "c"), ("c++", "c++")] {
        let Ok(status) = Command::new(compiler.0)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", compiler.1])
            .arg(&header)
            .status()
        else {
            eprintln!("{} not available; header compile check skipped", compiler.0);
            continue;
        };
        assert!(status.success(), "{} rejects the header", compiler.0);
    }
}
