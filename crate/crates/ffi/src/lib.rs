//! C interface to the notewatch metrics, text normalizer and trained models.
//!
//! Every function returns an [`NwStatus`]; on failure a message is kept per
//! thread and can be read with [`nw_last_error`]. Handles are opaque and must
//! be released with their matching `*_free` function. Labels are bytes, any
//! non-zero value meaning positive.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use notewatch::classifiers::TrainedClassifier;
use notewatch::embeddings::ParagraphVectorModel;
use notewatch::metrics;
use notewatch::textnorm::{self, NormalizationResources};
use notewatch::topics::{InferConfig, TopicModel};
use notewatch::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidUtf8 = 3,
    Io = 4,
    Format = 5,
    UndefinedMetric = 6,
    WidthMismatch = 7,
    Panic = 8,
    Other = 9,
}

pub struct NwNormalizer(NormalizationResources);
pub struct NwClassifier(TrainedClassifier);
pub struct NwTopicModel(TopicModel);
pub struct NwEmbeddingModel(ParagraphVectorModel);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> NwStatus {
    match e {
        Error::Io { .. } => NwStatus::Io,
        Error::Format(_) | Error::Json(_) => NwStatus::Format,
        Error::UndefinedMetric(_) => NwStatus::UndefinedMetric,
        Error::WidthMismatch { .. } => NwStatus::WidthMismatch,
        Error::Config(_) | Error::InvalidInput(_) => NwStatus::InvalidArgument,
        _ => NwStatus::Other,
    }
}

struct Fail(NwStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> NwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NwStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            NwStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(NwStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice_of<'a, T>(p: *const T, n: usize, what: &str) -> Result<&'a [T], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, n))
}

unsafe fn str_of<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(NwStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn labels_of(p: *const u8, n: usize) -> Result<Vec<bool>, Fail> {
    Ok(slice_of(p, n, "labels")?.iter().map(|&b| b != 0).collect())
}

fn boxed<T>(out: &mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy the calling thread's last error message into `buf` (truncated,
/// always NUL-terminated when `len > 0`). Returns the full message length.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn nw_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// # Safety
/// `scores` and `labels` must be valid for `n` elements, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nw_pr_auc(scores: *const f64, labels: *const u8, n: usize, out: *mut f64) -> NwStatus {
    guard(|| {
        let v = metrics::pr_auc(slice_of(scores, n, "scores")?, &labels_of(labels, n)?)?;
        *out_ref(out, "out")? = v;
        Ok(())
    })
}

/// # Safety
/// As [`nw_pr_auc`].
#[no_mangle]
pub unsafe extern "C" fn nw_roc_auc(scores: *const f64, labels: *const u8, n: usize, out: *mut f64) -> NwStatus {
    guard(|| {
        let v = metrics::roc_auc(slice_of(scores, n, "scores")?, &labels_of(labels, n)?)?;
        *out_ref(out, "out")? = v;
        Ok(())
    })
}

/// Maximum F2 over all thresholds and the threshold attaining it.
///
/// # Safety
/// As [`nw_pr_auc`]; `threshold` and `value` writable.
#[no_mangle]
pub unsafe extern "C" fn nw_f2_max(
    scores: *const f64,
    labels: *const u8,
    n: usize,
    threshold: *mut f64,
    value: *mut f64,
) -> NwStatus {
    guard(|| {
        let (t, v) = metrics::f2_max(slice_of(scores, n, "scores")?, &labels_of(labels, n)?)?;
        *out_ref(threshold, "threshold")? = t;
        *out_ref(value, "value")? = v;
        Ok(())
    })
}

/// # Safety
/// `a` and `b` valid for `n` bytes, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nw_cohens_kappa(a: *const u8, b: *const u8, n: usize, out: *mut f64) -> NwStatus {
    guard(|| {
        let v = metrics::cohens_kappa(&labels_of(a, n)?, &labels_of(b, n)?)?;
        *out_ref(out, "out")? = v;
        Ok(())
    })
}

/// Default Dutch normalizer.
///
/// # Safety
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nw_normalizer_new(out: *mut *mut NwNormalizer) -> NwStatus {
    guard(|| {
        boxed(out_ref(out, "out")?, NwNormalizer(NormalizationResources::dutch()));
        Ok(())
    })
}

/// Normalizer with a stopword list read from `path` (one word per line).
///
/// # Safety
/// `path` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nw_normalizer_from_file(path: *const c_char, out: *mut *mut NwNormalizer) -> NwStatus {
    guard(|| {
        let res = NormalizationResources::from_file(Path::new(str_of(path, "path")?))?;
        boxed(out_ref(out, "out")?, NwNormalizer(res));
        Ok(())
    })
}

/// # Safety
/// `h` null or from a normalizer constructor, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nw_normalizer_free(h: *mut NwNormalizer) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Normalize `text`; `*out` receives the tokens joined by single spaces and
/// must be released with [`nw_string_free`].
///
/// # Safety
/// `h` live, `text` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nw_normalize(h: *const NwNormalizer, text: *const c_char, out: *mut *mut c_char) -> NwStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| null("normalizer"))?;
        let tokens = textnorm::normalize(str_of(text, "text")?, &h.0);
        let joined = CString::new(tokens.join(" ")).expect("tokens are alphanumeric");
        *out_ref(out, "out")? = joined.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` null or returned by this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nw_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Load a classifier saved by `notewatch train-classifier`.
///
/// # Safety
/// `path` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nw_classifier_load(path: *const c_char, out: *mut *mut NwClassifier) -> NwStatus {
    guard(|| {
        let model = TrainedClassifier::load(Path::new(str_of(path, "path")?))?;
        boxed(out_ref(out, "out")?, NwClassifier(model));
        Ok(())
    })
}

/// # Safety
/// `h` live, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nw_classifier_n_features(h: *const NwClassifier, out: *mut usize) -> NwStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| null("classifier"))?;
        *out_ref(out, "out")? = h.0.feature_names.len();
        Ok(())
    })
}

/// Score `n_rows` row-major rows of `n_cols` features into `out`, columns in
/// training order.
///
/// # Safety
/// `h` live, `x` valid for `n_rows * n_cols` values, `out` for `n_rows`.
#[no_mangle]
pub unsafe extern "C" fn nw_classifier_predict(
    h: *const NwClassifier,
    x: *const f64,
    n_rows: usize,
    n_cols: usize,
    out: *mut f64,
) -> NwStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| null("classifier"))?;
        let expected = h.0.feature_names.len();
        if n_cols != expected {
            return Err(Error::WidthMismatch { expected, got: n_cols }.into());
        }
        let total = n_rows
            .checked_mul(n_cols)
            .ok_or_else(|| Fail(NwStatus::InvalidArgument, "matrix size overflows".into()))?;
        let x = slice_of(x, total, "x")?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Fail(NwStatus::InvalidArgument, "features must be finite".into()));
        }
        if n_rows == 0 {
            return Ok(());
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let out = slice::from_raw_parts_mut(out, n_rows);
        for (i, o) in out.iter_mut().enumerate() {
            *o = h.0.predict_row(&x[i * n_cols..(i + 1) * n_cols]);
        }
        Ok(())
    })
}

/// # Safety
/// `h` null or from [`nw_classifier_load`], not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nw_classifier_free(h: *mut NwClassifier) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

fn tokens_of(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

/// # Safety
/// `path` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nw_topic_model_load(path: *const c_char, out: *mut *mut NwTopicModel) -> NwStatus {
    guard(|| {
        let model = TopicModel::load(Path::new(str_of(path, "path")?))?;
        boxed(out_ref(out, "out")?, NwTopicModel(model));
        Ok(())
    })
}

/// # Safety
/// `h` live, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nw_topic_model_num_topics(h: *const NwTopicModel, out: *mut usize) -> NwStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| null("topic model"))?;
        *out_ref(out, "out")? = h.0.num_topics();
        Ok(())
    })
}

/// Topic weights of a normalized, space-separated token string. `len` must
/// equal the number of topics.
///
/// # Safety
/// `h` live, `tokens` NUL-terminated, `out` valid for `len` values.
#[no_mangle]
pub unsafe extern "C" fn nw_topic_model_infer(
    h: *const NwTopicModel,
    tokens: *const c_char,
    seed: u64,
    out: *mut f64,
    len: usize,
) -> NwStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| null("topic model"))?;
        let k = h.0.num_topics();
        if len != k {
            return Err(Error::WidthMismatch { expected: k, got: len }.into());
        }
        let doc = textnorm::TokenDoc {
            doc_id: String::new(),
            tokens: tokens_of(str_of(tokens, "tokens")?),
        };
        let v = h.0.infer(&h.0.vocab().bow(&doc), &InferConfig::default(), seed);
        if out.is_null() {
            return Err(null("out"));
        }
        slice::from_raw_parts_mut(out, len).copy_from_slice(&v.weights);
        Ok(())
    })
}

/// # Safety
/// `h` null or from [`nw_topic_model_load`], not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nw_topic_model_free(h: *mut NwTopicModel) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// # Safety
/// `path` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nw_embedding_model_load(path: *const c_char, out: *mut *mut NwEmbeddingModel) -> NwStatus {
    guard(|| {
        let model = ParagraphVectorModel::load(Path::new(str_of(path, "path")?))?;
        boxed(out_ref(out, "out")?, NwEmbeddingModel(model));
        Ok(())
    })
}

/// # Safety
/// `h` live, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nw_embedding_model_dim(h: *const NwEmbeddingModel, out: *mut usize) -> NwStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| null("embedding model"))?;
        *out_ref(out, "out")? = h.0.dim();
        Ok(())
    })
}

/// Infer a document vector for a normalized, space-separated token string.
/// `len` must equal the model dimension.
///
/// # Safety
/// `h` live, `tokens` NUL-terminated, `out` valid for `len` values.
#[no_mangle]
pub unsafe extern "C" fn nw_embedding_model_infer(
    h: *const NwEmbeddingModel,
    tokens: *const c_char,
    seed: u64,
    out: *mut f64,
    len: usize,
) -> NwStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| null("embedding model"))?;
        let dim = h.0.dim();
        if len != dim {
            return Err(Error::WidthMismatch { expected: dim, got: len }.into());
        }
        let v = h.0.infer_vector("", &tokens_of(str_of(tokens, "tokens")?), None, seed);
        if out.is_null() {
            return Err(null("out"));
        }
        slice::from_raw_parts_mut(out, len).copy_from_slice(&v.vector);
        Ok(())
    })
}

/// # Safety
/// `h` null or from [`nw_embedding_model_load`], not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nw_embedding_model_free(h: *mut NwEmbeddingModel) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}
