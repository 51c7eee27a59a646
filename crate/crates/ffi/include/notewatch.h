#ifndef NOTEWATCH_H
#define NOTEWATCH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum NwStatus {
  NW_STATUS_OK = 0,
  NW_STATUS_NULL_POINTER = 1,
  NW_STATUS_INVALID_ARGUMENT = 2,
  NW_STATUS_INVALID_UTF8 = 3,
  NW_STATUS_IO = 4,
  NW_STATUS_FORMAT = 5,
  NW_STATUS_UNDEFINED_METRIC = 6,
  NW_STATUS_WIDTH_MISMATCH = 7,
  NW_STATUS_PANIC = 8,
  NW_STATUS_OTHER = 9,
} NwStatus;

typedef struct NwClassifier NwClassifier;

typedef struct NwEmbeddingModel NwEmbeddingModel;

typedef struct NwNormalizer NwNormalizer;

typedef struct NwTopicModel NwTopicModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *nw_version(void);

/*
 Copy the calling thread's last error message into `buf` (truncated,
 always NUL-terminated when `len > 0`). Returns the full message length.

 # Safety
 `buf` must be null or valid for `len` bytes.
 */
size_t nw_last_error(char *buf, size_t len);

/*
 # Safety
 `scores` and `labels` must be valid for `n` elements, `out` writable.
 */
enum NwStatus nw_pr_auc(const double *scores, const uint8_t *labels, size_t n, double *out);

/*
 # Safety
 As [`nw_pr_auc`].
 */
enum NwStatus nw_roc_auc(const double *scores, const uint8_t *labels, size_t n, double *out);

/*
 Maximum F2 over all thresholds and the threshold attaining it.

 # Safety
 As [`nw_pr_auc`]; `threshold` and `value` writable.
 */
enum NwStatus nw_f2_max(const double *scores,
                        const uint8_t *labels,
                        size_t n,
                        double *threshold,
                        double *value);

/*
 # Safety
 `a` and `b` valid for `n` bytes, `out` writable.
 */
enum NwStatus nw_cohens_kappa(const uint8_t *a, const uint8_t *b, size_t n, double *out);

/*
 Default Dutch normalizer.

 # Safety
 `out` writable.
 */
enum NwStatus nw_normalizer_new(struct NwNormalizer **out);

/*
 Normalizer with a stopword list read from `path` (one word per line).

 # Safety
 `path` NUL-terminated, `out` writable.
 */
enum NwStatus nw_normalizer_from_file(const char *path, struct NwNormalizer **out);

/*
 # Safety
 `h` null or from a normalizer constructor, not used afterwards.
 */
void nw_normalizer_free(struct NwNormalizer *h);

/*
 Normalize `text`; `*out` receives the tokens joined by single spaces and
 must be released with [`nw_string_free`].

 # Safety
 `h` live, `text` NUL-terminated, `out` writable.
 */
enum NwStatus nw_normalize(const struct NwNormalizer *h, const char *text, char **out);

/*
 # Safety
 `s` null or returned by this library, not used afterwards.
 */
void nw_string_free(char *s);

/*
 Load a classifier saved by `notewatch train-classifier`.

 # Safety
 `path` NUL-terminated, `out` writable.
 */
enum NwStatus nw_classifier_load(const char *path, struct NwClassifier **out);

/*
 # Safety
 `h` live, `out` writable.
 */
enum NwStatus nw_classifier_n_features(const struct NwClassifier *h, size_t *out);

/*
 Score `n_rows` row-major rows of `n_cols` features into `out`, columns in
 training order.

 # Safety
 `h` live, `x` valid for `n_rows * n_cols` values, `out` for `n_rows`.
 */
enum NwStatus nw_classifier_predict(const struct NwClassifier *h,
                                    const double *x,
                                    size_t n_rows,
                                    size_t n_cols,
                                    double *out);

/*
 # Safety
 `h` null or from [`nw_classifier_load`], not used afterwards.
 */
void nw_classifier_free(struct NwClassifier *h);

/*
 # Safety
 `path` NUL-terminated, `out` writable.
 */
enum NwStatus nw_topic_model_load(const char *path, struct NwTopicModel **out);

/*
 # Safety
 `h` live, `out` writable.
 */
enum NwStatus nw_topic_model_num_topics(const struct NwTopicModel *h, size_t *out);

/*
 Topic weights of a normalized, space-separated token string. `len` must
 equal the number of topics.

 # Safety
 `h` live, `tokens` NUL-terminated, `out` valid for `len` values.
 */
enum NwStatus nw_topic_model_infer(const struct NwTopicModel *h,
                                   const char *tokens,
                                   uint64_t seed,
                                   double *out,
                                   size_t len);

/*
 # Safety
 `h` null or from [`nw_topic_model_load`], not used afterwards.
 */
void nw_topic_model_free(struct NwTopicModel *h);

/*
 # Safety
 `path` NUL-terminated, `out` writable.
 */
enum NwStatus nw_embedding_model_load(const char *path, struct NwEmbeddingModel **out);

/*
 # Safety
 `h` live, `out` writable.
 */
enum NwStatus nw_embedding_model_dim(const struct NwEmbeddingModel *h, size_t *out);

/*
 Infer a document vector for a normalized, space-separated token string.
 `len` must equal the model dimension.

 # Safety
 `h` live, `tokens` NUL-terminated, `out` valid for `len` values.
 */
enum NwStatus nw_embedding_model_infer(const struct NwEmbeddingModel *h,
                                       const char *tokens,
                                       uint64_t seed,
                                       double *out,
                                       size_t len);

/*
 # Safety
 `h` null or from [`nw_embedding_model_load`], not used afterwards.
 */
void nw_embedding_model_free(struct NwEmbeddingModel *h);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NOTEWATCH_H */
