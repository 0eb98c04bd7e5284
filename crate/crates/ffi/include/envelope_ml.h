#ifndef ENVELOPE_ML_H
#define ENVELOPE_ML_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Number of features in every row.
 */
#define EML_N_FEATURES 7

typedef enum EmlStatus {
  EML_STATUS_OK = 0,
  EML_STATUS_NULL_POINTER = 1,
  EML_STATUS_INVALID_ARGUMENT = 2,
  EML_STATUS_IO = 3,
  EML_STATUS_PARSE = 4,
  EML_STATUS_NUMERICAL = 5,
  EML_STATUS_MODEL = 6,
  EML_STATUS_PANIC = 7,
} EmlStatus;

typedef enum EmlClass {
  EML_CLASS_LOW = 0,
  EML_CLASS_MEDIUM = 1,
  EML_CLASS_HIGH = 2,
  /**
   * The row has no label.
   */
  EML_CLASS_NONE = -1,
} EmlClass;

/**
 * A dataset of material rows.
 */
typedef struct EmlDataset EmlDataset;

/**
 * A fitted LDA classifier and the feature columns it was trained on.
 */
typedef struct EmlLdaModel EmlLdaModel;

/**
 * A fitted principal-component model.
 */
typedef struct EmlPcaModel EmlPcaModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL after a success.
 * The pointer stays valid until the next call into this library on the
 * same thread.
 */
const char *eml_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *eml_version(void);

/**
 * Samples `n_per_material` rows per built-in material with `seed`, attaches
 * surrogate loads and labels them with the default thresholds.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum EmlStatus eml_dataset_generate(uint64_t seed, size_t n_per_material, struct EmlDataset **out);

/**
 * Reads a dataset CSV.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum EmlStatus eml_dataset_read_csv(const char *path, struct EmlDataset **out);

/**
 * Writes a dataset CSV.
 *
 * # Safety
 * `dataset` must be a live handle; `path` a NUL-terminated string.
 */
enum EmlStatus eml_dataset_write_csv(const struct EmlDataset *dataset, const char *path);

/**
 * Number of rows, or 0 for a NULL handle.
 *
 * # Safety
 * `dataset` must be NULL or a live handle.
 */
size_t eml_dataset_len(const struct EmlDataset *dataset);

/**
 * Copies row `row`'s features into `out`, which holds `EML_N_FEATURES` values,
 * and its label into `label` (may be NULL).
 *
 * # Safety
 * `dataset` must be a live handle; `out` must point to `EML_N_FEATURES`
 * writable doubles; `label` must be NULL or writable.
 */
enum EmlStatus eml_dataset_row(const struct EmlDataset *dataset,
                               size_t row,
                               double *out,
                               enum EmlClass *label);

/**
 * Row `row`'s thermal load in kWh/m2; fails if the row has none.
 *
 * # Safety
 * `dataset` must be a live handle; `out` must be writable.
 */
enum EmlStatus eml_dataset_load(const struct EmlDataset *dataset, size_t row, double *out);

/**
 * Stratified split of a labeled dataset into new train and test handles,
 * both z-score normalized with statistics of the training part when
 * `normalized` is true.
 *
 * # Safety
 * `dataset` must be a live handle; `train` and `test` must be writable.
 */
enum EmlStatus eml_dataset_split(const struct EmlDataset *dataset,
                                 double train_fraction,
                                 uint64_t seed,
                                 bool normalized,
                                 struct EmlDataset **train,
                                 struct EmlDataset **test);

/**
 * # Safety
 * `dataset` must be NULL or a handle not yet freed.
 */
void eml_dataset_free(struct EmlDataset *dataset);

/**
 * Fits PCA on all seven columns of `dataset` (normalize it first).
 *
 * # Safety
 * `dataset` must be a live handle; `out` must be writable.
 */
enum EmlStatus eml_pca_fit(const struct EmlDataset *dataset, struct EmlPcaModel **out);

/**
 * Copies the explained-variance ratios, largest first, into `out`
 * (`EML_N_FEATURES` values).
 *
 * # Safety
 * `model` must be a live handle; `out` must hold `EML_N_FEATURES` doubles.
 */
enum EmlStatus eml_pca_explained_variance_ratio(const struct EmlPcaModel *model, double *out);

/**
 * Signed loading of `feature` on 0-based `component`.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum EmlStatus eml_pca_loading(const struct EmlPcaModel *model,
                               size_t feature,
                               size_t component,
                               double *out);

/**
 * Writes the `k` feature indices with the largest |PC1 loading| into `out`.
 *
 * # Safety
 * `model` must be a live handle; `out` must hold `k` writable values.
 */
enum EmlStatus eml_pca_top_features(const struct EmlPcaModel *model, size_t k, size_t *out);

/**
 * # Safety
 * `model` must be NULL or a handle not yet freed.
 */
void eml_pca_free(struct EmlPcaModel *model);

/**
 * Fits LDA on the labeled `dataset` using the `n_features` columns listed
 * in `features`.
 *
 * # Safety
 * `dataset` must be a live handle; `features` must point to `n_features`
 * values; `out` must be writable.
 */
enum EmlStatus eml_lda_fit(const struct EmlDataset *dataset,
                           const size_t *features,
                           size_t n_features,
                           struct EmlLdaModel **out);

/**
 * Predicts the class of one point given as the model's feature columns,
 * in the order passed to [`eml_lda_fit`].
 *
 * # Safety
 * `model` must be a live handle; `x` must point to `n` values; `out` must
 * be writable.
 */
enum EmlStatus eml_lda_predict(const struct EmlLdaModel *model,
                               const double *x,
                               size_t n,
                               enum EmlClass *out);

/**
 * Fraction of `dataset`'s labeled rows the model classifies correctly.
 *
 * # Safety
 * `model` and `dataset` must be live handles; `out` must be writable.
 */
enum EmlStatus eml_lda_accuracy(const struct EmlLdaModel *model,
                                const struct EmlDataset *dataset,
                                double *out);

/**
 * # Safety
 * `model` must be NULL or a handle not yet freed.
 */
void eml_lda_free(struct EmlLdaModel *model);

/**
 * Runs the whole pipeline with default settings and `seed`, writing every
 * output into `out_dir`. When `summary_json` is not NULL it receives the
 * run summary as a string to release with [`eml_string_free`].
 *
 * # Safety
 * `out_dir` must be a NUL-terminated string; `summary_json` must be NULL or
 * writable.
 */
enum EmlStatus eml_run_pipeline(uint64_t seed, const char *out_dir, char **summary_json);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be NULL or a string from this library not yet freed.
 */
void eml_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ENVELOPE_ML_H */
