#ifndef MONOMED_H
#define MONOMED_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of a call.
 */
typedef enum MonomedStatus {
  MONOMED_STATUS_OK = 0,
  MONOMED_STATUS_NULL_POINTER = 1,
  MONOMED_STATUS_INVALID_ARGUMENT = 2,
  MONOMED_STATUS_CAPACITY = 3,
  MONOMED_STATUS_DATA = 4,
  MONOMED_STATUS_CALIBRATION = 5,
  MONOMED_STATUS_DESIGN_MISMATCH = 6,
  /**
   * A Rust panic was caught at the boundary.
   */
  MONOMED_STATUS_PANIC = 7,
} MonomedStatus;

/**
 * Isotonic fitting algorithm.
 */
typedef enum MonomedFitMethod {
  MONOMED_FIT_METHOD_SDMMSA = 0,
  MONOMED_FIT_METHOD_PAVA = 1,
  MONOMED_FIT_METHOD_ORACLE = 2,
} MonomedFitMethod;

/**
 * Calibrated step-up cutoffs.
 */
typedef struct MonomedCriticalValues MonomedCriticalValues;

/**
 * Group summaries with pooled `S` and `nu`.
 */
typedef struct MonomedData MonomedData;

/**
 * A monotone fit of treatment means.
 */
typedef struct MonomedFit MonomedFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread, or NULL if none.
 *
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *monomed_last_error(void);

/**
 * Fits nondecreasing means to `k` weighted group means.
 *
 * # Safety
 * `means` and `weights` must point to `k` readable doubles and `out` to a
 * writable pointer.
 */
enum MonomedStatus monomed_fit_new(enum MonomedFitMethod method,
                                   const double *means,
                                   const double *weights,
                                   uintptr_t k,
                                   struct MonomedFit **out);

/**
 * Number of fitted values.
 *
 * # Safety
 * `fit` must be NULL or a live handle from [`monomed_fit_new`].
 */
uintptr_t monomed_fit_len(const struct MonomedFit *fit);

/**
 * Copies the `len` fitted values into `out`; `len` must equal the fit length.
 *
 * # Safety
 * `fit` must be a live handle and `out` must have room for `len` doubles.
 */
enum MonomedStatus monomed_fit_values(const struct MonomedFit *fit, double *out, uintptr_t len);

/**
 * Writes the 1-based block index of each dose into `out` (left to right).
 *
 * # Safety
 * `fit` must be a live handle and `out` must have room for `len` values.
 */
enum MonomedStatus monomed_fit_block_ids(const struct MonomedFit *fit,
                                         uintptr_t *out,
                                         uintptr_t len);

/**
 * # Safety
 * `fit` must be NULL or a handle not yet freed.
 */
void monomed_fit_free(struct MonomedFit *fit);

/**
 * Builds a dataset from `groups` summaries, control first.
 *
 * `S` and `nu` are pooled from the standard deviations.
 *
 * # Safety
 * `sizes`, `means` and `sds` must each point to `groups` readable values and
 * `out` to a writable pointer.
 */
enum MonomedStatus monomed_data_from_summaries(const uint32_t *sizes,
                                               const double *means,
                                               const double *sds,
                                               uintptr_t groups,
                                               struct MonomedData **out);

/**
 * Pooled standard deviation and its degrees of freedom.
 *
 * # Safety
 * `data` must be a live handle; `s` and `nu` must be writable.
 */
enum MonomedStatus monomed_data_pooled(const struct MonomedData *data, double *s, uint32_t *nu);

/**
 * # Safety
 * `data` must be NULL or a handle not yet freed.
 */
void monomed_data_free(struct MonomedData *data);

/**
 * Calibrates cutoffs for a design of `groups` sizes (control first).
 *
 * # Safety
 * `sizes` must point to `groups` readable values and `out` to a writable pointer.
 */
enum MonomedStatus monomed_calibrate(double alpha,
                                     double delta,
                                     const uint32_t *sizes,
                                     uintptr_t groups,
                                     uint32_t nu,
                                     uintptr_t replicates,
                                     uint64_t seed,
                                     struct MonomedCriticalValues **out);

/**
 * Number of cutoffs (one per dose).
 *
 * # Safety
 * `cv` must be NULL or a live handle.
 */
uintptr_t monomed_cutoffs_len(const struct MonomedCriticalValues *cv);

/**
 * Copies the cutoffs `c_1..c_k` and, when `se` is not NULL, their Monte
 * Carlo standard errors.
 *
 * # Safety
 * `cv` must be a live handle; `c` (and `se` if given) must hold `len` doubles.
 */
enum MonomedStatus monomed_cutoffs_get(const struct MonomedCriticalValues *cv,
                                       double *c,
                                       double *se,
                                       uintptr_t len);

/**
 * Serializes the calibration table; free the string with [`monomed_string_free`].
 *
 * # Safety
 * `cv` must be a live handle and `out` a writable pointer.
 */
enum MonomedStatus monomed_cutoffs_to_json(const struct MonomedCriticalValues *cv, char **out);

/**
 * Parses a calibration table written by [`monomed_cutoffs_to_json`] or the CLI.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer.
 */
enum MonomedStatus monomed_cutoffs_from_json(const char *json, struct MonomedCriticalValues **out);

/**
 * # Safety
 * `cv` must be NULL or a handle not yet freed.
 */
void monomed_cutoffs_free(struct MonomedCriticalValues *cv);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library and not yet freed.
 */
void monomed_string_free(char *s);

/**
 * Step-up MED. `*med` is the 1-based dose, or 0 when no dose is declared.
 * When `statistics` is not NULL it receives the `len == k` test statistics.
 *
 * # Safety
 * `data` and `cv` must be live handles, `med` writable, and `statistics`
 * NULL or room for `len` doubles.
 */
enum MonomedStatus monomed_step_up_med(const struct MonomedData *data,
                                       const struct MonomedCriticalValues *cv,
                                       double delta,
                                       uintptr_t *med,
                                       double *statistics,
                                       uintptr_t len);

/**
 * Hsu–Berger step-down MED with the same conventions as [`monomed_step_up_med`].
 *
 * # Safety
 * As for [`monomed_step_up_med`].
 */
enum MonomedStatus monomed_hsu_berger_med(const struct MonomedData *data,
                                          double delta,
                                          double alpha,
                                          uintptr_t *med,
                                          double *statistics,
                                          uintptr_t len);

/**
 * Upper `p` quantile of Student's t with `nu` degrees of freedom.
 *
 * # Safety
 * `out` must be writable.
 */
enum MonomedStatus monomed_t_quantile(double p, uint32_t nu, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MONOMED_H */
