#ifndef ORDISO_H
#define ORDISO_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  ORDISO_FORMAT_JSON = 0,
  ORDISO_FORMAT_CSV = 1,
  ORDISO_FORMAT_PLOT_CSV = 2,
} OrdisoFormat;

typedef enum {
  ORDISO_METHOD_DUAL = 0,
  ORDISO_METHOD_GENERALIZED_PAVA = 1,
  ORDISO_METHOD_DYKSTRA = 2,
} OrdisoMethod;

typedef enum {
  ORDISO_STATUS_OK = 0,
  ORDISO_STATUS_NULL_POINTER = 1,
  ORDISO_STATUS_DIMENSION = 2,
  ORDISO_STATUS_DOMAIN = 3,
  ORDISO_STATUS_PARSE = 4,
  ORDISO_STATUS_IO = 5,
  ORDISO_STATUS_BUFFER_TOO_SMALL = 6,
  ORDISO_STATUS_INVALID_ARGUMENT = 7,
  ORDISO_STATUS_PANIC = 8,
} OrdisoStatus;

typedef enum {
  ORDISO_STEP_RULE_POLYAK = 0,
  ORDISO_STEP_RULE_DIMINISHING = 1,
} OrdisoStepRule;

/**
 * Opaque fit handle. Keeps the sample and settings it was solved with.
 */
typedef struct OrdisoFit OrdisoFit;

/**
 * Opaque sample handle.
 */
typedef struct OrdisoSample OrdisoSample;

/**
 * Solver settings; start from [`ordiso_config_default`].
 */
typedef struct {
  double feas_tol;
  double gap_tol;
  size_t max_iter;
  OrdisoStepRule step_rule;
  double step_constant;
  bool oracle_check;
  /**
   * Tolerance of the certificate behind `ordiso_fit_converged` for the
   * non-dual methods; also stored in JSON output.
   */
  double kkt_tol;
} OrdisoConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Default solver settings.
 */
OrdisoConfig ordiso_config_default(void);

/**
 * Library version, a static NUL terminated string.
 */
const char *ordiso_version(void);

/**
 * Copies the last error message of this thread into `buf` (NUL
 * terminated, truncated to `len`) and returns the full message length
 * without the terminator, or 0 if the last call succeeded.
 *
 * # Safety
 * `buf` is null or valid for `len` writes.
 */
size_t ordiso_last_error(char *buf, size_t len);

/**
 * Builds a sample of length `n`. `x` may be null for `1..=n`, and `w1`,
 * `w2` may be null for unit weights.
 *
 * # Safety
 * Non-null arrays are valid for `n` reads; `out` is valid for one write.
 */
OrdisoStatus ordiso_sample_new(const double *x,
                               const double *y,
                               const double *z,
                               const double *w1,
                               const double *w2,
                               size_t n,
                               OrdisoSample **out);

/**
 * Reads a sample from a CSV file with columns `x,y,z` and optional
 * `w1,w2`. Repeated `x` values are merged.
 *
 * # Safety
 * `path` is a NUL terminated string; `out` is valid for one write.
 */
OrdisoStatus ordiso_sample_from_csv(const char *path, OrdisoSample **out);

/**
 * Number of design points, 0 for a null handle.
 *
 * # Safety
 * `sample` is null or a live handle.
 */
size_t ordiso_sample_len(const OrdisoSample *sample);

/**
 * # Safety
 * `sample` is null or a live handle, not used afterwards.
 */
void ordiso_sample_free(OrdisoSample *sample);

/**
 * Fits the ordered pair. `config` may be null for the defaults. A fit that
 * stopped without converging is still returned with status `Ok`; ask
 * [`ordiso_fit_converged`].
 *
 * # Safety
 * `sample` is a live handle, `config` is null or valid, `out` is valid for
 * one write.
 */
OrdisoStatus ordiso_solve(const OrdisoSample *sample,
                          OrdisoMethod method,
                          const OrdisoConfig *config,
                          OrdisoFit **out);

/**
 * # Safety
 * `fit` is null or a live handle, not used afterwards.
 */
void ordiso_fit_free(OrdisoFit *fit);

/**
 * # Safety
 * `fit` is null or a live handle.
 */
size_t ordiso_fit_len(const OrdisoFit *fit);

/**
 * Weighted residual sum of squares, NaN for a null handle.
 *
 * # Safety
 * `fit` is null or a live handle.
 */
double ordiso_fit_objective(const OrdisoFit *fit);

/**
 * Dual value at the returned multipliers, NaN for a null handle.
 *
 * # Safety
 * `fit` is null or a live handle.
 */
double ordiso_fit_dual_value(const OrdisoFit *fit);

/**
 * `max_j (a_j - b_j)`, NaN for a null handle.
 *
 * # Safety
 * `fit` is null or a live handle.
 */
double ordiso_fit_max_coupling_violation(const OrdisoFit *fit);

/**
 * # Safety
 * `fit` is null or a live handle.
 */
bool ordiso_fit_converged(const OrdisoFit *fit);

/**
 * # Safety
 * `fit` is null or a live handle.
 */
size_t ordiso_fit_iterations(const OrdisoFit *fit);

/**
 * Copies the fitted lower curve into `buf`, which holds `len` values.
 *
 * # Safety
 * `fit` is a live handle and `buf` is valid for `len` writes.
 */
OrdisoStatus ordiso_fit_copy_a(const OrdisoFit *fit, double *buf, size_t len);

/**
 * Copies the fitted upper curve into `buf`, which holds `len` values.
 *
 * # Safety
 * `fit` is a live handle and `buf` is valid for `len` writes.
 */
OrdisoStatus ordiso_fit_copy_b(const OrdisoFit *fit, double *buf, size_t len);

/**
 * Copies the coupling multipliers into `buf`, which holds `len` values.
 *
 * # Safety
 * `fit` is a live handle and `buf` is valid for `len` writes.
 */
OrdisoStatus ordiso_fit_copy_lambda(const OrdisoFit *fit, double *buf, size_t len);

/**
 * Runs the optimality check on a fit at `tol`. On failure the reasons are
 * available from [`ordiso_last_error`] while the status stays `Ok`.
 *
 * # Safety
 * `fit` is a live handle and `passed` is valid for one write.
 */
OrdisoStatus ordiso_fit_check(const OrdisoFit *fit, double tol, bool *passed);

/**
 * Writes a fit to `path` as JSON, CSV or plotting CSV.
 *
 * # Safety
 * `fit` is a live handle and `path` a NUL terminated string.
 */
OrdisoStatus ordiso_fit_write(const OrdisoFit *fit, const char *path, OrdisoFormat format);

/**
 * Weighted isotonic (nondecreasing) fit of `data` into `out`, all of
 * length `n`. `weights` may be null for unit weights.
 *
 * # Safety
 * `data` and `out` are valid for `n` elements, `weights` is null or valid
 * for `n` reads.
 */
OrdisoStatus ordiso_isotonic_fit(const double *data, const double *weights, size_t n, double *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* ORDISO_H */
