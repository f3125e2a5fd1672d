#ifndef BNMTF_H
#define BNMTF_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Values accepted by [`BnmtfFitOptions::engine`].
 */
typedef enum BnmtfEngine {
  BNMTF_ENGINE_GIBBS = 0,
  BNMTF_ENGINE_VB = 1,
  BNMTF_ENGINE_ICM = 2,
  BNMTF_ENGINE_NP = 3,
} BnmtfEngine;

/**
 * Values accepted by [`BnmtfFitOptions::init`].
 */
typedef enum BnmtfInit {
  BNMTF_INIT_PRIOR_MEAN = 0,
  BNMTF_INIT_PRIOR_DRAW = 1,
  BNMTF_INIT_K_MEANS = 2,
} BnmtfInit;

typedef enum BnmtfStatus {
  BNMTF_STATUS_OK = 0,
  BNMTF_STATUS_NULL_POINTER = 1,
  BNMTF_STATUS_INVALID_ARGUMENT = 2,
  BNMTF_STATUS_SHAPE = 3,
  BNMTF_STATUS_NO_OBSERVATIONS = 4,
  BNMTF_STATUS_NON_FINITE = 5,
  BNMTF_STATUS_NUMERIC = 6,
  BNMTF_STATUS_IO = 7,
  BNMTF_STATUS_PARSE = 8,
  BNMTF_STATUS_BUFFER_SIZE = 9,
  BNMTF_STATUS_PANIC = 10,
} BnmtfStatus;

/**
 * A fitted model.
 */
typedef struct BnmtfFit BnmtfFit;

/**
 * A partially observed matrix.
 */
typedef struct BnmtfMatrix BnmtfMatrix;

/**
 * Fit settings. Start from [`bnmtf_fit_options_default`].
 */
typedef struct BnmtfFitOptions {
  /**
   * A [`BnmtfEngine`] value.
   */
  uint32_t engine;
  size_t k;
  /**
   * 0 selects the two-factor model.
   */
  size_t l;
  size_t iterations;
  /**
   * Negative means four fifths of `iterations`.
   */
  int64_t burn_in;
  size_t thinning;
  double tol;
  double lambda;
  double alpha;
  double beta;
  /**
   * A [`BnmtfInit`] value.
   */
  uint32_t init;
  uint64_t seed;
} BnmtfFitOptions;

typedef struct BnmtfQuality {
  double mse;
  double loglik;
  /**
   * NaN unless `has_elbo`.
   */
  double elbo;
  bool has_elbo;
  double aic;
  double bic;
  size_t k_free;
} BnmtfQuality;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *bnmtf_version(void);

/**
 * Message of the last failed call on this thread, or NULL after a success.
 * The pointer stays valid until the next call into the library on this thread.
 */
const char *bnmtf_last_error_message(void);

/**
 * Builds a matrix from `rows * cols` row-major values. `mask` may be NULL
 * (everything observed); otherwise a nonzero byte marks an observed entry.
 *
 * # Safety
 * `values` must point to `rows * cols` doubles and `mask`, when not NULL, to
 * as many bytes. `out_matrix` must be writable.
 */
enum BnmtfStatus bnmtf_matrix_new(const double *values,
                                  const uint8_t *mask,
                                  size_t rows,
                                  size_t cols,
                                  struct BnmtfMatrix **out_matrix);

/**
 * Reads a header-less CSV file; empty fields and `NA` are missing.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out_matrix` writable.
 */
enum BnmtfStatus bnmtf_matrix_from_csv(const char *path, struct BnmtfMatrix **out_matrix);

/**
 * # Safety
 * `matrix` must be a live handle; `rows` and `cols` writable.
 */
enum BnmtfStatus bnmtf_matrix_shape(const struct BnmtfMatrix *matrix, size_t *rows, size_t *cols);

/**
 * Releases a matrix. NULL is ignored.
 *
 * # Safety
 * `matrix` must come from this library and not be used afterwards.
 */
void bnmtf_matrix_free(struct BnmtfMatrix *matrix);

/**
 * Fills `options` with the library defaults: variational Bayes, K = 10,
 * 1000 iterations, unit priors.
 *
 * # Safety
 * `options` must be writable.
 */
enum BnmtfStatus bnmtf_fit_options_default(struct BnmtfFitOptions *options);

/**
 * Fits a model to `matrix`.
 *
 * # Safety
 * `matrix` must be a live handle, `options` readable and `out_fit` writable.
 */
enum BnmtfStatus bnmtf_fit(const struct BnmtfMatrix *matrix,
                           const struct BnmtfFitOptions *options,
                           struct BnmtfFit **out_fit);

/**
 * Releases a fit. NULL is ignored.
 *
 * # Safety
 * `fit` must come from this library and not be used afterwards.
 */
void bnmtf_fit_free(struct BnmtfFit *fit);

/**
 * Copies the row-major prediction matrix into `out`, which must hold exactly
 * rows × cols values of the fitted matrix.
 *
 * # Safety
 * `fit` must be a live handle and `out` must point to `len` doubles.
 */
enum BnmtfStatus bnmtf_fit_predict(const struct BnmtfFit *fit, double *out, size_t len);

/**
 * Scores the fit on the observed entries of `matrix`.
 *
 * # Safety
 * Both handles must be live and `out_quality` writable.
 */
enum BnmtfStatus bnmtf_fit_quality(const struct BnmtfFit *fit,
                                   const struct BnmtfMatrix *matrix,
                                   struct BnmtfQuality *out_quality);

/**
 * Noise precision of the fit.
 *
 * # Safety
 * `fit` must be a live handle and `out_tau` writable.
 */
enum BnmtfStatus bnmtf_fit_tau(const struct BnmtfFit *fit, double *out_tau);

/**
 * Number of recorded iterations.
 *
 * # Safety
 * `fit` must be a live handle and `out_len` writable.
 */
enum BnmtfStatus bnmtf_fit_trace_len(const struct BnmtfFit *fit, size_t *out_len);

/**
 * Training MSE per iteration; `len` must equal the trace length.
 *
 * # Safety
 * `fit` must be a live handle and `out` must point to `len` doubles.
 */
enum BnmtfStatus bnmtf_fit_trace_mse(const struct BnmtfFit *fit, double *out, size_t len);

/**
 * ELBO per iteration, variational Bayes fits only.
 *
 * # Safety
 * `fit` must be a live handle and `out` must point to `len` doubles.
 */
enum BnmtfStatus bnmtf_fit_trace_elbo(const struct BnmtfFit *fit, double *out, size_t len);

/**
 * Mean and variance of a normal with location `mu` and precision `tau`
 * truncated below at zero.
 *
 * # Safety
 * `out_mean` and `out_var` must be writable.
 */
enum BnmtfStatus bnmtf_tn_mean_var(double mu, double tau, double *out_mean, double *out_var);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BNMTF_H */
