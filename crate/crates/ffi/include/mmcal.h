#ifndef MMCAL_H
#define MMCAL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MmcalStatus {
  MMCAL_STATUS_OK = 0,
  MMCAL_STATUS_NULL_POINTER = 1,
  MMCAL_STATUS_DIMENSION = 2,
  MMCAL_STATUS_SINGULAR = 3,
  MMCAL_STATUS_RANK_DEFICIENT = 4,
  MMCAL_STATUS_DEGENERATE_DENOMINATOR = 5,
  MMCAL_STATUS_NON_FINITE = 6,
  MMCAL_STATUS_PRECONDITION = 7,
  MMCAL_STATUS_PARSE = 8,
  MMCAL_STATUS_CONFIG = 9,
  MMCAL_STATUS_IO = 10,
  MMCAL_STATUS_CALLBACK_FAILED = 11,
  MMCAL_STATUS_PANIC = 12,
} MmcalStatus;

/**
 * Opaque 64-bit row-major matrix.
 */
typedef struct MmcalMatrix MmcalMatrix;

/**
 * Fills `y_out` (length `m`) with the unknown image measured by `a_recv`. Returns 0 on success.
 */
typedef int (*MmcalMeasureImageFn)(void *ctx,
                                   const struct MmcalMatrix *a_recv,
                                   double *y_out,
                                   size_t m);

/**
 * Fills `y_out` (length `m`) with the unknown matrix applied to `x` (length `n`). Returns 0 on success.
 */
typedef int (*MmcalMeasureMatrixFn)(void *ctx, const double *x, size_t n, double *y_out, size_t m);

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the next failing call.
 */
const char *mmcal_last_error_message(void);

/**
 * Copies `rows * cols` row-major values into a new matrix.
 *
 * # Safety
 * `data` must point to `rows * cols` readable doubles; `out` must be writable.
 */
enum MmcalStatus mmcal_matrix_new(size_t rows,
                                  size_t cols,
                                  const double *data,
                                  struct MmcalMatrix **out);

/**
 * # Safety
 * `out` must be writable.
 */
enum MmcalStatus mmcal_matrix_zeros(size_t rows, size_t cols, struct MmcalMatrix **out);

/**
 * Releases a matrix. Null is ignored.
 *
 * # Safety
 * `m` must come from this library and not be used afterwards.
 */
void mmcal_matrix_free(struct MmcalMatrix *m);

/**
 * # Safety
 * `m` must be a valid handle or null (which yields 0).
 */
size_t mmcal_matrix_rows(const struct MmcalMatrix *m);

/**
 * # Safety
 * `m` must be a valid handle or null (which yields 0).
 */
size_t mmcal_matrix_cols(const struct MmcalMatrix *m);

/**
 * Copies the row-major entries into `out`, which must hold exactly `rows * cols` values.
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
enum MmcalStatus mmcal_matrix_copy_data(const struct MmcalMatrix *m, double *out, size_t len);

/**
 * Reads a `.mmcal` or `.csv` matrix, converting to 64-bit.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum MmcalStatus mmcal_matrix_read(const char *path, struct MmcalMatrix **out);

/**
 * Writes a matrix; the extension selects `.csv` or the binary format.
 *
 * # Safety
 * `m` must be a valid handle and `path` a NUL-terminated string.
 */
enum MmcalStatus mmcal_matrix_write(const struct MmcalMatrix *m, const char *path);

/**
 * `(A A^T)^{-1}`.
 *
 * # Safety
 * `a` must be a valid handle; `out` must be writable.
 */
enum MmcalStatus mmcal_sigma_special(const struct MmcalMatrix *a, struct MmcalMatrix **out);

/**
 * Rank-one solution `y (y0^T S A) / (y0^T S y0)`; `y0` and `y` hold `m` values.
 *
 * # Safety
 * Pointers must be valid for the stated lengths; handles must be valid.
 */
enum MmcalStatus mmcal_mismatch_solution(const double *y0,
                                         const double *y,
                                         size_t m,
                                         const struct MmcalMatrix *sigma,
                                         const struct MmcalMatrix *a,
                                         struct MmcalMatrix **out);

/**
 * Matched solution for one unknown image reached through `measure`.
 *
 * `y_prime` holds `a.rows` values and `pm` holds `a.cols` values. `final_error`
 * may be null; otherwise it receives the last epoch's mean absolute error.
 *
 * # Safety
 * Pointers must be valid for the stated lengths; `measure` must honour its contract.
 */
enum MmcalStatus mmcal_algorithm1(const double *y_prime,
                                  const struct MmcalMatrix *a,
                                  const double *pm,
                                  size_t epochs,
                                  MmcalMeasureImageFn measure,
                                  void *ctx,
                                  struct MmcalMatrix **out,
                                  double *final_error);

/**
 * Calibration over the row space of `a`; calls `measure` `a.rows` times.
 *
 * # Safety
 * `a` must be a valid handle; `measure` must honour its contract.
 */
enum MmcalStatus mmcal_calibrate_mspace(const struct MmcalMatrix *a,
                                        MmcalMeasureMatrixFn measure,
                                        void *ctx,
                                        struct MmcalMatrix **out);

/**
 * Calibration over the whole pixel space; calls `measure` `a.cols` times.
 *
 * # Safety
 * `a` must be a valid handle; `measure` must honour its contract.
 */
enum MmcalStatus mmcal_calibrate_grouped(const struct MmcalMatrix *a,
                                         MmcalMeasureMatrixFn measure,
                                         void *ctx,
                                         struct MmcalMatrix **out);

/**
 * ℓ1 recovery from `y` (`a.rows` values) into `x_out` (`a.cols` values).
 *
 * `tau <= 0` selects the automatic weight. `iterations` may be null.
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum MmcalStatus mmcal_fista_l1(const double *y,
                                const struct MmcalMatrix *a,
                                double tau,
                                size_t max_iters,
                                double *x_out,
                                size_t *iterations);

/**
 * Mean absolute deviation of two length-`len` vectors.
 *
 * # Safety
 * `a` and `b` must point to `len` readable doubles; `out` must be writable.
 */
enum MmcalStatus mmcal_residual_error(const double *a, const double *b, size_t len, double *out);

/**
 * Applies a matrix: `y_out = m x` with `x` of length `m.cols` and `y_out` of length `m.rows`.
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum MmcalStatus mmcal_matrix_apply(const struct MmcalMatrix *m, const double *x, double *y_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MMCAL_H */
