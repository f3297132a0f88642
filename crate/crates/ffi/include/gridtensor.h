#ifndef GRIDTENSOR_H
#define GRIDTENSOR_H

/* Generated by cbindgen from the gridtensor-ffi crate. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GtBinaryOp {
  GT_BINARY_OP_ADD = 0,
  GT_BINARY_OP_HADAMARD = 1,
  /**
   * Uses the mesh size `h`.
   */
  GT_BINARY_OP_CONVOLVE = 2,
} GtBinaryOp;

typedef enum GtStatus {
  GT_STATUS_OK = 0,
  GT_STATUS_INVALID_ARGUMENT = 1,
  GT_STATUS_OUT_OF_DOMAIN = 2,
  GT_STATUS_SNAP_FAILURE = 3,
  GT_STATUS_SIZE_GUARD = 4,
  GT_STATUS_DIVISION_GUARD = 5,
  GT_STATUS_NUMERICAL = 6,
  GT_STATUS_UNATTAINABLE = 7,
  GT_STATUS_PAIR_GUARD = 8,
  GT_STATUS_PARSE = 9,
  GT_STATUS_NULL_POINTER = 10,
  GT_STATUS_NOT_CONVERGED = 11,
  GT_STATUS_PANIC = 12,
} GtStatus;

/**
 * Three-dimensional tensor in canonical (CP) format.
 */
typedef struct GtCanonical GtCanonical;

/**
 * Low-rank Newton kernel on a cubic grid.
 */
typedef struct GtKernel GtKernel;

/**
 * Converged (or not) restricted Hartree-Fock state.
 */
typedef struct GtScf GtScf;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into this library from the same thread.
 */
const char *gt_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *gt_version(void);

/**
 * Newton kernel on the `n`-point grid of half-width `half_width` with
 * relative accuracy `eps`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum GtStatus gt_kernel_new(size_t n, double half_width, double eps, struct GtKernel **out);

/**
 * # Safety
 * `k` must come from [`gt_kernel_new`] and not be used afterwards.
 */
void gt_kernel_free(struct GtKernel *k);

/**
 * # Safety
 * `k` must be a live handle and `out` valid for writes.
 */
enum GtStatus gt_kernel_rank(const struct GtKernel *k, size_t *out);

/**
 * Cell average of `1/r` represented at node `(i, j, l)`.
 *
 * # Safety
 * `k` must be a live handle and `out` valid for writes.
 */
enum GtStatus gt_kernel_value(const struct GtKernel *k, size_t i, size_t j, size_t l, double *out);

/**
 * Canonical tensor from `rank` weights and three column-major factor
 * arrays of `dims[l] * rank` entries each.
 *
 * # Safety
 * `dims` must point to 3 values, `weights` to `rank`, each factor to
 * `dims[l] * rank`, and `out` must be valid for writes.
 */
enum GtStatus gt_canonical_new(const size_t *dims,
                               size_t rank,
                               const double *weights,
                               const double *f0,
                               const double *f1,
                               const double *f2,
                               struct GtCanonical **out);

/**
 * # Safety
 * `t` must come from this library and not be used afterwards.
 */
void gt_canonical_free(struct GtCanonical *t);

/**
 * # Safety
 * `t` must be a live handle and `out` valid for writes.
 */
enum GtStatus gt_canonical_rank(const struct GtCanonical *t, size_t *out);

/**
 * # Safety
 * `t` must be a live handle and `out` valid for writes.
 */
enum GtStatus gt_canonical_get(const struct GtCanonical *t,
                               size_t i,
                               size_t j,
                               size_t k,
                               double *out);

/**
 * Result of `op(a, b)` as a new handle.
 *
 * # Safety
 * `a`, `b` must be live handles and `out` valid for writes.
 */
enum GtStatus gt_canonical_binary(enum GtBinaryOp op,
                                  const struct GtCanonical *a,
                                  const struct GtCanonical *b,
                                  double h,
                                  struct GtCanonical **out);

/**
 * # Safety
 * `a`, `b` must be live handles and `out` valid for writes.
 */
enum GtStatus gt_canonical_dot(const struct GtCanonical *a,
                               const struct GtCanonical *b,
                               double *out);

/**
 * Interaction energy of an `counts[0] x counts[1] x counts[2]` lattice of
 * charges `z` at the given spacing; `oracle != 0` selects the direct sum.
 *
 * # Safety
 * `counts` must point to 3 values and `out` be valid for writes.
 */
enum GtStatus gt_lattice_energy(const size_t *counts,
                                double spacing,
                                double z,
                                size_t n0,
                                double eps,
                                int32_t oracle,
                                double *out);

/**
 * Largest QTT rank of a length-`2^L` vector at relative accuracy `eps`.
 *
 * # Safety
 * `x` must point to `len` values and `out` be valid for writes.
 */
enum GtStatus gt_qtt_max_rank(const double *x, size_t len, double eps, size_t *out);

/**
 * Restricted Hartree-Fock from geometry and basis text in the CLI file
 * formats, on the `n`-point cubic grid of half-width `half_width`.
 * A run that does not converge still yields a handle and returns
 * `NotConverged`.
 *
 * # Safety
 * Strings must be NUL-terminated and `out` valid for writes.
 */
enum GtStatus gt_scf_run(const char *geometry,
                         const char *basis,
                         size_t n,
                         double half_width,
                         size_t max_iter,
                         struct GtScf **out);

/**
 * # Safety
 * `s` must come from [`gt_scf_run`] and not be used afterwards.
 */
void gt_scf_free(struct GtScf *s);

/**
 * Total energy including nuclear repulsion.
 *
 * # Safety
 * `s` must be a live handle and `out` valid for writes.
 */
enum GtStatus gt_scf_energy(const struct GtScf *s, double *out);

/**
 * # Safety
 * `s` must be a live handle and `out` valid for writes.
 */
enum GtStatus gt_scf_iterations(const struct GtScf *s, size_t *out);

/**
 * MP2 correlation energy of the SCF state.
 *
 * # Safety
 * `s` must be a live handle and `out` valid for writes.
 */
enum GtStatus gt_scf_mp2(const struct GtScf *s, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GRIDTENSOR_H */
