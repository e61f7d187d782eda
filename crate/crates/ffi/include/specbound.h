#ifndef SPECBOUND_H
#define SPECBOUND_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum SbStatus {
  SB_STATUS_OK = 0,
  /**
   * Malformed input: file contents, weight string, argument ranges.
   */
  SB_STATUS_PARSE = 2,
  /**
   * Input outside the domain of the operation (non-square, on spectrum, ...).
   */
  SB_STATUS_MATH_DOMAIN = 3,
  /**
   * A series or decomposition failed to converge.
   */
  SB_STATUS_CONVERGENCE = 4,
  /**
   * A required pointer argument was null or a string was not UTF-8.
   */
  SB_STATUS_INVALID_POINTER = 5,
  /**
   * Internal panic; the handle arguments should be considered poisoned.
   */
  SB_STATUS_PANIC = 6,
} SbStatus;

/**
 * How the departure budget is computed.
 */
typedef enum SbStrategy {
  SB_STRATEGY_TWO_GAUGE = 0,
  SB_STRATEGY_MODULUS_DESCENDING = 1,
  SB_STRATEGY_SEARCH_SMALL = 2,
} SbStrategy;

/**
 * Opaque square or rectangular complex matrix.
 */
typedef struct SbMatrix SbMatrix;

/**
 * Opaque weight sequence together with its bound function.
 */
typedef struct SbWeight SbWeight;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or an empty string.
 * The pointer stays valid until the next `sb_*` call on the same thread.
 */
const char *sb_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sb_version(void);

/**
 * Builds a `rows × cols` matrix from row-major real and imaginary parts.
 * `im` may be null for a real matrix.
 *
 * # Safety
 * `re` (and `im` if non-null) must point to `rows * cols` doubles; `out`
 * must be writable.
 */
enum SbStatus sb_matrix_new(size_t rows,
                            size_t cols,
                            const double *re,
                            const double *im,
                            struct SbMatrix **out);

/**
 * Reads a Matrix Market or CSV file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum SbStatus sb_matrix_read(const char *path, struct SbMatrix **out);

/**
 * # Safety
 * `m` must be null or a handle from this library not yet freed.
 */
void sb_matrix_free(struct SbMatrix *m);

/**
 * # Safety
 * `m` must be a live handle; `rows` and `cols` must be writable.
 */
enum SbStatus sb_matrix_dims(const struct SbMatrix *m, size_t *rows, size_t *cols);

/**
 * Parses a weight string (`sl:p=1`, `exp:a=1,alpha=1`, `explicit:1,0.5`) and
 * prepares its bound function with constant `dostanic_c`.
 *
 * # Safety
 * `spec` must be a NUL-terminated string; `out` must be writable.
 */
enum SbStatus sb_weight_parse(const char *spec, double dostanic_c, struct SbWeight **out);

/**
 * # Safety
 * `w` must be null or a handle from this library not yet freed.
 */
void sb_weight_free(struct SbWeight *w);

/**
 * `max_k s_k / w_k`; may be `+inf`.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum SbStatus sb_gauge(const struct SbMatrix *m, const struct SbWeight *w, double *out);

/**
 * Upper bound on the departure from normality.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum SbStatus sb_departure_budget(const struct SbMatrix *m,
                                  const struct SbWeight *w,
                                  enum SbStrategy strategy,
                                  double *out);

/**
 * Perturbation radius function `H(r)`.
 *
 * # Safety
 * `w` must be live; `out` must be writable.
 */
enum SbStatus sb_h(const struct SbWeight *w, double r, double *out);

/**
 * Upper bound on `‖(zI − A)⁻¹‖` at `z = re + i·im`.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum SbStatus sb_resolvent_bound(const struct SbMatrix *m,
                                 const struct SbWeight *w,
                                 enum SbStrategy strategy,
                                 double re,
                                 double im,
                                 double *out);

/**
 * Certified bound on the distance between `σ(A)` and `σ(B)`: Hausdorff when
 * `symmetric` is nonzero, otherwise the variation of `σ(B)` from `σ(A)`.
 * When `observed` is non-null it receives the measured distance.
 *
 * # Safety
 * Handles must be live; `out` must be writable; `observed` may be null.
 */
enum SbStatus sb_distance_bound(const struct SbMatrix *a,
                                const struct SbMatrix *b,
                                const struct SbWeight *w,
                                enum SbStrategy strategy,
                                int32_t symmetric,
                                double *out,
                                double *observed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPECBOUND_H */
