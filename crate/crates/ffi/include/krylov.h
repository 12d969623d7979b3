#ifndef KRYLOV_H
#define KRYLOV_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum KrylovError {
  KRYLOV_ERROR_OK = 0,
  KRYLOV_ERROR_NULL_POINTER = 1,
  KRYLOV_ERROR_INVALID_ARGUMENT = 2,
  KRYLOV_ERROR_DIMENSION_MISMATCH = 3,
  /**
   * The matrix is unsuitable for the requested method or preconditioner.
   */
  KRYLOV_ERROR_NUMERICAL = 4,
  KRYLOV_ERROR_PANIC = 5,
} KrylovError;

typedef enum KrylovFormat {
  KRYLOV_FORMAT_ROW = 0,
  KRYLOV_FORMAT_COL = 1,
  KRYLOV_FORMAT_DIAG = 2,
} KrylovFormat;

typedef enum KrylovStatus {
  KRYLOV_STATUS_CONVERGED = 0,
  KRYLOV_STATUS_MAX_ITER = 1,
  KRYLOV_STATUS_BREAKDOWN = 2,
} KrylovStatus;

typedef enum KrylovTolKind {
  KRYLOV_TOL_KIND_ABS = 0,
  KRYLOV_TOL_KIND_REL_TO_B = 1,
  KRYLOV_TOL_KIND_REL_TO_R0 = 2,
} KrylovTolKind;

typedef struct KrylovMatrix KrylovMatrix;

typedef struct KrylovReport KrylovReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *krylov_last_error(void);

/**
 * Builds an `n × n` matrix from `nnz` zero-based triplets. Duplicates are
 * summed.
 *
 * # Safety
 * `rows`, `cols` and `vals` must point to `nnz` readable elements and `out`
 * to a writable handle slot.
 */
enum KrylovError krylov_matrix_from_triplets(uintptr_t n,
                                             uintptr_t nnz,
                                             const uintptr_t *rows,
                                             const uintptr_t *cols,
                                             const double *vals,
                                             enum KrylovFormat format,
                                             struct KrylovMatrix **out);

/**
 * # Safety
 * `m` must be null or a handle from `krylov_matrix_from_triplets` not yet freed.
 */
void krylov_matrix_free(struct KrylovMatrix *m);

/**
 * Order of the matrix, 0 for a null handle.
 *
 * # Safety
 * `m` must be null or a live matrix handle.
 */
uintptr_t krylov_matrix_n(const struct KrylovMatrix *m);

/**
 * Solves `A x = b`. `method` and `precond` use the CLI syntax, e.g.
 * `"gmres,restart=20"` and `"ic"`; a null `precond` means none. `x0` may
 * be null for a zero start, and `max_iter = 0` selects the method default.
 *
 * Nonconvergence and breakdown are not errors: they are reported through
 * `krylov_report_status`.
 *
 * # Safety
 * `m` must be a live matrix handle, `b` (and `x0` when non-null) must hold
 * `n` values, strings must be NUL-terminated and `out` writable.
 */
enum KrylovError krylov_solve(const struct KrylovMatrix *m,
                              const double *b,
                              const double *x0,
                              const char *method,
                              const char *precond,
                              double tol,
                              enum KrylovTolKind tol_kind,
                              uintptr_t max_iter,
                              struct KrylovReport **out);

/**
 * # Safety
 * `r` must be null or a report handle not yet freed.
 */
void krylov_report_free(struct KrylovReport *r);

/**
 * # Safety
 * `r` must be a live report handle.
 */
enum KrylovStatus krylov_report_status(const struct KrylovReport *r);

/**
 * Breakdown kind such as `"serious_breakdown"`, or null when the run did
 * not break down. Owned by the report.
 *
 * # Safety
 * `r` must be a live report handle.
 */
const char *krylov_report_breakdown(const struct KrylovReport *r);

/**
 * # Safety
 * `r` must be a live report handle.
 */
uintptr_t krylov_report_iterations(const struct KrylovReport *r);

/**
 * Number of residual-history entries (iterations + 1).
 *
 * # Safety
 * `r` must be a live report handle.
 */
uintptr_t krylov_report_history_len(const struct KrylovReport *r);

/**
 * Copies up to `len` history entries into `buf`; returns the number copied.
 *
 * # Safety
 * `r` must be a live report handle and `buf` writable for `len` values.
 */
uintptr_t krylov_report_history(const struct KrylovReport *r, double *buf, uintptr_t len);

/**
 * Copies up to `len` solution entries into `buf`; returns the number copied.
 *
 * # Safety
 * `r` must be a live report handle and `buf` writable for `len` values.
 */
uintptr_t krylov_report_solution(const struct KrylovReport *r, double *buf, uintptr_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KRYLOV_H */
