#ifndef SRCID_H
#define SRCID_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SrcidStatus {
  SRCID_STATUS_OK = 0,
  SRCID_STATUS_NULL_POINTER = 1,
  SRCID_STATUS_INVALID_ARGUMENT = 2,
  SRCID_STATUS_DIMENSION = 3,
  SRCID_STATUS_INVALID_MESH = 4,
  SRCID_STATUS_NUMERICAL = 5,
  SRCID_STATUS_IO = 6,
  /**
   * Basis pursuit data outside the range of the operator.
   */
  SRCID_STATUS_INFEASIBLE = 7,
  /**
   * Iteration limit reached; the best iterate is still returned.
   */
  SRCID_STATUS_NOT_CONVERGED = 8,
  SRCID_STATUS_PANIC = 9,
} SrcidStatus;

typedef enum SrcidDomain {
  SRCID_DOMAIN_UNIT_SQUARE = 0,
  SRCID_DOMAIN_CROSS = 1,
} SrcidDomain;

typedef enum SrcidConductivity {
  /**
   * `sigma = value`.
   */
  SRCID_CONDUCTIVITY_CONSTANT = 0,
  /**
   * `sigma(x, y) = 2 + sin(x) cos(y)`; the value argument is ignored.
   */
  SRCID_CONDUCTIVITY_SINUSOIDAL = 1,
} SrcidConductivity;

typedef enum SrcidFormulation {
  /**
   * Fidelity `1/2 ||A x - b||^2`.
   */
  SRCID_FORMULATION_FORM_A = 0,
  /**
   * Fidelity `1/2 ||A_k^+ A x - A_k^+ b||^2`.
   */
  SRCID_FORMULATION_FORM_AD = 1,
} SrcidFormulation;

typedef struct SrcidForward SrcidForward;

/**
 * Forward matrix with its SVD, truncation level and weights.
 */
typedef struct SrcidInverse SrcidInverse;

typedef struct SrcidMesh SrcidMesh;

/**
 * Summary of a solve; the iterate itself goes to the caller's buffer.
 */
typedef struct SrcidSolveReport {
  double objective;
  double residual_norm;
  double optimality;
  size_t iterations;
  bool converged;
} SrcidSolveReport;

typedef struct SrcidCertificate {
  bool c1_feasible;
  bool c2_pass;
  /**
   * NaN when C.1 has no solution.
   */
  double c2_margin;
  double alpha_max;
  bool certificate_valid;
  bool injective_on_support;
  double sigma_min_support;
  bool disjoint;
  bool recovery_certified;
} SrcidCertificate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next call into the library on the same thread.
 */
const char *srcid_last_error_message(void);

/**
 * Static name of a status code.
 */
const char *srcid_status_name(enum SrcidStatus status);

const char *srcid_version(void);

/**
 * Structured triangulation of a reference domain. `grading_seed = 0`
 * keeps the grid uniform; any other value jitters interior vertices.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum SrcidStatus srcid_mesh_build(enum SrcidDomain domain,
                                  size_t divisions,
                                  uint64_t grading_seed,
                                  struct SrcidMesh **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` valid for writes.
 */
enum SrcidStatus srcid_mesh_load(const char *path_, struct SrcidMesh **out);

/**
 * # Safety
 * `mesh` must be a live handle and `path` NUL-terminated.
 */
enum SrcidStatus srcid_mesh_save(const struct SrcidMesh *mesh, const char *path_);

/**
 * Uniform red refinement: every triangle split into four.
 *
 * # Safety
 * `mesh` must be a live handle and `out` valid for writes.
 */
enum SrcidStatus srcid_mesh_refine(const struct SrcidMesh *mesh, struct SrcidMesh **out);

/**
 * # Safety
 * `mesh` must be null or a live handle.
 */
size_t srcid_mesh_vertex_count(const struct SrcidMesh *mesh);

/**
 * # Safety
 * `mesh` must be null or a live handle.
 */
size_t srcid_mesh_triangle_count(const struct SrcidMesh *mesh);

/**
 * # Safety
 * `mesh` must be null or a live handle.
 */
size_t srcid_mesh_boundary_count(const struct SrcidMesh *mesh);

/**
 * Interleaved coordinates `x0, y0, x1, y1, ...`; `len` must be twice the
 * vertex count.
 *
 * # Safety
 * `mesh` must be a live handle and `xy` valid for `len` writes.
 */
enum SrcidStatus srcid_mesh_vertices(const struct SrcidMesh *mesh, double *xy, size_t len);

/**
 * # Safety
 * `mesh` must be null or a handle not yet freed.
 */
void srcid_mesh_free(struct SrcidMesh *mesh);

/**
 * Assembles the P1 system on `mesh` and computes the dense forward matrix.
 *
 * # Safety
 * `mesh` must be a live handle and `out` valid for writes.
 */
enum SrcidStatus srcid_forward_build(const struct SrcidMesh *mesh,
                                     enum SrcidConductivity conductivity,
                                     double value,
                                     size_t quadrature_order,
                                     struct SrcidForward **out);

/**
 * Wraps a caller-supplied `m x n` column-major matrix. Rows are taken to be
 * observation points with unit weight.
 *
 * # Safety
 * `data` must be valid for `m * n` reads and `out` valid for writes.
 */
enum SrcidStatus srcid_forward_from_matrix(const double *data,
                                           size_t m,
                                           size_t n,
                                           struct SrcidForward **out);

/**
 * # Safety
 * `forward` must be null or a live handle.
 */
size_t srcid_forward_rows(const struct SrcidForward *forward);

/**
 * # Safety
 * `forward` must be null or a live handle.
 */
size_t srcid_forward_cols(const struct SrcidForward *forward);

/**
 * Copies the matrix in column-major order; `len` must be `rows * cols`.
 *
 * # Safety
 * `forward` must be a live handle and `out` valid for `len` writes.
 */
enum SrcidStatus srcid_forward_matrix(const struct SrcidForward *forward, double *out, size_t len);

/**
 * Mesh vertex index of every row.
 *
 * # Safety
 * `forward` must be a live handle and `out` valid for `len` writes.
 */
enum SrcidStatus srcid_forward_trace_order(const struct SrcidForward *forward,
                                           size_t *out,
                                           size_t len);

/**
 * `b = A x`.
 *
 * # Safety
 * `forward` must be a live handle, `x` valid for `n` reads and `b` for `m`
 * writes.
 */
enum SrcidStatus srcid_forward_apply(const struct SrcidForward *forward,
                                     const double *x,
                                     size_t n,
                                     double *b,
                                     size_t m);

/**
 * # Safety
 * `forward` must be null or a handle not yet freed.
 */
void srcid_forward_free(struct SrcidForward *forward);

/**
 * SVD of the forward matrix with truncation level `k`; `k = 0` selects the
 * numerical rank. The forward model is copied.
 *
 * # Safety
 * `forward` must be a live handle and `out` valid for writes.
 */
enum SrcidStatus srcid_inverse_new(const struct SrcidForward *forward,
                                   size_t k,
                                   struct SrcidInverse **out);

/**
 * # Safety
 * `inverse` must be null or a live handle.
 */
size_t srcid_inverse_rank(const struct SrcidInverse *inverse);

/**
 * # Safety
 * `inverse` must be null or a live handle.
 */
size_t srcid_inverse_k(const struct SrcidInverse *inverse);

/**
 * Number of singular values, `min(rows, cols)`.
 *
 * # Safety
 * `inverse` must be null or a live handle.
 */
size_t srcid_inverse_singular_value_count(const struct SrcidInverse *inverse);

/**
 * Singular values in nonincreasing order.
 *
 * # Safety
 * `inverse` must be a live handle and `out` valid for `len` writes.
 */
enum SrcidStatus srcid_inverse_singular_values(const struct SrcidInverse *inverse,
                                               double *out,
                                               size_t len);

/**
 * Diagonal weights `w_i = ||P_k e_i||`.
 *
 * # Safety
 * `inverse` must be a live handle and `out` valid for `len` writes.
 */
enum SrcidStatus srcid_inverse_weights(const struct SrcidInverse *inverse, double *out, size_t len);

/**
 * # Safety
 * `inverse` must be null or a handle not yet freed.
 */
void srcid_inverse_free(struct SrcidInverse *inverse);

/**
 * Weighted basis pursuit `min ||W x||_1` subject to `A x = b`. With
 * `weighted = false` the plain l1 norm is used. Returns
 * `SRCID_STATUS_INFEASIBLE` when `b` is outside the range of `A`.
 *
 * # Safety
 * `inverse` must be a live handle, `b` valid for `m` reads, `x` for `n`
 * writes; `report` may be null.
 */
enum SrcidStatus srcid_solve_bp(const struct SrcidInverse *inverse,
                                bool weighted,
                                const double *b,
                                size_t m,
                                double *x,
                                size_t n,
                                struct SrcidSolveReport *report);

/**
 * Weighted LASSO `1/2 ||G x - d||^2 + alpha ||W x||_1` with the fidelity
 * chosen by `formulation`.
 *
 * # Safety
 * `inverse` must be a live handle, `b` valid for `m` reads, `x` for `n`
 * writes; `report` may be null.
 */
enum SrcidStatus srcid_solve_lasso(const struct SrcidInverse *inverse,
                                   enum SrcidFormulation formulation,
                                   bool weighted,
                                   double alpha,
                                   const double *b,
                                   size_t m,
                                   double *x,
                                   size_t n,
                                   struct SrcidSolveReport *report);

/**
 * Recoverability checks for the source with nonzero `values` at the
 * zero-based indices `support`.
 *
 * # Safety
 * `inverse` must be a live handle, `support` and `values` valid for `len`
 * reads and `report` valid for writes.
 */
enum SrcidStatus srcid_certify(const struct SrcidInverse *inverse,
                               const size_t *support,
                               const double *values,
                               size_t len,
                               struct SrcidCertificate *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SRCID_H */
