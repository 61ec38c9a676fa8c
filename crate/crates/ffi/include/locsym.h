#ifndef LOCSYM_H
#define LOCSYM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum LsStatus {
  LS_STATUS_OK = 0,
  LS_STATUS_NULL_POINTER = 1,
  LS_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Non-positive asymptote, degenerate cell or not a Bloch state.
   */
  LS_STATUS_PHYSICS_PRECONDITION = 3,
  /**
   * Field mapping requested on a zero-current state.
   */
  LS_STATUS_ZERO_CURRENT = 4,
  /**
   * The output buffer is too small; the required size was reported.
   */
  LS_STATUS_BUFFER_TOO_SMALL = 5,
  LS_STATUS_PANIC = 6,
} LsStatus;

typedef enum LsIncidence {
  LS_INCIDENCE_LEFT = 0,
  LS_INCIDENCE_RIGHT = 1,
} LsIncidence;

/**
 * Opaque piecewise-constant profile.
 */
typedef struct LsProfile LsProfile;

/**
 * Opaque solved scattering state.
 */
typedef struct LsState LsState;

typedef struct LsComplex {
  double re;
  double im;
} LsComplex;

/**
 * `A(x)` and `A'(x)`.
 */
typedef struct LsFieldSample {
  struct LsComplex a_value;
  struct LsComplex a_deriv;
} LsFieldSample;

/**
 * Invariant currents of one transform on one interval.
 */
typedef struct LsInvariantPair {
  struct LsComplex q;
  struct LsComplex q_tilde;
  double j;
  int32_t sigma;
  double rho;
  double domain_start;
  double domain_end;
  /**
   * Relative spread of `Q`, `Q̃` over the samples.
   */
  double constancy_residual;
  /**
   * Reference magnitude of all relative tolerances.
   */
  double scale;
} LsInvariantPair;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length plus one.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t ls_last_error_message(char *buf, size_t len);

/**
 * Builds a profile from `n` slabs given by left edges, widths and values of
 * `U`, with asymptotic values `u_left`, `u_right`.
 *
 * # Safety
 * The three arrays must hold `n` doubles (they may be null if `n == 0`);
 * `out` must be valid for one write.
 */
enum LsStatus ls_profile_new(const double *x_left,
                             const double *widths,
                             const double *values,
                             size_t n,
                             double u_left,
                             double u_right,
                             struct LsProfile **out);

/**
 * # Safety
 * `profile` must be null or come from [`ls_profile_new`] and not be freed.
 */
void ls_profile_free(struct LsProfile *profile);

/**
 * `U(x)`, right-continuous at breakpoints.
 *
 * # Safety
 * `profile` must be a live handle; `out` valid for one write.
 */
enum LsStatus ls_profile_eval_u(const struct LsProfile *profile, double x, double *out);

/**
 * Symmetry set of `F(x) = σx + ρ` inside `[box_start, box_end]` as
 * `count` intervals stored as `(start, end)` pairs in `buf`.
 * A negative `tol_u` selects the default tolerance.
 *
 * If `capacity` (in intervals) is too small, `*count` receives the
 * required number and [`LsStatus::BufferTooSmall`] is returned.
 *
 * # Safety
 * `buf` must be valid for `2 * capacity` doubles (or null if `capacity == 0`);
 * `count` valid for one write.
 */
enum LsStatus ls_symmetry_set(const struct LsProfile *profile,
                              int32_t sigma,
                              double rho,
                              double tol_u,
                              double box_start,
                              double box_end,
                              double *buf,
                              size_t capacity,
                              size_t *count);

/**
 * Solves the one-sided scattering problem.
 *
 * # Safety
 * `profile` must be a live handle; `out` valid for one write.
 */
enum LsStatus ls_solve(const struct LsProfile *profile,
                       enum LsIncidence incidence,
                       struct LsState **out);

/**
 * # Safety
 * `state` must be null or come from [`ls_solve`] and not be freed.
 */
void ls_state_free(struct LsState *state);

/**
 * Transmission amplitude `t`.
 *
 * # Safety
 * `state` must be a live handle; `out` valid for one write.
 */
enum LsStatus ls_state_transmission(const struct LsState *state, struct LsComplex *out);

/**
 * Reflection amplitude `r`.
 *
 * # Safety
 * `state` must be a live handle; `out` valid for one write.
 */
enum LsStatus ls_state_reflection(const struct LsState *state, struct LsComplex *out);

/**
 * `A(x)` and `A'(x)`.
 *
 * # Safety
 * `state` must be a live handle; `out` valid for one write.
 */
enum LsStatus ls_state_field_at(const struct LsState *state, double x, struct LsFieldSample *out);

/**
 * `J(x) = Im(A* A')`.
 *
 * # Safety
 * `state` must be a live handle; `out` valid for one write.
 */
enum LsStatus ls_state_current(const struct LsState *state, double x, double *out);

/**
 * `Q(x)` for `F(x) = σx + ρ`.
 *
 * # Safety
 * `state` must be a live handle; `out` valid for one write.
 */
enum LsStatus ls_q_at(const struct LsState *state,
                      int32_t sigma,
                      double rho,
                      double x,
                      struct LsComplex *out);

/**
 * `Q̃(x)` for `F(x) = σx + ρ`.
 *
 * # Safety
 * `state` must be a live handle; `out` valid for one write.
 */
enum LsStatus ls_qtilde_at(const struct LsState *state,
                           int32_t sigma,
                           double rho,
                           double x,
                           struct LsComplex *out);

/**
 * Averaged invariants of `F(x) = σx + ρ` over `[start, end]` from
 * `n_samples >= 2` points.
 *
 * # Safety
 * `state` must be a live handle; `out` valid for one write.
 */
enum LsStatus ls_invariant_pair(const struct LsState *state,
                                int32_t sigma,
                                double rho,
                                double start,
                                double end,
                                size_t n_samples,
                                struct LsInvariantPair *out);

/**
 * Predicted `A(F(x))` from the invariants and the sample at `x`.
 * Returns [`LsStatus::ZeroCurrent`] when `|J|` is below the collapse threshold.
 *
 * # Safety
 * `pair` must be valid for reads; `out` valid for one write.
 */
enum LsStatus ls_map_field(const struct LsInvariantPair *pair,
                           struct LsFieldSample sample,
                           struct LsComplex *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LOCSYM_H */
