#ifndef RUPTURE_LAB_H
#define RUPTURE_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes.
 */
typedef enum RlStatus {
  RL_OK = 0,
  RL_INVALID_INPUT = 1,
  RL_INVALID_GRID = 2,
  RL_OUT_OF_DOMAIN = 3,
  RL_UNSUPPORTED = 4,
  /**
   * A solver or continuation run failed to converge.
   */
  RL_NUMERICAL = 5,
  RL_IO = 6,
  RL_FORMAT = 7,
  RL_NULL_POINTER = 8,
  RL_PANIC = 9,
} RlStatus;

typedef enum RlDomainKind {
  RL_DOMAIN_RECTANGLE = 0,
  RL_DOMAIN_DISK = 1,
  RL_DOMAIN_ANNULUS = 2,
} RlDomainKind;

/**
 * Opaque scalar field on a grid.
 */
typedef struct RlField RlField;

/**
 * Planar domain. Rectangles use `origin` and `extent`; disks use `center`
 * and `outer`; annuli use `center`, `inner` and `outer`.
 */
typedef struct RlDomain {
  enum RlDomainKind kind;
  double origin[2];
  double extent[2];
  double center[2];
  double inner;
  double outer;
} RlDomain;

/**
 * Frequency data on one ball. `n` is NaN when `H` vanishes.
 */
typedef struct RlFrequency {
  double d;
  double h;
  double n;
  /**
   * Nonzero when `u Δu` is negligible in the ball.
   */
  int32_t interpretable;
} RlFrequency;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *rl_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rl_version(void);

/**
 * Array shape of the grid a domain produces at spacing `h`.
 *
 * # Safety
 * `domain` must point to a valid `RlDomain`; `rows` and `cols` must be
 * writable.
 */
enum RlStatus rl_domain_shape(const struct RlDomain *domain, double h, size_t *rows, size_t *cols);

/**
 * Field with the given node values (row-major, `rows * cols` of them).
 *
 * # Safety
 * `domain` must be valid, `values` must hold `len` doubles and `field`
 * must be writable. The returned handle is owned by the caller.
 */
enum RlStatus rl_field_new(const struct RlDomain *domain,
                           double h,
                           double p,
                           const double *values,
                           size_t len,
                           struct RlField **field);

/**
 * The homogeneous radial solution `c|x - x0|^{2/(p+1)}` sampled on a domain,
 * centered at the domain's `center`.
 *
 * # Safety
 * As for [`rl_field_new`].
 */
enum RlStatus rl_field_radial_exact(const struct RlDomain *domain,
                                    double h,
                                    double p,
                                    struct RlField **field);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `field` writable.
 */
enum RlStatus rl_field_read(const char *path_, struct RlField **field);

/**
 * Writes the field atomically.
 *
 * # Safety
 * `field` must be a live handle and `path` a NUL-terminated string.
 */
enum RlStatus rl_field_write(const struct RlField *field, const char *path_);

/**
 * Releases a field. NULL is ignored.
 *
 * # Safety
 * `field` must be NULL or a handle not yet freed.
 */
void rl_field_free(struct RlField *field);

/**
 * Borrows the node values. The pointer lives as long as the handle.
 *
 * # Safety
 * `field` must be a live handle; `values` and `len` writable.
 */
enum RlStatus rl_field_values(const struct RlField *field, const double **values, size_t *len);

/**
 * Exponent and grid spacing of a field.
 *
 * # Safety
 * `field` must be a live handle; `p` and `h` writable.
 */
enum RlStatus rl_field_params(const struct RlField *field, double *p, double *h);

/**
 * Solves `Δu = u^{-p}` with the non-interior values of `bc` as Dirichlet
 * data, starting from the harmonic extension. `max_iters = 0` and
 * `residual_tol <= 0` select the defaults. On `RL_NUMERICAL` the last
 * iterate is returned in `solution` when one exists (else NULL).
 *
 * # Safety
 * `bc` must be a live handle; `solution` writable; `iterations` and
 * `residual` may be NULL.
 */
enum RlStatus rl_solve_dirichlet(const struct RlField *bc,
                                 size_t max_iters,
                                 double residual_tol,
                                 struct RlField **solution,
                                 size_t *iterations,
                                 double *residual);

/**
 * Monotone energy `E(r; x)`.
 *
 * # Safety
 * `field` must be a live handle and `energy` writable.
 */
enum RlStatus rl_energy(const struct RlField *field, double x, double y, double r, double *energy);

/**
 * `D`, `H` and `N` on `B_r(x)`.
 *
 * # Safety
 * `field` must be a live handle and `result` writable.
 */
enum RlStatus rl_frequency(const struct RlField *field,
                           double x,
                           double y,
                           double r,
                           struct RlFrequency *result);

/**
 * Hölder seminorm over node pairs (exhaustive up to `budget` pairs, seeded
 * sampling beyond).
 *
 * # Safety
 * `field` must be a live handle and `seminorm` writable.
 */
enum RlStatus rl_holder_seminorm(const struct RlField *field,
                                 double exponent,
                                 size_t budget,
                                 uint64_t seed,
                                 double *seminorm);

/**
 * Sets `is_rupture` to 1 at a rupture point and 0 at a positive point.
 *
 * # Safety
 * `field` must be a live handle and `is_rupture` writable.
 */
enum RlStatus rl_classify_point(const struct RlField *field,
                                double x,
                                double y,
                                int32_t *is_rupture);

/**
 * Blow-up test at `(x, y)` over strictly decreasing scales. The center is
 * not classified first.
 *
 * # Safety
 * `field` must be a live handle, `lambdas` must hold `count` doubles, and
 * `homogeneous` and `worst` must be writable.
 */
enum RlStatus rl_blowup(const struct RlField *field,
                        double x,
                        double y,
                        const double *lambdas,
                        size_t count,
                        double tol,
                        int32_t *homogeneous,
                        double *worst);

/**
 * Number of connected components of `{u <= tau}`.
 *
 * # Safety
 * `field` must be a live handle and `count` writable.
 */
enum RlStatus rl_rupture_components(const struct RlField *field, double tau, size_t *count);

/**
 * Box-counting dimension of the rupture set over a decreasing threshold
 * sweep. `slope` is NaN when every sublevel set is empty.
 *
 * # Safety
 * `field` must be a live handle, `taus` must hold `count` doubles and
 * `slope` must be writable.
 */
enum RlStatus rl_rupture_dimension(const struct RlField *field,
                                   const double *taus,
                                   size_t count,
                                   double *slope);

/**
 * Pull-in continuation from `λ = 0` until the minimum gap reaches
 * `stop_gap`. Reports the first fold (NaN when none was crossed) and its
 * error bound.
 *
 * # Safety
 * `domain` must be valid; `lambda_star` and `error_bound` writable.
 */
enum RlStatus rl_continue_pullin(const struct RlDomain *domain,
                                 double h,
                                 double p,
                                 double stop_gap,
                                 double *lambda_star,
                                 double *error_bound);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RUPTURE_LAB_H */
