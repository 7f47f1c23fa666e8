#ifndef AMALGAM_H
#define AMALGAM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result of every fallible call.
 */
typedef enum AmalgamStatus {
  AMALGAM_STATUS_OK = 0,
  AMALGAM_STATUS_NULL_POINTER = 1,
  AMALGAM_STATUS_INVALID_ARGUMENT = 2,
  AMALGAM_STATUS_INVALID_MEASURE = 3,
  AMALGAM_STATUS_TRIVIAL_SPACE = 4,
  AMALGAM_STATUS_HYPOTHESIS = 5,
  AMALGAM_STATUS_NUMERICAL = 6,
  AMALGAM_STATUS_CONFIG = 7,
  AMALGAM_STATUS_INTERNAL = 8,
  AMALGAM_STATUS_PANIC = 9,
} AmalgamStatus;

/*
 A real function with bounded effective support.
 */
typedef struct AmalgamFunction AmalgamFunction;

/*
 An even, radially nonincreasing kernel.
 */
typedef struct AmalgamKernel AmalgamKernel;

/*
 A Radon measure on the line.
 */
typedef struct AmalgamMeasure AmalgamMeasure;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failure on this thread, or null. The pointer stays
 valid until the next failing call on the same thread.
 */
const char *amalgam_last_error(void);

/*
 Static description of a status code.
 */
const char *amalgam_status_name(enum AmalgamStatus status);

const char *amalgam_version(void);

/*
 # Safety
 `out` must be a valid pointer.
 */
enum AmalgamStatus amalgam_measure_lebesgue(struct AmalgamMeasure **out);

/*
 `|x|^{-a} dx`, `0 < a < 1`.

 # Safety
 `out` must be a valid pointer.
 */
enum AmalgamStatus amalgam_measure_power(double a, struct AmalgamMeasure **out);

/*
 Shorthand (`lebesgue`, `power:0.5`) or a JSON measure block.

 # Safety
 `spec` must be a NUL-terminated string and `out` a valid pointer.
 */
enum AmalgamStatus amalgam_measure_parse(const char *spec, struct AmalgamMeasure **out);

/*
 # Safety
 `m` must be null or a handle from this library, not yet freed.
 */
void amalgam_measure_free(struct AmalgamMeasure *m);

/*
 `F(x)`, the measure coordinate of `x`.

 # Safety
 `m` must be a live handle and `out` a valid pointer.
 */
enum AmalgamStatus amalgam_measure_cdf(const struct AmalgamMeasure *m, double x, double *out);

/*
 # Safety
 `m` must be a live handle and `out` a valid pointer.
 */
enum AmalgamStatus amalgam_measure_inv_cdf(const struct AmalgamMeasure *m, double t, double *out);

/*
 `μ([a, b))`.

 # Safety
 `m` must be a live handle and `out` a valid pointer.
 */
enum AmalgamStatus amalgam_measure_mass(const struct AmalgamMeasure *m,
                                        double a,
                                        double b,
                                        double *out);

/*
 Largest ratio `μ([t, t+r]) / μ([0, r])` (and its mirror) over the
 default scale and translation grids.

 # Safety
 `m` must be a live handle and `out` a valid pointer.
 */
enum AmalgamStatus amalgam_measure_growth_constant(const struct AmalgamMeasure *m, double *out);

/*
 Shorthand such as `indicator:0:1`, or a JSON function block.

 # Safety
 `spec` must be a NUL-terminated string and `out` a valid pointer.
 */
enum AmalgamStatus amalgam_function_parse(const char *spec, struct AmalgamFunction **out);

/*
 `χ_{[a,b)}`.

 # Safety
 `out` must be a valid pointer.
 */
enum AmalgamStatus amalgam_function_indicator(double a, double b, struct AmalgamFunction **out);

/*
 Piecewise-linear interpolation of `n` points `(xs[i], ys[i])`, zero
 outside `[xs[0], xs[n-1])`.

 # Safety
 `xs` and `ys` must point to `n` readable doubles and `out` must be valid.
 */
enum AmalgamStatus amalgam_function_table(const double *xs,
                                          const double *ys,
                                          size_t n,
                                          struct AmalgamFunction **out);

/*
 # Safety
 `f` must be null or a handle from this library, not yet freed.
 */
void amalgam_function_free(struct AmalgamFunction *f);

/*
 # Safety
 `f` must be a live handle and `out` a valid pointer.
 */
enum AmalgamStatus amalgam_function_eval(const struct AmalgamFunction *f, double x, double *out);

/*
 `riesz:<gamma>` or `indicator:<radius>`, or a JSON kernel block.

 # Safety
 `spec` must be a NUL-terminated string and `out` a valid pointer.
 */
enum AmalgamStatus amalgam_kernel_parse(const char *spec, struct AmalgamKernel **out);

/*
 `|x|^{γ-1}`, `0 < γ < 1`.

 # Safety
 `out` must be a valid pointer.
 */
enum AmalgamStatus amalgam_kernel_riesz(double gamma, struct AmalgamKernel **out);

/*
 # Safety
 `k` must be null or a handle from this library, not yet freed.
 */
void amalgam_kernel_free(struct AmalgamKernel *k);

/*
 `‖f‖_{L^q(μ)}` over the line.

 # Safety
 Handles must be live and `out` valid.
 */
enum AmalgamStatus amalgam_lq_norm(const struct AmalgamMeasure *m,
                                   const struct AmalgamFunction *f,
                                   double q,
                                   double *out);

/*
 `‖f‖*_{α,∞}`.

 # Safety
 Handles must be live and `out` valid.
 */
enum AmalgamStatus amalgam_weak_norm(const struct AmalgamMeasure *m,
                                     const struct AmalgamFunction *f,
                                     double alpha,
                                     double *out);

/*
 `‖f‖_{q,p,α}` with partitions anchored at `anchor`.

 # Safety
 Handles must be live and `out` valid.
 */
enum AmalgamStatus amalgam_amalgam_norm(const struct AmalgamMeasure *m,
                                        const struct AmalgamFunction *f,
                                        double q,
                                        double p,
                                        double alpha,
                                        double anchor,
                                        double *out);

/*
 `𝔪_{q,β} f(x)`.

 # Safety
 Handles must be live and `out` valid.
 */
enum AmalgamStatus amalgam_maximal(const struct AmalgamMeasure *m,
                                   const struct AmalgamFunction *f,
                                   double q,
                                   double beta,
                                   double x,
                                   double *out);

/*
 `Kf(x) = ∫ k(x - y) f(y) dμ(y)` to relative tolerance `tol`.

 # Safety
 Handles must be live and `out` valid.
 */
enum AmalgamStatus amalgam_potential(const struct AmalgamMeasure *m,
                                     const struct AmalgamFunction *f,
                                     const struct AmalgamKernel *k,
                                     double x,
                                     double tol,
                                     double *out);

/*
 Runs a scenario given as JSON text and returns the report JSON, to be
 released with [`amalgam_string_free`]. A negative `seed` keeps the
 scenario seed; `grid_scale <= 0` means 1.

 # Safety
 `scenario_json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum AmalgamStatus amalgam_verify_json(const char *scenario_json,
                                       int64_t seed,
                                       double grid_scale,
                                       char **out);

/*
 # Safety
 `s` must be null or a string returned by this library, not yet freed.
 */
void amalgam_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AMALGAM_H */
