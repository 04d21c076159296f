#ifndef GCONVEX_H
#define GCONVEX_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GcxStatus {
  GCX_STATUS_OK = 0,
  GCX_STATUS_NULL_POINTER = 1,
  GCX_STATUS_INVALID_UTF8 = 2,
  GCX_STATUS_PARSE_ERROR = 3,
  GCX_STATUS_INVALID_ARGUMENT = 4,
  GCX_STATUS_NUMERICAL_FAILURE = 5,
  GCX_STATUS_PANIC = 6,
} GcxStatus;

typedef enum GcxArgMin {
  GCX_ARG_MIN_FINITE = 0,
  GCX_ARG_MIN_POS_INF = 1,
  GCX_ARG_MIN_NEG_INF = 2,
} GcxArgMin;

typedef enum GcxVerdict {
  GCX_VERDICT_HOLDS = 0,
  GCX_VERDICT_FAILS = 1,
} GcxVerdict;

/**
 * Volatility band `[σ̲², σ̄²]`.
 */
typedef struct GcxBand GcxBand;

/**
 * Result of [`gcx_check_g_convexity`].
 */
typedef struct GcxConvexityReport GcxConvexityReport;

/**
 * A parsed function of `x`.
 */
typedef struct GcxFunction GcxFunction;

/**
 * Driver pair `(g, f)` of a G-BSDE with its declared Lipschitz constant.
 */
typedef struct GcxGenerator GcxGenerator;

/**
 * Space-time grid on `[-half_width, half_width]` with `nodes` (odd) nodes
 * and the fewest time steps keeping `σ̄² dt / dx² <= theta`.
 */
typedef struct GcxGridSpec {
  double horizon;
  double half_width;
  size_t nodes;
  double theta;
} GcxGridSpec;

typedef struct GcxScanSpec {
  double t;
  double y_min;
  double y_max;
  double z_min;
  double z_max;
  size_t resolution;
} GcxScanSpec;

typedef struct GcxWitness {
  double y;
  double z;
  double a;
  double gap;
} GcxWitness;

typedef struct GcxJensen {
  double lhs;
  double rhs;
  double gap;
} GcxJensen;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or an empty string.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *gcx_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *gcx_version(void);

enum GcxStatus gcx_band_new(double sigma_min_sq, double sigma_max_sq, struct GcxBand **out);

void gcx_band_free(struct GcxBand *band);

/**
 * `G(a) = ½(σ̄² a⁺ − σ̲² a⁻)`.
 */
enum GcxStatus gcx_g_eval(const struct GcxBand *band, double a, double *out);

enum GcxStatus gcx_function_parse(const char *src, struct GcxFunction **out);

void gcx_function_free(struct GcxFunction *func);

/**
 * Value and first two derivatives at `x`.
 */
enum GcxStatus gcx_eval2(const struct GcxFunction *func,
                         double x,
                         double *value,
                         double *d1,
                         double *d2);

/**
 * Drivers `g(t, y, z)` and `f(t, y, z)` with declared Lipschitz constant.
 */
enum GcxStatus gcx_generator_parse(const char *g,
                                   const char *f,
                                   double lipschitz,
                                   struct GcxGenerator **out);

void gcx_generator_free(struct GcxGenerator *generator);

/**
 * `Ê[φ(B_t)]` from the G-heat equation on `grid`.
 */
enum GcxStatus gcx_g_expectation(const struct GcxBand *band,
                                 const struct GcxFunction *phi,
                                 double t,
                                 const struct GcxGridSpec *grid,
                                 double *out);

/**
 * `E_{s,t}[Φ(B_t − B_s)]`. A null generator means `g = f = 0`.
 */
enum GcxStatus gcx_nonlinear_expectation(const struct GcxBand *band,
                                         const struct GcxGenerator *generator,
                                         const struct GcxFunction *terminal,
                                         double s,
                                         double t,
                                         const struct GcxGridSpec *grid,
                                         double *out);

/**
 * Worst-case trinomial tree value of `Ê[φ(B_t)]`.
 */
enum GcxStatus gcx_tree_expectation(const struct GcxBand *band,
                                    const struct GcxFunction *phi,
                                    double t,
                                    size_t steps,
                                    double *out);

/**
 * Signed gap of the pointwise G-convexity inequality at `(t, y, z, a)`.
 */
enum GcxStatus gcx_condition_gap(const struct GcxBand *band,
                                 const struct GcxGenerator *generator,
                                 const struct GcxFunction *h,
                                 double t,
                                 double y,
                                 double z,
                                 double a,
                                 double *out);

/**
 * Infimum of the gap over `a`. `argmin` is written only when `kind` is
 * [`GcxArgMin::Finite`]; otherwise `inf_gap` is `-inf`.
 */
enum GcxStatus gcx_reduce_over_a(const struct GcxBand *band,
                                 const struct GcxGenerator *generator,
                                 const struct GcxFunction *h,
                                 double t,
                                 double y,
                                 double z,
                                 double *inf_gap,
                                 enum GcxArgMin *kind,
                                 double *argmin);

enum GcxStatus gcx_check_g_convexity(const struct GcxBand *band,
                                     const struct GcxGenerator *generator,
                                     const struct GcxFunction *h,
                                     const struct GcxScanSpec *scan,
                                     struct GcxConvexityReport **out);

void gcx_report_free(struct GcxConvexityReport *report);

enum GcxStatus gcx_report_verdict(const struct GcxConvexityReport *report, enum GcxVerdict *out);

enum GcxStatus gcx_report_min_gap(const struct GcxConvexityReport *report, double *out);

enum GcxStatus gcx_report_witness_count(const struct GcxConvexityReport *report, size_t *out);

/**
 * Witness `index`, in the report's `(y, z)` order.
 */
enum GcxStatus gcx_report_witness(const struct GcxConvexityReport *report,
                                  size_t index,
                                  struct GcxWitness *out);

/**
 * `E_{s,t}[h(φ)] − h(E_{s,t}[φ])` and its two sides.
 */
enum GcxStatus gcx_jensen(const struct GcxBand *band,
                          const struct GcxGenerator *generator,
                          const struct GcxFunction *h,
                          const struct GcxFunction *phi,
                          double s,
                          double t,
                          const struct GcxGridSpec *grid,
                          struct GcxJensen *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GCONVEX_H */
