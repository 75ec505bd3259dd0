#ifndef CSLWALK_H
#define CSLWALK_H

/* Generated by cbindgen from crates/ffi; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CslwalkStatus {
  CSLWALK_STATUS_OK = 0,
  CSLWALK_STATUS_NULL_POINTER = 1,
  CSLWALK_STATUS_PARAMETER_DOMAIN = 2,
  CSLWALK_STATUS_UNIT = 3,
  CSLWALK_STATUS_MODEL_DOMAIN = 4,
  CSLWALK_STATUS_INSUFFICIENT_DATA = 5,
  CSLWALK_STATUS_ORACLE_DIVERGENCE = 6,
  CSLWALK_STATUS_PARSE = 7,
  CSLWALK_STATUS_IO = 8,
  CSLWALK_STATUS_PANIC = 9,
} CslwalkStatus;

// Collapse parameters. Opaque.
typedef struct CslwalkParams CslwalkParams;

// Experiment configuration. Opaque.
typedef struct CslwalkSetup CslwalkSetup;

// A set of simulated trials. Opaque.
typedef struct CslwalkTrials CslwalkTrials;

// One simulated trial; positions in metres.
typedef struct CslwalkTrial {
  // +1 or -1: sign of the realised `xi/2` peak.
  int32_t component;
  double x1_meas;
  double x2_meas;
  double x_meas;
  double xi_meas;
} CslwalkTrial;

typedef struct CslwalkVarianceEstimate {
  double s2_x;
  double s2_rel;
  double s2_diff;
  uint64_t n;
} CslwalkVarianceEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len - 1` bytes) and returns its full length in bytes.
// With `buf` null or `len` 0 only the length is returned.
//
// # Safety
// `buf` is null or valid for `len` bytes of writes.
size_t cslwalk_last_error_message(char *buf, size_t len);

// Static name of a status code.
const char *cslwalk_status_name(enum CslwalkStatus status);

// Collapse parameters from rate (s⁻¹), alpha (m⁻²) and mass (amu).
//
// # Safety
// `out` is valid for writes.
enum CslwalkStatus cslwalk_params_new(double lambda,
                                      double alpha,
                                      double mass_amu,
                                      struct CslwalkParams **out);

// Collapse parameters from `lambda * alpha` (m⁻² s⁻¹), alpha and mass (amu).
//
// # Safety
// `out` is valid for writes.
enum CslwalkStatus cslwalk_params_from_lambda_alpha(double lambda_alpha,
                                                    double alpha,
                                                    double mass_amu,
                                                    struct CslwalkParams **out);

// # Safety
// `p` is null or a handle from `cslwalk_params_*` not yet freed.
void cslwalk_params_free(struct CslwalkParams *p);

// Diffusion constant `D` (SI).
//
// # Safety
// Pointers valid or null.
enum CslwalkStatus cslwalk_params_diffusion(const struct CslwalkParams *p, double *out);

// `lambda * alpha` (m⁻² s⁻¹).
//
// # Safety
// Pointers valid or null.
enum CslwalkStatus cslwalk_params_lambda_alpha(const struct CslwalkParams *p, double *out);

// Experiment setup; lengths in nm, time in s.
//
// # Safety
// `out` is valid for writes.
enum CslwalkStatus cslwalk_setup_new(double sigma_nm,
                                     double mu_nm,
                                     double t_flight_s,
                                     double sigma_err_nm,
                                     uint64_t n_samples,
                                     struct CslwalkSetup **out);

// The design setup: 10 nm traps 1 mm apart, 0.25 s, 10 nm readout, 24201 drops.
//
// # Safety
// `out` is valid for writes.
enum CslwalkStatus cslwalk_setup_default(struct CslwalkSetup **out);

// # Safety
// `s` is null or a handle from `cslwalk_setup_*` not yet freed.
void cslwalk_setup_free(struct CslwalkSetup *s);

// Peak spreads `sigma_X^2` and `sigma_rel^2` (m²).
//
// # Safety
// Pointers valid or null.
enum CslwalkStatus cslwalk_variances(const struct CslwalkSetup *setup,
                                     const struct CslwalkParams *params,
                                     double *var_x,
                                     double *var_rel);

// Collapse excess `sigma_X^2 - sigma_rel^2` (m²).
//
// # Safety
// Pointers valid or null.
enum CslwalkStatus cslwalk_sigma2_csl(const struct CslwalkSetup *setup,
                                      const struct CslwalkParams *params,
                                      double *out);

// Joint density of `(X, xi)` (m⁻²).
//
// # Safety
// Pointers valid or null.
enum CslwalkStatus cslwalk_pdf(const struct CslwalkSetup *setup,
                               const struct CslwalkParams *params,
                               double x,
                               double xi,
                               double *out);

// Propagator `J` at `coords = (x1, y1, x2, y2, x1', y1', x2', y2')` (m) and
// time `t` (s), as real and imaginary parts.
//
// # Safety
// `coords` points at 8 doubles; other pointers valid or null.
enum CslwalkStatus cslwalk_propagator(const struct CslwalkParams *params,
                                      const double *coords,
                                      double t,
                                      double *re,
                                      double *im);

// Variance of the estimator `s_X^2` (m⁴).
//
// # Safety
// Pointers valid or null.
enum CslwalkStatus cslwalk_var_of_s2x(const struct CslwalkSetup *setup,
                                      const struct CslwalkParams *params,
                                      double *out);

// Drops needed at `lambda * alpha` by the rounded design formula.
//
// # Safety
// `out` valid or null.
enum CslwalkStatus cslwalk_required_samples(double lambda_alpha, uint64_t *out);

// Drops needed for the setup and parameters from first principles.
//
// # Safety
// Pointers valid or null.
enum CslwalkStatus cslwalk_required_samples_exact(const struct CslwalkSetup *setup,
                                                  const struct CslwalkParams *params,
                                                  uint64_t *out);

// Rounded internal-temperature ceiling (K).
//
// # Safety
// `out` valid or null.
enum CslwalkStatus cslwalk_max_internal_temperature(double lambda_alpha, double *out);

// Exact internal-temperature ceiling (K) for a sphere of `radius_m` and
// `density` (kg m⁻³).
//
// # Safety
// `out` valid or null.
enum CslwalkStatus cslwalk_max_internal_temperature_exact(double lambda_alpha,
                                                          double radius_m,
                                                          double density,
                                                          double *out);

// Rounded pressure ceiling (Torr).
//
// # Safety
// `out` valid or null.
enum CslwalkStatus cslwalk_max_pressure_torr(double lambda_alpha, double *out);

// Mean time between gas collisions (s), pressure in pTorr.
//
// # Safety
// `out` valid or null.
enum CslwalkStatus cslwalk_collision_time(double pressure_ptorr, double t_ext_ratio, double *out);

// Emission-recoil variance (m²).
//
// # Safety
// `out` valid or null.
enum CslwalkStatus cslwalk_sigma2_rad(double radius_m,
                                      double density,
                                      double internal_temperature,
                                      double t,
                                      double *out);

// Whether `(lambda, alpha)` lies in the accessible region.
//
// # Safety
// `out` valid or null.
enum CslwalkStatus cslwalk_region_contains(double lambda,
                                           double alpha,
                                           double alpha_max,
                                           double lambda_alpha_min,
                                           bool *out);

// Draws `n` trials with the given seed.
//
// # Safety
// Pointers valid or null.
enum CslwalkStatus cslwalk_sample_trials(const struct CslwalkSetup *setup,
                                         const struct CslwalkParams *params,
                                         uint64_t seed,
                                         size_t n,
                                         struct CslwalkTrials **out);

// Number of trials; 0 for null.
//
// # Safety
// `t` valid or null.
size_t cslwalk_trials_len(const struct CslwalkTrials *t);

// Copies trial `index` into `out`.
//
// # Safety
// Pointers valid or null.
enum CslwalkStatus cslwalk_trials_get(const struct CslwalkTrials *t,
                                      size_t index,
                                      struct CslwalkTrial *out);

// Variance estimators over a trial set, centring `xi/2` on `+-mu_nm`.
//
// # Safety
// Pointers valid or null.
enum CslwalkStatus cslwalk_trials_estimate(const struct CslwalkTrials *t,
                                           double mu_nm,
                                           struct CslwalkVarianceEstimate *out);

// # Safety
// `t` is null or a handle from `cslwalk_sample_trials` not yet freed.
void cslwalk_trials_free(struct CslwalkTrials *t);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CSLWALK_H */
