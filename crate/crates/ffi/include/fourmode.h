#ifndef FOURMODE_H
#define FOURMODE_H

/* Generated by cbindgen from fourmode-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum FmStatus {
  // Success.
  FM_STATUS_OK = 0,
  // A required pointer argument was null.
  FM_STATUS_NULL_POINTER = 1,
  // Arguments violate a documented precondition.
  FM_STATUS_INVALID_ARGUMENT = 2,
  // The mixing-angle factorization is singular at these angles.
  FM_STATUS_SINGULAR = 3,
  // A numerical guard tripped (non-symplectic input, singular covariance, ...).
  FM_STATUS_NUMERICAL = 4,
  // A resource budget would be exceeded.
  FM_STATUS_RESOURCE = 5,
} FmStatus;

// Opaque Bloch-Messiah parameter set (ten squeezing/rotation parameters).
typedef struct FmParams FmParams;

// Opaque integrated Green trajectory.
typedef struct FmTrajectory FmTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Static description of a status code.
const char *fm_status_message(enum FmStatus status);

// Allocate a parameter set; free with [`fm_params_free`].
struct FmParams *fm_params_new(double theta3,
                               double theta4,
                               double theta5,
                               double theta6,
                               double d1,
                               double d2,
                               double phi3,
                               double phi4,
                               double phi5,
                               double phi6);

// # Safety
// `params` must be a pointer returned by [`fm_params_new`], not yet freed.
void fm_params_free(struct FmParams *params);

// Sector squeezing amplitudes r1 = d1 + d2 and r2 = d2 - d1.
//
// # Safety
// `params` must be a live handle; `r1` and `r2` must be writable.
enum FmStatus fm_params_squeezing(const struct FmParams *params, double *r1, double *r2);

// The eight Bogolyubov coefficients as 16 doubles
// (Re/Im of alpha11, alpha12, alpha21, alpha22, beta11, beta12, beta21, beta22).
//
// # Safety
// `params` must be a live handle; `out` must point to 16 writable doubles.
enum FmStatus fm_bogolyubov_coefficients(const struct FmParams *params, double *out);

// The four symplectic-constraint residuals of the coefficient set.
//
// # Safety
// `params` must be a live handle; `out` must point to 4 writable doubles.
enum FmStatus fm_constraint_residuals(const struct FmParams *params, double *out);

// The symmetric 4x4 covariance matrix at wavenumber `k`, row-major in the
// (positions, momenta) block ordering.
//
// # Safety
// `params` must be a live handle; `out` must point to 16 writable doubles.
enum FmStatus fm_covariance(const struct FmParams *params, double k, double *out);

// System-sector purity, symplectic eigenvalue and entanglement entropy
// (bits) of the reduced Gaussian state.
//
// # Safety
// `params` must be a live handle; the out-pointers may be null to skip.
enum FmStatus fm_purity(const struct FmParams *params,
                        double *gamma,
                        double *sigma,
                        double *entropy);

// Leading-order purity in the field-field coupling.
//
// # Safety
// `params` must be a live handle; `gamma` must be writable.
enum FmStatus fm_purity_perturbative(const struct FmParams *params, double *gamma);

// Evolved-vacuum amplitude c(n, m, s, t) of one tuple.
//
// # Safety
// `params` must be a live handle; `re` and `im` must be writable.
enum FmStatus fm_amplitude(const struct FmParams *params,
                           int64_t n,
                           int64_t m,
                           int64_t s,
                           int64_t t,
                           double *re,
                           double *im);

// Integrate the two-field cosmological example on a de Sitter background
// a(eta) = -1/(hubble eta); conformal times must be negative. On success
// writes a trajectory handle to `out`; free with [`fm_trajectory_free`].
//
// # Safety
// `out` must be a writable pointer slot.
enum FmStatus fm_evolve_de_sitter(double zeta,
                                  double lambda,
                                  double hubble,
                                  double k,
                                  double eta_start,
                                  double eta_end,
                                  size_t steps,
                                  struct FmTrajectory **out);

// Number of stored grid points.
//
// # Safety
// `traj` must be a live handle (null returns 0).
size_t fm_trajectory_len(const struct FmTrajectory *traj);

// Grid time at one index.
//
// # Safety
// `traj` must be a live handle; `t` must be writable.
enum FmStatus fm_trajectory_time(const struct FmTrajectory *traj, size_t index, double *t);

// Bogolyubov coefficients at one grid index (same 16-double layout as
// [`fm_bogolyubov_coefficients`]).
//
// # Safety
// `traj` must be a live handle; `out` must point to 16 writable doubles.
enum FmStatus fm_trajectory_bogolyubov(const struct FmTrajectory *traj, size_t index, double *out);

// Continuity-anchored Bloch-Messiah parameters at one grid index, as ten
// doubles (theta3..theta6, d1, d2, phi3..phi6).
//
// # Safety
// `traj` must be a live handle; `out` must point to 10 writable doubles.
enum FmStatus fm_trajectory_params(const struct FmTrajectory *traj, size_t index, double *out);

// # Safety
// `traj` must be a pointer returned by [`fm_evolve_de_sitter`], not yet freed.
void fm_trajectory_free(struct FmTrajectory *traj);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FOURMODE_H */
