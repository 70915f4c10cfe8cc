#ifndef CHEMOWAVE_H
#define CHEMOWAVE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CwStatus {
  CW_STATUS_OK = 0,
  // Argument outside the mathematical domain.
  CW_STATUS_DOMAIN = 1,
  // A hypothesis of the construction does not hold.
  CW_STATUS_PRECONDITION = 2,
  CW_STATUS_NON_CONVERGENCE = 3,
  CW_STATUS_NUMERICAL = 4,
  CW_STATUS_CONFIG = 5,
  CW_STATUS_IO = 6,
  CW_STATUS_NULL_POINTER = 7,
  // Internal panic; the message holds the payload.
  CW_STATUS_PANIC = 8,
} CwStatus;

typedef enum CwVerdict {
  CW_VERDICT_NO_WAVE = 0,
  CW_VERDICT_INCONCLUSIVE = 1,
} CwVerdict;

// Opaque model parameters.
typedef struct CwParams CwParams;

// Opaque constructed wave.
typedef struct CwWave CwWave;

typedef struct CwThresholds {
  double m;
  double m_tilde;
  double k;
  double k_tilde;
  double c0;
  bool hypothesis_h1;
  bool hypothesis_stability;
} CwThresholds;

typedef struct CwWaveSummary {
  double c;
  double mu;
  double c_star;
  double residual_sup;
  double left_value;
  double tail_ratio_min;
  double tail_ratio_max;
  double tail_slope;
  size_t len;
  size_t iterations;
} CwWaveSummary;

typedef struct CwCertificate {
  double c;
  double eps;
  double lambda0;
  double length;
  // Perturbed principal eigenvalue; NaN when inconclusive.
  double lambda_eps;
  double lambda_unperturbed;
  // True for the Neumann-Dirichlet branch (`c < 0`).
  bool neumann;
  enum CwVerdict verdict;
} CwCertificate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread (empty after success).
// Valid until the next call on the same thread.
const char *cw_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *cw_version(void);

// # Safety
// `out_params` must be a valid pointer to writable storage for one handle.
enum CwStatus cw_params_new(double a,
                            double b,
                            double chi1,
                            double chi2,
                            double mu1,
                            double mu2,
                            double lambda1,
                            double lambda2,
                            struct CwParams **out_params);

// # Safety
// `params` must come from [`cw_params_new`] and not have been freed; null is ignored.
void cw_params_free(struct CwParams *params);

// # Safety
// Pointers must be valid.
enum CwStatus cw_thresholds(const struct CwParams *params, struct CwThresholds *out_thresholds);

// Critical decay parameter and speed with the default scan and tolerance.
//
// # Safety
// Pointers must be valid.
enum CwStatus cw_mu_star(const struct CwParams *params, double *out_mu_star, double *out_c_star);

// # Safety
// Pointers must be valid.
enum CwStatus cw_mu_of_c(const struct CwParams *params, double c, double *out_mu);

// Constructs the wave with speed `c` on the default grid.
//
// # Safety
// Pointers must be valid.
enum CwStatus cw_wave_construct(const struct CwParams *params, double c, struct CwWave **out_wave);

// # Safety
// `wave` must come from [`cw_wave_construct`] and not have been freed; null is ignored.
void cw_wave_free(struct CwWave *wave);

// # Safety
// Pointers must be valid.
enum CwStatus cw_wave_summary(const struct CwWave *wave, struct CwWaveSummary *out_summary);

// Copies the grid and profiles into caller buffers of length `len`, which
// must equal the wave length. Any buffer may be null to skip it.
//
// # Safety
// Non-null buffers must hold `len` doubles.
enum CwStatus cw_wave_copy_profile(const struct CwWave *wave,
                                   double *x,
                                   double *u,
                                   double *v1,
                                   double *v2,
                                   size_t len);

// Nonexistence certificate for speed `c < 2 sqrt(a)` given a decaying profile
// sampled at `x0 + i dx`, `i < len`. `eps <= 0` selects the default.
//
// # Safety
// `u` must hold `len` doubles; other pointers must be valid.
enum CwStatus cw_certify(const struct CwParams *params,
                         double c,
                         double x0,
                         double dx,
                         const double *u,
                         size_t len,
                         double eps,
                         struct CwCertificate *out_certificate);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHEMOWAVE_H */
