#pragma once

#include "persaddle/types.hpp"

namespace persaddle {

/// Hyperparameters of the periodic-kernel GPR model with optional red noise.
struct KernelParams {
  double amplitude = 1.0;       // A > 0, prior signal variance
  double period = 1.0;          // p > 0 [days]
  double smoothness = 1.0;      // h > 0
  double noise_variance = 1.0;  // sigma^2 > 0
  double rho = 0.0;             // residual correlation at unit time lag, |rho| < 1

  void validate() const;
};

enum class CorrKind { periodic_kernel, red_noise, identity };

struct CorrMatrix {
  Mat m;
  CorrKind kind = CorrKind::identity;

  Index n() const { return m.rows(); }
};

/// K_jk = A * exp(-2 sin^2(pi (t_j - t_k) / p) / h^2).
CorrMatrix periodic_kernel(const Vec& times, double amplitude, double period, double smoothness);

inline CorrMatrix periodic_kernel(const Vec& times, const KernelParams& kp) {
  return periodic_kernel(times, kp.amplitude, kp.period, kp.smoothness);
}

/// C_jk = rho^|t_j - t_k|. rho = 0 gives the identity. Negative rho is only
/// defined for integer time gaps and rejected otherwise.
CorrMatrix red_noise_corr(const Vec& times, double rho);

/// Lower Cholesky factor. On failure the diagonal is jittered by
/// 1e-10 * trace/n, escalating tenfold up to 1e-6 * trace/n, before throwing
/// a numerical_error that names the smallest eigenvalue.
Mat cholesky(const Mat& m);

/// Symmetric PSD square root via eigendecomposition; eigenvalues below
/// -1e-10 * spectral radius are an error, small negatives clamp to zero.
Mat sqrt_sym(const Mat& m);

}  // namespace persaddle
