#include "persaddle/covariance.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace persaddle {

void KernelParams::validate() const {
  if (!(amplitude > 0.0)) throw std::invalid_argument("KernelParams: amplitude must be > 0");
  if (!(period > 0.0)) throw std::invalid_argument("KernelParams: period must be > 0");
  if (!(smoothness > 0.0)) throw std::invalid_argument("KernelParams: smoothness must be > 0");
  if (!(noise_variance > 0.0)) throw std::invalid_argument("KernelParams: noise_variance must be > 0");
  if (!(rho > -1.0 && rho < 1.0)) throw std::invalid_argument("KernelParams: rho must lie in (-1, 1)");
}

CorrMatrix periodic_kernel(const Vec& times, double amplitude, double period, double smoothness) {
  if (!(amplitude > 0.0) || !(period > 0.0) || !(smoothness > 0.0))
    throw std::invalid_argument("periodic_kernel: amplitude, period, smoothness must be > 0");
  const Index n = times.size();
  const double w = M_PI / period;
  const double scale = -2.0 / (smoothness * smoothness);
  Mat k(n, n);
  for (Index j = 0; j < n; ++j) {
    k(j, j) = amplitude;
    for (Index i = j + 1; i < n; ++i) {
      const double s = std::sin(w * (times(i) - times(j)));
      const double v = amplitude * std::exp(scale * s * s);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return {std::move(k), CorrKind::periodic_kernel};
}

CorrMatrix red_noise_corr(const Vec& times, double rho) {
  if (!(rho > -1.0 && rho < 1.0)) throw std::invalid_argument("red_noise_corr: |rho| must be < 1");
  const Index n = times.size();
  if (rho == 0.0) return {Mat::Identity(n, n), CorrKind::identity};
  Mat c = Mat::Identity(n, n);
  const double log_abs_rho = std::log(std::fabs(rho));
  for (Index j = 0; j < n; ++j) {
    for (Index i = j + 1; i < n; ++i) {
      const double gap = std::fabs(times(i) - times(j));
      double v;
      if (rho > 0.0) {
        v = std::exp(gap * log_abs_rho);
      } else {
        const double rounded = std::round(gap);
        if (std::fabs(gap - rounded) > 1e-9)
          throw std::invalid_argument("red_noise_corr: negative rho requires integer time gaps");
        v = std::exp(rounded * log_abs_rho);
        if (static_cast<long long>(rounded) % 2 != 0) v = -v;
      }
      c(i, j) = v;
      c(j, i) = v;
    }
  }
  return {std::move(c), CorrKind::red_noise};
}

Mat cholesky(const Mat& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("cholesky: matrix must be square");
  const Index n = m.rows();
  const double base = m.trace() / static_cast<double>(n);
  double jitter = 0.0;
  for (int attempt = 0; attempt <= 5; ++attempt) {
    Mat shifted = m;
    if (jitter > 0.0) shifted.diagonal().array() += jitter;
    Eigen::LLT<Mat> llt(shifted);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    jitter = (jitter == 0.0) ? 1e-10 * base : 10.0 * jitter;
    if (jitter > 1e-6 * base * (1.0 + 1e-12)) break;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  std::ostringstream msg;
  msg << "cholesky: matrix not positive definite after jitter escalation"
      << " (smallest eigenvalue " << es.eigenvalues().minCoeff() << ")";
  throw numerical_error(msg.str());
}

Mat sqrt_sym(const Mat& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("sqrt_sym: matrix must be square");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + m.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("sqrt_sym: matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(m);
  if (es.info() != Eigen::Success) throw numerical_error("sqrt_sym: eigendecomposition failed");
  Vec ev = es.eigenvalues();
  const double radius = ev.cwiseAbs().maxCoeff();
  for (Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -1e-10 * radius) {
      std::ostringstream msg;
      msg << "sqrt_sym: matrix not PSD (eigenvalue " << ev(i) << ")";
      throw numerical_error(msg.str());
    }
    ev(i) = ev(i) > 0.0 ? std::sqrt(ev(i)) : 0.0;
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace persaddle
