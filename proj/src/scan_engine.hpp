#pragma once

#include <vector>

#include "persaddle/types.hpp"

namespace persaddle::detail {

/// Fast replicated-scan path for the GPR families used by the power harness.
///
/// The smoothness (and red-noise rho) live on fixed grids so that the
/// eigenbasis of the unit-amplitude kernel can be shared by every replicate:
/// with R_h(p) = exp(-2 sin^2(pi dt / p) / h^2) and B = C^{-1/2} R C^{-1/2},
/// the profiled marginal likelihood over (A, sigma^2) is O(n) per evaluation
/// in the eigenbasis of B. Statistics and null eigenvalues are then assembled
/// per replicate from the chosen basis. Results are identical in
/// distribution to the NM fit path, with h (and rho) discretized.
struct EngineConfig {
  std::vector<double> log_h_grid;  // default: -3 .. 3 in steps of 0.5
  std::vector<double> rho_grid;    // default: 0 .. 0.9 in steps of 0.15
  double log_range = 10.0;         // (A, sigma^2) box around the data variance
  int inner_max_evals = 90;
  double inner_ftol = 1e-8;

  static EngineConfig defaults();
};

struct EngineEntry {
  double f_stat = 0.0;
  double f_p = 1.0;
  double cvf_stat = 0.0;
  double cvf_p = 1.0;
  double amplitude = 0.0, smoothness = 0.0, noise_variance = 0.0, rho = 0.0;
  double loglik = 0.0;
  bool ok = false;
};

struct EngineTask {
  const std::vector<Vec>* ys = nullptr;  // raw replicate data vectors
  bool red = false;                      // fit over the full rho grid, else rho = 0
};

/// results[task][rep][period]
using EngineResults = std::vector<std::vector<std::vector<EngineEntry>>>;

class GprScanEngine {
 public:
  GprScanEngine(Vec times, std::vector<double> periods, EngineConfig cfg = EngineConfig::defaults());

  EngineResults run(const std::vector<EngineTask>& tasks, int threads) const;

  const std::vector<double>& periods() const { return periods_; }

 private:
  Vec times_;
  std::vector<double> periods_;
  EngineConfig cfg_;
  // per-rho precomputations (rho_grid_[0] must be 0)
  std::vector<double> rho_values_;
  std::vector<Mat> chalf_, cinvhalf_, null_m0_rho_, null_m0_loo_rho_;
  std::vector<double> logdet_c_;
};

}  // namespace persaddle::detail
