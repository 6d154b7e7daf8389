#pragma once

#include <optional>
#include <string>

#include "persaddle/covariance.hpp"
#include "persaddle/lightcurve.hpp"

namespace persaddle {

enum class ModelFamily { constant_null, sinusoid_ls, sinusoid_wls, gpr, gpr_weighted, gpr_red };
enum class StatisticKind { F, CVF };

bool is_gpr_family(ModelFamily f);
bool is_weighted_family(ModelFamily f);
std::string family_name(ModelFamily f);

/// One hypothesis test to run at a trial period.
struct ModelSpec {
  ModelFamily family = ModelFamily::sinusoid_ls;
  StatisticKind statistic = StatisticKind::F;
  double trial_period = 1.0;
  KernelParams hyper;  // GPR families
  Vec weights;         // q_j = 1/s_j; required iff the family is weighted

  void validate() const;
};

/// Quadratic-form pair defining a statistic. m0/m1 act on the pre-centered
/// data; null_m0/null_m1 enter the null eigen-reduction (they differ from
/// the former only under red noise, where they carry the C^(1/2) sandwich).
struct TestMatrices {
  Mat m0, m1;
  Mat null_m0, null_m1;
  bool exact_f_valid = false;
  int dof_num = 0, dof_den = 0;  // valid when exact_f_valid
};

enum class NoiseModel { white, red };
enum class FitObjective { marginal_likelihood, loo_cve };

struct FitConfig {
  int starts = 5;
  int max_evals_per_start = 220;
  double ftol = 1e-7;
  // Smoothness floor: h below ~e^-1.5 degenerates the kernel into a
  // noise-chasing comb and breaks the plug-in null calibration.
  double log_h_min = -1.0, log_h_max = 3.0;
  double log_range = 10.0;  // log A and log sigma^2 live in log(var) +- log_range
  double rho_max = 0.99;
  bool use_weights = false;
};

struct FitResult {
  KernelParams hyper;
  double objective = 0.0;  // maximized marginal log-likelihood, or minimized CVE
  FitObjective objective_kind = FitObjective::marginal_likelihood;
  bool converged = false;
  int iterations = 0;
};

/// I - 11^T / n.
Mat centering_m0(Index n);

/// Residual projectors of the sinusoid regression [1, sin, cos](2 pi t / p).
/// With weights q the design and data are premultiplied by Q = diag(q) and
/// the null model becomes the weighted-intercept fit; the exact F path is
/// then disabled.
TestMatrices sinusoid_m1(const Vec& times, double period, const Vec& weights = Vec());

/// GPR smoother W = K (K + sigma^2 I)^{-1}, or the weighted form
/// K (K + Q^{-2} sigma^2 I)^{-1}. Computed by solving, never by inversion.
Mat gpr_smoother(const Mat& k, double sigma2, const Vec& weights = Vec());

struct LooMatrices {
  Mat b;       // G D^{-1} with G = (K + sigma^2 C)^{-1}, D = diag(G)
  Mat m0_loo;  // M M^T, M the leave-one-out mean residual matrix
};

/// Closed-form leave-one-out machinery; CVE = y^T B B^T y.
LooMatrices loo_matrices(const Mat& k, double sigma2, const Mat* corr = nullptr);

/// Marginal log-likelihood of the zero-mean GPR model, Gaussian noise
/// sigma^2 C (C = I when corr is null).
double gpr_marginal_loglik(const Mat& k, double sigma2, const Vec& y, const Mat* corr = nullptr);

/// Closed-form CVE for fixed hyperparameters.
double gpr_loo_cve(const Mat& k, double sigma2, const Vec& y, const Mat* corr = nullptr);

/// Maximize the marginal likelihood (or minimize the CVE) over A, h, sigma^2
/// and, for red noise, rho, at a fixed trial period. Multi-start Nelder-Mead
/// in log space with documented deterministic starts.
FitResult fit_gpr(const LightCurve& lc, double period, NoiseModel noise, FitObjective objective,
                  const FitConfig& cfg = {});

/// Assemble the statistic-defining matrices for a model spec. GPR families
/// require a fit; sinusoid families ignore it.
TestMatrices build_test_matrices(const ModelSpec& spec, const FitResult& fit, const Vec& times);

/// Pre-centered (and, when weighted, Q-transformed) data vector entering all
/// quadratic forms, plus the variance scale used by the fit bounds.
struct PreparedData {
  Vec eps;
  Vec q;  // empty when unweighted
  double variance = 0.0;
};
PreparedData prepare_data(const LightCurve& lc, bool use_weights);

}  // namespace persaddle
