#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "persaddle/models.hpp"
#include "persaddle/quadform.hpp"

namespace persaddle {

enum class PValueMethod { auto_route, exact_f, saddlepoint, imhof, mc };

std::string method_name(PValueMethod m);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  PValueMethod method = PValueMethod::auto_route;
  bool significant = false;
  bool degenerate = false;
  std::string note;
};

/// Generalized F statistic (y^T M0 y - y^T M1 y) / y^T M1 y on the
/// pre-centered data vector.
double f_statistic(const Vec& eps, const Mat& m0, const Mat& m1);

/// CVF statistic (CVE_0 - CVE_1) / CVE_1 with CVE_1 = |B^T y|^2 and
/// CVE_0 = y^T M0_loo y.
double cvf_statistic(const Vec& eps, const Mat& b, const Mat& m0_loo);

struct PValueOptions {
  PValueMethod method = PValueMethod::auto_route;
  int mc_reps = 10000;
  std::uint64_t mc_seed = 0;
};

/// Route the observed statistic to its null evaluator: the exact F
/// distribution when the matrices admit it, otherwise eigenvalue reduction
/// plus saddlepoint (or the requested override).
TestResult p_value(double t_obs, const TestMatrices& tm, double alpha_per_test,
                   const PValueOptions& opt = {});

/// Per-test confidence level (1 - alpha)^(1/m).
double sidak_level(double alpha_family, long m_tests);
/// Per-test significance level 1 - (1 - alpha)^(1/m).
double sidak_alpha(double alpha_family, long m_tests);

struct TestOptions {
  double alpha_per_test = 0.05;
  PValueOptions pvalue;
  FitObjective fit_objective = FitObjective::marginal_likelihood;
  FitConfig fit;
  bool compute_cvf_for_gpr = true;
};

/// Full single-period pipeline: prepare data, fit hyperparameters (GPR
/// families), assemble matrices, compute the statistic(s) and p-value(s).
/// Degenerate fits are flagged, not thrown, so period scans never abort.
struct PeriodTestOutcome {
  TestResult f;
  std::optional<TestResult> cvf;
  FitResult fit;  // meaningful for GPR families
};

PeriodTestOutcome run_period_test(const LightCurve& lc, const ModelSpec& spec,
                                  const TestOptions& opt);

}  // namespace persaddle
