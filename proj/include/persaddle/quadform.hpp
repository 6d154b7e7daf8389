#pragma once

#include <cstdint>
#include <string>

#include "persaddle/types.hpp"

namespace persaddle {

/// Weights of a linear combination of independent chi-squared(1) variables,
/// i.e. the nonzero eigenvalues of a symmetric quadratic-form matrix.
struct QuadFormSpec {
  Vec lambdas;
  std::string source;

  Index size() const { return lambdas.size(); }
};

/// Relative cutoff below which an eigenvalue counts as exactly zero.
inline constexpr double kEigenCutoff = 1e-10;

/// Eigenvalues of m0 - (1 + t_obs) * m1, with |lambda| <= cutoff * max|lambda|
/// dropped. Both matrices must be symmetric and of equal dimension.
QuadFormSpec reduce_to_lambdas(const Mat& m0, const Mat& m1, double t_obs);

struct CgfValue {
  double k;   // K(s)
  double d1;  // K'(s)
  double d2;  // K''(s)
};

/// CGF of sum_i lambda_i chi^2_1 and its first two derivatives. s must lie in
/// the natural domain {s : 1 - 2 s lambda_i > 0 for all i}.
CgfValue cgf(const QuadFormSpec& spec, double s);

enum class SaddleMethod { saddlepoint, exact_chisq_limit, near_mean_fallback };

struct SaddlepointSolution {
  double s_hat = 0.0;
  double w = 0.0;
  double u = 0.0;
  double survival = 0.0;
  SaddleMethod method = SaddleMethod::saddlepoint;
};

/// Barndorff-Nielsen survival approximation P(X > x). The saddlepoint
/// equation K'(s) = x is solved by safeguarded Newton on the natural domain,
/// where the root is unique. One-sided lambda sets with x on the impossible
/// side return exact 0 or 1; x at the distribution mean uses the +-delta
/// averaging fallback.
SaddlepointSolution saddlepoint_survival(const QuadFormSpec& spec, double x);

struct ImhofConfig {
  double abs_tol = 1e-6;     // absolute error target for the survival value
  double tail_bound = 1e-8;  // admissible truncation error of the integral / pi
  int max_doublings = 120;   // truncation search limit
  int max_depth = 48;        // adaptive bisection depth per panel
};

/// Imhof numerical integration of P(X > x):
///   1/2 + (1/pi) Int_0^inf sin(theta(u)) / (u rho(u)) du,
/// theta(u) = (1/2) sum atan(lambda_i u) - x u / 2,
/// rho(u) = prod (1 + lambda_i^2 u^2)^(1/4).
/// The upper limit U is the smallest power-of-two multiple of the base scale
/// at which the analytic tail bound drops below tail_bound; panels are then
/// integrated by adaptive Simpson. Deterministic for a fixed config.
double imhof_survival(const QuadFormSpec& spec, double x, const ImhofConfig& cfg = {});

/// Monte-Carlo estimate of P(sum lambda_i z_i^2 > x), reps >= 100.
double mc_survival(const QuadFormSpec& spec, double x, int reps, std::uint64_t seed);

/// Exact p-value for the projection case: P(F_gen > f) where
/// F_gen * c ~ F(d1, d2), c = d2 / d1.
double exact_f_survival(double f, int d1, int d2);

}  // namespace persaddle
