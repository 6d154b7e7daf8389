#include "persaddle/quadform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "persaddle/rng.hpp"
#include "persaddle/special.hpp"

namespace persaddle {

QuadFormSpec reduce_to_lambdas(const Mat& m0, const Mat& m1, double t_obs) {
  if (m0.rows() != m0.cols() || m1.rows() != m1.cols() || m0.rows() != m1.rows())
    throw std::invalid_argument("reduce_to_lambdas: matrices must be square and of equal size");
  Mat q = m0 - (1.0 + t_obs) * m1;
  q = 0.5 * (q + q.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Mat> es(q, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw numerical_error("reduce_to_lambdas: eigensolver failed");
  const Vec& ev = es.eigenvalues();
  const double cutoff = kEigenCutoff * ev.cwiseAbs().maxCoeff();
  std::vector<double> kept;
  kept.reserve(static_cast<std::size_t>(ev.size()));
  for (Index i = 0; i < ev.size(); ++i)
    if (std::fabs(ev(i)) > cutoff) kept.push_back(ev(i));
  QuadFormSpec spec;
  spec.lambdas = Eigen::Map<const Vec>(kept.data(), static_cast<Index>(kept.size()));
  spec.source = "n=" + std::to_string(m0.rows()) + " t=" + std::to_string(t_obs);
  return spec;
}

CgfValue cgf(const QuadFormSpec& spec, double s) {
  CgfValue v{0.0, 0.0, 0.0};
  for (Index i = 0; i < spec.lambdas.size(); ++i) {
    const double lam = spec.lambdas(i);
    const double d = 1.0 - 2.0 * s * lam;
    if (!(d > 0.0)) throw std::domain_error("cgf: s outside the natural domain");
    v.k += std::log(d);
    v.d1 += lam / d;
    v.d2 += 2.0 * lam * lam / (d * d);
  }
  v.k *= -0.5;
  return v;
}

namespace {

// P(X > x) when the quadratic form is empty (identically zero).
double degenerate_survival(double x) { return x < 0.0 ? 1.0 : 0.0; }

double solve_saddlepoint(const QuadFormSpec& spec, double x) {
  const double lam_min = spec.lambdas.minCoeff();
  const double lam_max = spec.lambdas.maxCoeff();
  const double scale = spec.lambdas.cwiseAbs().maxCoeff();

  // natural domain; finite edges shrink by a relative margin
  double lo, hi;
  const double margin = 1e-12;
  if (lam_min < 0.0) {
    lo = (1.0 - margin) / (2.0 * lam_min);
  } else {
    lo = -1.0 / (2.0 * scale);
    while (cgf(spec, lo).d1 > x) lo *= 2.0;  // K' decreases to 0+ as s -> -inf
  }
  if (lam_max > 0.0) {
    hi = (1.0 - margin) / (2.0 * lam_max);
  } else {
    hi = 1.0 / (2.0 * scale);
    while (cgf(spec, hi).d1 < x) hi *= 2.0;
  }

  // Newton from 0 with bisection safeguard; K' is strictly increasing.
  double s = 0.0;
  if (!(s > lo && s < hi)) s = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const CgfValue c = cgf(spec, s);
    const double f = c.d1 - x;
    if (std::fabs(f) <= 1e-13 * std::max({1.0, std::fabs(x), scale})) return s;
    if (f > 0.0) {
      hi = s;
    } else {
      lo = s;
    }
    double step = f / c.d2;
    double s_new = s - step;
    if (!(s_new > lo && s_new < hi)) s_new = 0.5 * (lo + hi);
    if (hi - lo <= 1e-15 * std::max(1.0, std::fabs(s))) return s_new;
    s = s_new;
  }
  throw numerical_error("saddlepoint_survival: root bracket collapse");
}

}  // namespace

namespace {

SaddlepointSolution saddlepoint_eval(const QuadFormSpec& spec, double x, bool allow_fallback);

// The BN formula degenerates as w -> 0 (x at the distribution mean): log(u/w)
// is then dominated by rounding noise. Average the survival just off the
// mean; the offset is the smallest that keeps both evaluations well inside
// the numerically stable region (|w| comfortably above kSmallW).
SaddlepointSolution near_mean_average(const QuadFormSpec& spec, double x) {
  const double delta = 2e-4 * spec.lambdas.cwiseAbs().sum();
  const SaddlepointSolution a = saddlepoint_eval(spec, x + delta, false);
  const SaddlepointSolution b = saddlepoint_eval(spec, x - delta, false);
  SaddlepointSolution sol;
  sol.survival = 0.5 * (a.survival + b.survival);
  sol.method = SaddleMethod::near_mean_fallback;
  return sol;
}

constexpr double kSmallW = 5e-5;

SaddlepointSolution saddlepoint_eval(const QuadFormSpec& spec, double x, bool allow_fallback) {
  SaddlepointSolution sol;
  const double s_hat = solve_saddlepoint(spec, x);
  const CgfValue c = cgf(spec, s_hat);
  const double arg = 2.0 * (s_hat * x - c.k);
  const double w = (s_hat >= 0.0 ? 1.0 : -1.0) * std::sqrt(std::max(arg, 0.0));
  const double u = s_hat * std::sqrt(c.d2);
  sol.s_hat = s_hat;
  sol.w = w;
  sol.u = u;
  if (std::fabs(w) < kSmallW || u == 0.0) {
    if (allow_fallback) return near_mean_average(spec, x);
    sol.survival = 0.5;
    sol.method = SaddleMethod::near_mean_fallback;
    return sol;
  }
  const double z = w + std::log(u / w) / w;
  sol.survival = norm_sf(z);
  sol.method = SaddleMethod::saddlepoint;
  return sol;
}

}  // namespace

SaddlepointSolution saddlepoint_survival(const QuadFormSpec& spec, double x) {
  SaddlepointSolution sol;
  if (spec.size() == 0) {
    sol.survival = degenerate_survival(x);
    sol.method = SaddleMethod::exact_chisq_limit;
    return sol;
  }
  const double lam_min = spec.lambdas.minCoeff();
  const double lam_max = spec.lambdas.maxCoeff();
  if (lam_min > 0.0 && x <= 0.0) {
    sol.survival = 1.0;
    sol.method = SaddleMethod::exact_chisq_limit;
    return sol;
  }
  if (lam_max < 0.0 && x >= 0.0) {
    sol.survival = 0.0;
    sol.method = SaddleMethod::exact_chisq_limit;
    return sol;
  }

  const double mean = spec.lambdas.sum();
  const double abs_sum = spec.lambdas.cwiseAbs().sum();
  if (std::fabs(x - mean) <= 1e-5 * abs_sum) return near_mean_average(spec, x);
  return saddlepoint_eval(spec, x, true);
}

namespace {

struct ImhofIntegrand {
  const Vec& lam;
  Vec lam2;
  double x;

  ImhofIntegrand(const Vec& l, double xv) : lam(l), lam2(l.cwiseAbs2()), x(xv) {}

  double operator()(double u) const {
    if (u < 1e-300) return 0.5 * (lam.sum() - x);
    double theta = -0.5 * x * u;
    double logr = 0.0;
    for (Index i = 0; i < lam.size(); ++i) {
      theta += 0.5 * std::atan(lam(i) * u);
      logr += std::log1p(lam2(i) * u * u);
    }
    return std::sin(theta) * std::exp(-0.25 * logr) / u;
  }

  double envelope(double u) const {
    double logr = 0.0;
    for (Index i = 0; i < lam.size(); ++i) logr += std::log1p(lam2(i) * u * u);
    return std::exp(-0.25 * logr) / u;
  }

  // bound on |theta'(u)|, the local oscillation rate
  double phase_rate(double u) const {
    double r = 0.5 * std::fabs(x);
    for (Index i = 0; i < lam.size(); ++i)
      r += 0.5 * std::fabs(lam(i)) / (1.0 + lam2(i) * u * u);
    return r;
  }
};

double adaptive_simpson(const ImhofIntegrand& f, double a, double b, double fa, double fm, double fb,
                        double whole, double tol, int depth, const ImhofConfig& cfg) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth >= cfg.max_depth)
    throw numerical_error("imhof_survival: quadrature did not converge");
  if (std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1, cfg) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1, cfg);
}

}  // namespace

double imhof_survival(const QuadFormSpec& spec, double x, const ImhofConfig& cfg) {
  if (spec.size() == 0) return degenerate_survival(x);
  const double lam_min = spec.lambdas.minCoeff();
  const double lam_max = spec.lambdas.maxCoeff();
  if (lam_min > 0.0 && x <= 0.0) return 1.0;
  if (lam_max < 0.0 && x >= 0.0) return 0.0;
  const ImhofIntegrand f(spec.lambdas, x);
  const Index l = spec.size();
  const double scale = spec.lambdas.cwiseAbs().maxCoeff();

  // truncation: stop once either the plain envelope tail (envelope decays
  // like u^-(1+l/2)) or the oscillatory integration-by-parts bound is small
  double u_max = 1.0 / scale;
  bool ok = false;
  for (int it = 0; it < cfg.max_doublings; ++it) {
    const double g = f.envelope(u_max);
    const double tail_env = g * u_max * 2.0 / static_cast<double>(l);
    const double tail_osc =
        std::fabs(x) > 1e-12 ? 4.0 * g / std::fabs(x) : std::numeric_limits<double>::infinity();
    if (std::min(tail_env, tail_osc) / M_PI < cfg.tail_bound) {
      ok = true;
      break;
    }
    u_max *= 2.0;
  }
  if (!ok) throw numerical_error("imhof_survival: could not truncate the integral");

  // panels capped by the local oscillation half-length; the phase rate decays
  // like u^-2, so the layout is fine near the origin and geometric in the
  // tail. Error budget proportional to panel width.
  double integral = 0.0;
  double a = 0.0;
  double fa = f(0.0);
  long panels = 0;
  while (a < u_max) {
    const double width = M_PI / (2.0 * std::max(f.phase_rate(a), M_PI / (2.0 * u_max)));
    const double b = std::min(u_max, a + width);
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    const double fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    const double tol = 0.5 * cfg.abs_tol * M_PI * ((b - a) / u_max);
    integral += adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 0, cfg);
    a = b;
    fa = fb;
    if (++panels > 2000000) throw numerical_error("imhof_survival: panel budget exhausted");
  }
  const double p = 0.5 + integral / M_PI;
  return std::min(1.0, std::max(0.0, p));
}

double mc_survival(const QuadFormSpec& spec, double x, int reps, std::uint64_t seed) {
  if (reps < 100) throw std::invalid_argument("mc_survival: reps must be >= 100");
  if (spec.size() == 0) return degenerate_survival(x);
  Rng rng(seed);
  long hits = 0;
  for (int r = 0; r < reps; ++r) {
    double q = 0.0;
    for (Index i = 0; i < spec.lambdas.size(); ++i) {
      const double z = rng.normal();
      q += spec.lambdas(i) * z * z;
    }
    if (q > x) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(reps);
}

double exact_f_survival(double f, int d1, int d2) {
  if (d1 < 1 || d2 < 1) throw std::invalid_argument("exact_f_survival: dof must be positive");
  if (f < -1.0) throw std::invalid_argument("exact_f_survival: statistic below its -1 floor");
  const double c = static_cast<double>(d2) / static_cast<double>(d1);
  return f_dist_survival(f * c, d1, d2);
}

}  // namespace persaddle
