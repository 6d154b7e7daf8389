#include "persaddle/models.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "nelder_mead.hpp"

namespace persaddle {

bool is_gpr_family(ModelFamily f) {
  return f == ModelFamily::gpr || f == ModelFamily::gpr_weighted || f == ModelFamily::gpr_red;
}

bool is_weighted_family(ModelFamily f) {
  return f == ModelFamily::sinusoid_wls || f == ModelFamily::gpr_weighted;
}

std::string family_name(ModelFamily f) {
  switch (f) {
    case ModelFamily::constant_null: return "constant_null";
    case ModelFamily::sinusoid_ls: return "sinusoid_ls";
    case ModelFamily::sinusoid_wls: return "sinusoid_wls";
    case ModelFamily::gpr: return "gpr";
    case ModelFamily::gpr_weighted: return "gpr_weighted";
    case ModelFamily::gpr_red: return "gpr_red";
  }
  return "unknown";
}

void ModelSpec::validate() const {
  if (!(trial_period > 0.0)) throw std::invalid_argument("ModelSpec: trial_period must be > 0");
  if (is_weighted_family(family) != (weights.size() > 0))
    throw std::invalid_argument("ModelSpec: weights must be present iff the family is weighted");
  if (statistic == StatisticKind::CVF && !is_gpr_family(family))
    throw std::invalid_argument("ModelSpec: CVF statistic requires a GPR family");
  if (is_gpr_family(family)) hyper.validate();
  for (Index i = 0; i < weights.size(); ++i)
    if (!(weights(i) > 0.0)) throw std::invalid_argument("ModelSpec: weights must be positive");
}

Mat centering_m0(Index n) {
  if (n < 2) throw std::invalid_argument("centering_m0: need n >= 2");
  Mat m = Mat::Identity(n, n);
  m.array() -= 1.0 / static_cast<double>(n);
  return m;
}

namespace {

// (I - ee^T) m (I - ee^T) for a unit vector e and symmetric m.
Mat project_out(const Mat& m, const Vec& e) {
  const Vec me = m * e;
  const double eme = e.dot(me);
  Mat out = m;
  out.noalias() -= me * e.transpose();
  out.noalias() -= e * me.transpose();
  out.noalias() += eme * (e * e.transpose());
  return out;
}

// Leave-one-out mean residual matrix: identity diagonal, -1/(n-1) elsewhere,
// or its weighted-intercept generalization.
Mat loo_mean_matrix(Index n, const Vec& q) {
  Mat m;
  if (q.size() == 0) {
    m = Mat::Constant(n, n, -1.0 / static_cast<double>(n - 1));
    m.diagonal().setOnes();
  } else {
    const double qq = q.squaredNorm();
    m = Mat::Identity(n, n);
    for (Index j = 0; j < n; ++j) {
      const double denom = qq - q(j) * q(j);
      for (Index k = 0; k < n; ++k)
        if (k != j) m(j, k) = -q(j) * q(k) / denom;
    }
  }
  return m;
}

}  // namespace

TestMatrices sinusoid_m1(const Vec& times, double period, const Vec& weights) {
  if (!(period > 0.0)) throw std::invalid_argument("sinusoid_m1: period must be > 0");
  const Index n = times.size();
  if (n < 4) throw std::invalid_argument("sinusoid_m1: need n >= 4");
  const bool weighted = weights.size() > 0;
  if (weighted && weights.size() != n)
    throw std::invalid_argument("sinusoid_m1: weights length mismatch");

  Mat x(n, 3);
  const double w = 2.0 * M_PI / period;
  for (Index i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = std::sin(w * times(i));
    x(i, 2) = std::cos(w * times(i));
  }
  if (weighted) x = weights.asDiagonal() * x;

  Eigen::ColPivHouseholderQR<Mat> qr(x);
  if (qr.rank() < 3)
    throw numerical_error("sinusoid_m1: design matrix is rank deficient at period " +
                          std::to_string(period));
  const Mat qthin = qr.householderQ() * Mat::Identity(n, 3);
  Mat m1 = Mat::Identity(n, n);
  m1.noalias() -= qthin * qthin.transpose();
  m1 = 0.5 * (m1 + m1.transpose()).eval();

  TestMatrices tm;
  if (weighted) {
    const Vec qhat = weights / weights.norm();
    tm.m0 = Mat::Identity(n, n) - qhat * qhat.transpose();
    tm.exact_f_valid = false;
  } else {
    tm.m0 = centering_m0(n);
    tm.exact_f_valid = true;
    tm.dof_num = 2;
    tm.dof_den = static_cast<int>(n) - 3;
  }
  tm.m1 = m1;
  tm.null_m0 = tm.m0;
  tm.null_m1 = tm.m1;
  return tm;
}

Mat gpr_smoother(const Mat& k, double sigma2, const Vec& weights) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("gpr_smoother: sigma2 must be > 0");
  const Index n = k.rows();
  Mat s = k;
  if (weights.size() > 0) {
    if (weights.size() != n) throw std::invalid_argument("gpr_smoother: weights length mismatch");
    for (Index i = 0; i < n; ++i) s(i, i) += sigma2 / (weights(i) * weights(i));
  } else {
    s.diagonal().array() += sigma2;
  }
  Eigen::LLT<Mat> llt(s);
  if (llt.info() != Eigen::Success) throw numerical_error("gpr_smoother: solve failed");
  return llt.solve(k).transpose();
}

LooMatrices loo_matrices(const Mat& k, double sigma2, const Mat* corr) {
  const Index n = k.rows();
  Mat s = k;
  if (corr) {
    s += sigma2 * (*corr);
  } else {
    s.diagonal().array() += sigma2;
  }
  Eigen::LLT<Mat> llt(s);
  if (llt.info() != Eigen::Success) throw numerical_error("loo_matrices: K + sigma^2 C not PD");
  Mat g = llt.solve(Mat::Identity(n, n));
  g = 0.5 * (g + g.transpose()).eval();
  const Vec d = g.diagonal();
  for (Index i = 0; i < n; ++i)
    if (!(d(i) > 0.0))
      throw numerical_error("loo_matrices: nonpositive diagonal in the precision matrix");
  LooMatrices out;
  out.b = g * d.cwiseInverse().asDiagonal();
  const Mat m = loo_mean_matrix(n, Vec());
  out.m0_loo = m * m.transpose();
  return out;
}

double gpr_marginal_loglik(const Mat& k, double sigma2, const Vec& y, const Mat* corr) {
  const Index n = k.rows();
  Mat s = k;
  if (corr) {
    s += sigma2 * (*corr);
  } else {
    s.diagonal().array() += sigma2;
  }
  Eigen::LLT<Mat> llt(s);
  if (llt.info() != Eigen::Success) throw numerical_error("gpr_marginal_loglik: covariance not PD");
  const Vec alpha = llt.solve(y);
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return -0.5 * (y.dot(alpha) + logdet + static_cast<double>(n) * std::log(2.0 * M_PI));
}

double gpr_loo_cve(const Mat& k, double sigma2, const Vec& y, const Mat* corr) {
  const Index n = k.rows();
  Mat s = k;
  if (corr) {
    s += sigma2 * (*corr);
  } else {
    s.diagonal().array() += sigma2;
  }
  Eigen::LLT<Mat> llt(s);
  if (llt.info() != Eigen::Success) throw numerical_error("gpr_loo_cve: covariance not PD");
  const Mat g = llt.solve(Mat::Identity(n, n));
  const Vec r = (g * y).cwiseQuotient(g.diagonal());
  return r.squaredNorm();
}

PreparedData prepare_data(const LightCurve& lc, bool use_weights) {
  PreparedData p;
  if (use_weights) {
    if (!lc.has_accuracies())
      throw std::invalid_argument("prepare_data: weighted model requires accuracies");
    p.q = lc.accuracies.cwiseInverse();
    const Vec ytil = p.q.cwiseProduct(lc.values);
    const Vec qhat = p.q / p.q.norm();
    p.eps = ytil - qhat * qhat.dot(ytil);
  } else {
    p.eps = lc.values.array() - lc.values.mean();
  }
  const double v = p.eps.squaredNorm() / static_cast<double>(lc.n() - 1);
  p.variance = v > 0.0 ? v : 1.0;
  return p;
}

// ---------------------------------------------------------------------------
// Hyperparameter estimation
// ---------------------------------------------------------------------------

namespace {

struct FitProblem {
  Mat sin2;    // sin^2(pi dt / p)
  Mat abs_dt;  // |dt|, red noise only
  Mat qq;      // q q^T, weighted only
  Vec eps;
  bool red = false;
  bool weighted = false;
  FitObjective objective;

  double eval(double log_a, double log_h, double log_s2, double rho) const {
    const Index n = eps.size();
    const double a = std::exp(log_a);
    const double h = std::exp(log_h);
    const double s2 = std::exp(log_s2);
    Mat k = (a * ((-2.0 / (h * h)) * sin2.array()).exp()).matrix();
    if (weighted) k = k.cwiseProduct(qq);
    Mat s = k;
    if (red && rho > 0.0) {
      s += (s2 * (std::log(rho) * abs_dt.array()).exp()).matrix();
    } else {
      s.diagonal().array() += s2;
    }
    Eigen::LLT<Mat> llt(s);
    if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    if (objective == FitObjective::marginal_likelihood) {
      const Vec alpha = llt.solve(eps);
      const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
      return 0.5 * (eps.dot(alpha) + logdet + static_cast<double>(n) * std::log(2.0 * M_PI));
    }
    const Mat g = llt.solve(Mat::Identity(n, n));
    const Vec r = (g * eps).cwiseQuotient(g.diagonal());
    return r.squaredNorm();
  }
};

double logit(double p) { return std::log(p / (1.0 - p)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

FitResult fit_gpr(const LightCurve& lc, double period, NoiseModel noise, FitObjective objective,
                  const FitConfig& cfg) {
  if (!(period > 0.0)) throw std::invalid_argument("fit_gpr: period must be > 0");
  const PreparedData prep = prepare_data(lc, cfg.use_weights);
  const Index n = lc.n();

  FitProblem prob;
  prob.eps = prep.eps;
  prob.red = noise == NoiseModel::red;
  prob.weighted = cfg.use_weights;
  prob.objective = objective;
  prob.sin2.resize(n, n);
  if (prob.red) prob.abs_dt.resize(n, n);
  const double w = M_PI / period;
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) {
      const double dt = lc.times(i) - lc.times(j);
      const double sv = std::sin(w * dt);
      prob.sin2(i, j) = sv * sv;
      if (prob.red) prob.abs_dt(i, j) = std::fabs(dt);
    }
  if (prob.weighted) prob.qq = prep.q * prep.q.transpose();

  const double lv = std::log(prep.variance);
  const double lo_a = lv - cfg.log_range, hi_a = lv + cfg.log_range;
  const double lo_s = lv - cfg.log_range, hi_s = lv + cfg.log_range;
  const int dim = prob.red ? 4 : 3;

  auto boxed = [&](const Vec& u) {
    double pen = 0.0;
    auto clamp = [&pen](double v, double lo, double hi) {
      const double c = std::min(hi, std::max(lo, v));
      pen += 1e4 * (v - c) * (v - c);
      return c;
    };
    const double la = clamp(u(0), lo_a, hi_a);
    const double lh = clamp(u(1), cfg.log_h_min, cfg.log_h_max);
    const double ls = clamp(u(2), lo_s, hi_s);
    const double rho = prob.red ? cfg.rho_max * sigmoid(clamp(u(3), -9.0, 9.0)) : 0.0;
    return prob.eval(la, lh, ls, rho) + pen;
  };

  // deterministic multi-start pattern around the data variance
  const double start_a[5] = {-0.7, -2.3, -0.1, -1.2, -0.4};
  const double start_h[5] = {0.0, -0.7, 0.7, -1.4, 1.4};
  const double start_s[5] = {-0.7, -0.1, -2.3, -0.4, -1.2};
  const double start_r[5] = {0.2, 0.5, 0.05, 0.7, 0.35};

  detail::NmOptions nm;
  nm.max_evals = cfg.max_evals_per_start;
  nm.ftol = cfg.ftol;

  FitResult best;
  double best_f = std::numeric_limits<double>::infinity();
  int total_evals = 0;
  bool any_finite = false;
  const int nstarts = std::max(1, std::min(cfg.starts, 5));
  for (int s = 0; s < nstarts; ++s) {
    Vec u0(dim);
    u0(0) = lv + start_a[s];
    u0(1) = start_h[s];
    u0(2) = lv + start_s[s];
    if (prob.red) u0(3) = logit(start_r[s] / cfg.rho_max);
    const auto r = detail::nelder_mead(boxed, u0, nm);
    total_evals += r.evals;
    if (std::isfinite(r.f)) any_finite = true;
    if (r.f < best_f) {
      best_f = r.f;
      best.hyper.amplitude = std::exp(std::min(hi_a, std::max(lo_a, r.x(0))));
      best.hyper.smoothness = std::exp(std::min(cfg.log_h_max, std::max(cfg.log_h_min, r.x(1))));
      best.hyper.noise_variance = std::exp(std::min(hi_s, std::max(lo_s, r.x(2))));
      best.hyper.rho = prob.red ? cfg.rho_max * sigmoid(r.x(3)) : 0.0;
      best.converged = r.converged;
    }
  }
  if (!any_finite) throw numerical_error("fit_gpr: objective undefined at all starts");
  best.hyper.period = period;
  best.objective = objective == FitObjective::marginal_likelihood ? -best_f : best_f;
  best.objective_kind = objective;
  best.iterations = total_evals;
  return best;
}

// ---------------------------------------------------------------------------
// Test matrices
// ---------------------------------------------------------------------------

TestMatrices build_test_matrices(const ModelSpec& spec, const FitResult& fit, const Vec& times) {
  spec.validate();
  const Index n = times.size();
  if (spec.family == ModelFamily::constant_null)
    throw std::invalid_argument("build_test_matrices: constant_null is the implicit null model");
  if (spec.family == ModelFamily::sinusoid_ls || spec.family == ModelFamily::sinusoid_wls) {
    TestMatrices tm = sinusoid_m1(times, spec.trial_period, spec.weights);
    if (spec.hyper.rho != 0.0) {
      const Mat chalf = sqrt_sym(red_noise_corr(times, spec.hyper.rho).m);
      tm.null_m0 = chalf * tm.m0 * chalf;
      tm.null_m1 = chalf * tm.m1 * chalf;
      tm.exact_f_valid = false;
    }
    return tm;
  }

  // GPR families
  const KernelParams& kp = fit.hyper;
  kp.validate();
  const bool weighted = spec.family == ModelFamily::gpr_weighted;
  const bool red = spec.family == ModelFamily::gpr_red;
  if (red && kp.rho < 0.0)
    throw std::invalid_argument("build_test_matrices: red-noise rho must be >= 0");

  Mat k = periodic_kernel(times, kp.amplitude, spec.trial_period, kp.smoothness).m;
  Vec e;  // unit null-direction
  if (weighted) {
    const Vec& q = spec.weights;
    k = k.cwiseProduct((q * q.transpose()).eval());
    e = q / q.norm();
  } else {
    e = Vec::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  }
  Mat corr;
  const Mat* corr_ptr = nullptr;
  if (red && kp.rho > 0.0) {
    corr = red_noise_corr(times, kp.rho).m;
    corr_ptr = &corr;
  }

  TestMatrices tm;
  if (spec.statistic == StatisticKind::F) {
    Mat s = k;
    if (corr_ptr) {
      s += kp.noise_variance * corr;
    } else {
      s.diagonal().array() += kp.noise_variance;
    }
    Eigen::LLT<Mat> llt(s);
    if (llt.info() != Eigen::Success)
      throw numerical_error("build_test_matrices: covariance not PD");
    const Mat w = llt.solve(k).transpose();
    const Mat resid = Mat::Identity(n, n) - w;
    Mat m1 = resid.transpose() * resid;
    m1 = 0.5 * (m1 + m1.transpose()).eval();
    tm.m0 = Mat::Identity(n, n) - e * e.transpose();
    tm.m1 = project_out(m1, e);
  } else {
    const LooMatrices loo = loo_matrices(k, kp.noise_variance, corr_ptr);
    tm.m0 = weighted ? (loo_mean_matrix(n, spec.weights) *
                        loo_mean_matrix(n, spec.weights).transpose())
                     : loo.m0_loo;
    Mat m1 = loo.b * loo.b.transpose();
    tm.m1 = project_out(m1, e);
  }
  tm.exact_f_valid = false;
  if (corr_ptr) {
    const Mat chalf = sqrt_sym(corr);
    tm.null_m0 = chalf * tm.m0 * chalf;
    tm.null_m1 = chalf * tm.m1 * chalf;
  } else {
    tm.null_m0 = tm.m0;
    tm.null_m1 = tm.m1;
  }
  return tm;
}

}  // namespace persaddle
