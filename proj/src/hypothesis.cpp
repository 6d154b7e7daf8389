#include "persaddle/hypothesis.hpp"

#include <cmath>
#include <stdexcept>

namespace persaddle {

std::string method_name(PValueMethod m) {
  switch (m) {
    case PValueMethod::auto_route: return "auto";
    case PValueMethod::exact_f: return "exact_f";
    case PValueMethod::saddlepoint: return "saddlepoint";
    case PValueMethod::imhof: return "imhof";
    case PValueMethod::mc: return "mc";
  }
  return "unknown";
}

double f_statistic(const Vec& eps, const Mat& m0, const Mat& m1) {
  if (eps.size() != m0.rows() || m0.rows() != m1.rows())
    throw std::invalid_argument("f_statistic: dimension mismatch");
  const double rss0 = eps.dot(m0 * eps);
  const double rss1 = eps.dot(m1 * eps);
  if (!(rss1 > 1e-300))
    throw degenerate_fit_error("f_statistic: zero residual quadratic form (perfect fit)");
  return (rss0 - rss1) / rss1;
}

double cvf_statistic(const Vec& eps, const Mat& b, const Mat& m0_loo) {
  if (eps.size() != b.rows() || b.rows() != m0_loo.rows())
    throw std::invalid_argument("cvf_statistic: dimension mismatch");
  const double cve1 = (b.transpose() * eps).squaredNorm();
  const double cve0 = eps.dot(m0_loo * eps);
  if (!(cve1 > 1e-300))
    throw degenerate_fit_error("cvf_statistic: zero cross-validation error (perfect fit)");
  return (cve0 - cve1) / cve1;
}

TestResult p_value(double t_obs, const TestMatrices& tm, double alpha_per_test,
                   const PValueOptions& opt) {
  TestResult res;
  res.statistic = t_obs;
  PValueMethod method = opt.method;
  if (method == PValueMethod::auto_route)
    method = tm.exact_f_valid ? PValueMethod::exact_f : PValueMethod::saddlepoint;
  if (method == PValueMethod::exact_f && !tm.exact_f_valid)
    throw std::invalid_argument("p_value: exact F path requested but not valid here");

  if (method == PValueMethod::exact_f) {
    res.p_value = exact_f_survival(t_obs, tm.dof_num, tm.dof_den);
  } else {
    const QuadFormSpec qf = reduce_to_lambdas(tm.null_m0, tm.null_m1, t_obs);
    switch (method) {
      case PValueMethod::saddlepoint:
        res.p_value = saddlepoint_survival(qf, 0.0).survival;
        break;
      case PValueMethod::imhof:
        res.p_value = imhof_survival(qf, 0.0);
        break;
      case PValueMethod::mc:
        res.p_value = mc_survival(qf, 0.0, opt.mc_reps, opt.mc_seed);
        break;
      default:
        throw std::logic_error("p_value: unreachable method");
    }
  }
  res.method = method;
  res.significant = res.p_value < alpha_per_test;
  return res;
}

double sidak_level(double alpha_family, long m_tests) {
  if (!(alpha_family > 0.0 && alpha_family < 1.0))
    throw std::invalid_argument("sidak_level: alpha must lie in (0, 1)");
  if (m_tests < 1) throw std::invalid_argument("sidak_level: need m >= 1");
  return std::pow(1.0 - alpha_family, 1.0 / static_cast<double>(m_tests));
}

double sidak_alpha(double alpha_family, long m_tests) {
  return 1.0 - sidak_level(alpha_family, m_tests);
}

PeriodTestOutcome run_period_test(const LightCurve& lc, const ModelSpec& spec,
                                  const TestOptions& opt) {
  PeriodTestOutcome out;
  ModelSpec sp = spec;
  sp.validate();
  const bool weighted = is_weighted_family(sp.family);
  const PreparedData prep = prepare_data(lc, weighted);

  auto flagged = [&](const char* what) {
    TestResult r;
    r.p_value = 1.0;
    r.significant = false;
    r.degenerate = true;
    r.note = what;
    return r;
  };

  if (is_gpr_family(sp.family)) {
    FitConfig fc = opt.fit;
    fc.use_weights = weighted;
    const NoiseModel noise =
        sp.family == ModelFamily::gpr_red ? NoiseModel::red : NoiseModel::white;
    out.fit = fit_gpr(lc, sp.trial_period, noise, opt.fit_objective, fc);
    sp.hyper = out.fit.hyper;

    ModelSpec spf = sp;
    spf.statistic = StatisticKind::F;
    try {
      const TestMatrices tmf = build_test_matrices(spf, out.fit, lc.times);
      const double t = f_statistic(prep.eps, tmf.m0, tmf.m1);
      out.f = p_value(t, tmf, opt.alpha_per_test, opt.pvalue);
    } catch (const degenerate_fit_error& e) {
      out.f = flagged(e.what());
    }
    if (opt.compute_cvf_for_gpr || sp.statistic == StatisticKind::CVF) {
      ModelSpec spc = sp;
      spc.statistic = StatisticKind::CVF;
      try {
        const TestMatrices tmc = build_test_matrices(spc, out.fit, lc.times);
        // same RSS-ratio form; m0/m1 are the LOO pair here
        const double t = f_statistic(prep.eps, tmc.m0, tmc.m1);
        out.cvf = p_value(t, tmc, opt.alpha_per_test, opt.pvalue);
      } catch (const degenerate_fit_error& e) {
        out.cvf = flagged(e.what());
      }
    }
    return out;
  }

  // sinusoid families: no hyperparameter fit
  try {
    const TestMatrices tm = build_test_matrices(sp, out.fit, lc.times);
    const double t = f_statistic(prep.eps, tm.m0, tm.m1);
    out.f = p_value(t, tm, opt.alpha_per_test, opt.pvalue);
  } catch (const degenerate_fit_error& e) {
    out.f = flagged(e.what());
  }
  return out;
}

}  // namespace persaddle
