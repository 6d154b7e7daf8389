#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "persaddle/models.hpp"
#include "persaddle/hypothesis.hpp"
#include "persaddle/rng.hpp"
#include "persaddle/simulate.hpp"

using namespace persaddle;

TEST_SUITE_BEGIN("models");

namespace {
Vec random_times(int n, double span, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> t(static_cast<std::size_t>(n));
  for (auto& x : t) x = span * rng.uniform();
  std::sort(t.begin(), t.end());
  for (std::size_t i = 1; i < t.size(); ++i)
    if (t[i] <= t[i - 1]) t[i] = t[i - 1] + 1e-9;
  return Eigen::Map<const Vec>(t.data(), n);
}

Vec random_normal(int n, std::uint64_t seed) {
  Rng rng(seed);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.normal();
  return v;
}
}  // namespace

TEST_CASE("centering matrix") {
  const Mat m = centering_m0(2);
  CHECK(m(0, 0) == doctest::Approx(0.5));
  CHECK(m(0, 1) == doctest::Approx(-0.5));
  const Mat m5 = centering_m0(5);
  CHECK((m5 * Vec::Ones(5)).cwiseAbs().maxCoeff() <= 1e-14);        // annihilates constants
  CHECK((m5 * m5 - m5).cwiseAbs().maxCoeff() <= 1e-12);             // idempotent
}

TEST_CASE("sinusoid projections") {
  const Vec t = random_times(30, 40.0, 2);
  const TestMatrices tm = sinusoid_m1(t, 3.3);
  SUBCASE("eigenvalues are zero or one with exactly three zeros") {
    Eigen::SelfAdjointEigenSolver<Mat> es(tm.m1, Eigen::EigenvaluesOnly);
    int zeros = 0, ones = 0;
    for (Index i = 0; i < 30; ++i) {
      if (std::fabs(es.eigenvalues()(i)) < 1e-9) ++zeros;
      if (std::fabs(es.eigenvalues()(i) - 1.0) < 1e-9) ++ones;
    }
    CHECK(zeros == 3);
    CHECK(ones == 27);
    CHECK(tm.exact_f_valid);
    CHECK(tm.dof_num == 2);
    CHECK(tm.dof_den == 27);
  }
  SUBCASE("equal weights reproduce the unweighted statistic") {
    const Vec y = random_normal(30, 7);
    const Vec w = Vec::Constant(30, 4.0);
    const TestMatrices tw = sinusoid_m1(t, 3.3, w);
    CHECK_FALSE(tw.exact_f_valid);
    const Vec eps_u = (y.array() - y.mean()).matrix();
    const Vec yw = 4.0 * y;
    const Vec qhat = w / w.norm();
    const Vec eps_w = yw - qhat * qhat.dot(yw);
    const double fu = f_statistic(eps_u, tm.m0, tm.m1);
    const double fw = f_statistic(eps_w, tw.m0, tw.m1);
    CHECK(fu == doctest::Approx(fw).epsilon(1e-11));
  }
  SUBCASE("degenerate design is a numerical error") {
    Vec bad(5);
    bad << 0.0, 1.0, 2.0, 3.0, 4.0;  // unit cadence, period 1: sin column vanishes
    CHECK_THROWS_AS(sinusoid_m1(bad, 1.0), numerical_error);
  }
}

TEST_CASE("gpr smoother") {
  const Vec t = random_times(30, 25.0, 3);
  const Mat k = periodic_kernel(t, 1.4, 4.0, 0.9).m;
  SUBCASE("posterior mean matches a direct inverse") {
    const Vec y = random_normal(30, 11);
    const Mat w = gpr_smoother(k, 0.7);
    Mat s = k;
    s.diagonal().array() += 0.7;
    const Mat w_direct = k * s.inverse();  // independent factorization path
    CHECK(((w * y) - (w_direct * y)).cwiseAbs().maxCoeff() <= 1e-10);
  }
  SUBCASE("huge noise shrinks the smoother to zero") {
    const double s2 = 1e8 * k.trace() / 30.0;
    const Mat w = gpr_smoother(k, s2);
    CHECK(w.cwiseAbs().maxCoeff() <= 1e-4);
  }
  SUBCASE("vanishing amplitude shrinks the smoother to zero") {
    const Mat k0 = periodic_kernel(t, 1e-12, 4.0, 0.9).m;
    const Mat w = gpr_smoother(k0, 1.0);
    CHECK(w.cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("loo matrices") {
  SUBCASE("leave-one-out means for n = 3") {
    // (M y)_j = y_j - mean(y_{-j}) for y = (1, 2, 3)
    const Mat k = Mat::Zero(3, 3);
    const LooMatrices loo = loo_matrices(k, 1.0);
    Vec y(3);
    y << 1.0, 2.0, 3.0;
    // M0_loo = M M^T; reconstruct M action via the known pattern instead
    Mat m = Mat::Constant(3, 3, -0.5);
    m.diagonal().setOnes();
    const Vec my = m * y;
    CHECK(my(0) == doctest::Approx(-1.5));
    CHECK(my(1) == doctest::Approx(0.0));
    CHECK(my(2) == doctest::Approx(1.5));
    CHECK(y.dot(loo.m0_loo * y) == doctest::Approx(my.squaredNorm()).epsilon(1e-13));
  }
  SUBCASE("zero prior: CVE is the squared norm") {
    const Vec y = random_normal(8, 3);
    const Mat k = Mat::Zero(8, 8);
    const LooMatrices loo = loo_matrices(k, 2.5);
    CHECK((loo.b.transpose() * y).squaredNorm() == doctest::Approx(y.squaredNorm()).epsilon(1e-12));
  }
  SUBCASE("closed form equals brute-force refitting, n = 5") {
    const Vec t = random_times(5, 12.0, 8);
    const Mat k = periodic_kernel(t, 1.0, 3.0, 1.0).m;
    const Vec y = random_normal(5, 21);
    const LooMatrices loo = loo_matrices(k, 0.5);
    const double cve = (loo.b.transpose() * y).squaredNorm();
    CHECK(cve == doctest::Approx(oracles::brute_force_cve(k, 0.5, y)).epsilon(1e-8));
  }
  SUBCASE("brute-force equivalence with red covariance, n = 12") {
    const Vec t = random_times(12, 30.0, 9);
    const Mat k = periodic_kernel(t, 2.0, 5.0, 1.2).m;
    const Mat c = red_noise_corr(t, 0.4).m;
    const Vec y = random_normal(12, 22);
    const LooMatrices loo = loo_matrices(k, 0.8, &c);
    const double cve = (loo.b.transpose() * y).squaredNorm();
    CHECK(cve == doctest::Approx(oracles::brute_force_cve(k, 0.8, y, &c)).epsilon(1e-8));
  }
  SUBCASE("brute-force equivalence at n = 20") {
    const Vec t = random_times(20, 50.0, 10);
    const Mat k = periodic_kernel(t, 1.5, 4.4, 0.8).m;
    const Vec y = random_normal(20, 23);
    const LooMatrices loo = loo_matrices(k, 1.1);
    const double cve = (loo.b.transpose() * y).squaredNorm();
    CHECK(cve == doctest::Approx(oracles::brute_force_cve(k, 1.1, y)).epsilon(1e-8));
  }
}

TEST_CASE("build_test_matrices") {
  const Vec t = random_times(40, 60.0, 4);
  FitResult fit;
  fit.hyper = KernelParams{1.0, 4.7, 1.0, 0.8, 0.0};
  SUBCASE("sinusoid family keeps the exact F path") {
    ModelSpec spec;
    spec.family = ModelFamily::sinusoid_ls;
    spec.trial_period = 4.7;
    const TestMatrices tm = build_test_matrices(spec, fit, t);
    CHECK(tm.exact_f_valid);
  }
  SUBCASE("gpr M1 spectrum lies in [0,1] and is not a projection") {
    ModelSpec spec;
    spec.family = ModelFamily::gpr;
    spec.trial_period = 4.7;
    spec.hyper = fit.hyper;
    const TestMatrices tm = build_test_matrices(spec, fit, t);
    CHECK_FALSE(tm.exact_f_valid);
    Eigen::SelfAdjointEigenSolver<Mat> es(tm.m1, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
    CHECK(es.eigenvalues().maxCoeff() <= 1.0 + 1e-10);
    int interior = 0;
    for (Index i = 0; i < 40; ++i) {
      const double ev = es.eigenvalues()(i);
      if (ev > 1e-6 && ev < 1.0 - 1e-6) ++interior;
    }
    CHECK(interior > 0);  // not a projection matrix
  }
  SUBCASE("red family at rho = 0 equals the white family") {
    ModelSpec white;
    white.family = ModelFamily::gpr;
    white.trial_period = 4.7;
    white.hyper = fit.hyper;
    ModelSpec red = white;
    red.family = ModelFamily::gpr_red;
    const TestMatrices a = build_test_matrices(white, fit, t);
    const TestMatrices b = build_test_matrices(red, fit, t);
    CHECK((a.m1 - b.m1).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((a.null_m1 - b.null_m1).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("constant_null has no test matrices") {
    ModelSpec spec;
    spec.family = ModelFamily::constant_null;
    spec.trial_period = 1.0;
    CHECK_THROWS_AS(build_test_matrices(spec, fit, t), std::invalid_argument);
  }
}

TEST_CASE("pipeline invariances") {
  const Vec t = random_times(50, 70.0, 5);
  const Vec y = random_normal(50, 31);
  SUBCASE("generalized F equals the classical regression F after rescaling") {
    const TestMatrices tm = sinusoid_m1(t, 2.9);
    const Vec eps = (y.array() - y.mean()).matrix();
    const double f_gen = f_statistic(eps, tm.m0, tm.m1);
    const double f_classical = oracles::classical_regression_f(t, y, 2.9);
    CHECK(f_gen * 47.0 / 2.0 == doctest::Approx(f_classical).epsilon(1e-10));
  }
  SUBCASE("F is exactly invariant to additive constants") {
    ModelSpec spec;
    spec.family = ModelFamily::gpr;
    spec.trial_period = 3.8;
    spec.hyper = KernelParams{1.0, 3.8, 1.0, 0.5, 0.0};
    FitResult fit;
    fit.hyper = spec.hyper;
    const TestMatrices tm = build_test_matrices(spec, fit, t);
    Vec t3(t), v1(y), v2((y.array() + 42.0).matrix());
    LightCurve lc1(t3, v1), lc2(t3, v2);
    const Vec e1 = prepare_data(lc1, false).eps;
    const Vec e2 = prepare_data(lc2, false).eps;
    CHECK(f_statistic(e1, tm.m0, tm.m1) == doctest::Approx(f_statistic(e2, tm.m0, tm.m1)).epsilon(1e-12));
  }
}

TEST_CASE("marginal likelihood and cve evaluators") {
  const Vec t = random_times(25, 30.0, 6);
  const Mat k = periodic_kernel(t, 1.0, 5.0, 1.0).m;
  const Vec y = random_normal(25, 41);
  // direct evaluation of the Gaussian log-density as the oracle
  Mat s = k;
  s.diagonal().array() += 0.9;
  const double direct = -0.5 * (y.dot(s.inverse() * y) + std::log(s.determinant()) +
                                25.0 * std::log(2.0 * M_PI));
  CHECK(gpr_marginal_loglik(k, 0.9, y) == doctest::Approx(direct).epsilon(1e-9));
  CHECK(gpr_loo_cve(k, 0.9, y) == doctest::Approx(oracles::brute_force_cve(k, 0.9, y)).epsilon(1e-8));
}

TEST_CASE("fit_gpr behaviour" * doctest::timeout(600)) {
  FitConfig fast;
  fast.starts = 3;
  fast.max_evals_per_start = 150;

  SUBCASE("recovers hyperparameters within broad brackets") {
    // self-consistency at moderate n. The noise variance is tightly
    // identified (factor-of-3 box); the amplitude rides the A-h likelihood
    // ridge of the periodic kernel and only supports a factor-of-10 box.
    // The fitted likelihood must also dominate the generating parameters'
    // likelihood in every replicate (MLE property, exercises the optimizer).
    const Vec t = random_times(120, 80.0, 12);
    int a_ok = 0, s2_ok = 0, ml_ok = 0;
    const int runs = 20;
    for (int r = 0; r < runs; ++r) {
      SimScenario sc;
      sc.sampling = SamplingSpec::explicit_times_of(t);
      sc.signal = SignalSpec::gpr_prior(KernelParams{2.0, 5.2, 1.0, 1.0, 0.0});
      sc.noise = NoiseSpec::white(0.5);
      sc.seed = 900 + static_cast<std::uint64_t>(r);
      const LightCurve lc = simulate(sc);
      const FitResult fit = fit_gpr(lc, 5.2, NoiseModel::white, FitObjective::marginal_likelihood, fast);
      if (fit.hyper.amplitude > 0.2 && fit.hyper.amplitude < 20.0) ++a_ok;
      if (fit.hyper.noise_variance > 0.5 / 3.0 && fit.hyper.noise_variance < 1.5) ++s2_ok;
      const Mat k_true = periodic_kernel(t, 2.0, 5.2, 1.0).m;
      const double ll_true = gpr_marginal_loglik(k_true, 0.5, prepare_data(lc, false).eps);
      if (fit.objective >= ll_true - 1e-6) ++ml_ok;
    }
    CHECK(a_ok >= 18);   // 90% of 20 at desk scale
    CHECK(s2_ok >= 18);
    CHECK(ml_ok == runs);
  }

  SUBCASE("pure noise: amplitude shrinks, likelihood near the constant model") {
    const Vec t = random_times(100, 60.0, 13);
    SimScenario sc;
    sc.sampling = SamplingSpec::explicit_times_of(t);
    sc.signal = SignalSpec::constant(0.0);
    sc.noise = NoiseSpec::white(1.0);
    sc.seed = 4;
    const LightCurve lc = simulate(sc);
    const FitResult fit = fit_gpr(lc, 3.7, NoiseModel::white, FitObjective::marginal_likelihood, fast);
    const Vec eps = prepare_data(lc, false).eps;
    // constant model: iid gaussian with the mle variance
    const double v = eps.squaredNorm() / 100.0;
    const double const_ll = -0.5 * (100.0 + 100.0 * std::log(2.0 * M_PI * v));
    CHECK(fit.objective >= const_ll - 0.5);
    CHECK(fit.objective <= const_ll + 2.0);
    CHECK(fit.hyper.amplitude < 0.5 * sample_variance(lc.values));
  }

  SUBCASE("red fit on white data keeps rho small") {
    const Vec t = random_times(100, 60.0, 14);
    int small = 0;
    for (int r = 0; r < 10; ++r) {
      SimScenario sc;
      sc.sampling = SamplingSpec::explicit_times_of(t);
      sc.signal = SignalSpec::constant(0.0);
      sc.noise = NoiseSpec::white(1.0);
      sc.seed = 600 + static_cast<std::uint64_t>(r);
      const LightCurve lc = simulate(sc);
      const FitResult fit = fit_gpr(lc, 4.1, NoiseModel::red, FitObjective::marginal_likelihood, fast);
      if (fit.hyper.rho <= 0.15) ++small;
    }
    CHECK(small >= 9);
  }

  SUBCASE("cve objective runs and is consistent with the closed form") {
    const Vec t = random_times(40, 30.0, 15);
    SimScenario sc;
    sc.sampling = SamplingSpec::explicit_times_of(t);
    sc.signal = SignalSpec::gpr_prior(KernelParams{1.0, 4.0, 1.0, 1.0, 0.0});
    sc.noise = NoiseSpec::white(0.5);
    sc.seed = 8;
    const LightCurve lc = simulate(sc);
    const FitResult fit = fit_gpr(lc, 4.0, NoiseModel::white, FitObjective::loo_cve, fast);
    const Vec eps = prepare_data(lc, false).eps;
    const Mat k = periodic_kernel(t, fit.hyper.amplitude, 4.0, fit.hyper.smoothness).m;
    CHECK(fit.objective ==
          doctest::Approx(gpr_loo_cve(k, fit.hyper.noise_variance, eps)).epsilon(1e-9));
  }
}

TEST_SUITE_END();
