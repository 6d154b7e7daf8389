#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "persaddle/hypothesis.hpp"
#include "persaddle/rng.hpp"
#include "persaddle/simulate.hpp"

using namespace persaddle;

TEST_SUITE_BEGIN("hypothesis");

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

TEST_CASE("f_statistic") {
  const Vec t = random_times(20, 25.0, 1);
  const Vec y = random_normal(20, 2);
  const Vec eps = (y.array() - y.mean()).matrix();
  SUBCASE("identical matrices give zero") {
    const Mat m = centering_m0(20);
    CHECK(f_statistic(eps, m, m) == doctest::Approx(0.0));
  }
  SUBCASE("scale invariance is exact") {
    const TestMatrices tm = sinusoid_m1(t, 3.0);
    const double f1 = f_statistic(eps, tm.m0, tm.m1);
    const double f2 = f_statistic(Vec(-2.5 * eps), tm.m0, tm.m1);
    CHECK(f1 == doctest::Approx(f2).epsilon(1e-14));
  }
  SUBCASE("perfect fit raises the degenerate error") {
    // noiseless sinusoid at its own period interpolates exactly
    SimScenario sc;
    sc.sampling = SamplingSpec::explicit_times_of(t);
    sc.signal = SignalSpec::sine(3.0, 1.0, 5.0);
    sc.noise = NoiseSpec::white(0.0);
    sc.seed = 3;
    const LightCurve lc = simulate(sc);
    const TestMatrices tm = sinusoid_m1(t, 3.0);
    const Vec e = (lc.values.array() - lc.values.mean()).matrix();
    CHECK_THROWS_AS(f_statistic(e, tm.m0, tm.m1), degenerate_fit_error);
  }
}

TEST_CASE("cvf_statistic") {
  const Vec t = random_times(12, 18.0, 4);
  const Vec y = random_normal(12, 5);
  const Vec eps = (y.array() - y.mean()).matrix();
  SUBCASE("brute-force LOO reproduces the CVF") {
    const Mat k = periodic_kernel(t, 1.3, 4.0, 0.9).m;
    const LooMatrices loo = loo_matrices(k, 0.6);
    const double cve1 = oracles::brute_force_cve(k, 0.6, eps);
    Mat m = Mat::Constant(12, 12, -1.0 / 11.0);
    m.diagonal().setOnes();
    const double cve0 = (m * eps).squaredNorm();
    const double expect = (cve0 - cve1) / cve1;
    CHECK(cvf_statistic(eps, loo.b, loo.m0_loo) == doctest::Approx(expect).epsilon(1e-8));
  }
  SUBCASE("vanishing amplitude limit") {
    // g_{-j} -> 0, so CVE_1 -> |eps|^2 on centered data
    const Mat k = periodic_kernel(t, 1e-14, 4.0, 0.9).m;
    const LooMatrices loo = loo_matrices(k, 1.0);
    Mat m = Mat::Constant(12, 12, -1.0 / 11.0);
    m.diagonal().setOnes();
    const double expect = ((m * eps).squaredNorm() / eps.squaredNorm()) - 1.0;
    CHECK(cvf_statistic(eps, loo.b, loo.m0_loo) == doctest::Approx(expect).epsilon(1e-9));
  }
  SUBCASE("constant data floors the statistic") {
    const Vec flat = Vec::Zero(12);  // pre-centered constant vector
    const Mat k = periodic_kernel(t, 1.0, 4.0, 0.9).m;
    const LooMatrices loo = loo_matrices(k, 0.6);
    CHECK_THROWS_AS(cvf_statistic(flat, loo.b, loo.m0_loo), degenerate_fit_error);
  }
}

TEST_CASE("p_value routing and coherence") {
  const Vec t = random_times(50, 60.0, 6);
  SUBCASE("exact and saddlepoint agree for the sinusoid family") {
    for (int r = 0; r < 25; ++r) {
      const Vec y = random_normal(50, 100 + static_cast<std::uint64_t>(r));
      const Vec eps = (y.array() - y.mean()).matrix();
      const TestMatrices tm = sinusoid_m1(t, 2.0 + 0.3 * r);
      const double f = f_statistic(eps, tm.m0, tm.m1);
      const TestResult exact = p_value(f, tm, 0.05);
      CHECK(exact.method == PValueMethod::exact_f);
      PValueOptions sp;
      sp.method = PValueMethod::saddlepoint;
      const TestResult sad = p_value(f, tm, 0.05, sp);
      CHECK(std::fabs(exact.p_value - sad.p_value) <= 5e-3);
    }
  }
  SUBCASE("red family at rho = 0 matches the white p-value") {
    const Vec y = random_normal(50, 7);
    LightCurve lc(t, y);
    ModelSpec white;
    white.family = ModelFamily::gpr;
    white.trial_period = 4.4;
    white.hyper = KernelParams{1.0, 4.4, 1.0, 0.8, 0.0};
    ModelSpec red = white;
    red.family = ModelFamily::gpr_red;
    FitResult fit;
    fit.hyper = white.hyper;
    const TestMatrices tw = build_test_matrices(white, fit, t);
    const TestMatrices tr = build_test_matrices(red, fit, t);
    const Vec eps = prepare_data(lc, false).eps;
    const double fw = f_statistic(eps, tw.m0, tw.m1);
    const double fr = f_statistic(eps, tr.m0, tr.m1);
    CHECK(fw == doctest::Approx(fr).epsilon(1e-12));
    CHECK(p_value(fw, tw, 0.05).p_value == doctest::Approx(p_value(fr, tr, 0.05).p_value).epsilon(1e-10));
  }
  SUBCASE("evaluator override") {
    const Vec y = random_normal(50, 8);
    const Vec eps = (y.array() - y.mean()).matrix();
    const TestMatrices tm = sinusoid_m1(t, 3.7);
    const double f = f_statistic(eps, tm.m0, tm.m1);
    PValueOptions imhof_opt;
    imhof_opt.method = PValueMethod::imhof;
    PValueOptions mc_opt;
    mc_opt.method = PValueMethod::mc;
    mc_opt.mc_reps = 100000;
    mc_opt.mc_seed = 9;
    const double p_ex = p_value(f, tm, 0.05).p_value;
    const double p_im = p_value(f, tm, 0.05, imhof_opt).p_value;
    const double p_mc = p_value(f, tm, 0.05, mc_opt).p_value;
    CHECK(std::fabs(p_ex - p_im) <= 1e-4);
    CHECK(std::fabs(p_ex - p_mc) <= std::max(3.0 * std::sqrt(p_ex * (1 - p_ex) / 100000.0), 1e-3));
  }
}

TEST_CASE("sidak correction") {
  CHECK(sidak_level(0.05, 1) == doctest::Approx(0.95).epsilon(1e-12));
  CHECK(sidak_level(0.05, 10) == doctest::Approx(0.9948838).epsilon(1e-7));
  CHECK(sidak_level(0.05, 91) == doctest::Approx(0.9994365).epsilon(1e-7));
  CHECK(sidak_level(0.05, 100) == doctest::Approx(0.9994872).epsilon(1e-7));
  CHECK(sidak_level(0.05, 1000) == doctest::Approx(0.9999487).epsilon(1e-7));
  CHECK(sidak_alpha(0.05, 10) == doctest::Approx(1.0 - 0.9948838).epsilon(1e-5));
  CHECK_THROWS_AS(sidak_level(0.0, 5), std::invalid_argument);
  CHECK_THROWS_AS(sidak_level(0.05, 0), std::invalid_argument);
}

TEST_CASE("p-values are uniform under the sinusoid null") {
  // 2000 white-noise curves, exact path: KS at the 1% level
  const Vec t = random_times(30, 40.0, 10);
  const TestMatrices tm = sinusoid_m1(t, 3.1);
  std::vector<double> pvals;
  pvals.reserve(2000);
  for (int r = 0; r < 2000; ++r) {
    const Vec y = random_normal(30, 5000 + static_cast<std::uint64_t>(r));
    const Vec eps = (y.array() - y.mean()).matrix();
    const double f = f_statistic(eps, tm.m0, tm.m1);
    pvals.push_back(p_value(f, tm, 0.05).p_value);
  }
  std::sort(pvals.begin(), pvals.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < pvals.size(); ++i) {
    ks = std::max(ks, std::fabs((i + 1) / 2000.0 - pvals[i]));
    ks = std::max(ks, std::fabs(i / 2000.0 - pvals[i]));
  }
  CHECK(ks <= 1.63 / std::sqrt(2000.0));  // 1% KS critical value
}

TEST_CASE("run_period_test") {
  const Vec t = random_times(60, 60.0, 11);
  SUBCASE("gpr outcome carries both statistics") {
    SimScenario sc;
    sc.sampling = SamplingSpec::explicit_times_of(t);
    sc.signal = SignalSpec::gpr_prior(KernelParams{1.0, 5.0, 1.0, 1.0, 0.0});
    sc.noise = NoiseSpec::white(0.5);
    sc.seed = 12;
    const LightCurve lc = simulate(sc);
    ModelSpec spec;
    spec.family = ModelFamily::gpr;
    spec.trial_period = 5.0;
    spec.hyper = KernelParams{};
    TestOptions opt;
    opt.fit.starts = 2;
    opt.fit.max_evals_per_start = 120;
    const PeriodTestOutcome out = run_period_test(lc, spec, opt);
    CHECK(out.cvf.has_value());
    CHECK(out.f.p_value >= 0.0);
    CHECK(out.f.p_value <= 1.0);
    CHECK(out.f.method == PValueMethod::saddlepoint);
    // strong signal at the true period: both tests should fire
    CHECK(out.f.p_value < 0.01);
    CHECK(out.cvf->p_value < 0.01);
  }
  SUBCASE("degenerate data is flagged, not thrown") {
    Vec flat = Vec::Constant(60, 3.0);
    const LightCurve lc(t, flat);
    ModelSpec spec;
    spec.family = ModelFamily::sinusoid_ls;
    spec.trial_period = 4.0;
    TestOptions opt;
    const PeriodTestOutcome out = run_period_test(lc, spec, opt);
    CHECK(out.f.degenerate);
    CHECK_FALSE(out.f.significant);
  }
}

TEST_CASE("gpr null distribution calibrates" * doctest::timeout(600)) {
  // plug-in null: fixed hyperparameters, simulated white noise; the
  // saddlepoint CDF of the statistic must track the empirical one
  const Vec t = random_times(80, 70.0, 13);
  ModelSpec spec;
  spec.family = ModelFamily::gpr;
  spec.trial_period = 4.2;
  spec.hyper = KernelParams{0.8, 4.2, 1.2, 1.0, 0.0};
  FitResult fit;
  fit.hyper = spec.hyper;
  const TestMatrices tm = build_test_matrices(spec, fit, t);
  const int reps = 400;
  std::vector<double> stats(reps);
  for (int r = 0; r < reps; ++r) {
    const Vec y = random_normal(80, 40000 + static_cast<std::uint64_t>(r));
    const Vec eps = (y.array() - y.mean()).matrix();
    stats[static_cast<std::size_t>(r)] = f_statistic(eps, tm.m0, tm.m1);
  }
  std::sort(stats.begin(), stats.end());
  std::vector<double> cdf(stats.size());
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const QuadFormSpec qf = reduce_to_lambdas(tm.null_m0, tm.null_m1, stats[i]);
    cdf[i] = 1.0 - saddlepoint_survival(qf, 0.0).survival;
  }
  const double ks = oracles::ks_distance(stats, cdf);
  CHECK(ks <= 0.08);  // desk-scale bound at 400 replicates
}

TEST_SUITE_END();
