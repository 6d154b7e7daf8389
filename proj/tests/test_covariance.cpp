#include <doctest.h>

#include <cmath>

#include "persaddle/covariance.hpp"
#include "persaddle/rng.hpp"

using namespace persaddle;

TEST_SUITE_BEGIN("covariance");

namespace {
Vec random_times(int n, double span, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> t(static_cast<std::size_t>(n));
  for (auto& x : t) x = span * rng.uniform();
  std::sort(t.begin(), t.end());
  return Eigen::Map<const Vec>(t.data(), n);
}
}  // namespace

TEST_CASE("periodic kernel values") {
  Vec t(3);
  t << 0.0, 2.5, 5.0;  // lags of p/2 and p at p = 5
  const auto k = periodic_kernel(t, 1.0, 5.0, 1.0);
  CHECK(k.m(0, 0) == doctest::Approx(1.0));
  CHECK(k.m(0, 2) == doctest::Approx(1.0).epsilon(1e-12));              // exact period lag
  CHECK(k.m(0, 1) == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));   // half-period lag
  CHECK(k.m(0, 1) == doctest::Approx(0.1353352832366127).epsilon(1e-12));
  CHECK((k.m - k.m.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("periodic kernel stationarity and exact periodicity") {
  const Vec t = random_times(20, 40.0, 11);
  const auto k1 = periodic_kernel(t, 2.0, 3.7, 0.8);
  const auto k2 = periodic_kernel((t.array() + 123.456).matrix(), 2.0, 3.7, 0.8);
  CHECK((k1.m - k2.m).cwiseAbs().maxCoeff() <= 1e-9);

  Vec shifted = t;
  shifted(7) += 5.0 * 3.7;  // integer multiple of the period
  const auto k3 = periodic_kernel(shifted, 2.0, 3.7, 0.8);
  CHECK((k1.m.row(7) - k3.m.row(7)).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("red noise correlation values") {
  SUBCASE("rho = 0 is the identity") {
    const Vec t = random_times(10, 20.0, 5);
    const auto c = red_noise_corr(t, 0.0);
    CHECK(c.kind == CorrKind::identity);
    CHECK((c.m - Mat::Identity(10, 10)).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("two-step lag gives rho squared") {
    Vec t(3);
    t << 0.0, 1.0, 2.0;
    const auto c = red_noise_corr(t, 0.5);
    CHECK(c.m(0, 1) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(c.m(0, 2) == doctest::Approx(0.25).epsilon(1e-14));
  }
  SUBCASE("fractional gaps") {
    Vec t(4);
    t << 0.0, 0.5, 1.5, 3.0;
    const auto c = red_noise_corr(t, 0.9);
    CHECK(c.m(0, 1) == doctest::Approx(std::pow(0.9, 0.5)).epsilon(1e-13));
    CHECK(c.m(0, 1) == doctest::Approx(0.9486832980505138).epsilon(1e-12));
    CHECK(c.m(1, 2) == doctest::Approx(0.9).epsilon(1e-13));
    CHECK(c.m(0, 2) == doctest::Approx(0.8538149682454625).epsilon(1e-12));
    Eigen::SelfAdjointEigenSolver<Mat> es(c.m, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
  }
  SUBCASE("negative rho with non-integer gaps is rejected") {
    Vec t(3);
    t << 0.0, 0.5, 1.0;
    CHECK_THROWS_AS(red_noise_corr(t, -0.5), std::invalid_argument);
    Vec ti(3);
    ti << 0.0, 1.0, 2.0;
    const auto c = red_noise_corr(ti, -0.5);
    CHECK(c.m(0, 1) == doctest::Approx(-0.5));
    CHECK(c.m(0, 2) == doctest::Approx(0.25));
  }
  SUBCASE("|rho| >= 1 rejected") {
    Vec t(3);
    t << 0.0, 1.0, 2.0;
    CHECK_THROWS_AS(red_noise_corr(t, 1.0), std::invalid_argument);
  }
}

TEST_CASE("red noise PD for rho in (0,1) on random instances") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Vec t = random_times(120, 300.0, seed);
    for (double rho : {0.1, 0.5, 0.95}) {
      Eigen::SelfAdjointEigenSolver<Mat> es(red_noise_corr(t, rho).m, Eigen::EigenvaluesOnly);
      CHECK(es.eigenvalues().minCoeff() > 0.0);
    }
  }
}

TEST_CASE("cholesky") {
  SUBCASE("identity") {
    const Mat l = cholesky(Mat::Identity(4, 4));
    CHECK((l - Mat::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-14);
  }
  SUBCASE("hand 2x2") {
    Mat m(2, 2);
    m << 1.0, 0.5, 0.5, 1.0;
    const Mat l = cholesky(m);
    CHECK(l(0, 0) == doctest::Approx(1.0));
    CHECK(l(1, 0) == doctest::Approx(0.5));
    CHECK(l(1, 1) == doctest::Approx(0.8660254037844386).epsilon(1e-12));
  }
  SUBCASE("near-singular periodic kernel reconstructs") {
    const Vec t = random_times(50, 100.0, 9);
    const Mat k = periodic_kernel(t, 1.0, 4.0, 2.0).m;
    const Mat l = cholesky(k);
    const double err = (l * l.transpose() - k).norm() / k.norm();
    CHECK(err <= 1e-8);
  }
  SUBCASE("indefinite matrix fails with eigenvalue message") {
    Mat m(2, 2);
    m << 1.0, 2.0, 2.0, 1.0;
    CHECK_THROWS_AS(cholesky(m), numerical_error);
  }
}

TEST_CASE("sqrt_sym") {
  SUBCASE("identity and diagonal") {
    CHECK((sqrt_sym(Mat::Identity(3, 3)) - Mat::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-12);
    Mat d = Mat::Zero(2, 2);
    d(0, 0) = 4.0;
    d(1, 1) = 9.0;
    const Mat s = sqrt_sym(d);
    CHECK(s(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(s(1, 1) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(std::fabs(s(0, 1)) <= 1e-12);
  }
  SUBCASE("red noise square root reconstructs") {
    Vec t(5);
    t << 0.0, 1.0, 2.0, 3.0, 4.0;
    const Mat c = red_noise_corr(t, 0.5).m;
    const Mat s = sqrt_sym(c);
    CHECK((s * s - c).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK((s - s.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("asymmetric input rejected") {
    Mat m(2, 2);
    m << 1.0, 0.2, 0.4, 1.0;
    CHECK_THROWS_AS(sqrt_sym(m), std::invalid_argument);
  }
}

TEST_CASE("KernelParams validation") {
  KernelParams kp;
  CHECK_NOTHROW(kp.validate());
  kp.amplitude = -1.0;
  CHECK_THROWS_AS(kp.validate(), std::invalid_argument);
  kp = KernelParams{};
  kp.rho = 1.0;
  CHECK_THROWS_AS(kp.validate(), std::invalid_argument);
}

TEST_SUITE_END();
