#include <doctest.h>

#include <cmath>
#include <sstream>

#include "persaddle/lightcurve.hpp"
#include "persaddle/rng.hpp"

using namespace persaddle;

TEST_SUITE_BEGIN("lightcurve");

TEST_CASE("parse minimal well-formed input") {
  std::istringstream in("0.0,10.0\n1.0,10.5\n2.5,9.8");
  const LightCurve lc = parse_lightcurve(in);
  CHECK(lc.n() == 3);
  CHECK_FALSE(lc.has_accuracies());
  CHECK(lc.times(2) == doctest::Approx(2.5));
  CHECK(lc.values(1) == doctest::Approx(10.5));
}

TEST_CASE("three columns populate accuracies") {
  std::istringstream in("0.0,10.0,0.1\n1.0,10.5,0.2\n2.5,9.8,0.15");
  const LightCurve lc = parse_lightcurve(in);
  CHECK(lc.has_accuracies());
  CHECK(lc.accuracies(1) == doctest::Approx(0.2));
}

TEST_CASE("parse errors") {
  SUBCASE("duplicate times") {
    std::istringstream in("1.0,5.0\n1.0,6.0");
    CHECK_THROWS_WITH_AS(parse_lightcurve(in), doctest::Contains("duplicate"),
                         std::invalid_argument);
  }
  SUBCASE("malformed row names the line") {
    std::istringstream in("0.0,1.0\n1.0,xyz\n2.0,3.0");
    try {
      parse_lightcurve(in);
      FAIL("expected parse_error");
    } catch (const parse_error& e) {
      CHECK(e.line() == 2);
    }
  }
  SUBCASE("inconsistent column count") {
    std::istringstream in("0.0,1.0\n1.0,2.0,0.3\n2.0,3.0");
    CHECK_THROWS_AS(parse_lightcurve(in), parse_error);
  }
  SUBCASE("non-positive accuracy") {
    std::istringstream in("0.0,1.0,0.1\n1.0,2.0,-0.3\n2.0,3.0,0.2");
    CHECK_THROWS_AS(parse_lightcurve(in), std::invalid_argument);
  }
}

TEST_CASE("parse sorts by time, accepts comments, headers and whitespace") {
  std::istringstream in(
      "# survey export\n"
      "time value accuracy\n"
      "2.0 9.8 0.2\n"
      "0.5 10.0 0.1\n"
      "1.0 10.5 0.3\n");
  const LightCurve lc = parse_lightcurve(in);
  CHECK(lc.n() == 3);
  CHECK(lc.times(0) == doctest::Approx(0.5));
  CHECK(lc.values(0) == doctest::Approx(10.0));
  CHECK(lc.accuracies(0) == doctest::Approx(0.1));
}

TEST_CASE("serialize-parse round trip is exact") {
  Rng rng(3);
  Vec t(20), v(20), a(20);
  double acc = 0.0;
  for (Index i = 0; i < 20; ++i) {
    acc += 0.1 + rng.uniform();
    t(i) = acc;
    v(i) = 10.0 + rng.normal();
    a(i) = 0.05 + 0.2 * rng.uniform();
  }
  const LightCurve lc(t, v, a);
  std::ostringstream out;
  write_lightcurve_csv(lc, out);
  std::istringstream in(out.str());
  const LightCurve lc2 = parse_lightcurve(in);
  CHECK((lc.times - lc2.times).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((lc.values - lc2.values).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((lc.accuracies - lc2.accuracies).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("json round trip") {
  Vec t(3), v(3);
  t << 0.0, 1.0, 2.0;
  v << 5.0, 6.0, 7.0;
  const LightCurve lc(t, v);
  const LightCurve lc2 = lightcurve_from_json(lightcurve_to_json(lc));
  CHECK((lc.times - lc2.times).cwiseAbs().maxCoeff() == 0.0);
  CHECK_FALSE(lc2.has_accuracies());
}

TEST_CASE("fold") {
  Vec t(3), v(3);
  t << 4.0, 7.3, 2.1763;
  v << 1.0, 2.0, 3.0;
  std::sort(t.data(), t.data() + 3);
  const LightCurve lc(t, v);
  SUBCASE("worked phases") {
    const PhasedCurve pc = fold(lc, 2.0);
    // t = 7.3 -> 3.65 -> 0.65
    CHECK(pc.phases(2) == doctest::Approx(0.65).epsilon(1e-12));
    // t = 4.0 -> exact multiple
    CHECK(pc.phases(1) == doctest::Approx(0.0));
  }
  SUBCASE("exact multiple of the detected period") {
    const PhasedCurve pc = fold(lc, 2.1763);
    CHECK(pc.phases(0) == doctest::Approx(0.0));
  }
  SUBCASE("invalid period") { CHECK_THROWS_AS(fold(lc, 0.0), std::invalid_argument); }
  SUBCASE("idempotent: re-folding phases by period 1 is the identity") {
    PhasedCurve pc = fold(lc, 3.1);
    std::sort(pc.phases.data(), pc.phases.data() + pc.phases.size());
    const LightCurve aslc(pc.phases, v);
    const PhasedCurve pc2 = fold(aslc, 1.0);
    CHECK((pc.phases - pc2.phases).cwiseAbs().maxCoeff() <= 1e-15);
  }
}

TEST_CASE("snr") {
  Vec t(4), v(4);
  t << 0.0, 1.0, 2.0, 3.0;
  SUBCASE("constant values give zero") {
    v.setConstant(7.0);
    CHECK(snr(LightCurve(t, v), 0.3) == 0.0);
  }
  SUBCASE("definition") {
    v << 0.0, 2.0, 0.0, 2.0;  // sample variance 4/3
    CHECK(snr(LightCurve(t, v), 1.0) == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
    CHECK(snr(LightCurve(t, v), 2.0 / 3.0) == doctest::Approx(2.0).epsilon(1e-14));
  }
  SUBCASE("shift invariance") {
    v << 0.3, 1.9, -0.4, 2.2;
    const double s1 = snr(LightCurve(t, v), 0.7);
    const double s2 = snr(LightCurve(t, (v.array() + 11.0).matrix()), 0.7);
    CHECK(s1 == doctest::Approx(s2).epsilon(1e-13));
  }
}

TEST_CASE("construction invariants") {
  Vec t(2), v(2);
  t << 0.0, 1.0;
  v << 1.0, 2.0;
  CHECK_THROWS_AS(LightCurve(t, v), std::invalid_argument);  // n >= 3
  Vec t3(3), v3(3);
  t3 << 0.0, 1.0, 1.0;
  v3 << 1.0, 2.0, 3.0;
  CHECK_THROWS_AS(LightCurve(t3, v3), std::invalid_argument);  // strictly increasing
}

TEST_SUITE_END();
