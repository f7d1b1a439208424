#include <cmath>
#include <random>

#include "aplab/exponents.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace aplab;

TEST_CASE("exponent vector validation") {
  CHECK_THROWS_AS(ExponentVector({}), std::invalid_argument);
  CHECK_THROWS_AS(ExponentVector({1.5, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(ExponentVector({0.5}), std::invalid_argument);
  CHECK(ExponentVector::uniform(3, 1.7).orthotropic());
  CHECK_FALSE(ExponentVector({1.4, 1.8}).orthotropic());
}

TEST_CASE("harmonic mean and critical exponent") {
  CHECK(pbar(ExponentVector({1.4, 1.8})) == doctest::Approx(2.0 / (1 / 1.4 + 1 / 1.8)).epsilon(1e-15));
  CHECK(pbar(ExponentVector::uniform(4, 1.3)) == doctest::Approx(1.3));
  CHECK(critical_exponent(2) == doctest::Approx(4.0 / 3.0));
  CHECK(critical_exponent(1) == doctest::Approx(1.0));
  CHECK_THROWS(critical_exponent(0));
}

TEST_CASE("self-similar exponents of the symmetric planar case") {
  const auto ss = selfsim_exponents(ExponentVector({1.5, 1.5}));
  CHECK(ss.alpha == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(ss.sigma[0] == doctest::Approx(0.5));
  CHECK(ss.sigma[1] == doctest::Approx(0.5));
  CHECK(ss.a[0] == doctest::Approx(2.0));
  CHECK(ss.beta[0] == doctest::Approx(1.0 / 3.0));
  CHECK(ss.mu == doctest::Approx(3.0 - 4.0 / 1.5));
}

TEST_CASE("self-similar exponents of (1.4, 1.8)") {
  const auto ss = selfsim_exponents(ExponentVector({1.4, 1.8}));
  CHECK(ss.pbar == doctest::Approx(1.575));
  CHECK(ss.alpha == doctest::Approx(2.0 / (3.15 - 4.0 + 1.575)));
  CHECK(ss.sigma[0] == doctest::Approx(0.6875));
  CHECK(ss.sigma[1] == doctest::Approx(0.3125));
}

TEST_CASE("scaling identity and sigma sum on random admissible exponents") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(1.0, 2.0);
  int tested = 0;
  for (int k = 0; k < 2000; ++k) {
    const int N = 1 + static_cast<int>(rng() % 4);
    std::vector<double> v(N);
    for (double& x : v) x = U(rng);
    const ExponentVector e(v);
    if (!check_conditions(e).H2) {
      CHECK_THROWS_AS(selfsim_exponents(e), std::domain_error);
      continue;
    }
    ++tested;
    const auto ss = selfsim_exponents(e);
    double sum = 0.0;
    for (int i = 0; i < N; ++i) {
      sum += ss.sigma[i];
      CHECK(ss.alpha * (v[i] - 1.0) + v[i] * ss.a[i] == doctest::Approx(ss.alpha + 1.0).epsilon(1e-12));
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(tested > 500);
}

TEST_CASE("H1 and H2 imply H3") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(1.0, 2.0);
  for (int k = 0; k < 5000; ++k) {
    const int N = 2 + static_cast<int>(rng() % 4);
    std::vector<double> v(N);
    for (double& x : v) x = U(rng);
    const auto c = check_conditions(ExponentVector(v));
    if (c.H1 && c.H2) CHECK(c.H3);
  }
}

TEST_CASE("condition verdicts and diagnostics") {
  const auto c = check_conditions(ExponentVector({4.0 / 3.0, 4.0 / 3.0}));
  CHECK(c.H2_verdict == Verdict::boundary);
  CHECK_FALSE(c.H2);
  const auto d = check_conditions(ExponentVector({1.1, 1.1}));
  CHECK(d.H2_verdict == Verdict::fails);
  CHECK(d.H2_margin < 0.0);
  const auto e = check_conditions(ExponentVector({1.9, 1.2}));
  CHECK(e.H3);
  const auto f = check_conditions(ExponentVector({2.6, 1.2}));
  CHECK_FALSE(f.H3);
  CHECK(f.H3_worst == 0);
  CHECK(f.diagnostics.size() >= 2);
}

TEST_CASE("Lambda equals one in one dimension and at p = 2") {
  for (double p : {1.2, 1.5, 1.9, 3.0}) CHECK(cianchi_lambda(ExponentVector({p})) == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t N = 1; N <= 4; ++N)
    CHECK(cianchi_lambda(ExponentVector::uniform(N, 2.0)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cianchi_lambda(ExponentVector({1.4, 1.8})) == doctest::Approx(1.06201).epsilon(1e-5));
  CHECK_THROWS(cianchi_lambda(ExponentVector({1.0 + 1e-8, 1.5})));
}

TEST_CASE("unit ball volume") {
  CHECK(unit_ball_volume(1) == doctest::Approx(2.0));
  CHECK(unit_ball_volume(2) == doctest::Approx(M_PI));
  CHECK(unit_ball_volume(3) == doctest::Approx(4.0 * M_PI / 3.0));
}

TEST_CASE("doubly nonlinear exponents against a bisection oracle") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> P(1.2, 2.5), M(0.5, 1.5);
  int tested = 0;
  for (int k = 0; k < 300; ++k) {
    const int N = 2 + static_cast<int>(rng() % 2);
    std::vector<double> p(N), m(N);
    for (int i = 0; i < N; ++i) {
      p[i] = P(rng);
      m[i] = M(rng);
    }
    const auto r = dnl_exponents(DnlParameters(ExponentVector(p), m));
    if (!r.DN2 || r.alpha_nonpositive) continue;
    ++tested;
    CHECK(r.alpha == doctest::Approx(oracle::dnl_alpha(p, m)).epsilon(1e-9));
    double sum = 0.0;
    for (double s : r.sigma) sum += s;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(tested > 50);
}

TEST_CASE("doubly nonlinear exponents reduce to the p-Laplacian ones at m = 1") {
  const ExponentVector p({1.4, 1.8});
  const auto r = dnl_exponents(DnlParameters(p, {1.0, 1.0}));
  const auto ss = selfsim_exponents(p);
  CHECK(r.DN2);
  CHECK(r.alpha == doctest::Approx(ss.alpha));
  CHECK(r.sigma[0] == doctest::Approx(ss.sigma[0]));
  CHECK_THROWS(DnlParameters(p, {1.0}));
  CHECK_THROWS(DnlParameters(p, {1.0, 0.0}));
}

TEST_CASE("planar region classification") {
  CHECK(classify_region(4.0 / 3.0, 4.0 / 3.0).label == "h2-boundary");
  CHECK(classify_region(1.5, 1.5).label == "admissible");
  CHECK(classify_region(1.2, 1.2).label == "h2-fail");
  CHECK(classify_region(2.2, 1.1).label == "h3-boundary");
  CHECK(classify_region(2.4, 1.1).label == "h3-fail");
  CHECK(classify_region(1.5, 1.5).hyperbola == doctest::Approx((1.5 - 2.0 / 3) * (1.5 - 2.0 / 3) - 4.0 / 9));
  CHECK_THROWS(classify_region(1.0, 1.5));
}

TEST_CASE("region scan agrees with the general conditions") {
  const std::array<double, 2> extra[] = {{4.0 / 3.0, 4.0 / 3.0}, {2.2, 1.1}};
  const auto scan = region_scan(1.0, 2.5, 40, extra);
  REQUIRE(scan.size() == 40 * 40 + 2);
  for (const auto& s : scan) CHECK(s.agrees);
  CHECK(scan[1600].cls.label == "h2-boundary");
  CHECK_THROWS(region_scan(0.5, 2.0, 4));
}
