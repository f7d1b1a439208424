#include <cmath>
#include <random>

#include "aplab/profiles.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace aplab;

namespace {

std::vector<double> random_point(std::mt19937_64& rng, int N, double lo, double hi) {
  std::uniform_real_distribution<double> U(lo, hi);
  std::vector<double> y(N);
  for (double& v : y) v = (rng() % 2 ? 1.0 : -1.0) * U(rng);
  return y;
}

}  // namespace

TEST_CASE("orthotropic profile parameter checks") {
  CHECK_THROWS(OrthotropicProfile::make(2, 1.3, 1.0));  // below p_c = 4/3
  CHECK_THROWS(OrthotropicProfile::make(2, 2.0, 1.0));
  CHECK_THROWS(OrthotropicProfile::make(2, 1.5, 0.0));
  CHECK(OrthotropicProfile::make(2, 1.5, 1.0).branch == Branch::fast);
  CHECK(OrthotropicProfile::make(2, 2.5, 1.0).branch == Branch::slow);
}

TEST_CASE("per-axis flux identity of the explicit profile") {
  std::mt19937_64 rng(21);
  for (int N = 1; N <= 3; ++N) {
    for (double p : {0.5 * (critical_exponent(N) + 2.0), 1.9, 2.5}) {
      const auto prof = OrthotropicProfile::make(N, p, 0.7);
      const double a = orthotropic_alpha(prof) / N;
      for (int k = 0; k < 50; ++k) {
        const auto y = random_point(rng, N, 0.05, prof.branch == Branch::slow ? 0.4 : 6.0);
        const double F = eval_orthotropic(prof, y);
        if (F <= 0.0) continue;
        for (int i = 0; i < N; ++i) {
          const double d = orthotropic_derivative(prof, y, i);
          const double flux = oracle::flux(d, p, 0.0);
          CHECK(flux == doctest::Approx(-a * y[i] * F).epsilon(1e-10));
        }
      }
    }
  }
}

TEST_CASE("analytic derivative agrees with finite differences") {
  const auto prof = OrthotropicProfile::make(2, 1.6, 0.3);
  std::mt19937_64 rng(2);
  for (int k = 0; k < 20; ++k) {
    auto y = random_point(rng, 2, 0.2, 4.0);
    for (int i = 0; i < 2; ++i) {
      auto a = y, b = y;
      a[i] += 1e-6;
      b[i] -= 1e-6;
      const double fd = (eval_orthotropic(prof, a) - eval_orthotropic(prof, b)) / 2e-6;
      CHECK(orthotropic_derivative(prof, y, i) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("profile mass against quadrature") {
  for (double p : {1.2, 1.5, 1.8}) {
    const auto prof = OrthotropicProfile::make(1, p, 0.5);
    const double q = oracle::integrate_even([&](const std::vector<double>& y) { return eval_orthotropic(prof, y); }, 1, 20000);
    CHECK(orthotropic_mass(prof) == doctest::Approx(q).epsilon(1e-6));
  }
  for (double p : {1.5, 1.8, 2.5}) {
    const auto prof = OrthotropicProfile::make(2, p, 0.5);
    const double q = oracle::integrate_even([&](const std::vector<double>& y) { return eval_orthotropic(prof, y); }, 2, 1500);
    CHECK(orthotropic_mass(prof) == doctest::Approx(q).epsilon(1e-4));
  }
}

TEST_CASE("profile with prescribed mass") {
  for (double M : {0.1, 1.0, 7.0}) {
    CHECK(orthotropic_mass(orthotropic_with_mass(2, 1.5, M)) == doctest::Approx(M).epsilon(1e-12));
    CHECK(orthotropic_mass(orthotropic_with_mass(3, 2.4, M)) == doctest::Approx(M).epsilon(1e-12));
  }
  CHECK_THROWS(orthotropic_with_mass(2, 1.5, -1.0));
}

TEST_CASE("mass transform") {
  const auto prof = OrthotropicProfile::make(2, 1.5, 0.4);
  for (double k : {0.5, 2.0, 3.7}) {
    const auto T = mass_transform(prof, k);
    const double s = std::pow(k, (2.0 - 1.5) / 1.5);
    for (double y1 : {0.0, 0.3, 2.0}) {
      const double y[2] = {y1, -0.7};
      const double ys[2] = {s * y1, -0.7 * s};
      CHECK(eval_orthotropic(T, y) == doctest::Approx(k * eval_orthotropic(prof, ys)).epsilon(1e-12));
    }
    CHECK(orthotropic_mass(T) == doctest::Approx(mass_factor(2, 1.5, k) * orthotropic_mass(prof)).epsilon(1e-12));
  }
}

TEST_CASE("Barenblatt solution is self-similar with exponent alpha") {
  const auto prof = OrthotropicProfile::make(2, 1.5, 1.0);
  const double alpha = orthotropic_alpha(prof);
  CHECK(alpha == doctest::Approx(4.0));
  const double o[2] = {0.0, 0.0};
  for (double t : {0.5, 2.0, 10.0})
    CHECK(barenblatt_solution(prof, o, t) == doctest::Approx(std::pow(t, -alpha) * eval_orthotropic(prof, o)));
  const double x[2] = {1.0, 2.0};
  const double y[2] = {1.0 * std::pow(3.0, -2.0), 2.0 * std::pow(3.0, -2.0)};
  CHECK(barenblatt_solution(prof, x, 3.0) == doctest::Approx(std::pow(3.0, -4.0) * eval_orthotropic(prof, y)));
  CHECK_THROWS(barenblatt_solution(prof, x, 0.0));
}

TEST_CASE("isotropic Barenblatt and the Gaussian limit") {
  const double y[2] = {0.7, -1.1};
  CHECK(eval_isotropic_barenblatt(2, 2.0, 1.0, y) == doctest::Approx(oracle::heat_kernel({0.7, -1.1}, 1.0)));
  const double r = std::hypot(0.7, 1.1);
  const double y1[2] = {r, 0.0};
  CHECK(eval_isotropic_barenblatt(2, 1.5, 1.0, y) == doctest::Approx(eval_isotropic_barenblatt(2, 1.5, 1.0, y1)));
  const double e1[1] = {r};
  CHECK(eval_isotropic_barenblatt(1, 1.5, 1.0, e1) == doctest::Approx(eval_orthotropic(OrthotropicProfile::make(1, 1.5, 1.0), e1)));
}

TEST_CASE("very singular solutions") {
  const double o[2] = {0.0, 0.0};
  CHECK_THROWS_AS(very_singular(1.5, o, 1.0, 1.0), std::domain_error);
  const double axis[2] = {1.0, 0.0};
  CHECK_THROWS_AS(very_singular_separated(1.5, axis, 1.0, 1.0), std::domain_error);
  const double x[2] = {0.5, 1.5};
  CHECK(very_singular(1.5, x, 2.0, 1.0) == doctest::Approx(std::pow(2.0, 2.0) * very_singular(1.5, x, 1.0, 1.0)));
  CHECK(very_singular_separated(1.5, x, 1.0, 2.0) == doctest::Approx(2.0 * (std::pow(0.5, -3.0) + std::pow(1.5, -3.0))));
}

TEST_CASE("upper barrier is a supersolution off the axes") {
  for (const auto& pv : {std::vector<double>{1.5, 1.5}, std::vector<double>{1.4, 1.8}, std::vector<double>{1.7, 1.6}}) {
    const ExponentVector p(pv);
    const auto ss = selfsim_exponents(p);
    const auto b = make_upper_barrier(p);
    const ProfileFn F = [&](Point y) { return eval_upper_barrier(b, y); };
    std::mt19937_64 rng(8);
    for (int k = 0; k < 60; ++k) {
      const auto y = random_point(rng, 2, 0.2, 20.0);
      CHECK(stationary_residual(F, p, ss, y, 1e-3) <= 1e-6 * F(y));
    }
  }
}

TEST_CASE("upper barrier gammas and truncation") {
  const ExponentVector p({1.5, 1.5});
  const auto b = make_upper_barrier(p, 0.2);
  CHECK(b.gamma[0] == doctest::Approx(1.0 / 27.0));
  const double o[2] = {0.0, 0.0};
  CHECK_THROWS_AS(eval_upper_barrier(b, o), std::domain_error);
  CHECK(eval_truncated_barrier(b, o) == doctest::Approx(0.2));
  const double far[2] = {30.0, 0.0};
  CHECK(eval_truncated_barrier(b, far) == doctest::Approx(27.0 / 27000.0));
  CHECK_THROWS(eval_truncated_barrier(make_upper_barrier(p), far));
}

TEST_CASE("lower barrier threshold and subsolution sign") {
  const ExponentVector p({1.5, 1.5});
  const auto ss = selfsim_exponents(p);
  const double theta[2] = {1.0, 1.0};
  CHECK(lower_barrier_A0(p, ss, 4.0, theta) == doctest::Approx(6.25).epsilon(1e-12));
  CHECK_THROWS(make_lower_barrier(p, 4.0, {1.0, 1.0}, 6.0));
  CHECK_THROWS(make_lower_barrier(p, 2.0, {1.0, 1.0}, 100.0));  // 1/(gamma theta) too large
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> G(3.5, 8.0);
  for (int r = 0; r < 5; ++r) {
    const double gamma = G(rng);
    const double A0 = lower_barrier_A0(p, ss, gamma, theta);
    const auto b = make_lower_barrier(p, gamma, {1.0, 1.0}, 1.2 * A0);
    const ProfileFn F = [&](Point y) { return eval_lower_barrier(b, y); };
    for (int k = 0; k < 30; ++k) {
      const auto y = random_point(rng, 2, 0.2, 20.0);
      CHECK(stationary_residual(F, p, ss, y, 1e-3) >= -1e-6 * F(y));
    }
  }
}

TEST_CASE("stationary residual of the explicit profile vanishes under refinement") {
  const ExponentVector p = ExponentVector::uniform(2, 1.6);
  const auto ss = selfsim_exponents(p);
  const auto prof = OrthotropicProfile::make(2, 1.6, 1.0);
  const ProfileFn F = [&](Point y) { return eval_orthotropic(prof, y); };
  const double y[2] = {0.9, -1.7};
  const double r1 = std::abs(stationary_residual(F, p, ss, y, 0.1));
  const double r2 = std::abs(stationary_residual(F, p, ss, y, 0.05));
  CHECK(std::log2(r1 / r2) >= 1.8);
  const double near[2] = {0.05, 1.0};
  CHECK_THROWS_AS(stationary_residual(F, p, ss, near, 0.1), std::domain_error);
}
