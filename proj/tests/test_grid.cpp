#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "aplab/grid.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace aplab;

namespace {

Field random_field(const TensorGrid& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<double> v(g.size());
  for (double& x : v) x = U(rng);
  return Field(g, v);
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "aplab_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("grid construction and geometry") {
  CHECK_THROWS(TensorGrid({1.0}, {4}));
  CHECK_THROWS(TensorGrid({1.0}, {1}));
  CHECK_THROWS(TensorGrid({-1.0}, {5}));
  CHECK_THROWS(TensorGrid({1.0, 2.0}, {5}));
  const TensorGrid g({1.0, 2.0}, {5, 9});
  CHECK(g.size() == 45);
  CHECK(g.spacing(0) == doctest::Approx(0.4));
  CHECK(g.spacing(1) == doctest::Approx(4.0 / 9.0));
  CHECK(g.cell_volume() == doctest::Approx(0.4 * 4.0 / 9.0));
  CHECK(g.center(0, 2) == 0.0);
  CHECK(g.center(1, 8) == doctest::Approx(4 * 4.0 / 9.0));
  const std::size_t o = g.origin();
  CHECK(g.coord(o, 0) == 2);
  CHECK(g.coord(o, 1) == 4);
  for (std::size_t k = 0; k < g.size(); ++k) {
    CHECK(g.mirror(g.mirror(k, 0), 0) == k);
    CHECK(g.coord(g.mirror(k, 1), 1) == 8 - g.coord(k, 1));
  }
}

TEST_CASE("midpoint quadrature") {
  const TensorGrid g = TensorGrid::cube(2, 1.0, 21);
  const Field lin = sample(g, [](std::span<const double> x) { return 1.0 + x[0] + 2.0 * x[1]; });
  CHECK(integrate(lin) == doctest::Approx(4.0).epsilon(1e-13));
  const TensorGrid w = TensorGrid::cube(2, 12.0, 241);
  const Field gauss = sample(w, [](std::span<const double> x) { return oracle::heat_kernel({x[0], x[1]}, 1.0); });
  CHECK(integrate(gauss) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("Lq norms and distances") {
  const TensorGrid g = TensorGrid::cube(1, 1.0, 5);
  const Field f(g, std::vector<double>{1, -2, 3, 0, 1});
  const double h = 0.4;
  CHECK(lq_norm(f, 1.0) == doctest::Approx(7.0 * h));
  CHECK(lq_norm(f, 2.0) == doctest::Approx(std::sqrt(15.0 * h)));
  CHECK(lq_norm(f, kInfNorm) == 3.0);
  CHECK_THROWS(lq_norm(f, 0.5));
  const Field z(g, 0.0);
  CHECK(lq_distance(f, z, 1.0) == doctest::Approx(lq_norm(f, 1.0)));
  CHECK_THROWS(lq_distance(f, Field(TensorGrid::cube(1, 1.0, 7)), 1.0));
}

TEST_CASE("decreasing rearrangement against sorting") {
  const TensorGrid g = TensorGrid::cube(2, 1.0, 7);
  const Field f = random_field(g, 1);
  const auto curve = decreasing_rearrangement(f);
  const auto ref = oracle::sorted_cumulative(f.values, g.cell_volume());
  CHECK(curve.total_volume() == doctest::Approx(4.0));
  CHECK(curve.total_mass() == doctest::Approx(ref.back()));
  for (std::size_t k = 0; k < ref.size(); ++k)
    CHECK(curve.mass_at(k * g.cell_volume()) == doctest::Approx(ref[k]).epsilon(1e-12));
  CHECK(std::is_sorted(curve.density.rbegin(), curve.density.rend()));
  CHECK(curve.mass_at(100.0) == doctest::Approx(ref.back()));
}

TEST_CASE("Schwarz symmetrization") {
  const TensorGrid g = TensorGrid::cube(2, 2.0, 9);
  const Field f = random_field(g, 2);
  const Field s = schwarz_symmetrize(f);
  auto a = f.values, b = s.values;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  CHECK(a == b);
  CHECK(s[g.origin()] == *std::max_element(a.begin(), a.end()));
  std::vector<double> x(2), y(2);
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.center_of(i, x);
    for (std::size_t j = 0; j < g.size(); ++j) {
      g.center_of(j, y);
      if (std::hypot(x[0], x[1]) < std::hypot(y[0], y[1]) - 1e-12) CHECK(s[i] >= s[j]);
    }
  }
  const Field ss = schwarz_symmetrize(s);
  CHECK(ss.values == s.values);
  CHECK(concentration_excess(s, f) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("concentration order") {
  const TensorGrid g = TensorGrid::cube(2, 1.0, 7);
  const Field f = random_field(g, 3);
  Field g2 = f;
  for (double& v : g2.values) v += 0.1;
  CHECK(concentration_leq(f, f, 0.0));
  CHECK(concentration_leq(f, g2, 0.0));
  CHECK_FALSE(concentration_leq(g2, f, 1e-6));
  CHECK(concentration_excess(g2, f) > 0.0);
  // A spread field is below a concentrated one of equal mass.
  Field spread(g, 1.0), peak(g, 0.0);
  peak.values[g.origin()] = static_cast<double>(g.size());
  CHECK(concentration_leq(spread, peak, 1e-12));
  CHECK_FALSE(concentration_leq(peak, spread, 1e-6));
}

TEST_CASE("separately symmetric nonincreasing fields") {
  const TensorGrid g = TensorGrid::cube(2, 3.0, 15);
  const Field sym = sample(g, [](std::span<const double> x) { return std::exp(-x[0] * x[0] - 3.0 * std::abs(x[1])); });
  CHECK(is_ssni(sym, 0.0));
  const auto d = ssni_defect(sym);
  CHECK(d.asymmetry == 0.0);
  CHECK(d.increase <= 0.0);
  const Field shifted = sample(g, [](std::span<const double> x) { return std::exp(-(x[0] - 1.0) * (x[0] - 1.0)); });
  CHECK_FALSE(is_ssni(shifted, 1e-8));
  CHECK(ssni_defect(shifted).asymmetry > 0.1);
  const Field ring = sample(g, [](std::span<const double> x) { return std::exp(-(std::abs(x[0]) - 1.0) * (std::abs(x[0]) - 1.0)); });
  CHECK_FALSE(is_ssni(ring, 1e-8));
  CHECK(ssni_defect(ring).asymmetry == 0.0);
  CHECK(ssni_defect(ring).increase > 0.1);
}

TEST_CASE("axis profile") {
  const TensorGrid g({2.0, 1.0}, {9, 5});
  const Field f = sample(g, [](std::span<const double> x) { return 10.0 * x[0] + x[1]; });
  const auto s = axis_profile(f, 0);
  REQUIRE(s.x.size() == 5);
  CHECK(s.x.front() == 0.0);
  CHECK(s.value.back() == doctest::Approx(10.0 * s.x.back()));
}

TEST_CASE("field serialization round trips") {
  const TensorGrid g({1.0, 2.5, 0.5}, {3, 5, 7});
  Field f = random_field(g, 9);
  f.time = 1.25;
  write_field_binary(f, scratch("f.bin"));
  const Field b = read_field_binary(scratch("f.bin"));
  CHECK(b.grid == g);
  CHECK(b.values == f.values);
  CHECK(b.time == f.time);
  write_field_csv(f, scratch("f.csv"));
  const Field c = read_field_csv(scratch("f.csv"));
  CHECK(c.grid == g);
  CHECK(c.values == f.values);
  CHECK(c.time == f.time);
  CHECK_THROWS(read_field_binary(scratch("f.csv")));
}
