#include <cmath>
#include <filesystem>
#include <random>

#include "aplab/profiles.hpp"
#include "aplab/solver.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace aplab;

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = U(rng);
  return v;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

Field bump(const TensorGrid& g, double cx = 0.0, double scale = 1.0) {
  return sample(g, [&](std::span<const double> x) {
    double r = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) r += (x[i] - (i == 0 ? cx : 0.0)) * (x[i] - (i == 0 ? cx : 0.0));
    return scale * std::exp(-r);
  });
}

}  // namespace

TEST_CASE("boundary names") {
  CHECK(boundary_from_string("dirichlet") == Boundary::dirichlet_zero);
  CHECK(boundary_from_string("no_flux") == Boundary::no_flux);
  CHECK(boundary_from_string(to_string(Boundary::no_flux)) == Boundary::no_flux);
  CHECK_THROWS(boundary_from_string("periodic"));
}

TEST_CASE("step configuration validation") {
  StepConfig c;
  CHECK_NOTHROW(c.validate());
  c.h = 0.0;
  CHECK_THROWS(c.validate());
  c = StepConfig{};
  c.newton_tol = -1.0;
  CHECK_THROWS(c.validate());
  c = StepConfig{};
  c.growth = 1.1;
  CHECK_THROWS(c.validate());  // growth needs h_max
}

TEST_CASE("regularized flux, potential and derivative are consistent") {
  for (double p : {1.3, 1.5, 2.0, 2.7}) {
    for (double eps : {0.0, 1e-3, 0.5}) {
      for (double s : {-2.0, -0.3, 0.01, 0.7, 3.0}) {
        const double d = 1e-6;
        CHECK(regularized_flux(s, p, eps) == doctest::Approx(oracle::flux(s, p, eps)).epsilon(1e-13));
        CHECK((flux_potential(s + d, p, eps) - flux_potential(s - d, p, eps)) / (2 * d) ==
              doctest::Approx(regularized_flux(s, p, eps)).epsilon(1e-6));
        CHECK((regularized_flux(s + d, p, eps) - regularized_flux(s - d, p, eps)) / (2 * d) ==
              doctest::Approx(flux_derivative(s, p, eps)).epsilon(1e-6));
      }
    }
  }
  CHECK(regularized_flux(0.0, 1.5, 0.0) == 0.0);
  CHECK(flux_potential(0.0, 1.5, 1e-3) == 0.0);
}

TEST_CASE("default regularization scale") {
  const TensorGrid g = TensorGrid::cube(2, 1.0, 11);
  const Field f(g, 3.0);
  CHECK(default_eps(f) == doctest::Approx(kDefaultEpsRel * 3.0 / g.min_spacing()));
}

TEST_CASE("operator gradients and Hessians match finite differences") {
  const TensorGrid g({1.0, 1.5}, {5, 7});
  const auto u = random_values(g.size(), 1);
  const AnisotropicOperator A(g, ExponentVector({1.4, 1.8}), 1e-2, Boundary::dirichlet_zero);
  const AnisotropicOperator An(g, ExponentVector({2.5, 1.6}), 1e-2, Boundary::no_flux);
  const IsotropicOperator I(g, 1.6, 0.9, 1e-2, Boundary::dirichlet_zero);
  const IsotropicOperator In(g, 1.6, 0.9, 1e-2, Boundary::no_flux);
  for (const DiffusionOperator* op : {static_cast<const DiffusionOperator*>(&A), static_cast<const DiffusionOperator*>(&An),
                                      static_cast<const DiffusionOperator*>(&I), static_cast<const DiffusionOperator*>(&In)}) {
    std::vector<double> gr;
    op->gradient(u, gr);
    std::vector<Eigen::Triplet<double>> t;
    op->hessian(u, t);
    Eigen::SparseMatrix<double> H(u.size(), u.size());
    H.setFromTriplets(t.begin(), t.end());
    const double e = 1e-6;
    double gerr = 0.0, herr = 0.0, gmax = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
      auto up = u, um = u;
      up[k] += e;
      um[k] -= e;
      gerr = std::max(gerr, std::abs((op->energy(up) - op->energy(um)) / (2 * e) - gr[k]));
      gmax = std::max(gmax, std::abs(gr[k]));
      std::vector<double> gp, gm;
      op->gradient(up, gp);
      op->gradient(um, gm);
      for (std::size_t j = 0; j < u.size(); ++j) herr = std::max(herr, std::abs((gp[j] - gm[j]) / (2 * e) - H.coeff(j, k)));
    }
    CHECK(gerr <= 1e-6 * std::max(1.0, gmax));
    CHECK(herr <= 1e-4);
    CHECK(op->exact_energy(u) >= 0.0);
  }
}

TEST_CASE("no-flux operators annihilate constants") {
  const TensorGrid g = TensorGrid::cube(2, 1.0, 5);
  const std::vector<double> c(g.size(), 0.7);
  std::vector<double> gr;
  AnisotropicOperator(g, ExponentVector({1.4, 1.8}), 1e-3, Boundary::no_flux).gradient(c, gr);
  CHECK(max_diff(gr, std::vector<double>(g.size(), 0.0)) == 0.0);
  IsotropicOperator(g, 1.6, 1.0, 1e-3, Boundary::no_flux).gradient(c, gr);
  CHECK(max_diff(gr, std::vector<double>(g.size(), 0.0)) == 0.0);
}

TEST_CASE("one-dimensional step against a coordinate-descent minimizer") {
  const TensorGrid g = TensorGrid::cube(1, 1.0, 7);
  const auto b = random_values(g.size(), 4);
  for (Boundary bc : {Boundary::dirichlet_zero, Boundary::no_flux}) {
    for (double p : {1.5, 2.6}) {
      StepConfig cfg;
      cfg.h = 0.05;
      cfg.eps = 1e-3;
      cfg.boundary = bc;
      cfg.newton_tol = 1e-13;
      const auto r = elliptic_step(Field(g, b), ExponentVector({p}), cfg);
      const auto ref = oracle::brute_step_1d(b, p, g.spacing(0), cfg.h, cfg.eps, bc == Boundary::dirichlet_zero);
      CHECK(max_diff(r.u.values, ref) <= 1e-8);
      const double e = oracle::step_energy_1d(r.u.values, b, p, g.spacing(0), cfg.h, cfg.eps, bc == Boundary::dirichlet_zero);
      const double eref = oracle::step_energy_1d(ref, b, p, g.spacing(0), cfg.h, cfg.eps, bc == Boundary::dirichlet_zero);
      CHECK(e <= eref + 1e-13);
    }
  }
}

TEST_CASE("quadratic exponent gives the linear heat step") {
  const TensorGrid g({1.0, 2.0}, {5, 7});
  const auto b = random_values(g.size(), 6);
  StepConfig cfg;
  cfg.h = 0.1;
  cfg.eps = 1e-8;  // no effect at p = 2
  cfg.newton_tol = 1e-13;
  for (Boundary bc : {Boundary::dirichlet_zero, Boundary::no_flux}) {
    cfg.boundary = bc;
    const auto r = elliptic_step(Field(g, b), ExponentVector({2.0, 2.0}), cfg);
    const auto ref = oracle::heat_step({5, 7}, {g.spacing(0), g.spacing(1)}, b, cfg.h, bc == Boundary::dirichlet_zero);
    CHECK(max_diff(r.u.values, ref) <= 1e-11);
  }
  // The isotropic operator at pbar = 2, Lambda = 1 is the same Laplacian without boundary terms.
  cfg.boundary = Boundary::no_flux;
  const IsotropicOperator I(g, 2.0, 1.0, 1e-8, Boundary::no_flux);
  const auto r = implicit_step(I, Field(g, b), cfg.h, cfg);
  const auto ref = oracle::heat_step({5, 7}, {g.spacing(0), g.spacing(1)}, b, cfg.h, false);
  CHECK(max_diff(r.u.values, ref) <= 1e-11);
}

TEST_CASE("isotropic quadratic run approaches the heat kernel under refinement") {
  double prev = kInfNorm;
  for (int level = 0; level < 2; ++level) {
    const int n = level == 0 ? 33 : 65;
    const TensorGrid g = TensorGrid::cube(2, 8.0, n);
    auto K = [&](double t) { return sample(g, [&](std::span<const double> x) { return oracle::heat_kernel({x[0], x[1]}, t); }, t); };
    StepConfig cfg;
    cfg.h = level == 0 ? 0.05 : 0.0125;
    cfg.boundary = Boundary::no_flux;
    const Trajectory tr = isotropic_evolve(K(1.0), 1.5, cfg, 2.0, 1.0);
    const double err = lq_distance(tr.back(), K(1.5), kInfNorm) / lq_norm(K(1.5), kInfNorm);
    CHECK(err < 0.05);
    CHECK(err < prev / 2.5);
    prev = err;
  }
}

TEST_CASE("implicit step preserves order") {
  const TensorGrid g = TensorGrid::cube(2, 2.0, 11);
  std::mt19937_64 rng(17);
  StepConfig cfg;
  cfg.h = 0.05;
  for (int trial = 0; trial < 5; ++trial) {
    const auto a = random_values(g.size(), rng());
    auto b = random_values(g.size(), rng(), 0.0, 0.3);
    for (std::size_t k = 0; k < b.size(); ++k) b[k] += a[k];
    const auto ua = elliptic_step(Field(g, a), ExponentVector({1.4, 1.8}), cfg);
    const auto ub = elliptic_step(Field(g, b), ExponentVector({1.4, 1.8}), cfg);
    double worst = -kInfNorm;
    for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, ua.u[k] - ub.u[k]);
    CHECK(worst <= 1e-9);
  }
}

TEST_CASE("evolution dissipates energy and conserves mass without flux") {
  const TensorGrid g = TensorGrid::cube(2, 3.0, 21);
  StepConfig cfg;
  cfg.h = 0.02;
  cfg.boundary = Boundary::no_flux;
  const Trajectory tr = evolve(bump(g), 0.4, cfg, ExponentVector({1.5, 1.7}));
  REQUIRE(tr.diagnostics.size() == 21);
  for (std::size_t k = 1; k < tr.diagnostics.size(); ++k) {
    CHECK(tr.diagnostics[k].energy <= tr.diagnostics[k - 1].energy * (1 + 1e-12));
    CHECK(tr.diagnostics[k].mass == doctest::Approx(tr.diagnostics[0].mass).epsilon(1e-11));
  }
  CHECK(tr.times.back() == doctest::Approx(0.4));
  CHECK(!tr.config.empty());
}

TEST_CASE("geometric stepping and sparse recording") {
  const TensorGrid g = TensorGrid::cube(1, 3.0, 31);
  StepConfig cfg;
  cfg.h = 0.01;
  cfg.growth = 1.5;
  cfg.h_max = 0.2;
  cfg.record_every = 3;
  const Trajectory tr = evolve(bump(g), 1.0, cfg, ExponentVector({1.6}));
  CHECK(tr.times.back() == doctest::Approx(1.0));
  CHECK(tr.fields.size() < tr.diagnostics.size());
  double hmax = 0.0;
  for (std::size_t k = 1; k < tr.diagnostics.size(); ++k) hmax = std::max(hmax, tr.diagnostics[k].h);
  CHECK(hmax <= 0.2 + 1e-14);
  CHECK(tr.diagnostics[1].h == doctest::Approx(0.01));
}

TEST_CASE("source term shifts the step") {
  const TensorGrid g = TensorGrid::cube(1, 1.0, 5);
  StepConfig cfg;
  cfg.h = 0.1;
  const Field zero(g, 0.0), f(g, 1.0);
  const auto r = elliptic_step(zero, ExponentVector({2.0}), cfg, &f);
  const auto ref = oracle::heat_step({5}, {g.spacing(0)}, std::vector<double>(5, 0.1), 0.1, true);
  CHECK(max_diff(r.u.values, ref) <= 1e-11);
}

TEST_CASE("solver failure is reported with its residual") {
  const TensorGrid g = TensorGrid::cube(2, 1.0, 9);
  StepConfig cfg;
  cfg.h = 1.0;
  cfg.max_iters = 1;
  cfg.newton_tol = 1e-14;
  try {
    (void)elliptic_step(bump(g), ExponentVector({1.2, 1.3}), cfg);
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(e.last_residual() > 0.0);
  }
}

TEST_CASE("interrupted run keeps the last good state") {
  const TensorGrid g = TensorGrid::cube(2, 1.0, 9);
  StepConfig cfg;
  cfg.h = 0.5;
  cfg.max_iters = 1;
  cfg.newton_tol = 1e-14;
  const Field u0 = bump(g);
  try {
    (void)evolve(u0, 2.0, cfg, ExponentVector({1.2, 1.3}));
    FAIL("expected InterruptedRun");
  } catch (const InterruptedRun& e) {
    const Trajectory& tr = e.partial();
    REQUIRE(tr.size() == 1);
    CHECK(tr.times[0] == 0.0);
    CHECK(max_diff(tr.fields[0].values, u0.values) == 0.0);
    CHECK(tr.diagnostics.size() == 1);
    CHECK_FALSE(tr.config.empty());
    CHECK(e.time() > 0.0);
  }
}

TEST_CASE("drift matrix conserves mass") {
  const TensorGrid g({3.0, 2.0}, {9, 7});
  const RescaledConfig rc(ExponentVector({1.4, 1.8}));
  const auto D = drift_matrix(g, rc);
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(g.size());
  const Eigen::VectorXd col = D.transpose() * ones;
  CHECK(col.cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("truncated orthotropic profile is nearly steady in rescaled variables") {
  const double p = 1.5;
  const auto prof = orthotropic_with_mass(2, p, 1.0);
  const RescaledConfig rc(ExponentVector::uniform(2, p));
  StepConfig cfg;
  cfg.h = 0.1;
  cfg.boundary = Boundary::no_flux;
  double prev = kInfNorm;
  for (int n : {31, 61}) {
    const TensorGrid g = TensorGrid::cube(2, 6.0, n);
    const Field F = sample(g, [&](std::span<const double> y) { return eval_orthotropic(prof, y); });
    const auto r = rescaled_step(F, 0.1, rc, cfg);
    const double change = lq_distance(r.u, F, 1.0) / integrate(F);
    CHECK(change < 0.01);
    CHECK(change < 0.6 * prev);  // first-order drift discretization
    CHECK(integrate(r.u) == doctest::Approx(integrate(F)).epsilon(1e-12));
    prev = change;
  }
}

TEST_CASE("rescaled flow keeps mass and symmetry") {
  const TensorGrid g = TensorGrid::cube(2, 5.0, 31);
  StepConfig cfg;
  cfg.h = 0.1;
  cfg.boundary = Boundary::no_flux;
  const RescaledConfig rc(ExponentVector({1.4, 1.8}));
  const Trajectory tr = rescaled_evolve(bump(g), 1.0, rc, cfg);
  CHECK(integrate(tr.back()) == doctest::Approx(integrate(tr.fields.front())).epsilon(1e-11));
  CHECK(is_ssni(tr.back(), 1e-10));
  CHECK(tr.times.back() == doctest::Approx(1.0));
}

TEST_CASE("steady profile is found and is separately symmetric") {
  const TensorGrid g = TensorGrid::cube(2, 12.0, 41);
  StepConfig cfg;
  cfg.h = 0.2;
  cfg.boundary = Boundary::no_flux;
  cfg.newton_tol = 1e-11;
  const RescaledConfig rc(ExponentVector::uniform(2, 1.5));
  const auto sp = steady_profile(g, 1.0, rc, cfg, 1e-4, 40.0);
  CHECK(sp.increment < 1e-4);
  CHECK(sp.mass_drift < 1e-10);
  CHECK(is_ssni(sp.profile, 1e-10));
  CHECK(integrate(sp.profile) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK_THROWS_AS(steady_profile(g, 1.0, rc, cfg, 1e-12, 0.4), SolverError);
}

TEST_CASE("change back to original variables") {
  const TensorGrid g = TensorGrid::cube(2, 2.0, 11);
  const RescaledConfig rc(ExponentVector({1.4, 1.8}));
  Field v = bump(g);
  v.time = std::log(3.0);
  const Field u = to_original_variables(v, rc);
  CHECK(u.time == doctest::Approx(3.0));
  CHECK(u.grid.half_width(0) == doctest::Approx(2.0 * std::pow(3.0, rc.ss.a[0])));
  CHECK(u.grid.half_width(1) == doctest::Approx(2.0 * std::pow(3.0, rc.ss.a[1])));
  CHECK(integrate(u) == doctest::Approx(integrate(v)).epsilon(1e-12));
  CHECK(lq_norm(u, kInfNorm) == doctest::Approx(std::pow(3.0, -rc.ss.alpha) * lq_norm(v, kInfNorm)));
  const RescaledConfig shifted(ExponentVector({1.4, 1.8}), 1.0);
  CHECK(to_original_variables(v, shifted).time == doctest::Approx(2.0));
}

TEST_CASE("trajectory checkpoint round trip") {
  const TensorGrid g = TensorGrid::cube(2, 2.0, 9);
  StepConfig cfg;
  cfg.h = 0.05;
  const Trajectory tr = evolve(bump(g), 0.2, cfg, ExponentVector({1.5, 1.5}));
  const auto dir = std::filesystem::temp_directory_path() / "aplab_tests" / "traj";
  std::filesystem::remove_all(dir);
  write_trajectory(tr, dir);
  const Trajectory back = read_trajectory(dir);
  REQUIRE(back.size() == tr.size());
  CHECK(back.times == tr.times);
  for (std::size_t k = 0; k < tr.size(); ++k) CHECK(back.fields[k].values == tr.fields[k].values);
  REQUIRE(back.diagnostics.size() == tr.diagnostics.size());
  CHECK(back.diagnostics.back().energy == tr.diagnostics.back().energy);
  CHECK(back.config == tr.config);
}
