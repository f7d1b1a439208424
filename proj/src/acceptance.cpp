#include "aplab/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "aplab/exponents.hpp"
#include "aplab/grid.hpp"
#include "aplab/profiles.hpp"
#include "aplab/solver.hpp"

namespace aplab {

namespace {

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

/// Measured value or NaN when the check stopped before recording it.
double maybe(const CheckReport& r, const std::string& label) {
  for (const auto& [k, v] : r.measured)
    if (k == label) return v;
  return std::nan("");
}

CheckReport negative(CheckReport r) {
  r.name += " (negative)";
  if (!r.notes.empty()) r.notes += "; ";
  r.notes += "negative control, expected to fail";
  return r;
}

Field normalized(Field f, double mass) {
  const double m = integrate(f);
  for (double& v : f.values) v *= mass / m;
  return f;
}

Trajectory single(const Field& f) {
  Trajectory t;
  t.times = {f.time};
  t.fields = {f};
  return t;
}

/// Fields in reverse order on the original time stamps.
Trajectory reversed(const Trajectory& t) {
  Trajectory r = t;
  std::reverse(r.fields.begin(), r.fields.end());
  for (std::size_t k = 0; k < r.size(); ++k) r.fields[k].time = r.times[k];
  return r;
}

// ---------------------------------------------------------------------------

void criterion1(CriterionResult& res, std::mt19937_64& rng) {
  const ExponentVector p({1.5, 1.5});
  const SelfSimilarExponents ss = selfsim_exponents(p);

  CheckReport ex;
  ex.name = "selfsim_exponents";
  ex.tolerance = 1e-12;
  ex.add("alpha", ss.alpha);
  ex.add("sigma_1", ss.sigma[0]);
  ex.add("sigma_2", ss.sigma[1]);
  ex.passed = std::abs(ss.alpha - 4.0) <= 1e-12 && std::abs(ss.sigma[0] - 0.5) <= 1e-12 &&
              std::abs(ss.sigma[1] - 0.5) <= 1e-12;
  res.reports.push_back(ex);

  // Random H1 and H2 exponent vectors, N = 2..4, by rejection.
  std::uniform_real_distribution<double> U(1.0, 2.0);
  std::uniform_int_distribution<int> D(2, 4);
  const int samples = 10000;
  int h3_fail = 0, drawn = 0;
  double worst_identity = 0.0;
  auto identity = [](const ExponentVector& e, const SelfSimilarExponents& s) {
    double w = 0.0;
    for (std::size_t i = 0; i < e.dim(); ++i)
      w = std::max(w, std::abs(s.alpha * (e[i] - 1.0) + e[i] * s.a[i] - (s.alpha + 1.0)) / (s.alpha + 1.0));
    return w;
  };
  worst_identity = identity(p, ss);
  for (int k = 0; k < samples;) {
    const int N = D(rng);
    std::vector<double> v(N);
    for (double& x : v) x = U(rng);
    if (std::any_of(v.begin(), v.end(), [](double x) { return x <= 1.0; })) continue;
    ++drawn;
    const ExponentVector e(v);
    const ConditionReport c = check_conditions(e);
    if (!c.H1 || !c.H2) continue;
    ++k;
    if (!c.H3) ++h3_fail;
    worst_identity = std::max(worst_identity, identity(e, selfsim_exponents(e)));
  }

  CheckReport id;
  id.name = "scaling_identity";
  id.tolerance = 1e-12;
  id.add("max_rel_residual", worst_identity);
  id.passed = worst_identity <= 1e-12;
  id.notes = "alpha (p_i - 1) + p_i a_i = alpha + 1, relative to alpha + 1";
  res.reports.push_back(id);

  CheckReport h3;
  h3.name = "h3_from_h1_h2";
  h3.add("samples", samples);
  h3.add("drawn", drawn);
  h3.add("h3_failures", h3_fail);
  h3.passed = h3_fail == 0;
  res.reports.push_back(h3);

  res.passed = ex.passed && id.passed && h3.passed;
  res.summary = "alpha = " + num(ss.alpha) + ", sigma = " + num(ss.sigma[0]) + "; identity residual " +
                num(worst_identity) + "; H3 failures " + std::to_string(h3_fail) + "/" +
                std::to_string(samples);
}

void criterion2(CriterionResult& res) {
  CheckReport r;
  r.name = "lambda_at_p2";
  r.tolerance = 1e-10;
  double worst = 0.0;
  for (int N = 1; N <= 4; ++N) {
    const double L = cianchi_lambda(ExponentVector::uniform(N, 2.0));
    r.add("N" + std::to_string(N), L);
    worst = std::max(worst, std::abs(L - 1.0));
  }
  r.add("max_deviation", worst);
  r.passed = worst <= 1e-10;
  res.reports.push_back(r);
  res.passed = r.passed;
  res.summary = "max |Lambda - 1| = " + num(worst);
}

void criterion3(CriterionResult& res, std::mt19937_64& rng) {
  const double p = 1.5;
  const OrthotropicProfile prof = OrthotropicProfile::make(2, p, 1.0);
  const ExponentVector e = ExponentVector::uniform(2, p);
  const SelfSimilarExponents ss = selfsim_exponents(e);
  const double alpha = orthotropic_alpha(prof);

  std::uniform_real_distribution<double> U(0.1, 5.0);
  std::bernoulli_distribution S(0.5);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double y[2] = {S(rng) ? U(rng) : -U(rng), S(rng) ? U(rng) : -U(rng)};
    const double F = eval_orthotropic(prof, y);
    for (std::size_t i = 0; i < 2; ++i) {
      const double d = orthotropic_derivative(prof, y, i);
      const double flux = regularized_flux(d, p, 0.0);
      const double drift = alpha / 2.0 * y[i] * F;
      worst = std::max(worst, std::abs(flux + drift) / std::max(std::abs(flux), std::abs(drift)));
    }
  }
  CheckReport fl;
  fl.name = "flux_identity";
  fl.tolerance = 1e-10;
  fl.add("max_rel_residual", worst);
  fl.passed = worst <= 1e-10;
  res.reports.push_back(fl);

  // h-refinement of the finite-difference stationary operator at fixed points.
  const ProfileFn F = [&](Point y) { return eval_orthotropic(prof, y); };
  std::uniform_real_distribution<double> V(0.5, 3.0);
  std::vector<std::array<double, 2>> pts(10);
  for (auto& y : pts) y = {S(rng) ? V(rng) : -V(rng), S(rng) ? V(rng) : -V(rng)};
  const double hs[] = {0.1, 0.05, 0.025, 0.0125};
  std::vector<double> err;
  for (double h : hs) {
    double w = 0.0;
    for (const auto& y : pts) w = std::max(w, std::abs(stationary_residual(F, e, ss, y, h)));
    err.push_back(w);
  }
  CheckReport cv;
  cv.name = "stationary_residual_order";
  cv.tolerance = 1.8;
  double order = kInfNorm;
  for (std::size_t k = 0; k < err.size(); ++k) cv.add("residual_h" + num(hs[k]), err[k]);
  for (std::size_t k = 1; k < err.size(); ++k) {
    const double o = std::log2(err[k - 1] / err[k]);
    cv.add("order_" + std::to_string(k), o);
    order = std::min(order, o);
  }
  cv.add("min_order", order);
  cv.passed = order >= 1.8;
  res.reports.push_back(cv);

  res.passed = fl.passed && cv.passed;
  res.summary = "flux identity residual " + num(worst) + "; residual order " + num(order);
}

void criterion4(CriterionResult& res, std::mt19937_64& rng) {
  const ExponentVector p({1.5, 1.5});
  const SelfSimilarExponents ss = selfsim_exponents(p);
  const UpperBarrier ub = make_upper_barrier(p);
  const LowerBarrier lb = make_lower_barrier(p, 4.0, {1.0, 1.0}, 7.5);
  const ProfileFn Fu = [&](Point y) { return eval_upper_barrier(ub, y); };
  const ProfileFn Fl = [&](Point y) { return eval_lower_barrier(lb, y); };

  // FD tolerance: relative to the barrier value at the point.
  const double h = 1e-3, ftol = 1e-4;
  std::uniform_real_distribution<double> U(0.2, 20.0);
  std::bernoulli_distribution S(0.5);
  double upper = -kInfNorm, lower = kInfNorm;
  for (int k = 0; k < 100; ++k) {
    const double y[2] = {S(rng) ? U(rng) : -U(rng), S(rng) ? U(rng) : -U(rng)};
    upper = std::max(upper, stationary_residual(Fu, p, ss, y, h) / Fu(y));
    lower = std::min(lower, stationary_residual(Fl, p, ss, y, h) / Fl(y));
  }
  CheckReport r;
  r.name = "barrier_signs";
  r.tolerance = ftol;
  r.add("gamma_1", ub.gamma[0]);
  r.add("gamma_2", ub.gamma[1]);
  r.add("A0", lb.A0);
  r.add("A", lb.A);
  r.add("max_upper_residual_rel", upper);
  r.add("min_lower_residual_rel", lower);
  r.passed = upper <= ftol && lower >= -ftol && std::abs(lb.A0 - 6.25) <= 1e-12;
  r.notes = "residuals divided by the barrier value; FD step 1e-3";
  res.reports.push_back(r);
  res.passed = r.passed;
  res.summary = "gamma = " + num(ub.gamma[0]) + ", A0 = " + num(lb.A0) + "; max upper residual/F " +
                num(upper) + ", min lower residual/F " + num(lower);
}

void criterion5(CriterionResult& res) {
  const double p = 1.5, L = 40.0;
  res.passed = true;
  for (int N : {1, 2}) {
    const int n = N == 1 ? 513 : 257;
    const double limit = N == 1 ? 0.02 : 0.04;
    const OrthotropicProfile prof = OrthotropicProfile::make(N, p, 0.1);
    const TensorGrid g = TensorGrid::cube(N, L, n);
    auto B = [&](double t) { return sample(g, [&](Point x) { return barenblatt_solution(prof, x, t); }, t); };
    StepConfig cfg;
    cfg.h = 0.01;
    cfg.boundary = Boundary::no_flux;
    const Trajectory tr = evolve(B(1.0), 2.0, cfg, ExponentVector::uniform(N, p));
    const Field exact = B(2.0);

    CheckReport e;
    e.name = "barenblatt_error_N" + std::to_string(N);
    e.tolerance = limit;
    const double rel = lq_distance(tr.back(), exact, 1.0) / integrate(exact);
    e.add("rel_L1", rel);
    e.add("rel_Linf", lq_distance(tr.back(), exact, kInfNorm) / lq_norm(exact, kInfNorm));
    e.passed = rel < limit;
    CheckReport m = check_mass(tr, 0.01);
    m.name += "_N" + std::to_string(N);
    CheckReport j = check_energy_dissipation(tr, 1e-10);
    j.name += "_N" + std::to_string(N);
    res.passed = res.passed && e.passed && m.passed && j.passed;
    res.summary += (N == 1 ? "" : "; ") + std::string("N=") + std::to_string(N) + ": rel L1 " + num(rel) +
                   ", mass drift " + num(m.value("max_rel_drift")) + ", J monotone " +
                   (j.passed ? "yes" : "no");
    res.reports.push_back(e);
    res.reports.push_back(m);
    res.reports.push_back(j);
  }
}

void criterion6(CriterionResult& res) {
  res.passed = true;
  // p = 1.5 in rescaled variables: the solution spreads like t^2 and would
  // leave any fixed box long before t = 15.
  {
    const ExponentVector p = ExponentVector::uniform(2, 1.5);
    const RescaledConfig rc(p, 0.0);
    const TensorGrid g = TensorGrid::cube(2, 20.0, 257);
    const Field v0 = normalized(
        sample(g, [](Point y) { return std::exp(-(y[0] * y[0] + y[1] * y[1]) / 0.5); }, std::log(0.05)), 4.0);
    StepConfig cfg;
    cfg.h = 0.05;
    cfg.boundary = Boundary::no_flux;
    const Trajectory u = to_original_variables(rescaled_evolve(v0, std::log(15.0), rc, cfg), rc);
    CheckReport r = check_smoothing(u, rc.ss, 1.5, 15.0, 0.1);
    r.name += "_p1.5";
    res.passed = res.passed && r.passed;
    res.summary = "p=1.5 slope " + num(maybe(r, "slope")) + " (-4)";
    res.reports.push_back(r);
  }
  {
    const ExponentVector p = ExponentVector::uniform(2, 1.8);
    const TensorGrid g = TensorGrid::cube(2, 40.0, 257);
    const Field u0 =
        normalized(sample(g, [](Point x) { return std::exp(-(x[0] * x[0] + x[1] * x[1]) / 0.5); }), 1.0);
    StepConfig cfg;
    cfg.h = 0.002;
    cfg.growth = 1.05;
    cfg.h_max = 0.25;
    const Trajectory u = evolve(u0, 15.0, cfg, p);
    CheckReport r = check_smoothing(u, selfsim_exponents(p), 1.5, 15.0, 0.1);
    r.name += "_p1.8";
    res.passed = res.passed && r.passed;
    res.summary += "; p=1.8 slope " + num(maybe(r, "slope")) + " (" +
                   num(-selfsim_exponents(p).alpha) + ")";
    res.reports.push_back(r);
  }
}

void criterion7(CriterionResult& res, std::mt19937_64& rng) {
  const ExponentVector p({1.4, 1.8});
  const TensorGrid g = TensorGrid::cube(2, 6.0, 65);
  StepConfig cfg;
  cfg.h = 0.01;
  const double T = 0.5, tol = 10.0 * cfg.newton_tol;
  auto run = [&](const std::function<double(Point)>& f) { return evolve(sample(g, f), T, cfg, p); };

  auto bump = [](Point x) {
    const double r = x[0] * x[0] / 4.0 + x[1] * x[1] / 4.0;
    return r < 1.0 ? (1.0 - r) * (1.0 - r) : 0.0;
  };
  const Trajectory lo = run([&](Point x) { return 0.5 * bump(x); });
  const Trajectory hi = run(bump);

  std::uniform_real_distribution<double> C(-2.0, 2.0), W(0.4, 1.0), A(0.5, 1.5);
  auto random_bump = [&] {
    std::vector<std::array<double, 4>> g3(3);
    for (auto& b : g3) b = {C(rng), C(rng), W(rng), A(rng)};
    return [g3](Point x) {
      double s = 0.0;
      for (const auto& b : g3)
        s += b[3] * std::exp(-((x[0] - b[0]) * (x[0] - b[0]) + (x[1] - b[1]) * (x[1] - b[1])) / (b[2] * b[2]));
      return s;
    };
  };
  const Trajectory ra = run(random_bump());
  const Trajectory rb = run(random_bump());

  const Trajectory sym = run([](Point x) { return std::exp(-(x[0] * x[0] + 2.0 * x[1] * x[1])); });
  const Trajectory shifted =
      run([](Point x) { return std::exp(-((x[0] - 1.2) * (x[0] - 1.2) + x[1] * x[1]) / 0.5); });

  const std::vector<std::pair<CheckReport, bool>> checks = {
      {check_order(lo, hi, tol), true},
      {negative(check_order(hi, lo, tol)), false},
      {check_L1_contraction(ra, rb, tol), true},
      {negative(check_L1_contraction(reversed(ra), reversed(rb), tol)), false},
      {check_ssni(sym, tol), true},
      {negative(check_ssni(shifted, tol)), false},
      {check_aleksandrov(shifted, 0, tol, +1), true},
      {negative(check_aleksandrov(shifted, 0, tol, -1)), false},
  };
  res.passed = true;
  int ok = 0;
  for (const auto& [r, expect] : checks) {
    const bool good = r.passed == expect;
    ok += good;
    res.passed = res.passed && good;
    res.reports.push_back(r);
  }
  res.summary = std::to_string(ok) + "/" + std::to_string(checks.size()) +
                " checks as designed (4 positive, 4 negative controls), tol/step " + num(tol);
}

void criterion8(CriterionResult& res) {
  const ExponentVector p({1.4, 1.8});
  const TensorGrid g = TensorGrid::cube(2, 10.0, 129);
  const Field u0 = sample(g, [](Point x) {
    const double r = x[0] * x[0] + x[1] * x[1] / 4.0;
    return r < 1.0 ? (1.0 - r) * (1.0 - r) : 0.0;
  });
  StepConfig cfg;
  cfg.h = 0.01;
  cfg.record_every = 5;
  const Trajectory aniso = evolve(u0, 0.5, cfg, p);
  const Trajectory iso = isotropic_evolve(schwarz_symmetrize(u0), 0.5, cfg, pbar(p), cianchi_lambda(p));
  const double tol = 0.1 * (g.spacing(0) + cfg.newton_tol);

  const CheckReport pos = check_concentration(aniso, iso, tol);
  const CheckReport neg = negative(check_concentration(iso, aniso, tol));
  res.reports.push_back(pos);
  res.reports.push_back(neg);
  res.passed = pos.passed && !neg.passed && aniso.size() >= 11;
  res.summary = std::to_string(aniso.size() - 1) + " sampled times, max excess " +
                num(pos.value("max_rel_excess")) + " (tol " + num(tol) + "); swapped control " +
                (neg.passed ? "passed (unexpected)" : "fails");
}

void criterion9(CriterionResult& res) {
  const ExponentVector p({1.4, 1.8});
  const RescaledConfig rc(p, 0.0);
  const TensorGrid g({80.0, 40.0}, {257, 257});
  StepConfig cfg;
  cfg.h = 0.1;
  cfg.boundary = Boundary::no_flux;
  cfg.newton_tol = 1e-11;
  const double stop = 1e-4;
  const SteadyProfile sp = steady_profile(g, 1.0, rc, cfg, stop, 60.0);
  const double top = lq_norm(sp.profile, kInfNorm);

  CheckReport st;
  st.name = "steady_profile";
  st.tolerance = stop;
  st.add("increment", sp.increment);
  st.add("tau", sp.tau);
  st.add("steps", sp.steps);
  st.add("mass_drift", sp.mass_drift);
  st.add("ssni_asymmetry", sp.ssni.asymmetry);
  st.add("ssni_increase", sp.ssni.increase);
  const bool ssni = is_ssni(sp.profile, 1e-10 * top);
  st.passed = sp.increment < stop && ssni;
  st.notes = "SSNI up to 1e-10 of the maximum";
  const CheckReport tails = check_positivity_and_tails(sp.profile, p);
  const CheckReport bar = check_barrier(single(sp.profile), make_upper_barrier(p), 1e-10 * top);
  res.reports.push_back(st);
  res.reports.push_back(tails);
  res.reports.push_back(bar);
  res.passed = st.passed && tails.passed && bar.passed;
  res.summary = "increment " + num(sp.increment) + " after " + std::to_string(sp.steps) +
                " steps, SSNI " + (ssni ? "yes" : "no") + ", tail slopes " + num(maybe(tails, "axis1_slope")) +
                " / " + num(maybe(tails, "axis2_slope")) + ", barrier violation " + num(bar.value("max_violation"));
}

void criterion10(CriterionResult& res) {
  const double p = 1.5, M = 4.0;
  const RescaledConfig rc(ExponentVector::uniform(2, p), 0.0);
  const TensorGrid g = TensorGrid::cube(2, 20.0, 257);
  const Field v0 = normalized(
      sample(g, [](Point y) { return std::abs(y[0]) <= 2.0 && std::abs(y[1]) <= 2.0 ? 1.0 : 0.0; }), M);
  StepConfig cfg;
  cfg.h = 0.05;
  cfg.boundary = Boundary::no_flux;
  cfg.record_every = 5;
  const Trajectory u = to_original_variables(rescaled_evolve(v0, std::log(30.0), rc, cfg), rc);

  ConvergenceOptions opt;
  opt.factor = 3.0;
  opt.monotone_from = 3.0;
  const CheckReport pos = check_convergence_to_barenblatt(u, orthotropic_with_mass(2, p, M), opt);
  const CheckReport neg =
      negative(check_convergence_to_barenblatt(u, orthotropic_with_mass(2, p, M / 2.0), opt));
  res.reports.push_back(pos);
  res.reports.push_back(neg);
  res.passed = pos.passed && !neg.passed;
  res.summary = "L1 " + num(pos.value("L1_first")) + " -> " + num(pos.value("L1_last")) + ", t^4 Linf " +
                num(pos.value("Linf_scaled_first")) + " -> " + num(pos.value("Linf_scaled_last")) +
                "; mass M/2 control plateaus at L1 " + num(neg.value("L1_last"));
}

void criterion11(CriterionResult& res, const AcceptanceOptions& opt) {
  std::vector<std::array<double, 2>> extra = {{4.0 / 3.0, 4.0 / 3.0}};
  std::vector<std::string> expect = {"h2-boundary"};
  for (double p1 = 1.25; p1 <= 1.85 + 1e-12; p1 += 0.1) {
    extra.push_back({p1, 2.0 / 3.0 + (4.0 / 9.0) / (p1 - 2.0 / 3.0)});
    expect.push_back("h2-boundary");
  }
  for (double q : {1.05, 1.1, 1.2}) {
    extra.push_back({2.0 * q, q});
    extra.push_back({q, 2.0 * q});
    expect.push_back("h3-boundary");
    expect.push_back("h3-boundary");
  }
  const int n = 150;
  const std::vector<RegionSample> scan = region_scan(1.0, 2.5, n, extra);
  if (opt.out) write_region_csv(scan, *opt.out / "region_scan.csv");

  int disagree = 0, wrong_label = 0;
  int admissible = 0, boundary = 0;
  for (std::size_t k = 0; k < scan.size(); ++k) {
    disagree += !scan[k].agrees;
    admissible += scan[k].cls.label == "admissible";
    boundary += scan[k].cls.label.find("boundary") != std::string::npos;
  }
  const std::size_t grid_points = static_cast<std::size_t>(n) * n;
  for (std::size_t k = 0; k < extra.size(); ++k) wrong_label += scan[grid_points + k].cls.label != expect[k];

  auto hyp = [](double a, double b) { return (a - 2.0 / 3.0) * (b - 2.0 / 3.0) - 4.0 / 9.0; };
  const double through =
      std::max({std::abs(hyp(2.0, 1.0)), std::abs(hyp(4.0 / 3.0, 4.0 / 3.0)), std::abs(hyp(1.0, 2.0))});

  CheckReport r;
  r.name = "region_scan";
  r.tolerance = 1e-14;
  r.add("points", static_cast<double>(scan.size()));
  r.add("disagreements", disagree);
  r.add("wrong_boundary_labels", wrong_label);
  r.add("admissible", admissible);
  r.add("boundary", boundary);
  r.add("hyperbola_at_special_points", through);
  r.passed = disagree == 0 && wrong_label == 0 && through <= 1e-14;
  res.reports.push_back(r);
  res.passed = r.passed;
  res.summary = std::to_string(scan.size()) + " points, " + std::to_string(disagree) + " disagreements, " +
                std::to_string(wrong_label) + " mislabelled boundary points, hyperbola residual " +
                num(through);
}

void write_outputs(const CriterionResult& r, const std::filesystem::path& dir) {
  for (std::size_t k = 0; k < r.reports.size(); ++k) {
    char name[64];
    std::snprintf(name, sizeof name, "c%02d_%02zu.txt", r.id, k);
    write_report(r.reports[k], dir / name);
  }
}

}  // namespace

const char* criterion_title(int id) {
  switch (id) {
    case 1: return "exponent algebra";
    case 2: return "Lambda at p = 2";
    case 3: return "closed-form profile";
    case 4: return "barrier signs";
    case 5: return "solver vs Barenblatt";
    case 6: return "smoothing exponent";
    case 7: return "contraction/order/SSNI/reflection";
    case 8: return "concentration comparison";
    case 9: return "anisotropic steady profile";
    case 10: return "convergence to Barenblatt";
    case 11: return "region scan";
  }
  return "unknown";
}

CriterionResult run_criterion(int id, const AcceptanceOptions& opt) {
  CriterionResult res;
  res.id = id;
  res.title = criterion_title(id);
  std::mt19937_64 rng(opt.seed + static_cast<std::uint64_t>(id));
  if (opt.out) std::filesystem::create_directories(*opt.out);
  const auto start = std::chrono::steady_clock::now();
  try {
    switch (id) {
      case 1: criterion1(res, rng); break;
      case 2: criterion2(res); break;
      case 3: criterion3(res, rng); break;
      case 4: criterion4(res, rng); break;
      case 5: criterion5(res); break;
      case 6: criterion6(res); break;
      case 7: criterion7(res, rng); break;
      case 8: criterion8(res); break;
      case 9: criterion9(res); break;
      case 10: criterion10(res); break;
      case 11: criterion11(res, opt); break;
      default: throw std::invalid_argument("no criterion " + std::to_string(id));
    }
  } catch (const std::exception& e) {
    res.passed = false;
    res.summary = std::string("error: ") + e.what();
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (opt.out) write_outputs(res, *opt.out);
  return res;
}

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt) {
  std::vector<CriterionResult> out;
  for (int id = 1; id <= kCriterionCount; ++id) {
    if (!opt.only.empty() && std::find(opt.only.begin(), opt.only.end(), id) == opt.only.end()) continue;
    out.push_back(run_criterion(id, opt));
  }
  if (opt.out) {
    std::ofstream os(*opt.out / "summary.txt");
    os << summary_table(out, false);
  }
  return out;
}

std::string format_result(const CriterionResult& r, bool timing) {
  char head[96];
  std::snprintf(head, sizeof head, "[%s] %2d %s: ", r.passed ? "PASS" : "FAIL", r.id, r.title.c_str());
  char tail[32];
  std::snprintf(tail, sizeof tail, " (%.1f s)", r.seconds);
  return head + r.summary + (timing ? tail : "");
}

std::string summary_table(const std::vector<CriterionResult>& results, bool timing) {
  std::ostringstream os;
  int passed = 0;
  for (const auto& r : results) {
    os << format_result(r, timing) << '\n';
    passed += r.passed;
  }
  os << passed << "/" << results.size() << " criteria passed\n";
  return os.str();
}

}  // namespace aplab
