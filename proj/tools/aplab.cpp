// Command-line front end.  Options may come from flags, from key=value
// words (`aplab exponents N=2 p=1.5,1.5`) or from an INI file given with
// --config whose [section] names match the subcommands; flags win.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "aplab/acceptance.hpp"
#include "aplab/exponents.hpp"
#include "aplab/grid.hpp"
#include "aplab/profiles.hpp"
#include "aplab/solver.hpp"
#include "aplab/verify.hpp"

namespace fs = std::filesystem;
using namespace aplab;

namespace {

enum Exit { ok = 0, bad_config = 2, solver_failed = 3, check_failed = 4 };

std::string join(std::span<const double> v) {
  std::string s;
  char buf[32];
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.10g", v[i]);
    s += (i ? ", " : "") + std::string(buf);
  }
  return s;
}

/// One value broadcast to N entries, or exactly N values.
std::vector<double> per_axis(const std::vector<double>& v, std::size_t N, const char* what) {
  if (v.size() == 1) return std::vector<double>(N, v[0]);
  if (v.size() != N) throw std::invalid_argument(std::string(what) + ": need 1 or N values");
  return v;
}

std::vector<int> per_axis(const std::vector<int>& v, std::size_t N, const char* what) {
  if (v.size() == 1) return std::vector<int>(N, v[0]);
  if (v.size() != N) throw std::invalid_argument(std::string(what) + ": need 1 or N values");
  return v;
}

struct Common {
  std::string out = "out";
  std::uint64_t seed = 20240611;
};

struct Exponents {
  std::vector<double> p;
  std::vector<double> m;
  int N = 0;

  ExponentVector vector() const {
    if (p.empty()) throw std::invalid_argument("p: exponents are required");
    const std::size_t n = N > 0 ? static_cast<std::size_t>(N) : p.size();
    if (N > 0 && p.size() != 1 && p.size() != n) throw std::invalid_argument("p: length differs from N");
    return ExponentVector(per_axis(p, n, "p"));
  }
};

void add_exponents(CLI::App* c, Exponents& e) {
  c->add_option("--p", e.p, "diffusion exponents, one value or one per axis")->delimiter(',');
  c->add_option("--N", e.N, "dimension when a single p is given");
}

struct Solver {
  double h = 1e-2;
  double eps = -1.0;
  double tol = 1e-10;
  int max_iters = 60;
  std::string boundary = "dirichlet";
  double growth = 1.0;
  double h_max = 0.0;
  int record_every = 1;

  StepConfig config() const {
    StepConfig c;
    c.h = h;
    c.eps = eps;
    c.newton_tol = tol;
    c.max_iters = max_iters;
    c.boundary = boundary_from_string(boundary);
    c.growth = growth;
    c.h_max = h_max;
    c.record_every = record_every;
    c.validate();
    return c;
  }
};

void add_solver(CLI::App* c, Solver& s) {
  c->add_option("--dt", s.h, "time step (tau step for rescaled runs)");
  c->add_option("--eps", s.eps, "flux regularization, negative for the data-scaled default");
  c->add_option("--tol", s.tol, "Newton tolerance relative to max|u|");
  c->add_option("--max-iters", s.max_iters);
  c->add_option("--boundary", s.boundary, "dirichlet or no_flux");
  c->add_option("--growth", s.growth, "geometric step growth factor");
  c->add_option("--h-max", s.h_max, "step cap when growth > 1");
  c->add_option("--record-every", s.record_every);
}

struct Domain {
  std::vector<double> L{10.0};
  std::vector<int> n{101};

  TensorGrid grid(std::size_t N) const { return TensorGrid(per_axis(L, N, "L"), per_axis(n, N, "n")); }
};

void add_domain(CLI::App* c, Domain& d) {
  c->add_option("--L", d.L, "box half-widths")->delimiter(',');
  c->add_option("--n", d.n, "odd cell counts")->delimiter(',');
}

struct Initial {
  std::string kind = "gauss";
  std::string file;
  double mass = 1.0;
  double width = 1.0;
  std::vector<double> center;
};

void add_initial(CLI::App* c, Initial& i) {
  c->add_option("--init", i.kind, "gauss, square, bump, barenblatt or file");
  c->add_option("--init-file", i.file, "binary field for --init file");
  c->add_option("--mass", i.mass);
  c->add_option("--width", i.width);
  c->add_option("--center", i.center)->delimiter(',');
}

Field initial_field(const Initial& in, const TensorGrid& g, const ExponentVector& p, double t) {
  if (in.kind == "file") {
    Field f = read_field_binary(in.file);
    if (!(f.grid == g)) throw std::invalid_argument("init-file: grid differs from L/n");
    f.time = t;
    return f;
  }
  const std::size_t N = g.dim();
  const std::vector<double> c = in.center.empty() ? std::vector<double>(N, 0.0) : per_axis(in.center, N, "center");
  const double w = in.width;
  if (!(w > 0.0)) throw std::invalid_argument("width must be > 0");
  if (!(in.mass > 0.0)) throw std::invalid_argument("mass must be > 0");
  std::function<double(Point)> f;
  if (in.kind == "gauss") {
    f = [&](Point x) {
      double r = 0.0;
      for (std::size_t i = 0; i < N; ++i) r += (x[i] - c[i]) * (x[i] - c[i]);
      return std::exp(-r / (w * w));
    };
  } else if (in.kind == "square") {
    f = [&](Point x) {
      for (std::size_t i = 0; i < N; ++i)
        if (std::abs(x[i] - c[i]) > w) return 0.0;
      return 1.0;
    };
  } else if (in.kind == "bump") {
    f = [&](Point x) {
      double r = 0.0;
      for (std::size_t i = 0; i < N; ++i) r += (x[i] - c[i]) * (x[i] - c[i]) / (w * w);
      return r < 1.0 ? (1.0 - r) * (1.0 - r) : 0.0;
    };
  } else if (in.kind == "barenblatt") {
    if (!p.orthotropic()) throw std::invalid_argument("init barenblatt needs equal exponents");
    if (!(t > 0.0)) throw std::invalid_argument("init barenblatt needs a start time > 0");
    const auto prof = orthotropic_with_mass(static_cast<int>(N), p[0], in.mass);
    return sample(g, [&](Point x) { return barenblatt_solution(prof, x, t); }, t);
  } else {
    throw std::invalid_argument("init: unknown kind '" + in.kind + "'");
  }
  Field u = sample(g, f, t);
  const double m = integrate(u);
  if (!(m > 0.0)) throw std::invalid_argument("initial datum has no mass on the grid");
  for (double& v : u.values) v *= in.mass / m;
  return u;
}

void write_diagnostics(const Trajectory& tr, const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "time,h,energy,energy_eps,mass,iterations,residual\n";
  char buf[256];
  for (const auto& d : tr.diagnostics) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%d,%.6g\n", d.time, d.h, d.energy, d.energy_eps,
                  d.mass, d.iterations, d.residual);
    os << buf;
  }
}

void save_run(const Trajectory& tr, const fs::path& dir) {
  write_trajectory(tr, dir);
  write_diagnostics(tr, dir / "diagnostics.csv");
}

int interrupted(const InterruptedRun& e, const fs::path& out) {
  const fs::path dir = out / "checkpoint";
  save_run(e.partial(), dir);
  std::fprintf(stderr, "solver failed at t = %g (residual %g): %s\nlast good state written to %s\n", e.time(),
               e.last_residual(), e.what(), dir.c_str());
  return solver_failed;
}

// ---------------------------------------------------------------------------

int cmd_exponents(const Exponents& ex) {
  const ExponentVector p = ex.vector();
  const ConditionReport c = check_conditions(p);
  std::printf("N = %zu\np = %s\npbar = %.10g\np_c = %.10g\n", p.dim(), join(p.values()).c_str(), pbar(p),
              critical_exponent(static_cast<int>(p.dim())));
  std::printf("H1 = %s\nH2 = %s (margin %.6g)\nH3 = %s (margin %.6g)\n", c.H1 ? "holds" : "fails",
              to_string(c.H2_verdict), c.H2_margin, to_string(c.H3_verdict), c.H3_margin);
  if (c.H2) {
    const auto ss = selfsim_exponents(p);
    std::printf("alpha = %.10g\nsigma = %s\na = %s\nbeta = %s\nmu = %.10g\n", ss.alpha, join(ss.sigma).c_str(),
                join(ss.a).c_str(), join(ss.beta).c_str(), ss.mu);
  } else {
    std::printf("alpha = undefined (H2 fails)\n");
  }
  if (std::all_of(p.values().begin(), p.values().end(), [](double v) { return v >= 1.0 + 1e-6; }))
    std::printf("Lambda = %.10g\n", cianchi_lambda(p));
  if (!ex.m.empty()) {
    const DnlParameters d(p, per_axis(ex.m, p.dim(), "m"));
    const DnlExponents r = dnl_exponents(d);
    std::printf("mbar = %.10g\nq = %.10g\nDN2 = %s\n", d.mbar, d.q, r.DN2 ? "holds" : "fails");
    if (r.alpha_nonpositive)
      std::printf("dnl_alpha = undefined (nonpositive denominator)\n");
    else
      std::printf("dnl_alpha = %.10g\n", r.alpha);
    if (!r.sigma.empty()) {
      std::printf("dnl_sigma = %s\nDN3 =", join(r.sigma).c_str());
      for (bool b : r.DN3) std::printf(" %s", b ? "holds" : "fails");
      std::printf("\n");
    }
  }
  for (const auto& d : c.diagnostics) std::printf("# %s\n", d.c_str());
  return ok;
}

struct ProfileArgs {
  std::string kind = "orthotropic";
  double C0 = -1.0;
  double mass = -1.0;
  double extent = 10.0;
  int samples = 201;
  double gamma = 4.0;
  std::vector<double> theta;
  double A = -1.0;
  double Fstar = -1.0;
  double t = 1.0;
  double k = 1.0;
};

int cmd_profile(const Exponents& ex, const ProfileArgs& a, const fs::path& out) {
  const ExponentVector p = ex.vector();
  const std::size_t N = p.dim();
  std::function<double(Point)> F;
  if (a.kind == "orthotropic" || a.kind == "barenblatt") {
    if (!p.orthotropic()) throw std::invalid_argument("profile orthotropic: exponents must be equal");
    const auto prof = a.mass > 0.0 ? orthotropic_with_mass(static_cast<int>(N), p[0], a.mass)
                                   : OrthotropicProfile::make(static_cast<int>(N), p[0], a.C0 > 0.0 ? a.C0 : 1.0);
    if (a.kind == "orthotropic")
      F = [prof](Point y) { return eval_orthotropic(prof, y); };
    else
      F = [prof, t = a.t](Point x) { return barenblatt_solution(prof, x, t); };
  } else if (a.kind == "isotropic") {
    if (!p.orthotropic()) throw std::invalid_argument("profile isotropic: exponents must be equal");
    F = [N, q = p[0], C0 = a.C0 > 0.0 ? a.C0 : 1.0](Point y) {
      return eval_isotropic_barenblatt(static_cast<int>(N), q, C0, y);
    };
  } else if (a.kind == "upper-barrier") {
    const auto b = a.Fstar > 0.0 ? make_upper_barrier(p, a.Fstar) : make_upper_barrier(p);
    F = [b](Point y) { return b.Fstar ? eval_truncated_barrier(b, y) : eval_upper_barrier(b, y); };
    std::printf("gamma = %s\n", join(b.gamma).c_str());
  } else if (a.kind == "lower-barrier") {
    const std::vector<double> theta = a.theta.empty() ? std::vector<double>(N, 1.0) : per_axis(a.theta, N, "theta");
    const double A0 = lower_barrier_A0(p, selfsim_exponents(p), a.gamma, theta);
    const auto b = make_lower_barrier(p, a.gamma, theta, a.A > 0.0 ? a.A : 1.2 * A0);
    std::printf("A0 = %.10g\nA = %.10g\n", b.A0, b.A);
    F = [b](Point y) { return eval_lower_barrier(b, y); };
  } else if (a.kind == "very-singular") {
    if (!p.orthotropic()) throw std::invalid_argument("profile very-singular: exponents must be equal");
    F = [q = p[0], t = a.t, k = a.k](Point x) { return very_singular(q, x, t, k); };
  } else {
    throw std::invalid_argument("profile: unknown kind '" + a.kind + "'");
  }
  if (a.samples < 2) throw std::invalid_argument("samples must be >= 2");

  fs::create_directories(out);
  const fs::path path = out / "profile.csv";
  std::ofstream os(path);
  os << "path,s,value\n";
  char buf[96];
  std::vector<double> y(N);
  auto emit = [&](const std::string& name, auto place) {
    for (int k = 0; k < a.samples; ++k) {
      const double s = a.extent * k / (a.samples - 1);
      place(s);
      double v;
      try {
        v = F(y);
      } catch (const std::domain_error&) {
        v = std::nan("");
      }
      std::snprintf(buf, sizeof buf, ",%.10g,%.17g\n", s, v);
      os << name << buf;
    }
  };
  for (std::size_t i = 0; i < N; ++i)
    emit("axis" + std::to_string(i + 1), [&](double s) {
      std::fill(y.begin(), y.end(), 0.0);
      y[i] = s;
    });
  emit("diagonal", [&](double s) { std::fill(y.begin(), y.end(), s); });
  std::printf("wrote %s\n", path.c_str());
  return ok;
}

int cmd_evolve(const Exponents& ex, const Domain& dom, const Solver& sol, const Initial& init, double t_start,
               double T, bool isotropic, const fs::path& out) {
  const ExponentVector p = ex.vector();
  const TensorGrid g = dom.grid(p.dim());
  const StepConfig cfg = sol.config();
  Field u0 = initial_field(init, g, p, t_start);
  try {
    Trajectory tr;
    if (isotropic) {
      u0 = schwarz_symmetrize(u0);
      tr = isotropic_evolve(u0, T, cfg, pbar(p), cianchi_lambda(p));
    } else {
      tr = evolve(u0, T, cfg, p);
    }
    save_run(tr, out / "trajectory");
    const auto& d = tr.diagnostics.back();
    std::printf("t = %g  mass = %.10g  energy = %.10g  steps = %zu\nwrote %s\n", d.time, d.mass, d.energy,
                tr.diagnostics.size() - 1, (out / "trajectory").c_str());
  } catch (const InterruptedRun& e) {
    return interrupted(e, out);
  }
  return ok;
}

int cmd_rescaled(const Exponents& ex, const Domain& dom, const Solver& sol, const Initial& init, double tau0,
                 double tau_end, double t0, bool original, const fs::path& out) {
  const ExponentVector p = ex.vector();
  const RescaledConfig rc(p, t0);
  const TensorGrid g = dom.grid(p.dim());
  const Field v0 = initial_field(init, g, p, tau0);
  try {
    const Trajectory tr = rescaled_evolve(v0, tau_end, rc, sol.config());
    save_run(tr, out / "rescaled");
    if (original) save_run(to_original_variables(tr, rc), out / "original");
    std::printf("tau = %g  mass = %.10g  steps = %zu\nwrote %s\n", tr.times.back(), tr.diagnostics.back().mass,
                tr.diagnostics.size() - 1, (out / "rescaled").c_str());
  } catch (const InterruptedRun& e) {
    return interrupted(e, out);
  }
  return ok;
}

int cmd_selfsim(const Exponents& ex, const Domain& dom, const Solver& sol, double mass, double stop, double budget,
                const fs::path& out) {
  const ExponentVector p = ex.vector();
  const RescaledConfig rc(p);
  const SteadyProfile sp = steady_profile(dom.grid(p.dim()), mass, rc, sol.config(), stop, budget);
  fs::create_directories(out);
  write_field_binary(sp.profile, out / "selfsim.bin");
  write_field_csv(sp.profile, out / "selfsim.csv");
  const double top = lq_norm(sp.profile, kInfNorm);
  Trajectory one;
  one.times = {sp.profile.time};
  one.fields = {sp.profile};
  const CheckReport tails = check_positivity_and_tails(sp.profile, p);
  const CheckReport bar = check_barrier(one, make_upper_barrier(p), 1e-10 * top);
  write_report(tails, out / "tails.txt");
  write_report(bar, out / "barrier.txt");
  std::printf("steps = %d\ntau = %g\nincrement = %.4g\nmass_drift = %.4g\nmax = %.10g\n", sp.steps, sp.tau,
              sp.increment, sp.mass_drift, top);
  for (std::size_t i = 0; i < p.dim(); ++i) {
    const std::string ax = "axis" + std::to_string(i + 1);
    std::printf("%s tail slope = %.4g (target %.4g)\n", ax.c_str(), tails.value(ax + "_slope"),
                tails.value(ax + "_target"));
  }
  std::printf("tails %s, barrier %s\n", tails.passed ? "pass" : "FAIL", bar.passed ? "pass" : "FAIL");
  return tails.passed && bar.passed ? ok : check_failed;
}

int cmd_region(double lo, double hi, int n, const fs::path& out) {
  const std::array<double, 2> special[] = {{4.0 / 3.0, 4.0 / 3.0}};
  const auto scan = region_scan(lo, hi, n, special);
  fs::create_directories(out);
  write_region_csv(scan, out / "region.csv");
  std::map<std::string, int> counts;
  int disagree = 0;
  for (const auto& s : scan) {
    ++counts[s.cls.label];
    disagree += !s.agrees;
  }
  for (const auto& [label, c] : counts) std::printf("%-12s %d\n", label.c_str(), c);
  std::printf("(4/3, 4/3): %s\ndisagreements = %d\nwrote %s\n", scan.back().cls.label.c_str(), disagree,
              (out / "region.csv").c_str());
  return disagree == 0 ? ok : check_failed;
}

int cmd_verify(const std::string& suite, const std::vector<int>& only, const std::string& traj_dir, double tol,
               const Common& common) {
  const fs::path out = common.out;
  if (suite == "orthotropic-acceptance") {
    AcceptanceOptions opt;
    opt.seed = common.seed;
    opt.out = out / "acceptance";
    opt.only = only;
    int failed = 0;
    std::vector<CriterionResult> results;
    for (int id = 1; id <= kCriterionCount; ++id) {
      if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
      const CriterionResult r = run_criterion(id, opt);
      std::printf("%s\n", format_result(r).c_str());
      std::fflush(stdout);
      failed += !r.passed;
      results.push_back(r);
    }
    fs::create_directories(*opt.out);
    std::ofstream(*opt.out / "summary.txt") << summary_table(results, false);
    std::printf("reports in %s\n", opt.out->c_str());
    return failed ? check_failed : ok;
  }
  if (suite == "trajectory") {
    if (traj_dir.empty()) throw std::invalid_argument("verify trajectory: --trajectory DIR is required");
    const Trajectory tr = read_trajectory(traj_dir);
    std::vector<CheckReport> reports = {check_mass(tr, tol),
                                        check_lq_decay(tr, 1.0, tol),
                                        check_lq_decay(tr, 2.0, tol),
                                        check_lq_decay(tr, kInfNorm, tol),
                                        check_energy_dissipation(tr, tol),
                                        check_positivity(tr, 1)};
    fs::create_directories(out / "verify");
    bool all = true;
    const char* labels[] = {"mass", "L1_decay", "L2_decay", "Linf_decay", "energy", "positivity"};
    for (std::size_t k = 0; k < reports.size(); ++k) {
      const auto& r = reports[k];
      write_report(r, out / "verify" / (std::string(labels[k]) + ".txt"));
      std::printf("[%s] %s\n", r.passed ? "PASS" : "FAIL", labels[k]);
      all = all && r.passed;
    }
    return all ? ok : check_failed;
  }
  throw std::invalid_argument("verify: unknown suite '" + suite + "' (orthotropic-acceptance, trajectory)");
}

/// key=value words become --key value.
std::vector<std::string> normalize_args(int argc, char** argv) {
  std::vector<std::string> out;
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    const auto eq = a.find('=');
    if (a.rfind("-", 0) != 0 && eq != std::string::npos && eq > 0) {
      out.push_back("--" + a.substr(0, eq));
      out.push_back(a.substr(eq + 1));
    } else {
      out.push_back(a);
    }
  }
  std::reverse(out.begin(), out.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical lab for the anisotropic p-Laplacian fast diffusion equation"};
  app.require_subcommand(1);
  app.set_config("--config", "", "INI file; [section] per subcommand");
  Common common;
  app.add_option("--out", common.out, "output directory")->capture_default_str();
  app.add_option("--seed", common.seed, "seed for randomized checks")->capture_default_str();
  app.fallthrough();

  Exponents ex;
  Domain dom;
  Solver sol;
  Initial init;

  auto* c_exp = app.add_subcommand("exponents", "exponent algebra and admissibility table");
  add_exponents(c_exp, ex);
  c_exp->add_option("--m", ex.m, "nonlinearity exponents of the doubly nonlinear equation")->delimiter(',');

  ProfileArgs pa;
  auto* c_prof = app.add_subcommand("profile", "tabulate closed forms and barriers along axes and diagonal");
  add_exponents(c_prof, ex);
  c_prof->add_option("--kind", pa.kind, "orthotropic, barenblatt, isotropic, upper-barrier, lower-barrier, very-singular");
  c_prof->add_option("--C0", pa.C0);
  c_prof->add_option("--mass", pa.mass, "select C0 by mass");
  c_prof->add_option("--extent", pa.extent);
  c_prof->add_option("--samples", pa.samples);
  c_prof->add_option("--gamma", pa.gamma, "lower barrier exponent");
  c_prof->add_option("--theta", pa.theta)->delimiter(',');
  c_prof->add_option("--A", pa.A, "lower barrier constant, default 1.2 A0");
  c_prof->add_option("--Fstar", pa.Fstar, "upper barrier truncation");
  c_prof->add_option("--t", pa.t, "time for barenblatt and very-singular");
  c_prof->add_option("--k", pa.k, "very-singular constant");

  double t_start = 0.0, T = 1.0;
  bool isotropic = false;
  auto* c_evo = app.add_subcommand("evolve", "implicit time stepping, trajectory checkpoint");
  add_exponents(c_evo, ex);
  add_domain(c_evo, dom);
  add_solver(c_evo, sol);
  add_initial(c_evo, init);
  c_evo->add_option("--t-start", t_start);
  c_evo->add_option("--T", T, "final time");
  c_evo->add_flag("--isotropic", isotropic, "run the symmetrized isotropic comparison problem");

  double tau0 = 0.0, tau_end = 1.0, t0 = 0.0;
  bool original = false;
  auto* c_res = app.add_subcommand("rescaled", "flow in self-similar variables");
  add_exponents(c_res, ex);
  add_domain(c_res, dom);
  add_solver(c_res, sol);
  add_initial(c_res, init);
  c_res->add_option("--tau0", tau0);
  c_res->add_option("--tau-end", tau_end);
  c_res->add_option("--t0", t0, "time shift of the rescaling");
  c_res->add_flag("--original", original, "also write the trajectory in original variables");

  double ss_mass = 1.0, stop = 1e-4, budget = 60.0;
  auto* c_ss = app.add_subcommand("selfsim", "steady profile of the rescaled flow with tail fits");
  add_exponents(c_ss, ex);
  add_domain(c_ss, dom);
  add_solver(c_ss, sol);
  c_ss->add_option("--mass", ss_mass);
  c_ss->add_option("--stop", stop, "stop when |dv|_1 < stop * mass");
  c_ss->add_option("--budget", budget, "tau budget");

  double lo = 1.0, hi = 2.5;
  int rn = 150;
  auto* c_reg = app.add_subcommand("region", "planar (p1, p2) classification scan");
  c_reg->add_option("--lo", lo);
  c_reg->add_option("--hi", hi);
  c_reg->add_option("--n", rn);

  std::string suite = "orthotropic-acceptance", traj_dir;
  std::vector<int> only;
  double vtol = 1e-9;
  auto* c_ver = app.add_subcommand("verify", "check suites");
  c_ver->add_option("--suite", suite, "orthotropic-acceptance or trajectory");
  c_ver->add_option("--only", only, "criterion numbers")->delimiter(',');
  c_ver->add_option("--trajectory", traj_dir, "stored trajectory directory");
  c_ver->add_option("--tol", vtol);

  try {
    app.parse(normalize_args(argc, argv));
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  const fs::path out = common.out;
  try {
    if (*c_exp) return cmd_exponents(ex);
    if (*c_prof) return cmd_profile(ex, pa, out);
    if (*c_evo) return cmd_evolve(ex, dom, sol, init, t_start, T, isotropic, out);
    if (*c_res) return cmd_rescaled(ex, dom, sol, init, tau0, tau_end, t0, original, out);
    if (*c_ss) return cmd_selfsim(ex, dom, sol, ss_mass, stop, budget, out);
    if (*c_reg) return cmd_region(lo, hi, rn, out);
    if (*c_ver) return cmd_verify(suite, only, traj_dir, vtol, common);
  } catch (const SolverError& e) {
    std::fprintf(stderr, "solver failed at t = %g (residual %g): %s\n", e.time(), e.last_residual(), e.what());
    return solver_failed;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid configuration: %s\n", e.what());
    return bad_config;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "invalid configuration: %s\n", e.what());
    return bad_config;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return ok;
}
