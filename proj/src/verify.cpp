#include "aplab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace aplab {

namespace {

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double max_abs(const Field& f) { return lq_norm(f, kInfNorm); }

double box_volume(const TensorGrid& g) { return g.cell_volume() * static_cast<double>(g.size()); }

void require_paired(const Trajectory& a, const Trajectory& b) {
  if (a.size() != b.size()) throw std::invalid_argument("trajectories have different lengths");
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (!(a.fields[k].grid == b.fields[k].grid))
      throw std::invalid_argument("trajectories live on different grids");
    if (std::abs(a.times[k] - b.times[k]) > 1e-9 * std::max(1.0, std::abs(a.times[k])))
      throw std::invalid_argument("trajectories are recorded at different times");
  }
}

double scale_of(const Trajectory& t) {
  if (t.fields.empty()) return 1.0;
  const double m = max_abs(t.fields.front());
  return m > 0.0 ? m : 1.0;
}

}  // namespace

double CheckReport::value(const std::string& label) const {
  for (const auto& [k, v] : measured)
    if (k == label) return v;
  throw std::out_of_range("no measured value '" + label + "' in report " + name);
}

std::string CheckReport::to_text() const {
  std::ostringstream os;
  os << "check = " << name << '\n';
  os << "passed = " << (passed ? "true" : "false") << '\n';
  os << "tolerance = " << fmt(tolerance) << '\n';
  for (const auto& [k, v] : measured) os << "measured." << k << " = " << fmt(v) << '\n';
  std::string n = notes;
  std::replace(n.begin(), n.end(), '\n', ' ');
  os << "notes = " << n << '\n';
  return os.str();
}

CheckReport parse_report(const std::string& text) {
  CheckReport r;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq), val = line.substr(eq + 3);
    if (key == "check") {
      r.name = val;
    } else if (key == "passed") {
      r.passed = val == "true";
    } else if (key == "tolerance") {
      r.tolerance = std::stod(val);
    } else if (key == "notes") {
      r.notes = val;
    } else if (key.rfind("measured.", 0) == 0) {
      r.measured.emplace_back(key.substr(9), std::stod(val));
    }
  }
  return r;
}

void write_report(const CheckReport& r, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << r.to_text();
}

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y, double keep_fraction) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_loglog: size mismatch");
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
    throw std::invalid_argument("fit_loglog: keep_fraction must lie in (0,1]");
  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (x[k] > 0.0 && y[k] > 0.0) {
      lx.push_back(std::log(x[k]));
      ly.push_back(std::log(y[k]));
    }
  }
  if (lx.size() < 2) throw std::invalid_argument("fit_loglog: fewer than two positive points");
  const auto [mn, mx] = std::minmax_element(lx.begin(), lx.end());
  const double trim = 0.5 * (1.0 - keep_fraction) * (*mx - *mn);
  const double lo = *mn + trim - 1e-12, hi = *mx - trim + 1e-12;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    if (lx[k] < lo || lx[k] > hi) continue;
    sx += lx[k];
    sy += ly[k];
    sxx += lx[k] * lx[k];
    sxy += lx[k] * ly[k];
    ++n;
  }
  const double det = static_cast<double>(n) * sxx - sx * sx;
  if (n < 2 || !(std::abs(det) > 0.0)) throw std::invalid_argument("fit_loglog: degenerate window");
  SlopeFit f;
  f.slope = (static_cast<double>(n) * sxy - sx * sy) / det;
  f.intercept = (sy - f.slope * sx) / static_cast<double>(n);
  f.used = n;
  return f;
}

CheckReport check_mass(const Trajectory& traj, double tol) {
  CheckReport r;
  r.name = "mass";
  r.tolerance = tol;
  if (traj.fields.empty()) throw std::invalid_argument("empty trajectory");
  const double m0 = integrate(traj.fields.front());
  double drift = 0.0;
  for (const Field& f : traj.fields) {
    const double d = integrate(f) - m0;
    drift = std::max(drift, m0 > 0.0 ? std::abs(d) / m0 : std::abs(d));
  }
  r.add("initial_mass", m0);
  r.add("final_mass", integrate(traj.fields.back()));
  r.add("max_rel_drift", drift);
  r.passed = drift <= tol;
  if (m0 == 0.0) r.notes = "zero initial mass; drift measured in absolute terms";
  return r;
}

CheckReport check_lq_decay(const Trajectory& traj, double q, double tol_per_step) {
  CheckReport r;
  r.name = "lq_decay";
  if (traj.fields.empty()) throw std::invalid_argument("empty trajectory");
  const TensorGrid& g = traj.fields.front().grid;
  const double vol = box_volume(g);
  const double allow =
      tol_per_step * scale_of(traj) * (std::isinf(q) ? 1.0 : std::pow(vol, 1.0 / q));
  r.tolerance = allow;
  double worst = -kInfNorm;
  double prev = lq_norm(traj.fields.front(), q);
  const double first = prev;
  for (std::size_t k = 1; k < traj.size(); ++k) {
    const double cur = lq_norm(traj.fields[k], q);
    worst = std::max(worst, cur - prev);
    prev = cur;
  }
  r.add("q", std::isinf(q) ? -1.0 : q);
  r.add("initial_norm", first);
  r.add("final_norm", prev);
  r.add("max_increase", traj.size() > 1 ? worst : 0.0);
  r.passed = traj.size() < 2 || worst <= allow;
  if (std::isinf(q)) r.notes = "q = -1 encodes the max norm";
  return r;
}

CheckReport check_L1_contraction(const Trajectory& a, const Trajectory& b, double tol_per_step) {
  CheckReport r;
  r.name = "L1_contraction";
  require_paired(a, b);
  if (a.fields.empty()) throw std::invalid_argument("empty trajectory");
  const double allow = tol_per_step * std::max(scale_of(a), scale_of(b)) * box_volume(a.fields[0].grid);
  r.tolerance = allow;
  double prev = lq_distance(a.fields[0], b.fields[0], 1.0);
  const double first = prev;
  double worst = 0.0;
  for (std::size_t k = 1; k < a.size(); ++k) {
    const double cur = lq_distance(a.fields[k], b.fields[k], 1.0);
    worst = std::max(worst, cur - prev);
    prev = cur;
  }
  r.add("initial_distance", first);
  r.add("final_distance", prev);
  r.add("max_increase", worst);
  r.passed = worst <= allow;
  return r;
}

CheckReport check_order(const Trajectory& a, const Trajectory& b, double tol_per_step) {
  CheckReport r;
  r.name = "order";
  require_paired(a, b);
  const double scale = std::max(scale_of(a), scale_of(b));
  r.tolerance = tol_per_step * scale;
  double worst = -kInfNorm;  // largest a - b - allowance
  double worst_raw = -kInfNorm;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double allow = static_cast<double>(k + 1) * tol_per_step * scale;
    for (std::size_t c = 0; c < a.fields[k].size(); ++c) {
      const double d = a.fields[k][c] - b.fields[k][c];
      worst_raw = std::max(worst_raw, d);
      worst = std::max(worst, d - allow);
    }
  }
  r.add("max_violation", worst_raw);
  r.passed = worst <= 0.0;
  r.notes = "allowance grows by the tolerance with each record";
  return r;
}

CheckReport check_energy_dissipation(const Trajectory& traj, double rel_tol) {
  CheckReport r;
  r.name = "energy_dissipation";
  if (traj.diagnostics.empty()) throw std::invalid_argument("trajectory has no diagnostics");
  const double J0 = traj.diagnostics.front().energy;
  const double allow = rel_tol * std::max(std::abs(J0), 1e-300);
  r.tolerance = allow;
  double worst = -kInfNorm;
  for (std::size_t k = 1; k < traj.diagnostics.size(); ++k)
    worst = std::max(worst, traj.diagnostics[k].energy - traj.diagnostics[k - 1].energy);
  r.add("initial_energy", J0);
  r.add("final_energy", traj.diagnostics.back().energy);
  r.add("max_increase", traj.diagnostics.size() > 1 ? worst : 0.0);
  r.passed = traj.diagnostics.size() < 2 || worst <= allow;
  return r;
}

CheckReport check_smoothing(const Trajectory& traj, const SelfSimilarExponents& ss, double t_min,
                            double t_max, double rel_tol) {
  CheckReport r;
  r.name = "smoothing";
  r.tolerance = rel_tol;
  if (traj.fields.empty()) throw std::invalid_argument("empty trajectory");
  const double M = integrate(traj.fields.front());
  const double N = static_cast<double>(ss.dim());
  std::vector<double> t, m;
  double C = 0.0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double tk = traj.times[k];
    if (tk < t_min * (1 - 1e-12) || tk > t_max * (1 + 1e-12)) continue;
    const double sup = max_abs(traj.fields[k]);
    t.push_back(tk);
    m.push_back(sup);
    if (M > 0.0) C = std::max(C, sup * std::pow(tk, ss.alpha) / std::pow(M, ss.pbar * ss.alpha / N));
  }
  r.add("target_slope", -ss.alpha);
  r.add("samples", static_cast<double>(t.size()));
  r.add("mass", M);
  r.add("fitted_constant", C);
  if (t.size() < 3) {
    r.notes = "fewer than three samples in the window";
    return r;
  }
  const SlopeFit f = fit_loglog(t, m, 0.6);
  r.add("slope", f.slope);
  r.add("points_used", static_cast<double>(f.used));
  r.add("rel_error", std::abs(f.slope + ss.alpha) / ss.alpha);
  r.passed = std::abs(f.slope + ss.alpha) <= rel_tol * ss.alpha;
  r.notes = "fit on the middle 60% of the log t window; fitted_constant is the smallest C "
            "for which the L1-Linf bound holds on the window";
  return r;
}

CheckReport check_ssni(const Trajectory& traj, double tol_per_step) {
  CheckReport r;
  r.name = "ssni";
  const double scale = scale_of(traj);
  r.tolerance = tol_per_step * scale;
  double worst = 0.0, worst_excess = -kInfNorm;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const SsniDefect d = ssni_defect(traj.fields[k]);
    const double v = std::max(d.asymmetry, d.increase);
    worst = std::max(worst, v);
    worst_excess = std::max(worst_excess, v - static_cast<double>(k + 1) * tol_per_step * scale);
  }
  r.add("max_defect", worst);
  r.passed = worst_excess <= 0.0;
  return r;
}

CheckReport check_aleksandrov(const Trajectory& traj, std::size_t axis, double tol_per_step, int side) {
  CheckReport r;
  r.name = "aleksandrov";
  if (side != 1 && side != -1) throw std::invalid_argument("side must be +1 or -1");
  const double scale = scale_of(traj);
  r.tolerance = tol_per_step * scale;
  double worst = -kInfNorm, worst_excess = -kInfNorm;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const Field& f = traj.fields[k];
    if (axis >= f.grid.dim()) throw std::invalid_argument("axis out of range");
    const double allow = static_cast<double>(k + 1) * tol_per_step * scale;
    for (std::size_t c = 0; c < f.size(); ++c) {
      const double x = f.grid.center(axis, f.grid.coord(c, axis));
      if (side * x <= 0.0) continue;
      const double d = f[f.grid.mirror(c, axis)] - f[c];
      worst = std::max(worst, d);
      worst_excess = std::max(worst_excess, d - allow);
    }
  }
  r.add("axis", static_cast<double>(axis));
  r.add("side", side);
  r.add("max_violation", worst);
  r.passed = worst_excess <= 0.0;
  return r;
}

double calibrate_fstar(const Trajectory& rescaled) {
  double m = 0.0;
  for (const Field& f : rescaled.fields) m = std::max(m, max_abs(f));
  return m;
}

CheckReport check_barrier(const Trajectory& rescaled, const UpperBarrier& barrier, double tol) {
  CheckReport r;
  r.name = "barrier";
  r.tolerance = tol;
  const double Fstar = barrier.Fstar ? *barrier.Fstar : calibrate_fstar(rescaled);
  double worst = -kInfNorm, min_ratio = kInfNorm;
  std::vector<double> y;
  for (const Field& v : rescaled.fields) {
    const TensorGrid& g = v.grid;
    if (g.dim() != barrier.p.dim()) throw std::invalid_argument("barrier and grid dimensions differ");
    y.resize(g.dim());
    const std::size_t o = g.origin();
    for (std::size_t c = 0; c < v.size(); ++c) {
      g.center_of(c, y);
      double bound = Fstar;
      if (c != o) {
        const double fb = eval_upper_barrier(barrier, y);
        if (fb < Fstar) {
          bound = fb;
          if (v[c] > 0.0) min_ratio = std::min(min_ratio, fb / v[c]);
        }
      }
      worst = std::max(worst, v[c] - bound);
    }
  }
  r.add("Fstar", Fstar);
  r.add("max_violation", worst);
  r.add("min_tail_ratio", min_ratio);
  r.passed = worst <= tol;
  r.notes = barrier.Fstar ? "F_* supplied" : "F_* calibrated as the largest value on the trajectory";
  return r;
}

CheckReport check_concentration(const Trajectory& aniso, const Trajectory& iso, double tol) {
  CheckReport r;
  r.name = "concentration";
  require_paired(aniso, iso);
  r.tolerance = tol;
  double worst = -kInfNorm, worst_norm = -kInfNorm;
  const double qs[] = {1.0, 2.0, kInfNorm};
  for (std::size_t k = 0; k < aniso.size(); ++k) {
    const double mass = lq_norm(iso.fields[k], 1.0);
    const double ex = concentration_excess(aniso.fields[k], iso.fields[k]);
    worst = std::max(worst, mass > 0.0 ? ex / mass : ex);
    for (double q : qs) {
      const double a = lq_norm(aniso.fields[k], q), b = lq_norm(iso.fields[k], q);
      worst_norm = std::max(worst_norm, b > 0.0 ? (a - b) / b : a);
    }
  }
  r.add("times", static_cast<double>(aniso.size()));
  r.add("max_rel_excess", worst);
  r.add("max_rel_norm_excess", worst_norm);
  r.passed = worst <= tol && worst_norm <= tol;
  r.notes = "excesses relative to the symmetrized run; q in {1, 2, inf}";
  return r;
}

CheckReport check_convergence_to_barenblatt(const Trajectory& traj, const OrthotropicProfile& target,
                                            const ConvergenceOptions& opt) {
  CheckReport r;
  r.name = "convergence_to_barenblatt";
  r.tolerance = opt.factor;
  const double alpha = orthotropic_alpha(target);
  std::vector<double> e1, einf, ts;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double t = traj.times[k];
    if (!(t > 0.0)) continue;
    const Field& u = traj.fields[k];
    const Field B = sample(u.grid, [&](Point x) { return barenblatt_solution(target, x, t); }, t);
    e1.push_back(lq_distance(u, B, 1.0));
    einf.push_back(std::pow(t, alpha) * lq_distance(u, B, kInfNorm));
    ts.push_back(t);
  }
  if (ts.size() < 2) throw std::invalid_argument("need at least two samples with t > 0");
  auto monotone = [&](const std::vector<double>& e) {
    for (std::size_t k = 1; k < e.size(); ++k)
      if (ts[k - 1] >= opt.monotone_from * (1 - 1e-12) && e[k] > e[k - 1] * (1.0 + opt.slack)) return false;
    return true;
  };
  const double r1 = e1.front() / e1.back(), rinf = einf.front() / einf.back();
  const bool m1 = monotone(e1), minf = monotone(einf);
  r.add("target_mass", orthotropic_mass(target));
  r.add("t_first", ts.front());
  r.add("t_last", ts.back());
  r.add("L1_first", e1.front());
  r.add("L1_last", e1.back());
  r.add("L1_ratio", r1);
  r.add("L1_monotone", m1);
  r.add("Linf_scaled_first", einf.front());
  r.add("Linf_scaled_last", einf.back());
  r.add("Linf_scaled_ratio", rinf);
  r.add("Linf_scaled_monotone", minf);
  r.passed = r1 >= opt.factor && rinf >= opt.factor && m1 && minf;
  r.notes = "tolerance is the required decrease factor; monotonicity checked from t = " +
            fmt(opt.monotone_from);
  return r;
}

CheckReport check_positivity(const Trajectory& traj, int margin) {
  CheckReport r;
  r.name = "positivity";
  r.tolerance = 0.0;
  if (traj.fields.empty()) throw std::invalid_argument("empty trajectory");
  double worst = kInfNorm;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (traj.times[k] <= traj.times.front()) continue;
    const Field& f = traj.fields[k];
    for (std::size_t c = 0; c < f.size(); ++c) {
      bool inside = true;
      for (std::size_t i = 0; i < f.grid.dim() && inside; ++i) {
        const int j = f.grid.coord(c, i);
        inside = j >= margin && j < f.grid.cells(i) - margin;
      }
      if (inside) worst = std::min(worst, f[c]);
    }
  }
  if (std::isinf(worst)) {
    r.notes = "no recorded time after the initial one";
    return r;
  }
  r.add("interior_min", worst);
  r.add("margin_cells", margin);
  r.passed = worst > 0.0;
  return r;
}

CheckReport check_positivity_and_tails(const Field& profile, const ExponentVector& p,
                                       const TailWindow& win, int margin) {
  CheckReport r;
  r.name = "positivity_and_tails";
  r.tolerance = win.slack;
  if (p.dim() != profile.grid.dim()) throw std::invalid_argument("exponent and grid dimensions differ");
  Trajectory one;
  one.fields.push_back(profile);
  one.times.push_back(1.0);
  one.fields.push_back(profile);
  one.times.push_back(2.0);
  const CheckReport pos = check_positivity(one, margin);
  r.add("interior_min", pos.value("interior_min"));
  bool ok = pos.passed;
  for (std::size_t i = 0; i < p.dim(); ++i) {
    if (!(p[i] < 2.0)) throw std::invalid_argument("tail slopes need p_i < 2");
    const double target = -p[i] / (2.0 - p[i]);
    const AxisSamples s = axis_profile(profile, i);
    std::vector<double> x, v;
    const double L = profile.grid.half_width(i);
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (s.x[k] >= win.inner * L && s.x[k] <= win.outer * L && s.value[k] > 0.0) {
        x.push_back(s.x[k]);
        v.push_back(s.value[k]);
      }
    }
    const std::string ax = "axis" + std::to_string(i + 1);
    r.add(ax + "_target", target);
    if (x.size() < 2) {
      r.notes += ax + ": fewer than two positive samples in the window; ";
      ok = false;
      continue;
    }
    const SlopeFit f = fit_loglog(x, v, win.keep);
    r.add(ax + "_slope", f.slope);
    r.add(ax + "_rel_error", std::abs(f.slope - target) / std::abs(target));
    ok = ok && std::abs(f.slope - target) <= win.slack * std::abs(target);
  }
  r.passed = ok;
  r.notes += "tail fit on [" + fmt(win.inner) + ", " + fmt(win.outer) + "] x half-width per axis";
  return r;
}

}  // namespace aplab
