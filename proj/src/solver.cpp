#include "aplab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "json.hpp"

namespace aplab {

namespace {

constexpr std::size_t kGhost = std::numeric_limits<std::size_t>::max();

using Triplets = std::vector<Eigen::Triplet<double>>;
using SpMat = Eigen::SparseMatrix<double>;

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double data_scale(const std::vector<double>& v) {
  const double m = max_abs(v);
  return m > 0.0 ? m : 1.0;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt(const ExponentVector& p) {
  std::string s;
  for (std::size_t i = 0; i < p.dim(); ++i) s += (i ? "," : "") + fmt(p[i]);
  return s;
}

}  // namespace

const char* to_string(Boundary b) {
  return b == Boundary::dirichlet_zero ? "dirichlet" : "no_flux";
}

Boundary boundary_from_string(const std::string& s) {
  if (s == "dirichlet" || s == "dirichlet_zero") return Boundary::dirichlet_zero;
  if (s == "no_flux" || s == "neumann") return Boundary::no_flux;
  throw std::invalid_argument("unknown boundary '" + s + "'");
}

void StepConfig::validate() const {
  if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("time step must be positive");
  if (eps == 0.0 || !std::isfinite(eps))
    throw std::invalid_argument("eps must be positive (or negative for the default)");
  if (!(newton_tol > 0.0)) throw std::invalid_argument("newton_tol must be positive");
  if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  if (!(line_search.shrink > 0.0 && line_search.shrink < 1.0))
    throw std::invalid_argument("line search shrink factor must lie in (0,1)");
  if (!(line_search.armijo > 0.0 && line_search.armijo < 0.5))
    throw std::invalid_argument("Armijo constant must lie in (0,1/2)");
  if (growth < 1.0) throw std::invalid_argument("growth must be >= 1");
  if (growth > 1.0 && !(h_max >= h)) throw std::invalid_argument("h_max must be >= h when growth > 1");
  if (record_every < 1) throw std::invalid_argument("record_every must be >= 1");
}

double default_eps(const Field& u) {
  double scale = max_abs(u.values);
  if (scale == 0.0) scale = 1.0;
  return kDefaultEpsRel * scale / u.grid.min_spacing();
}

double regularized_flux(double s, double p, double eps) {
  if (eps == 0.0) return s == 0.0 ? 0.0 : std::copysign(std::pow(std::abs(s), p - 1.0), s);
  return s * std::pow(s * s + eps * eps, 0.5 * (p - 2.0));
}

double flux_potential(double s, double p, double eps) {
  if (eps == 0.0) return std::pow(std::abs(s), p) / p;
  return (std::pow(s * s + eps * eps, 0.5 * p) - std::pow(eps, p)) / p;
}

double flux_derivative(double s, double p, double eps) {
  const double r = s * s + eps * eps;
  return std::pow(r, 0.5 * (p - 4.0)) * (eps * eps + (p - 1.0) * s * s);
}

// ---------------------------------------------------------------------------
// Anisotropic operator

AnisotropicOperator::AnisotropicOperator(TensorGrid grid, ExponentVector p, double eps,
                                         Boundary boundary)
    : grid_(std::move(grid)), p_(std::move(p)), eps_(eps), boundary_(boundary) {
  if (p_.dim() != grid_.dim()) throw std::invalid_argument("exponent and grid dimensions differ");
  if (!(eps_ >= 0.0)) throw std::invalid_argument("eps must be >= 0");
}

// fn(axis, a, b, s) for every edge a -> b with s = (u_b - u_a)/h_axis; a or b
// may be kGhost (value 0) on Dirichlet faces.
template <class EdgeFn>
void AnisotropicOperator::for_each_edge(const std::vector<double>& u, EdgeFn&& fn) const {
  const std::size_t N = grid_.dim();
  const bool dirichlet = boundary_ == Boundary::dirichlet_zero;
  for (std::size_t k = 0; k < grid_.size(); ++k) {
    for (std::size_t i = 0; i < N; ++i) {
      const int c = grid_.coord(k, i);
      const int n = grid_.cells(i);
      const double h = grid_.spacing(i);
      if (c + 1 < n) {
        const std::size_t b = k + grid_.stride(i);
        fn(i, k, b, (u[b] - u[k]) / h);
      } else if (dirichlet) {
        fn(i, k, kGhost, -u[k] / h);
      }
      if (c == 0 && dirichlet) fn(i, kGhost, k, u[k] / h);
    }
  }
}

double AnisotropicOperator::energy_with(const std::vector<double>& u, double eps) const {
  double e = 0.0;
  for_each_edge(u, [&](std::size_t i, std::size_t, std::size_t, double s) {
    e += flux_potential(s, p_[i], eps);
  });
  return e;
}

double AnisotropicOperator::energy(const std::vector<double>& u) const { return energy_with(u, eps_); }

double AnisotropicOperator::exact_energy(const std::vector<double>& u) const {
  return energy_with(u, 0.0);
}

void AnisotropicOperator::gradient(const std::vector<double>& u, std::vector<double>& g) const {
  g.assign(u.size(), 0.0);
  for_each_edge(u, [&](std::size_t i, std::size_t a, std::size_t b, double s) {
    const double q = regularized_flux(s, p_[i], eps_) / grid_.spacing(i);
    if (a != kGhost) g[a] -= q;
    if (b != kGhost) g[b] += q;
  });
}

void AnisotropicOperator::hessian(const std::vector<double>& u, Triplets& out) const {
  for_each_edge(u, [&](std::size_t i, std::size_t a, std::size_t b, double s) {
    const double h = grid_.spacing(i);
    const double w = flux_derivative(s, p_[i], eps_) / (h * h);
    if (a != kGhost) out.emplace_back(a, a, w);
    if (b != kGhost) out.emplace_back(b, b, w);
    if (a != kGhost && b != kGhost) {
      out.emplace_back(a, b, -w);
      out.emplace_back(b, a, -w);
    }
  });
}

// ---------------------------------------------------------------------------
// Isotropic operator

IsotropicOperator::IsotropicOperator(TensorGrid grid, double pbar, double Lambda, double eps,
                                     Boundary boundary)
    : grid_(std::move(grid)), pbar_(pbar), Lambda_(Lambda), eps_(eps), boundary_(boundary) {
  if (!(pbar_ > 1.0)) throw std::invalid_argument("pbar must exceed 1");
  if (!(Lambda_ > 0.0)) throw std::invalid_argument("Lambda must be positive");
  if (!(eps_ >= 0.0)) throw std::invalid_argument("eps must be >= 0");
}

// fn(centre, nbr, d, s): one call per cell and per combination of
// one-sided differences.  nbr[i] is the neighbour used along axis i (kGhost
// outside the box or when the difference is frozen at 0), d[i] = +-1/h_i is
// ds_i/du_nbr and s the difference vector.
template <class CornerFn>
void IsotropicOperator::for_each_stencil(const std::vector<double>& u, CornerFn&& fn) const {
  const std::size_t N = grid_.dim();
  const bool dirichlet = boundary_ == Boundary::dirichlet_zero;
  std::vector<std::size_t> nbr(N);
  std::vector<double> d(N), s(N);
  const unsigned combos = 1u << N;
  for (std::size_t k = 0; k < grid_.size(); ++k) {
    for (unsigned mask = 0; mask < combos; ++mask) {
      for (std::size_t i = 0; i < N; ++i) {
        const bool forward = (mask >> i) & 1u;
        const int c = grid_.coord(k, i);
        const double h = grid_.spacing(i);
        const bool inside = forward ? c + 1 < grid_.cells(i) : c > 0;
        const double sign = forward ? 1.0 : -1.0;
        d[i] = sign / h;
        if (inside) {
          nbr[i] = forward ? k + grid_.stride(i) : k - grid_.stride(i);
          s[i] = d[i] * (u[nbr[i]] - u[k]);
        } else {
          nbr[i] = kGhost;
          s[i] = dirichlet ? -d[i] * u[k] : 0.0;
          if (!dirichlet) d[i] = 0.0;
        }
      }
      fn(k, nbr, d, s);
    }
  }
}

double IsotropicOperator::energy_with(const std::vector<double>& u, double eps) const {
  const double w = Lambda_ / static_cast<double>(1u << grid_.dim()) / pbar_;
  const double base = eps == 0.0 ? 0.0 : std::pow(eps, pbar_);
  double e = 0.0;
  for_each_stencil(u, [&](std::size_t, const auto&, const auto&, const auto& s) {
    double r = eps * eps;
    for (double si : s) r += si * si;
    e += w * (std::pow(r, 0.5 * pbar_) - base);
  });
  return e;
}

double IsotropicOperator::energy(const std::vector<double>& u) const { return energy_with(u, eps_); }

double IsotropicOperator::exact_energy(const std::vector<double>& u) const {
  return energy_with(u, 0.0);
}

void IsotropicOperator::gradient(const std::vector<double>& u, std::vector<double>& g) const {
  g.assign(u.size(), 0.0);
  const double w = Lambda_ / static_cast<double>(1u << grid_.dim());
  const bool dirichlet = boundary_ == Boundary::dirichlet_zero;
  for_each_stencil(u, [&](std::size_t k, const auto& nbr, const auto& d, const auto& s) {
    double r = eps_ * eps_;
    for (double si : s) r += si * si;
    if (r == 0.0) return;
    const double rho = w * std::pow(r, 0.5 * (pbar_ - 2.0));
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double q = rho * s[i];
      if (nbr[i] != kGhost) {
        g[nbr[i]] += q * d[i];
        g[k] -= q * d[i];
      } else if (dirichlet) {
        g[k] -= q * d[i];
      }
    }
  });
}

void IsotropicOperator::hessian(const std::vector<double>& u, Triplets& out) const {
  const std::size_t N = grid_.dim();
  const double w = Lambda_ / static_cast<double>(1u << N);
  const bool dirichlet = boundary_ == Boundary::dirichlet_zero;
  // Variables of one stencil: slot 0 is the centre, slot 1+i the neighbour on axis i.
  std::vector<std::size_t> var(N + 1);
  std::vector<double> B((N + 1) * N);  // B[j*N + i] = ds_i / du_var[j]
  std::vector<double> M(N * N);
  for_each_stencil(u, [&](std::size_t k, const auto& nbr, const auto& d, const auto& s) {
    double r = eps_ * eps_;
    for (double si : s) r += si * si;
    const double rho = w * std::pow(r, 0.5 * (pbar_ - 2.0));
    const double kappa = w * (pbar_ - 2.0) * std::pow(r, 0.5 * (pbar_ - 4.0));
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j) M[i * N + j] = (i == j ? rho : 0.0) + kappa * s[i] * s[j];
    std::fill(B.begin(), B.end(), 0.0);
    var[0] = k;
    for (std::size_t i = 0; i < N; ++i) {
      var[1 + i] = nbr[i];
      if (nbr[i] != kGhost) {
        B[i] = -d[i];
        B[(1 + i) * N + i] = d[i];
      } else if (dirichlet) {
        B[i] = -d[i];
      }
    }
    for (std::size_t a = 0; a <= N; ++a) {
      if (var[a] == kGhost) continue;
      for (std::size_t b = 0; b <= N; ++b) {
        if (var[b] == kGhost) continue;
        double v = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
          const double bi = B[a * N + i];
          if (bi == 0.0) continue;
          for (std::size_t j = 0; j < N; ++j) v += bi * M[i * N + j] * B[b * N + j];
        }
        out.emplace_back(var[a], var[b], v);
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Newton minimization of h J(u) + 1/2 |u - b|^2

namespace {

struct Workspace {
  Eigen::SimplicialLDLT<SpMat> ldlt;
  bool analyzed = false;
  Triplets trip;
  SpMat H;
};

double step_energy(const DiffusionOperator& op, const std::vector<double>& u,
                   const std::vector<double>& b, double h) {
  double q = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) q += 0.5 * (u[k] - b[k]) * (u[k] - b[k]);
  return h * op.energy(u) + q;
}

void step_residual(const DiffusionOperator& op, const std::vector<double>& u,
                   const std::vector<double>& b, double h, std::vector<double>& r) {
  op.gradient(u, r);
  for (std::size_t k = 0; k < u.size(); ++k) r[k] = u[k] - b[k] + h * r[k];
}

void assemble(const DiffusionOperator& op, const std::vector<double>& u, double h,
              const SpMat* extra, double extra_scale, Workspace& ws) {
  ws.trip.clear();
  op.hessian(u, ws.trip);
  for (auto& t : ws.trip) t = Eigen::Triplet<double>(t.row(), t.col(), h * t.value());
  const auto n = static_cast<Eigen::Index>(u.size());
  for (Eigen::Index k = 0; k < n; ++k) ws.trip.emplace_back(k, k, 1.0);
  ws.H.resize(n, n);
  ws.H.setFromTriplets(ws.trip.begin(), ws.trip.end());
  if (extra) ws.H += extra_scale * (*extra);
}

StepResult minimize_step(const DiffusionOperator& op, const Field& u_prev, double h,
                         const StepConfig& cfg, const Field* source, Workspace& ws) {
  const std::size_t n = u_prev.size();
  std::vector<double> b = u_prev.values;
  if (source) {
    if (!(source->grid == u_prev.grid)) throw std::invalid_argument("source grid mismatch");
    for (std::size_t k = 0; k < n; ++k) b[k] += h * source->values[k];
  }
  const double tol = cfg.newton_tol * data_scale(u_prev.values);

  std::vector<double> u = u_prev.values, r(n), trial(n), rt(n), delta(n);
  Eigen::VectorXd rhs(n), sol(n);
  StepStats st;
  step_residual(op, u, b, h, r);
  double res = max_abs(r);
  double E = step_energy(op, u, b, h);

  // Backtracking along delta; returns true on acceptance and updates u, r, E, res.
  auto line_search = [&](double slope) {
    double t = 1.0;
    for (int bt = 0; bt <= cfg.line_search.max_backtracks; ++bt, t *= cfg.line_search.shrink) {
      for (std::size_t k = 0; k < n; ++k) trial[k] = u[k] + t * delta[k];
      const double Et = step_energy(op, trial, b, h);
      bool ok = std::isfinite(Et) && Et <= E + cfg.line_search.armijo * t * slope;
      // Near the minimum the energy decrease falls below rounding; fall back
      // to a decrease of the optimality residual.
      const bool flat = std::abs(t * slope) <= 1e-13 * std::max(std::abs(E), 1e-300);
      step_residual(op, trial, b, h, rt);
      const double res_t = max_abs(rt);
      if (!ok && flat && res_t < res) ok = true;
      if (ok) {
        std::swap(u, trial);
        std::swap(r, rt);
        E = Et;
        res = res_t;
        st.backtracks += bt;
        return true;
      }
    }
    return false;
  };

  while (res > tol) {
    if (st.iterations >= cfg.max_iters)
      throw SolverError("Newton iteration did not converge: residual " + fmt(res) + " after " +
                            std::to_string(st.iterations) + " iterations",
                        res, u_prev.time + h);
    ++st.iterations;
    assemble(op, u, h, nullptr, 0.0, ws);
    if (!ws.analyzed) {
      ws.ldlt.analyzePattern(ws.H);
      ws.analyzed = true;
    }
    ws.ldlt.factorize(ws.H);
    bool done = false;
    if (ws.ldlt.info() == Eigen::Success) {
      for (std::size_t k = 0; k < n; ++k) rhs[k] = -r[k];
      sol = ws.ldlt.solve(rhs);
      double slope = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        delta[k] = sol[k];
        slope += r[k] * delta[k];
      }
      if (ws.ldlt.info() == Eigen::Success && std::isfinite(slope) && slope < 0.0)
        done = line_search(slope);
    }
    if (!done) {
      // Diagonally scaled steepest descent.
      ++st.fallback_steps;
      double slope = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        delta[k] = -r[k] / ws.H.coeff(k, k);
        slope += r[k] * delta[k];
      }
      if (!line_search(slope))
        throw SolverError("line search failed: residual " + fmt(res), res, u_prev.time + h);
    }
  }
  st.residual = res;
  return {Field(u_prev.grid, std::move(u), u_prev.time + h), st};
}

// Time grid from t0 to T honouring growth and h_max.
std::vector<double> step_sizes(double t0, double T, const StepConfig& cfg) {
  std::vector<double> hs;
  const double span = T - t0;
  if (!(span >= 0.0)) throw std::invalid_argument("final time precedes the initial time");
  if (span == 0.0) return hs;
  if (cfg.growth == 1.0) {
    const auto steps = static_cast<std::size_t>(std::ceil(span / cfg.h - 1e-9));
    hs.assign(std::max<std::size_t>(steps, 1), span / static_cast<double>(std::max<std::size_t>(steps, 1)));
    return hs;
  }
  double t = t0, h = cfg.h;
  while (t < T - 1e-12 * std::max(1.0, std::abs(T))) {
    const double hk = std::min(h, T - t);
    hs.push_back(hk);
    t += hk;
    h = std::min(h * cfg.growth, cfg.h_max);
  }
  return hs;
}

void add_config(Trajectory& tr, const StepConfig& cfg, double eps, double T) {
  tr.config.emplace_back("h", fmt(cfg.h));
  tr.config.emplace_back("eps", fmt(eps));
  tr.config.emplace_back("newton_tol", fmt(cfg.newton_tol));
  tr.config.emplace_back("max_iters", std::to_string(cfg.max_iters));
  tr.config.emplace_back("boundary", to_string(cfg.boundary));
  tr.config.emplace_back("growth", fmt(cfg.growth));
  tr.config.emplace_back("h_max", fmt(cfg.h_max));
  tr.config.emplace_back("T", fmt(T));
}

StepDiagnostics diagnose(const DiffusionOperator& op, const Field& u, double h, const StepStats& st) {
  StepDiagnostics d;
  d.time = u.time;
  d.h = h;
  const double V = u.grid.cell_volume();
  d.energy = V * op.exact_energy(u.values);
  d.energy_eps = V * op.energy(u.values);
  d.mass = integrate(u);
  d.iterations = st.iterations;
  d.residual = st.residual;
  return d;
}

// Appends the steps from u0 to T to tr (which already holds the config echo).
void run_implicit(const DiffusionOperator& op, const Field& u0, double T, const StepConfig& cfg,
                  Trajectory& tr) {
  Workspace ws;
  tr.times.push_back(u0.time);
  tr.fields.push_back(u0);
  tr.diagnostics.push_back(diagnose(op, u0, 0.0, StepStats{}));
  const auto hs = step_sizes(u0.time, T, cfg);
  Field u = u0;
  for (std::size_t k = 0; k < hs.size(); ++k) {
    std::optional<StepResult> res;
    try {
      res.emplace(minimize_step(op, u, hs[k], cfg, nullptr, ws));
    } catch (const SolverError& e) {
      if (tr.times.back() != u.time) {
        tr.times.push_back(u.time);
        tr.fields.push_back(u);
      }
      throw InterruptedRun(e, std::move(tr));
    }
    u = std::move(res->u);
    if (k + 1 == hs.size()) u.time = T;
    tr.diagnostics.push_back(diagnose(op, u, hs[k], res->stats));
    if ((k + 1) % static_cast<std::size_t>(cfg.record_every) == 0 || k + 1 == hs.size()) {
      tr.times.push_back(u.time);
      tr.fields.push_back(u);
    }
  }
}

double resolve_eps(const StepConfig& cfg, const Field& u) {
  return cfg.eps > 0.0 ? cfg.eps : default_eps(u);
}

}  // namespace

StepResult implicit_step(const DiffusionOperator& op, const Field& u_prev, double h,
                         const StepConfig& cfg, const Field* source) {
  cfg.validate();
  if (!(op.grid() == u_prev.grid)) throw std::invalid_argument("operator and field grids differ");
  if (!(h > 0.0)) throw std::invalid_argument("time step must be positive");
  if (!(op.eps() > 0.0)) throw std::invalid_argument("implicit steps need eps > 0");
  Workspace ws;
  return minimize_step(op, u_prev, h, cfg, source, ws);
}

StepResult elliptic_step(const Field& u_prev, const ExponentVector& p, const StepConfig& cfg,
                         const Field* source) {
  cfg.validate();
  AnisotropicOperator op(u_prev.grid, p, resolve_eps(cfg, u_prev), cfg.boundary);
  return implicit_step(op, u_prev, cfg.h, cfg, source);
}

Trajectory evolve(const Field& u0, double T, const StepConfig& cfg, const ExponentVector& p) {
  cfg.validate();
  const double eps = resolve_eps(cfg, u0);
  AnisotropicOperator op(u0.grid, p, eps, cfg.boundary);
  Trajectory tr;
  tr.config.emplace_back("equation", "anisotropic");
  tr.config.emplace_back("p", fmt(p));
  add_config(tr, cfg, eps, T);
  run_implicit(op, u0, T, cfg, tr);
  return tr;
}

Trajectory isotropic_evolve(const Field& u0, double T, const StepConfig& cfg, double pbar,
                            double Lambda) {
  cfg.validate();
  const double eps = resolve_eps(cfg, u0);
  IsotropicOperator op(u0.grid, pbar, Lambda, eps, cfg.boundary);
  Trajectory tr;
  tr.config.emplace_back("equation", "isotropic");
  tr.config.emplace_back("pbar", fmt(pbar));
  tr.config.emplace_back("Lambda", fmt(Lambda));
  add_config(tr, cfg, eps, T);
  run_implicit(op, u0, T, cfg, tr);
  return tr;
}

// ---------------------------------------------------------------------------
// Rescaled flow

RescaledConfig::RescaledConfig(ExponentVector p_, double t0_)
    : p(std::move(p_)), ss(selfsim_exponents(p)), t0(t0_) {
  if (!(t0 >= 0.0)) throw std::invalid_argument("t0 must be >= 0");
}

SpMat drift_matrix(const TensorGrid& grid, const RescaledConfig& rcfg) {
  if (rcfg.p.dim() != grid.dim()) throw std::invalid_argument("exponent and grid dimensions differ");
  Triplets trip;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    for (std::size_t i = 0; i < grid.dim(); ++i) {
      const int c = grid.coord(k, i);
      if (c + 1 >= grid.cells(i)) continue;
      const double h = grid.spacing(i);
      const std::size_t a = k, b = k + grid.stride(i);
      const double ye = grid.center(i, c) + 0.5 * h;
      const double coef = rcfg.ss.alpha * rcfg.ss.sigma[i] * ye / h;
      // Flux Q = coef * h * v_upwind leaves a and enters b.
      const std::size_t up = ye < 0.0 ? a : b;
      trip.emplace_back(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(up), coef);
      trip.emplace_back(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(up), -coef);
    }
  }
  const auto n = static_cast<Eigen::Index>(grid.size());
  SpMat D(n, n);
  D.setFromTriplets(trip.begin(), trip.end());
  return D;
}

namespace {

struct RescaledWorkspace {
  Eigen::SparseLU<SpMat> lu;
  bool analyzed = false;
  Workspace base;
  SpMat D;
};

StepResult rescaled_newton(const AnisotropicOperator& op, const Field& v_prev, double dtau,
                           const StepConfig& cfg, RescaledWorkspace& ws) {
  const std::size_t n = v_prev.size();
  const double tol = cfg.newton_tol * data_scale(v_prev.values);
  std::vector<double> v = v_prev.values, G(n), Gt(n), trial(n), delta(n), a(n);
  Eigen::VectorXd rhs(n), sol(n), Dv(n);
  StepStats st;

  auto residual = [&](const std::vector<double>& x, std::vector<double>& out) {
    op.gradient(x, a);
    const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(n));
    Dv = ws.D * xv;
    for (std::size_t k = 0; k < n; ++k)
      out[k] = x[k] - v_prev.values[k] + dtau * (a[k] - Dv[static_cast<Eigen::Index>(k)]);
  };
  auto norm2 = [](const std::vector<double>& x) {
    double s = 0.0;
    for (double y : x) s += y * y;
    return s;
  };

  residual(v, G);
  double res = max_abs(G);
  double phi = norm2(G);
  while (res > tol) {
    if (st.iterations >= cfg.max_iters)
      throw SolverError("rescaled Newton iteration did not converge: residual " + fmt(res), res,
                        v_prev.time + dtau);
    ++st.iterations;
    assemble(op, v, dtau, &ws.D, -dtau, ws.base);
    ws.base.H.makeCompressed();
    if (!ws.analyzed) {
      ws.lu.analyzePattern(ws.base.H);
      ws.analyzed = true;
    }
    ws.lu.factorize(ws.base.H);
    if (ws.lu.info() != Eigen::Success)
      throw SolverError("singular Jacobian in rescaled step", res, v_prev.time + dtau);
    for (std::size_t k = 0; k < n; ++k) rhs[k] = -G[k];
    sol = ws.lu.solve(rhs);
    for (std::size_t k = 0; k < n; ++k) delta[k] = sol[k];
    double t = 1.0;
    bool ok = false;
    for (int bt = 0; bt <= cfg.line_search.max_backtracks; ++bt, t *= cfg.line_search.shrink) {
      for (std::size_t k = 0; k < n; ++k) trial[k] = v[k] + t * delta[k];
      residual(trial, Gt);
      const double phit = norm2(Gt);
      if (std::isfinite(phit) && phit <= (1.0 - 2.0 * cfg.line_search.armijo * t) * phi) {
        ok = true;
        st.backtracks += bt;
        break;
      }
    }
    if (!ok) throw SolverError("line search failed in rescaled step: residual " + fmt(res), res,
                               v_prev.time + dtau);
    std::swap(v, trial);
    std::swap(G, Gt);
    phi = norm2(G);
    res = max_abs(G);
  }
  st.residual = res;
  return {Field(v_prev.grid, std::move(v), v_prev.time + dtau), st};
}

}  // namespace

StepResult rescaled_step(const Field& v_prev, double dtau, const RescaledConfig& rcfg,
                         const StepConfig& cfg) {
  cfg.validate();
  if (!(dtau > 0.0)) throw std::invalid_argument("tau step must be positive");
  AnisotropicOperator op(v_prev.grid, rcfg.p, resolve_eps(cfg, v_prev), cfg.boundary);
  RescaledWorkspace ws;
  ws.D = drift_matrix(v_prev.grid, rcfg);
  return rescaled_newton(op, v_prev, dtau, cfg, ws);
}

Trajectory rescaled_evolve(const Field& v0, double tau_end, const RescaledConfig& rcfg,
                           const StepConfig& cfg) {
  cfg.validate();
  const double eps = resolve_eps(cfg, v0);
  AnisotropicOperator op(v0.grid, rcfg.p, eps, cfg.boundary);
  RescaledWorkspace ws;
  ws.D = drift_matrix(v0.grid, rcfg);
  Trajectory tr;
  tr.config.emplace_back("equation", "rescaled");
  tr.config.emplace_back("p", fmt(rcfg.p));
  tr.config.emplace_back("t0", fmt(rcfg.t0));
  add_config(tr, cfg, eps, tau_end);
  tr.times.push_back(v0.time);
  tr.fields.push_back(v0);
  tr.diagnostics.push_back(diagnose(op, v0, 0.0, StepStats{}));
  const auto hs = step_sizes(v0.time, tau_end, cfg);
  Field v = v0;
  for (std::size_t k = 0; k < hs.size(); ++k) {
    std::optional<StepResult> res;
    try {
      res.emplace(rescaled_newton(op, v, hs[k], cfg, ws));
    } catch (const SolverError& e) {
      if (tr.times.back() != v.time) {
        tr.times.push_back(v.time);
        tr.fields.push_back(v);
      }
      throw InterruptedRun(e, std::move(tr));
    }
    v = std::move(res->u);
    if (k + 1 == hs.size()) v.time = tau_end;
    tr.diagnostics.push_back(diagnose(op, v, hs[k], res->stats));
    if ((k + 1) % static_cast<std::size_t>(cfg.record_every) == 0 || k + 1 == hs.size()) {
      tr.times.push_back(v.time);
      tr.fields.push_back(v);
    }
  }
  return tr;
}

SteadyProfile steady_profile(const TensorGrid& grid, double M, const RescaledConfig& rcfg,
                             const StepConfig& cfg, double stop_tol, double tau_budget,
                             const Field* initial) {
  cfg.validate();
  if (!(M > 0.0)) throw std::invalid_argument("mass must be positive");
  if (!(stop_tol > 0.0)) throw std::invalid_argument("stop_tol must be positive");
  // Default start: an SSNI bump with the power tails of the upper barrier.
  Field v0 = initial ? *initial : sample(grid, [&](std::span<const double> y) {
    double r = 1.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double w = grid.half_width(i) / 8.0;
      r += std::pow(std::abs(y[i]) / w, rcfg.p[i] < 2.0 ? rcfg.p[i] / (2.0 - rcfg.p[i]) : 2.0);
    }
    return 1.0 / r;
  });
  if (!(v0.grid == grid)) throw std::invalid_argument("initial field grid mismatch");
  const double m0 = integrate(v0);
  if (!(m0 > 0.0)) throw std::invalid_argument("initial field has no mass");
  for (double& x : v0.values) x *= M / m0;
  v0.time = 0.0;

  const double eps = resolve_eps(cfg, v0);
  AnisotropicOperator op(grid, rcfg.p, eps, cfg.boundary);
  RescaledWorkspace ws;
  ws.D = drift_matrix(grid, rcfg);
  SteadyProfile out{v0, 0.0, 0, 0.0, 0.0, SsniDefect{}};
  Field v = v0;
  while (true) {
    if (out.tau >= tau_budget)
      throw SolverError("steady state not reached within tau budget (increment " +
                            fmt(out.increment) + ")",
                        out.increment, out.tau);
    StepResult res = rescaled_newton(op, v, cfg.h, cfg, ws);
    double inc = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) inc += std::abs(res.u.values[k] - v.values[k]);
    inc *= grid.cell_volume() / M;
    v = std::move(res.u);
    ++out.steps;
    out.tau = v.time;
    out.increment = inc;
    if (inc < stop_tol) break;
  }
  out.profile = v;
  out.mass_drift = integrate(v) - M;
  out.ssni = ssni_defect(v);
  const double vmax = max_abs(v.values);
  if (out.ssni.asymmetry > 1e-6 * vmax || out.ssni.increase > 1e-6 * vmax)
    throw SolverError("steady profile lost its symmetric nonincreasing shape", out.increment, out.tau);
  if (cfg.boundary == Boundary::no_flux && std::abs(out.mass_drift) > 1e-6 * M)
    throw SolverError("steady profile lost mass under no-flux boundary", out.increment, out.tau);
  return out;
}

Field to_original_variables(const Field& v, const RescaledConfig& rcfg) {
  const double s = std::exp(v.time);
  if (!(s > rcfg.t0)) throw std::domain_error("tau precedes t = 0");
  std::vector<double> L(v.grid.dim());
  std::vector<int> n(v.grid.dim());
  for (std::size_t i = 0; i < L.size(); ++i) {
    L[i] = v.grid.half_width(i) * std::pow(s, rcfg.ss.a[i]);
    n[i] = v.grid.cells(i);
  }
  std::vector<double> vals = v.values;
  const double scale = std::pow(s, -rcfg.ss.alpha);
  for (double& x : vals) x *= scale;
  return Field(TensorGrid(L, n), std::move(vals), s - rcfg.t0);
}

Trajectory to_original_variables(const Trajectory& rescaled, const RescaledConfig& rcfg) {
  Trajectory tr;
  for (const Field& v : rescaled.fields) {
    tr.fields.push_back(to_original_variables(v, rcfg));
    tr.times.push_back(tr.fields.back().time);
  }
  for (StepDiagnostics d : rescaled.diagnostics) {
    const double s = std::exp(d.time);
    d.h = s - std::exp(d.time - d.h);
    d.time = s - rcfg.t0;
    tr.diagnostics.push_back(d);
  }
  tr.config = rescaled.config;
  tr.config.emplace_back("variables", "original");
  return tr;
}

// ---------------------------------------------------------------------------
// Checkpoints

void write_trajectory(const Trajectory& traj, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json j;
  j["format"] = "aplab-trajectory";
  j["version"] = 1;
  j["times"] = traj.times;
  std::vector<std::string> files;
  for (std::size_t k = 0; k < traj.fields.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "field_%05zu.bin", k);
    write_field_binary(traj.fields[k], dir / name);
    files.emplace_back(name);
  }
  j["files"] = files;
  // Pairs rather than an object: the echo keeps its order.
  nlohmann::json cfg = nlohmann::json::array();
  for (const auto& [k, v] : traj.config) cfg.push_back({k, v});
  j["config"] = cfg;
  nlohmann::json diag = nlohmann::json::array();
  for (const auto& d : traj.diagnostics)
    diag.push_back({{"time", d.time}, {"h", d.h}, {"energy", d.energy}, {"energy_eps", d.energy_eps},
                    {"mass", d.mass}, {"iterations", d.iterations}, {"residual", d.residual}});
  j["diagnostics"] = diag;
  std::ofstream os(dir / "manifest.json");
  if (!os) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
  os << j.dump(1) << '\n';
}

Trajectory read_trajectory(const std::filesystem::path& dir) {
  std::ifstream is(dir / "manifest.json");
  if (!is) throw std::runtime_error("cannot read " + (dir / "manifest.json").string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("malformed manifest: ") + e.what());
  }
  if (j.value("format", "") != "aplab-trajectory" || j.value("version", 0) != 1)
    throw std::runtime_error("unsupported trajectory manifest");
  Trajectory tr;
  tr.times = j.at("times").get<std::vector<double>>();
  for (const auto& f : j.at("files")) tr.fields.push_back(read_field_binary(dir / f.get<std::string>()));
  if (tr.times.size() != tr.fields.size()) throw std::runtime_error("manifest times/files mismatch");
  for (const auto& kv : j.at("config")) tr.config.emplace_back(kv.at(0).get<std::string>(), kv.at(1).get<std::string>());
  for (const auto& d : j.at("diagnostics")) {
    StepDiagnostics s;
    s.time = d.at("time");
    s.h = d.at("h");
    s.energy = d.at("energy");
    s.energy_eps = d.at("energy_eps");
    s.mass = d.at("mass");
    s.iterations = d.at("iterations");
    s.residual = d.at("residual");
    tr.diagnostics.push_back(s);
  }
  return tr;
}

}  // namespace aplab
