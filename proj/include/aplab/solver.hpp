#pragma once

// Implicit time discretization of
//
//     u_t = sum_i ( |u_{x_i}|^{p_i-2} u_{x_i} )_{x_i}            (anisotropic)
//     U_t = Lambda div( |grad U|^{pbar-2} grad U )               (isotropic)
//     v_tau = sum_i [ (|v_{y_i}|^{p_i-2} v_{y_i})_{y_i}
//                     + alpha sigma_i (y_i v)_{y_i} ]            (rescaled)
//
// on truncated boxes.  Each backward Euler step of the first two equations is
// the minimization of a strictly convex discrete energy
//
//     E(u) = h J_eps(u) + 1/2 |u - u_prev - h f|^2,
//
// solved by Newton's method with a backtracking line search on E.  The
// rescaled step adds an upwinded drift and is solved by Newton on the
// residual.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Sparse>

#include "aplab/exponents.hpp"
#include "aplab/grid.hpp"

namespace aplab {

enum class Boundary {
  dirichlet_zero,  ///< u = 0 one cell outside the box
  no_flux,         ///< no diffusive flux through the box faces
};

const char* to_string(Boundary b);
Boundary boundary_from_string(const std::string& s);

struct LineSearch {
  double armijo = 0.1;
  double shrink = 0.5;
  int max_backtracks = 30;
};

struct StepConfig {
  /// Time step (tau step for the rescaled flow).
  double h = 1e-2;
  /// Flux regularization; negative selects default_eps() of the data.
  double eps = -1.0;
  /// Bound on the max-norm of the discrete optimality residual, relative to
  /// max|u_prev| (1 for zero data).
  double newton_tol = 1e-10;
  int max_iters = 60;
  LineSearch line_search;
  Boundary boundary = Boundary::dirichlet_zero;
  /// Step h_k = h * growth^k when > 1 (geometric stepping); 1 keeps h fixed.
  double growth = 1.0;
  /// Upper bound on the step when growth > 1.
  double h_max = 0.0;
  /// Keep every k-th field in the trajectory (the last one is always kept).
  int record_every = 1;

  void validate() const;
};

/// Relative flux regularization used when StepConfig::eps < 0.
inline constexpr double kDefaultEpsRel = 1e-8;

/// kDefaultEpsRel * max|u| / min_i h_i, a gradient scale far below the one
/// carried by the data.
double default_eps(const Field& u);

/// s (s^2 + eps^2)^{(p-2)/2}; with eps = 0 this is |s|^{p-2} s with value 0 at s = 0.
double regularized_flux(double s, double p, double eps);

/// Antiderivative of regularized_flux vanishing at 0: ((s^2+eps^2)^{p/2} - eps^p)/p.
double flux_potential(double s, double p, double eps);

/// Derivative of regularized_flux in s.
double flux_derivative(double s, double p, double eps);

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double last_residual, double time)
      : std::runtime_error(what), last_residual_(last_residual), time_(time) {}
  double last_residual() const { return last_residual_; }
  double time() const { return time_; }

 private:
  double last_residual_;
  double time_;
};

/// Discrete convex energy J with its gradient and Hessian, all per unit cell
/// volume: energy(u) * cell_volume approximates the continuous functional and
/// gradient(u) approximates the operator A(u) = -div(flux).
class DiffusionOperator {
 public:
  virtual ~DiffusionOperator() = default;
  virtual const TensorGrid& grid() const = 0;
  /// Regularized energy with flux parameter eps().
  virtual double energy(const std::vector<double>& u) const = 0;
  /// Energy with eps = 0.
  virtual double exact_energy(const std::vector<double>& u) const = 0;
  virtual void gradient(const std::vector<double>& u, std::vector<double>& g) const = 0;
  /// Appends Hessian triplets; the sparsity pattern does not depend on u.
  virtual void hessian(const std::vector<double>& u, std::vector<Eigen::Triplet<double>>& out) const = 0;
  virtual double eps() const = 0;
};

/// Edge-based discretization of sum_i (1/p_i) int |u_{x_i}|^{p_i}.
class AnisotropicOperator final : public DiffusionOperator {
 public:
  AnisotropicOperator(TensorGrid grid, ExponentVector p, double eps, Boundary boundary);
  const TensorGrid& grid() const override { return grid_; }
  double energy(const std::vector<double>& u) const override;
  double exact_energy(const std::vector<double>& u) const override;
  void gradient(const std::vector<double>& u, std::vector<double>& g) const override;
  void hessian(const std::vector<double>& u, std::vector<Eigen::Triplet<double>>& out) const override;
  double eps() const override { return eps_; }

 private:
  template <class EdgeFn>
  void for_each_edge(const std::vector<double>& u, EdgeFn&& fn) const;
  double energy_with(const std::vector<double>& u, double eps) const;

  TensorGrid grid_;
  ExponentVector p_;
  double eps_;
  Boundary boundary_;
};

/// (Lambda/pbar) int |grad u|^pbar with the gradient of each cell taken as
/// the average over the 2^N combinations of one-sided differences.
class IsotropicOperator final : public DiffusionOperator {
 public:
  IsotropicOperator(TensorGrid grid, double pbar, double Lambda, double eps, Boundary boundary);
  const TensorGrid& grid() const override { return grid_; }
  double energy(const std::vector<double>& u) const override;
  double exact_energy(const std::vector<double>& u) const override;
  void gradient(const std::vector<double>& u, std::vector<double>& g) const override;
  void hessian(const std::vector<double>& u, std::vector<Eigen::Triplet<double>>& out) const override;
  double eps() const override { return eps_; }

 private:
  template <class CornerFn>
  void for_each_stencil(const std::vector<double>& u, CornerFn&& fn) const;
  double energy_with(const std::vector<double>& u, double eps) const;

  TensorGrid grid_;
  double pbar_;
  double Lambda_;
  double eps_;
  Boundary boundary_;
};

struct StepStats {
  int iterations = 0;
  int backtracks = 0;
  int fallback_steps = 0;
  double residual = 0.0;
};

struct StepResult {
  Field u;
  StepStats stats;
};

/// One implicit step: minimizer of h J_eps(u) + 1/2 |u - u_prev - h f|^2 for
/// the anisotropic operator.  Throws SolverError if the optimality residual
/// does not drop below cfg.newton_tol within cfg.max_iters iterations.
StepResult elliptic_step(const Field& u_prev, const ExponentVector& p, const StepConfig& cfg,
                         const Field* source = nullptr);

/// Same, for any operator.
StepResult implicit_step(const DiffusionOperator& op, const Field& u_prev, double h,
                         const StepConfig& cfg, const Field* source = nullptr);

/// Per-step record of an implicit trajectory.
struct StepDiagnostics {
  double time = 0.0;
  double h = 0.0;
  double energy = 0.0;        ///< J(u) with eps = 0, times cell volume
  double energy_eps = 0.0;    ///< regularized J_eps(u), times cell volume
  double mass = 0.0;
  int iterations = 0;
  double residual = 0.0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Field> fields;
  /// One entry per step, the initial state included (iterations = 0).
  std::vector<StepDiagnostics> diagnostics;
  /// Echo of the configuration that produced the trajectory.
  std::vector<std::pair<std::string, std::string>> config;

  std::size_t size() const { return fields.size(); }
  const Field& back() const { return fields.back(); }
};

/// Thrown by the evolution drivers when a step fails.  Carries the trajectory
/// up to and including the last converged state, config echo included.
class InterruptedRun : public SolverError {
 public:
  InterruptedRun(const SolverError& cause, Trajectory partial)
      : SolverError(cause.what(), cause.last_residual(), cause.time()), partial_(std::move(partial)) {}
  const Trajectory& partial() const { return partial_; }

 private:
  Trajectory partial_;
};

/// Backward Euler steps of the anisotropic equation from u0 (at time u0.time) to T.
Trajectory evolve(const Field& u0, double T, const StepConfig& cfg, const ExponentVector& p);

/// Backward Euler steps of U_t = Lambda Delta_pbar U.
Trajectory isotropic_evolve(const Field& u0, double T, const StepConfig& cfg, double pbar,
                            double Lambda);

/// Rescaled (self-similar) variables v(y,tau) = (t+t0)^alpha u(x,t),
/// y_i = x_i (t+t0)^{-sigma_i alpha}, tau = log(t + t0).
struct RescaledConfig {
  RescaledConfig(ExponentVector p, double t0 = 0.0);
  ExponentVector p;
  SelfSimilarExponents ss;
  double t0 = 0.0;
};

/// Drift part sum_i alpha sigma_i (y_i v)_{y_i}, first-order upwind, as a
/// constant sparse matrix.  The outer box faces carry no drift flux.
Eigen::SparseMatrix<double> drift_matrix(const TensorGrid& grid, const RescaledConfig& rcfg);

/// One backward Euler step of the rescaled equation.
StepResult rescaled_step(const Field& v_prev, double dtau, const RescaledConfig& rcfg,
                         const StepConfig& cfg);

/// Rescaled flow from v0 (at tau = v0.time) to tau_end with step cfg.h.
Trajectory rescaled_evolve(const Field& v0, double tau_end, const RescaledConfig& rcfg,
                           const StepConfig& cfg);

struct SteadyProfile {
  Field profile;
  double tau = 0.0;
  int steps = 0;
  /// |v(tau + dtau) - v(tau)|_1 / M at the last step.
  double increment = 0.0;
  double mass_drift = 0.0;
  SsniDefect ssni;
};

/// Runs the rescaled flow from a centred SSNI bump of mass M until
/// |v(tau+dtau) - v(tau)|_1 < stop_tol * M.  Throws SolverError when
/// tau_budget is exhausted first.
SteadyProfile steady_profile(const TensorGrid& grid, double M, const RescaledConfig& rcfg,
                             const StepConfig& cfg, double stop_tol, double tau_budget,
                             const Field* initial = nullptr);

/// Original-variable field u(., t) represented by a rescaled field v(., tau):
/// the grid is stretched by (t+t0)^{a_i} and values scaled by (t+t0)^{-alpha}.
Field to_original_variables(const Field& v, const RescaledConfig& rcfg);
Trajectory to_original_variables(const Trajectory& rescaled, const RescaledConfig& rcfg);

/// Writes fields as binary files plus a manifest.json with times, config echo
/// and diagnostics.
void write_trajectory(const Trajectory& traj, const std::filesystem::path& dir);
Trajectory read_trajectory(const std::filesystem::path& dir);

}  // namespace aplab
