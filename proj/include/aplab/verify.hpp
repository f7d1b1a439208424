#pragma once

// Tolerance-based checks of qualitative properties on trajectories and
// profiles.  Every check returns a CheckReport; none of them throws on a
// failed property, only on malformed input.

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "aplab/exponents.hpp"
#include "aplab/grid.hpp"
#include "aplab/profiles.hpp"
#include "aplab/solver.hpp"

namespace aplab {

struct CheckReport {
  std::string name;
  bool passed = false;
  std::vector<std::pair<std::string, double>> measured;
  double tolerance = 0.0;
  std::string notes;

  void add(std::string label, double value) { measured.emplace_back(std::move(label), value); }
  /// Value recorded under label; throws std::out_of_range when absent.
  double value(const std::string& label) const;
  /// key = value lines, one per field, measured values prefixed "measured.".
  std::string to_text() const;
};

CheckReport parse_report(const std::string& text);
void write_report(const CheckReport& r, const std::filesystem::path& path);

/// Least-squares line through (log x, log y).
struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t used = 0;
};

/// Fits only the points whose log x lies in the middle keep_fraction of the
/// log x range.  Needs at least two positive points inside.
SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y,
                    double keep_fraction = 0.6);

/// Largest relative deviation of the mass from its initial value.
CheckReport check_mass(const Trajectory& traj, double tol);

/// ||u(t)||_q nonincreasing up to tol_per_step * max|u0| * (cell count * cell volume)^{1/q}.
CheckReport check_lq_decay(const Trajectory& traj, double q, double tol_per_step);

/// ||a(t) - b(t)||_1 nonincreasing; same grids and times required.
CheckReport check_L1_contraction(const Trajectory& a, const Trajectory& b, double tol_per_step);

/// a(t) <= b(t) pointwise at every recorded time, allowing k * tol_per_step * scale at record k.
CheckReport check_order(const Trajectory& a, const Trajectory& b, double tol_per_step);

/// Exact energy nonincreasing along the step diagnostics up to rel_tol * J(0).
CheckReport check_energy_dissipation(const Trajectory& traj, double rel_tol);

/// Slope of log ||u(t)||_inf against log t over [t_min, t_max] within
/// rel_tol of -alpha.  Also fits C with ||u(t)||_inf <= C t^{-alpha} M^{pbar alpha/N}
/// over the window and reports it.  Fields may live on different grids.
CheckReport check_smoothing(const Trajectory& traj, const SelfSimilarExponents& ss, double t_min,
                            double t_max, double rel_tol = 0.1);

CheckReport check_ssni(const Trajectory& traj, double tol_per_step);

/// u(mirror_axis(x), t) <= u(x, t) for every cell with x_axis > 0 (side = +1)
/// or x_axis < 0 (side = -1).
CheckReport check_aleksandrov(const Trajectory& traj, std::size_t axis, double tol_per_step,
                              int side = +1);

/// Truncation level used when the barrier carries no F_*: the largest value
/// on the trajectory.
double calibrate_fstar(const Trajectory& rescaled);

/// v(y, tau) <= min(Fbar(y), F_*) + tol at every recorded tau.  Cells on the
/// coordinate hyperplanes through the origin use the truncation level only.
CheckReport check_barrier(const Trajectory& rescaled, const UpperBarrier& barrier, double tol);

/// u^#(t) concentration-below U(t) up to tol * ||U(t)||_1, and ||u(t)||_q <=
/// (1 + tol) ||U(t)||_q for q in {1, 2, inf}, at the common recorded times.
CheckReport check_concentration(const Trajectory& aniso, const Trajectory& iso, double tol);

struct ConvergenceOptions {
  /// Required ratio between the first and the last sampled errors.
  double factor = 3.0;
  /// Monotone decrease is required for t >= monotone_from.
  double monotone_from = 0.0;
  /// Relative slack on monotonicity between consecutive samples.
  double slack = 1e-6;
};

/// ||u(t) - B(t)||_1 and t^alpha ||u(t) - B(t)||_inf for the explicit
/// orthotropic Barenblatt solution B of the given profile.
CheckReport check_convergence_to_barenblatt(const Trajectory& traj, const OrthotropicProfile& target,
                                            const ConvergenceOptions& opt = {});

/// Interior minimum (cells at least margin cells away from the faces) positive
/// at every recorded t > t0.
CheckReport check_positivity(const Trajectory& traj, int margin);

struct TailWindow {
  /// Fit window along each half-axis, as fractions of the half-width.
  double inner = 0.25;
  double outer = 0.75;
  /// Fraction of the log-window kept by the fit.
  double keep = 0.6;
  /// Relative slack around -p_i/(2 - p_i).
  double slack = 0.15;
};

/// Per-axis log-log slope of the profile's tail within slack of -p_i/(2-p_i),
/// plus positivity of the interior minimum.
CheckReport check_positivity_and_tails(const Field& profile, const ExponentVector& p,
                                       const TailWindow& win = {}, int margin = 1);

}  // namespace aplab
