#pragma once

// Closed-form self-similar profiles and explicit barriers for the stationary
// profile equation
//
//     sum_i [ (|F_{y_i}|^{p_i-2} F_{y_i})_{y_i} + alpha sigma_i (y_i F)_{y_i} ] = 0.

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "aplab/exponents.hpp"

namespace aplab {

using Point = std::span<const double>;

enum class Branch { fast, slow };

/// Explicit profile of the orthotropic equation (all p_i = p).
struct OrthotropicProfile {
  int N = 0;
  double p = 0.0;
  double C0 = 0.0;
  double lambda = 0.0;  ///< N(p - 2) + p
  Branch branch = Branch::fast;

  /// Validates p_c(N) < p < 2 (fast) or p > 2 (slow) and C0 > 0.
  static OrthotropicProfile make(int N, double p, double C0);

  /// Coefficient c with F = (C0 +- c sum |y_i|^{p/(p-1)})^{...}.
  double coefficient() const;
};

double eval_orthotropic(const OrthotropicProfile& prof, Point y);

/// Analytic partial derivative dF/dy_i.
double orthotropic_derivative(const OrthotropicProfile& prof, Point y, std::size_t i);

/// Exact mass of the profile (Dirichlet-type integral reduced to a Beta function).
double orthotropic_mass(const OrthotropicProfile& prof);

/// Profile with the requested mass.
OrthotropicProfile orthotropic_with_mass(int N, double p, double mass);

/// Isotropic Barenblatt profile (|y| in place of the coordinate sum); p = 2
/// gives the Gaussian (4 pi)^{-N/2} exp(-|y|^2/4) and ignores C0.
double eval_isotropic_barenblatt(int N, double p, double C0, Point y);

/// B(x,t) = t^{-alpha} F(t^{-alpha/N} x).  Throws for t <= 0.
double barenblatt_solution(const OrthotropicProfile& prof, Point x, double t);

/// Exponent alpha of the orthotropic profile's self-similar solution.
double orthotropic_alpha(const OrthotropicProfile& prof);

/// T_k[F](y) = k F(k^{(2-p)/p} y), again an orthotropic profile.
OrthotropicProfile mass_transform(const OrthotropicProfile& prof, double k);

/// Mass multiplier of T_k: k^{N + 1 - 2N/p}.
double mass_factor(int N, double p, double k);

/// k t^{1/(2-p)} (sum |x_i|^{p/(p-1)})^{-(p-1)/(2-p)}; x = 0 throws std::domain_error.
double very_singular(double p, Point x, double t, double k);

/// Separated-variables variant k t^{1/(2-p)} sum |x_i|^{-p/(2-p)}.
double very_singular_separated(double p, Point x, double t, double k);

/// Outer supersolution (sum gamma_i |y_i|^{p_i/(2-p_i)})^{-1}, optionally
/// truncated at F_*.
struct UpperBarrier {
  ExponentVector p;
  SelfSimilarExponents ss;
  std::vector<double> gamma;
  std::optional<double> Fstar;
};

/// Largest admissible gamma_i.  Requires H1, H2 and sigma_i p_i/(2-p_i) > 1.
std::vector<double> upper_barrier_gammas(const ExponentVector& exp, const SelfSimilarExponents& ss);

UpperBarrier make_upper_barrier(const ExponentVector& exp, std::optional<double> Fstar = std::nullopt);

/// Untruncated barrier; y = 0 throws std::domain_error.
double eval_upper_barrier(const UpperBarrier& b, Point y);

/// min{Fbar, F_*}; total on R^N.  Requires b.Fstar.
double eval_truncated_barrier(const UpperBarrier& b, Point y);

/// Subsolution (A + sum |y_i|^{theta_i})^{-gamma}.
struct LowerBarrier {
  ExponentVector p;
  SelfSimilarExponents ss;
  double gamma = 0.0;
  std::vector<double> theta;
  double A = 0.0;
  double A0 = 0.0;
};

/// Threshold A_0 above which the lower barrier is a subsolution.  Requires
/// 0 < theta_i <= 1 and 1/(gamma theta_i) < (2 - p_i)/p_i.
double lower_barrier_A0(const ExponentVector& exp, const SelfSimilarExponents& ss, double gamma,
                        std::span<const double> theta);

/// Throws unless A > A0.
LowerBarrier make_lower_barrier(const ExponentVector& exp, double gamma, std::vector<double> theta,
                                double A);

double eval_lower_barrier(const LowerBarrier& b, Point y);

using ProfileFn = std::function<double(Point)>;

/// Finite-difference value of the stationary operator at y with step h.
/// Negative (up to O(h^2)) at points where F is a supersolution, positive
/// where it is a subsolution.  Requires |y_i| >= 2h for every i.
double stationary_residual(const ProfileFn& F, const ExponentVector& exp,
                           const SelfSimilarExponents& ss, Point y, double h);

}  // namespace aplab
