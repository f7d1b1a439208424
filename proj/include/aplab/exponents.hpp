#pragma once

// Exponent algebra for the anisotropic p-Laplacian evolution
//
//     u_t = sum_i ( |u_{x_i}|^{p_i - 2} u_{x_i} )_{x_i}
//
// Everything here is a pure function of the exponent data: admissibility
// conditions, the self-similar exponents of the fundamental solution, the
// symmetrization constant of the isotropic comparison problem and the
// exponents of the doubly nonlinear generalization.

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace aplab {

/// Relative tolerance used to flag an inequality as sitting on its boundary.
inline constexpr double kBoundaryTol = 1e-12;

/// Diffusion exponents p_1..p_N, one per coordinate direction.
class ExponentVector {
 public:
  /// Throws std::invalid_argument if p is empty or some p_i <= 1.
  explicit ExponentVector(std::vector<double> p);

  /// All N exponents equal to p.
  static ExponentVector uniform(std::size_t N, double p);

  std::size_t dim() const { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  std::span<const double> values() const { return p_; }
  bool orthotropic() const;

 private:
  std::vector<double> p_;
};

/// Harmonic mean N / sum(1/p_i).
double pbar(const ExponentVector& exp);

/// p_c(N) = 2N/(N+1).  Throws for N < 1.
double critical_exponent(int N);

enum class Verdict { holds, boundary, fails };

const char* to_string(Verdict v);

struct ConditionReport {
  bool H1 = false;  ///< fast diffusion in every direction: 1 < p_i < 2
  bool H2 = false;  ///< sum 1/p_i < (N+1)/2, strict
  bool H3 = false;  ///< p_i <= (N+1)/N * pbar for every i, non-strict

  Verdict H2_verdict = Verdict::fails;
  Verdict H3_verdict = Verdict::fails;

  /// (N+1)/2 - sum 1/p_i; positive when H2 holds.
  double H2_margin = 0.0;
  /// min_i ((N+1)/N pbar - p_i); nonnegative when H3 holds.
  double H3_margin = 0.0;
  /// Index attaining the H3 minimum.
  std::size_t H3_worst = 0;

  std::vector<std::string> diagnostics;
};

ConditionReport check_conditions(const ExponentVector& exp);

struct SelfSimilarExponents {
  double pbar = 0.0;
  double pc = 0.0;
  double alpha = 0.0;          ///< time decay exponent of the sup norm
  std::vector<double> sigma;   ///< spreading weights, sum to 1
  std::vector<double> a;       ///< a_i = sigma_i * alpha
  std::vector<double> beta;    ///< (2 - p_i)/p_i, mass-scaling weights
  double mu = 0.0;             ///< N + 1 - 2N/pbar

  std::size_t dim() const { return sigma.size(); }
};

/// Self-similar exponents.  Requires H2; on violation throws
/// std::domain_error naming the sign of the denominator N*pbar - 2N + pbar.
SelfSimilarExponents selfsim_exponents(const ExponentVector& exp);

/// Symmetrization constant Lambda of the isotropic pbar-Laplacian comparison
/// problem.  Rejects p_i < 1 + 1e-6 (the conjugate exponent blows up).
double cianchi_lambda(const ExponentVector& exp);

/// Volume of the unit ball in R^N.
double unit_ball_volume(int N);

// Doubly nonlinear equation u_t = sum_i (|(u^{m_i})_{x_i}|^{p_i-2} (u^{m_i})_{x_i})_{x_i}.

struct DnlParameters {
  DnlParameters(ExponentVector p, std::vector<double> m);

  ExponentVector p;
  std::vector<double> m;
  double mbar = 0.0;
  double pbar = 0.0;
  /// Mixed mean, q / pbar = (1/N) sum m_i / p_i.
  double q = 0.0;
};

struct DnlExponents {
  double alpha = 0.0;
  /// Empty when DN2 fails.
  std::vector<double> sigma;
  bool DN2 = false;
  std::vector<bool> DN3;
  /// True when the alpha denominator is <= 0.
  bool alpha_nonpositive = false;
};

DnlExponents dnl_exponents(const DnlParameters& dnl);

/// Planar (N = 2) classification used for the anisotropy-control diagram.
struct RegionClass {
  bool H1 = false;
  bool H2 = false;
  bool H3 = false;
  /// Value of (p1 - 2/3)(p2 - 2/3) - 4/9.
  double hyperbola = 0.0;
  /// "admissible", "h2-boundary", "h3-boundary", "h2-fail", "h3-fail",
  /// or "h2-h3-fail".
  std::string label;
};

/// H2 through the hyperbola (p1 - 2/3)(p2 - 2/3) > 4/9 and H3 through the
/// lines p1 <= 2 p2, p2 <= 2 p1.
RegionClass classify_region(double p1, double p2);

struct RegionSample {
  double p1 = 0.0;
  double p2 = 0.0;
  RegionClass cls;
  /// classify_region and check_conditions give the same H2/H3 verdicts.
  bool agrees = false;
};

/// classify_region at the n x n cell centres of (lo, hi)^2 followed by the extra points.
std::vector<RegionSample> region_scan(double lo, double hi, int n,
                                      std::span<const std::array<double, 2>> extra = {});

/// Columns: p1,p2,label,H1,H2,H3,hyperbola,agrees.
void write_region_csv(const std::vector<RegionSample>& samples, const std::filesystem::path& path);

}  // namespace aplab
