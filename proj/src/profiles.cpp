#include "aplab/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace aplab {

namespace {

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

double lq_sum(Point y, double q) {
  double s = 0.0;
  for (double v : y) s += std::pow(std::abs(v), q);
  return s;
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Fast branch: (C0 + c s)^{-e}.  Slow branch: (C0 - c s)_+^{e}.
double profile_of_sum(Branch br, double p, double C0, double c, double s) {
  if (br == Branch::fast) return std::pow(C0 + c * s, -(p - 1.0) / (2.0 - p));
  const double base = C0 - c * s;
  return base > 0.0 ? std::pow(base, (p - 1.0) / (p - 2.0)) : 0.0;
}

void require_dim(const OrthotropicProfile& prof, Point y) {
  if (static_cast<int>(y.size()) != prof.N) throw std::invalid_argument("point dimension mismatch");
}

}  // namespace

OrthotropicProfile OrthotropicProfile::make(int N, double p, double C0) {
  if (N < 1) throw std::invalid_argument("OrthotropicProfile: N must be >= 1");
  if (!(C0 > 0.0)) throw std::invalid_argument("OrthotropicProfile: C0 must be > 0");
  OrthotropicProfile prof;
  prof.N = N;
  prof.p = p;
  prof.C0 = C0;
  prof.lambda = N * (p - 2.0) + p;
  const double pc = critical_exponent(N);
  if (p > pc && p < 2.0) {
    prof.branch = Branch::fast;
  } else if (p > 2.0) {
    prof.branch = Branch::slow;
  } else {
    std::ostringstream os;
    os << "OrthotropicProfile: p = " << p << " outside (p_c, 2) U (2, inf), p_c = " << pc;
    throw std::invalid_argument(os.str());
  }
  return prof;
}

double OrthotropicProfile::coefficient() const {
  return std::abs(2.0 - p) / p * std::pow(lambda, -1.0 / (p - 1.0));
}

double eval_orthotropic(const OrthotropicProfile& prof, Point y) {
  require_dim(prof, y);
  const double q = prof.p / (prof.p - 1.0);
  return profile_of_sum(prof.branch, prof.p, prof.C0, prof.coefficient(), lq_sum(y, q));
}

double orthotropic_derivative(const OrthotropicProfile& prof, Point y, std::size_t i) {
  require_dim(prof, y);
  const double p = prof.p;
  const double q = p / (p - 1.0);
  const double c = prof.coefficient();
  const double s = lq_sum(y, q);
  const double ds = q * std::pow(std::abs(y[i]), q - 1.0) * sign(y[i]);
  if (prof.branch == Branch::fast) {
    const double e = (p - 1.0) / (2.0 - p);
    return -e * std::pow(prof.C0 + c * s, -e - 1.0) * c * ds;
  }
  const double e = (p - 1.0) / (p - 2.0);
  const double base = prof.C0 - c * s;
  if (base <= 0.0) return 0.0;
  return -e * std::pow(base, e - 1.0) * c * ds;
}

double orthotropic_mass(const OrthotropicProfile& prof) {
  const double p = prof.p;
  const double q = p / (p - 1.0);
  const double N = prof.N;
  const double a = N / q;
  const double c = prof.coefficient();
  // Volume of {sum |y_i|^q <= s} is K s^{N/q}.
  const double log_k = N * std::log(2.0 * std::tgamma(1.0 + 1.0 / q)) - std::lgamma(a);
  const double log_scale = a * std::log(prof.C0 / c);
  if (prof.branch == Branch::fast) {
    const double e = (p - 1.0) / (2.0 - p);
    return std::exp(log_k + log_scale - e * std::log(prof.C0) + log_beta(a, e - a));
  }
  const double e = (p - 1.0) / (p - 2.0);
  return std::exp(log_k + log_scale + e * std::log(prof.C0) + log_beta(a, e + 1.0));
}

OrthotropicProfile orthotropic_with_mass(int N, double p, double mass) {
  if (!(mass > 0.0)) throw std::invalid_argument("orthotropic_with_mass: mass must be > 0");
  const auto unit = OrthotropicProfile::make(N, p, 1.0);
  const double a = N * (p - 1.0) / p;
  // mass(C0) = mass(1) * C0^kappa
  const double kappa =
      unit.branch == Branch::fast ? a - (p - 1.0) / (2.0 - p) : a + (p - 1.0) / (p - 2.0);
  const double C0 = std::pow(mass / orthotropic_mass(unit), 1.0 / kappa);
  return OrthotropicProfile::make(N, p, C0);
}

double eval_isotropic_barenblatt(int N, double p, double C0, Point y) {
  if (static_cast<int>(y.size()) != N) throw std::invalid_argument("point dimension mismatch");
  double r2 = 0.0;
  for (double v : y) r2 += v * v;
  if (p == 2.0) return std::pow(4.0 * std::numbers::pi, -N / 2.0) * std::exp(-r2 / 4.0);
  const auto prof = OrthotropicProfile::make(N, p, C0);
  const double q = p / (p - 1.0);
  return profile_of_sum(prof.branch, p, C0, prof.coefficient(), std::pow(r2, q / 2.0));
}

double orthotropic_alpha(const OrthotropicProfile& prof) { return prof.N / prof.lambda; }

double barenblatt_solution(const OrthotropicProfile& prof, Point x, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("barenblatt_solution: t must be > 0");
  require_dim(prof, x);
  const double alpha = orthotropic_alpha(prof);
  const double zoom = std::pow(t, -alpha / prof.N);
  std::vector<double> y(x.begin(), x.end());
  for (double& v : y) v *= zoom;
  return std::pow(t, -alpha) * eval_orthotropic(prof, y);
}

OrthotropicProfile mass_transform(const OrthotropicProfile& prof, double k) {
  if (!(k > 0.0)) throw std::invalid_argument("mass_transform: k must be > 0");
  // k F(k^{(2-p)/p} y) only rescales C0.
  const double p = prof.p;
  return OrthotropicProfile::make(prof.N, p, prof.C0 * std::pow(k, (p - 2.0) / (p - 1.0)));
}

double mass_factor(int N, double p, double k) { return std::pow(k, N + 1.0 - 2.0 * N / p); }

double very_singular(double p, Point x, double t, double k) {
  if (!(t > 0.0)) throw std::invalid_argument("very_singular: t must be > 0");
  if (!(p > 1.0 && p < 2.0)) throw std::invalid_argument("very_singular: need 1 < p < 2");
  const double s = lq_sum(x, p / (p - 1.0));
  if (s == 0.0) throw std::domain_error("very_singular: x = 0 is the singular point");
  return k * std::pow(t, 1.0 / (2.0 - p)) * std::pow(s, -(p - 1.0) / (2.0 - p));
}

double very_singular_separated(double p, Point x, double t, double k) {
  if (!(t > 0.0)) throw std::invalid_argument("very_singular_separated: t must be > 0");
  double s = 0.0;
  for (double v : x) {
    if (v == 0.0) throw std::domain_error("very_singular_separated: singular on the coordinate axes");
    s += std::pow(std::abs(v), -p / (2.0 - p));
  }
  return k * std::pow(t, 1.0 / (2.0 - p)) * s;
}

std::vector<double> upper_barrier_gammas(const ExponentVector& exp, const SelfSimilarExponents& ss) {
  const auto cond = check_conditions(exp);
  if (!cond.H1 || !cond.H2) throw std::domain_error("upper_barrier_gammas: requires H1 and H2");
  const std::size_t n = exp.dim();
  double min_ratio = INFINITY;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ss.sigma[i] * exp[i] / (2.0 - exp[i]);
    if (!(r > 1.0)) {
      std::ostringstream os;
      os << "upper_barrier_gammas: sigma_" << i + 1 << " p_" << i + 1 << "/(2 - p_" << i + 1
         << ") = " << r << " <= 1";
      throw std::domain_error(os.str());
    }
    min_ratio = std::min(min_ratio, r);
  }
  std::vector<double> gamma(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = exp[i];
    const double k = p / (2.0 - p);
    const double bracket =
        ss.alpha / n * (min_ratio - 1.0) / (2.0 * (p - 1.0)) * std::pow(k, -p);
    gamma[i] = std::pow(bracket, 1.0 / (2.0 - p));
  }
  return gamma;
}

UpperBarrier make_upper_barrier(const ExponentVector& exp, std::optional<double> Fstar) {
  if (Fstar && !(*Fstar > 0.0)) throw std::invalid_argument("make_upper_barrier: F_* must be > 0");
  auto ss = selfsim_exponents(exp);
  auto gamma = upper_barrier_gammas(exp, ss);
  return UpperBarrier{exp, std::move(ss), std::move(gamma), Fstar};
}

double eval_upper_barrier(const UpperBarrier& b, Point y) {
  if (y.size() != b.gamma.size()) throw std::invalid_argument("point dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i)
    s += b.gamma[i] * std::pow(std::abs(y[i]), b.p[i] / (2.0 - b.p[i]));
  if (s == 0.0) throw std::domain_error("eval_upper_barrier: singular at y = 0");
  return 1.0 / s;
}

double eval_truncated_barrier(const UpperBarrier& b, Point y) {
  if (!b.Fstar) throw std::invalid_argument("eval_truncated_barrier: barrier has no F_*");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i)
    s += b.gamma[i] * std::pow(std::abs(y[i]), b.p[i] / (2.0 - b.p[i]));
  if (s * *b.Fstar <= 1.0) return *b.Fstar;
  return 1.0 / s;
}

double lower_barrier_A0(const ExponentVector& exp, const SelfSimilarExponents& ss, double gamma,
                        std::span<const double> theta) {
  const std::size_t n = exp.dim();
  if (theta.size() != n) throw std::invalid_argument("lower_barrier_A0: theta has wrong length");
  if (!(gamma > 0.0)) throw std::invalid_argument("lower_barrier_A0: gamma must be > 0");
  double max_st = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(theta[i] > 0.0 && theta[i] <= 1.0))
      throw std::invalid_argument("lower_barrier_A0: theta_i must lie in (0, 1]");
    const double p = exp[i];
    if (!(1.0 / (gamma * theta[i]) < (2.0 - p) / p)) {
      std::ostringstream os;
      os << "lower_barrier_A0: 1/(gamma theta_" << i + 1 << ") = " << 1.0 / (gamma * theta[i])
         << " is not below (2 - p_i)/p_i = " << (2.0 - p) / p;
      throw std::domain_error(os.str());
    }
    max_st = std::max(max_st, ss.sigma[i] * theta[i]);
  }
  const double drift = ss.alpha * (gamma * max_st - 1.0);
  if (!(drift > 0.0)) throw std::domain_error("lower_barrier_A0: gamma max sigma_i theta_i <= 1");

  // The index range printed with the threshold starts at an undefined N_0;
  // taking every i only enlarges A_0.
  double A0 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = exp[i];
    const double num = n * std::pow(gamma, p - 1.0) * (p - 1.0) * (gamma + 1.0) * std::pow(theta[i], p);
    const double expo = 1.0 / (gamma - gamma * (p - 1.0) - p / theta[i]);
    A0 = std::max(A0, std::pow(num / drift, expo));
  }
  return A0;
}

LowerBarrier make_lower_barrier(const ExponentVector& exp, double gamma, std::vector<double> theta,
                                double A) {
  auto ss = selfsim_exponents(exp);
  const double A0 = lower_barrier_A0(exp, ss, gamma, theta);
  if (!(A > A0)) {
    std::ostringstream os;
    os << "make_lower_barrier: A = " << A << " must exceed A_0 = " << A0;
    throw std::domain_error(os.str());
  }
  return LowerBarrier{exp, std::move(ss), gamma, std::move(theta), A, A0};
}

double eval_lower_barrier(const LowerBarrier& b, Point y) {
  if (y.size() != b.theta.size()) throw std::invalid_argument("point dimension mismatch");
  double s = b.A;
  for (std::size_t i = 0; i < y.size(); ++i) s += std::pow(std::abs(y[i]), b.theta[i]);
  return std::pow(s, -b.gamma);
}

double stationary_residual(const ProfileFn& F, const ExponentVector& exp,
                           const SelfSimilarExponents& ss, Point y, double h) {
  const std::size_t n = exp.dim();
  if (y.size() != n) throw std::invalid_argument("stationary_residual: point dimension mismatch");
  if (!(h > 0.0)) throw std::invalid_argument("stationary_residual: h must be > 0");
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(y[i]) < 2.0 * h) {
      std::ostringstream os;
      os << "stationary_residual: |y_" << i + 1 << "| = " << std::abs(y[i])
         << " is closer than 2h to the coordinate hyperplane";
      throw std::domain_error(os.str());
    }
  }

  std::vector<double> z(y.begin(), y.end());
  auto at = [&](std::size_t i, double shift) {
    z[i] = y[i] + shift;
    const double v = F(z);
    z[i] = y[i];
    return v;
  };
  // Fourth-order derivative with step h/2 centred at y_i + c.
  auto deriv = [&](std::size_t i, double c) {
    return (-at(i, c + h) + 8.0 * at(i, c + 0.5 * h) - 8.0 * at(i, c - 0.5 * h) + at(i, c - h)) /
           (6.0 * h);
  };
  auto flux = [&](double s, double p) { return s == 0.0 ? 0.0 : std::pow(std::abs(s), p - 2.0) * s; };

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = exp[i];
    const double diffusion = (flux(deriv(i, 0.5 * h), p) - flux(deriv(i, -0.5 * h), p)) / h;
    const double yp = y[i] + 0.5 * h;
    const double ym = y[i] - 0.5 * h;
    const double drift = (yp * at(i, 0.5 * h) - ym * at(i, -0.5 * h)) / h;
    total += diffusion + ss.alpha * ss.sigma[i] * drift;
  }
  return total;
}

}  // namespace aplab
