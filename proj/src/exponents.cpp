#include "aplab/exponents.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace aplab {

namespace {

// Margins within kBoundaryTol * scale of zero are reported as boundary; the
// caller decides whether boundary counts as holding (non-strict) or not.
Verdict classify_margin(double margin, double scale) {
  if (std::abs(margin) <= kBoundaryTol * scale) return Verdict::boundary;
  return margin > 0.0 ? Verdict::holds : Verdict::fails;
}

double inverse_sum(const ExponentVector& exp) {
  double s = 0.0;
  for (double p : exp.values()) s += 1.0 / p;
  return s;
}

}  // namespace

ExponentVector::ExponentVector(std::vector<double> p) : p_(std::move(p)) {
  if (p_.empty()) throw std::invalid_argument("exponent vector must have N >= 1 entries");
  for (std::size_t i = 0; i < p_.size(); ++i) {
    if (!(p_[i] > 1.0) || !std::isfinite(p_[i])) {
      std::ostringstream os;
      os << "invalid exponent p_" << i + 1 << " = " << p_[i] << " (need p_i > 1)";
      throw std::invalid_argument(os.str());
    }
  }
}

ExponentVector ExponentVector::uniform(std::size_t N, double p) {
  return ExponentVector(std::vector<double>(N, p));
}

bool ExponentVector::orthotropic() const {
  return std::all_of(p_.begin(), p_.end(), [&](double v) { return v == p_.front(); });
}

double pbar(const ExponentVector& exp) {
  return static_cast<double>(exp.dim()) / inverse_sum(exp);
}

double critical_exponent(int N) {
  if (N < 1) throw std::invalid_argument("critical_exponent: N must be >= 1");
  return 2.0 * N / (N + 1.0);
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::holds: return "holds";
    case Verdict::boundary: return "boundary";
    case Verdict::fails: return "fails";
  }
  return "?";
}

ConditionReport check_conditions(const ExponentVector& exp) {
  const double N = static_cast<double>(exp.dim());
  ConditionReport r;

  r.H1 = std::all_of(exp.values().begin(), exp.values().end(),
                     [](double p) { return p > 1.0 && p < 2.0; });

  const double rhs = (N + 1.0) / 2.0;
  r.H2_margin = rhs - inverse_sum(exp);
  r.H2_verdict = classify_margin(r.H2_margin, rhs);
  r.H2 = r.H2_verdict == Verdict::holds;

  const double cap = (N + 1.0) / N * pbar(exp);
  r.H3_margin = cap - exp[0];
  r.H3_worst = 0;
  for (std::size_t i = 1; i < exp.dim(); ++i) {
    if (cap - exp[i] < r.H3_margin) {
      r.H3_margin = cap - exp[i];
      r.H3_worst = i;
    }
  }
  r.H3_verdict = classify_margin(r.H3_margin, cap);
  r.H3 = r.H3_verdict != Verdict::fails;

  std::ostringstream os;
  os.precision(12);
  os << "H2: sum 1/p_i = " << inverse_sum(exp) << " vs (N+1)/2 = " << rhs
     << " (" << to_string(r.H2_verdict) << ", margin " << r.H2_margin << ")";
  r.diagnostics.push_back(os.str());
  os.str("");
  os << "H3: max p_i = " << exp[r.H3_worst] << " vs (N+1)/N pbar = " << cap << " ("
     << to_string(r.H3_verdict) << ", margin " << r.H3_margin << ")";
  r.diagnostics.push_back(os.str());
  if (!r.H1) r.diagnostics.emplace_back("H1: some p_i outside (1,2)");
  return r;
}

SelfSimilarExponents selfsim_exponents(const ExponentVector& exp) {
  const std::size_t n = exp.dim();
  const double N = static_cast<double>(n);
  SelfSimilarExponents s;
  s.pbar = pbar(exp);
  s.pc = critical_exponent(static_cast<int>(n));

  const double denom = N * s.pbar - 2.0 * N + s.pbar;
  const auto cond = check_conditions(exp);
  if (!cond.H2 || !(denom > 0.0)) {
    std::ostringstream os;
    os << "selfsim_exponents: H2 violated, denominator N*pbar - 2N + pbar = " << denom
       << (denom > 0 ? " (positive, but on the H2 boundary)"
                     : denom == 0.0 ? " (zero)" : " (negative)");
    throw std::domain_error(os.str());
  }
  s.alpha = N / denom;
  s.mu = N + 1.0 - 2.0 * N / s.pbar;
  s.sigma.resize(n);
  s.a.resize(n);
  s.beta.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.sigma[i] = (N + 1.0) * s.pbar / (N * exp[i]) - 1.0;
    s.a[i] = s.sigma[i] * s.alpha;
    s.beta[i] = (2.0 - exp[i]) / exp[i];
  }
  return s;
}

double unit_ball_volume(int N) {
  if (N < 1) throw std::invalid_argument("unit_ball_volume: N must be >= 1");
  return std::pow(std::numbers::pi, N / 2.0) / std::tgamma(1.0 + N / 2.0);
}

double cianchi_lambda(const ExponentVector& exp) {
  for (double p : exp.values()) {
    if (p < 1.0 + 1e-6)
      throw std::invalid_argument("cianchi_lambda: p_i too close to 1 (conjugate exponent overflow)");
  }
  const int n = static_cast<int>(exp.dim());
  const double pb = pbar(exp);
  const double pb_conj = pb / (pb - 1.0);

  // Work in logs; the individual factors overflow long before Lambda does.
  double log_prod = 0.0;
  for (double p : exp.values()) {
    const double pc = p / (p - 1.0);
    log_prod += std::log(p) / p + std::log(pc) / pc + std::lgamma(1.0 + 1.0 / pc);
  }
  const double log_den = std::log(unit_ball_volume(n)) + std::lgamma(1.0 + n / pb_conj);
  const double log_pref = pb * std::log(2.0) + (pb - 1.0) * std::log(pb - 1.0) - pb * std::log(pb);
  return std::exp(log_pref + pb / n * (log_prod - log_den));
}

DnlParameters::DnlParameters(ExponentVector p_in, std::vector<double> m_in)
    : p(std::move(p_in)), m(std::move(m_in)) {
  if (m.size() != p.dim()) throw std::invalid_argument("DnlParameters: m and p differ in length");
  for (double v : m) {
    if (!(v > 0.0)) throw std::invalid_argument("DnlParameters: every m_i must be > 0");
  }
  const double N = static_cast<double>(p.dim());
  pbar = aplab::pbar(p);
  double sm = 0.0, smp = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    sm += m[i];
    smp += m[i] / p[i];
  }
  mbar = sm / N;
  q = pbar * smp / N;
}

DnlExponents dnl_exponents(const DnlParameters& d) {
  const std::size_t n = d.p.dim();
  const double N = static_cast<double>(n);
  DnlExponents r;
  r.DN2 = d.mbar * d.pbar + d.pbar / N > d.q + 1.0;
  const double denom = N * (d.mbar * d.pbar - d.q - 1.0) + d.pbar;
  r.alpha = N / denom;
  r.alpha_nonpositive = !(denom > 0.0);
  r.DN3.assign(n, false);
  if (!r.DN2 || r.alpha_nonpositive) return r;

  r.sigma.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double pi = d.p[i];
    r.sigma[i] = (1.0 / r.alpha + 1.0 - d.m[i] * (pi - 1.0)) / pi;
    r.DN3[i] = d.m[i] * (pi - 1.0) < 1.0 / r.alpha + 1.0;
  }
  return r;
}

RegionClass classify_region(double p1, double p2) {
  if (!(p1 > 1.0) || !(p2 > 1.0)) throw std::invalid_argument("classify_region: need p1, p2 > 1");
  RegionClass c;
  c.H1 = p1 < 2.0 && p2 < 2.0;

  // Both forms are converted to the margins used by check_conditions so the
  // boundary band is identical:  H2 margin = 3 h / (2 p1 p2), and the H3
  // margin of index i is p_i (2 p_j - p_i) / (p1 + p2).
  c.hyperbola = (p1 - 2.0 / 3.0) * (p2 - 2.0 / 3.0) - 4.0 / 9.0;
  const Verdict h2 = classify_margin(3.0 * c.hyperbola / (2.0 * p1 * p2), 1.5);
  c.H2 = h2 == Verdict::holds;

  const double cap = 3.0 * p1 * p2 / (p1 + p2);
  const Verdict v1 = classify_margin(p1 * (2.0 * p2 - p1) / (p1 + p2), cap);
  const Verdict v2 = classify_margin(p2 * (2.0 * p1 - p2) / (p1 + p2), cap);
  c.H3 = v1 != Verdict::fails && v2 != Verdict::fails;
  const bool h3_boundary = v1 == Verdict::boundary || v2 == Verdict::boundary;

  if (!c.H2 && !c.H3) {
    c.label = "h2-h3-fail";
  } else if (h2 == Verdict::boundary) {
    c.label = "h2-boundary";
  } else if (!c.H2) {
    c.label = "h2-fail";
  } else if (!c.H3) {
    c.label = "h3-fail";
  } else if (h3_boundary) {
    c.label = "h3-boundary";
  } else {
    c.label = "admissible";
  }
  return c;
}

std::vector<RegionSample> region_scan(double lo, double hi, int n,
                                      std::span<const std::array<double, 2>> extra) {
  if (!(lo >= 1.0) || !(hi > lo) || n < 1) throw std::invalid_argument("region_scan: need 1 <= lo < hi, n >= 1");
  std::vector<std::array<double, 2>> pts;
  const double d = (hi - lo) / n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) pts.push_back({lo + (i + 0.5) * d, lo + (j + 0.5) * d});
  pts.insert(pts.end(), extra.begin(), extra.end());

  std::vector<RegionSample> out;
  out.reserve(pts.size());
  for (const auto& [p1, p2] : pts) {
    RegionSample s{p1, p2, classify_region(p1, p2), false};
    const ConditionReport r = check_conditions(ExponentVector({p1, p2}));
    const bool h2_boundary = s.cls.label == "h2-boundary" ||
                             (s.cls.label == "h2-h3-fail" && r.H2_verdict == Verdict::boundary);
    s.agrees = r.H1 == s.cls.H1 && r.H2 == s.cls.H2 && r.H3 == s.cls.H3 &&
               (r.H2_verdict == Verdict::boundary) == h2_boundary;
    out.push_back(std::move(s));
  }
  return out;
}

void write_region_csv(const std::vector<RegionSample>& samples, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "p1,p2,label,H1,H2,H3,hyperbola,agrees\n";
  char buf[128];
  for (const auto& s : samples) {
    std::snprintf(buf, sizeof buf, "%.10g,%.10g,", s.p1, s.p2);
    os << buf << s.cls.label << ',' << s.cls.H1 << ',' << s.cls.H2 << ',' << s.cls.H3 << ',';
    std::snprintf(buf, sizeof buf, "%.10g,", s.cls.hyperbola);
    os << buf << s.agrees << '\n';
  }
}

}  // namespace aplab
