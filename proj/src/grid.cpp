#include "aplab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace aplab {

TensorGrid::TensorGrid(std::vector<double> half_widths, std::vector<int> cells)
    : L_(std::move(half_widths)), n_(std::move(cells)) {
  if (L_.empty() || L_.size() != n_.size())
    throw std::invalid_argument("TensorGrid: need matching, nonempty L and n");
  const std::size_t N = L_.size();
  h_.resize(N);
  stride_.resize(N);
  size_ = 1;
  cell_volume_ = 1.0;
  for (std::size_t i = 0; i < N; ++i) {
    if (!(L_[i] > 0.0) || !std::isfinite(L_[i]))
      throw std::invalid_argument("TensorGrid: half-widths must be positive");
    if (n_[i] < 3 || n_[i] % 2 == 0)
      throw std::invalid_argument("TensorGrid: cell counts must be odd and >= 3");
    h_[i] = 2.0 * L_[i] / n_[i];
    cell_volume_ *= h_[i];
  }
  for (std::size_t i = N; i-- > 0;) {
    stride_[i] = size_;
    size_ *= static_cast<std::size_t>(n_[i]);
  }
}

TensorGrid TensorGrid::cube(std::size_t N, double L, int n) {
  return TensorGrid(std::vector<double>(N, L), std::vector<int>(N, n));
}

double TensorGrid::min_spacing() const { return *std::min_element(h_.begin(), h_.end()); }
double TensorGrid::max_spacing() const { return *std::max_element(h_.begin(), h_.end()); }

void TensorGrid::center_of(std::size_t k, std::span<double> x) const {
  for (std::size_t i = 0; i < dim(); ++i) x[i] = center(i, coord(k, i));
}

std::size_t TensorGrid::mirror(std::size_t k, std::size_t i) const {
  const int j = coord(k, i);
  const int jm = n_[i] - 1 - j;
  return k + static_cast<std::size_t>(jm - j) * stride_[i];
}

std::size_t TensorGrid::origin() const {
  std::size_t k = 0;
  for (std::size_t i = 0; i < dim(); ++i) k += static_cast<std::size_t>((n_[i] - 1) / 2) * stride_[i];
  return k;
}

Field::Field(TensorGrid g, std::vector<double> v, double t)
    : grid(std::move(g)), values(std::move(v)), time(t) {
  if (values.size() != grid.size()) throw std::invalid_argument("Field: value count does not match grid");
  for (double x : values) {
    if (!std::isfinite(x)) throw std::invalid_argument("Field: values must be finite");
  }
}

Field::Field(TensorGrid g, double value, double t)
    : grid(std::move(g)), values(grid.size(), value), time(t) {}

Field sample(const TensorGrid& grid, const std::function<double(std::span<const double>)>& fn,
             double t) {
  std::vector<double> v(grid.size());
  std::vector<double> x(grid.dim());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    grid.center_of(k, x);
    v[k] = fn(x);
  }
  return Field(grid, std::move(v), t);
}

double integrate(const Field& f) {
  double s = 0.0;
  for (double v : f.values) s += v;
  return s * f.grid.cell_volume();
}

double lq_norm(const Field& f, double q) {
  if (!(q >= 1.0)) throw std::invalid_argument("lq_norm: q must be >= 1");
  if (std::isinf(q)) {
    double m = 0.0;
    for (double v : f.values) m = std::max(m, std::abs(v));
    return m;
  }
  double s = 0.0;
  if (q == 1.0) {
    for (double v : f.values) s += std::abs(v);
    return s * f.grid.cell_volume();
  }
  for (double v : f.values) s += std::pow(std::abs(v), q);
  return std::pow(s * f.grid.cell_volume(), 1.0 / q);
}

double lq_distance(const Field& f, const Field& g, double q) {
  if (!(f.grid == g.grid)) throw std::invalid_argument("lq_distance: fields live on different grids");
  std::vector<double> d(f.size());
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = f.values[k] - g.values[k];
  return lq_norm(Field(f.grid, std::move(d)), q);
}

double ConcentrationCurve::mass_at(double s) const {
  if (s <= 0.0) return 0.0;
  if (s >= volumes.back()) return masses.back();
  const auto it = std::upper_bound(volumes.begin(), volumes.end(), s);
  const std::size_t k = static_cast<std::size_t>(it - volumes.begin()) - 1;
  return masses[k] + density[k] * (s - volumes[k]);
}

ConcentrationCurve decreasing_rearrangement(const Field& f) {
  ConcentrationCurve c;
  c.density = f.values;
  std::sort(c.density.begin(), c.density.end(), std::greater<>());
  const double vol = f.grid.cell_volume();
  const std::size_t n = c.density.size();
  c.volumes.resize(n + 1);
  c.masses.resize(n + 1);
  c.volumes[0] = 0.0;
  c.masses[0] = 0.0;
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    acc += c.density[k];
    c.volumes[k + 1] = static_cast<double>(k + 1) * vol;
    c.masses[k + 1] = acc * vol;
  }
  return c;
}

Field schwarz_symmetrize(const Field& f) {
  const auto& g = f.grid;
  std::vector<double> r2(g.size());
  std::vector<double> x(g.dim());
  for (std::size_t k = 0; k < g.size(); ++k) {
    g.center_of(k, x);
    double s = 0.0;
    for (double v : x) s += v * v;
    r2[k] = s;
  }
  std::vector<std::size_t> order(g.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return r2[a] < r2[b] || (r2[a] == r2[b] && a < b);
  });
  std::vector<double> sorted = f.values;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  std::vector<double> out(g.size());
  for (std::size_t r = 0; r < order.size(); ++r) out[order[r]] = sorted[r];
  return Field(g, std::move(out), f.time);
}

double concentration_excess(const Field& f, const Field& g) {
  const auto cf = decreasing_rearrangement(f);
  const auto cg = decreasing_rearrangement(g);
  double worst = -INFINITY;
  for (std::size_t k = 0; k < cf.volumes.size(); ++k)
    worst = std::max(worst, cf.masses[k] - cg.mass_at(cf.volumes[k]));
  for (std::size_t k = 0; k < cg.volumes.size(); ++k)
    worst = std::max(worst, cf.mass_at(cg.volumes[k]) - cg.masses[k]);
  return worst;
}

bool concentration_leq(const Field& f, const Field& g, double tol) {
  return concentration_excess(f, g) <= tol;
}

SsniDefect ssni_defect(const Field& f) {
  const auto& g = f.grid;
  SsniDefect d;
  for (std::size_t k = 0; k < g.size(); ++k) {
    for (std::size_t i = 0; i < g.dim(); ++i) {
      d.asymmetry = std::max(d.asymmetry, std::abs(f.values[k] - f.values[g.mirror(k, i)]));
      // Monotone in |x_i|: each cell with x_i >= 0 dominates its outward neighbour.
      const int j = g.coord(k, i);
      const int mid = (g.cells(i) - 1) / 2;
      if (j >= mid && j + 1 < g.cells(i)) {
        d.increase = std::max(d.increase, f.values[k + g.stride(i)] - f.values[k]);
      } else if (j <= mid && j > 0) {
        d.increase = std::max(d.increase, f.values[k - g.stride(i)] - f.values[k]);
      }
    }
  }
  return d;
}

bool is_ssni(const Field& f, double tol) {
  const auto d = ssni_defect(f);
  return d.asymmetry <= tol && d.increase <= tol;
}

AxisSamples axis_profile(const Field& f, std::size_t axis) {
  const auto& g = f.grid;
  if (axis >= g.dim()) throw std::invalid_argument("axis_profile: axis out of range");
  AxisSamples s;
  const std::size_t o = g.origin();
  const int mid = (g.cells(axis) - 1) / 2;
  for (int j = mid; j < g.cells(axis); ++j) {
    s.x.push_back(g.center(axis, j));
    s.value.push_back(f.values[o + static_cast<std::size_t>(j - mid) * g.stride(axis)]);
  }
  return s;
}

namespace {

constexpr char kMagic[4] = {'A', 'P', 'L', 'F'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ofstream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("read_field_binary: truncated file");
  return v;
}

}  // namespace

void write_field_binary(const Field& f, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os.write(kMagic, 4);
  put<std::uint32_t>(os, kVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(f.grid.dim()));
  for (int n : f.grid.cell_counts()) put<std::uint32_t>(os, static_cast<std::uint32_t>(n));
  for (double L : f.grid.half_widths()) put<double>(os, L);
  put<double>(os, f.time);
  os.write(reinterpret_cast<const char*>(f.values.data()),
           static_cast<std::streamsize>(f.values.size() * sizeof(double)));
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

Field read_field_binary(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("not a field file: " + path.string());
  if (get<std::uint32_t>(is) != kVersion) throw std::runtime_error("unsupported field file version");
  const auto N = get<std::uint32_t>(is);
  if (N == 0 || N > 16) throw std::runtime_error("corrupt field header");
  std::vector<int> n(N);
  std::vector<double> L(N);
  for (auto& v : n) v = static_cast<int>(get<std::uint32_t>(is));
  for (auto& v : L) v = get<double>(is);
  const double t = get<double>(is);
  TensorGrid g(L, n);
  std::vector<double> values(g.size());
  is.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!is) throw std::runtime_error("read_field_binary: truncated values");
  return Field(std::move(g), std::move(values), t);
}

void write_field_csv(const Field& f, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const auto& g = f.grid;
  os << std::setprecision(17);
  os << "# N=" << g.dim() << "\n# n=";
  for (std::size_t i = 0; i < g.dim(); ++i) os << (i ? "," : "") << g.cells(i);
  os << "\n# L=";
  for (std::size_t i = 0; i < g.dim(); ++i) os << (i ? "," : "") << g.half_width(i);
  os << "\n# t=" << f.time << "\n";
  for (std::size_t i = 0; i < g.dim(); ++i) os << "x" << i + 1 << ",";
  os << "value\n";
  std::vector<double> x(g.dim());
  for (std::size_t k = 0; k < g.size(); ++k) {
    g.center_of(k, x);
    for (double v : x) os << v << ",";
    os << f.values[k] << "\n";
  }
}

Field read_field_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  auto parse_list = [](const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    return out;
  };
  std::vector<double> nd, L;
  double t = 0.0;
  std::string line;
  while (std::getline(is, line)) {
    if (line.rfind("# n=", 0) == 0) nd = parse_list(line.substr(4));
    else if (line.rfind("# L=", 0) == 0) L = parse_list(line.substr(4));
    else if (line.rfind("# t=", 0) == 0) t = std::stod(line.substr(4));
    else if (line.rfind("x1", 0) == 0) break;
  }
  std::vector<int> n(nd.begin(), nd.end());
  TensorGrid g(L, n);
  std::vector<double> values;
  values.reserve(g.size());
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    values.push_back(std::stod(line.substr(line.rfind(',') + 1)));
  }
  return Field(std::move(g), std::move(values), t);
}

}  // namespace aplab
