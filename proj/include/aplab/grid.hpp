#pragma once

// Uniform cell-centred grids on origin-centred boxes [-L_1, L_1] x ... and the
// field operations built on them: quadrature, rearrangements, Schwarz
// symmetrization and the mass-concentration order.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace aplab {

class TensorGrid {
 public:
  /// Throws std::invalid_argument unless every n_i is odd and >= 3 and L_i > 0.
  TensorGrid(std::vector<double> half_widths, std::vector<int> cells);

  /// Same half-width and cell count along every axis.
  static TensorGrid cube(std::size_t N, double L, int n);

  std::size_t dim() const { return L_.size(); }
  std::size_t size() const { return size_; }
  double half_width(std::size_t i) const { return L_[i]; }
  int cells(std::size_t i) const { return n_[i]; }
  double spacing(std::size_t i) const { return h_[i]; }
  std::span<const double> half_widths() const { return L_; }
  std::span<const int> cell_counts() const { return n_; }
  std::span<const double> spacings() const { return h_; }
  double cell_volume() const { return cell_volume_; }
  double min_spacing() const;
  double max_spacing() const;

  /// Linear index stride of axis i (the last axis is contiguous).
  std::size_t stride(std::size_t i) const { return stride_[i]; }
  /// Per-axis cell index of linear index k.
  int coord(std::size_t k, std::size_t i) const {
    return static_cast<int>((k / stride_[i]) % static_cast<std::size_t>(n_[i]));
  }
  /// Cell-centre coordinate of index j along axis i; j = (n_i - 1)/2 is the origin.
  double center(std::size_t i, int j) const { return (j - (n_[i] - 1) / 2) * h_[i]; }
  void center_of(std::size_t k, std::span<double> x) const;
  /// Linear index of the cell mirrored through the hyperplane x_i = 0.
  std::size_t mirror(std::size_t k, std::size_t i) const;
  /// Linear index of the centre cell.
  std::size_t origin() const;

  bool operator==(const TensorGrid& o) const { return L_ == o.L_ && n_ == o.n_; }

 private:
  std::vector<double> L_;
  std::vector<int> n_;
  std::vector<double> h_;
  std::vector<std::size_t> stride_;
  std::size_t size_ = 0;
  double cell_volume_ = 0.0;
};

/// Cell-centred scalar field, optionally stamped with a time.
struct Field {
  Field(TensorGrid g, std::vector<double> v, double t = 0.0);
  explicit Field(TensorGrid g, double value = 0.0, double t = 0.0);

  TensorGrid grid;
  std::vector<double> values;
  double time = 0.0;

  double operator[](std::size_t k) const { return values[k]; }
  std::size_t size() const { return values.size(); }
};

Field sample(const TensorGrid& grid, const std::function<double(std::span<const double>)>& fn,
             double t = 0.0);

inline constexpr double kInfNorm = std::numeric_limits<double>::infinity();

/// Midpoint-rule total sum of values times cell volume.
double integrate(const Field& f);

/// Discrete L^q norm; q = kInfNorm gives max |value|.  Rejects q < 1.
double lq_norm(const Field& f, double q);

/// L^q norm of f - g on a common grid.
double lq_distance(const Field& f, const Field& g, double q);

/// Cumulative mass of the decreasing rearrangement versus occupied volume.
struct ConcentrationCurve {
  /// Breakpoints 0 = s_0 < s_1 < ... (cell volumes accumulated).
  std::vector<double> volumes;
  /// masses[k] = integral of u* over (0, volumes[k]).
  std::vector<double> masses;
  /// Step values of u* on (s_{k}, s_{k+1}), nonincreasing.
  std::vector<double> density;

  double total_volume() const { return volumes.back(); }
  double total_mass() const { return masses.back(); }
  /// Piecewise-linear evaluation, constant beyond the covered volume.
  double mass_at(double s) const;
};

ConcentrationCurve decreasing_rearrangement(const Field& f);

/// Radially nonincreasing field on the same grid: cells ranked by distance
/// to the origin (ties by linear index) receive the sorted values.
Field schwarz_symmetrize(const Field& f);

/// True when every cumulative mass of f is at most that of g plus tol.
bool concentration_leq(const Field& f, const Field& g, double tol);

/// Largest value of curve(f) - curve(g) over the merged breakpoints.
double concentration_excess(const Field& f, const Field& g);

/// Separately symmetric and nonincreasing in each |x_i|, up to tol.
bool is_ssni(const Field& f, double tol);

/// Worst symmetry and monotonicity violations found by is_ssni.
struct SsniDefect {
  double asymmetry = 0.0;
  double increase = 0.0;
};
SsniDefect ssni_defect(const Field& f);

/// Values on the half-axis x_i >= 0 through the origin, with their coordinates.
struct AxisSamples {
  std::vector<double> x;
  std::vector<double> value;
};
AxisSamples axis_profile(const Field& f, std::size_t axis);

// Serialization.  Binary: "APLF" magic, u32 version, u32 N, u32 n[N],
// f64 L[N], f64 t, f64 values[size] in native byte order.  CSV: '#'
// header lines with N, n, L, t followed by rows x_1,...,x_N,value.

void write_field_binary(const Field& f, const std::filesystem::path& path);
Field read_field_binary(const std::filesystem::path& path);
void write_field_csv(const Field& f, const std::filesystem::path& path);
Field read_field_csv(const std::filesystem::path& path);

}  // namespace aplab
