#pragma once

#include <Eigen/Core>

#include <array>
#include <complex>
#include <cstdint>
#include <memory>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "smcf/errors.hpp"

namespace smcf {

using Complex = std::complex<double>;
using Index = Eigen::Index;

class Grid;
using GridPtr = std::shared_ptr<const Grid>;
using Point = std::array<double, 3>;

/// Uniform periodic grid on the box [0, L)^d with n points per axis.
///
/// Fields are flattened row-major (axis 0 slowest). Spectral coefficients are
/// the normalized Fourier coefficients c_k of the trigonometric interpolant,
/// f(x) = sum_k c_k exp(i k.x), so that the L2 norm over the box equals
/// sqrt(L^d sum |c_k|^2).
class Grid {
 public:
  static GridPtr create(int dim, int points, double box_length,
                        double dealias_fraction = 2.0 / 3.0);
  ~Grid();
  Grid(const Grid&) = delete;
  Grid& operator=(const Grid&) = delete;

  int dim() const { return dim_; }
  int points() const { return n_; }
  double box_length() const { return length_; }
  double dealias_fraction() const { return dealias_; }
  Index size() const { return size_; }
  double spacing() const { return length_ / n_; }
  double cell_volume() const;
  double volume() const;
  double fundamental_wavenumber() const;
  double nyquist_wavenumber() const;
  Index stride(int axis) const;

  const Eigen::ArrayXd& coordinate(int axis) const;
  const Eigen::ArrayXd& wavenumber(int axis) const;
  const Eigen::ArrayXd& wavenumber_squared() const { return k2_; }
  const Eigen::ArrayXd& wavenumber_norm() const { return kabs_; }
  // 1 everywhere except 0 on the Nyquist plane of `axis` (odd derivatives).
  const Eigen::ArrayXd& odd_derivative_mask(int axis) const;
  // 1 on retained modes of the dealiasing rule, 0 elsewhere.
  const Eigen::ArrayXd& dealias_mask() const { return dealias_mask_; }

  // Signed integer mode index of grid index i along one axis.
  int mode_index(int i) const { return i < n_ / 2 ? i : i - n_; }

  bool same_shape(const Grid& other) const;

  void forward(const Eigen::ArrayXcd& physical, Eigen::ArrayXcd& coefficients) const;
  void inverse(const Eigen::ArrayXcd& coefficients, Eigen::ArrayXcd& physical) const;

 private:
  Grid(int dim, int points, double box_length, double dealias_fraction);
  void transform_axes(Eigen::ArrayXcd& data, bool forward) const;

  struct FftEngine;

  int dim_;
  int n_;
  double length_;
  double dealias_;
  Index size_;
  std::array<Eigen::ArrayXd, 3> coords_;
  std::array<Eigen::ArrayXd, 3> k_;
  std::array<Eigen::ArrayXd, 3> odd_mask_;
  Eigen::ArrayXd k2_;
  Eigen::ArrayXd kabs_;
  Eigen::ArrayXd dealias_mask_;
  std::unique_ptr<FftEngine> fft_;
};

template <typename A, typename B>
using Promote = decltype(std::declval<A>() * std::declval<B>());

/// Scalar field sampled on a Grid. Scalar is double (real parity) or Complex.
template <typename Scalar>
class GridField {
 public:
  using ScalarType = Scalar;
  using ArrayType = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  GridField() = default;
  explicit GridField(GridPtr grid)
      : grid_(std::move(grid)), values_(ArrayType::Zero(grid_->size())) {}
  GridField(GridPtr grid, ArrayType values) : grid_(std::move(grid)), values_(std::move(values)) {
    require(values_.size() == grid_->size(), ErrorCode::GridMismatch,
            "value array does not match grid size");
  }

  static GridField constant(GridPtr grid, Scalar value) {
    const Index n = grid->size();
    return GridField(std::move(grid), ArrayType::Constant(n, value));
  }

  /// Samples fn(x) at every grid point; x holds the d coordinates (unused
  /// trailing entries are zero).
  template <typename Fn>
  static GridField sample(GridPtr grid, Fn&& fn) {
    GridField out(grid);
    Point x{0.0, 0.0, 0.0};
    for (Index i = 0; i < grid->size(); ++i) {
      for (int a = 0; a < grid->dim(); ++a) x[a] = grid->coordinate(a)[i];
      out.values_[i] = static_cast<Scalar>(fn(x));
    }
    return out;
  }

  const GridPtr& grid() const { return grid_; }
  bool empty() const { return grid_ == nullptr; }
  Index size() const { return values_.size(); }
  const ArrayType& values() const { return values_; }
  ArrayType& values() { return values_; }
  Scalar operator[](Index i) const { return values_[i]; }
  Scalar& operator[](Index i) { return values_[i]; }

  GridField& operator+=(const GridField& o) {
    values_ += o.values_;
    return *this;
  }
  GridField& operator-=(const GridField& o) {
    values_ -= o.values_;
    return *this;
  }
  GridField& operator*=(Scalar s) {
    values_ *= s;
    return *this;
  }

 private:
  GridPtr grid_;
  ArrayType values_;
};

using RealField = GridField<double>;
using ComplexField = GridField<Complex>;

template <typename A, typename B>
void check_same_grid(const GridField<A>& f, const GridField<B>& g) {
  if (f.grid() == g.grid()) return;
  require(f.grid() && g.grid() && f.grid()->same_shape(*g.grid()), ErrorCode::GridMismatch,
          "fields live on different grids");
}

template <typename A, typename B>
GridField<Promote<A, B>> operator+(const GridField<A>& f, const GridField<B>& g) {
  check_same_grid(f, g);
  return {f.grid(), f.values() + g.values()};
}
template <typename A, typename B>
GridField<Promote<A, B>> operator-(const GridField<A>& f, const GridField<B>& g) {
  check_same_grid(f, g);
  return {f.grid(), f.values() - g.values()};
}
// Pointwise (collocation) product; see dealiased_product for the truncated form.
template <typename A, typename B>
GridField<Promote<A, B>> operator*(const GridField<A>& f, const GridField<B>& g) {
  check_same_grid(f, g);
  return {f.grid(), f.values() * g.values()};
}
template <typename A>
GridField<A> operator-(const GridField<A>& f) {
  return {f.grid(), -f.values()};
}
template <typename A, typename S, typename = std::enable_if_t<std::is_arithmetic_v<S> || std::is_same_v<S, Complex>>>
GridField<Promote<A, S>> operator*(S s, const GridField<A>& f) {
  return {f.grid(), f.values() * s};
}
template <typename A, typename S, typename = std::enable_if_t<std::is_arithmetic_v<S> || std::is_same_v<S, Complex>>>
GridField<Promote<A, S>> operator*(const GridField<A>& f, S s) {
  return {f.grid(), f.values() * s};
}

inline ComplexField to_complex(const RealField& f) {
  return {f.grid(), f.values().cast<Complex>()};
}
inline ComplexField to_complex(const ComplexField& f) { return f; }
inline RealField real(const ComplexField& f) { return {f.grid(), f.values().real()}; }
inline RealField imag(const ComplexField& f) { return {f.grid(), f.values().imag()}; }
inline ComplexField conj(const ComplexField& f) { return {f.grid(), f.values().conjugate()}; }
inline RealField real(const RealField& f) { return f; }
inline RealField conj(const RealField& f) { return f; }
inline RealField abs(const ComplexField& f) { return {f.grid(), f.values().abs()}; }

/// L2 norm over the box with grid measure.
template <typename S>
double norm_l2(const GridField<S>& f) {
  return std::sqrt(f.values().abs2().sum() * f.grid()->cell_volume());
}
template <typename S>
double norm_linf(const GridField<S>& f) {
  return f.size() == 0 ? 0.0 : f.values().abs().maxCoeff();
}
template <typename S>
S mean(const GridField<S>& f) {
  return f.values().mean();
}
template <typename S>
bool all_finite(const GridField<S>& f) {
  return f.values().isFinite().all();
}

/// Spectral representation paired with a grid.
struct Spectrum {
  GridPtr grid;
  Eigen::ArrayXcd coefficients;
};

template <typename S>
Spectrum transform(const GridField<S>& f);
template <typename S>
GridField<S> synthesize(const Spectrum& s);

// Fourier-multiplier operators. Real inputs give real outputs.
/// Trigonometric interpolant of `s` evaluated at arbitrary points (direct
/// summation, O(n^d) per point). The Nyquist mode is split symmetrically so
/// real data interpolates to real values.
Eigen::ArrayXcd evaluate_at(const Spectrum& s, const std::vector<Point>& points);
/// Same for the spectrum of real data, summing half the modes on the last axis.
Eigen::ArrayXd evaluate_real_at(const Spectrum& s, const std::vector<Point>& points);

template <typename S>
GridField<S> spectral_derivative(const GridField<S>& f, int axis, int order = 1);
/// x -> f(x + shift e_axis) on the trigonometric interpolant.
template <typename S>
GridField<S> translate(const GridField<S>& f, int axis, double shift);
template <typename S>
GridField<S> fractional_derivative(const GridField<S>& f, double sigma,
                                   double zero_mode_tolerance = 1e-12);
enum class ProjectorKind { P, S };
template <typename S>
GridField<S> lp_project(const GridField<S>& f, int j, ProjectorKind kind);
template <typename S>
GridField<S> laplacian(const GridField<S>& f);
template <typename S>
GridField<S> inverse_laplacian(const GridField<S>& f, S* projected_mean = nullptr);
template <typename S>
GridField<S> truncate(const GridField<S>& f);
template <typename A, typename B>
GridField<Promote<A, B>> dealiased_product(const GridField<A>& f, const GridField<B>& g) {
  check_same_grid(f, g);
  return truncate(f * g);
}
/// exp(factor * Laplacian): factor = dt gives the heat semigroup, factor =
/// i dt the free Schrodinger propagator.
ComplexField laplacian_exponential(const ComplexField& f, Complex factor);
RealField heat_semigroup(const RealField& f, double t);

/// Smooth monotone step: 0 for t <= 0, 1 for t >= 1,
/// e^{-1/t} / (e^{-1/t} + e^{-1/(1-t)}) in between.
double smooth_step(double t);
/// Dyadic profile: smooth, radial, 1 on [0,1], 0 on [2, inf).
double dyadic_profile(double r);
/// Multiplier of P_j (kind P) or S_j (kind S) at wavenumber magnitude r.
double dyadic_multiplier(double r, int j, ProjectorKind kind);
/// Range of dyadic indices j for which P_j is nonzero on this grid.
std::pair<int, int> dyadic_range(const Grid& grid);

/// Largest j with S_j nonzero on this grid.
int highest_block(const Grid& grid);

/// Relative spectral mass beyond half of the Nyquist wavenumber (per axis);
/// a proxy for grid truncation error.
template <typename S>
double spectral_tail(const GridField<S>& f);

// Field snapshot persistence (magic "SMCF", little-endian).
struct Snapshot {
  std::string name;
  int dim = 0;
  int points = 0;
  double box_length = 0.0;
  bool complex_parity = false;
  Eigen::ArrayXcd values;
};

constexpr std::uint32_t kSnapshotVersion = 1;

template <typename S>
void write_snapshot(const std::string& path, const std::string& name, const GridField<S>& f);
Snapshot read_snapshot(const std::string& path);
RealField real_field_from(const Snapshot& s, const GridPtr& grid);
ComplexField complex_field_from(const Snapshot& s, const GridPtr& grid);
GridPtr grid_from(const Snapshot& s, double dealias_fraction = 2.0 / 3.0);

}  // namespace smcf
