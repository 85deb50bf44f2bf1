#include "smcf/spectral_grid.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <numbers>
#include <vector>

namespace smcf {

struct Grid::FftEngine {
  std::mutex lock;
  Eigen::FFT<double> fft;
  std::vector<Complex> line_in;
  std::vector<Complex> line_out;
};

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

template <typename S>
GridField<S> from_coefficients(const GridPtr& grid, const Eigen::ArrayXcd& c) {
  Eigen::ArrayXcd phys;
  grid->inverse(c, phys);
  if constexpr (std::is_same_v<S, double>) {
    return {grid, phys.real()};
  } else {
    return {grid, phys};
  }
}

template <typename S>
Eigen::ArrayXcd coefficients_of(const GridField<S>& f) {
  require(!f.empty(), ErrorCode::InvalidArgument, "field has no grid");
  Eigen::ArrayXcd c;
  if constexpr (std::is_same_v<S, double>) {
    f.grid()->forward(f.values().template cast<Complex>(), c);
  } else {
    f.grid()->forward(f.values(), c);
  }
  return c;
}

}  // namespace

GridPtr Grid::create(int dim, int points, double box_length, double dealias_fraction) {
  require(dim >= 1 && dim <= 3, ErrorCode::InvalidArgument, "dimension must be 1, 2 or 3");
  require(points >= 8 && is_power_of_two(points), ErrorCode::InvalidArgument,
          "points per axis must be a power of two >= 8");
  require(box_length > 0.0 && std::isfinite(box_length), ErrorCode::InvalidArgument,
          "box length must be positive");
  require(dealias_fraction > 0.0 && dealias_fraction <= 1.0, ErrorCode::InvalidArgument,
          "dealias fraction must lie in (0, 1]");
  return GridPtr(new Grid(dim, points, box_length, dealias_fraction));
}

Grid::Grid(int dim, int points, double box_length, double dealias_fraction)
    : dim_(dim), n_(points), length_(box_length), dealias_(dealias_fraction), size_(1),
      fft_(std::make_unique<FftEngine>()) {
  for (int a = 0; a < dim_; ++a) size_ *= n_;
  const double dx = length_ / n_;
  const double k0 = fundamental_wavenumber();
  const int keep = static_cast<int>(std::floor(dealias_ * (n_ / 2) + 1e-12));

  k2_ = Eigen::ArrayXd::Zero(size_);
  dealias_mask_ = Eigen::ArrayXd::Ones(size_);
  for (int a = 0; a < dim_; ++a) {
    coords_[a].resize(size_);
    k_[a].resize(size_);
    odd_mask_[a].resize(size_);
    const Index s = stride(a);
    for (Index i = 0; i < size_; ++i) {
      const int idx = static_cast<int>((i / s) % n_);
      const int m = mode_index(idx);
      coords_[a][i] = idx * dx;
      k_[a][i] = k0 * m;
      odd_mask_[a][i] = (idx == n_ / 2) ? 0.0 : 1.0;
      if (std::abs(m) > keep) dealias_mask_[i] = 0.0;
    }
    k2_ += k_[a].square();
  }
  kabs_ = k2_.sqrt();

  fft_->fft.SetFlag(Eigen::FFT<double>::Unscaled);
  fft_->line_in.resize(n_);
  fft_->line_out.resize(n_);
}

Grid::~Grid() = default;

double Grid::cell_volume() const { return std::pow(spacing(), dim_); }
double Grid::volume() const { return std::pow(length_, dim_); }
double Grid::fundamental_wavenumber() const { return 2.0 * std::numbers::pi / length_; }
double Grid::nyquist_wavenumber() const { return fundamental_wavenumber() * (n_ / 2); }

Index Grid::stride(int axis) const {
  require(axis >= 0 && axis < dim_, ErrorCode::InvalidAxis, "axis out of range");
  Index s = 1;
  for (int b = axis + 1; b < dim_; ++b) s *= n_;
  return s;
}

const Eigen::ArrayXd& Grid::coordinate(int axis) const {
  require(axis >= 0 && axis < dim_, ErrorCode::InvalidAxis, "axis out of range");
  return coords_[axis];
}

const Eigen::ArrayXd& Grid::wavenumber(int axis) const {
  require(axis >= 0 && axis < dim_, ErrorCode::InvalidAxis, "axis out of range");
  return k_[axis];
}

const Eigen::ArrayXd& Grid::odd_derivative_mask(int axis) const {
  require(axis >= 0 && axis < dim_, ErrorCode::InvalidAxis, "axis out of range");
  return odd_mask_[axis];
}

bool Grid::same_shape(const Grid& o) const {
  return dim_ == o.dim_ && n_ == o.n_ && length_ == o.length_ && dealias_ == o.dealias_;
}

void Grid::transform_axes(Eigen::ArrayXcd& data, bool forward) const {
  std::lock_guard<std::mutex> guard(fft_->lock);
  auto& in = fft_->line_in;
  auto& out = fft_->line_out;
  for (int a = 0; a < dim_; ++a) {
    const Index s = stride(a);
    const Index block = s * n_;
    for (Index base = 0; base < size_; base += block) {
      for (Index off = 0; off < s; ++off) {
        const Index start = base + off;
        for (int i = 0; i < n_; ++i) in[i] = data[start + i * s];
        if (forward) {
          fft_->fft.fwd(out, in);
        } else {
          fft_->fft.inv(out, in);
        }
        for (int i = 0; i < n_; ++i) data[start + i * s] = out[i];
      }
    }
  }
}

void Grid::forward(const Eigen::ArrayXcd& physical, Eigen::ArrayXcd& coefficients) const {
  require(physical.size() == size_, ErrorCode::GridMismatch, "array does not match grid");
  coefficients = physical;
  transform_axes(coefficients, true);
  coefficients /= static_cast<double>(size_);
}

void Grid::inverse(const Eigen::ArrayXcd& coefficients, Eigen::ArrayXcd& physical) const {
  require(coefficients.size() == size_, ErrorCode::GridMismatch, "array does not match grid");
  physical = coefficients;
  transform_axes(physical, false);
}

template <typename S>
Spectrum transform(const GridField<S>& f) {
  return {f.grid(), coefficients_of(f)};
}

template <typename S>
GridField<S> synthesize(const Spectrum& s) {
  return from_coefficients<S>(s.grid, s.coefficients);
}

template <typename S>
GridField<S> spectral_derivative(const GridField<S>& f, int axis, int order) {
  require(!f.empty(), ErrorCode::InvalidArgument, "field has no grid");
  const Grid& g = *f.grid();
  require(axis >= 0 && axis < g.dim(), ErrorCode::InvalidAxis, "derivative axis out of range");
  require(order >= 0 && order <= 4, ErrorCode::InvalidArgument, "derivative order must be 0..4");
  if (order == 0) return f;
  Eigen::ArrayXcd c = coefficients_of(f);
  const Eigen::ArrayXd& k = g.wavenumber(axis);
  Eigen::ArrayXcd factor = (Complex(0.0, 1.0) * k.cast<Complex>());
  Eigen::ArrayXcd mult = Eigen::ArrayXcd::Ones(g.size());
  for (int o = 0; o < order; ++o) mult *= factor;
  if (order % 2 == 1) mult *= g.odd_derivative_mask(axis).cast<Complex>();
  c *= mult;
  return from_coefficients<S>(f.grid(), c);
}

template <typename S>
GridField<S> translate(const GridField<S>& f, int axis, double shift) {
  require(!f.empty(), ErrorCode::InvalidArgument, "field has no grid");
  const Grid& g = *f.grid();
  require(axis >= 0 && axis < g.dim(), ErrorCode::InvalidAxis, "translation axis out of range");
  if (shift == 0.0) return f;
  Eigen::ArrayXcd c = coefficients_of(f);
  const Eigen::ArrayXd& k = g.wavenumber(axis);
  const Eigen::ArrayXd& odd = g.odd_derivative_mask(axis);
  for (Index i = 0; i < c.size(); ++i) {
    const double ks = k[i] * shift;
    // the Nyquist mode is split symmetrically, as in the interpolant
    c[i] *= odd[i] > 0.0 ? std::exp(Complex(0.0, ks)) : Complex(std::cos(ks), 0.0);
  }
  return from_coefficients<S>(f.grid(), c);
}

template <typename S>
GridField<S> fractional_derivative(const GridField<S>& f, double sigma, double tol) {
  require(sigma >= -2.0 && sigma <= 4.0, ErrorCode::InvalidArgument,
          "fractional order must lie in [-2, 4]");
  if (sigma == 0.0) return f;
  Eigen::ArrayXcd c = coefficients_of(f);
  if (sigma < 0.0) {
    const double scale = std::max(1.0, std::sqrt(c.abs2().sum()));
    require(std::abs(c[0]) <= tol * scale, ErrorCode::ZeroMode,
            "negative fractional power needs a mean-zero input");
  }
  const Eigen::ArrayXd& kabs = f.grid()->wavenumber_norm();
  for (Index i = 0; i < c.size(); ++i) c[i] = kabs[i] > 0.0 ? c[i] * std::pow(kabs[i], sigma) : 0.0;
  return from_coefficients<S>(f.grid(), c);
}

double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / t);
  const double b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

double dyadic_profile(double r) { return smooth_step(2.0 - std::abs(r)); }

double dyadic_multiplier(double r, int j, ProjectorKind kind) {
  if (kind == ProjectorKind::S && j == 0) return dyadic_profile(r);
  return dyadic_profile(std::ldexp(r, -j)) - dyadic_profile(std::ldexp(r, -(j - 1)));
}

std::pair<int, int> dyadic_range(const Grid& grid) {
  const double kmin = grid.fundamental_wavenumber();
  const double kmax = grid.nyquist_wavenumber() * std::sqrt(static_cast<double>(grid.dim()));
  const int jmin = static_cast<int>(std::floor(std::log2(kmin) - 1.0)) + 1;
  const int jmax = static_cast<int>(std::ceil(std::log2(kmax) + 1.0)) - 1;
  return {jmin, jmax};
}

int highest_block(const Grid& grid) { return std::max(0, dyadic_range(grid).second); }

template <typename S>
GridField<S> lp_project(const GridField<S>& f, int j, ProjectorKind kind) {
  require(kind == ProjectorKind::P || j >= 0, ErrorCode::InvalidArgument,
          "S_j requires j >= 0");
  Eigen::ArrayXcd c = coefficients_of(f);
  const Eigen::ArrayXd& kabs = f.grid()->wavenumber_norm();
  for (Index i = 0; i < c.size(); ++i) c[i] *= dyadic_multiplier(kabs[i], j, kind);
  return from_coefficients<S>(f.grid(), c);
}

template <typename S>
GridField<S> laplacian(const GridField<S>& f) {
  Eigen::ArrayXcd c = coefficients_of(f);
  c *= -f.grid()->wavenumber_squared().template cast<Complex>();
  return from_coefficients<S>(f.grid(), c);
}

template <typename S>
GridField<S> inverse_laplacian(const GridField<S>& f, S* projected_mean) {
  Eigen::ArrayXcd c = coefficients_of(f);
  if (projected_mean) {
    if constexpr (std::is_same_v<S, double>) {
      *projected_mean = c[0].real();
    } else {
      *projected_mean = c[0];
    }
  }
  const Eigen::ArrayXd& k2 = f.grid()->wavenumber_squared();
  for (Index i = 0; i < c.size(); ++i) c[i] = k2[i] > 0.0 ? -c[i] / k2[i] : Complex(0.0);
  return from_coefficients<S>(f.grid(), c);
}

template <typename S>
GridField<S> truncate(const GridField<S>& f) {
  Eigen::ArrayXcd c = coefficients_of(f);
  c *= f.grid()->dealias_mask().template cast<Complex>();
  return from_coefficients<S>(f.grid(), c);
}

ComplexField laplacian_exponential(const ComplexField& f, Complex factor) {
  Eigen::ArrayXcd c = coefficients_of(f);
  c *= (-factor * f.grid()->wavenumber_squared().cast<Complex>()).exp();
  return from_coefficients<Complex>(f.grid(), c);
}

RealField heat_semigroup(const RealField& f, double t) {
  Eigen::ArrayXcd c = coefficients_of(f);
  c *= (-t * f.grid()->wavenumber_squared()).exp().cast<Complex>();
  return from_coefficients<double>(f.grid(), c);
}

template <typename S>
double spectral_tail(const GridField<S>& f) {
  const Eigen::ArrayXcd c = coefficients_of(f);
  const Grid& g = *f.grid();
  const double half = 0.5 * g.nyquist_wavenumber();
  double tail = 0.0;
  double total = 0.0;
  for (Index i = 0; i < c.size(); ++i) {
    const double w = std::norm(c[i]);
    total += w;
    for (int a = 0; a < g.dim(); ++a) {
      if (std::abs(g.wavenumber(a)[i]) > half) {
        tail += w;
        break;
      }
    }
  }
  return total > 0.0 ? std::sqrt(tail / total) : 0.0;
}

namespace {

// Direct summation of the interpolant. With `half` the last axis runs over
// m >= 0 only, with weight 2 off the zero and Nyquist modes; the real part of
// the result is then the interpolant of real data.
Eigen::ArrayXcd evaluate_sum(const Spectrum& s, const std::vector<Point>& points, bool half) {
  const Grid& g = *s.grid;
  const int n = g.points();
  const int d = g.dim();
  const int last = half ? n / 2 + 1 : n;
  const double k0 = g.fundamental_wavenumber();
  using RowMat = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Strided = Eigen::Map<const RowMat, 0, Eigen::OuterStride<>>;
  const Index total = static_cast<Index>(points.size());
  Eigen::ArrayXcd out(total);
  constexpr Index kChunk = 2048;
  std::array<Eigen::MatrixXcd, 3> e;
  for (Index p0 = 0; p0 < total; p0 += kChunk) {
    const Index np = std::min(kChunk, total - p0);
    for (int a = 0; a < d; ++a) {
      const int rows = a == d - 1 ? last : n;
      e[a].resize(rows, np);
      for (Index p = 0; p < np; ++p) {
        const double x = points[static_cast<std::size_t>(p0 + p)][a];
        for (int i = 0; i < rows; ++i) {
          const double phase = k0 * g.mode_index(i) * x;
          Complex v = (i == n / 2) ? Complex(std::cos(phase), 0.0) : std::polar(1.0, phase);
          if (half && a == d - 1 && i != 0 && i != n / 2) v *= 2.0;
          e[a](i, p) = v;
        }
      }
    }
    if (d == 1) {
      out.segment(p0, np) = (s.coefficients.head(last).matrix().transpose() * e[0]).transpose().array();
    } else if (d == 2) {
      Strided c(s.coefficients.data(), n, last, Eigen::OuterStride<>(n));
      const Eigen::MatrixXcd t = c * e[1];
      out.segment(p0, np) = e[0].cwiseProduct(t).colwise().sum().transpose().array();
    } else {
      Eigen::ArrayXcd acc = Eigen::ArrayXcd::Zero(np);
      const Index plane = static_cast<Index>(n) * n;
      for (int i0 = 0; i0 < n; ++i0) {
        Strided c(s.coefficients.data() + i0 * plane, n, last, Eigen::OuterStride<>(n));
        const Eigen::MatrixXcd t = c * e[2];
        acc += e[0].row(i0).transpose().array() *
               e[1].cwiseProduct(t).colwise().sum().transpose().array();
      }
      out.segment(p0, np) = acc;
    }
  }
  return out;
}

}  // namespace

Eigen::ArrayXcd evaluate_at(const Spectrum& s, const std::vector<Point>& points) {
  return evaluate_sum(s, points, false);
}

Eigen::ArrayXd evaluate_real_at(const Spectrum& s, const std::vector<Point>& points) {
  return evaluate_sum(s, points, true).real();
}

// --- snapshot IO ---------------------------------------------------------

namespace {

template <typename T>
void put(std::ostream& os, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  is.read(reinterpret_cast<char*>(bytes), sizeof(T));
  require(static_cast<bool>(is), ErrorCode::Io, "truncated snapshot");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T v;
  std::memcpy(&v, bytes, sizeof(T));
  return v;
}

}  // namespace

template <typename S>
void write_snapshot(const std::string& path, const std::string& name, const GridField<S>& f) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), ErrorCode::Io, "cannot open " + path + " for writing");
  const Grid& g = *f.grid();
  os.write("SMCF", 4);
  put<std::uint32_t>(os, kSnapshotVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(g.dim()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(g.points()));
  put<double>(os, g.box_length());
  put<std::uint8_t>(os, std::is_same_v<S, Complex> ? 1 : 0);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
  for (Index i = 0; i < f.size(); ++i) {
    const Complex z(f[i]);
    put<double>(os, z.real());
    put<double>(os, z.imag());
  }
  require(static_cast<bool>(os), ErrorCode::Io, "write failed for " + path);
}

Snapshot read_snapshot(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), ErrorCode::Io, "cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  require(is && std::memcmp(magic, "SMCF", 4) == 0, ErrorCode::Io, "bad snapshot magic in " + path);
  const auto version = get<std::uint32_t>(is);
  require(version == kSnapshotVersion, ErrorCode::Io, "unsupported snapshot version");
  Snapshot s;
  s.dim = static_cast<int>(get<std::uint32_t>(is));
  s.points = static_cast<int>(get<std::uint32_t>(is));
  s.box_length = get<double>(is);
  s.complex_parity = get<std::uint8_t>(is) != 0;
  const auto len = get<std::uint32_t>(is);
  s.name.resize(len);
  is.read(s.name.data(), len);
  require(s.dim >= 1 && s.dim <= 3 && s.points >= 1, ErrorCode::Io, "bad snapshot header");
  Index size = 1;
  for (int a = 0; a < s.dim; ++a) size *= s.points;
  s.values.resize(size);
  for (Index i = 0; i < size; ++i) {
    const double re = get<double>(is);
    const double im = get<double>(is);
    s.values[i] = Complex(re, im);
  }
  return s;
}

GridPtr grid_from(const Snapshot& s, double dealias_fraction) {
  return Grid::create(s.dim, s.points, s.box_length, dealias_fraction);
}

RealField real_field_from(const Snapshot& s, const GridPtr& grid) {
  require(grid->size() == s.values.size(), ErrorCode::GridMismatch, "snapshot does not match grid");
  return {grid, s.values.real()};
}

ComplexField complex_field_from(const Snapshot& s, const GridPtr& grid) {
  require(grid->size() == s.values.size(), ErrorCode::GridMismatch, "snapshot does not match grid");
  return {grid, s.values};
}

#define SMCF_INSTANTIATE(S)                                                              \
  template Spectrum transform(const GridField<S>&);                                      \
  template GridField<S> synthesize<S>(const Spectrum&);                                  \
  template GridField<S> spectral_derivative(const GridField<S>&, int, int);              \
  template GridField<S> translate(const GridField<S>&, int, double);                     \
  template GridField<S> fractional_derivative(const GridField<S>&, double, double);      \
  template GridField<S> lp_project(const GridField<S>&, int, ProjectorKind);             \
  template GridField<S> laplacian(const GridField<S>&);                                  \
  template GridField<S> inverse_laplacian(const GridField<S>&, S*);                      \
  template GridField<S> truncate(const GridField<S>&);                                   \
  template double spectral_tail(const GridField<S>&);                                    \
  template void write_snapshot(const std::string&, const std::string&, const GridField<S>&);

SMCF_INSTANTIATE(double)
SMCF_INSTANTIATE(Complex)
#undef SMCF_INSTANTIATE

}  // namespace smcf
