#pragma once

#include <cmath>
#include <vector>

#include "smcf/spectral_grid.hpp"

namespace smcf {

/// Rank-r tensor of GridFields over a d-dimensional grid, stored densely
/// (d^r components, first index slowest). Index placement (upper/lower) is a
/// convention of the caller.
template <typename Scalar>
class Tensor {
 public:
  using Field = GridField<Scalar>;

  Tensor() = default;
  Tensor(GridPtr grid, int rank) : grid_(std::move(grid)), rank_(rank) {
    require(rank >= 0 && rank <= 4, ErrorCode::InvalidArgument, "tensor rank must be 0..4");
    int count = 1;
    for (int r = 0; r < rank_; ++r) count *= grid_->dim();
    comps_.assign(count, Field(grid_));
  }

  const GridPtr& grid() const { return grid_; }
  int dim() const { return grid_ ? grid_->dim() : 0; }
  int rank() const { return rank_; }
  bool empty() const { return comps_.empty(); }
  int component_count() const { return static_cast<int>(comps_.size()); }

  Field& operator()() { return comps_[0]; }
  const Field& operator()() const { return comps_[0]; }
  Field& operator()(int a) { return comps_[a]; }
  const Field& operator()(int a) const { return comps_[a]; }
  Field& operator()(int a, int b) { return comps_[a * dim() + b]; }
  const Field& operator()(int a, int b) const { return comps_[a * dim() + b]; }
  Field& operator()(int a, int b, int c) { return comps_[(a * dim() + b) * dim() + c]; }
  const Field& operator()(int a, int b, int c) const {
    return comps_[(a * dim() + b) * dim() + c];
  }
  Field& operator()(int a, int b, int c, int e) {
    return comps_[((a * dim() + b) * dim() + c) * dim() + e];
  }
  const Field& operator()(int a, int b, int c, int e) const {
    return comps_[((a * dim() + b) * dim() + c) * dim() + e];
  }

  std::vector<Field>& components() { return comps_; }
  const std::vector<Field>& components() const { return comps_; }

  Tensor& operator+=(const Tensor& o) {
    check(o);
    for (std::size_t i = 0; i < comps_.size(); ++i) comps_[i] += o.comps_[i];
    return *this;
  }
  Tensor& operator-=(const Tensor& o) {
    check(o);
    for (std::size_t i = 0; i < comps_.size(); ++i) comps_[i] -= o.comps_[i];
    return *this;
  }
  Tensor& operator*=(Scalar s) {
    for (auto& c : comps_) c *= s;
    return *this;
  }

 private:
  void check(const Tensor& o) const {
    require(rank_ == o.rank_ && comps_.size() == o.comps_.size(), ErrorCode::ValenceMismatch,
            "tensor shapes differ");
  }

  GridPtr grid_;
  int rank_ = 0;
  std::vector<Field> comps_;
};

using RealTensor = Tensor<double>;
using ComplexTensor = Tensor<Complex>;

template <typename S>
Tensor<S> operator+(Tensor<S> a, const Tensor<S>& b) {
  a += b;
  return a;
}
template <typename S>
Tensor<S> operator-(Tensor<S> a, const Tensor<S>& b) {
  a -= b;
  return a;
}
template <typename S>
Tensor<S> operator*(S s, Tensor<S> a) {
  a *= s;
  return a;
}

/// Applies fn to every component.
template <typename S, typename Fn>
auto map_components(const Tensor<S>& t, Fn&& fn) {
  using Out = typename std::decay_t<decltype(fn(t.components()[0]))>::ScalarType;
  Tensor<Out> out(t.grid(), t.rank());
  for (int i = 0; i < t.component_count(); ++i) out.components()[i] = fn(t.components()[i]);
  return out;
}

inline ComplexTensor to_complex(const RealTensor& t) {
  return map_components(t, [](const RealField& f) { return to_complex(f); });
}
inline RealTensor real(const ComplexTensor& t) {
  return map_components(t, [](const ComplexField& f) { return real(f); });
}
inline RealTensor imag(const ComplexTensor& t) {
  return map_components(t, [](const ComplexField& f) { return imag(f); });
}
inline ComplexTensor conj(const ComplexTensor& t) {
  return map_components(t, [](const ComplexField& f) { return conj(f); });
}
template <typename S>
Tensor<S> truncate(const Tensor<S>& t) {
  return map_components(t, [](const GridField<S>& f) { return truncate(f); });
}

/// Flat (Euclidean-in-components) L2 norm: sqrt(sum_components ||T_I||^2).
template <typename S>
double norm_l2(const Tensor<S>& t) {
  double acc = 0.0;
  for (const auto& c : t.components()) acc += c.values().abs2().sum();
  return t.empty() ? 0.0 : std::sqrt(acc * t.grid()->cell_volume());
}

/// Pointwise max over grid points of the component-Euclidean magnitude.
template <typename S>
double norm_linf(const Tensor<S>& t) {
  if (t.empty()) return 0.0;
  Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(t.grid()->size());
  for (const auto& c : t.components()) acc += c.values().abs2();
  return std::sqrt(acc.maxCoeff());
}

template <typename S>
bool all_finite(const Tensor<S>& t) {
  for (const auto& c : t.components())
    if (!all_finite(c)) return false;
  return true;
}

}  // namespace smcf
