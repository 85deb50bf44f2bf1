#include "smcf/norms.hpp"

#include <algorithm>
#include <cmath>

namespace smcf {

void EnvelopeParams::validate(int d) const {
  require(delta > 0.0 && delta < s - 0.5 * d, ErrorCode::InvalidArgument,
          "envelope slack must satisfy 0 < delta < s - d/2");
}

template <typename S>
double sobolev_norm(const GridField<S>& f, double s) {
  require(s >= -4.0 && s <= 6.0, ErrorCode::InvalidArgument, "Sobolev index must lie in [-4, 6]");
  const Spectrum sp = transform(f);
  const Eigen::ArrayXd weight = (1.0 + f.grid()->wavenumber_squared()).pow(s);
  return std::sqrt(f.grid()->volume() * (weight * sp.coefficients.abs2()).sum());
}

template <typename S>
double z_norm(const std::vector<GridField<S>>& series, double sigma, double s) {
  require(!series.empty(), ErrorCode::EmptySeries, "Z norm of an empty series");
  const Grid& g = *series.front().grid();
  const int top = highest_block(g);
  double acc = 0.0;
  for (int j = 0; j <= top; ++j) {
    double sup = 0.0;
    for (const auto& h : series) {
      auto block = lp_project(h, j, ProjectorKind::S);
      if (j == 0 && sigma != 0.0) block = fractional_derivative(block, sigma);
      sup = std::max(sup, norm_l2(block));
    }
    const double w = j == 0 ? 1.0 : std::pow(2.0, s * j);
    acc += (w * sup) * (w * sup);
  }
  return std::sqrt(acc);
}

namespace {

// 1d periodic partition of unity on [0, L): M windows of side L/M whose edges
// are smooth ramps of width 10% of the side.
Eigen::ArrayXd window_1d(const Eigen::ArrayXd& x, double L, int M, int q) {
  if (M == 1) return Eigen::ArrayXd::Ones(x.size());
  const double side = L / M;
  const double w = 0.1 * side;
  auto ramp = [w](double t) { return smooth_step(t / w + 0.5); };
  const double a = q * side;
  Eigen::ArrayXd out(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    double y = std::fmod(x[i] - a, L);
    if (y < 0) y += L;
    if (y > L - 0.5 * w) y -= L;
    out[i] = ramp(y) * (1.0 - ramp(y - side));
  }
  return out;
}

}  // namespace

template <typename S>
double cube_partition_norm(const GridField<S>& f, int j, double p, InnerNorm inner) {
  const Grid& g = *f.grid();
  const double scale = std::ldexp(1.0, j);
  require(scale <= g.box_length(), ErrorCode::ScaleExceedsBox, "cube scale exceeds the box");
  require(p == 1.0 || p == 2.0 || p == kInf, ErrorCode::InvalidArgument, "p must be 1, 2 or inf");
  const int M = static_cast<int>(std::floor(g.box_length() / scale + 1e-12));
  const int d = g.dim();
  std::vector<std::vector<Eigen::ArrayXd>> windows(d);
  for (int a = 0; a < d; ++a)
    for (int q = 0; q < M; ++q) windows[a].push_back(window_1d(g.coordinate(a), g.box_length(), M, q));

  const Eigen::ArrayXd mag = f.values().abs();
  double acc = 0.0;
  int cubes = 1;
  for (int a = 0; a < d; ++a) cubes *= M;
  for (int c = 0; c < cubes; ++c) {
    Eigen::ArrayXd chi = Eigen::ArrayXd::Ones(g.size());
    int rest = c;
    for (int a = 0; a < d; ++a) {
      chi *= windows[a][rest % M];
      rest /= M;
    }
    const Eigen::ArrayXd local = chi * mag;
    const double v = inner == InnerNorm::L2 ? std::sqrt(local.square().sum() * g.cell_volume())
                                            : local.maxCoeff();
    if (p == 1.0) {
      acc += v;
    } else if (p == 2.0) {
      acc += v * v;
    } else {
      acc = std::max(acc, v);
    }
  }
  return p == 2.0 ? std::sqrt(acc) : acc;
}

template <typename S>
double cube_l1_clamped(const GridField<S>& f, int l) {
  const int lmax = static_cast<int>(std::floor(std::log2(f.grid()->box_length())));
  return cube_partition_norm(f, std::min(l, lmax), 1.0, InnerNorm::L2);
}

template <typename S>
double y0j_decomposition_cost(const std::vector<GridField<S>>& pieces, int j) {
  double cost = 0.0;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const int l = std::abs(j) + static_cast<int>(i);
    cost += std::ldexp(1.0, static_cast<int>(i)) * cube_l1_clamped(pieces[i], l);
  }
  return cost;
}

template <typename S>
double y0_norm_upper(const GridField<S>& f, double s, double delta) {
  const Grid& g = *f.grid();
  auto [jmin, jmax] = dyadic_range(g);
  const double d = g.dim();
  double acc = 0.0;
  for (int j = jmin; j <= jmax; ++j) {
    const auto block = lp_project(f, j, ProjectorKind::P);
    const double exponent = j < 0 ? (0.5 * d - delta) * j : s * j;
    const double v = std::pow(2.0, exponent) * cube_l1_clamped(block, std::abs(j));
    acc += v * v;
  }
  return std::sqrt(acc);
}

template <typename S>
GridField<S> project_high(const GridField<S>& f) {
  Spectrum sp = transform(f);
  const Eigen::ArrayXd& kabs = f.grid()->wavenumber_norm();
  for (Index i = 0; i < sp.coefficients.size(); ++i)
    sp.coefficients[i] *= 1.0 - dyadic_profile(2.0 * kabs[i]);
  return synthesize<S>(sp);
}

template <typename S>
double y0_lo_norm_upper(const GridField<S>& f, double delta) {
  const Grid& g = *f.grid();
  const double d = g.dim();
  const auto high = project_high(f);
  double lo = 0.0;
  const int jmin = dyadic_range(g).first;
  for (int j = jmin; j < 0; ++j) {
    const auto block = lp_project(f, j, ProjectorKind::P);
    const double v = std::pow(2.0, (0.5 * d - delta) * j) * cube_l1_clamped(block, -j);
    lo += v * v;
  }
  return cube_l1_clamped(high, 0) + norm_linf(high) + std::sqrt(lo);
}

template <typename S>
Envelope frequency_envelope(const GridField<S>& f, const EnvelopeParams& params) {
  params.validate(f.grid()->dim());
  const int top = highest_block(*f.grid());
  std::vector<double> blocks(top + 1);
  for (int k = 0; k <= top; ++k) blocks[k] = sobolev_norm(lp_project(f, k, ProjectorKind::S), params.s);
  const double total = sobolev_norm(f, params.s);
  Envelope env;
  env.values.resize(top + 1);
  for (int j = 0; j <= top; ++j) {
    double best = 0.0;
    for (int k = 0; k <= top; ++k)
      best = std::max(best, std::pow(2.0, -params.delta * std::abs(j - k)) * blocks[k]);
    env.values[j] = std::pow(2.0, -params.delta * j) * total + best;
  }
  return env;
}

#define SMCF_INSTANTIATE(S)                                                               \
  template double sobolev_norm(const GridField<S>&, double);                              \
  template double z_norm(const std::vector<GridField<S>>&, double, double);               \
  template double cube_partition_norm(const GridField<S>&, int, double, InnerNorm);        \
  template double cube_l1_clamped(const GridField<S>&, int);                              \
  template double y0j_decomposition_cost(const std::vector<GridField<S>>&, int);          \
  template double y0_norm_upper(const GridField<S>&, double, double);                     \
  template double y0_lo_norm_upper(const GridField<S>&, double);                          \
  template Envelope frequency_envelope(const GridField<S>&, const EnvelopeParams&);       \
  template GridField<S> project_high(const GridField<S>&);

SMCF_INSTANTIATE(double)
SMCF_INSTANTIATE(Complex)
#undef SMCF_INSTANTIATE

}  // namespace smcf
