#pragma once

#include <array>

#include "smcf/geometry.hpp"

namespace smcf {

/// Product of two circles in R^4, d = 2:
/// F = (r1 cos(x/r0), r1 sin(x/r0), r2 cos(y/r0), r2 sin(y/r0)).
/// The box must hold an integer number of periods, L = 2 pi r0 k.
struct CliffParams {
  double r1 = 1.0;
  double r2 = 1.0;
  double r0 = 1.0;
};

/// Graph of two periodized Gaussians in box units,
/// u_j(y) = eps^{d/2 - 1 + delta} a_j exp(-|y - c_j|^2 / (2 w^2)),
/// with c_1 the box centre and c_2 = c_1 + offset.
struct BumpParams {
  double epsilon = 0.05;
  double delta = 0.5;
  double width = 1.0;
  std::array<double, 2> amplitude{1.0, 0.6};
  Point offset{0.7, -0.4, 0.3};

  double scale(int d) const;
  void validate(int d) const;
};

Immersion flat_immersion(const GridPtr& grid);
NormalFrame flat_frame(const GridPtr& grid);

Immersion cliff_immersion(const GridPtr& grid, const CliffParams& p);
/// nu1 = (cos, sin, 0, 0)(x/r0), nu2 = (0, 0, cos, sin)(y/r0).
NormalFrame cliff_frame(const GridPtr& grid, const CliffParams& p);

Immersion bump_immersion(const GridPtr& grid, const BumpParams& p);

/// Normal frame of a graph from the constant candidates e_{d}, e_{d+1}.
NormalFrame graph_frame(const Immersion& F, const MetricState& m);

/// Everything the geometric identities need, computed from (F, frame).
struct GeometricData {
  Immersion F;
  NormalFrame frame;
  MetricState metric;  // with Christoffel symbols and curvature
  SecondForm lambda;
  RealTensor A;
};

GeometricData geometric_data(const Immersion& F, const NormalFrame& frame);

}  // namespace smcf
