#include "smcf/fixtures.hpp"

#include <cmath>
#include <numbers>

namespace smcf {

double BumpParams::scale(int d) const { return std::pow(epsilon, 0.5 * d - 1.0 + delta); }

void BumpParams::validate(int) const {
  require(epsilon > 0.0 && epsilon <= 1.0, ErrorCode::InvalidArgument, "bump epsilon must lie in (0, 1]");
  require(delta > 0.0 && delta <= 1.0, ErrorCode::InvalidArgument, "bump delta must lie in (0, 1]");
  require(width > 0.0, ErrorCode::InvalidArgument, "bump width must be positive");
}

Immersion flat_immersion(const GridPtr& grid) {
  RealField zero(grid);
  return graph_immersion(zero, zero);
}

NormalFrame flat_frame(const GridPtr& grid) {
  const int d = grid->dim();
  NormalFrame f;
  f.nu1.assign(d + 2, RealField(grid));
  f.nu2.assign(d + 2, RealField(grid));
  f.nu1[d] = RealField::constant(grid, 1.0);
  f.nu2[d + 1] = RealField::constant(grid, 1.0);
  return f;
}

namespace {

void check_cliff(const GridPtr& grid, const CliffParams& p) {
  require(grid->dim() == 2, ErrorCode::InvalidArgument, "the torus fixture needs d = 2");
  require(p.r1 > 0 && p.r2 > 0 && p.r0 > 0, ErrorCode::InvalidArgument, "radii must be positive");
  const double periods = grid->box_length() / (2 * std::numbers::pi * p.r0);
  require(std::abs(periods - std::round(periods)) < 1e-12 && std::round(periods) >= 1,
          ErrorCode::InvalidArgument, "box length must be a multiple of 2 pi r0");
}

}  // namespace

Immersion cliff_immersion(const GridPtr& grid, const CliffParams& p) {
  check_cliff(grid, p);
  Immersion F;
  F.linear = Eigen::MatrixXd::Zero(4, 2);
  const auto& x = grid->coordinate(0);
  const auto& y = grid->coordinate(1);
  F.periodic = {RealField(grid, p.r1 * (x / p.r0).cos()), RealField(grid, p.r1 * (x / p.r0).sin()),
                RealField(grid, p.r2 * (y / p.r0).cos()), RealField(grid, p.r2 * (y / p.r0).sin())};
  return F;
}

NormalFrame cliff_frame(const GridPtr& grid, const CliffParams& p) {
  check_cliff(grid, p);
  const auto& x = grid->coordinate(0);
  const auto& y = grid->coordinate(1);
  RealField zero(grid);
  NormalFrame f;
  f.nu1 = {RealField(grid, (x / p.r0).cos()), RealField(grid, (x / p.r0).sin()), zero, zero};
  f.nu2 = {zero, zero, RealField(grid, (y / p.r0).cos()), RealField(grid, (y / p.r0).sin())};
  return f;
}

Immersion bump_immersion(const GridPtr& grid, const BumpParams& p) {
  const int d = grid->dim();
  p.validate(d);
  const double L = grid->box_length();
  const double amp = p.scale(d);
  auto gaussian = [&](double a, const Point& shift) {
    return RealField::sample(grid, [&](const Point& x) {
      double r2 = 0.0;
      for (int k = 0; k < d; ++k) {
        double dx = std::remainder(x[k] - 0.5 * L - shift[k], L);
        r2 += dx * dx;
      }
      return amp * a * std::exp(-r2 / (2 * p.width * p.width));
    });
  };
  return graph_immersion(gaussian(p.amplitude[0], Point{0, 0, 0}), gaussian(p.amplitude[1], p.offset));
}

NormalFrame graph_frame(const Immersion& F, const MetricState& m) {
  const auto tangents = tangent_vectors(F);
  const auto e = flat_frame(F.grid());
  return orthonormalize_normal(e.nu1, e.nu2, tangents, m);
}

GeometricData geometric_data(const Immersion& F, const NormalFrame& frame) {
  GeometricData out;
  out.F = F;
  out.frame = frame;
  out.metric = induced_metric(F);
  christoffel(out.metric);
  curvature(out.metric);
  out.lambda = second_form(F, frame, out.metric);
  out.A = connection_from_frame(frame);
  return out;
}

}  // namespace smcf
