#include "doctest.h"

#include <cmath>
#include <numbers>

#include "smcf/constraints.hpp"
#include "smcf/fixtures.hpp"

using namespace smcf;
using std::numbers::pi;

namespace {

GeometricData bump_data(int n, double L, BumpParams p = {}) {
  auto grid = Grid::create(2, n, L);
  auto F = bump_immersion(grid, p);
  return geometric_data(F, graph_frame(F, induced_metric(F)));
}

TrajectoryPoint point_from(const GeometricData& d) {
  return {0.0, d.lambda, make_gauge_state(d.metric, d.A)};
}

Trajectory evolve(const GeometricData& d, double T, double dt, CurvatureSign sign = CurvatureSign::Plus) {
  EvolveOptions opt;
  opt.T = T;
  opt.dt = dt;
  opt.parabolic.sign = sign;
  return picard_evolve(d.lambda, make_gauge_state(d.metric, d.A), opt);
}

}  // namespace

TEST_CASE("difference stencil") {
  const std::vector<double> times{0.0, 0.1, 0.25, 0.3, 0.45};
  auto q = [](double t) { return 2.0 - 3.0 * t + 5.0 * t * t; };
  for (std::size_t k = 0; k < times.size(); ++k) {
    std::array<double, 3> w{};
    const auto idx = difference_stencil(times, k, w);
    double d = 0.0;
    for (int i = 0; i < 3; ++i) d += w[i] * q(times[idx[i]]);
    CHECK(d == doctest::Approx(-3.0 + 10.0 * times[k]).epsilon(1e-12));
    CHECK(idx[0] <= k);
    CHECK(k <= idx[2]);
  }
  std::array<double, 3> w{};
  CHECK_THROWS_AS(difference_stencil({0.0, 1.0}, 0, w), Error);
  CHECK_THROWS_AS(difference_stencil({0.0, 1.0, 1.0}, 1, w), Error);
}

TEST_CASE("static residuals") {
  SUBCASE("flat") {
    auto grid = Grid::create(2, 16, 2 * pi);
    auto d = geometric_data(flat_immersion(grid), flat_frame(grid));
    auto rep = check_constraints(point_from(d));
    for (int i = 0; i < 4; ++i) CHECK(rep.residuals[i].l2 == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(rep.truncation == 0.0);
    CHECK_FALSE(rep.has_time_derivatives);
  }
  SUBCASE("torus") {
    for (CliffParams p : {CliffParams{1.0, 1.0, 1.0}, CliffParams{1.3, 0.7, 1.0}}) {
      auto grid = Grid::create(2, 16, 2 * pi * p.r0);
      auto d = geometric_data(cliff_immersion(grid, p), cliff_frame(grid, p));
      auto rep = check_constraints(point_from(d));
      for (int i = 0; i < 4; ++i) CHECK_MESSAGE(rep.residuals[i].linf < 1e-11, ConstraintReport::kNames[i]);
      // the flat torus has zero curvature and a nonzero second form
      CHECK(rep.residuals[0].scale > 0.1);
    }
  }
  SUBCASE("bump converges with resolution") {
    std::array<double, 4> prev{};
    double prev_tail = 1.0;
    for (int n : {32, 64, 128}) {
      auto rep = check_constraints(point_from(bump_data(n, 6 * pi)));
      MESSAGE("n = " << n << " tail " << rep.truncation << " T1 " << rep.residuals[0].relative() << " T2 "
                     << rep.residuals[1].relative() << " T3 " << rep.residuals[2].relative() << " T4 "
                     << rep.residuals[3].relative());
      CHECK(rep.truncation < prev_tail);
      for (int i = 0; i < 4; ++i) {
        if (n > 32) CHECK_MESSAGE(rep.residuals[i].relative() < prev[i], ConstraintReport::kNames[i]);
        prev[i] = rep.residuals[i].relative();
      }
      prev_tail = rep.truncation;
    }
    for (int i = 0; i < 4; ++i) CHECK_MESSAGE(prev[i] < 1e-10, ConstraintReport::kNames[i]);
  }
}

TEST_CASE("residual structure") {
  auto d = bump_data(128, 6 * pi);
  SUBCASE("T3 is antisymmetric in its first pair") {
    auto r = residual_T3(d.metric, d.lambda, d.A);
    double worst = 0.0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 2; ++c) worst = std::max(worst, norm_linf(r.field(a, b, c) + r.field(b, a, c)));
    CHECK(worst == 0.0);
    CHECK(norm_linf(r.field(0, 0, 1)) == 0.0);
  }
  SUBCASE("gauge invariance") {
    auto grid = d.metric.grid();
    const double L = grid->box_length();
    auto theta = RealField::sample(grid, [&](const Point& x) {
      return 0.8 * std::sin(2 * pi * x[0] / L) + 0.5 * std::cos(4 * pi * x[1] / L + 0.3);
    });
    auto rot = gauge_rotate(d.lambda, d.A, d.frame.m(), theta);
    const TrajectoryPoint p0 = point_from(d);
    const TrajectoryPoint p1{0.0, rot.lambda, make_gauge_state(d.metric, rot.A)};
    const auto a = check_constraints(p0), b = check_constraints(p1);
    for (int i = 0; i < 4; ++i) {
      const double gap = std::abs(a.residuals[i].l2 - b.residuals[i].l2);
      CHECK_MESSAGE(gap <= 1e-9 * std::max(1.0, a.residuals[i].scale), ConstraintReport::kNames[i]);
    }
    // T3 rotates with lambda, |T3'| = |T3| pointwise up to truncation
    auto r0 = residual_T3(d.metric, d.lambda, d.A), r1 = residual_T3(d.metric, rot.lambda, rot.A);
    double worst = 0.0;
    for (std::size_t c = 0; c < r0.field.components().size(); ++c)
      worst = std::max(worst,
                       (r0.field.components()[c].values().abs() - r1.field.components()[c].values().abs())
                           .abs()
                           .maxCoeff());
    CHECK(worst < 1e-9);
  }
  SUBCASE("a wrong connection shows up in T3 and T4") {
    auto A = d.A;
    A(0).values() += 0.01;
    auto p = point_from(d);
    p.gauge = make_gauge_state(d.metric, A);
    auto rep = check_constraints(p);
    CHECK(rep.residuals[2].l2 > 1e-4);
    // a constant shift is curl free
    CHECK(rep.residuals[3].relative() < 1e-6);
    A(1) = A(1) + 0.01 * RealField::sample(d.metric.grid(), [&](const Point& x) {
             return std::sin(2 * pi * x[0] / d.metric.grid()->box_length());
           });
    p.gauge = make_gauge_state(d.metric, A);
    CHECK(check_constraints(p).residuals[3].l2 > 1e-4);
  }
  SUBCASE("csv") {
    auto rep = check_constraints(point_from(d));
    const auto header = ConstraintReport::csv_header();
    const auto row = rep.csv_row();
    CHECK(std::count(header.begin(), header.end(), ',') == 19);
    CHECK(std::count(row.begin(), row.end(), ',') == 19);
    CHECK(header.rfind("t,T1_l2", 0) == 0);
  }
}

TEST_CASE("time-derivative residuals") {
  SUBCASE("static flat") {
    auto grid = Grid::create(2, 16, 2 * pi);
    auto d = geometric_data(flat_immersion(grid), flat_frame(grid));
    auto traj = evolve(d, 0.03, 0.01);
    REQUIRE(traj.points.size() == 4);
    for (std::size_t k = 0; k < traj.points.size(); ++k) {
      auto rep = check_constraints(traj.points, k);
      CHECK(rep.has_time_derivatives);
      CHECK(rep.residuals[4].l2 == 0.0);
      CHECK(rep.residuals[5].l2 < 1e-12);
    }
  }
  SUBCASE("torus") {
    CliffParams p{1.2, 0.9, 1.0};
    auto grid = Grid::create(2, 16, 2 * pi);
    auto d = geometric_data(cliff_immersion(grid, p), cliff_frame(grid, p));
    auto traj = evolve(d, 0.05, 0.001);
    for (std::size_t k : {std::size_t{0}, std::size_t{25}, traj.points.size() - 1}) {
      auto rep = check_constraints(traj.points, k);
      MESSAGE("t = " << rep.t << " T5 " << rep.residuals[4].l2 << " metric " << rep.residuals[5].relative());
      // every term is spatially constant and only the metric moves; its
      // residual is the error of the three-point difference
      for (int i = 0; i < 5; ++i) CHECK_MESSAGE(rep.residuals[i].l2 < 1e-10, ConstraintReport::kNames[i]);
      CHECK(rep.residuals[5].relative() < 2 * traj.dt * traj.dt);
    }
  }
  SUBCASE("bump: second order in the step") {
    BumpParams bp;
    bp.epsilon = 0.1;
    auto d = bump_data(128, 6 * pi, bp);
    std::array<double, 2> t5{}, met{};
    const double T = 0.04;
    for (int j = 0; j < 2; ++j) {
      auto traj = evolve(d, T, 0.01 / (1 << j));
      auto rep = check_constraints(traj.points, traj.points.size() / 2);
      CHECK(rep.t == doctest::Approx(T / 2));
      t5[j] = rep.residuals[4].relative();
      met[j] = rep.residuals[5].relative();
      MESSAGE("dt " << traj.dt << " T5 " << t5[j] << " metric " << met[j] << " T4 " << rep.residuals[3].relative());
    }
    CHECK(t5[0] / t5[1] > 3.0);
    CHECK(t5[0] / t5[1] < 5.0);
    CHECK(met[0] / met[1] > 3.0);
    CHECK(met[0] / met[1] < 5.0);
  }
}

TEST_CASE("curvature sign") {
  // Only one sign keeps d_t A compatible with d B and the curvature.
  BumpParams bp;
  bp.epsilon = 0.1;
  auto d = bump_data(128, 6 * pi, bp);
  std::array<double, 2> t4{}, t5{};
  for (auto sign : {CurvatureSign::Plus, CurvatureSign::Minus}) {
    auto traj = evolve(d, 0.01, 0.0025, sign);
    const auto k = traj.points.size() - 1;
    auto rep = check_constraints(traj.points, k);
    const int j = sign == CurvatureSign::Plus ? 0 : 1;
    t4[j] = rep.residuals[3].relative();
    t5[j] = check_constraints(traj.points, 0).residuals[4].relative();
    MESSAGE(to_string(sign) << ": T4(T) " << t4[j] << " T5(0) " << t5[j]);
  }
  CHECK(t5[1] > 100 * t5[0]);
  CHECK(t4[1] > 100 * t4[0]);
}
