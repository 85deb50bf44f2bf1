#include "doctest.h"

#include <cmath>
#include <numbers>

#include "smcf/fixtures.hpp"
#include "smcf/reconstruction.hpp"

using namespace smcf;
using std::numbers::pi;

namespace {

constexpr Complex I(0.0, 1.0);

// Closed-form torus frame at radii (r1, r2), box scale r0.
Frame torus_frame(const GridPtr& g, double r1, double r2, double r0) {
  auto s = [&](auto fn) { return RealField::sample(g, fn); };
  Frame f;
  f.tangents.push_back({s([&](const Point& x) { return -r1 / r0 * std::sin(x[0] / r0); }),
                        s([&](const Point& x) { return r1 / r0 * std::cos(x[0] / r0); }), RealField(g), RealField(g)});
  f.tangents.push_back({RealField(g), RealField(g), s([&](const Point& x) { return -r2 / r0 * std::sin(x[1] / r0); }),
                        s([&](const Point& x) { return r2 / r0 * std::cos(x[1] / r0); })});
  auto c = [&](auto fn) { return ComplexField::sample(g, fn); };
  f.m = {c([&](const Point& x) { return Complex(std::cos(x[0] / r0)); }),
         c([&](const Point& x) { return Complex(std::sin(x[0] / r0)); }),
         c([&](const Point& x) { return I * std::cos(x[1] / r0); }),
         c([&](const Point& x) { return I * std::sin(x[1] / r0); })};
  return f;
}

double frame_gap(const Frame& a, const Frame& b) {
  double worst = 0.0;
  for (int k = 0; k < a.dim(); ++k)
    for (int i = 0; i < a.ambient_dim(); ++i) worst = std::max(worst, norm_linf(a.tangents[k][i] - b.tangents[k][i]));
  for (int i = 0; i < a.ambient_dim(); ++i) worst = std::max(worst, norm_linf(a.m[i] - b.m[i]));
  return worst;
}

struct Run {
  GeometricData data;
  Trajectory traj;
};

Run run(const GeometricData& d, double T, double dt) {
  EvolveOptions opt;
  opt.T = T;
  opt.dt = dt;
  return {d, picard_evolve(d.lambda, make_gauge_state(d.metric, d.A), opt)};
}

GeometricData torus_data(const CliffParams& p, int n = 16) {
  auto g = Grid::create(2, n, 2 * pi * p.r0);
  return geometric_data(cliff_immersion(g, p), cliff_frame(g, p));
}

GeometricData bump(int n, double L, double eps) {
  BumpParams bp;
  bp.epsilon = eps;
  auto g = Grid::create(2, n, L);
  auto F = bump_immersion(g, bp);
  return geometric_data(F, graph_frame(F, induced_metric(F)));
}

}  // namespace

TEST_CASE("frame invariants") {
  auto d = bump(64, 6 * pi, 0.05);
  auto f = make_frame(d.F, d.frame);
  auto def = frame_defects(f, d.metric.g);
  CHECK(def.orthogonality() < 1e-12);
  CHECK(def.metric < 1e-12);
  f.m[2].values() *= 1.01;
  CHECK(frame_defects(f, d.metric.g).normalization > 1e-3);
}

TEST_CASE("spatial frame integration") {
  SUBCASE("flat") {
    auto g = Grid::create(2, 16, 4.0);
    auto d = geometric_data(flat_immersion(g), flat_frame(g));
    auto out = integrate_frame_space(make_frame(d.F, d.frame), d.metric, d.lambda, d.A);
    CHECK(out.holonomy == 0.0);
    CHECK(frame_gap(out.frame, make_frame(d.F, d.frame)) == 0.0);
  }
  SUBCASE("torus") {
    for (CliffParams p : {CliffParams{1.0, 1.0, 1.0}, CliffParams{1.3, 0.7, 1.2}}) {
      auto d = torus_data(p);
      const Frame exact = torus_frame(d.metric.grid(), p.r1, p.r2, p.r0);
      // only the first slice of the seed is read
      Frame seed = exact;
      for (int i = 0; i < 4; ++i) seed.m[i].values().tail(16 * 15).setZero();
      auto out = integrate_frame_space(seed, d.metric, d.lambda, d.A);
      MESSAGE("substeps " << out.substeps << " holonomy " << out.holonomy << " gap " << frame_gap(out.frame, exact));
      CHECK(frame_gap(out.frame, exact) < 1e-8);
      CHECK(out.holonomy < 1e-10);
      CHECK(out.structure_residual < 1e-8);
    }
  }
  SUBCASE("bump") {
    auto d = bump(128, 6 * pi, 0.05);
    const Frame f = make_frame(d.F, d.frame);
    auto out = integrate_frame_space(f, d.metric, d.lambda, d.A);
    MESSAGE("substeps " << out.substeps << " holonomy " << out.holonomy << " gap " << frame_gap(out.frame, f)
                        << " structure " << out.structure_residual);
    CHECK(out.holonomy < 1e-8);
    CHECK(frame_gap(out.frame, f) < 1e-8);
  }
  SUBCASE("corrupted second form") {
    auto d = bump(64, 6 * pi, 0.05);
    auto lambda = d.lambda;
    const double L = 6 * pi;
    auto blip = RealField::sample(d.metric.grid(), [&](const Point& x) {
      const double r2 = std::pow(x[0] - 0.3 * L, 2) + std::pow(x[1] - 0.6 * L, 2);
      return 0.2 * std::exp(-r2);
    });
    lambda.lambda(0, 0) = lambda.lambda(0, 0) + to_complex(blip);
    CHECK_THROWS_AS(integrate_frame_space(make_frame(d.F, d.frame), d.metric, lambda, d.A), Error);
    try {
      integrate_frame_space(make_frame(d.F, d.frame), d.metric, lambda, d.A);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Integrability);
    }
  }
  SUBCASE("invalid seed") {
    auto d = bump(32, 6 * pi, 0.05);
    auto f = make_frame(d.F, d.frame);
    f.m[2].values() *= 1.1;
    try {
      integrate_frame_space(f, d.metric, d.lambda, d.A);
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::FrameNotNormal);
    }
  }
}

TEST_CASE("frame transport in time") {
  SUBCASE("static flat") {
    auto g = Grid::create(2, 16, 2 * pi);
    auto r = run(geometric_data(flat_immersion(g), flat_frame(g)), 0.03, 0.01);
    const Frame f0 = make_frame(r.data.F, r.data.frame);
    auto frames = transport_frames(f0, r.traj.points);
    REQUIRE(frames.size() == r.traj.points.size());
    for (const auto& f : frames) CHECK(frame_gap(f, f0) == 0.0);
  }
  SUBCASE("torus") {
    // radii r_i(t) = r_i(0) exp(+-t / (r1 r2)), normal frame fixed
    const CliffParams p{1.2, 0.9, 1.0};
    auto r = run(torus_data(p), 0.1, 0.001);
    auto frames = transport_frames(make_frame(r.data.F, r.data.frame), r.traj.points);
    const double P = p.r1 * p.r2;
    double worst = 0.0;
    for (std::size_t k = 0; k < frames.size(); ++k) {
      const double t = r.traj.points[k].t;
      auto exact = torus_frame(r.data.metric.grid(), p.r1 * std::exp(t / P), p.r2 * std::exp(-t / P), p.r0);
      worst = std::max(worst, frame_gap(frames[k], exact));
    }
    MESSAGE("torus frame error " << worst);
    CHECK(worst < 1e-6);
  }
  SUBCASE("single step matches the frozen-coefficient exponential") {
    // frozen bump state: RK4 error shrinks like dt^4
    auto d = bump(32, 6 * pi, 0.2);
    TrajectoryPoint p{0.0, d.lambda, make_gauge_state(d.metric, d.A)};
    p.gauge.B.values() += 0.7;  // gives the normal a phase velocity
    const Frame f0 = make_frame(d.F, d.frame);
    auto march = [&](double T, int steps) {
      Frame f = f0;
      for (int i = 0; i < steps; ++i) f = transport_frame_time(f, p, p, p, T / steps);
      return f;
    };
    const Frame ref = march(0.4, 256);
    const double e1 = frame_gap(march(0.4, 4), ref), e2 = frame_gap(march(0.4, 8), ref);
    MESSAGE("frozen transport errors " << e1 << " " << e2 << " ratio " << e1 / e2);
    CHECK(e1 / e2 > 12.0);
    CHECK(e1 / e2 < 20.0);
    // a pure phase: m -> exp(-i B t) m
    auto g = Grid::create(2, 16, 2 * pi);
    auto flat = geometric_data(flat_immersion(g), flat_frame(g));
    TrajectoryPoint q{0.0, flat.lambda, make_gauge_state(flat.metric, flat.A)};
    q.gauge.B = RealField::constant(g, 0.5);
    Frame f = make_frame(flat.F, flat.frame);
    for (int i = 0; i < 40; ++i) f = transport_frame_time(f, q, q, q, 0.025);
    const Complex phase = std::exp(-I * 0.5);
    double err = 0.0;
    for (int i = 0; i < 4; ++i) err = std::max(err, norm_linf(f.m[i] - phase * flat.frame.m()[i]));
    CHECK(err < 1e-9);
  }
  SUBCASE("drift is reported") {
    auto r = run(torus_data({1.2, 0.9, 1.0}), 0.02, 0.01);
    Frame bad = make_frame(r.data.F, r.data.frame);
    bad.m[0].values() *= 1.0 + 1e-4;
    try {
      transport_frames(bad, r.traj.points);
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::FrameDrift);
    }
  }
}

TEST_CASE("immersion reconstruction") {
  SUBCASE("flat stays put") {
    auto g = Grid::create(2, 16, 2 * pi);
    auto r = run(geometric_data(flat_immersion(g), flat_frame(g)), 0.03, 0.01);
    auto rec = reconstruct(r.data.F, r.data.frame, r.traj.points);
    for (const auto& F : rec.path.immersions)
      for (int i = 0; i < 4; ++i) CHECK(norm_linf(F.periodic[i] - r.data.F.periodic[i]) == 0.0);
    for (const auto& row : rec.rows) {
      CHECK(row.smcf.l2 == 0.0);
      CHECK(row.lambda_gap == 0.0);
      CHECK(row.metric_gap == 0.0);
    }
  }
  SUBCASE("torus radii") {
    const CliffParams p{1.2, 0.9, 1.0};
    auto r = run(torus_data(p), 0.2, 0.001);
    auto rec = reconstruct(r.data.F, r.data.frame, r.traj.points);
    const double P = p.r1 * p.r2;
    double worst = 0.0, smcf = 0.0, closure = 0.0;
    for (std::size_t k = 0; k < rec.path.immersions.size(); ++k) {
      const double t = rec.path.times[k];
      const auto& F = rec.path.immersions[k].periodic;
      const Eigen::ArrayXd r1 = (F[0].values().square() + F[1].values().square()).sqrt();
      const Eigen::ArrayXd r2 = (F[2].values().square() + F[3].values().square()).sqrt();
      worst = std::max(worst, (r1 - p.r1 * std::exp(t / P)).abs().maxCoeff());
      worst = std::max(worst, (r2 - p.r2 * std::exp(-t / P)).abs().maxCoeff());
      smcf = std::max(smcf, rec.rows[k].smcf.relative());
      closure = std::max({closure, rec.rows[k].lambda_gap, rec.rows[k].metric_gap});
    }
    MESSAGE("radius error " << worst << " smcf " << smcf << " closure " << closure);
    CHECK(worst < 1e-6);
    CHECK(smcf < 1e-5);
    CHECK(closure < 1e-6);
    CHECK(rec.initial_holonomy < 1e-10);
  }
  SUBCASE("bump round trip") {
    auto d = bump(64, 6 * pi, 0.05);
    const double dt = 0.005;
    auto r = run(d, 0.05, dt);
    auto rec = reconstruct(r.data.F, r.data.frame, r.traj.points);
    const double tail = truncation_level(d.lambda.lambda);
    const double bound = 10 * (dt * dt + tail);
    for (const auto& row : rec.rows) {
      CHECK(row.lambda_gap < bound);
      CHECK(row.metric_gap < bound);
      CHECK(row.smcf.relative() < bound);
      CHECK(row.consistency < 1e-4);
    }
    MESSAGE("bump end: lambda " << rec.rows.back().lambda_gap << " metric " << rec.rows.back().metric_gap << " smcf "
                                << rec.rows.back().smcf.relative() << " bound " << bound);
    const auto row = rec.rows.back().csv_row();
    CHECK(std::count(row.begin(), row.end(), ',') == 7);
  }
  SUBCASE("inconsistent path") {
    auto r = run(torus_data({1.2, 0.9, 1.0}), 0.02, 0.01);
    auto frames = transport_frames(make_frame(r.data.F, r.data.frame), r.traj.points);
    for (auto& c : frames.back().tangents[0]) c.values() *= 1.01;
    try {
      integrate_F(r.data.F, frames, r.traj.points);
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ReconstructionInconsistency);
    }
  }
}
