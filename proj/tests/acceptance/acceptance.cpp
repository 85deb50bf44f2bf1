// Acceptance suite: one PASS/FAIL line per criterion, measurements indented
// below it. `acceptance [N ...] [--out DIR]` runs a subset.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"
#include "smcf/calibration.hpp"
#include "smcf/harness.hpp"

using namespace smcf;
using std::numbers::pi;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::vector<std::string> lines;

  template <typename... Args>
  void note(const char* f, Args... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    lines.emplace_back(buf);
  }
  // records a pass/fail item with its measurement
  template <typename... Args>
  void expect(bool cond, const char* f, Args... args) {
    ok = ok && cond;
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    lines.push_back(std::string(cond ? "ok    " : "FAIL  ") + buf);
  }
};

fs::path g_out;

// ---------------------------------------------------------------------------
// shared BUMP runs (criteria 4, 5, 6, 7, 8)

struct BumpRun {
  RunConfig config;
  ExperimentResult result;
  double seconds = 0.0;
};

RunConfig bump_config(int n, double dt) {
  RunConfig c;
  c.scenario = ScenarioKind::Bump;
  c.points_per_axis = n;
  c.box_length_L = 6 * pi;
  c.bump_epsilon = 0.02;
  c.final_time_T = 0.25;
  c.time_step_T = dt;
  c.constraint_tolerance_rel = 1.0;  // judged below, not by the run gate
  c.snapshot_every_records = 0;
  c.output_dir = (g_out / ("bump_n" + std::to_string(n))).string();
  return c;
}

std::vector<BumpRun>& bump_runs() {
  static std::vector<BumpRun> runs = [] {
    std::vector<BumpRun> out;
    for (auto [n, dt] : {std::pair{64, 0.01}, std::pair{128, 0.005}}) {
      BumpRun r;
      r.config = bump_config(n, dt);
      const auto t0 = std::chrono::steady_clock::now();
      r.result = run_experiment(r.config);
      r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::printf("  (BUMP eps 0.02, n = %d, dt = %g, T = 0.25: %.1f s)\n", n, dt, r.seconds);
      std::fflush(stdout);
      out.push_back(std::move(r));
    }
    return out;
  }();
  return runs;
}

double max_truncation(const ExperimentResult& r) {
  double t = 0.0;
  for (const auto& c : r.constraints) t = std::max(t, c.truncation);
  return t;
}

// ---------------------------------------------------------------------------
// 1. geometry identities

ConstraintReport identity_report(const GridPtr& grid, ScenarioKind kind, const BumpParams& bp = {},
                                 const CliffParams& cp = {}) {
  GeometricData d;
  if (kind == ScenarioKind::Flat) {
    d = geometric_data(flat_immersion(grid), flat_frame(grid));
  } else if (kind == ScenarioKind::Cliff) {
    d = geometric_data(cliff_immersion(grid, cp), cliff_frame(grid, cp));
  } else {
    auto F = bump_immersion(grid, bp);
    d = geometric_data(F, graph_frame(F, induced_metric(F)));
  }
  return check_constraints(TrajectoryPoint{0.0, d.lambda, make_gauge_state(d.metric, d.A)});
}

Outcome criterion_1() {
  Outcome o;
  const char* names[4] = {"Ricci", "Gauss", "Codazzi", "Ricci-eq"};
  {
    auto grid = Grid::create(2, 64, 2 * pi);
    const auto flat = identity_report(grid, ScenarioKind::Flat);
    const auto cliff = identity_report(grid, ScenarioKind::Cliff, {}, CliffParams{1.2, 0.9, 1.0});
    for (int i = 0; i < 4; ++i) {
      o.expect(flat.residuals[i].linf <= 1e-10, "FLAT  %-8s max %.2e (<= 1e-10)", names[i], flat.residuals[i].linf);
      o.expect(cliff.residuals[i].linf <= 1e-10, "CLIFF %-8s max %.2e (<= 1e-10)", names[i],
               cliff.residuals[i].linf);
    }
  }
  // the default bump is resolved to roundoff in the curvature identities at
  // n = 64 already; the narrower profile is truncation limited there
  for (double width : {1.0, 0.7}) {
    BumpParams bp;
    bp.width = width;
    std::array<ConstraintReport, 2> rep;
    for (int k = 0; k < 2; ++k) rep[k] = identity_report(Grid::create(2, 64 << k, 6 * pi), ScenarioKind::Bump, bp);
    o.note("BUMP width %.1f: lambda tail %.2e -> %.2e", width, rep[0].truncation, rep[1].truncation);
    for (int i = 0; i < 4; ++i) {
      const double a = rep[0].residuals[i].relative(), b = rep[1].residuals[i].relative();
      const double orders = std::log10(a / std::max(b, 1e-300));
      const bool floor = a <= 1e-10 && b <= 1e-10;
      if (width == 1.0 && floor)
        o.expect(true, "BUMP width %.1f %-8s %.2e -> %.2e (at roundoff on both grids)", width, names[i], a, b);
      else
        o.expect(orders >= 4.0, "BUMP width %.1f %-8s %.2e -> %.2e, %.1f orders (>= 4)", width, names[i], a, b,
                 orders);
    }
  }
  return o;
}

// ---------------------------------------------------------------------------
// 2. CLIFF against the radii ODE

std::array<double, 2> radii_ode(double r1, double r2, double t) {
  // r1' = 1/r2, r2' = -1/r1 by RK4, independent of the flow code
  const int steps = std::max(1, static_cast<int>(std::ceil(t / 1e-4)));
  const double h = t / steps;
  auto f = [](double a, double b) { return std::array<double, 2>{1.0 / b, -1.0 / a}; };
  for (int s = 0; s < steps; ++s) {
    const auto k1 = f(r1, r2);
    const auto k2 = f(r1 + 0.5 * h * k1[0], r2 + 0.5 * h * k1[1]);
    const auto k3 = f(r1 + 0.5 * h * k2[0], r2 + 0.5 * h * k2[1]);
    const auto k4 = f(r1 + h * k3[0], r2 + h * k3[1]);
    r1 += h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
    r2 += h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
  }
  return {r1, r2};
}

Outcome criterion_2() {
  Outcome o;
  RunConfig c;
  c.scenario = ScenarioKind::Cliff;
  c.points_per_axis = 16;
  c.box_length_L = 2 * pi;
  c.cliff_r1_L = 1.2;
  c.cliff_r2_L = 0.9;
  c.cliff_r0_L = 1.0;
  c.final_time_T = 0.2;
  c.time_step_T = 1e-3;
  c.snapshot_every_records = 0;
  c.output_dir = (g_out / "cliff").string();
  const auto res = run_pipeline(c, {{Stage::Evolve, Stage::Reconstruct}, {}});
  const auto& path = res.reconstruction->path;
  double err_r = 0.0, err_p = 0.0, sources = 0.0;
  const double P = c.cliff_r1_L * c.cliff_r2_L;
  for (std::size_t k = 0; k < path.times.size(); ++k) {
    const auto oracle = radii_ode(c.cliff_r1_L, c.cliff_r2_L, path.times[k]);
    const auto pos = positions(path.immersions[k]);
    const Eigen::ArrayXd r1 = (pos[0].values().square() + pos[1].values().square()).sqrt();
    const Eigen::ArrayXd r2 = (pos[2].values().square() + pos[3].values().square()).sqrt();
    err_r = std::max({err_r, (r1 - oracle[0]).abs().maxCoeff(), (r2 - oracle[1]).abs().maxCoeff()});
    err_p = std::max(err_p, (r1 * r2 - P).abs().maxCoeff());
  }
  for (const auto& p : res.points)
    sources = std::max({sources, norm_linf(p.gauge.V), norm_linf(p.gauge.B), norm_linf(p.gauge.A)});
  o.note("%zu stored times on [0, %.2f], reconstructed radii vs RK4 of the radii ODE", path.times.size(),
         path.times.back());
  o.expect(sources <= 1e-10, "gauge sources V, B, A stay trivial: max %.2e", sources);
  o.expect(err_r <= 1e-5, "max |r_i - oracle| = %.2e (<= 1e-5)", err_r);
  o.expect(err_p <= 1e-6, "max |r1 r2 - r1(0) r2(0)| = %.2e (<= 1e-6)", err_p);
  return o;
}

// ---------------------------------------------------------------------------
// 3. scaling

Outcome criterion_3() {
  Outcome o;
  const double mu = 2.0;
  RunConfig c = bump_config(64, 0.005);
  c.final_time_T = 0.08;
  const auto s = generate_scenario(c);
  const auto direct = picard_evolve(s.lambda, s.initial_point().gauge, evolve_options(c));

  // F_mu(t, x) = F(mu^2 t, mu x) / mu on the box L / mu: lambda and A pick up mu
  auto small = Grid::create(2, c.points_per_axis, c.box_length_L / mu);
  auto moved = [&](const auto& t, auto factor) {
    std::decay_t<decltype(t)> out(small, t.rank());
    for (int i = 0; i < t.component_count(); ++i) out.components()[i].values() = t.components()[i].values() * factor;
    return out;
  };
  const auto g0 = s.initial_point().gauge;
  auto gauge_mu = make_gauge_state(moved(g0.metric.g, 1.0), moved(g0.A, mu));
  auto lambda_mu = make_second_form(moved(s.lambda.lambda, Complex(mu)), gauge_mu.metric);
  auto opt = evolve_options(c);
  opt.T /= mu * mu;
  opt.dt /= mu * mu;
  const auto scaled = picard_evolve(lambda_mu, gauge_mu, opt);

  auto rel = [](const auto& a, const auto& b, double factor) {
    double num = 0.0, den = 0.0;
    for (int i = 0; i < a.component_count(); ++i) {
      num += (a.components()[i].values() - b.components()[i].values() / factor).abs2().sum();
      den += a.components()[i].values().abs2().sum();
    }
    return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
  };
  double worst = 0.0, trunc = 0.0;
  const bool same_count = direct.points.size() == scaled.points.size();
  for (std::size_t k = 0; same_count && k < direct.points.size(); ++k) {
    const auto& a = direct.points[k];
    const auto& b = scaled.points[k];
    worst = std::max({worst, rel(a.lambda.lambda, b.lambda.lambda, mu), rel(a.gauge.metric.g, b.gauge.metric.g, 1.0),
                      rel(a.gauge.A, b.gauge.A, mu)});
    trunc = std::max(trunc, truncation_level(a.lambda.lambda));
  }
  const double bound = 5 * (c.time_step_T * c.time_step_T + trunc);
  o.note("mu = 2, box %.4g -> %.4g, dt %.3g -> %.3g, %zu stored times", c.box_length_L, c.box_length_L / mu,
         c.time_step_T, opt.dt, direct.points.size());
  o.expect(same_count && worst <= bound,
           "back-scaled mismatch (lambda, g, A; relative L2, all times) %.2e <= 5(dt^2 + tail) = %.2e", worst,
           bound);
  return o;
}

// ---------------------------------------------------------------------------
// 4. constraint propagation

Outcome criterion_4() {
  Outcome o;
  auto& runs = bump_runs();
  std::array<std::array<double, 5>, 2> bound{};
  for (int r = 0; r < 2; ++r) {
    const auto& res = runs[r].result;
    const double dt = runs[r].config.time_step_T;
    const double trunc = max_truncation(res);
    o.note("n = %d, dt = %g: %zu states, lambda tail <= %.2e", runs[r].config.points_per_axis, dt,
           res.constraints.size(), trunc);
    for (int i = 0; i < 5; ++i) {
      double worst = 0.0;
      for (const auto& rep : res.constraints) worst = std::max(worst, rep.residuals[i].relative());
      const double initial = res.constraints.front().residuals[i].relative();
      bound[r][i] = 10 * (initial + dt * dt + trunc);
      o.expect(worst <= bound[r][i], "  %s: initial %.2e, max %.2e <= %.2e", ConstraintReport::kNames[i], initial,
               worst, bound[r][i]);
    }
  }
  for (int i = 0; i < 5; ++i)
    o.expect(bound[0][i] >= 3 * bound[1][i], "%s bound tightens %.1fx (>= 3) with dt / 2 and 2n",
             ConstraintReport::kNames[i], bound[0][i] / bound[1][i]);
  return o;
}

// ---------------------------------------------------------------------------
// 5. reconstruction closure

Outcome criterion_5() {
  Outcome o;
  for (const auto& run : bump_runs()) {
    const auto& res = run.result;
    const double dt = run.config.time_step_T;
    const double bound = 10 * (dt * dt + max_truncation(res));
    double lam = 0.0, met = 0.0, flow = 0.0, orth = 0.0;
    for (const auto& row : res.reconstruction->rows) {
      lam = std::max(lam, row.lambda_gap);
      met = std::max(met, row.metric_gap);
      flow = std::max(flow, row.smcf.relative());
      orth = std::max(orth, row.orthogonality);
    }
    const int n = run.config.points_per_axis;
    o.note("n = %d, dt = %g: bound 10(dt^2 + tail) = %.2e, frame orthogonality drift %.2e, initial holonomy %.2e", n,
           dt, bound, orth, res.reconstruction->initial_holonomy);
    o.expect(lam <= bound, "  lambda -> F -> lambda gap %.2e", lam);
    o.expect(met <= bound, "  metric closure gap %.2e", met);
    o.expect(flow <= bound, "  (d_t F)^perp - J H relative %.2e", flow);
  }
  return o;
}

// ---------------------------------------------------------------------------
// 6. small-data stability

Outcome criterion_6() {
  Outcome o;
  for (const auto& run : bump_runs()) {
    const auto& d = run.result.diagnostics;
    double worst = 0.0;
    for (const auto& row : d) worst = std::max(worst, row.lambda_hs);
    o.expect(worst <= 2 * d.front().lambda_hs, "n = %d: max_t |lambda|_H2 = %.4e, 2 |lambda_0|_H2 = %.4e",
             run.config.points_per_axis, worst, 2 * d.front().lambda_hs);
  }
  RunConfig c = bump_config(64, 0.01);
  c.coupling = CouplingMode::SlabPicard;
  c.picard_sweeps = 4;
  const auto s = generate_scenario(c);
  const auto traj = picard_evolve(s.lambda, s.initial_point().gauge, evolve_options(c));
  const auto& dist = traj.sweep_distances;
  o.expect(dist.size() == 4, "slab Picard ran %zu sweeps over [0, 0.25]", dist.size());
  for (std::size_t k = 1; k < dist.size(); ++k)
    o.expect(dist[k] <= 0.5 * dist[k - 1], "sweep %zu: distance %.3e, factor %.2e (<= 0.5)", k + 1, dist[k],
             dist[k] / dist[k - 1]);
  return o;
}

// ---------------------------------------------------------------------------
// 7. norms and envelopes

ComplexField band_limited(const GridPtr& g, std::uint64_t seed, double kmax) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  Eigen::ArrayXcd c(g->size());
  for (Index i = 0; i < g->size(); ++i)
    c[i] = g->wavenumber_norm()[i] <= kmax ? Complex(n01(rng), n01(rng)) : Complex(0);
  return synthesize<Complex>({g, c});
}

RealField smooth_random(const GridPtr& g, std::uint64_t seed, double kscale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  Eigen::ArrayXcd c(g->size());
  for (Index i = 0; i < g->size(); ++i) {
    const double k = g->wavenumber_norm()[i];
    c[i] = std::exp(-0.5 * (k / kscale) * (k / kscale)) * Complex(n01(rng), n01(rng));
  }
  return real(synthesize<Complex>({g, c}));
}

Outcome criterion_7() {
  Outcome o;
  {
    // Parseval against a direct sum over the grid
    auto g = Grid::create(2, 32, 5.0);
    auto f = band_limited(g, 5, 12.0);
    const auto spec = transform(f);
    const double direct = std::sqrt(f.values().abs2().sum() * g->cell_volume());
    const double parseval = std::sqrt(std::pow(g->box_length(), 2) * spec.coefficients.abs2().sum());
    o.expect(std::abs(direct - parseval) <= 1e-12 * direct, "Parseval: |f|_2 %.15g vs %.15g", direct, parseval);
  }
  {
    auto g = Grid::create(2, 64, 16.0);
    auto f = smooth_random(g, 12, 1.0);
    double worst = 0.0;
    for (double a : {-0.3, 2.5}) {
      worst = std::max(worst, std::abs(sobolev_norm(RealField(a * f), 2.0) / (std::abs(a) * sobolev_norm(f, 2.0)) - 1));
      worst = std::max(worst,
                       std::abs(y0_norm_upper(RealField(a * f), 2.0, 0.5) / (std::abs(a) * y0_norm_upper(f, 2.0, 0.5)) - 1));
      worst = std::max(worst,
                       std::abs(y0_lo_norm_upper(RealField(a * f), 0.5) / (std::abs(a) * y0_lo_norm_upper(f, 0.5)) - 1));
    }
    o.expect(worst <= 1e-12, "homogeneity of H^s, Y0, Y0lo: relative defect %.1e", worst);
  }
  {
    // slow variation and domination, on lambda_0 of the BUMP run and a random field
    const auto& run = bump_runs()[0];
    auto g = Grid::create(2, 64, 16 * pi);
    const EnvelopeParams p{2.0, 0.5};
    std::vector<std::pair<const char*, Envelope>> envs{{"BUMP lambda_0", run.result.norms->envelope},
                                                      {"random", frequency_envelope(smooth_random(g, 77, 3.0), p)}};
    for (const auto& [name, env] : envs) {
      double worst = 0.0;
      const int J = static_cast<int>(env.values.size());
      for (int j = 0; j < J; ++j)
        for (int k = 0; k < J; ++k)
          if (env.values[k] > 0)
            worst = std::max(worst, env.values[j] / (std::pow(2.0, p.delta * std::abs(j - k)) * env.values[k]));
      o.expect(worst <= 1 + 1e-12, "envelope slow variation (%s): max c_j / (2^{delta|j-k|} c_k) = %.6f", name,
               worst);
    }
    auto f = smooth_random(g, 77, 3.0);
    const auto env = envs[1].second;
    double dom = 0.0;
    for (int j = 0; j < static_cast<int>(env.values.size()); ++j)
      dom = std::max(dom, sobolev_norm(lp_project(f, j, ProjectorKind::S), p.s) / env.values[j]);
    o.expect(dom <= 1 + 1e-12, "envelope dominates the blocks: max |S_j f|_H2 / c_j = %.6f", dom);
  }
  {
    auto g = Grid::create(2, 128, 32 * pi);
    double worst = 0.0;
    for (int k = 0; k <= 2; ++k) {
      for (std::uint64_t seed = 0; seed < 4; ++seed) {
        auto f = lp_project(band_limited(g, 1000 + seed + 10 * k, std::ldexp(2.0, k)), k, ProjectorKind::P);
        worst = std::max(worst, norm_linf(f) / (std::ldexp(1.0, k) * norm_l2(f)));
      }
      auto delta = RealField(g);
      delta[g->size() / 2 + 64] = 1.0;
      auto pk = lp_project(delta, k, ProjectorKind::P);
      worst = std::max(worst, norm_linf(pk) / (std::ldexp(1.0, k) * norm_l2(pk)));
    }
    o.expect(worst <= calibration::kBernsteinConstant, "Bernstein ratio %.4f <= frozen %.2f", worst,
             calibration::kBernsteinConstant);
  }
  {
    auto g = Grid::create(2, 64, 16.0);
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
      auto f = smooth_random(g, 200 + seed, 0.5 + 0.5 * seed);
      auto h = smooth_random(g, 300 + seed, 0.25 + 0.5 * seed);
      worst = std::max(worst, y0_lo_norm_upper(RealField(f * h), 0.5) /
                                  (y0_lo_norm_upper(f, 0.5) * y0_lo_norm_upper(h, 0.5)));
    }
    o.expect(worst <= calibration::kY0LoAlgebraConstant, "Y0lo algebra ratio %.4f <= frozen %.2f", worst,
             calibration::kY0LoAlgebraConstant);
  }
  {
    std::ifstream in(bump_runs()[0].result.dir / "manifest.json");
    const auto m = nlohmann::json::parse(in);
    bool all = true;
    for (const auto& [k, v] : calibration::kAll)
      all = all && m["calibration"].contains(std::string(k)) && m["calibration"][std::string(k)].get<double>() == v;
    o.expect(all, "manifest records all %zu frozen calibration constants", std::size(calibration::kAll));
  }
  return o;
}

// ---------------------------------------------------------------------------
// 8. gauge audits

Outcome criterion_8() {
  Outcome o;
  for (const auto& run : bump_runs()) {
    const auto& res = run.result;
    const int n = run.config.points_per_axis;
    const double div = norm_l2(divergence(res.scenario.A, res.scenario.metric));
    double sources = 0.0;
    for (const auto& d : res.diagnostics) sources = std::max(sources, d.source_defect);
    if (n == 128)
      o.expect(div <= 1e-9, "n = %d: Coulomb |nabla^a A_a|_2 at t = 0: %.2e (<= 1e-9)", n, div);
    else
      o.note("n = %d: Coulomb |nabla^a A_a|_2 at t = 0: %.2e (resolution floor, not judged)", n, div);
    o.expect(sources <= 1e-10, "n = %d: max over %zu states of |V - g^ab Gamma|, |B - div A|: %.2e (<= 1e-10)", n,
             res.diagnostics.size(), sources);
  }
  // sign of the curvature term in the connection equation
  BumpParams bp;
  bp.epsilon = 0.1;
  auto grid = Grid::create(2, 128, 6 * pi);
  auto F = bump_immersion(grid, bp);
  auto d = geometric_data(F, graph_frame(F, induced_metric(F)));
  std::array<double, 2> t4{}, t5{};
  for (auto sign : {CurvatureSign::Plus, CurvatureSign::Minus}) {
    EvolveOptions opt;
    opt.T = 0.01;
    opt.dt = 0.0025;
    opt.parabolic.sign = sign;
    auto traj = picard_evolve(d.lambda, make_gauge_state(d.metric, d.A), opt);
    const int j = sign == CurvatureSign::Plus ? 0 : 1;
    t4[j] = check_constraints(traj.points, traj.points.size() - 1).residuals[3].relative();
    t5[j] = check_constraints(traj.points, 0).residuals[4].relative();
    o.note("sign %-5s: T4(T) %.2e, T5(0) %.2e", to_string(sign).c_str(), t4[j], t5[j]);
  }
  const bool plus_wins = t4[1] >= 100 * t4[0] && t5[1] >= 100 * t5[0];
  o.expect(plus_wins, "T4 separates the variants by %.0fx; winning sign: plus", t4[1] / t4[0]);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  g_out = fs::temp_directory_path() / "smcf_acceptance";
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--out" && i + 1 < argc) g_out = argv[++i];
    else only.insert(std::atoi(a.c_str()));
  }
  fs::create_directories(g_out);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"geometry identity suite", criterion_1},
      {"CLIFF radii ODE oracle", criterion_2},
      {"scaling invariance", criterion_3},
      {"constraint propagation", criterion_4},
      {"reconstruction closure", criterion_5},
      {"small-data stability", criterion_6},
      {"norm and envelope suite", criterion_7},
      {"gauge audits", criterion_8},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o.ok = false;
      o.lines.push_back(std::string("error: ") + e.what());
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %d %s: %s (%.1f s)\n", id, o.ok ? "PASS" : "FAIL", criteria[k].first, sec);
    for (const auto& l : o.lines) std::printf("    %s\n", l.c_str());
    std::fflush(stdout);
    failures += o.ok ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
