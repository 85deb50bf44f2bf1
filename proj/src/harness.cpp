#include "smcf/harness.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <variant>

#include "json.hpp"
#include "smcf/calibration.hpp"

namespace smcf {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv(std::initializer_list<double> values) {
  std::string row;
  for (double v : values) {
    if (!row.empty()) row += ',';
    row += fmt(v);
  }
  return row;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

using FieldRef =
    std::variant<ScenarioKind*, CouplingMode*, CurvatureSign*, int*, unsigned long long*, double*, std::string*>;

std::vector<std::pair<const char*, FieldRef>> fields(RunConfig& c) {
  return {
      {"scenario", &c.scenario},
      {"dimension", &c.dimension},
      {"points_per_axis", &c.points_per_axis},
      {"box_length_L", &c.box_length_L},
      {"cliff_r1_L", &c.cliff_r1_L},
      {"cliff_r2_L", &c.cliff_r2_L},
      {"cliff_r0_L", &c.cliff_r0_L},
      {"bump_epsilon", &c.bump_epsilon},
      {"bump_delta", &c.bump_delta},
      {"bump_width_L", &c.bump_width_L},
      {"bump_amplitude_1", &c.bump_amplitude_1},
      {"bump_amplitude_2", &c.bump_amplitude_2},
      {"bump_offset_x_L", &c.bump_offset_x_L},
      {"bump_offset_y_L", &c.bump_offset_y_L},
      {"bump_noise_amplitude", &c.bump_noise_amplitude},
      {"bump_noise_modes", &c.bump_noise_modes},
      {"gauge_tolerance", &c.gauge_tolerance},
      {"gauge_max_iterations", &c.gauge_max_iterations},
      {"smallness_threshold", &c.smallness_threshold},
      {"final_time_T", &c.final_time_T},
      {"time_step_T", &c.time_step_T},
      {"coupling", &c.coupling},
      {"picard_sweeps", &c.picard_sweeps},
      {"picard_tolerance", &c.picard_tolerance},
      {"curvature_sign", &c.curvature_sign},
      {"min_metric_eigenvalue", &c.min_metric_eigenvalue},
      {"envelope_s", &c.envelope_s},
      {"envelope_delta", &c.envelope_delta},
      {"constraint_tolerance_rel", &c.constraint_tolerance_rel},
      {"holonomy_tolerance", &c.holonomy_tolerance},
      {"frame_drift_tolerance", &c.frame_drift_tolerance},
      {"consistency_tolerance", &c.consistency_tolerance},
      {"record_every_steps", &c.record_every_steps},
      {"snapshot_every_records", &c.snapshot_every_records},
      {"output_dir", &c.output_dir},
      {"seed", &c.seed},
  };
}

template <typename T>
T parse_integer(const std::string& key, const std::string& v) {
  T out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  require(ec == std::errc() && p == v.data() + v.size(), ErrorCode::InvalidArgument,
          "config key " + key + ": not an integer: '" + v + "'");
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double out = std::strtod(v.c_str(), &end);
  require(!v.empty() && end == v.c_str() + v.size() && std::isfinite(out), ErrorCode::InvalidArgument,
          "config key " + key + ": not a finite number: '" + v + "'");
  return out;
}

void assign(const std::string& key, const FieldRef& ref, const std::string& v) {
  std::visit(
      [&](auto* p) {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ScenarioKind>) *p = parse_scenario_kind(v);
        else if constexpr (std::is_same_v<T, CouplingMode>) *p = parse_coupling_mode(v);
        else if constexpr (std::is_same_v<T, CurvatureSign>) *p = parse_curvature_sign(v);
        else if constexpr (std::is_same_v<T, double>) *p = parse_double(key, v);
        else if constexpr (std::is_same_v<T, std::string>) *p = v;
        else *p = parse_integer<T>(key, v);
      },
      ref);
}

std::string render(const FieldRef& ref) {
  return std::visit(
      [](auto* p) -> std::string {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, double>) return fmt(*p);
        else if constexpr (std::is_same_v<T, std::string>) return *p;
        else if constexpr (std::is_integral_v<T>) return std::to_string(*p);
        else return to_string(*p);
      },
      ref);
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

ScenarioKind parse_scenario_kind(std::string_view s) {
  if (s == "flat") return ScenarioKind::Flat;
  if (s == "cliff") return ScenarioKind::Cliff;
  if (s == "bump") return ScenarioKind::Bump;
  fail(ErrorCode::InvalidArgument, "unknown scenario '" + std::string(s) + "' (flat, cliff, bump)");
}

std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::Flat: return "flat";
    case ScenarioKind::Cliff: return "cliff";
    case ScenarioKind::Bump: return "bump";
  }
  return "unknown";
}

std::vector<std::pair<std::string, std::string>> RunConfig::entries() const {
  RunConfig copy = *this;
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [key, ref] : fields(copy)) out.emplace_back(key, render(ref));
  return out;
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& [k, v] : entries()) out += k + " = " + v + "\n";
  return out;
}

void RunConfig::set(std::string_view key, std::string_view value) {
  auto table = fields(*this);
  const auto it = std::find_if(table.begin(), table.end(), [&](const auto& f) { return key == f.first; });
  require(it != table.end(), ErrorCode::InvalidArgument, "unknown config key '" + std::string(key) + "'");
  assign(std::string(key), it->second, trim(value));
}

RunConfig RunConfig::parse(std::string_view text) {
  RunConfig c;
  std::vector<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  for (int no = 1; std::getline(in, line); ++no) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = "config line " + std::to_string(no) + ": ";
    require(eq != std::string::npos, ErrorCode::InvalidArgument, where + "expected key = value");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    require(std::find(seen.begin(), seen.end(), key) == seen.end(), ErrorCode::InvalidArgument,
            where + "duplicate key '" + key + "'");
    seen.push_back(key);
    try {
      c.set(key, std::string_view(body).substr(eq + 1));
    } catch (const Error& e) {
      throw Error(e.code(), where + e.message());
    }
  }
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void RunConfig::save(const fs::path& path) const {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot write config " + path.string());
  out << to_text();
}

void RunConfig::validate() const {
  auto check = [](bool ok, const std::string& msg) { require(ok, ErrorCode::InvalidArgument, msg); };
  check(dimension == 2, "dimension: only d = 2 scenarios are implemented");
  check(points_per_axis >= 8 && is_power_of_two(points_per_axis), "points_per_axis must be a power of two >= 8");
  check(box_length_L > 0.0, "box_length_L must be positive");
  if (scenario == ScenarioKind::Cliff) {
    check(cliff_r1_L > 0.0 && cliff_r2_L > 0.0 && cliff_r0_L > 0.0, "cliff radii must be positive");
    const double periods = box_length_L / (2 * std::numbers::pi * cliff_r0_L);
    check(periods >= 0.5 && std::abs(periods - std::round(periods)) <= 1e-12 * periods,
          "box_length_L must be a multiple of 2 pi cliff_r0_L");
  }
  if (scenario == ScenarioKind::Bump) {
    bump_params(*this).validate(dimension);
    check(bump_noise_amplitude >= 0.0, "bump_noise_amplitude must be >= 0");
    check(bump_noise_modes >= 1 && bump_noise_modes < points_per_axis / 3, "bump_noise_modes out of range");
  }
  check(gauge_tolerance > 0.0 && gauge_max_iterations >= 1, "gauge solver settings out of range");
  check(smallness_threshold > 0.0, "smallness_threshold must be positive");
  check(final_time_T > 0.0, "final_time_T must be positive");
  check(time_step_T > 0.0 && time_step_T <= final_time_T, "time_step_T must lie in (0, final_time_T]");
  check(picard_sweeps >= 1 && picard_tolerance >= 0.0, "picard settings out of range");
  check(min_metric_eigenvalue > 0.0 && min_metric_eigenvalue < 1.0, "min_metric_eigenvalue must lie in (0, 1)");
  envelope_params(*this).validate(dimension);
  check(constraint_tolerance_rel > 0.0 && holonomy_tolerance > 0.0 && frame_drift_tolerance > 0.0 &&
            consistency_tolerance > 0.0,
        "tolerances must be positive");
  check(record_every_steps >= 1, "record_every_steps must be >= 1");
  check(snapshot_every_records >= 0, "snapshot_every_records must be >= 0");
  check(!output_dir.empty(), "output_dir must not be empty");
}

GridPtr make_grid(const RunConfig& c) { return Grid::create(c.dimension, c.points_per_axis, c.box_length_L); }

BumpParams bump_params(const RunConfig& c) {
  BumpParams p;
  p.epsilon = c.bump_epsilon;
  p.delta = c.bump_delta;
  p.width = c.bump_width_L;
  p.amplitude = {c.bump_amplitude_1, c.bump_amplitude_2};
  p.offset = Point{c.bump_offset_x_L, c.bump_offset_y_L, 0.0};
  return p;
}

CliffParams cliff_params(const RunConfig& c) { return {c.cliff_r1_L, c.cliff_r2_L, c.cliff_r0_L}; }

GaugeInitOptions gauge_options(const RunConfig& c) {
  GaugeInitOptions o;
  o.harmonic = {c.gauge_tolerance, c.gauge_max_iterations};
  o.coulomb = {c.gauge_tolerance, c.gauge_max_iterations};
  o.smallness_threshold = c.smallness_threshold;
  o.delta = c.bump_delta;
  return o;
}

EvolveOptions evolve_options(const RunConfig& c) {
  EvolveOptions o;
  o.T = c.final_time_T;
  o.dt = c.time_step_T;
  o.mode = c.coupling;
  o.sweeps = c.picard_sweeps;
  o.tol = c.picard_tolerance;
  o.record_every = c.record_every_steps;
  o.parabolic.sign = c.curvature_sign;
  o.parabolic.min_eigenvalue = c.min_metric_eigenvalue;
  return o;
}

ReconstructionOptions reconstruction_options(const RunConfig& c) {
  ReconstructionOptions o;
  o.transport.drift_tolerance = c.frame_drift_tolerance;
  o.space.holonomy_tolerance = c.holonomy_tolerance;
  o.consistency_tolerance = c.consistency_tolerance;
  return o;
}

EnvelopeParams envelope_params(const RunConfig& c) { return {c.envelope_s, c.envelope_delta}; }

TrajectoryPoint Scenario::initial_point() const { return {0.0, lambda, make_gauge_state(metric, A)}; }

namespace {

// sum over 0 < |k|_inf <= K of a_k cos(k.x) + b_k sin(k.x), unit rms
RealField seeded_noise(const GridPtr& grid, int K, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  const double w = 2 * std::numbers::pi / grid->box_length();
  RealField out(grid);
  double power = 0.0;
  for (int k0 = -K; k0 <= K; ++k0)
    for (int k1 = 0; k1 <= K; ++k1) {
      if (k1 == 0 && k0 <= 0) continue;  // one of each +-k pair
      const double a = normal(rng), b = normal(rng);
      power += 0.5 * (a * a + b * b);
      out = out + RealField::sample(grid, [&](const Point& x) {
              const double ph = w * (k0 * x[0] + k1 * x[1]);
              return a * std::cos(ph) + b * std::sin(ph);
            });
    }
  out.values() /= std::sqrt(power);
  return out;
}

void closed_form_report(Scenario& s) {
  auto& r = s.report;
  r.harmonic_residual_before = r.harmonic_residual_after = harmonic_residual(s.metric);
  r.divergence_residual = norm_l2(divergence(s.A, s.metric));
  r.frame_defect = frame_normality_defect(s.frame, tangent_vectors(s.F));
  r.elliptic_h_residual = check_elliptic_h(s.metric, s.lambda).l2;
  r.curl_residual = norm_l2(curl(s.A) - normal_curvature(s.lambda, s.metric));
}

}  // namespace

Scenario generate_scenario(const RunConfig& c) {
  c.validate();
  Scenario s;
  s.kind = c.scenario;
  s.grid = make_grid(c);
  if (c.scenario == ScenarioKind::Bump) {
    Immersion F = bump_immersion(s.grid, bump_params(c));
    if (c.bump_noise_amplitude > 0.0) {
      std::mt19937_64 rng(c.seed);
      const double amp = c.bump_noise_amplitude * bump_params(c).scale(c.dimension);
      for (int j = 0; j < 2; ++j)
        F.periodic[c.dimension + j] = F.periodic[c.dimension + j] + amp * seeded_noise(s.grid, c.bump_noise_modes, rng);
    }
    auto g = gauge_initial_data(F, gauge_options(c));
    s.F = std::move(g.F);
    s.frame = std::move(g.frame);
    s.metric = std::move(g.metric);
    s.lambda = std::move(g.lambda);
    s.A = std::move(g.A);
    s.report = std::move(g.report);
    s.gauged = true;
    return s;
  }
  const bool flat = c.scenario == ScenarioKind::Flat;
  auto d = flat ? geometric_data(flat_immersion(s.grid), flat_frame(s.grid))
                : geometric_data(cliff_immersion(s.grid, cliff_params(c)), cliff_frame(s.grid, cliff_params(c)));
  s.F = std::move(d.F);
  s.frame = std::move(d.frame);
  s.metric = std::move(d.metric);
  s.lambda = std::move(d.lambda);
  s.A = std::move(d.A);
  closed_form_report(s);
  return s;
}

std::string DiagnosticsRow::csv_header() {
  return "t,lambda_l2,lambda_hs,psi_linf,h_linf,A_l2,min_eigenvalue,source_defect,symmetry_defect,truncation";
}

std::string DiagnosticsRow::csv_row() const {
  return csv({t, lambda_l2, lambda_hs, psi_linf, h_linf, A_l2, min_eigenvalue, source_defect, symmetry_defect,
              truncation});
}

DiagnosticsRow diagnostics(const TrajectoryPoint& p, double s) {
  DiagnosticsRow r;
  r.t = p.t;
  r.lambda_l2 = norm_l2(p.lambda.lambda);
  double hs2 = 0.0;
  for (const auto& c : p.lambda.lambda.components()) hs2 += std::pow(sobolev_norm(c, s), 2);
  r.lambda_hs = std::sqrt(hs2);
  r.psi_linf = norm_linf(p.lambda.psi);
  r.h_linf = norm_linf(p.gauge.metric.h);
  r.A_l2 = norm_l2(p.gauge.A);
  r.min_eigenvalue = min_metric_eigenvalue(p.gauge.metric);
  r.source_defect = gauge_source_defect(p.gauge);
  r.symmetry_defect = symmetry_defect(p.lambda.lambda);
  r.truncation = truncation_level(p.lambda.lambda);
  return r;
}

std::string NormsRow::csv_header() { return "component,l2,hs,y0,y0_lo"; }

std::string NormsRow::csv_row() const { return component + "," + csv({l2, hs, y0, y0_lo}); }

NormsReport lambda_norms(const SecondForm& lambda, const EnvelopeParams& p) {
  p.validate(lambda.lambda.dim());
  NormsReport rep;
  const ComplexField* largest = nullptr;
  double best = -1.0;
  auto add = [&](const std::string& name, const ComplexField& f) {
    rep.rows.push_back({name, norm_l2(f), sobolev_norm(f, p.s), y0_norm_upper(f, p.s, p.delta),
                        y0_lo_norm_upper(f, p.delta)});
    if (rep.rows.back().hs > best) {
      best = rep.rows.back().hs;
      largest = &f;
    }
  };
  const int d = lambda.lambda.dim();
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b) add("lambda_" + std::to_string(a) + std::to_string(b), lambda.lambda(a, b));
  add("psi", lambda.psi);
  rep.envelope = frequency_envelope(*largest, p);
  return rep;
}

std::string HeatGaugeRow::csv_header() { return "t,h_linf,A_l2,B_l2,V_l2,source_defect,min_eigenvalue"; }

std::string HeatGaugeRow::csv_row() const { return csv({t, h_linf, A_l2, B_l2, V_l2, source_defect, min_eigenvalue}); }

std::vector<HeatGaugeRow> frozen_heat_gauge(const Scenario& s, const RunConfig& c) {
  const auto opt = evolve_options(c);
  const int steps = std::max(1, static_cast<int>(std::lround(c.final_time_T / c.time_step_T)));
  const double dt = c.final_time_T / steps;
  GaugeState g = s.initial_point().gauge;
  std::vector<HeatGaugeRow> rows;
  auto record = [&] {
    rows.push_back({g.t, norm_linf(g.metric.h), norm_l2(g.A), norm_l2(g.B), norm_l2(g.V), gauge_source_defect(g),
                    min_metric_eigenvalue(g.metric)});
  };
  record();
  for (int n = 1; n <= steps; ++n) {
    g = step_parabolic(g, s.lambda, s.lambda, dt, opt.parabolic);
    if (n % c.record_every_steps == 0 || n == steps) record();
  }
  return rows;
}

namespace {

std::string record_name(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "rec_%05zu", k);
  return buf;
}

std::string index_name(const std::string& base, std::initializer_list<int> idx) {
  std::string n = base + "_";
  for (int i : idx) n += std::to_string(i);
  return n;
}

template <typename S>
void write_tensor(const fs::path& dir, const std::string& base, const Tensor<S>& t) {
  const int d = t.dim();
  if (t.rank() == 1)
    for (int a = 0; a < d; ++a) {
      const auto n = index_name(base, {a});
      write_snapshot((dir / (n + ".smcf")).string(), n, t(a));
    }
  else
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) {
        const auto n = index_name(base, {a, b});
        write_snapshot((dir / (n + ".smcf")).string(), n, t(a, b));
      }
}

void write_ambient(const fs::path& dir, const std::string& base, const AmbientVector& v) {
  for (std::size_t k = 0; k < v.size(); ++k) {
    const auto n = index_name(base, {static_cast<int>(k)});
    write_snapshot((dir / (n + ".smcf")).string(), n, v[k]);
  }
}

template <typename S>
Tensor<S> read_tensor(const fs::path& dir, const std::string& base, int rank, const GridPtr& grid) {
  Tensor<S> t(grid, rank);
  const int d = grid->dim();
  auto load = [&](const std::string& n) {
    const auto snap = read_snapshot((dir / (n + ".smcf")).string());
    if constexpr (std::is_same_v<S, double>) return real_field_from(snap, grid);
    else return complex_field_from(snap, grid);
  };
  if (rank == 1)
    for (int a = 0; a < d; ++a) t(a) = load(index_name(base, {a}));
  else
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) t(a, b) = load(index_name(base, {a, b}));
  return t;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot write " + path.string());
  return out;
}

}  // namespace

void write_trajectory(const fs::path& dir, const std::vector<TrajectoryPoint>& points, int every) {
  require(every >= 1, ErrorCode::InvalidArgument, "snapshot cadence must be >= 1");
  fs::create_directories(dir);
  auto times = open_out(dir / "times.csv");
  times << "index,t,directory\n";
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (k % every != 0 && k + 1 != points.size()) continue;
    const auto name = record_name(k);
    fs::create_directories(dir / name);
    write_tensor(dir / name, "lambda", points[k].lambda.lambda);
    write_tensor(dir / name, "g", points[k].gauge.metric.g);
    write_tensor(dir / name, "A", points[k].gauge.A);
    times << k << ',' << fmt(points[k].t) << ',' << name << '\n';
  }
}

std::vector<TrajectoryPoint> load_trajectory(const fs::path& dir, const GridPtr& grid, double min_eigenvalue) {
  std::ifstream in(dir / "times.csv");
  require(static_cast<bool>(in), ErrorCode::Io, "no times.csv in " + dir.string());
  std::string line;
  std::getline(in, line);
  require(line == "index,t,directory", ErrorCode::Io, "unexpected header in " + (dir / "times.csv").string());
  std::vector<TrajectoryPoint> out;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto c1 = line.find(','), c2 = line.rfind(',');
    require(c1 != std::string::npos && c2 > c1, ErrorCode::Io, "malformed times.csv line: " + line);
    const double t = parse_double("t", line.substr(c1 + 1, c2 - c1 - 1));
    const fs::path sub = dir / trim(line.substr(c2 + 1));
    auto metric = complete_metric(read_tensor<double>(sub, "g", 2, grid), min_eigenvalue);
    auto lambda = make_second_form(read_tensor<Complex>(sub, "lambda", 2, grid), metric);
    const auto A = read_tensor<double>(sub, "A", 1, grid);
    out.push_back({t, std::move(lambda), make_gauge_state(metric, A, t)});
  }
  require(!out.empty(), ErrorCode::EmptySeries, "trajectory " + dir.string() + " is empty");
  return out;
}

std::string to_string(Stage s) {
  switch (s) {
    case Stage::GaugeInit: return "gauge-init";
    case Stage::Norms: return "norms";
    case Stage::HeatGauge: return "heat-gauge";
    case Stage::Evolve: return "evolve";
    case Stage::Constraints: return "check-constraints";
    case Stage::Reconstruct: return "reconstruct";
  }
  return "unknown";
}

namespace {

class Artifacts {
 public:
  explicit Artifacts(const RunConfig& c) : config_(c), dir_(c.output_dir) {
    fs::create_directories(dir_);
    c.save(dir_ / "resolved_config.txt");
    files_.push_back("resolved_config.txt");
  }

  const fs::path& dir() const { return dir_; }

  std::ofstream open(const std::string& rel) {
    files_.push_back(rel);
    return open_out(dir_ / rel);
  }

  void note_file(const std::string& rel) { files_.push_back(rel); }
  void done(const std::string& stage) { stages_.push_back(stage); }
  void warn(const std::string& w) { warnings_.push_back(w); }
  void summary(const std::string& key, double v) { summary_[key] = v; }

  void write_manifest(const std::string& failed_stage = {}, const Error* err = nullptr) {
    nlohmann::ordered_json m;
    m["program"] = "smcf";
    m["version"] = "1.0.0";
    m["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                         std::to_string(EIGEN_MINOR_VERSION);
    m["compiler"] = __VERSION__;
    m["fft"] = "Eigen FFT (kissfft backend)";
    m["status"] = err ? "failed" : "ok";
    if (err) {
      m["failed_stage"] = failed_stage;
      m["error_code"] = std::string(to_string(err->code()));
      m["error"] = err->message();
    }
    auto& cfg = m["config"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : config_.entries()) cfg[k] = v;
    auto& cal = m["calibration"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : calibration::kAll) cal[std::string(k)] = v;
    m["stages"] = stages_;
    m["files"] = files_;
    m["warnings"] = warnings_;
    m["summary"] = summary_;
    auto out = open_out(dir_ / "manifest.json");
    out << m.dump(2) << '\n';
  }

 private:
  RunConfig config_;
  fs::path dir_;
  std::vector<std::string> files_;
  std::vector<std::string> stages_;
  std::vector<std::string> warnings_;
  nlohmann::ordered_json summary_ = nlohmann::ordered_json::object();
};

bool wants(const PipelineOptions& o, Stage s) {
  return std::find(o.stages.begin(), o.stages.end(), s) != o.stages.end();
}

void write_initial(Artifacts& art, const Scenario& s) {
  const fs::path dir = art.dir() / "initial";
  fs::create_directories(dir);
  write_ambient(dir, "F", s.F.periodic);
  write_ambient(dir, "nu1", s.frame.nu1);
  write_ambient(dir, "nu2", s.frame.nu2);
  write_tensor(dir, "lambda", s.lambda.lambda);
  write_tensor(dir, "g", s.metric.g);
  write_tensor(dir, "A", s.A);
  art.note_file("initial/");

  const auto& r = s.report;
  auto out = art.open("gauge_init.csv");
  out << "quantity,value\n";
  const std::pair<const char*, double> rows[] = {
      {"smallness", r.smallness},
      {"harmonic_residual_before", r.harmonic_residual_before},
      {"harmonic_residual_after", r.harmonic_residual_after},
      {"max_dphi", r.max_dphi},
      {"divergence_residual", r.divergence_residual},
      {"frame_defect", r.frame_defect},
      {"elliptic_h_residual", r.elliptic_h_residual},
      {"initial_A_gap", r.initial_A_gap},
      {"curl_residual", r.curl_residual},
      {"harmonic_iterations", static_cast<double>(r.harmonic_log.iterations)},
      {"coulomb_iterations", static_cast<double>(r.coulomb_log.iterations)},
      {"connection_iterations", static_cast<double>(r.connection_log.iterations)},
  };
  for (const auto& [k, v] : rows) out << k << ',' << fmt(v) << '\n';
  for (const auto& w : r.warnings) art.warn("gauge-init: " + w);
}

}  // namespace

ExperimentResult run_pipeline(const RunConfig& c, const PipelineOptions& opt) {
  c.validate();
  Artifacts art(c);
  ExperimentResult res;
  res.dir = art.dir();

  auto stage = [&](const std::string& name, auto&& body) {
    try {
      body();
      art.done(name);
    } catch (const Error& e) {
      art.write_manifest(name, &e);
      throw Error(e.code(), name + ": " + e.message());
    } catch (const std::exception& e) {
      const Error wrapped(ErrorCode::Io, e.what());
      art.write_manifest(name, &wrapped);
      throw Error(ErrorCode::Io, name + ": " + e.what());
    }
  };

  stage("gauge-init", [&] {
    res.scenario = generate_scenario(c);
    if (wants(opt, Stage::GaugeInit)) write_initial(art, res.scenario);
  });

  if (wants(opt, Stage::Norms))
    stage("norms", [&] {
      res.norms = lambda_norms(res.scenario.lambda, envelope_params(c));
      auto out = art.open("norms.csv");
      out << NormsRow::csv_header() << '\n';
      for (const auto& r : res.norms->rows) out << r.csv_row() << '\n';
      auto env = art.open("envelope.csv");
      env << "block,value\n";
      for (std::size_t j = 0; j < res.norms->envelope.values.size(); ++j)
        env << j << ',' << fmt(res.norms->envelope.values[j]) << '\n';
    });

  if (wants(opt, Stage::HeatGauge))
    stage("heat-gauge", [&] {
      res.heat_gauge = frozen_heat_gauge(res.scenario, c);
      auto out = art.open("heat_gauge.csv");
      out << HeatGaugeRow::csv_header() << '\n';
      for (const auto& r : res.heat_gauge) out << r.csv_row() << '\n';
    });

  const bool need_points = wants(opt, Stage::Evolve) || wants(opt, Stage::Constraints) || wants(opt, Stage::Reconstruct);
  if (need_points && !opt.trajectory_dir.empty()) {
    stage("load-trajectory", [&] {
      res.points = load_trajectory(opt.trajectory_dir, res.scenario.grid, c.min_metric_eigenvalue);
    });
  } else if (need_points) {
    stage("evolve", [&] {
      const auto traj = picard_evolve(res.scenario.lambda, res.scenario.initial_point().gauge, evolve_options(c));
      res.points = traj.points;
      res.sweep_distances = traj.sweep_distances;
      art.summary("steps", traj.steps);
      art.summary("dt", traj.dt);
      if (!traj.sweep_distances.empty()) {
        auto out = art.open("sweeps.csv");
        out << "sweep,distance\n";
        for (std::size_t k = 0; k < traj.sweep_distances.size(); ++k)
          out << k + 1 << ',' << fmt(traj.sweep_distances[k]) << '\n';
      }
      if (c.snapshot_every_records > 0) {
        write_trajectory(art.dir() / "trajectory", res.points, c.snapshot_every_records);
        art.note_file("trajectory/");
      }
    });
  }

  if (!res.points.empty())
    stage("diagnostics", [&] {
      auto out = art.open("diagnostics.csv");
      out << DiagnosticsRow::csv_header() << '\n';
      for (const auto& p : res.points) {
        res.diagnostics.push_back(diagnostics(p, c.envelope_s));
        out << res.diagnostics.back().csv_row() << '\n';
      }
      double worst = 0.0;
      for (const auto& d : res.diagnostics) worst = std::max(worst, d.lambda_hs);
      art.summary("initial_lambda_hs", res.diagnostics.front().lambda_hs);
      art.summary("max_lambda_hs", worst);
    });

  if (wants(opt, Stage::Constraints))
    stage("check-constraints", [&] {
      auto out = art.open("constraints.csv");
      out << ConstraintReport::csv_header() << '\n';
      double worst = 0.0;
      std::string where;
      for (std::size_t k = 0; k < res.points.size(); ++k) {
        res.constraints.push_back(check_constraints(res.points, k));
        const auto& rep = res.constraints.back();
        out << rep.csv_row() << '\n';
        for (std::size_t i = 0; i < rep.residuals.size(); ++i)
          if (rep.residuals[i].relative() > worst) {
            worst = rep.residuals[i].relative();
            where = std::string(ConstraintReport::kNames[i]) + " at t = " + fmt(rep.t);
          }
      }
      out.close();
      art.summary("max_constraint_relative", worst);
      require(worst <= c.constraint_tolerance_rel, ErrorCode::ConstraintViolation,
              "relative residual " + fmt(worst) + " (" + where + ") exceeds constraint_tolerance_rel");
    });

  if (wants(opt, Stage::Reconstruct))
    stage("reconstruct", [&] {
      res.reconstruction = reconstruct(res.scenario.F, res.scenario.frame, res.points, reconstruction_options(c));
      const auto& rec = *res.reconstruction;
      auto out = art.open("reconstruction.csv");
      out << ReconstructionRow::csv_header() << '\n';
      double worst = 0.0;
      for (const auto& r : rec.rows) {
        out << r.csv_row() << '\n';
        worst = std::max({worst, r.lambda_gap, r.metric_gap, r.smcf.relative()});
      }
      art.summary("initial_holonomy", rec.initial_holonomy);
      art.summary("max_reconstruction_gap", worst);
      if (c.snapshot_every_records > 0) {
        const fs::path dir = art.dir() / "immersion";
        for (std::size_t k = 0; k < rec.path.immersions.size(); ++k) {
          if (k % c.snapshot_every_records != 0 && k + 1 != rec.path.immersions.size()) continue;
          fs::create_directories(dir / record_name(k));
          write_ambient(dir / record_name(k), "F", rec.path.immersions[k].periodic);
        }
        art.note_file("immersion/");
      }
    });

  art.write_manifest();
  return res;
}

ExperimentResult run_experiment(const RunConfig& c) {
  return run_pipeline(c, {{Stage::GaugeInit, Stage::Norms, Stage::Evolve, Stage::Constraints, Stage::Reconstruct}, {}});
}

}  // namespace smcf
