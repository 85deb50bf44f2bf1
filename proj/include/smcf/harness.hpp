#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "smcf/constraints.hpp"
#include "smcf/fixtures.hpp"
#include "smcf/gauge_init.hpp"
#include "smcf/norms.hpp"
#include "smcf/reconstruction.hpp"

namespace smcf {

enum class ScenarioKind { Flat, Cliff, Bump };

ScenarioKind parse_scenario_kind(std::string_view s);  // "flat" | "cliff" | "bump"
std::string to_string(ScenarioKind k);

/// One experiment. The text form is `key = value` per line, `#` starts a
/// comment; length and time units are the suffixes _L and _T. Keys missing
/// from a file keep the values below, and the resolved set is echoed into
/// every manifest.
struct RunConfig {
  ScenarioKind scenario = ScenarioKind::Bump;
  int dimension = 2;
  int points_per_axis = 64;
  double box_length_L = 18.849555921538759;  // 6 pi

  double cliff_r1_L = 1.0;
  double cliff_r2_L = 1.0;
  double cliff_r0_L = 1.0;  // box_length_L must be a multiple of 2 pi r0

  double bump_epsilon = 0.05;
  double bump_delta = 0.5;
  double bump_width_L = 1.0;
  double bump_amplitude_1 = 1.0;
  double bump_amplitude_2 = 0.6;
  double bump_offset_x_L = 0.7;
  double bump_offset_y_L = -0.4;
  double bump_noise_amplitude = 0.0;  // seeded low-mode perturbation, relative to the bump scale
  int bump_noise_modes = 3;           // |k_i| <= this, in box wavenumber units

  double gauge_tolerance = 1e-11;
  int gauge_max_iterations = 60;
  double smallness_threshold = 0.1;

  double final_time_T = 0.05;
  double time_step_T = 0.005;
  CouplingMode coupling = CouplingMode::PerStep;
  int picard_sweeps = 3;
  double picard_tolerance = 0.0;
  CurvatureSign curvature_sign = CurvatureSign::Plus;
  double min_metric_eigenvalue = 0.05;

  double envelope_s = 2.0;
  double envelope_delta = 0.5;

  double constraint_tolerance_rel = 1e-2;  // beyond: constraint-violation; includes the O(dt^2) of d_t
  double holonomy_tolerance = 1e-4;
  double frame_drift_tolerance = 1e-5;
  double consistency_tolerance = 1e-4;

  int record_every_steps = 1;
  int snapshot_every_records = 1;  // 0: no trajectory snapshots
  std::string output_dir = "smcf_out";
  unsigned long long seed = 1;

  void validate() const;
  std::string to_text() const;
  static RunConfig parse(std::string_view text);
  /// Sets one key from its text form.
  void set(std::string_view key, std::string_view value);
  static RunConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  /// Resolved (key, value) pairs in file order.
  std::vector<std::pair<std::string, std::string>> entries() const;

  bool operator==(const RunConfig&) const = default;
};

struct Scenario {
  ScenarioKind kind = ScenarioKind::Flat;
  GridPtr grid;
  Immersion F;
  NormalFrame frame;
  MetricState metric;
  SecondForm lambda;
  RealTensor A;
  GaugeInitReport report;
  bool gauged = false;  // went through harmonic coordinates and the Coulomb frame

  TrajectoryPoint initial_point() const;
};

GridPtr make_grid(const RunConfig& c);
BumpParams bump_params(const RunConfig& c);
CliffParams cliff_params(const RunConfig& c);
GaugeInitOptions gauge_options(const RunConfig& c);
EvolveOptions evolve_options(const RunConfig& c);
ReconstructionOptions reconstruction_options(const RunConfig& c);
EnvelopeParams envelope_params(const RunConfig& c);

/// FLAT and CLIFF from their closed forms; BUMP through gauge_initial_data.
Scenario generate_scenario(const RunConfig& c);

struct DiagnosticsRow {
  double t = 0.0;
  double lambda_l2 = 0.0;
  double lambda_hs = 0.0;  // sum over components of ||lambda_ab||_{H^s}
  double psi_linf = 0.0;
  double h_linf = 0.0;
  double A_l2 = 0.0;
  double min_eigenvalue = 0.0;
  double source_defect = 0.0;  // gauge_source_defect
  double symmetry_defect = 0.0;
  double truncation = 0.0;

  static std::string csv_header();
  std::string csv_row() const;
};

DiagnosticsRow diagnostics(const TrajectoryPoint& p, double s);

struct NormsRow {
  std::string component;
  double l2 = 0.0;
  double hs = 0.0;
  double y0 = 0.0;
  double y0_lo = 0.0;

  static std::string csv_header();
  std::string csv_row() const;
};

struct NormsReport {
  std::vector<NormsRow> rows;
  Envelope envelope;  // of the largest component
};

NormsReport lambda_norms(const SecondForm& lambda, const EnvelopeParams& p);

/// Heat gauge flow with lambda frozen at the initial value.
struct HeatGaugeRow {
  double t = 0.0;
  double h_linf = 0.0;
  double A_l2 = 0.0;
  double B_l2 = 0.0;
  double V_l2 = 0.0;
  double source_defect = 0.0;
  double min_eigenvalue = 0.0;

  static std::string csv_header();
  std::string csv_row() const;
};

std::vector<HeatGaugeRow> frozen_heat_gauge(const Scenario& s, const RunConfig& c);

/// trajectory/times.csv plus one directory of snapshots per stored point.
void write_trajectory(const std::filesystem::path& dir, const std::vector<TrajectoryPoint>& points, int every);
std::vector<TrajectoryPoint> load_trajectory(const std::filesystem::path& dir, const GridPtr& grid,
                                             double min_eigenvalue = 0.0);

enum class Stage { GaugeInit, Norms, HeatGauge, Evolve, Constraints, Reconstruct };
std::string to_string(Stage s);

struct PipelineOptions {
  std::vector<Stage> stages;
  std::filesystem::path trajectory_dir;  // replaces Evolve when non-empty
};

struct ExperimentResult {
  std::filesystem::path dir;
  Scenario scenario;
  std::vector<TrajectoryPoint> points;
  std::vector<double> sweep_distances;
  std::vector<DiagnosticsRow> diagnostics;
  std::vector<HeatGaugeRow> heat_gauge;
  std::optional<NormsReport> norms;
  std::vector<ConstraintReport> constraints;
  std::optional<Reconstruction> reconstruction;
};

/// Runs the requested stages and writes every artifact under
/// config.output_dir. A failing stage still flushes what was written and a
/// manifest, then rethrows with the stage name prepended to the message.
ExperimentResult run_pipeline(const RunConfig& c, const PipelineOptions& opt);

/// gauge-init, norms, evolve, constraints and reconstruction.
ExperimentResult run_experiment(const RunConfig& c);

}  // namespace smcf
