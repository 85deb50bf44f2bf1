// smcf command line: one experiment stage (or the whole pipeline) per call.
#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "smcf/harness.hpp"

namespace {

struct Common {
  std::string config;
  std::string output;
  std::vector<std::string> overrides;
  std::string trajectory;
};

smcf::RunConfig resolve(const Common& c) {
  auto cfg = c.config.empty() ? smcf::RunConfig{} : smcf::RunConfig::load(c.config);
  for (const auto& o : c.overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) smcf::fail(smcf::ErrorCode::InvalidArgument, "--set expects key=value, got " + o);
    cfg.set(o.substr(0, eq), o.substr(eq + 1));
  }
  if (!c.output.empty()) cfg.output_dir = c.output;
  return cfg;
}

void summarize(const smcf::ExperimentResult& r) {
  std::printf("output: %s\n", r.dir.string().c_str());
  if (!r.points.empty())
    std::printf("stored states: %zu, t = %.6g .. %.6g\n", r.points.size(), r.points.front().t, r.points.back().t);
  if (r.norms)
    for (const auto& row : r.norms->rows)
      std::printf("%-10s l2 %.6e  H^s %.6e  Y0 %.6e  Y0lo %.6e\n", row.component.c_str(), row.l2, row.hs, row.y0,
                  row.y0_lo);
  if (!r.constraints.empty()) {
    double worst = 0.0;
    for (const auto& rep : r.constraints)
      for (const auto& n : rep.residuals) worst = std::max(worst, n.relative());
    std::printf("largest relative constraint residual: %.3e\n", worst);
  }
  if (r.reconstruction) {
    double worst = 0.0;
    for (const auto& row : r.reconstruction->rows) worst = std::max({worst, row.lambda_gap, row.smcf.relative()});
    std::printf("largest reconstruction gap: %.3e\n", worst);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral lab for skew mean curvature flow in the heat gauge"};
  app.require_subcommand(1);
  Common common;

  struct Command {
    const char* name;
    const char* help;
    std::vector<smcf::Stage> stages;
    bool takes_trajectory;
  };
  using smcf::Stage;
  const std::vector<Command> commands{
      {"gauge-init", "build the initial data and move it to harmonic coordinates and the Coulomb frame",
       {Stage::GaugeInit}, false},
      {"heat-gauge", "run the heat gauge equations with lambda frozen at its initial value",
       {Stage::HeatGauge}, false},
      {"evolve", "evolve lambda with the heat gauge", {Stage::Evolve}, false},
      {"check-constraints", "evolve (or load a trajectory) and report the constraint residuals",
       {Stage::Constraints}, true},
      {"reconstruct", "rebuild frames and the immersion along an evolution and check the flow",
       {Stage::Reconstruct}, true},
      {"norms", "Sobolev, Y0 and envelope norms of the initial second form", {Stage::Norms}, false},
      {"run", "the whole pipeline",
       {Stage::GaugeInit, Stage::Norms, Stage::Evolve, Stage::Constraints, Stage::Reconstruct}, false},
  };
  std::vector<CLI::App*> subs;
  for (const auto& cmd : commands) {
    auto* sub = app.add_subcommand(cmd.name, cmd.help);
    sub->add_option("-c,--config", common.config, "run configuration (key = value per line)")
        ->check(CLI::ExistingFile);
    sub->add_option("-o,--output", common.output, "output directory, overrides output_dir");
    sub->add_option("-s,--set", common.overrides, "extra key=value, applied after the file")->take_all();
    if (cmd.takes_trajectory)
      sub->add_option("-t,--trajectory", common.trajectory, "trajectory directory written by a previous run")
          ->check(CLI::ExistingDirectory);
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return smcf::exit_code(smcf::ErrorCategory::Validation);
  }

  try {
    for (std::size_t k = 0; k < commands.size(); ++k) {
      if (!subs[k]->parsed()) continue;
      const auto cfg = resolve(common);
      smcf::PipelineOptions opt{commands[k].stages, common.trajectory};
      summarize(smcf::run_pipeline(cfg, opt));
    }
  } catch (const smcf::Error& e) {
    std::cerr << "smcf: " << e.what() << '\n';
    return smcf::exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "smcf: internal error: " << e.what() << '\n';
    return smcf::exit_code(smcf::ErrorCategory::Numerical);
  }
  return 0;
}
