#include <iostream>

#include "CLI11.hpp"
#include "vrbound/experiment.hpp"

using namespace vrbound;

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::int64_t seed = -1;
  int workers = 1;
  bool no_plots = false;
};

ExperimentConfig load(const Flags& f) {
  ExperimentConfig cfg = load_config(f.config);
  if (f.seed >= 0) {
    Json doc = cfg.source;
    doc["seed"] = f.seed;
    cfg = parse_config(doc);
  }
  return cfg;
}

int report_error(const ExperimentError& e) {
  const char* tag = e.code() == ExitCode::Schema         ? "schema error"
                    : e.code() == ExitCode::Inadmissible ? "inadmissible"
                                                         : "runtime error";
  std::cerr << tag << ": " << e.what() << "\n";
  return static_cast<int>(e.code());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vrbound: high-probability bounds for variance-reduced estimators"};
  app.require_subcommand(1);
  Flags f;
  auto add_common = [&f](CLI::App* sub) {
    sub->add_option("--config", f.config, "experiment config (JSON)")->required()->check(
        CLI::ExistingFile);
    sub->add_option("--seed", f.seed, "override the master seed")->check(CLI::NonNegativeNumber);
  };
  CLI::App* run = app.add_subcommand("run", "run an experiment and write its artifacts");
  add_common(run);
  run->add_option("--out", f.out, "output directory (overrides the config)");
  run->add_option("--workers", f.workers, "worker threads")->check(CLI::PositiveNumber);
  run->add_flag("--no-plots", f.no_plots, "skip the SVG plots");
  CLI::App* val = app.add_subcommand("validate", "check a config without running it");
  add_common(val);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::Schema);
  }

  try {
    ExperimentConfig cfg = load(f);
    if (val->parsed()) {
      ValidationResult v = validate_experiment(cfg);
      for (const auto& d : v.diagnostics) std::cout << d << "\n";
      std::cout << v.resolved.dump(2) << "\n";
      return 0;
    }
    RunOptions opt;
    opt.out_dir = f.out;
    opt.workers = f.workers;
    opt.plots = !f.no_plots;
    Json report = run_experiment(cfg, opt);
    std::cout << report["aggregates"].dump(2) << "\n";
    return 0;
  } catch (const ExperimentError& e) {
    return report_error(e);
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::Runtime);
  }
}
