#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "vrbound/constrained.hpp"
#include "vrbound/optimizer.hpp"

namespace vrbound {

using Json = nlohmann::ordered_json;

enum class ExitCode : int { Ok = 0, Schema = 1, Inadmissible = 2, Runtime = 3 };

class ExperimentError : public std::runtime_error {
 public:
  ExperimentError(ExitCode code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}
  ExitCode code() const { return code_; }

 private:
  ExitCode code_;
};

enum class ExperimentKind { Estimate, MirrorDescent, Sgm, Freedman, Sweep };
std::string to_string(ExperimentKind k);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Estimate;
  std::uint64_t seed = 0;
  double delta = 0.1;
  int T = 0;
  std::int64_t trials = 1;
  std::string output;
  Json problem;
  Json estimator;
  Json freedman;
  std::vector<int> sweep_T;
  Json source;  // the parsed document, seed filled in
};

// Strict parsing: unknown or misplaced keys and missing fields throw (code 1).
ExperimentConfig parse_config(const Json& doc);
ExperimentConfig load_config(const std::string& path);

std::unique_ptr<StochasticOracle> build_problem(const Json& spec);
Vec start_point(const Json& spec, const StochasticOracle& problem);

struct ResolvedEstimator {
  EstimatorConfig config;
  int case_id = 1;
  bool from_table = false;
  bool admissible = true;
  std::string violated;
  std::string instantiation;
  std::optional<SGMPlan> sgm;
};

ResolvedEstimator resolve_estimator(const ExperimentConfig& cfg,
                                    const StochasticOracle& problem, int T);

struct RunOptions {
  std::string out_dir;
  int workers = 1;
  bool plots = true;
};

struct ValidationResult {
  std::vector<std::string> diagnostics;
  Json resolved;
};

// Schema and admissibility checks only; throws code 2 on inadmissible parameters.
ValidationResult validate_experiment(const ExperimentConfig& cfg);

// Runs the experiment, writes report.json, trajectories.csv and plots/*.svg into
// out_dir and returns the report.
Json run_experiment(const ExperimentConfig& cfg, const RunOptions& options);

// FNV-1a over the report without its timestamp field
std::string determinism_hash(const Json& report);

}  // namespace vrbound
