#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "vrbound/oracle.hpp"

namespace vrbound {

class EstimatorError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Family { ZerothOrder, FirstOrder, SecondOrder };
std::string to_string(Family f);
Family family_from_string(const std::string& s);

struct Schedule {
  enum class Kind { Never, Probabilistic, Periodic };
  Kind kind = Kind::Never;
  double p = 0.0;  // Probabilistic
  int E = 0;       // Periodic

  static Schedule never() { return {}; }
  static Schedule probabilistic(double p) { return {Kind::Probabilistic, p, 0}; }
  static Schedule periodic(int E) { return {Kind::Periodic, 0.0, E}; }
  void validate() const;
};
std::string to_string(Schedule::Kind k);

struct EstimatorConfig {
  Family family = Family::FirstOrder;
  double beta = 1.0;
  Schedule schedule;
  int batch_size = 1;
  double eta = 0.01;
  int horizon = 1;
  void validate() const;
};

// Reset indicator b_t for t >= 1 (b_0 = 1 always).
bool reset_indicator(const Schedule& s, const RngStream& rng, std::uint64_t t);

struct StepRecord {
  int t = 0;
  bool reset = false;
  Vec v;
  Vec e;                   // v_t - g(w_t)
  double error_norm = 0.0;
  bool has_innovation = false;
  Vec innovation;          // e_t - beta e_{t-1}; undefined on reset steps
  double bias_bound = 0.0; // B_t
  double var_proxy = 0.0;  // Sigma_t^2 (sigma^2 / B on reset steps)
  double log_A = 0.0;      // log A_t, A = 1 at the start of the epoch
  double scaled_budget = 0.0;  // A_t^{-2} V_t^2 = sum_j Lambda_{t,j}^2 Sigma_j^2
  int epoch = 0;
  int calls = 0;           // oracle calls consumed by this step
  std::int64_t total_calls = 0;
  double displacement = 0.0;

  double budget() const;   // running V_t^2
};

struct EstimatorState {
  Vec v;
  Vec prev_w;
  Vec prev_e;
  int t = -1;
  std::vector<int> tau;
  int epoch = 0;
  std::int64_t oracle_calls = 0;
  double log_A = 0.0;
  double scaled_budget = 0.0;
};

Vec batch_estimate(const StochasticOracle& oracle, const Vec& w,
                   const std::vector<OracleSample>& samples);

Vec correction_term(Family family, const StochasticOracle& oracle,
                    const OracleSample& xi, const Vec& w_t, const Vec& w_prev,
                    double beta);

// G(w_t, xi) + beta (v_prev - G(w_prev, xi)) + T_t, one shared xi.
Vec recursive_estimate(Family family, const StochasticOracle& oracle, double beta,
                       const Vec& v_prev, const Vec& w_prev, const Vec& w_t,
                       const OracleSample& xi);

// Per-step bias bound B_t and variance proxy Sigma_t^2 of the family.
double family_bias_bound(Family f, double beta, double eta, const ProblemConstants& c);
double family_var_proxy(Family f, double beta, double eta, const ProblemConstants& c);

class UnifiedEstimator {
 public:
  UnifiedEstimator(const StochasticOracle& oracle, EstimatorConfig config,
                   RngStream rng);

  StepRecord init(const Vec& w0);
  StepRecord step(const Vec& w_t);
  // Recursive step with an explicit sample, for replays from a frozen state.
  StepRecord step_with(const Vec& w_t, bool reset, const OracleSample& xi);

  const EstimatorState& state() const { return state_; }
  const EstimatorConfig& config() const { return config_; }
  const Vec& value() const { return state_.v; }

 private:
  StepRecord finish(StepRecord rec, const Vec& w_t);

  const StochasticOracle* oracle_;
  EstimatorConfig config_;
  RngStream rng_;
  EstimatorState state_;
};

std::vector<StepRecord> run_estimation_trajectory(const StochasticOracle& oracle,
                                                  const std::vector<Vec>& path,
                                                  const EstimatorConfig& config,
                                                  const RngStream& rng);

}  // namespace vrbound
