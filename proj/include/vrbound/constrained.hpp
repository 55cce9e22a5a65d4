#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vrbound/bounds.hpp"
#include "vrbound/estimator.hpp"

namespace vrbound {

class ConstrainedError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ConstrainedSetup {
  const ConstrainedLinear* problem = nullptr;
  double R = 0.0;  // sup D_phi <= R^2 / 2
  double D = 0.0;  // diameter
  double G = 0.0;  // subgradient bound
  Vec w_star;
  double f_star = 0.0;
  Vec w_start;     // center of the feasible set
};

ConstrainedSetup make_setup(const ConstrainedLinear& problem);

// R^2/(2 eta T) + eta G^2/2 + 2 D G sqrt(2 log(4/delta)) / sqrt(T) + E
double sgm_threshold(double R, double eta, int T, double G, double D, double delta,
                     double envelope_E);

struct SGMPlan {
  int case_id = 2;
  Family family = Family::FirstOrder;
  EstimatorConfig estimator;
  double eta = 0.0;
  int T = 0;
  double delta = 0.0;
  double Lambda = 0.0;       // log(8T/delta) for cases 2/3, 2 log(4T/delta) for case 1
  double envelope_E = 0.0;
  double epsilon = 0.0;
  double predicted_Q = 0.0;
  double expected_calls = 0.0;  // oracle calls over the T estimator steps
  bool admissible = true;
  std::string violated;
};

SGMPlan sgm_configure(int case_id, Family family, const ConstrainedSetup& setup, int T,
                      double delta);

// sup of the table envelope at delta/2 over the window the selected set uses
double sgm_envelope(const ConstrainedSetup& setup, const EstimatorConfig& config,
                    int case_id, double eta, int T, double delta);

struct SGMTraceRow {
  int t = 0;
  double v = 0.0;
  double h = 0.0;
  double f = 0.0;
  bool objective_step = false;
  bool reset = false;
};

struct SGMResult {
  bool success = false;        // A nonempty
  std::string failure;
  double epsilon = 0.0;
  double envelope_E = 0.0;
  std::vector<int> selected;   // A, 1-based iteration indices
  Vec w_bar;
  double f_gap = 0.0;
  double h_value = 0.0;
  bool f_ok = false;           // f_gap <= epsilon
  bool h_ok = false;           // h_value <= epsilon + E
  std::int64_t oracle_calls = 0;  // over the T estimator steps
  std::int64_t init_calls = 0;    // initial batch
  std::vector<SGMTraceRow> trace;
};

struct SGMOptions {
  int case_id = 2;
  bool keep_trace = false;
  std::optional<double> threshold_override;
};

SGMResult sgm_run(const ConstrainedSetup& setup, const EstimatorConfig& config,
                  double eta, int T, double delta, const RngStream& rng,
                  const SGMOptions& options);
SGMResult sgm_run(const ConstrainedSetup& setup, const SGMPlan& plan, const RngStream& rng,
                  bool keep_trace = false);

// closed-form bound Q_T for (family, case)
double sgm_predicted_bound(int case_id, Family family, const ConstrainedSetup& setup,
                           int T, double delta);

}  // namespace vrbound
