#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vrbound/bounds.hpp"
#include "vrbound/estimator.hpp"

namespace vrbound {

// v / |v|_* when |v|_* > 1e-14, else 0
Vec normalized_update(const Vec& v, const GeometrySpec& g);

// |grad f(w)|_* |P(w, grad f / |grad f|_*, eta / 2)|^2, zero at stationary points
double stationarity_witness(const StochasticOracle& problem, const Vec& w, double eta);

struct IterationLog {
  int t = 0;
  double f = 0.0;
  double v_norm = 0.0;
  double grad_norm = 0.0;
  double witness = 0.0;
  double error_norm = 0.0;
  double step_norm = 0.0;
  bool reset = false;
};

struct MirrorDescentRun {
  int T = 0;
  double avg_witness = 0.0;
  double max_step = 0.0;               // max |w_{t+1} - w_t|
  double max_descent_residual = 0.0;   // smoothness-step residual
  std::int64_t oracle_calls = 0;
  Vec w_final;
  std::vector<IterationLog> log;       // filled when requested
  std::vector<double> error_norms;     // |e_t|, t = 0..T-1
};

MirrorDescentRun mirror_descent_run(const StochasticOracle& problem,
                                    const EstimatorConfig& config, const Vec& w0,
                                    const RngStream& rng, bool keep_log = false);

// Parameters from the stationarity analysis: lemma coefficients built from the
// problem constants, then the matching selection lemma.
struct TableConfig {
  EstimatorConfig config;
  LemmaCoefficients coefficients;
  ParamSelection selection;
  std::string instantiation;  // which log factors were used
};

LemmaCoefficients stationarity_coefficients(Family f, int case_id,
                                            const ProblemConstants& c, double T,
                                            double delta, double kappa);
TableConfig configure_from_table(Family f, int case_id, const ProblemConstants& c, int T,
                                 double delta, double kappa);

}  // namespace vrbound
