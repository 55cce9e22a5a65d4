#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "vrbound/estimator.hpp"

namespace vrbound {

class BoundsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// C(delta, kappa) = sqrt(kappa) + sqrt(3 ln(1/delta))
double confidence_factor(double delta, double kappa);

enum class EnvelopeRow {
  Momentum,
  ProbMomentum,
  PeriodicMomentum,
  Storm,
  Page,
  Spider,
  SoMomentum,
  SoPage,
  SoSpider,
};
std::string to_string(EnvelopeRow r);
EnvelopeRow envelope_row_from_string(const std::string& s);
// nullopt outside the nine named (family, case) rows
std::optional<EnvelopeRow> row_for(Family f, int case_id);
Family row_family(EnvelopeRow r);
int row_case(EnvelopeRow r);

struct EnvelopeParams {
  double beta = 0.0;  // case 1
  double p = 0.0;     // case 2
  int E = 0;          // case 3
  double eta = 0.0;
  int B = 1;
  int T = 1;
};

struct EnvelopeTerms {
  double init = 0.0;  // reset / initialization term
  double bias = 0.0;
  double noise = 0.0;
  double total() const { return init + bias + noise; }
};

class BoundEnvelope {
 public:
  BoundEnvelope(EnvelopeRow row, EnvelopeParams params, ProblemConstants constants,
                double delta, double kappa);

  double operator()(int t) const { return terms(t).total(); }
  EnvelopeTerms terms(int t) const;
  // max over t in [t_from, t_to]
  double sup(int t_from, int t_to) const;

  EnvelopeRow row() const { return row_; }
  const EnvelopeParams& params() const { return params_; }
  const ProblemConstants& constants() const { return c_; }
  double delta() const { return delta_; }
  double kappa() const { return kappa_; }

 private:
  EnvelopeRow row_;
  EnvelopeParams params_;
  ProblemConstants c_;
  double delta_;
  double kappa_;
};

std::optional<BoundEnvelope> envelope(Family f, int case_id, const EnvelopeParams& params,
                                      const ProblemConstants& constants, double delta,
                                      double kappa);
BoundEnvelope require_envelope(Family f, int case_id, const EnvelopeParams& params,
                               const ProblemConstants& constants, double delta,
                               double kappa);

// ---------------------------------------------------------------- parameter selection

struct LemmaCoefficients {
  double C1 = 0, C2 = 0, C3 = 0, C4 = 0, C5 = 0, C6 = 0;
};

struct ParamSelection {
  double eta = 0.0;
  double one_minus_beta = 0.0;  // case 1
  double p = 0.0;               // cases 2/3 (p = 1/E)
  int E = 0;
  int B = 1;
  double predicted_bound = 0.0;
  bool admissible = false;
  std::string violated;  // names the failed horizon condition
};

// f_k(eta, y) of the decoupled lemma, y = 1 - beta
double lemma_objective_case1(Family f, const LemmaCoefficients& c, double eta, double y,
                             double T);
// f_k(eta, p) with C3 = 0
double lemma_objective_case23(Family f, const LemmaCoefficients& c, double eta, double p,
                              double T);

ParamSelection select_params_case1(const LemmaCoefficients& c, Family f, double T);
ParamSelection select_params_case23(const LemmaCoefficients& c, Family f, double T);

// smallest integer T >= (e^{q^2} / eps) log^q(max{e, 1/(eps delta)})
long long min_horizon(double epsilon, double delta, double q);

}  // namespace vrbound
