#include "vrbound/estimator.hpp"

#include <cmath>
#include <limits>

namespace vrbound {

std::string to_string(Family f) {
  switch (f) {
    case Family::ZerothOrder: return "zeroth_order";
    case Family::FirstOrder: return "first_order";
    case Family::SecondOrder: return "second_order";
  }
  return "?";
}

Family family_from_string(const std::string& s) {
  if (s == "zeroth_order" || s == "1") return Family::ZerothOrder;
  if (s == "first_order" || s == "2") return Family::FirstOrder;
  if (s == "second_order" || s == "3") return Family::SecondOrder;
  throw EstimatorError("unknown family: " + s);
}

std::string to_string(Schedule::Kind k) {
  switch (k) {
    case Schedule::Kind::Never: return "never";
    case Schedule::Kind::Probabilistic: return "probabilistic";
    case Schedule::Kind::Periodic: return "periodic";
  }
  return "?";
}

void Schedule::validate() const {
  if (kind == Kind::Probabilistic && !(p > 0.0 && p <= 1.0))
    throw EstimatorError("reset probability must lie in (0, 1]");
  if (kind == Kind::Periodic && E < 1)
    throw EstimatorError("reset period must be a positive integer");
}

void EstimatorConfig::validate() const {
  if (!(beta >= 0.0 && beta <= 1.0)) throw EstimatorError("beta must lie in [0, 1]");
  schedule.validate();
  if (batch_size < 1) throw EstimatorError("batch size must be positive");
  if (!(eta > 0.0) || !std::isfinite(eta)) throw EstimatorError("eta must be positive");
  if (horizon < 1) throw EstimatorError("horizon must be positive");
}

bool reset_indicator(const Schedule& s, const RngStream& rng, std::uint64_t t) {
  if (t == 0) return true;
  switch (s.kind) {
    case Schedule::Kind::Never: return false;
    case Schedule::Kind::Probabilistic: {
      CounterEngine eng = rng.engine(Domain::Reset, t);
      return uniform01(eng) < s.p;
    }
    case Schedule::Kind::Periodic: return t % static_cast<std::uint64_t>(s.E) == 0;
  }
  return false;
}

double StepRecord::budget() const {
  if (scaled_budget == 0.0) return 0.0;
  return std::exp(2.0 * log_A) * scaled_budget;
}

Vec batch_estimate(const StochasticOracle& oracle, const Vec& w,
                   const std::vector<OracleSample>& samples) {
  if (samples.empty()) throw EstimatorError("batch size must be positive");
  Vec acc = oracle.eval_G(w, samples[0]);
  for (size_t i = 1; i < samples.size(); ++i) acc += oracle.eval_G(w, samples[i]);
  return acc / static_cast<double>(samples.size());
}

Vec correction_term(Family family, const StochasticOracle& oracle,
                    const OracleSample& xi, const Vec& w_t, const Vec& w_prev,
                    double beta) {
  switch (family) {
    case Family::ZerothOrder:
      return beta * (oracle.eval_G(w_prev, xi) - oracle.eval_G(w_t, xi));
    case Family::FirstOrder: return Vec::Zero(oracle.out_dim());
    case Family::SecondOrder: {
      if (!oracle.has_jvp())
        throw EstimatorError("second-order correction needs a jvp oracle");
      Vec d = w_prev - w_t;
      return beta * (oracle.eval_G(w_prev, xi) - oracle.eval_G(w_t, xi) -
                     oracle.eval_jvp(w_t, xi, d));
    }
  }
  return Vec::Zero(oracle.out_dim());
}

Vec recursive_estimate(Family family, const StochasticOracle& oracle, double beta,
                       const Vec& v_prev, const Vec& w_prev, const Vec& w_t,
                       const OracleSample& xi) {
  Vec v = oracle.eval_G(w_t, xi) + beta * (v_prev - oracle.eval_G(w_prev, xi));
  if (family != Family::FirstOrder)
    v += correction_term(family, oracle, xi, w_t, w_prev, beta);
  return v;
}

double family_bias_bound(Family f, double beta, double eta, const ProblemConstants& c) {
  const double G = c.G_update;
  switch (f) {
    case Family::ZerothOrder: return beta * eta * G * c.L;
    case Family::FirstOrder: return 0.0;
    case Family::SecondOrder: return 0.5 * c.alpha * beta * eta * eta * G * G;
  }
  return 0.0;
}

double family_var_proxy(Family f, double beta, double eta, const ProblemConstants& c) {
  const double G = c.G_update;
  const double omb = 1.0 - beta;
  switch (f) {
    case Family::ZerothOrder: return omb * omb * c.sigma * c.sigma;
    case Family::FirstOrder:
      return 2.0 * omb * omb * c.sigma * c.sigma +
             2.0 * beta * beta * c.ell * c.ell * eta * eta * G * G;
    case Family::SecondOrder:
      return 2.0 * omb * omb * c.sigma * c.sigma +
             2.0 * beta * beta * c.gamma * c.gamma * eta * eta * G * G;
  }
  return 0.0;
}

UnifiedEstimator::UnifiedEstimator(const StochasticOracle& oracle,
                                   EstimatorConfig config, RngStream rng)
    : oracle_(&oracle), config_(config), rng_(rng) {
  config_.validate();
  if (config_.family == Family::SecondOrder && !oracle.has_jvp())
    throw EstimatorError("second-order family needs a jvp oracle");
}

StepRecord UnifiedEstimator::finish(StepRecord rec, const Vec& w_t) {
  rec.e = rec.v - oracle_->eval_g(w_t);
  rec.error_norm = oracle_->error_norm(rec.e);
  if (rec.reset) {
    rec.has_innovation = false;
    rec.bias_bound = 0.0;
    rec.var_proxy = oracle_->constants().sigma * oracle_->constants().sigma /
                    config_.batch_size;
    state_.log_A = 0.0;
    state_.scaled_budget = 0.0;
  } else {
    const double beta = config_.beta;
    rec.has_innovation = true;
    rec.innovation = rec.e - beta * state_.prev_e;
    rec.bias_bound = family_bias_bound(config_.family, beta, config_.eta,
                                       oracle_->constants());
    rec.var_proxy = family_var_proxy(config_.family, beta, config_.eta,
                                     oracle_->constants());
    state_.log_A += beta > 0.0 ? -std::log(beta)
                               : std::numeric_limits<double>::infinity();
    state_.scaled_budget = beta * beta * state_.scaled_budget + rec.var_proxy;
  }
  if (state_.t >= 0) rec.displacement = primal_norm(w_t - state_.prev_w, oracle_->geometry());
  rec.log_A = state_.log_A;
  rec.scaled_budget = state_.scaled_budget;
  state_.oracle_calls += rec.calls;
  rec.total_calls = state_.oracle_calls;
  state_.v = rec.v;
  state_.prev_w = w_t;
  state_.prev_e = rec.e;
  state_.t = rec.t;
  rec.epoch = state_.epoch;
  return rec;
}

StepRecord UnifiedEstimator::init(const Vec& w0) {
  state_ = EstimatorState{};
  StepRecord rec;
  rec.t = 0;
  rec.reset = true;
  rec.v = batch_estimate(*oracle_, w0, draw_batch(rng_, 0, config_.batch_size));
  rec.calls = config_.batch_size;
  state_.tau.push_back(0);
  state_.epoch = 0;
  return finish(std::move(rec), w0);
}

StepRecord UnifiedEstimator::step(const Vec& w_t) {
  if (state_.t < 0) throw EstimatorError("estimator not initialized");
  const std::uint64_t t = static_cast<std::uint64_t>(state_.t + 1);
  const bool b = reset_indicator(config_.schedule, rng_, t);
  return step_with(w_t, b, draw_sample(rng_, t));
}

StepRecord UnifiedEstimator::step_with(const Vec& w_t, bool reset,
                                       const OracleSample& xi) {
  if (state_.t < 0) throw EstimatorError("estimator not initialized");
  StepRecord rec;
  rec.t = state_.t + 1;
  rec.reset = reset;
  if (reset) {
    rec.v = batch_estimate(*oracle_, w_t,
                           draw_batch(rng_, static_cast<std::uint64_t>(rec.t),
                                      config_.batch_size));
    rec.calls = config_.batch_size;
    // current epoch closes at the previous step; the reset opens a new one
    state_.tau.push_back(rec.t);
    state_.epoch += 1;
  } else {
    rec.v = recursive_estimate(config_.family, *oracle_, config_.beta, state_.v,
                               state_.prev_w, w_t, xi);
    rec.calls = 1;
  }
  return finish(std::move(rec), w_t);
}

std::vector<StepRecord> run_estimation_trajectory(const StochasticOracle& oracle,
                                                  const std::vector<Vec>& path,
                                                  const EstimatorConfig& config,
                                                  const RngStream& rng) {
  if (path.empty()) throw EstimatorError("path must contain w_0");
  UnifiedEstimator est(oracle, config, rng);
  std::vector<StepRecord> out;
  out.reserve(path.size());
  out.push_back(est.init(path[0]));
  for (size_t i = 1; i < path.size(); ++i) out.push_back(est.step(path[i]));
  return out;
}

}  // namespace vrbound
