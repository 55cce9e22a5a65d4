#include "vrbound/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vrbound {

Vec normalized_update(const Vec& v, const GeometrySpec& g) {
  const double n = dual_norm(v, g);
  if (n > 1e-14) return v / n;
  return Vec::Zero(v.size());
}

double stationarity_witness(const StochasticOracle& problem, const Vec& w, double eta) {
  const GeometrySpec& g = problem.geometry();
  Vec grad = problem.eval_g(w);
  const double gn = dual_norm(grad, g);
  if (gn == 0.0) return 0.0;
  Vec P = prox_map(w, grad / gn, eta / 2.0, g);
  const double pn = primal_norm(P, g);
  return gn * pn * pn;
}

MirrorDescentRun mirror_descent_run(const StochasticOracle& problem,
                                    const EstimatorConfig& config, const Vec& w0,
                                    const RngStream& rng, bool keep_log) {
  if (problem.out_dim() != problem.dim())
    throw EstimatorError("mirror descent needs a vector-field oracle");
  const GeometrySpec& g = problem.geometry();
  require_feasible(w0, g);
  UnifiedEstimator est(problem, config, rng);
  MirrorDescentRun run;
  run.T = config.horizon;
  run.error_norms.reserve(config.horizon);
  if (keep_log) run.log.reserve(config.horizon);
  const double eta = config.eta;
  const double L = problem.constants().L;
  const bool has_f = problem.has_objective();
  if (has_f) run.max_descent_residual = -std::numeric_limits<double>::infinity();
  Vec w = w0;
  double witness_sum = 0.0;
  for (int t = 0; t < config.horizon; ++t) {
    StepRecord rec = t == 0 ? est.init(w) : est.step(w);
    Vec U = normalized_update(rec.v, g);
    Vec grad = problem.eval_g(w);
    const double wit = stationarity_witness(problem, w, eta);
    witness_sum += wit;
    Vec w_next = prox_step(w, U, eta, g);
    const double step = primal_norm(w_next - w, g);
    run.max_step = std::max(run.max_step, step);
    run.error_norms.push_back(rec.error_norm);
    double fw = 0.0;
    if (has_f) {
      fw = problem.objective(w);
      Vec P = (w - w_next) / eta;
      const double pn = primal_norm(P, g);
      const double resid = problem.objective(w_next) - fw + eta * grad.dot(P) -
                           0.5 * L * eta * eta * pn * pn;
      run.max_descent_residual = std::max(run.max_descent_residual, resid);
    }
    if (keep_log) {
      IterationLog it;
      it.t = t;
      it.f = fw;
      it.v_norm = dual_norm(rec.v, g);
      it.grad_norm = dual_norm(grad, g);
      it.witness = wit;
      it.error_norm = rec.error_norm;
      it.step_norm = step;
      it.reset = rec.reset;
      run.log.push_back(it);
    }
    w = std::move(w_next);
  }
  run.avg_witness = witness_sum / config.horizon;
  run.oracle_calls = est.state().oracle_calls;
  run.w_final = w;
  return run;
}

LemmaCoefficients stationarity_coefficients(Family f, int case_id,
                                            const ProblemConstants& c, double T,
                                            double delta, double kappa) {
  if (case_id < 1 || case_id > 3) throw BoundsError("case must be 1, 2 or 3");
  const double sigma = c.sigma;
  const double l4 = std::log(4.0 * T / delta);
  const double Lam2 = std::max(kappa, std::log(2.0 * T / delta));
  const double Lam4 = std::max(kappa, l4);
  const double corr = f == Family::SecondOrder ? c.gamma : c.ell;
  LemmaCoefficients k;
  k.C1 = 4.0 * c.delta_f;
  k.C2 = 2.0 * c.L;
  if (f == Family::ZerothOrder) {
    switch (case_id) {
      case 1:
        k.C3 = 16.0 * sigma * std::sqrt(2.0 * Lam2);
        k.C4 = 16.0 * sigma * std::sqrt(2.0 * Lam2);
        k.C5 = 8.0 * c.L;
        break;
      case 2:
        k.C4 = 16.0 * sigma * std::sqrt(2.0 * Lam4);
        k.C5 = 8.0 * c.L * l4;
        break;
      case 3:
        k.C4 = 16.0 * sigma * std::sqrt(2.0 * Lam2);
        k.C5 = 8.0 * c.L;
        break;
    }
    return k;
  }
  switch (case_id) {
    case 1:
      k.C3 = 16.0 * sigma * std::sqrt(2.0 * Lam2);
      k.C4 = 32.0 * sigma * std::sqrt(Lam2);
      k.C5 = 32.0 * corr * std::sqrt(Lam2);
      if (f == Family::SecondOrder) k.C6 = 4.0 * c.alpha;
      break;
    case 2:
      k.C4 = 16.0 * sigma * std::sqrt(2.0 * Lam4);
      k.C5 = 32.0 * corr * std::sqrt(l4 * Lam4);
      if (f == Family::SecondOrder) k.C6 = 4.0 * c.alpha * l4;
      break;
    case 3:
      k.C4 = 16.0 * sigma * std::sqrt(2.0 * Lam2);
      k.C5 = 32.0 * corr * std::sqrt(Lam2);
      if (f == Family::SecondOrder) k.C6 = 4.0 * c.alpha;
      break;
  }
  return k;
}

TableConfig configure_from_table(Family f, int case_id, const ProblemConstants& c, int T,
                                 double delta, double kappa) {
  if (!row_for(f, case_id)) throw BoundsError("unknown table row");
  if (!(delta > 0.0 && delta < 1.0)) throw BoundsError("delta must lie in (0, 1)");
  TableConfig out;
  out.coefficients = stationarity_coefficients(f, case_id, c, T, delta, kappa);
  // with alpha = 0 the second-order term vanishes and the family-2 choice applies
  Family sel = f;
  if (f == Family::SecondOrder && out.coefficients.C6 == 0.0) sel = Family::FirstOrder;
  EstimatorConfig cfg;
  cfg.family = f;
  cfg.horizon = T;
  if (case_id == 1) {
    out.selection = select_params_case1(out.coefficients, sel, T);
    cfg.beta = 1.0 - out.selection.one_minus_beta;
    cfg.schedule = Schedule::never();
    cfg.batch_size = 1;
    out.selection.B = 1;
  } else {
    out.selection = select_params_case23(out.coefficients, sel, T);
    cfg.beta = 1.0;
    cfg.batch_size = out.selection.B;
    cfg.schedule = case_id == 2 ? Schedule::probabilistic(out.selection.p)
                                : Schedule::periodic(out.selection.E);
  }
  cfg.eta = out.selection.eta;
  out.config = cfg;
  out.instantiation =
      case_id == 2 ? "kappa v log(4T/delta)" : "kappa v log(2T/delta)";
  if (sel != f) out.instantiation += "; alpha = 0, family-2 selection";
  return out;
}

}  // namespace vrbound
