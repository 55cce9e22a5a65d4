#include "vrbound/constrained.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vrbound {

namespace {

double pw(double x, double a) { return std::pow(x, a); }

double corr_constant(Family f, const ProblemConstants& c) {
  return f == Family::SecondOrder ? c.gamma : c.ell;
}

void require_constants(Family f, const ConstrainedSetup& s) {
  const ProblemConstants& c = s.problem->constants();
  if (!(c.sigma > 0.0)) throw ConstrainedError("constraint noise proxy sigma must be > 0");
  if (f == Family::ZerothOrder && !(c.L > 0.0))
    throw ConstrainedError("family 1 needs L > 0");
  if (f != Family::ZerothOrder && !(corr_constant(f, c) > 0.0))
    throw ConstrainedError("families 2 and 3 need a positive mean-square constant");
  if (!(s.R > 0.0 && s.G > 0.0 && s.D > 0.0))
    throw ConstrainedError("R, G and D must be positive");
}

}  // namespace

ConstrainedSetup make_setup(const ConstrainedLinear& problem) {
  ConstrainedSetup s;
  s.problem = &problem;
  s.R = problem.radius_R();
  s.D = problem.diameter();
  s.G = problem.subgradient_bound();
  s.w_star = problem.w_star();
  s.f_star = problem.f_star();
  s.w_start = center_point(problem.geometry());
  return s;
}

double sgm_threshold(double R, double eta, int T, double G, double D, double delta,
                     double envelope_E) {
  if (!(R > 0.0 && eta > 0.0 && T >= 1 && G > 0.0 && D > 0.0 && delta > 0.0 &&
        delta < 1.0 && envelope_E >= 0.0))
    throw ConstrainedError("threshold arguments must be positive");
  const double Td = T;
  return R * R / (2.0 * eta * Td) + eta * G * G / 2.0 +
         2.0 * D * G / std::sqrt(Td) * std::sqrt(2.0 * std::log(4.0 / delta)) + envelope_E;
}

double sgm_predicted_bound(int case_id, Family f, const ConstrainedSetup& s, int T,
                           double delta) {
  require_constants(f, s);
  const ProblemConstants& c = s.problem->constants();
  const double R = s.R, G = s.G, D = s.D, sigma = c.sigma, L = c.L, alpha = c.alpha;
  const double corr = corr_constant(f, c);
  const double Td = T;
  const double l4 = std::log(4.0 / delta);
  if (case_id == 1) {
    const double Gam = 2.0 * std::log(4.0 * Td / delta);
    double q = std::sqrt(2.0) * R * G / std::sqrt(Td) + 4.0 * D * G * std::sqrt(l4 / Td);
    if (f == Family::ZerothOrder) {
      q += 8.0 * sigma * std::cbrt(std::pow(Gam, 1.5) / Td) +
           3.0 * pw(32.0 * R * R * L * G * sigma * sigma, 0.25) * pw(Gam / Td, 0.25);
    } else {
      q += 8.0 * sigma * std::cbrt(2.0 * std::pow(Gam, 1.5) / Td) +
           3.0 * std::cbrt(32.0 * R * R * corr * G * sigma) * std::cbrt(Gam / Td);
      if (f == Family::SecondOrder)
        q += 6.0 * pw(pw(R, 4) * alpha * G * G * sigma * sigma, 0.2) *
             pw(Gam / (Td * Td), 0.2);
    }
    return q;
  }
  if (case_id != 2 && case_id != 3) throw ConstrainedError("case must be 1, 2 or 3");
  const double Lam = std::log(8.0 * Td / delta);
  double q = (R * G + 2.0 * std::sqrt(2.0) * D * G * std::sqrt(l4)) / std::sqrt(Td);
  const bool c2 = case_id == 2;
  if (f == Family::ZerothOrder) {
    q += 4.0 * pw(16.0 * R * R * G * L * sigma * sigma * (c2 ? Lam * Lam : Lam) / Td, 0.25);
  } else {
    q += 3.0 * std::cbrt(32.0 * R * R * sigma * corr * G * (c2 ? std::pow(Lam, 1.5) : Lam) /
                         Td);
    if (f == Family::SecondOrder)
      q += 5.0 * pw(alpha * pw(R, 4) * sigma * sigma * G * G * (c2 ? Lam * Lam : Lam) /
                        (Td * Td),
                    0.2);
  }
  return q;
}

double sgm_envelope(const ConstrainedSetup& s, const EstimatorConfig& config, int case_id,
                    double eta, int T, double delta) {
  EnvelopeParams p;
  p.eta = eta;
  p.B = config.batch_size;
  p.T = T;
  switch (case_id) {
    case 1: p.beta = config.beta; break;
    case 2: p.p = config.schedule.p; break;
    case 3: p.E = config.schedule.E; break;
    default: throw ConstrainedError("case must be 1, 2 or 3");
  }
  // the SGM analysis spends delta/2 on the estimator
  BoundEnvelope env = require_envelope(config.family, case_id, p, s.problem->constants(),
                                       delta / 2.0, 1.0);
  const int from = case_id == 1 ? T / 2 + 1 : 1;
  return env.sup(from, T);
}

SGMPlan sgm_configure(int case_id, Family f, const ConstrainedSetup& s, int T,
                      double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw ConstrainedError("delta must lie in (0, 1)");
  if (T < 2) throw ConstrainedError("horizon must be >= 2");
  require_constants(f, s);
  const ProblemConstants& c = s.problem->constants();
  const double R = s.R, G = s.G, sigma = c.sigma, L = c.L, alpha = c.alpha;
  const double corr = corr_constant(f, c);
  const double Td = T;
  const bool so = f == Family::SecondOrder && alpha > 0.0;

  SGMPlan plan;
  plan.case_id = case_id;
  plan.family = f;
  plan.T = T;
  plan.delta = delta;
  EstimatorConfig cfg;
  cfg.family = f;
  cfg.horizon = T;
  std::vector<std::string> violated;

  if (case_id == 1) {
    const double Gam = 2.0 * std::log(4.0 * Td / delta);
    plan.Lambda = Gam;
    double eta = std::sqrt(2.0) * R / (G * std::sqrt(Td));
    double y = 0.0;
    if (f == Family::ZerothOrder) {
      eta = std::min(eta, pw(pw(R, 6) / (32.0 * sigma * sigma * L * G * Gam), 0.25) *
                              pw(Td, -0.75));
      y = std::max(pw(Td, -2.0 / 3.0),
                   std::sqrt(R * R * L * G / (8.0 * sigma * sigma * Gam)) / std::sqrt(Td));
      if (!(Td * Gam >= R * R * L * G / (8.0 * sigma * sigma)))
        violated.push_back("T*Gamma_T >= R^2*L*G/(8*sigma^2)");
    } else {
      eta = std::min(eta, std::cbrt(pw(R, 4) / (32.0 * corr * G * sigma * Gam)) *
                              pw(Td, -2.0 / 3.0));
      y = std::max(std::cbrt(0.5),
                   std::cbrt(pw(R, 4) * corr * corr * G * G / pw(sigma, 4) / (32.0 * Gam))) *
          pw(Td, -2.0 / 3.0);
      if (!(Td * std::sqrt(Gam) > R * R * corr * G / (4.0 * std::sqrt(2.0) * sigma * sigma)))
        violated.push_back("T*Gamma_T^(1/2) > R^2*ell*G/(4*sqrt(2)*sigma^2)");
      if (so) {
        eta = std::min(eta, pw(pw(R, 6) / (32.0 * alpha * G * G * sigma * sigma * Gam), 0.2) *
                                pw(Td, -0.6));
        y = std::max(y, 0.125 *
                            pw(pw(R, 8) * alpha * alpha * pw(G, 4) / pw(sigma, 6) /
                                   pw(Gam, 3),
                               0.2) *
                            pw(Td, -0.8));
        if (!(Td * pw(Gam, 0.75) >= pw(2.0, -3.75) * pw(R * R * std::sqrt(alpha) * G / sigma,
                                                        1.5)))
          violated.push_back("T*Gamma_T^(3/4) >= 2^(-15/4)*(R^2*sqrt(alpha)*G/sigma)^(3/2)");
      }
    }
    if (!(y <= 1.0)) {
      violated.push_back("1 - beta <= 1");
      y = 1.0;
    }
    cfg.beta = 1.0 - y;
    cfg.schedule = Schedule::never();
    cfg.batch_size = 1;
    plan.eta = eta;
    plan.expected_calls = Td;
  } else if (case_id == 2 || case_id == 3) {
    const bool c2 = case_id == 2;
    const double Lam = std::log(8.0 * Td / delta);
    plan.Lambda = Lam;
    double eta = R / (G * std::sqrt(Td));
    double Bcal = 1.0;
    if (f == Family::ZerothOrder) {
      eta = std::min(eta, pw(pw(R, 6) / (256.0 * G * L * sigma * sigma *
                                         (c2 ? Lam * Lam : Lam) * pw(Td, 3)),
                             0.25));
      Bcal = std::sqrt(4.0 * sigma * sigma * (c2 ? 1.0 : Lam) * Td / (R * R * G * L));
      if (!(Td * (c2 ? 1.0 : Lam) >= R * R * G * L / (4.0 * sigma * sigma)))
        violated.push_back(c2 ? "T >= R^2*G*L/(4*sigma^2)"
                              : "T*Lambda_T >= R^2*G*L/(4*sigma^2)");
    } else {
      eta = std::min(eta, std::cbrt(pw(R, 4) / (256.0 * sigma * corr * G *
                                                (c2 ? pw(Lam, 1.5) : Lam) * Td * Td)));
      Bcal = std::cbrt(32.0 * pw(sigma, 4) * (c2 ? 1.0 : Lam) * Td * Td /
                       (pw(R, 4) * corr * corr * G * G));
      if (c2) {
        if (!(Td >= R * R * corr * G / (4.0 * std::sqrt(2.0) * sigma * sigma)))
          violated.push_back("T >= R^2*ell*G/(4*sqrt(2)*sigma^2)");
      } else if (!(Td * std::sqrt(2.0 * Lam) >= R * R * corr * G / (4.0 * sigma * sigma))) {
        violated.push_back("T*sqrt(2*Lambda_T) >= R^2*ell*G/(4*sigma^2)");
      }
      if (so) {
        eta = std::min(eta, pw(pw(R, 6) / (1024.0 * alpha * G * G * sigma * sigma *
                                           (c2 ? Lam * Lam : Lam) * pw(Td, 3)),
                               0.2));
        Bcal = std::min(Bcal, pw(32768.0 * pw(sigma, 6) * (c2 ? Lam : pw(Lam, 3)) *
                                     pw(Td, 4) / (alpha * alpha * pw(R, 8) * pw(G, 4)),
                                 0.2));
        const double lhs = pw(2.0, 1.5) * Td * Td * (c2 ? std::sqrt(Lam) : pw(Lam, 1.5));
        if (!(lhs >= alpha * pw(R, 4) * G * G / (64.0 * pw(sigma, 3))))
          violated.push_back(c2 ? "2^(3/2)*T^2*Lambda_T^(1/2) >= alpha*R^4*G^2/(64*sigma^3)"
                                : "2^(3/2)*T^2*Lambda_T^(3/2) >= alpha*R^4*G^2/(64*sigma^3)");
      }
    }
    if (!(Bcal < 1e9)) throw ConstrainedError("batch size overflow");
    const int B = std::max(1, static_cast<int>(std::ceil(Bcal)));
    cfg.beta = 1.0;
    cfg.batch_size = B;
    cfg.schedule = c2 ? Schedule::probabilistic(1.0 / B) : Schedule::periodic(B);
    plan.eta = eta;
    plan.expected_calls =
        c2 ? (2.0 - 1.0 / B) * Td : Td + (B - 1.0) * std::floor(Td / B);
  } else {
    throw ConstrainedError("case must be 1, 2 or 3");
  }
  cfg.eta = plan.eta;
  plan.estimator = cfg;
  plan.envelope_E = sgm_envelope(s, cfg, case_id, plan.eta, T, delta);
  const int Ta = case_id == 1 ? T - T / 2 : T;
  plan.epsilon = sgm_threshold(s.R, plan.eta, Ta, s.G, s.D, delta, plan.envelope_E);
  plan.predicted_Q = sgm_predicted_bound(case_id, f, s, T, delta);
  plan.admissible = violated.empty();
  for (std::size_t i = 0; i < violated.size(); ++i)
    plan.violated += (i ? "; " : "") + violated[i];
  return plan;
}

SGMResult sgm_run(const ConstrainedSetup& s, const EstimatorConfig& config, double eta,
                  int T, double delta, const RngStream& rng, const SGMOptions& opt) {
  if (s.problem == nullptr) throw ConstrainedError("setup has no problem");
  if (T < 2) throw ConstrainedError("horizon must be >= 2");
  if (!(eta > 0.0)) throw ConstrainedError("eta must be positive");
  const ConstrainedLinear& prob = *s.problem;
  const GeometrySpec& g = prob.geometry();
  const int t0 = opt.case_id == 1 ? T / 2 : 0;

  SGMResult res;
  res.envelope_E = sgm_envelope(s, config, opt.case_id, eta, T, delta);
  res.epsilon = opt.threshold_override
                    ? *opt.threshold_override
                    : sgm_threshold(s.R, eta, T - t0, s.G, s.D, delta, res.envelope_E);

  EstimatorConfig cfg = config;
  cfg.eta = eta;
  cfg.horizon = T;
  UnifiedEstimator est(prob, cfg, rng);
  Vec w = s.w_start;
  est.init(w);
  res.init_calls = est.state().oracle_calls;
  Vec sum = Vec::Zero(w.size());
  if (opt.keep_trace) res.trace.reserve(T);
  for (int t = 1; t <= T; ++t) {
    StepRecord rec = est.step(w);
    const double v = rec.v[0];
    const bool obj = v <= res.epsilon;
    if (obj && t > t0) {
      res.selected.push_back(t);
      sum += w;
    }
    if (opt.keep_trace) {
      SGMTraceRow row;
      row.t = t;
      row.v = v;
      row.h = prob.h(w);
      row.f = prob.f(w);
      row.objective_step = obj;
      row.reset = rec.reset;
      res.trace.push_back(row);
    }
    // fresh subgradient stream, disjoint from the estimator samples
    OracleSample zeta{rng.key(Domain::Zeta, static_cast<std::uint64_t>(t))};
    Vec U = obj ? prob.F_sub(w, zeta) : prob.H_sub(w, zeta);
    w = prox_step(w, U, eta, g);
  }
  res.oracle_calls = est.state().oracle_calls - res.init_calls;
  if (res.selected.empty()) {
    res.failure = "selected set is empty";
    return res;
  }
  res.success = true;
  res.w_bar = sum / static_cast<double>(res.selected.size());
  if (g.kind == GeometryKind::Simplex) res.w_bar /= res.w_bar.sum();
  res.f_gap = prob.f(res.w_bar) - s.f_star;
  res.h_value = prob.h(res.w_bar);
  res.f_ok = res.f_gap <= res.epsilon;
  res.h_ok = res.h_value <= res.epsilon + res.envelope_E;
  return res;
}

SGMResult sgm_run(const ConstrainedSetup& s, const SGMPlan& plan, const RngStream& rng,
                  bool keep_trace) {
  SGMOptions opt;
  opt.case_id = plan.case_id;
  opt.keep_trace = keep_trace;
  return sgm_run(s, plan.estimator, plan.eta, plan.T, plan.delta, rng, opt);
}

}  // namespace vrbound
