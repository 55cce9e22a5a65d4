#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "support/oracles.hpp"
#include "vrbound/bounds.hpp"
#include "vrbound/concentration.hpp"
#include "vrbound/constrained.hpp"
#include "vrbound/experiment.hpp"
#include "vrbound/optimizer.hpp"
#include "vrbound/stats.hpp"

using namespace vrbound;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  std::string id;
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

int g_workers = 1;

// ------------------------------------------------------------------ 1

Vec random_point(std::mt19937_64& g, const GeometrySpec& s) {
  if (s.kind == GeometryKind::Simplex) return oracle_ref::random_simplex_point(g, s.dimension);
  std::uniform_real_distribution<double> U(-0.99, 0.99);
  Vec w(s.dimension);
  for (int i = 0; i < s.dimension; ++i) w[i] = U(g);
  return w;
}

std::vector<Outcome> criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = 10000;
  std::mt19937_64 g(2024);
  std::uniform_real_distribution<double> E(0.01, 2.0);
  double worst = 0.0, worst_numeric = 0.0;
  for (const auto& s : {GeometrySpec::euclidean_free(5), GeometrySpec::box(5, -1.0, 1.0),
                        GeometrySpec::simplex(5)}) {
    for (int k = 0; k < n; ++k) {
      Vec w = random_point(g, s);
      Vec u1 = oracle_ref::random_vec(g, 5, 1.5), u2 = oracle_ref::random_vec(g, 5, 1.5);
      const double eta = E(g), a = E(g), eta2 = eta + E(g);
      Vec P1 = prox_map(w, u1, eta, s), P2 = prox_map(w, u2, eta, s);
      const double pn = primal_norm(P1 - P2, s);
      const double ip = pairing(u1 - u2, P1 - P2);
      const double du = dual_norm(u1 - u2, s);
      std::vector<double> slack;
      slack.push_back(pn * pn - ip);
      slack.push_back(ip - du * pn);
      slack.push_back(pn - du);
      Vec lhs = prox_map(w, a * u1, eta, s), rhs = a * prox_map(w, u1, a * eta, s);
      slack.push_back((lhs - rhs).cwiseAbs().maxCoeff() / (1.0 + rhs.norm()));
      Vec P1b = prox_map(w, u1, eta2, s);
      const double gap = primal_norm(eta2 * P1b - eta * P1, s);
      slack.push_back(pairing(u1, eta * P1) + gap * gap / (eta2 - eta) - pairing(u1, eta2 * P1b));
      Vec d = oracle_ref::random_vec(g, 5, 0.3);
      if (dual_norm(u1 + d, s) > 1e-9 && dual_norm(u1, s) > 1e-9) {
        const double l = pairing(u1, prox_map(w, (u1 + d) / dual_norm(u1 + d, s), eta, s));
        const double r = 0.25 * pairing(u1, prox_map(w, u1 / dual_norm(u1, s), eta / 2, s)) -
                         2.0 * dual_norm(d, s);
        slack.push_back(r - l);
      }
      for (double x : slack) worst = std::max(worst, x);
      if (s.kind == GeometryKind::Simplex) {
        Vec num = oracle_ref::simplex_prox_numeric(w, u1, eta);
        worst_numeric = std::max(worst_numeric,
                                 (prox_step(w, u1, eta, s) - num).cwiseAbs().maxCoeff());
      }
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = worst <= 1e-9 && worst_numeric <= 1e-6 && secs < 10.0;
  return {{"1", ok,
           fmt("prox lemma on 3x%d instances: worst slack %.2e (tol 1e-9), simplex vs numeric "
               "prox %.2e (tol 1e-6), %.1f s (limit 10 s)",
               n, worst, worst_numeric, secs)}};
}

// ------------------------------------------------------------------ 2

std::vector<Outcome> criterion2() {
  std::vector<Outcome> out;
  MartingaleSpec m;
  m.dimension = 10;
  m.geometry = GeometrySpec::euclidean_free(10);
  m.n = 100;
  m.schedule = ProxySchedule::Constant;
  m.sigma0 = 1.0;
  const double V = 100.0;
  bool ok = true;
  std::string detail;
  for (double delta : {0.1, 0.05}) {
    const double gamma = std::sqrt(3.0 * std::log(1.0 / delta));
    auto r = freedman_violation_rate(m, V, gamma, 20000, 17, g_workers);
    ok = ok && r.ci_high <= delta;
    detail += fmt("delta %.2f: rate %.5f, wilson99 upper %.5f; ", delta, r.rate, r.ci_high);
  }
  out.push_back({"2a", ok, "Freedman coverage, d=10, n=100, 20000 trials: " + detail});
  const double gamma = std::sqrt(3.0 * std::log(2.0));
  auto p = freedman_violation_rate(m, V, gamma, 20000, 18, g_workers);
  std::vector<double> ratio(2000);
  for (int i = 0; i < 2000; ++i)
    ratio[i] = dual_norm(simulate_martingale(m, RngStream{19, static_cast<std::uint64_t>(i)}).M,
                         m.geometry) / std::sqrt(V);
  out.push_back({"2b", p.rate > 0.01,
                 fmt("Freedman power at exp(-gamma^2/3)=0.5: rate %.5f (needs > 0.01); the "
                     "threshold is %.2f sqrt(V) while mean |M_n| is %.2f sqrt(V) under "
                     "certified increments",
                     p.rate, 1.0 + gamma, mean(ratio))});
  return out;
}

// ------------------------------------------------------------------ 3

std::vector<Outcome> criterion3() {
  MartingaleSpec m;
  m.dimension = 6;
  m.geometry = GeometrySpec::euclidean_free(6);
  m.n = 100;
  m.schedule = ProxySchedule::StateDependent;
  m.s_level = 0.8;
  m.t_level = 2.0;
  auto r = masked_sum_identity(m, 1000, 5, g_workers);
  return {{"3", r.max_discrepancy == 0.0,
           fmt("masked sum identity: max discrepancy %.3g over %lld trials (%lld nonempty windows)",
               r.max_discrepancy, static_cast<long long>(r.trials),
               static_cast<long long>(r.nonempty_windows))}};
}

// ------------------------------------------------------------------ 4

std::vector<Outcome> criterion4() {
  NoisyQuadratic q(GeometrySpec::box(8, -1.0, 1.0), random_spd_matrix(8, 0.5, 1.0, 11), 0.1,
                   0.5, 1e9);
  const int T = 512, trials = 1000;
  const double delta = 0.1;
  Vec w0 = Vec::Constant(8, 0.5);
  bool ok = true;
  std::string detail;
  for (int f = 0; f < 3; ++f)
    for (int cs = 1; cs <= 3; ++cs) {
      EstimatorConfig c;
      c.family = static_cast<Family>(f);
      c.eta = 0.02;
      c.horizon = T;
      EnvelopeParams p;
      p.eta = c.eta;
      p.T = T;
      if (cs == 1) {
        c.beta = 0.9;
        c.batch_size = 1;
        p.beta = 0.9;
      } else {
        c.beta = 1.0;
        c.batch_size = 16;
        c.schedule = cs == 2 ? Schedule::probabilistic(1.0 / 16) : Schedule::periodic(16);
        p.p = 1.0 / 16;
        p.E = 16;
      }
      p.B = c.batch_size;
      auto env = require_envelope(c.family, cs, p, q.constants(), delta, 1.0);
      std::vector<double> bound(T);
      for (int t = 0; t < T; ++t) bound[t] = env(t);
      std::vector<std::int64_t> exceed(trials, 0);
      parallel_for(trials, g_workers, [&](std::int64_t i) {
        auto run = mirror_descent_run(q, c, w0, RngStream{404, static_cast<std::uint64_t>(i)});
        for (int t = 0; t < T; ++t) exceed[i] += run.error_norms[t] > bound[t];
      });
      std::int64_t total = 0;
      for (auto e : exceed) total += e;
      auto ci = wilson_interval(total, static_cast<std::int64_t>(trials) * T);
      ok = ok && ci.high <= delta;
      detail += fmt("%s %.4f; ", to_string(env.row()).c_str(), ci.high);
    }
  return {{"4", ok, "envelope coverage, wilson99 upper exceedance per row (<= 0.1): " + detail}};
}

// ------------------------------------------------------------------ 5

std::vector<Outcome> criterion5() {
  NoisyQuadratic q(GeometrySpec::euclidean_free(4), random_spd_matrix(4, 0.2, 1.5, 21), 0.5,
                   0.3, 2.0);
  std::mt19937_64 g(8);
  std::vector<Vec> path{Vec::Constant(4, 0.2)};
  const double eta = 0.1;
  for (int i = 1; i < 400; ++i) {
    Vec d = oracle_ref::random_vec(g, 4);
    path.push_back(path.back() + eta * d / d.norm());
  }
  double worst_identity = 0.0;
  for (int f = 0; f < 3; ++f) {
    EstimatorConfig c;
    c.family = static_cast<Family>(f);
    c.beta = 0.8;
    c.eta = eta;
    c.schedule = Schedule::probabilistic(0.05);
    auto recs = run_estimation_trajectory(q, path, c, RngStream{3, 0});
    for (size_t t = 1; t < recs.size(); ++t)
      if (!recs[t].reset)
        worst_identity = std::max(
            worst_identity, (0.8 * recs[t - 1].e + recs[t].innovation - recs[t].e).norm());
  }
  bool bias_ok = true;
  std::string detail;
  const int replays = 10000;
  for (int f = 0; f < 3; ++f) {
    const Family fam = static_cast<Family>(f);
    EstimatorConfig c;
    c.family = fam;
    c.beta = 0.6;
    c.eta = eta;
    UnifiedEstimator est(q, c, RngStream{11, 0});
    est.init(path[0]);
    for (int t = 1; t < 10; ++t) est.step(path[t]);
    RngStream rr{12, 0};
    Vec sum = Vec::Zero(4), sum2 = Vec::Zero(4);
    for (int k = 0; k < replays; ++k) {
      UnifiedEstimator copy = est;
      auto r = copy.step_with(path[10], false, draw_sample(rr, k));
      sum += r.innovation;
      sum2 += r.innovation.cwiseProduct(r.innovation);
    }
    Vec mean = sum / replays;
    const double sd = (sum2 / replays - mean.cwiseProduct(mean)).cwiseSqrt().norm();
    const double se = sd / std::sqrt(replays);
    const double move = (path[10] - path[9]).norm();
    double limit = 0.0;
    if (fam == Family::ZerothOrder) limit = 0.6 * q.constants().L * move + 5 * se;
    if (fam == Family::FirstOrder) limit = 5 * sd / 100;
    if (fam == Family::SecondOrder)
      limit = 0.5 * q.constants().alpha * 0.6 * move * move + 5 * se;
    bias_ok = bias_ok && mean.norm() <= limit;
    detail += fmt("%s |mean I_t| %.4f <= %.4f; ", to_string(fam).c_str(), mean.norm(), limit);
  }
  return {{"5", worst_identity <= 1e-12 && bias_ok,
           fmt("recursion identity max residual %.2e (tol 1e-12); ", worst_identity) + detail}};
}

// ------------------------------------------------------------------ 6

std::vector<Outcome> criterion6() {
  std::mt19937_64 g(606);
  std::uniform_real_distribution<double> L(-2.0, 2.0), LT(2.0, 6.0);
  auto draw = [&] { return std::pow(10.0, L(g)); };
  int failures = 0;
  long checked = 0;
  for (int f = 0; f < 3; ++f) {
    const Family fam = static_cast<Family>(f);
    int n1 = 0, n2 = 0;
    while (n1 < 1000 || n2 < 1000) {
      LemmaCoefficients c{draw(), draw(), draw(), draw(), draw(), draw()};
      const double T = std::pow(10.0, LT(g));
      auto s1 = select_params_case1(c, fam, T);
      if (s1.admissible && n1 < 1000) {
        ++n1;
        ++checked;
        failures += !(lemma_objective_case1(fam, c, s1.eta, s1.one_minus_beta, T) <=
                      s1.predicted_bound);
      }
      c.C3 = 0.0;
      auto s2 = select_params_case23(c, fam, T);
      if (s2.admissible && n2 < 1000) {
        ++n2;
        ++checked;
        failures += !(lemma_objective_case23(fam, c, s2.eta, s2.p, T) <= s2.predicted_bound);
      }
    }
  }
  int horizon_failures = 0;
  std::uniform_real_distribution<double> Q(0.2, 3.0), Ep(-3.0, -0.3), Dp(-6.0, -0.1);
  for (int k = 0; k < 1000; ++k) {
    const double q = Q(g), eps = std::pow(10.0, Ep(g)), delta = std::pow(10.0, Dp(g));
    const long long T = min_horizon(eps, delta, q);
    horizon_failures += !(std::pow(std::log(T / delta), q) / T <= eps);
  }
  return {{"6", failures == 0 && horizon_failures == 0,
           fmt("selection lemmas: %d violations in %ld admissible tuples; min_horizon: %d "
               "violations in 1000",
               failures, checked, horizon_failures)}};
}

// ------------------------------------------------------------------ 7

std::vector<Outcome> criterion7() {
  NoisyQuadratic q(GeometrySpec::euclidean_free(8), random_spd_matrix(8, 0.5, 1.0, 11), 0.1,
                   0.5, 10.0);
  q.set_delta_f(1.0);
  Vec w0 = Vec::Constant(8, 0.5 / std::sqrt(8.0));
  struct Row {
    Family f;
    int cs;
    double target;
  };
  const std::vector<Row> rows{{Family::ZerothOrder, 1, -0.25},
                              {Family::FirstOrder, 1, -1.0 / 3},
                              {Family::FirstOrder, 2, -1.0 / 3},
                              {Family::FirstOrder, 3, -1.0 / 3}};
  const int seeds = 50;
  bool ok = true;
  std::string detail;
  for (const auto& r : rows) {
    std::vector<double> Ts, ws;
    for (int T = 256; T <= 8192; T *= 2) {
      auto tc = configure_from_table(r.f, r.cs, q.constants(), T, 0.1, 1.0);
      std::vector<double> w(seeds);
      parallel_for(seeds, g_workers, [&](std::int64_t s) {
        w[s] = mirror_descent_run(q, tc.config, w0, RngStream{700, static_cast<std::uint64_t>(s)})
                   .avg_witness;
      });
      Ts.push_back(T);
      ws.push_back(mean(w));
    }
    const double slope = loglog_slope(Ts, ws);
    const bool in = std::abs(slope - r.target) <= 0.10;
    ok = ok && in;
    detail += fmt("%s %.3f (target %.2f); ", to_string(*row_for(r.f, r.cs)).c_str(), slope,
                  r.target);
  }
  return {{"7", ok, "witness slopes over T=2^8..2^13, 50 seeds: " + detail}};
}

// ------------------------------------------------------------------ 8

std::vector<Outcome> criterion8() {
  Vec c(4), a(4);
  c << 1, -0.5, 0.3, -1;
  a << 0.5, 1, -0.2, 0.8;
  ConstrainedLinear p(GeometrySpec::box(4, -1.0, 1.0), c, a, -0.5, 0.5, 0.5);
  auto setup = make_setup(p);
  const int T = 4096, runs = 200;
  auto plan = sgm_configure(2, Family::FirstOrder, setup, T, 0.05);
  std::vector<int> good(runs, 0);
  std::vector<double> calls(runs, 0.0);
  parallel_for(runs, g_workers, [&](std::int64_t i) {
    auto r = sgm_run(setup, plan, RngStream{7, static_cast<std::uint64_t>(i)});
    good[i] = r.success && r.f_ok && r.h_ok;
    calls[i] = static_cast<double>(r.oracle_calls);
  });
  int n_ok = 0;
  for (int x : good) n_ok += x;
  const double expected = (2.0 - 1.0 / plan.estimator.batch_size) * T;
  const double ratio = mean(calls) / expected;
  const bool ok = plan.admissible && n_ok >= 0.95 * runs && std::abs(ratio - 1.0) <= 0.02;
  return {{"8", ok,
           fmt("SGM page plan (B=%d, eta=%.4g, eps=%.4g, E=%.4g): %d/%d runs succeed; mean "
               "oracle calls / (2-1/B)T = %.4f",
               plan.estimator.batch_size, plan.eta, plan.epsilon, plan.envelope_E, n_ok, runs,
               ratio)}};
}

// ------------------------------------------------------------------ 9

std::vector<Outcome> criterion9() {
  bool ok = true;
  std::string detail;
  const fs::path base = fs::temp_directory_path() / "vrbound_acceptance_det";
  for (const char* name : {"estimate_storm", "md_momentum", "sweep_storm", "sgm_page", "freedman"}) {
    auto cfg = load_config(std::string(VRBOUND_CONFIG_DIR) + "/" + name + ".json");
    std::vector<std::string> dumps;
    for (int workers : {1, 2, 4}) {
      RunOptions o;
      o.out_dir = (base / (std::string(name) + "_" + std::to_string(workers))).string();
      o.workers = workers;
      o.plots = false;
      Json r = run_experiment(cfg, o);
      r.erase("timestamp");
      dumps.push_back(r.dump());
    }
    const bool same = dumps[0] == dumps[1] && dumps[1] == dumps[2];
    ok = ok && same;
    detail += fmt("%s %s; ", name, same ? "identical" : "DIFFERS");
  }
  fs::remove_all(base);
  return {{"9", ok, "reports at 1, 2 and 4 workers: " + detail}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::string only;
  app.add_option("--criterion", only, "run a single criterion (1-9, 2a, 2b)");
  app.add_option("--workers", g_workers, "worker threads")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  const std::map<std::string, std::function<std::vector<Outcome>()>> all{
      {"1", criterion1}, {"2", criterion2}, {"3", criterion3}, {"4", criterion4},
      {"5", criterion5}, {"6", criterion6}, {"7", criterion7}, {"8", criterion8},
      {"9", criterion9}};
  std::string key = only, sub;
  if (only == "2a" || only == "2b") {
    key = "2";
    sub = only;
  }
  if (!only.empty() && !all.count(key)) {
    std::fprintf(stderr, "unknown criterion %s\n", only.c_str());
    return 2;
  }
  bool all_pass = true;
  for (const auto& [id, fn] : all) {
    if (!key.empty() && id != key) continue;
    const auto t0 = std::chrono::steady_clock::now();
    auto outcomes = fn();
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (const auto& o : outcomes) {
      if (!sub.empty() && o.id != sub) continue;
      all_pass = all_pass && o.pass;
      std::printf("criterion %-2s %s  %s [%.1f s]\n", o.id.c_str(), o.pass ? "PASS" : "FAIL",
                  o.detail.c_str(), secs);
      std::fflush(stdout);
    }
  }
  return all_pass ? 0 : 1;
}
