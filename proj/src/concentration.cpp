#include "vrbound/concentration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vrbound/oracle.hpp"

namespace vrbound {

std::string to_string(ProxySchedule s) {
  switch (s) {
    case ProxySchedule::Constant: return "constant";
    case ProxySchedule::Decaying: return "decaying";
    case ProxySchedule::StateDependent: return "state_dependent";
  }
  return "?";
}

ProxySchedule proxy_schedule_from_string(const std::string& s) {
  if (s == "constant") return ProxySchedule::Constant;
  if (s == "decaying") return ProxySchedule::Decaying;
  if (s == "state_dependent") return ProxySchedule::StateDependent;
  throw std::invalid_argument("unknown proxy schedule: " + s);
}

void MartingaleSpec::validate() const {
  if (dimension < 1 || geometry.dimension != dimension)
    throw std::invalid_argument("martingale dimension must match its geometry");
  if (n < 0) throw std::invalid_argument("horizon must be nonnegative");
  if (!(sigma0 >= 0.0)) throw std::invalid_argument("sigma0 must be nonnegative");
}

double proxy_at(const MartingaleSpec& spec, int t, const Vec& M_prev) {
  switch (spec.schedule) {
    case ProxySchedule::Constant: return spec.sigma0;
    case ProxySchedule::Decaying: return spec.sigma0 / std::sqrt(static_cast<double>(t));
    case ProxySchedule::StateDependent: {
      // shaped like eta |U|: grows with the distance already travelled, capped
      const double scale = spec.sigma0 * std::sqrt(static_cast<double>(t));
      const double r = dual_norm(M_prev, spec.geometry) / scale;
      return spec.sigma0 * std::clamp(0.5 + r, 0.5, 2.0);
    }
  }
  return spec.sigma0;
}

MartingalePath simulate_martingale(const MartingaleSpec& spec, const RngStream& rng) {
  MartingalePath path;
  path.M = Vec::Zero(spec.dimension);
  path.increments.reserve(spec.n);
  path.proxies.reserve(spec.n);
  for (int t = 1; t <= spec.n; ++t) {
    const double sig = proxy_at(spec, t, path.M);
    Vec y = Vec::Zero(spec.dimension);
    if (sig > 0.0) {
      const double s = subgaussian_std_for_proxy(sig, spec.dimension);
      CounterEngine eng = rng.engine(Domain::Aux, static_cast<std::uint64_t>(t));
      for (int i = 0; i < spec.dimension; ++i) y[i] = s * standard_normal(eng);
    }
    path.M += y;
    path.budget += sig * sig;
    path.increments.push_back(std::move(y));
    path.proxies.push_back(sig);
  }
  return path;
}

FreedmanReport freedman_violation_rate(const MartingaleSpec& spec, double V, double gamma,
                                       std::int64_t trials, std::uint64_t seed,
                                       int workers) {
  spec.validate();
  if (!(V > 0.0)) throw std::invalid_argument("V must be positive");
  if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be nonnegative");
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  const double thresh = (std::sqrt(spec.geometry.kappa) + gamma) * std::sqrt(V);
  std::vector<unsigned char> hit(static_cast<size_t>(trials), 0);
  parallel_for(trials, workers, [&](std::int64_t i) {
    MartingalePath p = simulate_martingale(spec, RngStream{seed, static_cast<std::uint64_t>(i)});
    hit[static_cast<size_t>(i)] =
        dual_norm(p.M, spec.geometry) >= thresh && p.budget <= V ? 1 : 0;
  });
  FreedmanReport r;
  r.gamma = gamma;
  r.bound = std::exp(-gamma * gamma / 3.0);
  r.trials = trials;
  r.V = V;
  for (unsigned char h : hit) r.violations += h;
  r.rate = static_cast<double>(r.violations) / static_cast<double>(trials);
  Interval ci = wilson_interval(r.violations, trials);
  r.ci_low = ci.low;
  r.ci_high = ci.high;
  return r;
}

StoppingPair stopping_times(const MartingaleSpec& spec, const MartingalePath& path) {
  StoppingPair st{spec.n, spec.n};
  Vec M = Vec::Zero(spec.dimension);
  bool have_s = false;
  for (int t = 1; t <= spec.n; ++t) {
    M += path.increments[t - 1];
    const double nm = dual_norm(M, spec.geometry);
    if (!have_s && nm >= spec.s_level) {
      st.S = t;
      have_s = true;
    } else if (have_s && nm >= spec.t_level) {
      st.T = t;
      break;
    }
  }
  if (!have_s) st.S = st.T = spec.n;
  return st;
}

Vec windowed_sum(const MartingalePath& path, int S, int T) {
  Vec acc = Vec::Zero(path.M.size());
  for (int n = S + 1; n <= T; ++n) acc += path.increments[n - 1];
  return acc;
}

Vec masked_sum(const MartingalePath& path, int S, int T) {
  Vec acc = Vec::Zero(path.M.size());
  const int N = static_cast<int>(path.increments.size());
  for (int n = 1; n <= N; ++n) {
    const double mask = (S < n && n <= T) ? 1.0 : 0.0;
    acc += mask * path.increments[n - 1];
  }
  return acc;
}

MaskedSumReport masked_sum_identity(const MartingaleSpec& spec, std::int64_t trials,
                                    std::uint64_t seed, int workers) {
  spec.validate();
  std::vector<double> disc(static_cast<size_t>(trials), 0.0);
  std::vector<unsigned char> nonempty(static_cast<size_t>(trials), 0);
  parallel_for(trials, workers, [&](std::int64_t i) {
    MartingalePath p = simulate_martingale(spec, RngStream{seed, static_cast<std::uint64_t>(i)});
    StoppingPair st = stopping_times(spec, p);
    Vec a = windowed_sum(p, st.S, st.T);
    Vec b = masked_sum(p, st.S, st.T);
    disc[static_cast<size_t>(i)] = (a - b).cwiseAbs().maxCoeff();
    nonempty[static_cast<size_t>(i)] = st.T > st.S ? 1 : 0;
  });
  MaskedSumReport r;
  r.trials = trials;
  for (size_t i = 0; i < disc.size(); ++i) {
    r.max_discrepancy = std::max(r.max_discrepancy, disc[i]);
    r.nonempty_windows += nonempty[i];
  }
  return r;
}

}  // namespace vrbound
