#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vrbound/geometry.hpp"
#include "vrbound/rng.hpp"
#include "vrbound/stats.hpp"

namespace vrbound {

enum class ProxySchedule { Constant, Decaying, StateDependent };
std::string to_string(ProxySchedule s);
ProxySchedule proxy_schedule_from_string(const std::string& s);

struct MartingaleSpec {
  int dimension = 10;
  GeometrySpec geometry = GeometrySpec::euclidean_free(10);
  int n = 100;
  ProxySchedule schedule = ProxySchedule::Constant;
  double sigma0 = 1.0;
  // stopping pair for the masking tests: S is the first crossing of
  // |M| >= s_level, T the first crossing of |M| >= t_level after S (else n)
  double s_level = 0.0;
  double t_level = 0.0;
  void validate() const;
};

// Predictable proxy Sigma_t given M_{t-1} (t >= 1).
double proxy_at(const MartingaleSpec& spec, int t, const Vec& M_prev);

struct MartingalePath {
  std::vector<Vec> increments;  // Y_1..Y_n
  std::vector<double> proxies;  // Sigma_1..Sigma_n
  Vec M;                        // M_n
  double budget = 0.0;          // sum Sigma_t^2
};

MartingalePath simulate_martingale(const MartingaleSpec& spec, const RngStream& rng);

struct FreedmanReport {
  double gamma = 0.0;
  double bound = 1.0;  // exp(-gamma^2 / 3)
  double rate = 0.0;
  double ci_low = 0.0;
  double ci_high = 1.0;
  std::int64_t trials = 0;
  std::int64_t violations = 0;
  double V = 0.0;
};

// Fraction of trials with |M_n| >= (sqrt(kappa) + gamma) sqrt(V) and V_n^2 <= V.
FreedmanReport freedman_violation_rate(const MartingaleSpec& spec, double V, double gamma,
                                       std::int64_t trials, std::uint64_t seed,
                                       int workers = 1);

struct MaskedSumReport {
  double max_discrepancy = 0.0;
  std::int64_t trials = 0;
  std::int64_t nonempty_windows = 0;
};

// Windowed sum over (S, T] against the full-horizon masked sum.
MaskedSumReport masked_sum_identity(const MartingaleSpec& spec, std::int64_t trials,
                                    std::uint64_t seed, int workers = 1);

struct StoppingPair {
  int S = 0;
  int T = 0;
};
StoppingPair stopping_times(const MartingaleSpec& spec, const MartingalePath& path);
Vec windowed_sum(const MartingalePath& path, int S, int T);
Vec masked_sum(const MartingalePath& path, int S, int T);

}  // namespace vrbound
