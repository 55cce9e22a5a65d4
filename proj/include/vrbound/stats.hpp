#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace vrbound {

struct Interval {
  double low = 0.0;
  double high = 1.0;
};

// two-sided 99% normal quantile
inline constexpr double kZ99 = 2.5758293035489004;

Interval wilson_interval(std::int64_t successes, std::int64_t trials, double z = kZ99);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};
LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y);
// slope of log(y) against log(x)
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);
double spearman_rho(const std::vector<double>& x, const std::vector<double>& y);

double mean(const std::vector<double>& v);
double stddev(const std::vector<double>& v);  // sample std (n - 1)

// Runs fn(i) for i in [0, n) on up to `workers` threads. fn must only write to
// slot i of caller-owned storage so that results do not depend on scheduling.
void parallel_for(std::int64_t n, int workers, const std::function<void(std::int64_t)>& fn);

}  // namespace vrbound
