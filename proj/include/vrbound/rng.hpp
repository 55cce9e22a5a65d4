#pragma once

#include <cstdint>
#include <limits>

namespace vrbound {

// Counter-based randomness: every draw is a pure function of
// (master seed, trial, stream domain, t, index).

std::uint64_t mix64(std::uint64_t x);

enum class Domain : std::uint32_t {
  Xi = 1,       // estimator samples
  Reset = 2,    // reset coin flips
  Zeta = 3,     // subgradient samples (constrained runs)
  Path = 4,     // synthetic iterate paths
  Problem = 5,  // random problem instances
  Aux = 6,
};

std::uint64_t counter_key(std::uint64_t seed, std::uint64_t trial, Domain domain,
                          std::uint64_t t, std::uint64_t index);

// UniformRandomBitGenerator over a single key; usable with <random> distributions.
class CounterEngine {
 public:
  using result_type = std::uint64_t;
  explicit CounterEngine(std::uint64_t key) : key_(key) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() { return mix64(key_ + (++ctr_) * 0x9E3779B97F4A7C15ULL); }

 private:
  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
};

// 53-bit uniform in [0,1)
double uniform01(CounterEngine& eng);
double standard_normal(CounterEngine& eng);

struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t trial = 0;

  std::uint64_t key(Domain d, std::uint64_t t, std::uint64_t index = 0) const {
    return counter_key(seed, trial, d, t, index);
  }
  CounterEngine engine(Domain d, std::uint64_t t, std::uint64_t index = 0) const {
    return CounterEngine(key(d, t, index));
  }
};

}  // namespace vrbound
