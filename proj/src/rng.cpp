#include "vrbound/rng.hpp"

#include <cmath>
#include <random>

namespace vrbound {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t counter_key(std::uint64_t seed, std::uint64_t trial, Domain domain,
                          std::uint64_t t, std::uint64_t index) {
  std::uint64_t h = mix64(seed ^ 0x5DEECE66DULL);
  h = mix64(h ^ trial);
  h = mix64(h ^ (static_cast<std::uint64_t>(domain) << 56));
  h = mix64(h ^ t);
  h = mix64(h ^ (index * 0xD6E8FEB86659FD93ULL));
  return h;
}

double uniform01(CounterEngine& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

double standard_normal(CounterEngine& eng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  return nd(eng);
}

}  // namespace vrbound
