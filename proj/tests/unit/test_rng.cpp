#include <cmath>
#include <set>

#include "doctest.h"
#include "vrbound/rng.hpp"

using namespace vrbound;

TEST_SUITE("rng") {
  TEST_CASE("keys are pure functions of their coordinates") {
    RngStream a{42, 3}, b{42, 3};
    CHECK(a.key(Domain::Xi, 7, 2) == b.key(Domain::Xi, 7, 2));
    auto e1 = a.engine(Domain::Reset, 9), e2 = b.engine(Domain::Reset, 9);
    for (int i = 0; i < 100; ++i) CHECK(e1() == e2());
  }

  TEST_CASE("domains, trials, times and indices are separated") {
    std::set<std::uint64_t> keys;
    int n = 0;
    for (std::uint64_t seed : {0ull, 1ull})
      for (std::uint64_t trial : {0ull, 1ull, 2ull})
        for (Domain d : {Domain::Xi, Domain::Reset, Domain::Zeta, Domain::Path,
                         Domain::Problem, Domain::Aux})
          for (std::uint64_t t = 0; t < 20; ++t)
            for (std::uint64_t i = 0; i < 4; ++i) {
              keys.insert(counter_key(seed, trial, d, t, i));
              ++n;
            }
    CHECK(static_cast<int>(keys.size()) == n);
  }

  TEST_CASE("uniform and normal draws") {
    double s = 0.0, s2 = 0.0, u = 0.0;
    const int n = 200000;
    RngStream r{5, 0};
    for (int i = 0; i < n; ++i) {
      auto e = r.engine(Domain::Aux, i);
      double x = uniform01(e);
      REQUIRE(x >= 0.0);
      REQUIRE(x < 1.0);
      u += x;
      double z = standard_normal(e);
      s += z;
      s2 += z * z;
    }
    CHECK(std::abs(u / n - 0.5) < 5.0 * std::sqrt(1.0 / 12.0 / n));
    CHECK(std::abs(s / n) < 5.0 / std::sqrt(n));
    CHECK(std::abs(s2 / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
  }
}
