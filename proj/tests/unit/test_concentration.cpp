#include <cmath>

#include "doctest.h"
#include "vrbound/concentration.hpp"

using namespace vrbound;

namespace {

MartingaleSpec spec(int d, bool simplex, ProxySchedule s, int n = 100, double sigma0 = 1.0) {
  MartingaleSpec m;
  m.dimension = d;
  m.geometry = simplex ? GeometrySpec::simplex(d) : GeometrySpec::euclidean_free(d);
  m.n = n;
  m.schedule = s;
  m.sigma0 = sigma0;
  return m;
}

}  // namespace

TEST_SUITE("concentration") {
  TEST_CASE("proxy schedules") {
    auto m = spec(3, false, ProxySchedule::Decaying, 10, 2.0);
    CHECK(proxy_at(m, 4, Vec::Zero(3)) == 1.0);
    m.schedule = ProxySchedule::StateDependent;
    CHECK(proxy_at(m, 1, Vec::Zero(3)) == 1.0);
    CHECK(proxy_at(m, 1, Vec::Constant(3, 100.0)) == 4.0);
    for (auto k : {ProxySchedule::Constant, ProxySchedule::Decaying, ProxySchedule::StateDependent})
      CHECK(proxy_schedule_from_string(to_string(k)) == k);
  }

  TEST_CASE("degenerate windows of the masked sum") {
    auto m = spec(4, false, ProxySchedule::Constant, 30);
    auto p = simulate_martingale(m, RngStream{1, 0});
    CHECK(windowed_sum(p, 7, 7).norm() == 0.0);
    CHECK(masked_sum(p, 7, 7).norm() == 0.0);
    CHECK((masked_sum(p, 0, 30) - p.M).norm() <= 1e-12);
    CHECK((windowed_sum(p, 0, 30) - p.M).norm() <= 1e-12);
    CHECK(p.budget == doctest::Approx(30.0));
  }

  TEST_CASE("masked sum identity at random stopping pairs") {
    for (bool simplex : {false, true}) {
      auto m = spec(5, simplex, ProxySchedule::StateDependent, 100);
      m.s_level = 0.6;
      m.t_level = 1.5;
      auto r = masked_sum_identity(m, 1000, 3, 2);
      CHECK(r.trials == 1000);
      CHECK(r.max_discrepancy == 0.0);
      CHECK(r.nonempty_windows > 100);
    }
  }

  TEST_CASE("zero proxy gives a zero martingale") {
    auto m = spec(10, false, ProxySchedule::Constant, 50, 0.0);
    auto r = freedman_violation_rate(m, 1.0, 1.0, 500, 4);
    CHECK(r.rate == 0.0);
    CHECK(simulate_martingale(m, RngStream{0, 0}).M.norm() == 0.0);
  }

  TEST_CASE("gamma = 0 gives the trivial bound") {
    auto m = spec(2, false, ProxySchedule::Constant, 10);
    auto r = freedman_violation_rate(m, 10.0, 0.0, 200, 5);
    CHECK(r.bound == 1.0);
    CHECK(r.rate <= r.bound);
  }

  TEST_CASE("violation rates stay below exp(-gamma^2/3)") {
    const double delta = 0.05;
    const double gamma = std::sqrt(3.0 * std::log(1.0 / delta));
    for (auto sch : {ProxySchedule::Constant, ProxySchedule::Decaying, ProxySchedule::StateDependent})
      for (bool simplex : {false, true}) {
        auto m = spec(10, simplex, sch, 100);
        double V = 0.0;
        for (int t = 1; t <= m.n; ++t) {
          const double s = sch == ProxySchedule::StateDependent ? 2.0 : proxy_at(m, t, Vec::Zero(10));
          V += s * s;
        }
        auto r = freedman_violation_rate(m, V, gamma, 4000, 6, 2);
        CAPTURE(to_string(sch));
        CHECK(r.bound == doctest::Approx(delta));
        CHECK(r.rate <= delta);
        CHECK(r.ci_low <= delta);
      }
  }

  TEST_CASE("worker count does not change the result") {
    auto m = spec(6, true, ProxySchedule::StateDependent, 60);
    auto a = freedman_violation_rate(m, 60.0, 0.5, 300, 8, 1);
    auto b = freedman_violation_rate(m, 60.0, 0.5, 300, 8, 3);
    CHECK(a.violations == b.violations);
  }

  TEST_CASE("input validation") {
    auto m = spec(3, false, ProxySchedule::Constant, 10);
    CHECK_THROWS(freedman_violation_rate(m, 0.0, 1.0, 10, 0));
    CHECK_THROWS(freedman_violation_rate(m, 1.0, -1.0, 10, 0));
    m.geometry = GeometrySpec::euclidean_free(4);
    CHECK_THROWS(freedman_violation_rate(m, 1.0, 1.0, 10, 0));
  }
}
