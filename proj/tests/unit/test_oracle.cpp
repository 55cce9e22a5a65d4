#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "support/oracles.hpp"
#include "vrbound/oracle.hpp"

using namespace vrbound;

namespace {

// E exp(X^2 / proxy^2) for X ~ N(0, s^2), trapezoid rule on +-40 s
double gaussian_mgf_quadrature(double s, double proxy) {
  const int n = 400000;
  const double lim = 40.0 * s, h = 2.0 * lim / n;
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = -lim + i * h;
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    acc += w * std::exp(x * x / (proxy * proxy) - 0.5 * x * x / (s * s));
  }
  return acc * h / (s * std::sqrt(2.0 * M_PI));
}

Mat diag(std::initializer_list<double> v) {
  Vec d(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) d[i++] = x;
  return d.asDiagonal();
}

}  // namespace

TEST_SUITE("oracle") {
  TEST_CASE("proxy certification for isotropic Gaussians") {
    const double sigma = 2.0;
    const double s = subgaussian_std_for_proxy(sigma, 1);
    CHECK(s * s == doctest::Approx(3.0 / 8.0 * sigma * sigma).epsilon(1e-14));
    for (int d : {1, 2, 5, 10}) {
      const double sd = subgaussian_std_for_proxy(sigma, d);
      const double m = std::pow(gaussian_mgf_quadrature(sd, sigma), d);
      CAPTURE(d);
      CHECK(m == doctest::Approx(2.0).epsilon(1e-6));
    }
    // Monte Carlo at d = 10, where the squared moment is finite
    const double sd = subgaussian_std_for_proxy(1.0, 10);
    std::mt19937_64 g(3);
    std::normal_distribution<double> N(0.0, sd);
    double acc = 0.0;
    const int n = 400000;
    for (int k = 0; k < n; ++k) {
      double r2 = 0.0;
      for (int i = 0; i < 10; ++i) {
        const double z = N(g);
        r2 += z * z;
      }
      acc += std::exp(r2);
    }
    CHECK(acc / n <= 2.02);
    CHECK_THROWS_AS(subgaussian_std_for_proxy(0.0, 1), OracleError);
  }

  TEST_CASE("general Gaussian proxy solves the moment equation") {
    std::vector<double> ev{0.3, 1.0, 0.05, 0.0};
    const double x = gaussian_variance_proxy(ev);
    double m = 1.0;
    for (double l : ev)
      if (l > 0.0) m *= gaussian_mgf_quadrature(std::sqrt(l), x);
    CHECK(m == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(gaussian_variance_proxy({0.0, 0.0}) == 0.0);
    CHECK(bounded_variance_proxy(1.0) == doctest::Approx(1.0 / std::sqrt(std::log(2.0))));
  }

  TEST_CASE("noisy quadratic is unbiased with the certified constants") {
    Mat A = random_spd_matrix(3, 0.5, 2.0, 4);
    NoisyQuadratic q(GeometrySpec::euclidean_free(3), A, 0.4, 0.2, 2.0);
    Eigen::SelfAdjointEigenSolver<Mat> es(A);
    CHECK(es.eigenvalues().minCoeff() == doctest::Approx(0.5));
    CHECK(es.eigenvalues().maxCoeff() == doctest::Approx(2.0));
    CHECK(q.constants().L == doctest::Approx(2.0));
    CHECK(q.constants().ell == doctest::Approx(0.4 * std::sqrt(8.0 / 3.0)));
    CHECK(q.constants().alpha == 0.0);

    Vec w(3);
    w << 0.5, -1.0, 0.25;
    RngStream rng{9, 0};
    const int n = 40000;
    Vec sum = Vec::Zero(3), sum2 = Vec::Zero(3);
    for (int k = 0; k < n; ++k) {
      Vec G = q.eval_G(w, draw_sample(rng, k));
      sum += G;
      sum2 += G.cwiseProduct(G);
    }
    Vec mean = sum / n;
    Vec var = sum2 / n - mean.cwiseProduct(mean);
    Vec g = q.eval_g(w);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(mean[i] - g[i]) <= 5.0 * std::sqrt(var[i] / n));
    CHECK((g - A * w).norm() < 1e-14);
  }

  TEST_CASE("replaying a sample reproduces the draw") {
    NoisyQuadratic q(GeometrySpec::euclidean_free(2), diag({1.0, 2.0}), 0.3, 0.1, 1.0);
    Vec w = Vec::Constant(2, 0.3);
    RngStream rng{1, 0};
    auto s = draw_sample(rng, 5);
    CHECK(q.eval_G(w, s) == q.eval_G(w, s));
    CHECK(q.eval_G(w, s) != q.eval_G(w, draw_sample(rng, 6)));
  }

  TEST_CASE("jvp matches finite differences") {
    Mat A = random_spd_matrix(4, 0.1, 1.0, 8);
    NoisyQuadratic q(GeometrySpec::euclidean_free(4), A, 0.5, 0.3, 3.0);
    std::mt19937_64 g(2);
    RngStream rng{3, 0};
    for (int k = 0; k < 50; ++k) {
      Vec w = oracle_ref::random_vec(g, 4, 0.5), d = oracle_ref::random_vec(g, 4);
      auto s = draw_sample(rng, k);
      const double h = 1e-4;
      Vec fd = (q.eval_G(w + h * d, s) - q.eval_G(w - h * d, s)) / (2 * h);
      REQUIRE((fd - q.eval_jvp(w, s, d)).norm() <= 1e-8 * (1.0 + fd.norm()));
      Vec fdm = (q.eval_g(w + h * d) - q.eval_g(w - h * d)) / (2 * h);
      REQUIRE((fdm - q.eval_jvp_mean(w, d)).norm() <= 1e-8 * (1.0 + fdm.norm()));
    }
  }

  TEST_CASE("centered differences respect the ell proxy") {
    NoisyQuadratic q(GeometrySpec::euclidean_free(2), diag({1.0, 1.0}), 0.7, 0.5, 1.0);
    const double ell = q.constants().ell;
    Vec w(2), v(2);
    w << 0.4, -0.2;
    v << -0.1, 0.3;
    const double dist = (w - v).norm();
    // (G(w)-G(v)) - (g(w)-g(v)) = xi (w - v) with xi ~ N(0, s^2)
    const double m = gaussian_mgf_quadrature(0.7 * dist, ell * dist);
    CHECK(m <= 2.0 + 1e-6);
    RngStream rng{4, 0};
    const int n = 100000;
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
      auto s = draw_sample(rng, k);
      Vec c = (q.eval_G(w, s) - q.eval_G(v, s)) - (q.eval_g(w) - q.eval_g(v));
      acc += std::exp(c.squaredNorm() / (ell * ell * dist * dist));
    }
    CHECK(acc / n <= 2.05);
  }

  TEST_CASE("linear gaussian has zero mean") {
    LinearGaussian lg(GeometrySpec::simplex(3), diag({1.0, 0.5, 0.25}), 1.0);
    Vec w = center_point(lg.geometry());
    CHECK(lg.eval_g(w)[0] == 0.0);
    CHECK(lg.out_dim() == 1);
    CHECK(lg.covariance_op_norm() == doctest::Approx(1.0));
    RngStream rng{2, 0};
    double s = 0.0, s2 = 0.0;
    const int n = 50000;
    for (int k = 0; k < n; ++k) {
      double x = lg.eval_G(w, draw_sample(rng, k))[0];
      s += x;
      s2 += x * x;
    }
    const double var = (1.0 + 0.5 + 0.25) / 9.0;
    CHECK(std::abs(s / n) <= 5.0 * std::sqrt(var / n));
    CHECK(s2 / n == doctest::Approx(var).epsilon(0.03));
    CHECK_THROWS_AS(lg.eval_jvp(w, draw_sample(rng, 0), w), OracleError);
  }

  TEST_CASE("finite sum averages its components") {
    std::vector<Mat> A{diag({1.0, 0.0}), diag({0.0, 3.0}), diag({2.0, 1.0})};
    std::vector<Vec> b{Vec::Ones(2), Vec::Zero(2), -Vec::Ones(2)};
    FiniteSum fs(GeometrySpec::euclidean_free(2), A, b, 1.0);
    Vec w(2);
    w << 0.3, -0.6;
    Vec want = ((A[0] + A[1] + A[2]) * w - (b[0] + b[1] + b[2])) / 3.0;
    CHECK((fs.eval_g(w) - want).norm() < 1e-14);
    CHECK(fs.constants().ell == doctest::Approx(6.0));
    CHECK(fs.constants().L == doctest::Approx(4.0 / 3.0));
    RngStream rng{1, 0};
    std::vector<int> counts(3, 0);
    for (int k = 0; k < 30000; ++k) {
      auto s = draw_sample(rng, k);
      int i = fs.component(s);
      ++counts[i];
      REQUIRE((fs.eval_G(w, s) - (A[i] * w - b[i])).norm() < 1e-15);
    }
    for (int c : counts) CHECK(std::abs(c - 10000) < 5.0 * std::sqrt(30000 * 2.0 / 9.0));
    // minimizer of the averaged quadratic
    CHECK(fs.objective_min() <= fs.objective(w));
  }

  TEST_CASE("linear program agrees with brute force") {
    std::mt19937_64 g(11);
    for (int trial = 0; trial < 30; ++trial) {
      Vec c = oracle_ref::random_vec(g, 2), a = oracle_ref::random_vec(g, 2);
      const double b = -0.2;
      auto box = GeometrySpec::box(2, -1.0, 1.0);
      Vec w = solve_linear_program(box, c, a, b);
      REQUIRE(a.dot(w) + b <= 1e-9);
      double best = 1e300;
      const int n = 800;
      for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) {
          Vec x(2);
          x << -1.0 + 2.0 * i / n, -1.0 + 2.0 * j / n;
          if (a.dot(x) + b <= 0.0) best = std::min(best, c.dot(x));
        }
      REQUIRE(c.dot(w) <= best + 1e-12);
      REQUIRE(c.dot(w) >= best - 0.01 * (c.norm() + 1.0));
    }
    for (int trial = 0; trial < 30; ++trial) {
      Vec c = oracle_ref::random_vec(g, 3), a = oracle_ref::random_vec(g, 3);
      const double b = 0.1 * a.mean();
      Vec w;
      try {
        w = solve_linear_program(GeometrySpec::simplex(3), c, a, b);
      } catch (const OracleError&) {
        continue;
      }
      REQUIRE(a.dot(w) + b <= 1e-9);
      double best = 1e300;
      for (int k = 0; k < 20000; ++k) {
        Vec x = oracle_ref::random_simplex_point(g, 3);
        if (a.dot(x) + b <= 0.0) best = std::min(best, c.dot(x));
      }
      REQUIRE(c.dot(w) <= best + 1e-12);
    }
    CHECK_THROWS_AS(solve_linear_program(GeometrySpec::box(2, 0, 1), Vec::Ones(2),
                                         Vec::Ones(2), 5.0),
                    OracleError);
  }

  TEST_CASE("constrained linear subgradients are bounded by G") {
    Vec c(3), a(3);
    c << 1.0, -0.5, 0.3;
    a << 0.5, 1.0, -0.2;
    ConstrainedLinear cl(GeometrySpec::box(3, -1.0, 1.0), c, a, -0.5, 0.5, 0.5);
    const double G = cl.subgradient_bound();
    // l2 geometry: max(|c|, |a|) + r |1|
    CHECK(G == doctest::Approx(std::max(c.norm(), a.norm()) + 0.5 * std::sqrt(3.0)));
    RngStream rng{8, 0};
    Vec w = Vec::Zero(3);
    for (int k = 0; k < 2000; ++k) {
      auto z = draw_sample(rng, k, 0, Domain::Zeta);
      REQUIRE(dual_norm(cl.F_sub(w, z), cl.geometry()) <= G);
      REQUIRE(dual_norm(cl.H_sub(w, z), cl.geometry()) <= G);
    }
    CHECK(cl.h(cl.w_star()) <= 1e-12);
    CHECK(cl.f_star() == doctest::Approx(c.dot(cl.w_star())));
    CHECK_THROWS_AS(ConstrainedLinear(GeometrySpec::euclidean_free(3), c, a, 0.0, 0.1, 0.1),
                    OracleError);
  }
}
