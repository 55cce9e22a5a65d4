#pragma once

// Independent reference computations for the test suites. Nothing here calls
// the closed forms it is used to check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "vrbound/geometry.hpp"

namespace oracle_ref {

using vrbound::Vec;

// Entropic prox on the simplex by pairwise coordinate descent: each pair
// (i, j) with fixed x_i + x_j is solved by bisection on the 1-D derivative.
inline Vec simplex_prox_numeric(const Vec& w, const Vec& u, double eta, int sweeps = 200) {
  const int d = static_cast<int>(w.size());
  Vec x = w;
  auto dphi = [&](int i, double xi) { return eta * u[i] + std::log(xi / w[i]) + 1.0; };
  for (int s = 0; s < sweeps; ++s) {
    double moved = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) {
        const double tot = x[i] + x[j];
        if (tot <= 0.0) continue;
        double lo = tot * 1e-300, hi = tot * (1.0 - 1e-16);
        // derivative of phi_i(a) + phi_j(tot - a) is increasing in a
        for (int it = 0; it < 200; ++it) {
          const double mid = 0.5 * (lo + hi);
          if (mid <= lo || mid >= hi) break;
          const double g = dphi(i, mid) - dphi(j, tot - mid);
          (g > 0.0 ? hi : lo) = mid;
        }
        const double a = 0.5 * (lo + hi);
        moved = std::max(moved, std::abs(a - x[i]));
        x[i] = a;
        x[j] = tot - a;
      }
    if (moved < 1e-15) break;
  }
  return x;
}

// Box prox by golden-section search per coordinate of <eta u_i, x> + (x - w_i)^2 / 2.
inline Vec box_prox_numeric(const Vec& w, const Vec& u, double eta, const Vec& lo,
                            const Vec& hi) {
  Vec x(w.size());
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int i = 0; i < w.size(); ++i) {
    auto f = [&](double z) { return eta * u[i] * z + 0.5 * (z - w[i]) * (z - w[i]); };
    double a = lo[i], b = hi[i];
    double c = b - phi * (b - a), d = a + phi * (b - a);
    for (int it = 0; it < 200; ++it) {
      if (f(c) < f(d)) b = d; else a = c;
      c = b - phi * (b - a);
      d = a + phi * (b - a);
    }
    x[i] = 0.5 * (a + b);
  }
  return x;
}

inline double kl(const Vec& x, const Vec& y) {
  double s = 0.0;
  for (int i = 0; i < x.size(); ++i)
    if (x[i] > 0.0) s += x[i] * std::log(x[i] / y[i]);
  return s;
}

inline Vec random_simplex_point(std::mt19937_64& g, int d) {
  std::exponential_distribution<double> e(1.0);
  Vec w(d);
  for (int i = 0; i < d; ++i) w[i] = e(g) + 1e-3;
  return w / w.sum();
}

inline Vec random_vec(std::mt19937_64& g, int d, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Vec v(d);
  for (int i = 0; i < d; ++i) v[i] = n(g);
  return v;
}

inline double C(double delta, double kappa) {
  return std::sqrt(kappa) + std::sqrt(3.0 * std::log(1.0 / delta));
}

}  // namespace oracle_ref
