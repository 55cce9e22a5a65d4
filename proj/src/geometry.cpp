#include "vrbound/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vrbound {

namespace {

constexpr double kSimplexFloor = 1e-300;

void check_dim(const Vec& x, const GeometrySpec& g) {
  if (x.size() != g.dimension)
    throw GeometryError("dimension mismatch: got " + std::to_string(x.size()) +
                        ", expected " + std::to_string(g.dimension));
}

}  // namespace

std::string to_string(GeometryKind k) {
  switch (k) {
    case GeometryKind::EuclideanFree: return "euclidean_free";
    case GeometryKind::EuclideanBox: return "euclidean_box";
    case GeometryKind::Simplex: return "simplex";
  }
  return "?";
}

GeometryKind geometry_kind_from_string(const std::string& s) {
  if (s == "euclidean_free") return GeometryKind::EuclideanFree;
  if (s == "euclidean_box") return GeometryKind::EuclideanBox;
  if (s == "simplex") return GeometryKind::Simplex;
  throw GeometryError("unknown geometry kind: " + s);
}

double simplex_kappa(int d) {
  return std::log(std::max(std::exp(1.0), static_cast<double>(d)));
}

GeometrySpec GeometrySpec::euclidean_free(int d) {
  GeometrySpec g;
  g.kind = GeometryKind::EuclideanFree;
  g.dimension = d;
  g.kappa = 1.0;
  g.validate();
  return g;
}

GeometrySpec GeometrySpec::euclidean_box(const Vec& lower, const Vec& upper) {
  GeometrySpec g;
  g.kind = GeometryKind::EuclideanBox;
  g.dimension = static_cast<int>(lower.size());
  g.lower = lower;
  g.upper = upper;
  g.kappa = 1.0;
  g.validate();
  return g;
}

GeometrySpec GeometrySpec::box(int d, double lo, double hi) {
  return euclidean_box(Vec::Constant(d, lo), Vec::Constant(d, hi));
}

GeometrySpec GeometrySpec::simplex(int d) {
  GeometrySpec g;
  g.kind = GeometryKind::Simplex;
  g.dimension = d;
  g.kappa = simplex_kappa(d);
  g.validate();
  return g;
}

void GeometrySpec::validate() const {
  if (dimension < 1) throw GeometryError("dimension must be positive");
  if (!(kappa >= 1.0)) throw GeometryError("kappa must be >= 1");
  if (kind == GeometryKind::EuclideanBox) {
    if (lower.size() != dimension || upper.size() != dimension)
      throw GeometryError("box bounds must have length d");
    for (int i = 0; i < dimension; ++i)
      if (!(lower[i] < upper[i]))
        throw GeometryError("box bounds must satisfy lower < upper");
  }
  if (kind == GeometryKind::Simplex &&
      std::abs(kappa - simplex_kappa(dimension)) > 1e-15)
    throw GeometryError("simplex kappa must equal ln(max{e,d})");
  if (kind != GeometryKind::Simplex && kappa != 1.0)
    throw GeometryError("euclidean kappa must equal 1");
}

double primal_norm(const Vec& x, const GeometrySpec& g) {
  check_dim(x, g);
  return g.is_euclidean() ? x.norm() : x.lpNorm<1>();
}

double dual_norm(const Vec& u, const GeometrySpec& g) {
  check_dim(u, g);
  if (g.is_euclidean()) return u.norm();
  return u.size() ? u.lpNorm<Eigen::Infinity>() : 0.0;
}

double pairing(const Vec& u, const Vec& x) { return u.dot(x); }

bool is_feasible(const Vec& w, const GeometrySpec& g, double tol) {
  if (w.size() != g.dimension) return false;
  if (!w.allFinite()) return false;
  switch (g.kind) {
    case GeometryKind::EuclideanFree: return true;
    case GeometryKind::EuclideanBox:
      for (int i = 0; i < g.dimension; ++i)
        if (w[i] < g.lower[i] - tol || w[i] > g.upper[i] + tol) return false;
      return true;
    case GeometryKind::Simplex:
      if ((w.array() <= 0.0).any()) return false;
      return std::abs(w.sum() - 1.0) <= tol;
  }
  return false;
}

void require_feasible(const Vec& w, const GeometrySpec& g) {
  check_dim(w, g);
  if (!is_feasible(w, g)) throw GeometryError("infeasible point");
}

double bregman(const Vec& x, const Vec& y, const GeometrySpec& g) {
  require_feasible(x, g);
  require_feasible(y, g);
  if (g.is_euclidean()) return 0.5 * (x - y).squaredNorm();
  double kl = 0.0;
  for (int i = 0; i < g.dimension; ++i) kl += x[i] * std::log(x[i] / y[i]);
  // x and y both sum to one, so the linear terms cancel up to rounding
  return std::max(kl, 0.0);
}

Vec prox_step(const Vec& w, const Vec& u, double eta, const GeometrySpec& g) {
  require_feasible(w, g);
  check_dim(u, g);
  if (!(eta > 0.0) || !std::isfinite(eta))
    throw GeometryError("step size must be positive");
  if (!u.allFinite()) throw GeometryError("dual vector must be finite");
  switch (g.kind) {
    case GeometryKind::EuclideanFree: return w - eta * u;
    case GeometryKind::EuclideanBox:
      return (w - eta * u).cwiseMax(g.lower).cwiseMin(g.upper);
    case GeometryKind::Simplex: {
      // w_i exp(-eta u_i), evaluated in log domain then renormalized
      Vec z = w.array().log() - eta * u.array();
      double zmax = z.maxCoeff();
      Vec p = (z.array() - zmax).exp();
      p /= p.sum();
      p = p.cwiseMax(kSimplexFloor);
      p /= p.sum();
      return p;
    }
  }
  return w;
}

Vec prox_map(const Vec& w, const Vec& u, double eta, const GeometrySpec& g) {
  return (w - prox_step(w, u, eta, g)) / eta;
}

Vec center_point(const GeometrySpec& g) {
  switch (g.kind) {
    case GeometryKind::EuclideanFree: return Vec::Zero(g.dimension);
    case GeometryKind::EuclideanBox: return 0.5 * (g.lower + g.upper);
    case GeometryKind::Simplex:
      return Vec::Constant(g.dimension, 1.0 / g.dimension);
  }
  return Vec::Zero(g.dimension);
}

double diameter(const GeometrySpec& g) {
  switch (g.kind) {
    case GeometryKind::EuclideanFree:
      return std::numeric_limits<double>::infinity();
    case GeometryKind::EuclideanBox: return (g.upper - g.lower).norm();
    case GeometryKind::Simplex: return g.dimension > 1 ? 2.0 : 0.0;
  }
  return 0.0;
}

double bregman_radius(const GeometrySpec& g) {
  switch (g.kind) {
    case GeometryKind::EuclideanFree:
      return std::numeric_limits<double>::infinity();
    case GeometryKind::EuclideanBox: return diameter(g);
    // KL(x, uniform) <= ln d
    case GeometryKind::Simplex:
      return std::sqrt(2.0 * std::log(static_cast<double>(g.dimension)));
  }
  return 0.0;
}

double max_l2_norm(const GeometrySpec& g) {
  switch (g.kind) {
    case GeometryKind::EuclideanFree:
      return std::numeric_limits<double>::infinity();
    case GeometryKind::EuclideanBox:
      return g.lower.cwiseAbs().cwiseMax(g.upper.cwiseAbs()).norm();
    case GeometryKind::Simplex: return 1.0;
  }
  return 0.0;
}

}  // namespace vrbound
