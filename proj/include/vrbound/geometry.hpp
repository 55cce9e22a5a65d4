#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace vrbound {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class GeometryKind { EuclideanFree, EuclideanBox, Simplex };

std::string to_string(GeometryKind k);
GeometryKind geometry_kind_from_string(const std::string& s);

struct GeometrySpec {
  GeometryKind kind = GeometryKind::EuclideanFree;
  int dimension = 1;
  Vec lower;  // EuclideanBox only
  Vec upper;
  double kappa = 1.0;

  static GeometrySpec euclidean_free(int d);
  static GeometrySpec euclidean_box(const Vec& lower, const Vec& upper);
  static GeometrySpec box(int d, double lo, double hi);
  static GeometrySpec simplex(int d);

  bool is_euclidean() const { return kind != GeometryKind::Simplex; }
  void validate() const;
};

// kappa of the simplex geometry: ln(max{e, d})
double simplex_kappa(int d);

double primal_norm(const Vec& x, const GeometrySpec& g);
double dual_norm(const Vec& u, const GeometrySpec& g);
double pairing(const Vec& u, const Vec& x);

bool is_feasible(const Vec& w, const GeometrySpec& g, double tol = 1e-12);
void require_feasible(const Vec& w, const GeometrySpec& g);

double bregman(const Vec& x, const Vec& y, const GeometrySpec& g);

Vec prox_step(const Vec& w, const Vec& u, double eta, const GeometrySpec& g);
Vec prox_map(const Vec& w, const Vec& u, double eta, const GeometrySpec& g);

// Point used to start iterations: box midpoint, uniform simplex point, origin.
Vec center_point(const GeometrySpec& g);
// Primal-norm diameter of the feasible set (infinite for EuclideanFree).
double diameter(const GeometrySpec& g);
// R with D(w*, center) <= R^2 / 2 for every feasible w*.
double bregman_radius(const GeometrySpec& g);
// Largest primal norm of a feasible point, in l2 (used for noise certification).
double max_l2_norm(const GeometrySpec& g);

}  // namespace vrbound
