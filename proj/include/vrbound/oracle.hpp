#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "vrbound/geometry.hpp"
#include "vrbound/rng.hpp"

namespace vrbound {

class OracleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ProblemConstants {
  double sigma = 0.0;     // variance proxy of G - g
  double L = 0.0;         // Lipschitz constant of g
  double ell = 0.0;       // sub-Gaussian Lipschitz constant of centered differences
  double gamma = 0.0;     // Hessian-noise proxy
  double alpha = 0.0;     // smoothness of g
  double G_update = 1.0;  // bound on the update vectors
  double delta_f = 0.0;   // initial gap (optimizer problems)

  double sigma_L() const;
  double sigma_ell() const;
  double sigma_gamma() const;
  double sigma_alpha() const;
  void validate() const;
};

// Replayable draw: evaluating an oracle twice with the same handle uses the same xi.
struct OracleSample {
  std::uint64_t key = 0;
  bool operator==(const OracleSample&) const = default;
};

OracleSample draw_sample(const RngStream& rng, std::uint64_t t,
                         std::uint64_t index = 0, Domain domain = Domain::Xi);
std::vector<OracleSample> draw_batch(const RngStream& rng, std::uint64_t t,
                                     int batch, Domain domain = Domain::Xi);

// Largest Gaussian std s such that isotropic N(0, s^2 I_d) has
// E exp(|Z|^2 / sigma^2) <= 2, i.e. s^2 = sigma^2 (1 - 2^{-2/d}) / 2.
double subgaussian_std_for_proxy(double sigma_proxy, int d);
// Smallest sigma with prod_i (1 - 2 lambda_i / sigma^2)^{-1/2} <= 2 for a
// centered Gaussian vector with covariance eigenvalues lambda_i.
double gaussian_variance_proxy(const std::vector<double>& eigenvalues);
// Proxy for a random vector bounded in norm by M: M / sqrt(ln 2).
double bounded_variance_proxy(double bound);

enum class ProblemKind { LinearGaussian, NoisyQuadratic, FiniteSum, ConstrainedLinear };
std::string to_string(ProblemKind k);

class StochasticOracle {
 public:
  virtual ~StochasticOracle() = default;

  virtual ProblemKind kind() const = 0;
  int dim() const { return geometry_.dimension; }
  // 1 for scalar targets
  virtual int out_dim() const = 0;

  virtual Vec eval_G(const Vec& w, const OracleSample& s) const = 0;
  virtual Vec eval_g(const Vec& w) const = 0;
  virtual bool has_jvp() const { return false; }
  virtual Vec eval_jvp(const Vec& w, const OracleSample& s, const Vec& d) const;
  // nabla g(w) d
  virtual Vec eval_jvp_mean(const Vec& w, const Vec& d) const;

  // Objective f with grad f = g (optimizer problems only).
  virtual bool has_objective() const { return false; }
  virtual double objective(const Vec& w) const;
  virtual double objective_min() const;

  // Norm of an estimator-space vector: |.| for scalars, dual norm otherwise.
  double error_norm(const Vec& e) const;

  const GeometrySpec& geometry() const { return geometry_; }
  const ProblemConstants& constants() const { return constants_; }
  void set_constants(const ProblemConstants& c) { constants_ = c; }
  void set_delta_f(double v) { constants_.delta_f = v; }

 protected:
  explicit StochasticOracle(GeometrySpec g) : geometry_(std::move(g)) {}
  void check_point(const Vec& w) const;

  GeometrySpec geometry_;
  ProblemConstants constants_;
};

// G(w, xi) = <xi, w>, xi ~ N(0, Sigma); g = 0.
class LinearGaussian : public StochasticOracle {
 public:
  LinearGaussian(GeometrySpec g, Mat covariance, double radius);
  ProblemKind kind() const override { return ProblemKind::LinearGaussian; }
  int out_dim() const override { return 1; }
  Vec eval_G(const Vec& w, const OracleSample& s) const override;
  Vec eval_g(const Vec& w) const override;
  const Mat& covariance() const { return cov_; }
  double covariance_op_norm() const { return op_; }

 private:
  Vec noise(const OracleSample& s) const;
  Mat cov_;
  Mat chol_;
  double op_;
};

// G(w, xi) = (A + xi I) w + zeta, xi ~ N(0, s^2), zeta ~ N(0, s_add^2 I); g = A w.
class NoisyQuadratic : public StochasticOracle {
 public:
  NoisyQuadratic(GeometrySpec g, Mat A, double noise_std, double additive_std,
                 double radius);
  ProblemKind kind() const override { return ProblemKind::NoisyQuadratic; }
  int out_dim() const override { return dim(); }
  Vec eval_G(const Vec& w, const OracleSample& s) const override;
  Vec eval_g(const Vec& w) const override;
  bool has_jvp() const override { return true; }
  Vec eval_jvp(const Vec& w, const OracleSample& s, const Vec& d) const override;
  Vec eval_jvp_mean(const Vec& w, const Vec& d) const override;
  bool has_objective() const override { return true; }
  double objective(const Vec& w) const override;
  double objective_min() const override;

  double curvature_noise(const OracleSample& s) const;
  const Mat& matrix() const { return A_; }
  double noise_std() const { return s_; }
  double additive_std() const { return s_add_; }

 private:
  Mat A_;
  double s_;
  double s_add_;
  double fmin_;
};

// g(w) = mean_i (A_i w - b_i); the oracle picks a component uniformly.
class FiniteSum : public StochasticOracle {
 public:
  FiniteSum(GeometrySpec g, std::vector<Mat> A, std::vector<Vec> b, double radius);
  ProblemKind kind() const override { return ProblemKind::FiniteSum; }
  int out_dim() const override { return dim(); }
  Vec eval_G(const Vec& w, const OracleSample& s) const override;
  Vec eval_g(const Vec& w) const override;
  bool has_jvp() const override { return true; }
  Vec eval_jvp(const Vec& w, const OracleSample& s, const Vec& d) const override;
  Vec eval_jvp_mean(const Vec& w, const Vec& d) const override;
  bool has_objective() const override { return true; }
  double objective(const Vec& w) const override;
  double objective_min() const override;
  int component(const OracleSample& s) const;
  int size() const { return static_cast<int>(A_.size()); }

 private:
  std::vector<Mat> A_;
  std::vector<Vec> b_;
  Mat Abar_;
  Vec bbar_;
  double fmin_;
};

// min <c, w> s.t. h(w) = <a, w> + b <= 0 over a box or simplex.
// The estimator tracks H(w, xi) = <a + xi, w> + b, xi ~ N(0, s^2 I).
// Subgradients F' = c + zeta_f, H' = a + zeta_h with zeta uniform on [-r, r]^d.
class ConstrainedLinear : public StochasticOracle {
 public:
  ConstrainedLinear(GeometrySpec g, Vec c, Vec a, double b, double value_noise_std,
                    double subgradient_noise);
  ProblemKind kind() const override { return ProblemKind::ConstrainedLinear; }
  int out_dim() const override { return 1; }
  Vec eval_G(const Vec& w, const OracleSample& s) const override;
  Vec eval_g(const Vec& w) const override;
  bool has_jvp() const override { return true; }
  Vec eval_jvp(const Vec& w, const OracleSample& s, const Vec& d) const override;
  Vec eval_jvp_mean(const Vec& w, const Vec& d) const override;

  double f(const Vec& w) const { return c_.dot(w); }
  double h(const Vec& w) const { return a_.dot(w) + b_; }
  Vec F_sub(const Vec& w, const OracleSample& zeta) const;
  Vec H_sub(const Vec& w, const OracleSample& zeta) const;

  const Vec& w_star() const { return w_star_; }
  double f_star() const { return f_star_; }
  double subgradient_bound() const { return G_; }
  double diameter() const;
  double radius_R() const;
  const Vec& c() const { return c_; }
  const Vec& a() const { return a_; }
  double b() const { return b_; }

 private:
  Vec noise(const OracleSample& s, double scale, bool uniform) const;
  void solve_optimum();
  Vec c_, a_;
  double b_;
  double s_;
  double r_;
  double G_;
  Vec w_star_;
  double f_star_;
};

// Exhaustive vertex/KKT enumeration for min <c,w> s.t. <a,w>+b <= 0 on a box or
// simplex (d <= 16). Throws OracleError if infeasible.
Vec solve_linear_program(const GeometrySpec& g, const Vec& c, const Vec& a, double b);

// Symmetric positive semidefinite matrix with eigenvalues in [mu, Lmax], drawn
// from the Problem counter domain.
Mat random_spd_matrix(int d, double mu, double Lmax, std::uint64_t seed);

}  // namespace vrbound
