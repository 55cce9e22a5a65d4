#include "vrbound/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vrbound {

namespace {

const double kSqrt83 = std::sqrt(8.0 / 3.0);

double sym_op_norm(const Mat& M) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (M + M.transpose()),
                                        Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double op_norm(const Mat& M) {
  Eigen::JacobiSVD<Mat> svd(M);
  return svd.singularValues()(0);
}

bool is_symmetric(const Mat& A) {
  return (A - A.transpose()).cwiseAbs().maxCoeff() <=
         1e-12 * (1.0 + A.cwiseAbs().maxCoeff());
}

double radius_or_default(const GeometrySpec& g, double radius) {
  double r = std::min(radius, max_l2_norm(g));
  if (!(r > 0.0) || !std::isfinite(r))
    throw OracleError("a finite positive domain radius is required");
  return r;
}

}  // namespace

double ProblemConstants::sigma_L() const { return std::sqrt(delta_f * L); }
double ProblemConstants::sigma_ell() const { return std::sqrt(delta_f * ell); }
double ProblemConstants::sigma_gamma() const { return std::sqrt(delta_f * gamma); }
double ProblemConstants::sigma_alpha() const {
  return std::cbrt(delta_f * delta_f * alpha);
}

void ProblemConstants::validate() const {
  for (double v : {sigma, L, ell, gamma, alpha, G_update, delta_f})
    if (!(v >= 0.0) || !std::isfinite(v))
      throw OracleError("problem constants must be finite and nonnegative");
}

OracleSample draw_sample(const RngStream& rng, std::uint64_t t, std::uint64_t index,
                         Domain domain) {
  return OracleSample{rng.key(domain, t, index)};
}

std::vector<OracleSample> draw_batch(const RngStream& rng, std::uint64_t t, int batch,
                                     Domain domain) {
  if (batch < 1) throw OracleError("batch size must be positive");
  std::vector<OracleSample> out;
  out.reserve(batch);
  for (int i = 0; i < batch; ++i) out.push_back(draw_sample(rng, t, i, domain));
  return out;
}

double subgaussian_std_for_proxy(double sigma_proxy, int d) {
  if (!(sigma_proxy > 0.0) || d < 1)
    throw OracleError("proxy must be positive and d >= 1");
  return sigma_proxy * std::sqrt((1.0 - std::pow(2.0, -2.0 / d)) / 2.0);
}

double gaussian_variance_proxy(const std::vector<double>& eigenvalues) {
  double lmax = 0.0;
  for (double l : eigenvalues) {
    if (l < 0.0) throw OracleError("covariance eigenvalues must be nonnegative");
    lmax = std::max(lmax, l);
  }
  if (lmax == 0.0) return 0.0;
  // log E exp(|Z|^2/x) = -1/2 sum log(1 - 2 l_i / x), decreasing in x
  auto excess = [&](double x) {
    double s = 0.0;
    for (double l : eigenvalues) s += -0.5 * std::log1p(-2.0 * l / x);
    return s - std::log(2.0);
  };
  const double n = static_cast<double>(eigenvalues.size());
  double lo = 2.0 * lmax;
  // every eigenvalue raised to lmax gives a feasible upper end
  double hi = 2.0 * lmax / (1.0 - std::pow(2.0, -2.0 / n));
  while (excess(hi) > 0.0) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (excess(mid) > 0.0) lo = mid; else hi = mid;
  }
  return std::sqrt(hi);
}

double bounded_variance_proxy(double bound) {
  return bound / std::sqrt(std::log(2.0));
}

std::string to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::LinearGaussian: return "linear_gaussian";
    case ProblemKind::NoisyQuadratic: return "noisy_quadratic";
    case ProblemKind::FiniteSum: return "finite_sum";
    case ProblemKind::ConstrainedLinear: return "constrained_linear";
  }
  return "?";
}

Vec StochasticOracle::eval_jvp(const Vec&, const OracleSample&, const Vec&) const {
  throw OracleError("problem kind " + to_string(kind()) +
                    " does not provide a second-order oracle");
}

Vec StochasticOracle::eval_jvp_mean(const Vec&, const Vec&) const {
  throw OracleError("problem kind " + to_string(kind()) +
                    " does not provide a second-order oracle");
}

double StochasticOracle::objective(const Vec&) const {
  throw OracleError("problem kind " + to_string(kind()) + " has no objective");
}

double StochasticOracle::objective_min() const {
  throw OracleError("problem kind " + to_string(kind()) + " has no objective");
}

double StochasticOracle::error_norm(const Vec& e) const {
  if (out_dim() == 1) return std::abs(e[0]);
  return dual_norm(e, geometry_);
}

void StochasticOracle::check_point(const Vec& w) const {
  if (w.size() != dim()) throw OracleError("dimension mismatch");
  if (!is_feasible(w, geometry_, 1e-9)) throw OracleError("infeasible point");
}

// ---------------------------------------------------------------- LinearGaussian

LinearGaussian::LinearGaussian(GeometrySpec g, Mat covariance, double radius)
    : StochasticOracle(std::move(g)), cov_(std::move(covariance)) {
  if (cov_.rows() != dim() || cov_.cols() != dim() || !is_symmetric(cov_))
    throw OracleError("covariance must be symmetric d x d");
  Eigen::SelfAdjointEigenSolver<Mat> es(cov_);
  if (es.eigenvalues().minCoeff() < -1e-12)
    throw OracleError("covariance must be positive semidefinite");
  Vec ev = es.eigenvalues().cwiseMax(0.0);
  chol_ = es.eigenvectors() * ev.cwiseSqrt().asDiagonal();
  op_ = ev.maxCoeff();
  double r = radius_or_default(geometry_, radius);
  constants_.ell = std::sqrt(8.0 * op_ / 3.0);
  constants_.sigma = constants_.ell * r;
  constants_.gamma = gaussian_variance_proxy(
      std::vector<double>(ev.data(), ev.data() + ev.size()));
  constants_.L = 0.0;
  constants_.alpha = 0.0;
}

Vec LinearGaussian::noise(const OracleSample& s) const {
  CounterEngine eng(s.key);
  Vec z(dim());
  for (int i = 0; i < dim(); ++i) z[i] = standard_normal(eng);
  return chol_ * z;
}

Vec LinearGaussian::eval_G(const Vec& w, const OracleSample& s) const {
  check_point(w);
  return Vec::Constant(1, noise(s).dot(w));
}

Vec LinearGaussian::eval_g(const Vec& w) const {
  check_point(w);
  return Vec::Zero(1);
}

// ---------------------------------------------------------------- NoisyQuadratic

NoisyQuadratic::NoisyQuadratic(GeometrySpec g, Mat A, double noise_std,
                               double additive_std, double radius)
    : StochasticOracle(std::move(g)), A_(std::move(A)), s_(noise_std),
      s_add_(additive_std) {
  if (A_.rows() != dim() || A_.cols() != dim() || !is_symmetric(A_))
    throw OracleError("A must be symmetric d x d");
  if (!(s_ >= 0.0) || !(s_add_ >= 0.0)) throw OracleError("noise std must be >= 0");
  double r = radius_or_default(geometry_, radius);
  constants_.L = sym_op_norm(A_);
  constants_.ell = s_ * kSqrt83;
  constants_.gamma = s_ * kSqrt83;
  constants_.alpha = 0.0;
  // G - g = xi w + zeta: covariance s^2 w w^T + s_add^2 I
  std::vector<double> ev(dim(), s_add_ * s_add_);
  ev[0] += s_ * s_ * r * r;
  constants_.sigma = gaussian_variance_proxy(ev);

  Eigen::SelfAdjointEigenSolver<Mat> es(A_, Eigen::EigenvaluesOnly);
  if (geometry_.kind == GeometryKind::EuclideanFree) {
    fmin_ = es.eigenvalues().minCoeff() >= 0.0
                ? 0.0 : -std::numeric_limits<double>::infinity();
  } else {
    fmin_ = std::numeric_limits<double>::quiet_NaN();
  }
}

double NoisyQuadratic::curvature_noise(const OracleSample& s) const {
  CounterEngine eng(s.key);
  return s_ * standard_normal(eng);
}

Vec NoisyQuadratic::eval_G(const Vec& w, const OracleSample& s) const {
  check_point(w);
  CounterEngine eng(s.key);
  double xi = s_ * standard_normal(eng);
  Vec out = A_ * w + xi * w;
  if (s_add_ > 0.0)
    for (int i = 0; i < dim(); ++i) out[i] += s_add_ * standard_normal(eng);
  return out;
}

Vec NoisyQuadratic::eval_g(const Vec& w) const {
  check_point(w);
  return A_ * w;
}

Vec NoisyQuadratic::eval_jvp(const Vec& w, const OracleSample& s, const Vec& d) const {
  check_point(w);
  if (d.size() != dim()) throw OracleError("dimension mismatch");
  return A_ * d + curvature_noise(s) * d;
}

Vec NoisyQuadratic::eval_jvp_mean(const Vec& w, const Vec& d) const {
  check_point(w);
  return A_ * d;
}

double NoisyQuadratic::objective(const Vec& w) const { return 0.5 * w.dot(A_ * w); }

double NoisyQuadratic::objective_min() const {
  if (std::isnan(fmin_))
    throw OracleError("constrained quadratic minimum is not available in closed form");
  return fmin_;
}

// ---------------------------------------------------------------- FiniteSum

FiniteSum::FiniteSum(GeometrySpec g, std::vector<Mat> A, std::vector<Vec> b,
                     double radius)
    : StochasticOracle(std::move(g)), A_(std::move(A)), b_(std::move(b)) {
  if (A_.empty() || A_.size() != b_.size())
    throw OracleError("finite sum needs matching nonempty component lists");
  Abar_ = Mat::Zero(dim(), dim());
  bbar_ = Vec::Zero(dim());
  for (size_t i = 0; i < A_.size(); ++i) {
    if (A_[i].rows() != dim() || A_[i].cols() != dim() || b_[i].size() != dim() ||
        !is_symmetric(A_[i]))
      throw OracleError("component shapes must be symmetric d x d and d");
    Abar_ += A_[i];
    bbar_ += b_[i];
  }
  Abar_ /= static_cast<double>(A_.size());
  bbar_ /= static_cast<double>(A_.size());
  double r = radius_or_default(geometry_, radius);
  double maxLi = 0.0, maxdev = 0.0, maxbound = 0.0;
  for (size_t i = 0; i < A_.size(); ++i) {
    maxLi = std::max(maxLi, op_norm(A_[i]));
    double dev = op_norm(A_[i] - Abar_);
    maxdev = std::max(maxdev, dev);
    maxbound = std::max(maxbound, dev * r + (b_[i] - bbar_).norm());
  }
  constants_.L = sym_op_norm(Abar_);
  constants_.ell = 2.0 * maxLi;
  constants_.gamma = bounded_variance_proxy(maxdev);
  constants_.sigma = bounded_variance_proxy(maxbound);
  constants_.alpha = 0.0;

  fmin_ = std::numeric_limits<double>::quiet_NaN();
  if (geometry_.kind == GeometryKind::EuclideanFree) {
    Eigen::LDLT<Mat> ldlt(Abar_);
    Eigen::SelfAdjointEigenSolver<Mat> es(Abar_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() > 0.0) {
      Vec x = ldlt.solve(bbar_);
      fmin_ = 0.5 * x.dot(Abar_ * x) - bbar_.dot(x);
    }
  }
}

int FiniteSum::component(const OracleSample& s) const {
  CounterEngine eng(s.key);
  return static_cast<int>(uniform01(eng) * static_cast<double>(A_.size()));
}

Vec FiniteSum::eval_G(const Vec& w, const OracleSample& s) const {
  check_point(w);
  int i = component(s);
  return A_[i] * w - b_[i];
}

Vec FiniteSum::eval_g(const Vec& w) const {
  check_point(w);
  return Abar_ * w - bbar_;
}

Vec FiniteSum::eval_jvp(const Vec& w, const OracleSample& s, const Vec& d) const {
  check_point(w);
  return A_[component(s)] * d;
}

Vec FiniteSum::eval_jvp_mean(const Vec& w, const Vec& d) const {
  check_point(w);
  return Abar_ * d;
}

double FiniteSum::objective(const Vec& w) const {
  return 0.5 * w.dot(Abar_ * w) - bbar_.dot(w);
}

double FiniteSum::objective_min() const {
  if (std::isnan(fmin_)) throw OracleError("finite-sum minimum not available");
  return fmin_;
}

// ---------------------------------------------------------------- ConstrainedLinear

ConstrainedLinear::ConstrainedLinear(GeometrySpec g, Vec c, Vec a, double b,
                                     double value_noise_std, double subgradient_noise)
    : StochasticOracle(std::move(g)), c_(std::move(c)), a_(std::move(a)), b_(b),
      s_(value_noise_std), r_(subgradient_noise) {
  if (geometry_.kind == GeometryKind::EuclideanFree)
    throw OracleError("constrained problems need a bounded feasible set");
  if (c_.size() != dim() || a_.size() != dim())
    throw OracleError("c and a must have length d");
  if (!(s_ >= 0.0) || !(r_ >= 0.0)) throw OracleError("noise levels must be >= 0");
  double ones_dual = dual_norm(Vec::Ones(dim()), geometry_);
  G_ = std::max(dual_norm(c_, geometry_), dual_norm(a_, geometry_)) + r_ * ones_dual;
  double rmax = max_l2_norm(geometry_);
  constants_.ell = s_ * kSqrt83;
  constants_.sigma = s_ * kSqrt83 * rmax;
  constants_.gamma =
      s_ > 0.0 ? gaussian_variance_proxy(std::vector<double>(dim(), s_ * s_)) : 0.0;
  constants_.alpha = 0.0;
  constants_.L = dual_norm(a_, geometry_);
  constants_.G_update = G_;
  solve_optimum();
}

void ConstrainedLinear::solve_optimum() {
  w_star_ = solve_linear_program(geometry_, c_, a_, b_);
  f_star_ = c_.dot(w_star_);
}

Vec ConstrainedLinear::noise(const OracleSample& s, double scale, bool uniform) const {
  CounterEngine eng(s.key);
  Vec z(dim());
  for (int i = 0; i < dim(); ++i)
    z[i] = uniform ? scale * (2.0 * uniform01(eng) - 1.0) : scale * standard_normal(eng);
  return z;
}

Vec ConstrainedLinear::eval_G(const Vec& w, const OracleSample& s) const {
  check_point(w);
  return Vec::Constant(1, (a_ + noise(s, s_, false)).dot(w) + b_);
}

Vec ConstrainedLinear::eval_g(const Vec& w) const {
  check_point(w);
  return Vec::Constant(1, h(w));
}

Vec ConstrainedLinear::eval_jvp(const Vec& w, const OracleSample& s, const Vec& d) const {
  check_point(w);
  return Vec::Constant(1, (a_ + noise(s, s_, false)).dot(d));
}

Vec ConstrainedLinear::eval_jvp_mean(const Vec& w, const Vec& d) const {
  check_point(w);
  return Vec::Constant(1, a_.dot(d));
}

Vec ConstrainedLinear::F_sub(const Vec& w, const OracleSample& zeta) const {
  check_point(w);
  return c_ + noise(zeta, r_, true);
}

Vec ConstrainedLinear::H_sub(const Vec& w, const OracleSample& zeta) const {
  check_point(w);
  // independent coordinates of the same handle: shift the key
  return a_ + noise(OracleSample{mix64(zeta.key ^ 0xA5A5A5A5ULL)}, r_, true);
}

double ConstrainedLinear::diameter() const { return vrbound::diameter(geometry_); }
double ConstrainedLinear::radius_R() const { return bregman_radius(geometry_); }

Vec solve_linear_program(const GeometrySpec& g, const Vec& c, const Vec& a, double b) {
  const int d = g.dimension;
  if (d > 16) throw OracleError("vertex enumeration limited to d <= 16");
  const double tol = 1e-12;
  double best = std::numeric_limits<double>::infinity();
  Vec best_w;
  auto consider = [&](const Vec& w) {
    if (a.dot(w) + b > tol) return;
    double v = c.dot(w);
    if (v < best - 1e-15) {
      best = v;
      best_w = w;
    }
  };
  if (g.kind == GeometryKind::EuclideanBox) {
    // basic solutions have at most one coordinate strictly between its bounds
    for (std::uint32_t mask = 0; mask < (1u << d); ++mask) {
      Vec w(d);
      for (int i = 0; i < d; ++i) w[i] = (mask >> i) & 1u ? g.upper[i] : g.lower[i];
      consider(w);
      for (int j = 0; j < d; ++j) {
        if (a[j] == 0.0) continue;
        Vec v = w;
        v[j] = 0.0;
        double x = -(a.dot(v) + b) / a[j];
        if (x > g.lower[j] && x < g.upper[j]) {
          v[j] = x;
          consider(v);
        }
      }
    }
  } else if (g.kind == GeometryKind::Simplex) {
    for (int i = 0; i < d; ++i) {
      Vec e = Vec::Zero(d);
      e[i] = 1.0;
      consider(e);
      for (int j = i + 1; j < d; ++j) {
        // w = t e_i + (1 - t) e_j on the constraint boundary
        double hi = a[i] + b, hj = a[j] + b;
        if (hi == hj) continue;
        double t = hj / (hj - hi);
        if (t > 0.0 && t < 1.0) {
          Vec v = Vec::Zero(d);
          v[i] = t;
          v[j] = 1.0 - t;
          consider(v);
        }
      }
    }
  } else {
    throw OracleError("linear program needs a box or simplex");
  }
  if (best_w.size() == 0) throw OracleError("constraint set is empty");
  return best_w;
}

Mat random_spd_matrix(int d, double mu, double Lmax, std::uint64_t seed) {
  RngStream rng{seed, 0};
  CounterEngine eng = rng.engine(Domain::Problem, 0);
  Mat M(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) M(i, j) = standard_normal(eng);
  Eigen::HouseholderQR<Mat> qr(M);
  Mat Q = qr.householderQ();
  Vec ev(d);
  for (int i = 0; i < d; ++i)
    ev[i] = d == 1 ? Lmax : mu + (Lmax - mu) * static_cast<double>(i) / (d - 1);
  Mat A = Q * ev.asDiagonal() * Q.transpose();
  return 0.5 * (A + A.transpose());
}

}  // namespace vrbound
