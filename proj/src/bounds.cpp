#include "vrbound/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vrbound {

double confidence_factor(double delta, double kappa) {
  if (!(delta > 0.0 && delta <= 1.0))
    throw BoundsError("delta must lie in (0, 1]");
  if (!(kappa >= 1.0)) throw BoundsError("kappa must be >= 1");
  return std::sqrt(kappa) + std::sqrt(3.0 * std::log(1.0 / delta));
}

std::string to_string(EnvelopeRow r) {
  switch (r) {
    case EnvelopeRow::Momentum: return "momentum";
    case EnvelopeRow::ProbMomentum: return "prob_momentum";
    case EnvelopeRow::PeriodicMomentum: return "periodic_momentum";
    case EnvelopeRow::Storm: return "storm";
    case EnvelopeRow::Page: return "page";
    case EnvelopeRow::Spider: return "spider";
    case EnvelopeRow::SoMomentum: return "so_momentum";
    case EnvelopeRow::SoPage: return "so_page";
    case EnvelopeRow::SoSpider: return "so_spider";
  }
  return "?";
}

EnvelopeRow envelope_row_from_string(const std::string& s) {
  for (int f = 0; f < 3; ++f)
    for (int c = 1; c <= 3; ++c) {
      EnvelopeRow r = *row_for(static_cast<Family>(f), c);
      if (to_string(r) == s) return r;
    }
  throw BoundsError("unknown estimator row: " + s);
}

std::optional<EnvelopeRow> row_for(Family f, int case_id) {
  if (case_id < 1 || case_id > 3) return std::nullopt;
  static const EnvelopeRow table[3][3] = {
      {EnvelopeRow::Momentum, EnvelopeRow::ProbMomentum, EnvelopeRow::PeriodicMomentum},
      {EnvelopeRow::Storm, EnvelopeRow::Page, EnvelopeRow::Spider},
      {EnvelopeRow::SoMomentum, EnvelopeRow::SoPage, EnvelopeRow::SoSpider}};
  return table[static_cast<int>(f)][case_id - 1];
}

Family row_family(EnvelopeRow r) { return static_cast<Family>(static_cast<int>(r) / 3); }
int row_case(EnvelopeRow r) { return static_cast<int>(r) % 3 + 1; }

BoundEnvelope::BoundEnvelope(EnvelopeRow row, EnvelopeParams params,
                             ProblemConstants constants, double delta, double kappa)
    : row_(row), params_(params), c_(constants), delta_(delta), kappa_(kappa) {
  if (!(delta > 0.0 && delta <= 1.0)) throw BoundsError("delta must lie in (0, 1]");
  if (!(kappa >= 1.0)) throw BoundsError("kappa must be >= 1");
  if (params_.T < 1) throw BoundsError("horizon must be positive");
  if (params_.B < 1) throw BoundsError("batch size must be positive");
  if (!(params_.eta >= 0.0)) throw BoundsError("eta must be nonnegative");
  c_.validate();
  switch (row_case(row)) {
    case 1:
      if (!(params_.beta >= 0.0 && params_.beta < 1.0))
        throw BoundsError("case 1 rows need beta in [0, 1)");
      break;
    case 2:
      if (!(params_.p > 0.0 && params_.p <= 1.0))
        throw BoundsError("case 2 rows need p in (0, 1]");
      break;
    case 3:
      if (params_.E < 1) throw BoundsError("case 3 rows need E >= 1");
      break;
  }
}

EnvelopeTerms BoundEnvelope::terms(int t) const {
  if (t < 0) throw BoundsError("t must be nonnegative");
  const double T = params_.T;
  const double B = params_.B;
  const double eta = params_.eta;
  const double G = c_.G_update;
  const double sigma = c_.sigma;
  const double k = kappa_;
  const double d = delta_;
  auto C = [k](double x) { return confidence_factor(std::min(x, 1.0), k); };
  EnvelopeTerms out;
  const Family fam = row_family(row_);
  const double corr = fam == Family::SecondOrder ? c_.gamma : c_.ell;
  switch (row_case(row_)) {
    case 1: {
      const double beta = params_.beta;
      const double C2T = C(d / (2.0 * T));
      const double bt = std::pow(beta, static_cast<double>(t));
      out.init = bt * C2T * sigma / std::sqrt(B);
      const double omb = 1.0 - beta;
      if (fam == Family::ZerothOrder) {
        out.bias = G * c_.L * eta / omb;
        out.noise = C2T * sigma * std::sqrt(omb);
      } else {
        if (fam == Family::SecondOrder)
          out.bias = c_.alpha * beta * eta * eta * G * G / (2.0 * omb);
        const double num = 2.0 * omb * omb * sigma * sigma +
                           2.0 * beta * beta * corr * corr * eta * eta * G * G;
        out.noise = C2T * std::sqrt(num / (1.0 - beta * beta));
      }
      break;
    }
    case 2: {
      const double p = params_.p;
      const double C4T = C(d / (4.0 * T));
      const double lg = std::log(4.0 * T / d);
      out.init = C4T * sigma / std::sqrt(B);
      if (fam == Family::ZerothOrder) {
        out.bias = G * c_.L * eta / p * lg;
      } else {
        if (fam == Family::SecondOrder)
          out.bias = c_.alpha * eta * eta * G * G / (2.0 * p) * lg;
        out.noise = C4T * corr * eta * G * std::sqrt(2.0 / p * lg);
      }
      break;
    }
    case 3: {
      const double E = params_.E;
      out.init = C(d / (2.0 * T / E)) * sigma / std::sqrt(B);
      if (fam == Family::ZerothOrder) {
        out.bias = G * c_.L * eta * E;
      } else {
        if (fam == Family::SecondOrder) out.bias = c_.alpha * eta * eta * G * G * E / 2.0;
        out.noise = C(d / (2.0 * T)) * corr * eta * G * std::sqrt(2.0 * E);
      }
      break;
    }
  }
  return out;
}

double BoundEnvelope::sup(int t_from, int t_to) const {
  double m = 0.0;
  for (int t = t_from; t <= t_to; ++t) m = std::max(m, (*this)(t));
  return m;
}

std::optional<BoundEnvelope> envelope(Family f, int case_id, const EnvelopeParams& params,
                                      const ProblemConstants& constants, double delta,
                                      double kappa) {
  auto row = row_for(f, case_id);
  if (!row) return std::nullopt;
  return BoundEnvelope(*row, params, constants, delta, kappa);
}

BoundEnvelope require_envelope(Family f, int case_id, const EnvelopeParams& params,
                               const ProblemConstants& constants, double delta,
                               double kappa) {
  auto env = envelope(f, case_id, params, constants, delta, kappa);
  if (!env)
    throw BoundsError("no envelope for family " + to_string(f) + " case " +
                      std::to_string(case_id));
  return *env;
}

// ---------------------------------------------------------------- selection

namespace {

void require_coefficients(const LemmaCoefficients& c, Family f) {
  for (double v : {c.C1, c.C2, c.C3, c.C4, c.C5, c.C6})
    if (!(v >= 0.0) || !std::isfinite(v))
      throw BoundsError("lemma coefficients must be finite and nonnegative");
  if (!(c.C1 > 0.0 && c.C2 > 0.0 && c.C4 > 0.0 && c.C5 > 0.0))
    throw BoundsError("lemma needs C1, C2, C4, C5 > 0");
  if (f == Family::SecondOrder && !(c.C6 > 0.0))
    throw BoundsError("family 3 needs C6 > 0");
}

}  // namespace

double lemma_objective_case1(Family f, const LemmaCoefficients& c, double eta, double y,
                             double T) {
  double v = c.C1 / (eta * T) + c.C2 * eta + c.C3 / (y * T) + c.C4 * std::sqrt(y);
  switch (f) {
    case Family::ZerothOrder: return v + c.C5 * eta / y;
    case Family::FirstOrder: return v + c.C5 * eta / std::sqrt(y);
    case Family::SecondOrder: return v + c.C5 * eta / std::sqrt(y) + c.C6 * eta * eta / y;
  }
  return v;
}

double lemma_objective_case23(Family f, const LemmaCoefficients& c, double eta, double p,
                              double T) {
  double v = c.C1 / (eta * T) + c.C2 * eta + c.C4 * std::sqrt(p);
  switch (f) {
    case Family::ZerothOrder: return v + c.C5 * eta / p;
    case Family::FirstOrder: return v + c.C5 * eta / std::sqrt(p);
    case Family::SecondOrder: return v + c.C5 * eta / std::sqrt(p) + c.C6 * eta * eta / p;
  }
  return v;
}

ParamSelection select_params_case1(const LemmaCoefficients& c, Family f, double T) {
  require_coefficients(c, f);
  if (!(T >= 1.0)) throw BoundsError("horizon must be >= 1");
  ParamSelection s;
  const double L1 = std::sqrt(c.C1 * c.C2 / T);
  const double L2 = std::cbrt(c.C3 * c.C4 * c.C4 / T);
  const double eta_A = std::sqrt(c.C1 / c.C2) / std::sqrt(T);
  const double y_A = std::pow(c.C3 / c.C4, 2.0 / 3.0) * std::pow(T, -2.0 / 3.0);
  double threshold = std::max(c.C3 / c.C4, c.C1 * c.C5 / (c.C4 * c.C4));
  std::string cond = "T >= max{C3/C4, C1*C5/C4^2}";
  switch (f) {
    case Family::ZerothOrder: {
      const double eta_B = std::pow(c.C1 * c.C1 * c.C1 / (c.C4 * c.C4 * c.C5), 0.25) *
                           std::pow(T, -0.75);
      const double y_B = std::sqrt(c.C1 * c.C5 / (c.C4 * c.C4)) / std::sqrt(T);
      s.eta = std::min(eta_A, eta_B);
      s.one_minus_beta = std::max(y_A, y_B);
      s.predicted_bound =
          2.0 * L1 + 2.0 * L2 + 3.0 * std::pow(c.C1 * c.C4 * c.C4 * c.C5 / T, 0.25);
      break;
    }
    case Family::FirstOrder:
    case Family::SecondOrder: {
      const double eta_C = std::cbrt(c.C1 * c.C1 / (c.C4 * c.C5)) * std::pow(T, -2.0 / 3.0);
      const double y_C =
          std::pow(c.C1 * c.C5 / (c.C4 * c.C4), 2.0 / 3.0) * std::pow(T, -2.0 / 3.0);
      s.eta = std::min(eta_A, eta_C);
      s.one_minus_beta = std::max(y_A, y_C);
      s.predicted_bound = 2.0 * L1 + 2.0 * L2 + 3.0 * std::cbrt(c.C1 * c.C4 * c.C5 / T);
      if (f == Family::SecondOrder) {
        const double eta_D =
            std::pow(c.C1 * c.C1 * c.C1 / (c.C4 * c.C4 * c.C6), 0.2) * std::pow(T, -0.6);
        const double y_D = std::pow(c.C1 * c.C1 * c.C6 / (c.C4 * c.C4 * c.C4), 0.4) *
                           std::pow(T, -0.8);
        s.eta = std::min(s.eta, eta_D);
        s.one_minus_beta = std::max(s.one_minus_beta, y_D);
        s.predicted_bound +=
            3.0 * std::pow(c.C1 * c.C1 * c.C4 * c.C4 * c.C6 / (T * T), 0.2);
        threshold = std::max(threshold,
                             std::sqrt(c.C1 * c.C1 * c.C6 / (c.C4 * c.C4 * c.C4)));
        cond = "T >= max{C3/C4, C1*C5/C4^2, (C1^2*C6/C4^3)^(1/2)}";
      }
      break;
    }
  }
  s.admissible = T >= threshold && s.one_minus_beta > 0.0 && s.one_minus_beta <= 1.0;
  if (!s.admissible) s.violated = cond;
  return s;
}

ParamSelection select_params_case23(const LemmaCoefficients& c, Family f, double T) {
  require_coefficients(c, f);
  if (c.C3 != 0.0) throw BoundsError("reset lemma requires C3 = 0");
  if (!(T >= 1.0)) throw BoundsError("horizon must be >= 1");
  ParamSelection s;
  const double M1 = std::sqrt(c.C1 * c.C2 / T);
  const double eta_A = std::sqrt(c.C1 / (c.C2 * T));
  double threshold = 0.0;
  double Ecal = 1.0;
  switch (f) {
    case Family::ZerothOrder: {
      const double eta_B = std::pow(2.0 * c.C1 * c.C1 * c.C1 /
                                        (c.C4 * c.C4 * c.C5 * T * T * T), 0.25);
      s.eta = std::min(eta_A, eta_B);
      Ecal = std::sqrt(c.C4 * c.C4 * T / (8.0 * c.C1 * c.C5));
      s.predicted_bound =
          2.0 * M1 + 4.0 * std::pow(c.C1 * c.C4 * c.C4 * c.C5 / (2.0 * T), 0.25);
      threshold = 8.0 * c.C1 * c.C5 / (c.C4 * c.C4);
      s.violated = "T >= 8*C1*C5/C4^2";
      break;
    }
    case Family::FirstOrder:
    case Family::SecondOrder: {
      const double eta_C =
          std::cbrt(c.C1 * c.C1 / (std::sqrt(2.0) * c.C4 * c.C5 * T * T));
      s.eta = std::min(eta_A, eta_C);
      Ecal = std::cbrt(std::pow(c.C4, 4) * T * T / (2.0 * c.C1 * c.C1 * c.C5 * c.C5));
      const double M3 = std::cbrt(std::sqrt(2.0) * c.C1 * c.C4 * c.C5 / T);
      s.predicted_bound = 2.0 * M1 + 3.0 * M3;
      threshold = std::sqrt(2.0) * c.C1 * c.C5 / (c.C4 * c.C4);
      s.violated = "T >= sqrt(2)*C1*C5/C4^2";
      if (f == Family::SecondOrder) {
        const double eta_D =
            std::pow(c.C1 * c.C1 * c.C1 / (4.0 * c.C4 * c.C4 * c.C6 * T * T * T), 0.2);
        s.eta = std::min(s.eta, eta_D);
        const double E_D = std::pow(std::pow(c.C4, 6) * std::pow(T, 4) /
                                        (16.0 * std::pow(c.C1, 4) * c.C6 * c.C6), 0.2);
        Ecal = std::min(Ecal, E_D);
        const double M4 =
            std::pow(c.C1 * c.C1 * c.C4 * c.C4 * c.C6 / (8.0 * T * T), 0.2);
        s.predicted_bound += 5.0 * M4;
        threshold = std::max(threshold,
                             2.0 * std::sqrt(c.C1 * c.C1 * c.C6 / std::pow(c.C4, 3)));
        s.violated = "T >= max{sqrt(2)*C1*C5/C4^2, 2*(C1^2*C6/C4^3)^(1/2)}";
      }
      break;
    }
  }
  if (!(Ecal < 1e9)) throw BoundsError("batch size overflow");
  s.E = std::max(1, static_cast<int>(std::ceil(Ecal)));
  s.B = s.E;
  s.p = 1.0 / s.E;
  s.admissible = T >= threshold;
  if (s.admissible) s.violated.clear();
  return s;
}

long long min_horizon(double epsilon, double delta, double q) {
  if (!(epsilon > 0.0 && delta > 0.0 && q > 0.0))
    throw BoundsError("epsilon, delta and q must be positive");
  const double lg = std::max(1.0, std::log(1.0 / (epsilon * delta)));
  const double v = std::exp(q * q) / epsilon * std::pow(lg, q);
  if (!(v < 9e18)) throw BoundsError("minimum horizon overflows");
  return static_cast<long long>(std::ceil(v));
}

}  // namespace vrbound
