#ifndef VLB_SCHEDULE_HPP
#define VLB_SCHEDULE_HPP

#include <cmath>
#include <span>
#include <sstream>
#include <string>

#include "core.hpp"

namespace vlb {

enum class Regime { VP, SP, VE };

struct LogSnrEndpoints {
  double eta0 = -8.7;
  double eta1 = 5.0;
};

struct VarianceFamily {
  enum class Kind { Sigmoid, GeneralizedSigmoid, TanhSquash, VeExponential };
  Kind kind = Kind::Sigmoid;
  double a = 1.0;

  static VarianceFamily sigmoid() { return {Kind::Sigmoid, 1.0}; }
  static VarianceFamily generalized(double a) { return {Kind::GeneralizedSigmoid, a}; }
  static VarianceFamily tanh_squash() { return {Kind::TanhSquash, 1.0}; }
  static VarianceFamily ve_exponential() { return {Kind::VeExponential, 1.0}; }
};

struct Coefficients {
  double alpha;
  double sigma;
};

inline std::string to_string(Regime r) {
  switch (r) {
    case Regime::VP: return "vp";
    case Regime::SP: return "sp";
    case Regime::VE: return "ve";
  }
  return "?";
}

inline std::string to_string(const VarianceFamily& f) {
  switch (f.kind) {
    case VarianceFamily::Kind::Sigmoid: return "sigmoid";
    case VarianceFamily::Kind::GeneralizedSigmoid: {
      std::ostringstream os;
      os << "gsig" << f.a;
      return os.str();
    }
    case VarianceFamily::Kind::TanhSquash: return "tanh";
    case VarianceFamily::Kind::VeExponential: return "exp";
  }
  return "?";
}

class ChannelSchedule {
 public:
  ChannelSchedule(Regime regime, VarianceFamily family, LogSnrEndpoints ends)
      : regime_(regime), family_(family), ends_(ends) {
    if (!std::isfinite(ends.eta0) || !std::isfinite(ends.eta1))
      throw ConfigError("schedule endpoints must be finite");
    if (ends.eta0 > ends.eta1) throw OrderingError("schedule endpoints require eta0 <= eta1");
    if (family.kind == VarianceFamily::Kind::GeneralizedSigmoid && !(family.a > 0.0 && family.a <= 4.0))
      throw ConfigError("generalized sigmoid exponent must lie in (0, 4]");
    bool ve_family = family.kind == VarianceFamily::Kind::VeExponential;
    if (ve_family != (regime == Regime::VE))
      throw ConfigError("the exponential variance family pairs only with the VE regime");
  }

  Regime regime() const { return regime_; }
  const VarianceFamily& family() const { return family_; }
  const LogSnrEndpoints& endpoints() const { return ends_; }
  double eta0() const { return ends_.eta0; }
  double eta1() const { return ends_.eta1; }
  double width() const { return ends_.eta1 - ends_.eta0; }
  std::string name() const { return to_string(regime_) + "-" + to_string(family_); }

  void check_domain(double eta) const {
    if (std::isnan(eta)) throw DomainError("eta is NaN");
    if (eta < ends_.eta0) {
      std::ostringstream os;
      os.precision(17);
      os << "eta=" << eta << " is below eta0=" << ends_.eta0;
      throw DomainError(os.str());
    }
    if (eta > ends_.eta1) {
      std::ostringstream os;
      os.precision(17);
      os << "eta=" << eta << " is above eta1=" << ends_.eta1;
      throw DomainError(os.str());
    }
  }

  // Unchecked family formulas; valid for any real eta.
  double log_sigma2_unchecked(double eta) const {
    switch (family_.kind) {
      case VarianceFamily::Kind::Sigmoid: return log_sigmoid(eta);
      case VarianceFamily::Kind::GeneralizedSigmoid: return family_.a * log_sigmoid(eta);
      case VarianceFamily::Kind::TanhSquash: return log_sigmoid(2.0 * eta);
      case VarianceFamily::Kind::VeExponential: return eta;
    }
    return 0.0;
  }

  double sigma2_unchecked(double eta) const {
    switch (family_.kind) {
      case VarianceFamily::Kind::Sigmoid: return sigmoid(eta);
      case VarianceFamily::Kind::TanhSquash: return sigmoid(2.0 * eta);
      default: return std::exp(log_sigma2_unchecked(eta));
    }
  }

  // 1 - sigma^2 without cancellation (bounded families only).
  double one_minus_sigma2_unchecked(double eta) const {
    switch (family_.kind) {
      case VarianceFamily::Kind::Sigmoid: return sigmoid(-eta);
      case VarianceFamily::Kind::GeneralizedSigmoid: return -std::expm1(family_.a * log_sigmoid(eta));
      case VarianceFamily::Kind::TanhSquash: return sigmoid(-2.0 * eta);
      case VarianceFamily::Kind::VeExponential: return -std::expm1(eta);
    }
    return 0.0;
  }

  Coefficients coefficients_unchecked(double eta) const {
    double s2 = sigma2_unchecked(eta);
    double sigma = std::sqrt(s2);
    switch (regime_) {
      case Regime::VP: return {std::sqrt(one_minus_sigma2_unchecked(eta)), sigma};
      case Regime::SP: return {one_minus_sigma2_unchecked(eta) / (1.0 + sigma), sigma};
      case Regime::VE: return {1.0, sigma};
    }
    return {1.0, sigma};
  }

  // ln(sigma^2 / alpha^2), i.e. the negative log signal-to-noise ratio.
  double neg_log_snr_unchecked(double eta) const {
    if (regime_ == Regime::VP && family_.kind == VarianceFamily::Kind::Sigmoid) return eta;
    double ls2 = log_sigma2_unchecked(eta);
    switch (regime_) {
      case Regime::VP: return ls2 - std::log(one_minus_sigma2_unchecked(eta));
      case Regime::SP: {
        auto c = coefficients_unchecked(eta);
        return ls2 - 2.0 * std::log(c.alpha);
      }
      case Regime::VE: return ls2;
    }
    return ls2;
  }

  double dsigma2_deta_unchecked(double eta) const {
    switch (family_.kind) {
      case VarianceFamily::Kind::Sigmoid: return sigmoid(eta) * sigmoid(-eta);
      case VarianceFamily::Kind::GeneralizedSigmoid: return family_.a * sigmoid(-eta) * sigma2_unchecked(eta);
      case VarianceFamily::Kind::TanhSquash: return 2.0 * sigmoid(2.0 * eta) * sigmoid(-2.0 * eta);
      case VarianceFamily::Kind::VeExponential: return std::exp(eta);
    }
    return 0.0;
  }

  // sigma^-2 dsigma^2/deta, the likelihood weight.
  double likelihood_weight_unchecked(double eta) const {
    switch (family_.kind) {
      case VarianceFamily::Kind::Sigmoid: return sigmoid(-eta);
      case VarianceFamily::Kind::GeneralizedSigmoid: return family_.a * sigmoid(-eta);
      case VarianceFamily::Kind::TanhSquash: return 2.0 * sigmoid(-2.0 * eta);
      case VarianceFamily::Kind::VeExponential: return 1.0;
    }
    return 0.0;
  }

  Coefficients coefficients_at(double eta) const {
    check_domain(eta);
    return coefficients_unchecked(eta);
  }
  double alpha(double eta) const { return coefficients_at(eta).alpha; }
  double sigma(double eta) const { return coefficients_at(eta).sigma; }
  double sigma2(double eta) const {
    check_domain(eta);
    return sigma2_unchecked(eta);
  }
  double snr(double eta) const {
    check_domain(eta);
    return std::exp(-neg_log_snr_unchecked(eta));
  }
  double dsigma2_deta(double eta) const {
    check_domain(eta);
    return dsigma2_deta_unchecked(eta);
  }
  double likelihood_weight(double eta) const {
    check_domain(eta);
    return likelihood_weight_unchecked(eta);
  }

  // d(alpha, sigma)/d eta.
  Coefficients rates_at(double eta) const {
    auto c = coefficients_at(eta);
    double ds2 = dsigma2_deta_unchecked(eta);
    double dsigma = ds2 / (2.0 * c.sigma);
    switch (regime_) {
      case Regime::VP: return {-ds2 / (2.0 * c.alpha), dsigma};
      case Regime::SP: return {-dsigma, dsigma};
      case Regime::VE: return {0.0, dsigma};
    }
    return {0.0, dsigma};
  }

  // Canonical time map t -> eta, linear between the endpoints.
  double eta_at_time(double t) const {
    if (t <= 0.0) return ends_.eta0;
    if (t >= 1.0) return ends_.eta1;
    return ends_.eta0 + t * width();
  }
  double deta_dt() const { return width(); }

  // sigma^2_{t|s} = sigma_t^2 - alpha_{t|s}^2 sigma_s^2 = -sigma_t^2 expm1(lambda_s - lambda_t).
  double conditional_variance(double eta_s, double eta_t) const {
    check_order(eta_s, eta_t);
    if (eta_s == eta_t) return 0.0;
    double d = neg_log_snr_unchecked(eta_s) - neg_log_snr_unchecked(eta_t);
    return -sigma2_unchecked(eta_t) * std::expm1(d);
  }

  // -expm1(softplus(eta_s) - softplus(eta_t)) generalised as -expm1(ln alpha_t^2 - ln alpha_s^2); VP only.
  double conditional_variance_softplus(double eta_s, double eta_t) const {
    if (regime_ != Regime::VP) throw UnsupportedError("softplus conditional variance requires a VP schedule");
    check_order(eta_s, eta_t);
    auto log_alpha2 = [&](double eta) {
      if (family_.kind == VarianceFamily::Kind::Sigmoid) return -softplus(eta);
      return std::log(one_minus_sigma2_unchecked(eta));
    };
    return -std::expm1(log_alpha2(eta_t) - log_alpha2(eta_s));
  }

  double conditional_variance_naive(double eta_s, double eta_t) const {
    check_order(eta_s, eta_t);
    auto cs = coefficients_unchecked(eta_s);
    auto ct = coefficients_unchecked(eta_t);
    double a_ts = ct.alpha / cs.alpha;
    return ct.sigma * ct.sigma - a_ts * a_ts * cs.sigma * cs.sigma;
  }

  Vector forward_perturb(double eta, std::span<const double> x, std::span<const double> n) const {
    require_same_dim(x.size(), n.size(), "forward_perturb");
    auto c = coefficients_at(eta);
    Vector y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = c.alpha * x[i] + c.sigma * n[i];
    return y;
  }

 private:
  void check_order(double eta_s, double eta_t) const {
    check_domain(eta_s);
    check_domain(eta_t);
    if (eta_s > eta_t) throw OrderingError("conditional variance requires eta_s <= eta_t");
  }

  Regime regime_;
  VarianceFamily family_;
  LogSnrEndpoints ends_;
};

inline Coefficients coefficients_at(const ChannelSchedule& s, double eta) { return s.coefficients_at(eta); }
inline double dsigma2_deta(const ChannelSchedule& s, double eta) { return s.dsigma2_deta(eta); }
inline double conditional_variance(const ChannelSchedule& s, double eta_s, double eta_t) {
  return s.conditional_variance(eta_s, eta_t);
}
inline Vector forward_perturb(const ChannelSchedule& s, double eta, std::span<const double> x,
                              std::span<const double> n) {
  return s.forward_perturb(eta, x, n);
}

}  // namespace vlb

#endif
