#ifndef VLB_NOISE_HPP
#define VLB_NOISE_HPP

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "core.hpp"
#include "rng.hpp"

namespace vlb {

// Zero-mean, unit-variance perturbation law applied independently per coordinate.
struct NoiseFamily {
  enum class Kind { Gaussian, Laplace, Logistic, Uniform };
  Kind kind = Kind::Gaussian;

  static constexpr double kLaplaceScale = 0.70710678118654752440;  // 1/sqrt(2)
  static constexpr double kLogisticScale = 0.55132889542179204315;  // sqrt(3)/pi
  static constexpr double kUniformHalfWidth = 1.7320508075688772935;  // sqrt(3)

  static NoiseFamily gaussian() { return {Kind::Gaussian}; }
  static NoiseFamily laplace() { return {Kind::Laplace}; }
  static NoiseFamily logistic() { return {Kind::Logistic}; }
  static NoiseFamily uniform() { return {Kind::Uniform}; }

  static std::vector<NoiseFamily> all() { return {gaussian(), laplace(), logistic(), uniform()}; }

  std::string name() const {
    switch (kind) {
      case Kind::Gaussian: return "gaussian";
      case Kind::Laplace: return "laplace";
      case Kind::Logistic: return "logistic";
      case Kind::Uniform: return "uniform";
    }
    return "?";
  }

  static NoiseFamily parse(const std::string& s) {
    if (s == "gaussian" || s == "normal") return gaussian();
    if (s == "laplace") return laplace();
    if (s == "logistic") return logistic();
    if (s == "uniform") return uniform();
    throw ConfigError("unknown noise family '" + s + "'");
  }

  double pdf(double z) const {
    switch (kind) {
      case Kind::Gaussian: return normal_pdf(z);
      case Kind::Laplace: return std::exp(-std::abs(z) / kLaplaceScale) / (2.0 * kLaplaceScale);
      case Kind::Logistic: {
        double e = std::exp(-std::abs(z) / kLogisticScale);
        return e / (kLogisticScale * (1.0 + e) * (1.0 + e));
      }
      case Kind::Uniform: return std::abs(z) <= kUniformHalfWidth ? 0.5 / kUniformHalfWidth : 0.0;
    }
    return 0.0;
  }

  double log_pdf(double z) const {
    switch (kind) {
      case Kind::Gaussian: return -0.5 * z * z - 0.5 * kLn2Pi;
      case Kind::Laplace: return -std::abs(z) / kLaplaceScale - std::log(2.0 * kLaplaceScale);
      case Kind::Logistic: {
        double u = std::abs(z) / kLogisticScale;
        return -u - 2.0 * std::log1p(std::exp(-u)) - std::log(kLogisticScale);
      }
      case Kind::Uniform: return std::abs(z) <= kUniformHalfWidth ? -std::log(2.0 * kUniformHalfWidth) : -kInf;
    }
    return -kInf;
  }

  double cdf(double z) const { return z <= 0 ? lower_tail(z) : 1.0 - lower_tail(-z); }

  // F(z) for z <= 0 and, by symmetry, the upper tail 1 - F(-z).
  double lower_tail(double z) const {
    switch (kind) {
      case Kind::Gaussian: return normal_cdf(z);
      case Kind::Laplace: return z <= 0 ? 0.5 * std::exp(z / kLaplaceScale) : 1.0 - 0.5 * std::exp(-z / kLaplaceScale);
      case Kind::Logistic: return sigmoid(z / kLogisticScale);
      case Kind::Uniform:
        if (z <= -kUniformHalfWidth) return 0.0;
        if (z >= kUniformHalfWidth) return 1.0;
        return 0.5 * (z + kUniformHalfWidth) / kUniformHalfWidth;
    }
    return 0.0;
  }

  // P(a < Z < b), evaluated on the side that avoids cancellation.
  double mass(double a, double b) const {
    if (b <= a) return 0.0;
    if (a >= 0) return lower_tail(-a) - lower_tail(-b);
    if (b <= 0) return lower_tail(b) - lower_tail(a);
    return 1.0 - lower_tail(a) - lower_tail(-b);
  }

  double inverse_cdf(double u) const {
    switch (kind) {
      case Kind::Gaussian: return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
      case Kind::Laplace:
        return u < 0.5 ? kLaplaceScale * std::log(2.0 * u) : -kLaplaceScale * std::log(2.0 * (1.0 - u));
      case Kind::Logistic: return kLogisticScale * (std::log(u) - std::log1p(-u));
      case Kind::Uniform: return (2.0 * u - 1.0) * kUniformHalfWidth;
    }
    return 0.0;
  }

  double sample(Rng& rng) const {
    if (kind == Kind::Gaussian) return rng.normal();
    return inverse_cdf(rng.uniform_open());
  }

  // Integration panels covering the effective support in z.
  std::vector<double> panels() const {
    std::vector<double> e;
    switch (kind) {
      case Kind::Uniform: return {-kUniformHalfWidth, kUniformHalfWidth};
      case Kind::Gaussian: {
        for (int i = -10; i <= 10; ++i) e.push_back(1.0 * i);
        return e;
      }
      case Kind::Laplace:
      case Kind::Logistic: {
        double s = kind == Kind::Laplace ? kLaplaceScale : kLogisticScale;
        std::vector<double> pos{0.0, 0.25 * s, 0.5 * s, s, 1.5 * s, 2.0 * s, 3.0 * s, 4.0 * s, 6.0 * s,
                                8.0 * s, 12.0 * s, 16.0 * s, 24.0 * s, 32.0 * s, 40.0 * s};
        for (auto it = pos.rbegin(); it != pos.rend(); ++it)
          if (*it > 0) e.push_back(-*it);
        e.insert(e.end(), pos.begin(), pos.end());
        return e;
      }
    }
    return e;
  }
};

}  // namespace vlb

#endif
