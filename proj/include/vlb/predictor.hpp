#ifndef VLB_PREDICTOR_HPP
#define VLB_PREDICTOR_HPP

#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>

#include "core.hpp"
#include "density.hpp"
#include "schedule.hpp"

namespace vlb {

// Warm-up noise applied to the data before training: x~ = alpha0 x + sigma0 u, u ~ psi.
struct WarmStartRecord {
  std::string noise = "gaussian";
  double alpha0 = 1.0;
  double sigma0 = 0.0;
  std::uint64_t seed = 0;

  bool same_channel(const WarmStartRecord& o) const {
    return noise == o.noise && alpha0 == o.alpha0 && sigma0 == o.sigma0;
  }
};

// Noise prediction n_hat(y, eta).
class NoisePredictor {
 public:
  virtual ~NoisePredictor() = default;
  virtual std::size_t dim() const = 0;
  virtual void predict(std::span<const double> y, double eta, std::span<double> out) const = 0;
  virtual std::optional<WarmStartRecord> warm_start() const { return std::nullopt; }

  Vector predict(std::span<const double> y, double eta) const {
    Vector out(dim());
    predict(y, eta, out);
    return out;
  }
};

using PredictorHandle = std::shared_ptr<const NoisePredictor>;

// n_hat = -sigma * score of the model pushed through the Gaussian channel.
class ExactScorePredictor final : public NoisePredictor {
 public:
  using NoisePredictor::predict;
  ExactScorePredictor(ToyDensity model, ChannelSchedule schedule)
      : model_(std::move(model)), schedule_(std::move(schedule)) {
    validate(model_);
  }
  std::size_t dim() const override { return dim_of(model_); }
  void predict(std::span<const double> y, double eta, std::span<double> out) const override {
    auto c = schedule_.coefficients_at(eta);
    channel_score(y, c.alpha, c.sigma, out);
    for (double& v : out) v *= -c.sigma;
  }
  void channel_score(std::span<const double> y, double alpha, double sigma, std::span<double> out) const {
    require_same_dim(y.size(), dim(), "exact score");
    if (const auto* m = std::get_if<GaussianMixture>(&model_))
      detail::mixture_log_density(*m, alpha, sigma, y, out);
    else
      detail::grid_log_density(std::get<QuantizedGrid>(model_), NoiseFamily::gaussian(), alpha, sigma, y, out);
  }
  const ToyDensity& model() const { return model_; }
  const ChannelSchedule& schedule() const { return schedule_; }

 private:
  ToyDensity model_;
  ChannelSchedule schedule_;
};

class ZeroPredictor final : public NoisePredictor {
 public:
  using NoisePredictor::predict;
  explicit ZeroPredictor(std::size_t dim) : dim_(dim) {}
  std::size_t dim() const override { return dim_; }
  void predict(std::span<const double>, double, std::span<double> out) const override {
    std::fill(out.begin(), out.end(), 0.0);
  }

 private:
  std::size_t dim_;
};

// Adds a smooth deterministic corruption amp * sin(freq * y + phase + shift * eta).
class PerturbedPredictor final : public NoisePredictor {
 public:
  using NoisePredictor::predict;
  PerturbedPredictor(PredictorHandle base, double amp, double freq, double phase, double shift = 0.3)
      : base_(std::move(base)), amp_(amp), freq_(freq), phase_(phase), shift_(shift) {}
  std::size_t dim() const override { return base_->dim(); }
  void predict(std::span<const double> y, double eta, std::span<double> out) const override {
    base_->predict(y, eta, out);
    for (std::size_t d = 0; d < out.size(); ++d)
      out[d] += amp_ * std::sin(freq_ * y[d] + phase_ + shift_ * eta + static_cast<double>(d));
  }

 private:
  PredictorHandle base_;
  double amp_, freq_, phase_, shift_;
};

// (1 - lambda) a + lambda b.
class InterpolatedPredictor final : public NoisePredictor {
 public:
  using NoisePredictor::predict;
  InterpolatedPredictor(PredictorHandle a, PredictorHandle b, double lambda)
      : a_(std::move(a)), b_(std::move(b)), lambda_(lambda) {
    require_same_dim(a_->dim(), b_->dim(), "interpolated predictor");
  }
  std::size_t dim() const override { return a_->dim(); }
  void predict(std::span<const double> y, double eta, std::span<double> out) const override {
    Vector tmp(out.size());
    a_->predict(y, eta, out);
    b_->predict(y, eta, tmp);
    for (std::size_t d = 0; d < out.size(); ++d) out[d] = (1.0 - lambda_) * out[d] + lambda_ * tmp[d];
  }

 private:
  PredictorHandle a_, b_;
  double lambda_;
};

enum class PredictorKind { Score, Noise, Data, Velocity, StaticVelocity };

inline std::string to_string(PredictorKind k) {
  switch (k) {
    case PredictorKind::Score: return "score";
    case PredictorKind::Noise: return "noise";
    case PredictorKind::Data: return "data";
    case PredictorKind::Velocity: return "velocity";
    case PredictorKind::StaticVelocity: return "static_velocity";
  }
  return "?";
}

// Time derivatives of alpha and sigma along the path.
struct ScheduleRates {
  double dalpha_dt;
  double dsigma_dt;
};

namespace detail {

inline void to_noise(PredictorKind from, std::span<const double> v, std::span<const double> y, double alpha,
                     double sigma, const std::optional<ScheduleRates>& rates, std::span<double> n) {
  for (std::size_t i = 0; i < n.size(); ++i) {
    switch (from) {
      case PredictorKind::Score: n[i] = -sigma * v[i]; break;
      case PredictorKind::Noise: n[i] = v[i]; break;
      case PredictorKind::Data: n[i] = (y[i] - alpha * v[i]) / sigma; break;
      case PredictorKind::Velocity: {
        double ra = rates->dalpha_dt / alpha;
        n[i] = (v[i] - ra * y[i]) / (rates->dsigma_dt - ra * sigma);
        break;
      }
      case PredictorKind::StaticVelocity: n[i] = alpha * (v[i] + (sigma / alpha) * y[i]) / (alpha * alpha + sigma * sigma); break;
    }
  }
}

inline void from_noise(PredictorKind to, std::span<const double> n, std::span<const double> y, double alpha,
                       double sigma, const std::optional<ScheduleRates>& rates, std::span<double> out) {
  for (std::size_t i = 0; i < n.size(); ++i) {
    switch (to) {
      case PredictorKind::Score: out[i] = -n[i] / sigma; break;
      case PredictorKind::Noise: out[i] = n[i]; break;
      case PredictorKind::Data: out[i] = (y[i] - sigma * n[i]) / alpha; break;
      case PredictorKind::Velocity: {
        double ra = rates->dalpha_dt / alpha;
        out[i] = ra * y[i] + (rates->dsigma_dt - ra * sigma) * n[i];
        break;
      }
      // alpha n - sigma x_hat with x_hat = (y - sigma n) / alpha
      case PredictorKind::StaticVelocity: out[i] = ((alpha * alpha + sigma * sigma) * n[i] - sigma * y[i]) / alpha; break;
    }
  }
}

}  // namespace detail

inline Vector convert_predictor(PredictorKind from, PredictorKind to, std::span<const double> value,
                                std::span<const double> y, double alpha, double sigma,
                                std::optional<ScheduleRates> rates = std::nullopt) {
  require_same_dim(value.size(), y.size(), "convert_predictor");
  bool data_involved = from == PredictorKind::Data || to == PredictorKind::Data ||
                       from == PredictorKind::StaticVelocity || to == PredictorKind::StaticVelocity ||
                       from == PredictorKind::Velocity || to == PredictorKind::Velocity;
  if (data_involved && alpha == 0.0) throw DomainError("alpha = 0 makes the data predictor singular");
  if (!(sigma > 0.0) && from != to) throw DomainError("predictor conversion requires sigma > 0");
  if ((from == PredictorKind::Velocity || to == PredictorKind::Velocity) && !rates)
    throw ConfigError("velocity conversion requires schedule rates");
  if (from == to) return Vector(value.begin(), value.end());
  Vector n(value.size()), out(value.size());
  detail::to_noise(from, value, y, alpha, sigma, rates, n);
  detail::from_noise(to, n, y, alpha, sigma, rates, out);
  return out;
}

}  // namespace vlb

#endif
