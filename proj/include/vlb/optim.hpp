#ifndef VLB_OPTIM_HPP
#define VLB_OPTIM_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "core.hpp"

namespace vlb {

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

// Adam with decoupled weight decay.
struct AdamState {
  Vector m;
  Vector v;
  std::uint64_t step = 0;

  void resize(std::size_t n) {
    m.assign(n, 0.0);
    v.assign(n, 0.0);
    step = 0;
  }

  void update(const AdamConfig& c, Vector& params, const Vector& grad) {
    require_same_dim(params.size(), grad.size(), "adam");
    if (m.size() != params.size()) resize(params.size());
    ++step;
    double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(step));
    double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(step));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * grad[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * grad[i] * grad[i];
      double mh = m[i] / bc1, vh = v[i] / bc2;
      params[i] -= c.lr * (mh / (std::sqrt(vh) + c.eps) + c.weight_decay * params[i]);
    }
  }
};

// Exponential moving average with the usual warm-up on the decay.
struct Ema {
  double rate = 0.9999;
  bool warmup = true;
  Vector shadow;

  double decay_at(std::uint64_t step) const {
    if (!warmup) return rate;
    double s = static_cast<double>(step);
    return std::min(rate, (1.0 + s) / (10.0 + s));
  }

  void update(const Vector& params, std::uint64_t step) {
    if (shadow.size() != params.size()) {
      shadow = params;
      return;
    }
    double d = decay_at(step);
    for (std::size_t i = 0; i < params.size(); ++i) shadow[i] = d * shadow[i] + (1.0 - d) * params[i];
  }
};

}  // namespace vlb

#endif
