#ifndef VLB_DENSITY_HPP
#define VLB_DENSITY_HPP

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "core.hpp"
#include "noise.hpp"
#include "quadrature.hpp"
#include "rng.hpp"

namespace vlb {

// Isotropic Gaussian mixture in D <= 2 dimensions.
struct GaussianMixture {
  std::vector<double> weights;
  std::vector<Vector> means;
  std::vector<double> variances;

  std::size_t dim() const { return means.empty() ? 0 : means.front().size(); }
  std::size_t components() const { return weights.size(); }

  static GaussianMixture normal(std::size_t dim, double mean = 0.0, double variance = 1.0) {
    return {{1.0}, {Vector(dim, mean)}, {variance}};
  }

  void validate() const {
    if (weights.empty() || weights.size() != means.size() || weights.size() != variances.size())
      throw ConfigError("mixture: weights, means and variances must have equal nonzero length");
    std::size_t d = dim();
    if (d < 1 || d > 2) throw ConfigError("mixture: dimension must be 1 or 2");
    double total = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
      if (!(weights[k] >= 0.0)) throw ConfigError("mixture: weights must be nonnegative");
      if (!(variances[k] > 0.0) || !std::isfinite(variances[k])) throw ConfigError("mixture: variances must be positive");
      if (means[k].size() != d) throw DimensionError("mixture: component means differ in dimension");
      total += weights[k];
    }
    if (std::abs(total - 1.0) > 1e-12) throw ConfigError("mixture: weights must sum to 1");
  }
};

// Discrete law on `levels` equal bins of [lo, hi] per coordinate; masses are joint, row-major.
struct QuantizedGrid {
  int levels = 256;
  double lo = -1.0;
  double hi = 1.0;
  std::size_t dimension = 1;
  std::vector<double> masses;

  std::size_t dim() const { return dimension; }
  double bin_width() const { return (hi - lo) / levels; }
  double bin_center(int k) const { return lo + (k + 0.5) * bin_width(); }

  static QuantizedGrid uniform_source(int levels, std::size_t dim = 1, double lo = -1.0, double hi = 1.0) {
    std::size_t n = dim == 1 ? levels : static_cast<std::size_t>(levels) * levels;
    return {levels, lo, hi, dim, std::vector<double>(n, 1.0 / static_cast<double>(n))};
  }

  void validate() const {
    if (levels < 1) throw ConfigError("grid: levels must be positive");
    if (!(hi > lo)) throw ConfigError("grid: empty support");
    if (dimension < 1 || dimension > 2) throw ConfigError("grid: dimension must be 1 or 2");
    std::size_t n = dimension == 1 ? levels : static_cast<std::size_t>(levels) * levels;
    if (masses.size() != n) throw ConfigError("grid: mass vector has the wrong length");
    double total = 0.0;
    for (double m : masses) {
      if (!(m >= 0.0)) throw ConfigError("grid: masses must be nonnegative");
      total += m;
    }
    if (std::abs(total - 1.0) > 1e-12) throw ConfigError("grid: masses must sum to 1");
  }
};

using ToyDensity = std::variant<GaussianMixture, QuantizedGrid>;

inline std::size_t dim_of(const ToyDensity& d) {
  return std::visit([](const auto& v) { return v.dim(); }, d);
}

inline void validate(const ToyDensity& d) {
  std::visit([](const auto& v) { v.validate(); }, d);
}

class Density {
 public:
  virtual ~Density() = default;
  virtual std::size_t dim() const = 0;
  virtual double log_density(std::span<const double> x) const = 0;
  virtual bool has_score() const { return false; }
  virtual void score(std::span<const double> x, std::span<double> out) const {
    (void)x;
    (void)out;
    throw UnsupportedError("score is undefined for this density");
  }
  // Default integration box.
  virtual std::vector<Interval> bounds() const = 0;

  Vector score(std::span<const double> x) const {
    Vector out(dim());
    score(x, out);
    return out;
  }
};

using DensityHandle = std::shared_ptr<const Density>;

namespace detail {

inline double mixture_log_density(const GaussianMixture& m, double alpha, double sigma,
                                  std::span<const double> y, std::span<double> score_out) {
  const std::size_t K = m.components(), D = m.dim();
  require_same_dim(y.size(), D, "mixture density");
  double logs[64];
  std::vector<double> big;
  double* lp = logs;
  if (K > 64) {
    big.resize(K);
    lp = big.data();
  }
  for (std::size_t k = 0; k < K; ++k) {
    double var = alpha * alpha * m.variances[k] + sigma * sigma;
    double q = 0.0;
    for (std::size_t d = 0; d < D; ++d) {
      double r = y[d] - alpha * m.means[k][d];
      q += r * r;
    }
    lp[k] = (m.weights[k] > 0 ? std::log(m.weights[k]) : -kInf) - 0.5 * q / var -
            0.5 * static_cast<double>(D) * (kLn2Pi + std::log(var));
  }
  double lse = log_sum_exp(std::span<const double>(lp, K));
  if (!score_out.empty()) {
    std::fill(score_out.begin(), score_out.end(), 0.0);
    for (std::size_t k = 0; k < K; ++k) {
      double r = std::exp(lp[k] - lse);
      if (r == 0.0) continue;
      double var = alpha * alpha * m.variances[k] + sigma * sigma;
      for (std::size_t d = 0; d < D; ++d) score_out[d] -= r * (y[d] - alpha * m.means[k][d]) / var;
    }
  }
  return lse;
}

inline std::vector<Interval> mixture_bounds(const GaussianMixture& m, double alpha, double sigma, double extra_sd = 0.0) {
  std::vector<Interval> b;
  double sd = 0.0;
  for (double v : m.variances) sd = std::max(sd, std::sqrt(alpha * alpha * v + sigma * sigma));
  sd = std::max(sd, extra_sd);
  for (std::size_t d = 0; d < m.dim(); ++d) {
    double lo = kInf, hi = -kInf;
    for (const auto& mu : m.means) {
      lo = std::min(lo, alpha * mu[d]);
      hi = std::max(hi, alpha * mu[d]);
    }
    b.push_back({lo - 12.0 * sd, hi + 12.0 * sd});
  }
  return b;
}

// Smoothed histogram density; kernel is noise with scale sigma, data scaled by alpha.
inline double grid_log_density(const QuantizedGrid& g, const NoiseFamily& noise, double alpha, double sigma,
                               std::span<const double> y, std::span<double> score_out) {
  const std::size_t D = g.dim();
  require_same_dim(y.size(), D, "grid density");
  const int L = g.levels;
  const double w = g.bin_width();
  // Per-coordinate kernel masses and their y-derivatives.
  std::vector<double> mass(D * L), dmass(D * L);
  for (std::size_t d = 0; d < D; ++d) {
    for (int k = 0; k < L; ++k) {
      double a = alpha * (g.lo + k * w), b = alpha * (g.lo + (k + 1) * w);
      double m = 0.0, dm = 0.0;
      if (sigma == 0.0) {
        m = (y[d] >= a && y[d] < b) ? 1.0 : 0.0;
      } else {
        double z_hi = (y[d] - a) / sigma, z_lo = (y[d] - b) / sigma;
        if (!(z_lo > 40.0 || z_hi < -40.0) || noise.kind != NoiseFamily::Kind::Gaussian) {
          m = noise.mass(z_lo, z_hi);
          if (!score_out.empty()) dm = (noise.pdf(z_hi) - noise.pdf(z_lo)) / sigma;
        }
      }
      mass[d * L + k] = m / (alpha * w);
      dmass[d * L + k] = dm / (alpha * w);
    }
  }
  double p = 0.0;
  double grad[2] = {0.0, 0.0};
  if (D == 1) {
    for (int k = 0; k < L; ++k) {
      p += g.masses[k] * mass[k];
      grad[0] += g.masses[k] * dmass[k];
    }
  } else {
    for (int i = 0; i < L; ++i) {
      double mi = mass[i], di = dmass[i];
      if (mi == 0.0 && di == 0.0) continue;
      for (int j = 0; j < L; ++j) {
        double pm = g.masses[static_cast<std::size_t>(i) * L + j];
        p += pm * mi * mass[L + j];
        grad[0] += pm * di * mass[L + j];
        grad[1] += pm * mi * dmass[L + j];
      }
    }
  }
  if (!score_out.empty()) {
    if (sigma == 0.0) throw UnsupportedError("score is undefined for an unsmoothed quantized grid");
    if (p > 0.0) {
      for (std::size_t d = 0; d < D; ++d) score_out[d] = grad[d] / p;
    } else {
      // Far tail: the nearest support point dominates a Gaussian kernel.
      for (std::size_t d = 0; d < D; ++d) {
        double c = std::clamp(y[d], alpha * g.lo, alpha * g.hi);
        score_out[d] = -(y[d] - c) / (sigma * sigma);
      }
    }
  }
  return p > 0.0 ? std::log(p) : -kInf;
}

}  // namespace detail

class MixtureDensity final : public Density {
 public:
  MixtureDensity(GaussianMixture m, double alpha = 1.0, double sigma = 0.0)
      : m_(std::move(m)), alpha_(alpha), sigma_(sigma) {
    m_.validate();
  }
  std::size_t dim() const override { return m_.dim(); }
  double log_density(std::span<const double> x) const override {
    return detail::mixture_log_density(m_, alpha_, sigma_, x, {});
  }
  bool has_score() const override { return true; }
  void score(std::span<const double> x, std::span<double> out) const override {
    detail::mixture_log_density(m_, alpha_, sigma_, x, out);
  }
  std::vector<Interval> bounds() const override { return detail::mixture_bounds(m_, alpha_, sigma_); }

 private:
  GaussianMixture m_;
  double alpha_, sigma_;
};

// Mixture convolved with a non-Gaussian kernel; per-component, per-coordinate quadrature over psi.
class ConvolvedMixture final : public Density {
 public:
  ConvolvedMixture(GaussianMixture m, NoiseFamily noise, double alpha, double sigma, int nodes_per_panel = 24)
      : m_(std::move(m)), noise_(noise), alpha_(alpha), sigma_(sigma), per_panel_(nodes_per_panel) {
    m_.validate();
    if (!(sigma > 0.0)) throw ConfigError("convolution requires sigma > 0");
  }

  std::size_t dim() const override { return m_.dim(); }

  double log_density(std::span<const double> x) const override { return eval(x, {}); }
  bool has_score() const override { return true; }
  void score(std::span<const double> x, std::span<double> out) const override { eval(x, out); }

  std::vector<Interval> bounds() const override {
    return detail::mixture_bounds(m_, alpha_, sigma_);
  }

  // g_k(u) = integral f(psi) N(u - sigma psi; 0, alpha^2 v_k) dpsi and its u-derivative.
  std::pair<double, double> kernel(std::size_t k, double u) const {
    double s = alpha_ * std::sqrt(m_.variances[k]);
    Rule1D rule = panels_for(u, s);
    double g = 0.0, dg = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
      double psi = rule.nodes[i];
      double f = noise_.pdf(psi);
      if (f == 0.0) continue;
      double r = (u - sigma_ * psi) / s;
      double phi = normal_pdf(r) / s;
      g += rule.weights[i] * f * phi;
      dg -= rule.weights[i] * f * phi * r / s;
    }
    return {g, dg};
  }

  // Largest deviation of any component kernel's integral from 1.
  double normalization_error() const {
    double worst = 0.0;
    for (std::size_t k = 0; k < m_.components(); ++k) {
      double sd = std::sqrt(alpha_ * alpha_ * m_.variances[k] + sigma_ * sigma_);
      Rule1D r = rule_on(QuadratureRule::GaussLegendre, 512, -12.0 * sd, 12.0 * sd);
      double total = 0.0;
      for (std::size_t i = 0; i < r.size(); ++i) total += r.weights[i] * kernel(k, r.nodes[i]).first;
      worst = std::max(worst, std::abs(total - 1.0));
    }
    return worst;
  }

 private:
  Rule1D panels_for(double u, double s) const {
    std::vector<double> edges = noise_.panels();
    double lo = edges.front(), hi = edges.back();
    double c = u / sigma_, width = s / sigma_;
    for (int j = -10; j <= 10; ++j) {
      double e = c + j * width;
      if (e > lo && e < hi) edges.push_back(e);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return composite_rule(edges, per_panel_);
  }

  double eval(std::span<const double> y, std::span<double> score_out) const {
    const std::size_t K = m_.components(), D = m_.dim();
    require_same_dim(y.size(), D, "convolved density");
    double p = 0.0;
    double grad[2] = {0.0, 0.0};
    for (std::size_t k = 0; k < K; ++k) {
      double g[2], dg[2];
      for (std::size_t d = 0; d < D; ++d) std::tie(g[d], dg[d]) = kernel(k, y[d] - alpha_ * m_.means[k][d]);
      double prod = m_.weights[k];
      for (std::size_t d = 0; d < D; ++d) prod *= g[d];
      p += prod;
      if (!score_out.empty()) {
        for (std::size_t d = 0; d < D; ++d) {
          double other = m_.weights[k];
          for (std::size_t e = 0; e < D; ++e)
            if (e != d) other *= g[e];
          grad[d] += other * dg[d];
        }
      }
    }
    if (!score_out.empty())
      for (std::size_t d = 0; d < D; ++d) score_out[d] = p > 0 ? grad[d] / p : 0.0;
    return p > 0 ? std::log(p) : -kInf;
  }

  GaussianMixture m_;
  NoiseFamily noise_;
  double alpha_, sigma_;
  int per_panel_;
};

class GridDensity final : public Density {
 public:
  GridDensity(QuantizedGrid g, NoiseFamily noise, double alpha, double sigma)
      : g_(std::move(g)), noise_(noise), alpha_(alpha), sigma_(sigma) {
    g_.validate();
  }
  std::size_t dim() const override { return g_.dim(); }
  double log_density(std::span<const double> x) const override {
    return detail::grid_log_density(g_, noise_, alpha_, sigma_, x, {});
  }
  bool has_score() const override { return sigma_ > 0.0; }
  void score(std::span<const double> x, std::span<double> out) const override {
    if (sigma_ == 0.0) throw UnsupportedError("score is undefined for an unsmoothed quantized grid");
    detail::grid_log_density(g_, noise_, alpha_, sigma_, x, out);
  }
  std::vector<Interval> bounds() const override {
    double pad = 12.0 * sigma_ + 1e-9;
    return std::vector<Interval>(g_.dim(), Interval{alpha_ * g_.lo - pad, alpha_ * g_.hi + pad});
  }

 private:
  QuantizedGrid g_;
  NoiseFamily noise_;
  double alpha_, sigma_;
};

struct SmoothingOptions {
  bool force_quadrature = false;
  double normalization_tolerance = 1e-6;
};

// Density of alpha X + sigma Psi.
inline DensityHandle smoothed_density(const ToyDensity& d, const NoiseFamily& noise, double alpha, double sigma,
                                      const SmoothingOptions& opt = {}) {
  if (!(alpha > 0.0)) throw ConfigError("smoothing requires alpha > 0");
  if (!(sigma >= 0.0)) throw ConfigError("smoothing requires sigma >= 0");
  if (const auto* g = std::get_if<QuantizedGrid>(&d)) return std::make_shared<GridDensity>(*g, noise, alpha, sigma);
  const auto& m = std::get<GaussianMixture>(d);
  if (sigma == 0.0 || (noise.kind == NoiseFamily::Kind::Gaussian && !opt.force_quadrature))
    return std::make_shared<MixtureDensity>(m, alpha, sigma);
  auto conv = std::make_shared<ConvolvedMixture>(m, noise, alpha, sigma);
  double err = conv->normalization_error();
  if (err > opt.normalization_tolerance)
    throw ResolutionError("convolution grid too coarse: normalization off by " + std::to_string(err));
  return conv;
}

inline DensityHandle make_density(const ToyDensity& d) { return smoothed_density(d, NoiseFamily::gaussian(), 1.0, 0.0); }

struct DensityValue {
  double log_density;
  Vector score;
};

inline DensityValue density_eval(const ToyDensity& d, std::span<const double> x) {
  if (std::holds_alternative<QuantizedGrid>(d))
    throw UnsupportedError("score is undefined for a quantized grid");
  const auto& m = std::get<GaussianMixture>(d);
  m.validate();
  DensityValue v{0.0, Vector(m.dim())};
  v.log_density = detail::mixture_log_density(m, 1.0, 0.0, x, v.score);
  return v;
}

inline Matrix draw_samples(const ToyDensity& d, std::size_t count, std::uint64_t seed) {
  if (count == 0) throw ConfigError("draw_samples: count must be at least 1");
  validate(d);
  Rng rng(seed);
  const std::size_t D = dim_of(d);
  Matrix out(count, D);
  if (const auto* m = std::get_if<GaussianMixture>(&d)) {
    std::vector<double> cum(m->weights.size());
    std::partial_sum(m->weights.begin(), m->weights.end(), cum.begin());
    for (std::size_t i = 0; i < count; ++i) {
      double u = rng.uniform() * cum.back();
      std::size_t k = std::upper_bound(cum.begin(), cum.end(), u) - cum.begin();
      k = std::min(k, cum.size() - 1);
      double sd = std::sqrt(m->variances[k]);
      for (std::size_t j = 0; j < D; ++j) out(i, j) = m->means[k][j] + sd * rng.normal();
    }
    return out;
  }
  const auto& g = std::get<QuantizedGrid>(d);
  std::vector<double> cum(g.masses.size());
  std::partial_sum(g.masses.begin(), g.masses.end(), cum.begin());
  for (std::size_t i = 0; i < count; ++i) {
    double u = rng.uniform() * cum.back();
    std::size_t k = std::upper_bound(cum.begin(), cum.end(), u) - cum.begin();
    k = std::min(k, cum.size() - 1);
    std::size_t codes[2] = {D == 1 ? k : k / g.levels, k % g.levels};
    for (std::size_t j = 0; j < D; ++j) out(i, j) = g.lo + (codes[D == 1 ? 0 : j] + rng.uniform()) * g.bin_width();
  }
  return out;
}

// Integer bin indices drawn from a quantized grid.
inline Matrix draw_codes(const QuantizedGrid& g, std::size_t count, std::uint64_t seed) {
  if (count == 0) throw ConfigError("draw_codes: count must be at least 1");
  g.validate();
  Rng rng(seed);
  std::vector<double> cum(g.masses.size());
  std::partial_sum(g.masses.begin(), g.masses.end(), cum.begin());
  Matrix out(count, g.dim());
  for (std::size_t i = 0; i < count; ++i) {
    double u = rng.uniform() * cum.back();
    std::size_t k = std::upper_bound(cum.begin(), cum.end(), u) - cum.begin();
    k = std::min(k, cum.size() - 1);
    if (g.dim() == 1) {
      out(i, 0) = static_cast<double>(k);
    } else {
      out(i, 0) = static_cast<double>(k / g.levels);
      out(i, 1) = static_cast<double>(k % g.levels);
    }
  }
  return out;
}

inline Matrix draw_samples(const NoiseFamily& noise, std::size_t count, std::uint64_t seed, std::size_t dim = 1) {
  if (count == 0) throw ConfigError("draw_samples: count must be at least 1");
  Rng rng(seed);
  Matrix out(count, dim);
  for (double& v : out.data) v = noise.sample(rng);
  return out;
}

}  // namespace vlb

#endif
