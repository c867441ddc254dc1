#ifndef VLB_IDENTITY_HPP
#define VLB_IDENTITY_HPP

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "density.hpp"
#include "dsm.hpp"
#include "evaluation.hpp"
#include "functionals.hpp"
#include "predictor.hpp"
#include "schedule.hpp"

namespace vlb {

// Neville extrapolation of f(h) to h = 0.
inline double extrapolate_to_zero(const std::vector<double>& h, std::vector<double> f) {
  const std::size_t n = h.size();
  for (std::size_t m = 1; m < n; ++m)
    for (std::size_t i = 0; i + m < n; ++i) f[i] = (h[i + m] * f[i] - h[i] * f[i + 1]) / (h[i + m] - h[i]);
  return f[0];
}

inline const std::vector<double>& default_probes() {
  static const std::vector<double> p{1e-4, 2e-4, 4e-4};
  return p;
}

struct SlopeReport {
  double fd_slope = 0.0;
  double fisher_half = 0.0;
  double abs_gap = 0.0;
  std::vector<double> probes;
  std::vector<double> values;  // functional at each probe
  double value_at_zero = 0.0;
};

namespace detail {

inline void check_probes(const std::vector<double>& probes) {
  if (probes.size() < 2) throw ConfigError("need at least two probes");
  for (std::size_t i = 0; i < probes.size(); ++i) {
    if (!(probes[i] > 0.0)) throw ConfigError("probes must be positive");
    if (i && !(probes[i] > probes[i - 1])) throw ConfigError("probes must be sorted ascending");
  }
  if (probes.front() > 1e-3) throw ConfigError("smallest probe must be at most 1e-3");
}

inline double slope_at_zero(const std::vector<double>& probes, const std::vector<double>& values, double v0) {
  std::vector<double> d(probes.size());
  for (std::size_t i = 0; i < probes.size(); ++i) d[i] = (values[i] - v0) / probes[i];
  return extrapolate_to_zero(probes, d);
}

inline QuadratureGrid grid_for(const ToyDensity& p, const ToyDensity* q, const std::optional<QuadratureGrid>& grid) {
  if (grid) return *grid;
  auto dp = make_density(p);
  if (q) {
    auto dq = make_density(*q);
    return default_grid(*dp, dq.get());
  }
  return default_grid(*dp);
}

}  // namespace detail

// d/d sigma^2 KL(p_{sigma^2} || q_{sigma^2}) at 0+ against -(1/2) I(p || q); alpha fixed to 1.
inline SlopeReport theorem1_check(const ToyDensity& p, const ToyDensity& q, const NoiseFamily& noise,
                                  const std::vector<double>& probes = default_probes(),
                                  const std::optional<QuadratureGrid>& grid = std::nullopt,
                                  double monotone_tolerance = 1e-10) {
  detail::check_probes(probes);
  QuadratureGrid g = detail::grid_for(p, &q, grid);
  auto p0 = make_density(p), q0 = make_density(q);
  SlopeReport r;
  r.probes = probes;
  r.value_at_zero = info_functional(Functional::KL, *p0, q0.get(), g);
  double prev = r.value_at_zero;
  for (double h : probes) {
    auto ph = smoothed_density(p, noise, 1.0, std::sqrt(h));
    auto qh = smoothed_density(q, noise, 1.0, std::sqrt(h));
    double kl = info_functional(Functional::KL, *ph, qh.get(), g);
    if (kl > prev + monotone_tolerance) throw NumericError("KL increased along the smoothing ladder");
    prev = kl;
    r.values.push_back(kl);
  }
  r.fd_slope = detail::slope_at_zero(probes, r.values, r.value_at_zero);
  r.fisher_half = -0.5 * info_functional(Functional::FisherDivergence, *p0, q0.get(), g);
  r.abs_gap = std::abs(r.fd_slope - r.fisher_half);
  return r;
}

struct ExpansionReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
};

// KL(p || q) against KL(p_s || q_s) + (s / 2) I(p || q).
inline ExpansionReport second_order_expansion_check(const ToyDensity& p, const ToyDensity& q, const NoiseFamily& noise,
                                                    double sigma2,
                                                    const std::optional<QuadratureGrid>& grid = std::nullopt) {
  if (!(sigma2 >= 0.0 && sigma2 <= 0.05)) throw ConfigError("sigma2 must lie in [0, 0.05]");
  QuadratureGrid g = detail::grid_for(p, &q, grid);
  auto p0 = make_density(p), q0 = make_density(q);
  ExpansionReport r;
  r.lhs = info_functional(Functional::KL, *p0, q0.get(), g);
  if (sigma2 == 0.0) {
    r.rhs = r.lhs;
    return r;
  }
  auto ph = smoothed_density(p, noise, 1.0, std::sqrt(sigma2));
  auto qh = smoothed_density(q, noise, 1.0, std::sqrt(sigma2));
  r.rhs = info_functional(Functional::KL, *ph, qh.get(), g) +
          0.5 * sigma2 * info_functional(Functional::FisherDivergence, *p0, q0.get(), g);
  r.residual = r.lhs - r.rhs;
  return r;
}

// d/d sigma^2 H(p_{sigma^2}) at 0+ against (1/2) J(p).
inline SlopeReport debruijn_check(const ToyDensity& p, const NoiseFamily& noise,
                                  const std::vector<double>& probes = default_probes(),
                                  const std::optional<QuadratureGrid>& grid = std::nullopt,
                                  double monotone_tolerance = 1e-10) {
  if (std::holds_alternative<QuantizedGrid>(p))
    throw UnsupportedError("de Bruijn check needs finite Fisher information (Gaussian mixture)");
  detail::check_probes(probes);
  QuadratureGrid g = detail::grid_for(p, nullptr, grid);
  auto p0 = make_density(p);
  SlopeReport r;
  r.probes = probes;
  r.value_at_zero = info_functional(Functional::Entropy, *p0, nullptr, g);
  double prev = r.value_at_zero;
  for (double h : probes) {
    auto ph = smoothed_density(p, noise, 1.0, std::sqrt(h));
    double e = info_functional(Functional::Entropy, *ph, nullptr, g);
    if (e < prev - monotone_tolerance) throw NumericError("entropy decreased along the smoothing ladder");
    prev = e;
    r.values.push_back(e);
  }
  r.fd_slope = detail::slope_at_zero(probes, r.values, r.value_at_zero);
  r.fisher_half = 0.5 * info_functional(Functional::FisherInformation, *p0, nullptr, g);
  r.abs_gap = std::abs(r.fd_slope - r.fisher_half);
  return r;
}

enum class PriorModel { StandardNormal, ModelChannelOutput };

struct ThermoOptions {
  int eta_nodes = 256;
  int gh_nodes = 40;
  PriorModel prior = PriorModel::StandardNormal;
  std::optional<ToyDensity> model;  // needed for ModelChannelOutput
  double endpoint_tolerance = 0.01;
};

struct ThermoReport {
  double lhs = 0.0;
  double prior_ce = 0.0;
  double dsm_term = 0.0;
  double channel_fisher_term = 0.0;
  double gap = 0.0;
  double endpoint_kl = 0.0;
  bool endpoint_warning = false;
};

// H(p, q) against H(p(y1), pi) + J_DSM - (1/2) int E||grad log p(y|x)||^2 d sigma^2.
inline ThermoReport thermo_decomposition_check(const ToyDensity& p, const ChannelSchedule& s,
                                               const NoisePredictor& score, const Density& q,
                                               const ThermoOptions& opt = {}) {
  const auto* pm = std::get_if<GaussianMixture>(&p);
  if (!pm) throw UnsupportedError("decomposition check needs a Gaussian mixture data law");
  const std::size_t D = pm->dim();
  ThermoReport r;
  auto pd = make_density(p);
  r.lhs = info_functional(Functional::CrossEntropy, *pd, &q, default_grid(*pd, &q));

  auto c1 = s.coefficients_at(s.eta1());
  auto py1 = smoothed_density(p, NoiseFamily::gaussian(), c1.alpha, c1.sigma);
  DensityHandle prior;
  if (opt.prior == PriorModel::StandardNormal) {
    prior = std::make_shared<MixtureDensity>(GaussianMixture::normal(D));
  } else {
    if (!opt.model) throw ConfigError("model channel prior needs the model density");
    prior = smoothed_density(*opt.model, NoiseFamily::gaussian(), c1.alpha, c1.sigma);
  }
  QuadratureGrid g1 = default_grid(*py1, prior.get());
  r.prior_ce = info_functional(Functional::CrossEntropy, *py1, prior.get(), g1);
  r.endpoint_kl = info_functional(Functional::KL, *py1, prior.get(), g1);
  r.endpoint_warning = r.endpoint_kl > opt.endpoint_tolerance;

  LossQuadratureOptions lq;
  lq.eta_nodes = opt.eta_nodes;
  lq.gh_nodes = opt.gh_nodes;
  r.dsm_term = loss_quadrature(s, p, score, lq);
  // E||grad_y log N(y; alpha x, sigma^2 I)||^2 = D / sigma^2.
  r.channel_fisher_term = 0.5 * integrate_eta(s, [&](double eta) {
    return static_cast<double>(D) / s.sigma2(eta) * s.dsigma2_deta(eta);
  }, opt.eta_nodes);
  r.gap = r.lhs - (r.prior_ce + r.dsm_term - r.channel_fisher_term);
  return r;
}

struct PointwiseOptions {
  int eta_nodes = 256;
  int gh_nodes = 64;
  double tolerance = 1e-6;
  bool throw_on_violation = true;
};

struct PointwiseReport {
  double neg_log_q = 0.0;
  double prior_ce = 0.0;
  double dsm = 0.0;
  double bound = 0.0;
  double slack = 0.0;
};

// Per-point DSM integral: int w(eta) E_n (1/2)||n - n_hat(alpha x + sigma n)||^2 d eta.
inline double pointwise_dsm(std::span<const double> x, const ChannelSchedule& s, const NoisePredictor& score,
                            int eta_nodes = 256, int gh_nodes = 64) {
  const std::size_t D = x.size();
  Vector y(D), nh(D);
  return integrate_eta(s, [&](double eta) {
    auto c = s.coefficients_at(eta);
    double e = gaussian_expectation(D, gh_nodes, [&](std::span<const double> n) {
      for (std::size_t d = 0; d < D; ++d) y[d] = c.alpha * x[d] + c.sigma * n[d];
      score.predict(y, eta, nh);
      double v = 0.0;
      for (std::size_t d = 0; d < D; ++d) v += (n[d] - nh[d]) * (n[d] - nh[d]);
      return 0.5 * v;
    });
    return s.likelihood_weight(eta) * e;
  }, eta_nodes);
}

inline PointwiseReport pointwise_bound_check(std::span<const double> x, const ChannelSchedule& s,
                                             const NoisePredictor& score, const Density& q,
                                             const PointwiseOptions& opt = {}) {
  require_same_dim(x.size(), q.dim(), "pointwise bound");
  PointwiseReport r;
  r.neg_log_q = -q.log_density(x);
  r.prior_ce = prior_cross_entropy(x, s);
  r.dsm = pointwise_dsm(x, s, score, opt.eta_nodes, opt.gh_nodes);
  r.bound = r.prior_ce + r.dsm;
  r.slack = r.bound - r.neg_log_q;
  if (opt.throw_on_violation && r.slack < -opt.tolerance)
    throw BoundViolation("pointwise bound violated: slack " + std::to_string(r.slack));
  return r;
}

}  // namespace vlb

#endif
