#ifndef VLB_EVALUATION_HPP
#define VLB_EVALUATION_HPP

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "dsm.hpp"
#include "noise.hpp"
#include "predictor.hpp"
#include "proposal.hpp"
#include "schedule.hpp"

namespace vlb {

// Constant used in the truncated-normal dequantization bound for the (-3, 3) window.
inline constexpr double kTnEntropyGap = 0.01522;

// Cross-entropy of N(alpha1 x, sigma1^2 I) against N(0, I).
inline double prior_cross_entropy(std::span<const double> x, const ChannelSchedule& s) {
  if (s.regime() == Regime::VE) throw UnsupportedError("prior cross-entropy needs a VP or SP schedule");
  auto c = s.coefficients_at(s.eta1());
  double total = 0.0;
  for (double xi : x) total += 0.5 * (kLn2Pi + c.sigma * c.sigma + c.alpha * c.alpha * xi * xi);
  return total;
}

// 1/2 ln(2 pi e) minus the entropy of N(0, 1) truncated to (-tau, tau).
inline double truncated_normal_entropy_gap(double tau) {
  double z = normal_mass(-tau, tau);
  return -std::log(z) + tau * normal_pdf(tau) / z;
}

// Draw from N(0, 1) truncated to (-tau, tau) by inverse CDF.
inline double truncated_normal_from_uniform(double u, double tau) {
  double lo = normal_cdf(-tau), mass = normal_mass(-tau, tau);
  return NoiseFamily::gaussian().inverse_cdf(lo + u * mass);
}

// Monte Carlo entropy gap with stratified uniforms.
inline double truncated_normal_entropy_gap_mc(double tau, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  double lz = std::log(normal_mass(-tau, tau));
  RunningStats r;
  for (std::size_t i = 0; i < n; ++i) {
    double u = (static_cast<double>(i) + rng.uniform_open()) / static_cast<double>(n);
    double e = truncated_normal_from_uniform(u, tau);
    r.push(0.5 * kLn2Pi + 0.5 * e * e + lz);
  }
  return 0.5 * (kLn2Pi + 1.0) - r.mean;
}

struct TnDequantization {
  double eta_eps;
  double alpha_eps;
  double sigma_eps;
  double tau;
  double offset;  // (D/2) ln(2 pi e sigma^2) - 0.01522 D, added to the expected log-density
};

// eta at which alpha / (levels sigma) equals tau, for the schedule's family.
inline double eta_for_tau(const ChannelSchedule& s, double tau, int levels = 256) {
  auto f = [&](double eta) {
    auto c = s.coefficients_unchecked(eta);
    return c.alpha / (levels * c.sigma) - tau;
  };
  double lo = -60.0, hi = 20.0;
  if (f(lo) < 0 || f(hi) > 0) throw ConfigError("no eta reaches the requested tau");
  for (int i = 0; i < 200; ++i) {
    double m = 0.5 * (lo + hi);
    (f(m) > 0 ? lo : hi) = m;
  }
  return 0.5 * (lo + hi);
}

inline TnDequantization truncated_normal_dequant_offset(const ChannelSchedule& s, double eta_eps, std::size_t D,
                                                        int levels = 256) {
  if (levels != 256) throw ConfigError("truncated-normal dequantization is defined for 256 levels");
  auto c = s.coefficients_unchecked(eta_eps);
  double tau = c.alpha / (levels * c.sigma);
  if (std::abs(tau - 3.0) > 1e-6) throw ConfigError("eta_eps gives tau=" + std::to_string(tau) + ", expected 3");
  double Dd = static_cast<double>(D);
  double off = 0.5 * Dd * std::log(2.0 * std::numbers::pi * std::numbers::e * c.sigma * c.sigma) - kTnEntropyGap * Dd;
  return {eta_eps, c.alpha, c.sigma, tau, off};
}

inline void check_codes(std::span<const double> x, int levels) {
  for (double v : x)
    if (!(v >= 0.0 && v < levels) || v != std::floor(v)) throw DomainError("dequantization input outside [0, levels)");
}

// v = x + u, u ~ U[0, 1)^D, mapped affinely to [-1, 1).
inline Vector uniform_dequant(std::span<const double> x, int levels, Rng& rng) {
  check_codes(x, levels);
  Vector v(x.size());
  double scale = 2.0 / levels;
  for (std::size_t i = 0; i < x.size(); ++i) v[i] = (x[i] + rng.uniform()) * scale - 1.0;
  return v;
}

inline Vector uniform_dequant(std::span<const double> x, int levels, std::uint64_t seed) {
  Rng rng(seed);
  return uniform_dequant(x, levels, rng);
}

enum class DequantMode { None, Uniform, TruncatedNormal };

inline std::string to_string(DequantMode m) {
  switch (m) {
    case DequantMode::None: return "none";
    case DequantMode::Uniform: return "uniform";
    case DequantMode::TruncatedNormal: return "tn";
  }
  return "?";
}

inline DequantMode parse_dequant(const std::string& s) {
  if (s == "none") return DequantMode::None;
  if (s == "uniform") return DequantMode::Uniform;
  if (s == "tn") return DequantMode::TruncatedNormal;
  throw ConfigError("unknown dequantization mode '" + s + "'");
}

struct NllOptions {
  std::size_t n_samples = 1000;
  std::uint64_t seed = 0;
  DequantMode dequant = DequantMode::None;
  int levels = 256;
  std::optional<double> eta_eps;              // defaults to the tau = 3 level
  std::optional<WarmStartRecord> warm_start;  // must match the predictor's record
  bool reuse_training_noise = false;
  std::string dataset_id = "data";
};

struct NllReport {
  Vector per_point_nats;
  double prior_term_nats = 0.0;
  LossEstimate dsm_term;
  double dequant_offset_nats = 0.0;  // added to each point's bound for discrete data
  double mean_nats = 0.0;
  double bits_per_dim = 0.0;
  DequantMode dequant_mode = DequantMode::None;
  std::string dataset_id;
  std::uint64_t seed = 0;
  std::size_t dim = 0;
};

inline NllReport nll_bound(const Matrix& data, const ChannelSchedule& s, const NoisePredictor& predictor,
                           const Proposal& proposal, const NllOptions& opt) {
  if (opt.n_samples < 2) throw ConfigError("nll_bound needs at least two samples per point");
  require_same_dim(data.cols, predictor.dim(), "nll_bound");
  const std::size_t D = data.cols, N = data.rows;
  auto trained = predictor.warm_start();
  bool trained_ws = trained && trained->sigma0 > 0.0;
  bool asked_ws = opt.warm_start && opt.warm_start->sigma0 > 0.0;
  if (trained_ws != asked_ws || (trained_ws && !trained->same_channel(*opt.warm_start)))
    throw ConfigError("warm-start record of the evaluation does not match the trained model");

  NllReport rep;
  rep.dequant_mode = opt.dequant;
  rep.dataset_id = opt.dataset_id;
  rep.seed = opt.seed;
  rep.dim = D;
  const double Dd = static_cast<double>(D);

  std::optional<TnDequantization> tn;
  if (opt.dequant == DequantMode::TruncatedNormal) {
    double eta_eps = opt.eta_eps ? *opt.eta_eps : eta_for_tau(s, 3.0, opt.levels);
    tn = truncated_normal_dequant_offset(s, eta_eps, D, opt.levels);
    rep.dequant_offset_nats = -tn->offset + Dd * std::log(tn->alpha_eps);
  } else if (opt.dequant == DequantMode::Uniform) {
    rep.dequant_offset_nats = Dd * std::log(opt.levels / 2.0);
  }

  // Warm-up draws: either regenerated from the training seed or fresh per point.
  Matrix warm_u;
  if (asked_ws && opt.reuse_training_noise) {
    NoiseFamily psi = NoiseFamily::parse(opt.warm_start->noise);
    Rng rng(opt.warm_start->seed, 0x7761726dULL);
    warm_u = Matrix(N, D);
    for (double& v : warm_u.data) v = psi.sample(rng);
  }

  rep.per_point_nats.assign(N, 0.0);
  std::vector<RunningStats> dsm(N), prior(N);
  parallel_for_chunks(N, [&](std::size_t i) {
    Rng rng(opt.seed, i);
    auto x = data.row(i);
    if (opt.dequant != DequantMode::None) check_codes(x, opt.levels);
    Vector xe(D), n(D), u(D);
    if (asked_ws && !opt.reuse_training_noise) {
      NoiseFamily psi = NoiseFamily::parse(opt.warm_start->noise);
      Rng wrng(derive_seed(opt.seed, 0x7773ULL), i);
      for (double& v : u) v = psi.sample(wrng);
    } else if (asked_ws) {
      for (std::size_t d = 0; d < D; ++d) u[d] = warm_u(i, d);
    }
    RunningStats tot;
    for (std::size_t k = 0; k < opt.n_samples; ++k) {
      switch (opt.dequant) {
        case DequantMode::None:
          for (std::size_t d = 0; d < D; ++d) xe[d] = x[d];
          break;
        case DequantMode::Uniform: xe = uniform_dequant(x, opt.levels, rng); break;
        case DequantMode::TruncatedNormal: {
          double scale = tn->sigma_eps / tn->alpha_eps;
          double w = 2.0 / opt.levels;
          for (std::size_t d = 0; d < D; ++d)
            xe[d] = (x[d] + 0.5) * w - 1.0 + scale * truncated_normal_from_uniform(rng.uniform_open(), 3.0);
          break;
        }
      }
      if (asked_ws)
        for (std::size_t d = 0; d < D; ++d) xe[d] = opt.warm_start->alpha0 * xe[d] + opt.warm_start->sigma0 * u[d];
      auto [eta, rho] = proposal.draw(rng.uniform());
      if (!(rho > 0.0)) throw ProposalSupportError("proposal density vanishes at a drawn eta");
      for (double& v : n) v = rng.normal();
      double l = s.likelihood_weight(eta) / rho * dsm_integrand(s, eta, xe, n, predictor);
      double pc = prior_cross_entropy(xe, s);
      dsm[i].push(l);
      prior[i].push(pc);
      tot.push(l + pc);
    }
    rep.per_point_nats[i] = tot.mean;
  });

  RunningStats all_dsm, all_prior;
  for (std::size_t i = 0; i < N; ++i) {
    all_dsm.merge(dsm[i]);
    all_prior.merge(prior[i]);
  }
  rep.dsm_term = LossEstimate::from_stats(all_dsm, proposal.id(), opt.seed);
  rep.prior_term_nats = all_prior.mean;
  double m = 0.0;
  for (double v : rep.per_point_nats) m += v;
  rep.mean_nats = m / static_cast<double>(N);
  rep.bits_per_dim = rep.mean_nats / (Dd * std::numbers::ln2) + rep.dequant_offset_nats / (Dd * std::numbers::ln2);
  return rep;
}

// Reverse Gaussian kernels from eta1 down to eta0 on the canonical time grid.
inline Matrix ancestral_sample(const ChannelSchedule& s, const NoisePredictor& predictor, std::size_t T,
                               std::size_t n, std::uint64_t seed) {
  if (T < 2) throw ConfigError("ancestral sampling needs T >= 2");
  if (n < 1) throw ConfigError("ancestral sampling needs n >= 1");
  const std::size_t D = predictor.dim();
  Matrix out(n, D);
  parallel_for_chunks(n, [&](std::size_t j) {
    Rng rng(seed, j);
    Vector y(D), nh(D);
    double prior_sd = s.regime() == Regime::VE ? s.sigma(s.eta1()) : 1.0;
    for (double& v : y) v = prior_sd * rng.normal();
    for (std::size_t i = T; i >= 1; --i) {
      double eta_t = s.eta_at_time(static_cast<double>(i) / T);
      double eta_s = s.eta_at_time(static_cast<double>(i - 1) / T);
      auto ct = s.coefficients_at(eta_t), cs = s.coefficients_at(eta_s);
      predictor.predict(y, eta_t, nh);
      double s2t = ct.sigma * ct.sigma, s2s = cs.sigma * cs.sigma;
      double var_ts = s.conditional_variance(eta_s, eta_t);
      double a_ts = ct.alpha / cs.alpha;
      double kvar = s2s * var_ts / s2t;
      if (!(kvar >= 0.0 && kvar < 1.0) && s.regime() != Regime::VE)
        throw NumericError("reverse kernel variance left [0, 1)");
      if (!(kvar >= 0.0) || !std::isfinite(kvar)) throw NumericError("reverse kernel variance is invalid");
      double ksd = std::sqrt(kvar);
      for (std::size_t d = 0; d < D; ++d) {
        double xh = (y[d] - ct.sigma * nh[d]) / ct.alpha;
        double mean = a_ts * s2s / s2t * y[d] + var_ts * cs.alpha / s2t * xh;
        y[d] = mean + ksd * rng.normal();
      }
    }
    for (std::size_t d = 0; d < D; ++d) out(j, d) = y[d];
  });
  return out;
}

}  // namespace vlb

#endif
