#ifndef VLB_DSM_HPP
#define VLB_DSM_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>
#include <vector>

#include "core.hpp"
#include "density.hpp"
#include "predictor.hpp"
#include "proposal.hpp"
#include "quadrature.hpp"
#include "rng.hpp"
#include "schedule.hpp"

namespace vlb {

enum class LossWeighting { Likelihood, AlphaSquared, Unit };

inline std::string to_string(LossWeighting w) {
  switch (w) {
    case LossWeighting::Likelihood: return "likelihood";
    case LossWeighting::AlphaSquared: return "alpha2";
    case LossWeighting::Unit: return "unit";
  }
  return "?";
}

// Per-eta weight multiplying (1/2) E||n - n_hat||^2.
inline double loss_weight(const ChannelSchedule& s, double eta, LossWeighting w = LossWeighting::Likelihood) {
  switch (w) {
    case LossWeighting::Likelihood: return s.likelihood_weight(eta);
    case LossWeighting::AlphaSquared: {
      double a = s.alpha(eta);
      return a * a;
    }
    case LossWeighting::Unit: s.check_domain(eta); return 1.0;
  }
  return 0.0;
}

// (1/2) ||n - n_hat(alpha x + sigma n, eta)||^2
inline double dsm_integrand(const ChannelSchedule& s, double eta, std::span<const double> x,
                            std::span<const double> n, const NoisePredictor& predictor) {
  Vector y = s.forward_perturb(eta, x, n);
  Vector nh(y.size());
  predictor.predict(y, eta, nh);
  double e = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) e += (n[i] - nh[i]) * (n[i] - nh[i]);
  return 0.5 * e;
}

// Streaming mean and variance with Chan's pairwise merge.
struct RunningStats {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void push(double x) {
    ++n;
    double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }

  void merge(const RunningStats& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    double na = static_cast<double>(n), nb = static_cast<double>(o.n), nt = na + nb;
    double d = o.mean - mean;
    mean += d * nb / nt;
    m2 += o.m2 + d * d * na * nb / nt;
    n += o.n;
  }

  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
};

struct LossEstimate {
  double mean = 0.0;
  double variance = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;
  std::string proposal_id;
  std::uint64_t seed = 0;

  static LossEstimate from_stats(const RunningStats& r, std::string id, std::uint64_t seed) {
    LossEstimate e;
    e.mean = r.mean;
    e.variance = std::max(0.0, r.variance());
    e.n_samples = r.n;
    e.std_error = r.n > 0 ? std::sqrt(e.variance / static_cast<double>(r.n)) : 0.0;
    e.proposal_id = std::move(id);
    e.seed = seed;
    return e;
  }
};

inline std::size_t worker_count(std::size_t chunks) {
  std::size_t hw = std::max<unsigned>(1, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(hw, chunks));
}

// Runs body(chunk) for chunk in [0, chunks) on a small pool; results are indexed by chunk, so
// the outcome does not depend on scheduling.
template <class F>
void parallel_for_chunks(std::size_t chunks, F&& body, std::size_t workers = 0) {
  if (workers == 0) workers = worker_count(chunks);
  if (workers <= 1 || chunks <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) body(c);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t c = w; c < chunks; c += workers) body(c);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct MonteCarloOptions {
  LossWeighting weighting = LossWeighting::Likelihood;
  std::size_t chunk = 4096;
  std::size_t workers = 0;
};

// One importance-weighted sample: draws x from the data rows, eta from the proposal, n ~ N(0, I).
inline double loss_sample(const ChannelSchedule& s, const Matrix& data, const NoisePredictor& predictor,
                          const Proposal& proposal, Rng& rng, LossWeighting weighting, Vector& n) {
  std::size_t row = rng.index(data.rows);
  auto [eta, rho] = proposal.draw(rng.uniform());
  if (!(rho > 0.0)) throw ProposalSupportError("proposal density vanishes at a drawn eta");
  for (double& v : n) v = rng.normal();
  return loss_weight(s, eta, weighting) / rho * dsm_integrand(s, eta, data.row(row), n, predictor);
}

inline LossEstimate loss_mc(const ChannelSchedule& s, const Matrix& data, const NoisePredictor& predictor,
                            const Proposal& proposal, std::size_t n_samples, std::uint64_t seed,
                            const MonteCarloOptions& opt = {}) {
  if (n_samples < 2) throw ConfigError("loss_mc needs at least two samples");
  if (data.rows == 0) throw ConfigError("loss_mc needs data");
  require_same_dim(data.cols, predictor.dim(), "loss_mc");
  if (s.width() == 0.0) {
    RunningStats r;
    for (std::size_t i = 0; i < n_samples; ++i) r.push(0.0);
    return LossEstimate::from_stats(r, proposal.id(), seed);
  }
  std::size_t chunks = (n_samples + opt.chunk - 1) / opt.chunk;
  std::vector<RunningStats> parts(chunks);
  parallel_for_chunks(
      chunks,
      [&](std::size_t c) {
        Rng rng(seed, c);
        Vector n(data.cols);
        std::size_t begin = c * opt.chunk, end = std::min(n_samples, begin + opt.chunk);
        for (std::size_t i = begin; i < end; ++i)
          parts[c].push(loss_sample(s, data, predictor, proposal, rng, opt.weighting, n));
      },
      opt.workers);
  RunningStats total;
  for (const auto& p : parts) total.merge(p);
  return LossEstimate::from_stats(total, proposal.id(), seed);
}

struct LossQuadratureOptions {
  QuadratureRule eta_rule = QuadratureRule::GaussLegendre;
  int eta_nodes = 256;
  int gh_nodes = 40;
  LossWeighting weighting = LossWeighting::Likelihood;
};

// E_{x ~ p, n ~ N(0, I)} of (1/2)||n - n_hat||^2 at one eta, by Gauss-Hermite per mixture component.
inline double expected_integrand(const ChannelSchedule& s, double eta, const GaussianMixture& p,
                                 const NoisePredictor& predictor, int gh_nodes) {
  const std::size_t D = p.dim();
  auto c = s.coefficients_at(eta);
  Vector x(D), y(D), nh(D);
  double total = 0.0;
  for (std::size_t k = 0; k < p.components(); ++k) {
    double sd = std::sqrt(p.variances[k]);
    double ek = gaussian_expectation(D, gh_nodes, [&](std::span<const double> zx) {
      for (std::size_t d = 0; d < D; ++d) x[d] = p.means[k][d] + sd * zx[d];
      return gaussian_expectation(D, gh_nodes, [&](std::span<const double> n) {
        for (std::size_t d = 0; d < D; ++d) y[d] = c.alpha * x[d] + c.sigma * n[d];
        predictor.predict(y, eta, nh);
        double e = 0.0;
        for (std::size_t d = 0; d < D; ++d) e += (n[d] - nh[d]) * (n[d] - nh[d]);
        return 0.5 * e;
      });
    });
    total += p.weights[k] * ek;
  }
  return total;
}

// Integral over [eta0, eta1] of weight(eta) * E[(1/2)||n - n_hat||^2].
inline double loss_quadrature(const ChannelSchedule& s, const ToyDensity& density, const NoisePredictor& predictor,
                              const LossQuadratureOptions& opt = {}) {
  if (s.width() == 0.0) return 0.0;
  const auto* p = std::get_if<GaussianMixture>(&density);
  if (!p) throw UnsupportedError("loss_quadrature needs a Gaussian mixture data law");
  p->validate();
  require_same_dim(p->dim(), predictor.dim(), "loss_quadrature");
  Rule1D r = rule_on(opt.eta_rule, opt.eta_nodes, s.eta0(), s.eta1());
  std::vector<double> vals(r.size());
  parallel_for_chunks(r.size(), [&](std::size_t i) {
    double eta = r.nodes[i];
    vals[i] = r.weights[i] * loss_weight(s, eta, opt.weighting) * expected_integrand(s, eta, *p, predictor, opt.gh_nodes);
  });
  double total = 0.0;
  for (double v : vals) total += v;
  return total;
}

// Integral of a scalar function of eta over the schedule.
template <class F>
double integrate_eta(const ChannelSchedule& s, F&& f, int nodes = 256, QuadratureRule rule = QuadratureRule::GaussLegendre) {
  if (s.width() == 0.0) return 0.0;
  Rule1D r = rule_on(rule, nodes, s.eta0(), s.eta1());
  double total = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) total += r.weights[i] * f(r.nodes[i]);
  return total;
}

}  // namespace vlb

#endif
