#ifndef VLB_IMPORTANCE_HPP
#define VLB_IMPORTANCE_HPP

#include <cmath>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "dsm.hpp"
#include "optim.hpp"
#include "proposal.hpp"

namespace vlb {

// L(x, n, eta) = w(eta) (1/2)||n - n_hat||^2, the integrand of the eta-space loss.
inline double eta_space_integrand(const ChannelSchedule& s, double eta, std::span<const double> x,
                                  std::span<const double> n, const NoisePredictor& predictor,
                                  LossWeighting weighting = LossWeighting::Likelihood) {
  return loss_weight(s, eta, weighting) * dsm_integrand(s, eta, x, n, predictor);
}

// MC estimate of E_{t, x, n}[(eta'(t) L)^2] for t ~ U[0, 1].
inline double learned_variance_objective(const MonotoneNet& net, const ChannelSchedule& s, const Matrix& data,
                                         const NoisePredictor& predictor, std::size_t n_samples, std::uint64_t seed) {
  if (net.eta1() == net.eta0()) return 0.0;
  if (n_samples == 0) throw ConfigError("objective needs samples");
  Rng rng(seed);
  Vector n(data.cols);
  double total = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    std::size_t row = rng.index(data.rows);
    double t = rng.uniform();
    for (double& v : n) v = rng.normal();
    auto e = net.evaluate(t, false);
    double l = eta_space_integrand(s, std::clamp(e.eta, s.eta0(), s.eta1()), data.row(row), n, predictor);
    total += (e.d1 * l) * (e.d1 * l);
  }
  return total / static_cast<double>(n_samples);
}

struct LearnedFitOptions {
  std::size_t steps = 500;
  std::size_t batch = 256;
  std::uint64_t seed = 0;
  AdamConfig adam{1e-2, 0.9, 0.99, 1e-8, 0.0};
};

struct ObjectiveGradient {
  double objective = 0.0;
  Vector grad;
};

// Gradient of E[(eta' L)^2] with L held fixed as a function of eta:
// per sample L^2 (eta' d eta' - eta'' d eta), obtained by parts using the pinned endpoints.
inline ObjectiveGradient learned_objective_gradient(const MonotoneNet& net, const ChannelSchedule& s, const Matrix& data,
                                                    const NoisePredictor& predictor, std::size_t batch, Rng& rng) {
  ObjectiveGradient out{0.0, Vector(net.num_params(), 0.0)};
  Vector n(data.cols);
  for (std::size_t b = 0; b < batch; ++b) {
    std::size_t row = rng.index(data.rows);
    double t = rng.uniform();
    for (double& v : n) v = rng.normal();
    auto e = net.evaluate(t, true);
    double l = eta_space_integrand(s, std::clamp(e.eta, s.eta0(), s.eta1()), data.row(row), n, predictor);
    double l2 = l * l;
    out.objective += e.d1 * e.d1 * l2;
    for (std::size_t i = 0; i < out.grad.size(); ++i) out.grad[i] += l2 * (e.d1 * e.grad_d1[i] - e.d2 * e.grad_eta[i]);
  }
  double inv = 1.0 / static_cast<double>(batch);
  out.objective *= inv;
  for (double& g : out.grad) g *= inv;
  return out;
}

inline std::vector<double> fit_learned_proposal(MonotoneNet& net, const ChannelSchedule& s, const Matrix& data,
                                                const NoisePredictor& predictor, const LearnedFitOptions& opt = {}) {
  std::vector<double> trace;
  if (net.eta1() == net.eta0()) return trace;
  if (opt.batch == 0) throw ConfigError("learned proposal needs a positive batch");
  AdamState adam;
  adam.resize(net.num_params());
  for (std::size_t step = 0; step < opt.steps; ++step) {
    Rng rng(opt.seed, step);
    auto g = learned_objective_gradient(net, s, data, predictor, opt.batch, rng);
    trace.push_back(g.objective);
    adam.update(opt.adam, net.params(), g.grad);
    if (net.eta(0.0) != s.eta0() || net.eta(1.0) != s.eta1()) throw NumericError("monotone net lost its endpoints");
    if (net.min_increment(1000) < 0.0) throw NumericError("monotone net is no longer monotone");
  }
  if (net.min_increment(10000) < 0.0) throw NumericError("monotone net is no longer monotone");
  return trace;
}

struct VarianceRow {
  std::string proposal;
  double mean = 0.0;
  double variance = 0.0;
  double std_error = 0.0;
  double ratio_vs_uniform_t = 1.0;
  double ratio_upper95 = 1.0;  // one-sided bound on the paired variance ratio
  std::size_t n_samples = 0;
  std::size_t n_repeats = 0;
};

struct VarianceReport {
  std::vector<VarianceRow> rows;
  bool means_agree = true;
  double worst_z = 0.0;  // largest pairwise |mean difference| / joint std error
};

inline VarianceReport estimator_variance_report(const std::vector<ProposalHandle>& proposals, const ChannelSchedule& s,
                                                const Matrix& data, const NoisePredictor& predictor,
                                                std::size_t n_samples, std::size_t n_repeats, std::uint64_t seed,
                                                const MonteCarloOptions& mc = {}) {
  if (n_repeats < 10) throw ConfigError("variance report needs at least 10 repeats");
  if (proposals.empty()) throw ConfigError("variance report needs proposals");
  std::size_t base = 0;
  for (std::size_t i = 0; i < proposals.size(); ++i)
    if (proposals[i]->id() == "uniform-t") {
      base = i;
      break;
    }
  std::vector<std::vector<LossEstimate>> est(proposals.size());
  for (std::size_t r = 0; r < n_repeats; ++r) {
    std::uint64_t sr = derive_seed(seed, r);
    for (std::size_t p = 0; p < proposals.size(); ++p)
      est[p].push_back(loss_mc(s, data, predictor, *proposals[p], n_samples, sr, mc));
  }
  VarianceReport rep;
  boost::math::students_t tdist(static_cast<double>(n_repeats - 1));
  double tq = boost::math::quantile(tdist, 0.95);
  for (std::size_t p = 0; p < proposals.size(); ++p) {
    VarianceRow row;
    row.proposal = proposals[p]->id();
    row.n_samples = n_samples;
    row.n_repeats = n_repeats;
    double vb = 0.0, lm = 0.0, lsq = 0.0;
    for (std::size_t r = 0; r < n_repeats; ++r) {
      row.mean += est[p][r].mean;
      row.variance += est[p][r].variance;
      vb += est[base][r].variance;
      double lr = std::log(est[p][r].variance / est[base][r].variance);
      lm += lr;
      lsq += lr * lr;
    }
    double R = static_cast<double>(n_repeats);
    row.mean /= R;
    row.variance /= R;
    vb /= R;
    row.std_error = std::sqrt(row.variance / (static_cast<double>(n_samples) * R));
    row.ratio_vs_uniform_t = row.variance / vb;
    lm /= R;
    double lvar = std::max(0.0, (lsq - R * lm * lm) / (R - 1.0));
    row.ratio_upper95 = std::exp(lm + tq * std::sqrt(lvar / R));
    rep.rows.push_back(row);
  }
  for (std::size_t a = 0; a < rep.rows.size(); ++a)
    for (std::size_t b = a + 1; b < rep.rows.size(); ++b) {
      double se = std::sqrt(rep.rows[a].std_error * rep.rows[a].std_error + rep.rows[b].std_error * rep.rows[b].std_error);
      double z = se > 0 ? std::abs(rep.rows[a].mean - rep.rows[b].mean) / se : 0.0;
      rep.worst_z = std::max(rep.worst_z, z);
      if (z > 3.0) rep.means_agree = false;
    }
  return rep;
}

}  // namespace vlb

#endif
