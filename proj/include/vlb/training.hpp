#ifndef VLB_TRAINING_HPP
#define VLB_TRAINING_HPP

#include <cmath>
#include <sstream>
#include <vector>

#include "dsm.hpp"
#include "network.hpp"
#include "noise.hpp"
#include "optim.hpp"
#include "proposal.hpp"

namespace vlb {

struct WarmStartDataset {
  Matrix original;
  Matrix warmed;
  NoiseFamily psi;
  double alpha0 = 1.0;
  double sigma0 = 0.0;
  std::uint64_t seed = 0;

  WarmStartRecord record() const { return {psi.name(), alpha0, sigma0, seed}; }
};

// x~ = alpha0 x + sigma0 u with one stored draw of u ~ psi per entry.
inline WarmStartDataset warm_start(const Matrix& data, const NoiseFamily& psi, double alpha0, double sigma0,
                                   std::uint64_t seed) {
  if (!(sigma0 >= 0.0)) throw ConfigError("warm start requires sigma0 >= 0");
  WarmStartDataset ds{data, data, psi, alpha0, sigma0, seed};
  Rng rng(seed, 0x7761726dULL);
  for (std::size_t i = 0; i < data.data.size(); ++i) ds.warmed.data[i] = alpha0 * data.data[i] + sigma0 * psi.sample(rng);
  return ds;
}

struct TrainOptions {
  std::size_t steps = 5000;
  std::size_t batch = 256;
  std::uint64_t seed = 0;
  AdamConfig adam{};
  double ema_rate = 0.9999;
  bool ema_warmup = true;
  LossWeighting weighting = LossWeighting::Likelihood;
  double divergence_factor = 1e3;
  std::size_t divergence_patience = 100;
};

struct TrainState {
  Vector params;
  AdamState adam;
  Ema ema;
  std::uint64_t step = 0;
};

struct TrainResult {
  TrainState state;
  std::vector<double> loss_trace;
};

inline TrainState initial_state(const ScoreNetwork& net, const TrainOptions& opt) {
  TrainState s;
  s.params = net.init_params();
  s.adam.resize(s.params.size());
  s.ema.rate = opt.ema_rate;
  s.ema.warmup = opt.ema_warmup;
  s.ema.shadow = s.params;
  return s;
}

// Minibatch mean of the importance-weighted loss and its gradient.
inline double batch_loss_and_grad(const ScoreNetwork& net, const Vector& params, const ChannelSchedule& schedule,
                                  const Matrix& data, const Proposal& proposal, std::size_t batch, Rng& rng,
                                  LossWeighting weighting, Vector* grad) {
  const std::size_t D = data.cols;
  Vector n(D), y(D);
  ScoreNetwork::Cache cache;
  if (grad) grad->assign(params.size(), 0.0);
  double total = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    std::size_t row = rng.index(data.rows);
    auto [eta, rho] = proposal.draw(rng.uniform());
    if (!(rho > 0.0)) throw ProposalSupportError("proposal density vanishes at a drawn eta");
    for (double& v : n) v = rng.normal();
    auto c = schedule.coefficients_at(eta);
    auto x = data.row(row);
    for (std::size_t d = 0; d < D; ++d) y[d] = c.alpha * x[d] + c.sigma * n[d];
    double w = loss_weight(schedule, eta, weighting) / rho;
    total += network_sample_loss(net, params, y, eta, n, w, cache, grad);
  }
  double inv = 1.0 / static_cast<double>(batch);
  if (grad)
    for (double& g : *grad) g *= inv;
  return total * inv;
}

inline TrainResult train(const ScoreNetwork& net, const ChannelSchedule& schedule, const WarmStartDataset& dataset,
                         const Proposal& proposal, const TrainOptions& opt, const TrainState* resume = nullptr) {
  if (opt.batch < 1) throw ConfigError("batch must be at least 1");
  require_same_dim(dataset.warmed.cols, net.config().input_dim, "training data");
  TrainResult res;
  res.state = resume ? *resume : initial_state(net, opt);
  Vector grad;
  double initial = -1.0;
  std::size_t bad = 0;
  for (std::size_t k = 0; k < opt.steps; ++k) {
    Rng rng(opt.seed, res.state.step);
    double loss = batch_loss_and_grad(net, res.state.params, schedule, dataset.warmed, proposal, opt.batch, rng,
                                      opt.weighting, &grad);
    if (!std::isfinite(loss)) throw NumericError("training loss became non-finite at step " + std::to_string(res.state.step));
    if (initial < 0.0) initial = loss;
    bad = loss > opt.divergence_factor * initial ? bad + 1 : 0;
    if (bad >= opt.divergence_patience) {
      std::ostringstream os;
      os << "training diverged: loss " << loss << " exceeded " << opt.divergence_factor << "x the initial loss "
         << initial << " for " << bad << " consecutive steps (step " << res.state.step << ")";
      throw NumericError(os.str());
    }
    res.loss_trace.push_back(loss);
    res.state.adam.update(opt.adam, res.state.params, grad);
    ++res.state.step;
    res.state.ema.update(res.state.params, res.state.step);
  }
  return res;
}

}  // namespace vlb

#endif
