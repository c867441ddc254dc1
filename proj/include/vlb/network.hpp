#ifndef VLB_NETWORK_HPP
#define VLB_NETWORK_HPP

#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"
#include "predictor.hpp"
#include "proposal.hpp"
#include "rng.hpp"
#include "schedule.hpp"

namespace vlb {

enum class EmbeddingKind { RawEta, Fourier, ReverseCdf };

inline std::string to_string(EmbeddingKind k) {
  switch (k) {
    case EmbeddingKind::RawEta: return "raw";
    case EmbeddingKind::Fourier: return "fourier";
    case EmbeddingKind::ReverseCdf: return "reverse-cdf";
  }
  return "?";
}

inline EmbeddingKind parse_embedding(const std::string& s) {
  if (s == "raw") return EmbeddingKind::RawEta;
  if (s == "fourier") return EmbeddingKind::Fourier;
  if (s == "reverse-cdf") return EmbeddingKind::ReverseCdf;
  throw ConfigError("unknown embedding '" + s + "'");
}

struct NetworkConfig {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden{128, 128};
  EmbeddingKind embedding = EmbeddingKind::Fourier;
  int n_freqs = 4;
  std::uint64_t seed = 0;
  bool zero_init_output = true;
  DesignedTarget cdf_target = DesignedTarget::LikelihoodWeight;  // reverse-CDF embedding proposal

  void validate() const {
    if (input_dim < 1) throw ConfigError("network input dimension must be positive");
    for (auto h : hidden)
      if (h < 1) throw ConfigError("hidden widths must be at least 1");
    if (embedding != EmbeddingKind::RawEta && n_freqs < 1) throw ConfigError("n_freqs must be at least 1");
  }

  std::size_t embed_dim() const { return embedding == EmbeddingKind::RawEta ? 1 : 1 + 2 * static_cast<std::size_t>(n_freqs); }
};

inline double silu(double x) { return x * sigmoid(x); }
inline double silu_grad(double x) {
  double s = sigmoid(x);
  return s * (1.0 + x * (1.0 - s));
}

// MLP on [y, embed(eta)] with SiLU hidden activations and a linear output layer.
class ScoreNetwork {
 public:
  ScoreNetwork(NetworkConfig cfg, ChannelSchedule schedule) : cfg_(std::move(cfg)), schedule_(std::move(schedule)) {
    cfg_.validate();
    sizes_.push_back(cfg_.input_dim + cfg_.embed_dim());
    for (auto h : cfg_.hidden) sizes_.push_back(h);
    sizes_.push_back(cfg_.input_dim);
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      w_off_.push_back(off);
      off += sizes_[l] * sizes_[l + 1];
      b_off_.push_back(off);
      off += sizes_[l + 1];
    }
    n_params_ = off;
    if (cfg_.embedding == EmbeddingKind::ReverseCdf) {
      if (!(schedule_.width() > 0.0)) throw ConfigError("reverse-CDF embedding needs eta0 < eta1");
      cdf_ = std::make_shared<DesignedProposal>(schedule_, cfg_.cdf_target);
    }
  }

  const NetworkConfig& config() const { return cfg_; }
  const ChannelSchedule& schedule() const { return schedule_; }
  std::size_t num_params() const { return n_params_; }
  std::size_t num_layers() const { return sizes_.size() - 1; }
  const std::vector<std::size_t>& sizes() const { return sizes_; }
  std::size_t weight_offset(std::size_t l) const { return w_off_[l]; }
  std::size_t bias_offset(std::size_t l) const { return b_off_[l]; }

  Vector init_params() const {
    Vector p(n_params_, 0.0);
    Rng rng(cfg_.seed, 0x6e6574ULL);
    for (std::size_t l = 0; l < num_layers(); ++l) {
      bool last = l + 1 == num_layers();
      double scale = std::sqrt(1.0 / static_cast<double>(sizes_[l]));
      for (std::size_t i = 0; i < sizes_[l] * sizes_[l + 1]; ++i) {
        double v = rng.normal() * scale;
        p[w_off_[l] + i] = (last && cfg_.zero_init_output) ? 0.0 : v;
      }
    }
    return p;
  }

  // Coordinate fed to the Fourier features.
  double embed_coordinate(double eta) const {
    if (cfg_.embedding == EmbeddingKind::ReverseCdf) return cdf_->cdf(eta);
    double w = schedule_.width();
    return w > 0 ? (eta - schedule_.eta0()) / w : 0.0;
  }

  void embed(double eta, std::span<double> out) const {
    double u = embed_coordinate(eta);
    out[0] = 2.0 * u - 1.0;
    if (cfg_.embedding == EmbeddingKind::RawEta) return;
    for (int k = 0; k < cfg_.n_freqs; ++k) {
      double a = std::ldexp(std::numbers::pi, k) * u;
      out[1 + 2 * k] = std::sin(a);
      out[2 + 2 * k] = std::cos(a);
    }
  }

  // Pre-activations and activations of every layer for one input.
  struct Cache {
    std::vector<Vector> z;
    std::vector<Vector> a;
  };

  void forward(const Vector& params, std::span<const double> y, double eta, Cache& c, std::span<double> out) const {
    require_same_dim(params.size(), n_params_, "network parameters");
    require_same_dim(y.size(), cfg_.input_dim, "network input");
    const std::size_t L = num_layers();
    c.z.resize(L);
    c.a.resize(L + 1);
    c.a[0].resize(sizes_[0]);
    for (std::size_t i = 0; i < cfg_.input_dim; ++i) c.a[0][i] = y[i];
    embed(eta, std::span<double>(c.a[0]).subspan(cfg_.input_dim));
    for (std::size_t l = 0; l < L; ++l) {
      const std::size_t in = sizes_[l], outn = sizes_[l + 1];
      const double* W = params.data() + w_off_[l];
      const double* b = params.data() + b_off_[l];
      const double* x = c.a[l].data();
      c.z[l].resize(outn);
      c.a[l + 1].resize(outn);
      bool last = l + 1 == L;
      for (std::size_t i = 0; i < outn; ++i) {
        const double* row = W + i * in;
        double s = b[i];
        for (std::size_t j = 0; j < in; ++j) s += row[j] * x[j];
        c.z[l][i] = s;
        c.a[l + 1][i] = last ? s : silu(s);
        if (!std::isfinite(c.a[l + 1][i])) throw NumericError("non-finite activation in layer " + std::to_string(l));
      }
    }
    for (std::size_t i = 0; i < cfg_.input_dim; ++i) out[i] = c.a[L][i];
  }

  // Accumulates d(loss)/d(params) into grad given d(loss)/d(output).
  void backward(const Vector& params, const Cache& c, std::span<const double> dout, Vector& grad) const {
    const std::size_t L = num_layers();
    Vector delta(dout.begin(), dout.end()), prev;
    for (std::size_t l = L; l-- > 0;) {
      const std::size_t in = sizes_[l], outn = sizes_[l + 1];
      if (l + 1 != L)
        for (std::size_t i = 0; i < outn; ++i) delta[i] *= silu_grad(c.z[l][i]);
      const double* W = params.data() + w_off_[l];
      double* gW = grad.data() + w_off_[l];
      double* gb = grad.data() + b_off_[l];
      const double* x = c.a[l].data();
      for (std::size_t i = 0; i < outn; ++i) {
        double d = delta[i];
        gb[i] += d;
        double* grow = gW + i * in;
        for (std::size_t j = 0; j < in; ++j) grow[j] += d * x[j];
      }
      if (l == 0) break;
      prev.assign(in, 0.0);
      for (std::size_t i = 0; i < outn; ++i) {
        double d = delta[i];
        const double* row = W + i * in;
        for (std::size_t j = 0; j < in; ++j) prev[j] += row[j] * d;
      }
      delta.swap(prev);
    }
  }

  Vector predict(const Vector& params, std::span<const double> y, double eta) const {
    Cache c;
    Vector out(cfg_.input_dim);
    forward(params, y, eta, c, out);
    return out;
  }

 private:
  NetworkConfig cfg_;
  ChannelSchedule schedule_;
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> w_off_, b_off_;
  std::size_t n_params_ = 0;
  std::shared_ptr<const Proposal> cdf_;
};

// Per-sample loss (1/2) weight ||n - n_hat||^2 and its parameter gradient accumulated into grad.
inline double network_sample_loss(const ScoreNetwork& net, const Vector& params, std::span<const double> y,
                                  double eta, std::span<const double> n, double weight, ScoreNetwork::Cache& cache,
                                  Vector* grad) {
  const std::size_t D = n.size();
  double out_buf[8];
  Vector big;
  std::span<double> out(out_buf, D);
  if (D > 8) {
    big.resize(D);
    out = big;
  }
  net.forward(params, y, eta, cache, out);
  double e = 0.0;
  double dout_buf[8];
  Vector dbig;
  std::span<double> dout(dout_buf, D);
  if (D > 8) {
    dbig.resize(D);
    dout = dbig;
  }
  for (std::size_t i = 0; i < D; ++i) {
    double r = out[i] - n[i];
    e += r * r;
    dout[i] = weight * r;
  }
  if (grad) net.backward(params, cache, dout, *grad);
  return 0.5 * weight * e;
}

class NetworkPredictor final : public NoisePredictor {
 public:
  using NoisePredictor::predict;
  NetworkPredictor(std::shared_ptr<const ScoreNetwork> net, Vector params,
                   std::optional<WarmStartRecord> ws = std::nullopt)
      : net_(std::move(net)), params_(std::move(params)), ws_(std::move(ws)) {
    require_same_dim(params_.size(), net_->num_params(), "network predictor");
  }
  std::size_t dim() const override { return net_->config().input_dim; }
  void predict(std::span<const double> y, double eta, std::span<double> out) const override {
    net_->schedule().check_domain(eta);
    ScoreNetwork::Cache c;
    net_->forward(params_, y, eta, c, out);
  }
  std::optional<WarmStartRecord> warm_start() const override { return ws_; }
  const Vector& params() const { return params_; }

 private:
  std::shared_ptr<const ScoreNetwork> net_;
  Vector params_;
  std::optional<WarmStartRecord> ws_;
};

}  // namespace vlb

#endif
