#ifndef VLB_PROPOSAL_HPP
#define VLB_PROPOSAL_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "core.hpp"
#include "quadrature.hpp"
#include "rng.hpp"
#include "schedule.hpp"

namespace vlb {

struct ProposalSupportError : Error {
  using Error::Error;
};

// Normalized importance distribution over eta on the schedule endpoints.
struct ProposalDraw {
  double eta;
  double density;
};

class Proposal {
 public:
  virtual ~Proposal() = default;
  virtual std::string id() const = 0;
  virtual double eta0() const = 0;
  virtual double eta1() const = 0;
  virtual double density(double eta) const = 0;
  virtual double cdf(double eta) const = 0;
  virtual double sample(double u) const = 0;
  virtual double normalizer() const = 0;
  virtual ProposalDraw draw(double u) const {
    double eta = sample(u);
    return {eta, density(eta)};
  }
};

using ProposalHandle = std::shared_ptr<const Proposal>;

// Solves F(x) = u for increasing F on [lo, hi]: bisection to width 1e-10, then Newton polish.
inline double invert_monotone(const std::function<double(double)>& F, const std::function<double(double)>& dF,
                              double u, double lo, double hi) {
  double a = lo, b = hi;
  int steps = 0;
  while (b - a > 1e-10 * std::max(1.0, std::abs(a) + std::abs(b))) {
    if (++steps > 200) throw NumericError("inverse CDF root-finder did not converge");
    double m = 0.5 * (a + b);
    if (F(m) < u)
      a = m;
    else
      b = m;
  }
  double x = 0.5 * (a + b);
  for (int i = 0; i < 3; ++i) {
    double d = dF(x);
    if (!(d > 0.0)) break;
    double nx = x - (F(x) - u) / d;
    if (!(nx >= a - 1e-9 && nx <= b + 1e-9)) break;
    x = nx;
  }
  return std::clamp(x, lo, hi);
}

inline void check_unit(double u) {
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("proposal sample requires u in [0, 1]");
}

class UniformTProposal final : public Proposal {
 public:
  explicit UniformTProposal(const ChannelSchedule& s) : s_(s) {
    if (!(s.width() > 0.0)) throw ProposalSupportError("uniform-t proposal needs eta0 < eta1");
  }
  std::string id() const override { return "uniform-t"; }
  double eta0() const override { return s_.eta0(); }
  double eta1() const override { return s_.eta1(); }
  double density(double eta) const override {
    return (eta < eta0() || eta > eta1()) ? 0.0 : 1.0 / s_.deta_dt();
  }
  double cdf(double eta) const override { return std::clamp((eta - eta0()) / s_.width(), 0.0, 1.0); }
  double sample(double u) const override {
    check_unit(u);
    return s_.eta_at_time(u);
  }
  double normalizer() const override { return s_.width(); }

 private:
  ChannelSchedule s_;
};

// Which unnormalized shape the designed proposal follows.
enum class DesignedTarget { LikelihoodWeight, AlphaSquared };

class DesignedProposal final : public Proposal {
 public:
  explicit DesignedProposal(const ChannelSchedule& s, DesignedTarget target = DesignedTarget::LikelihoodWeight)
      : s_(s), target_(target) {
    using K = VarianceFamily::Kind;
    const auto kind = s.family().kind;
    if (kind == K::VeExponential) {
      closed_c_ = 0.0;
    } else if (target == DesignedTarget::LikelihoodWeight) {
      closed_c_ = kind == K::TanhSquash ? 2.0 : 1.0;
    } else if (s.regime() == Regime::VP && (kind == K::Sigmoid || kind == K::TanhSquash)) {
      closed_c_ = kind == K::TanhSquash ? 2.0 : 1.0;
    } else {
      closed_c_ = -1.0;
    }
    if (closed_c_ > 0.0) {
      l0_ = softplus(-closed_c_ * s.eta0());
      z_ = (l0_ - softplus(-closed_c_ * s.eta1())) / closed_c_;
    } else if (closed_c_ == 0.0) {
      z_ = s.width();
    } else {
      build_table();
    }
    if (!(z_ > 0.0)) throw ProposalSupportError("designed proposal has zero normalizer");
  }

  std::string id() const override { return "designed"; }
  double eta0() const override { return s_.eta0(); }
  double eta1() const override { return s_.eta1(); }
  bool closed_form() const { return closed_c_ >= 0.0; }
  DesignedTarget target() const { return target_; }

  // Unnormalized shape.
  double shape(double eta) const {
    if (closed_c_ > 0.0) return sigmoid(-closed_c_ * eta);
    if (closed_c_ == 0.0) return 1.0;
    auto c = s_.coefficients_unchecked(eta);
    return c.alpha * c.alpha;
  }

  double density(double eta) const override {
    if (eta < eta0() || eta > eta1()) return 0.0;
    return shape(eta) / z_;
  }

  double cdf(double eta) const override {
    if (eta <= eta0()) return 0.0;
    if (eta >= eta1()) return 1.0;
    if (closed_c_ > 0.0) return (l0_ - softplus(-closed_c_ * eta)) / (closed_c_ * z_);
    if (closed_c_ == 0.0) return (eta - eta0()) / z_;
    std::size_t i = std::min<std::size_t>(static_cast<std::size_t>((eta - eta0()) / panel_), cum_.size() - 2);
    return (cum_[i] + partial(edge(i), eta)) / z_;
  }

  double sample(double u) const override {
    check_unit(u);
    if (u == 0.0) return eta0();
    if (u == 1.0) return eta1();
    if (closed_c_ > 0.0) {
      double v = l0_ - u * closed_c_ * z_;
      return std::clamp(-std::log(std::expm1(v)) / closed_c_, eta0(), eta1());
    }
    if (closed_c_ == 0.0) return eta0() + u * z_;
    return invert_monotone([this](double e) { return cdf(e); }, [this](double e) { return density(e); }, u, eta0(),
                           eta1());
  }

  double normalizer() const override { return z_; }

 private:
  double edge(std::size_t i) const { return i + 1 == cum_.size() ? eta1() : eta0() + panel_ * i; }

  double partial(double a, double b) const {
    if (b <= a) return 0.0;
    Rule1D r = rule_on(QuadratureRule::GaussLegendre, 16, a, b);
    double t = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) t += r.weights[k] * shape(r.nodes[k]);
    return t;
  }

  void build_table() {
    const std::size_t panels = 2048;
    panel_ = s_.width() / panels;
    cum_.assign(panels + 1, 0.0);
    for (std::size_t i = 0; i < panels; ++i) cum_[i + 1] = cum_[i] + partial(edge(i), edge(i + 1));
    z_ = cum_.back();
  }

  ChannelSchedule s_;
  DesignedTarget target_;
  double closed_c_ = 1.0;
  double l0_ = 0.0;
  double z_ = 0.0;
  double panel_ = 0.0;
  std::vector<double> cum_;
};

inline double designed_normalizer(const ChannelSchedule& s, DesignedTarget target = DesignedTarget::LikelihoodWeight) {
  if (s.width() == 0.0) return 0.0;
  return DesignedProposal(s, target).normalizer();
}

// eta~(t) = w1 t + b1 + sum_j w3_j sigmoid(w2_j (w1 t + b1) + b2_j), weights are squares of raw parameters.
// Output is rescaled so that eta(0) = eta0 and eta(1) = eta1.
class MonotoneNet {
 public:
  MonotoneNet(double eta0, double eta1, std::size_t hidden = 256, std::uint64_t seed = 0)
      : eta0_(eta0), eta1_(eta1), h_(hidden) {
    if (hidden < 1) throw ConfigError("monotone net needs at least one hidden unit");
    if (eta0 > eta1) throw OrderingError("monotone net requires eta0 <= eta1");
    params_.assign(2 + 3 * h_, 0.0);
    Rng rng(seed, 0x4d4f4e4fULL);
    params_[0] = 1.0;
    params_[1] = 0.0;
    for (std::size_t j = 0; j < h_; ++j) {
      double r2 = 1.0 + 3.0 * rng.uniform();
      double w2 = r2 * r2;
      params_[2 + j] = r2;
      params_[2 + h_ + j] = -w2 * rng.uniform();
      params_[2 + 2 * h_ + j] = 0.1 * (0.5 + 0.5 * rng.uniform());
    }
  }

  std::size_t hidden() const { return h_; }
  double eta0() const { return eta0_; }
  double eta1() const { return eta1_; }
  const Vector& params() const { return params_; }
  Vector& params() { return params_; }
  std::size_t num_params() const { return params_.size(); }

  struct Raw {
    double value;   // eta~(t)
    double d1;      // d eta~/dt
    double d2;      // d^2 eta~/dt^2
  };

  Raw raw(double t, Vector* dvalue = nullptr, Vector* dd1 = nullptr) const {
    const double r1 = params_[0], b1 = params_[1], w1 = r1 * r1;
    const double h = w1 * t + b1;
    double value = h, sum1 = 0.0, sum2 = 0.0;
    if (dvalue) dvalue->assign(params_.size(), 0.0);
    if (dd1) dd1->assign(params_.size(), 0.0);
    double dv_dw1 = t, dv_db1 = 1.0;
    double sum_d1_w1 = 0.0, sum_d1_b1 = 0.0;
    for (std::size_t j = 0; j < h_; ++j) {
      const double r2 = params_[2 + j], b2 = params_[2 + h_ + j], r3 = params_[2 + 2 * h_ + j];
      const double w2 = r2 * r2, w3 = r3 * r3;
      const double s = sigmoid(w2 * h + b2);
      const double s1 = s * (1.0 - s);
      const double s2 = s1 * (1.0 - 2.0 * s);
      value += w3 * s;
      sum1 += w3 * w2 * s1;
      sum2 += w3 * w2 * w2 * s2;
      if (dvalue) {
        (*dvalue)[2 + j] = w3 * s1 * h * 2.0 * r2;
        (*dvalue)[2 + h_ + j] = w3 * s1;
        (*dvalue)[2 + 2 * h_ + j] = s * 2.0 * r3;
        dv_dw1 += w3 * s1 * w2 * t;
        dv_db1 += w3 * s1 * w2;
      }
      if (dd1) {
        (*dd1)[2 + j] = w1 * w3 * (s1 + w2 * s2 * h) * 2.0 * r2;
        (*dd1)[2 + h_ + j] = w1 * w3 * w2 * s2;
        (*dd1)[2 + 2 * h_ + j] = w1 * w2 * s1 * 2.0 * r3;
        sum_d1_w1 += w3 * w2 * w2 * s2 * t;
        sum_d1_b1 += w3 * w2 * w2 * s2;
      }
    }
    if (dvalue) {
      (*dvalue)[0] = dv_dw1 * 2.0 * r1;
      (*dvalue)[1] = dv_db1;
    }
    if (dd1) {
      (*dd1)[0] = ((1.0 + sum1) + w1 * sum_d1_w1) * 2.0 * r1;
      (*dd1)[1] = w1 * sum_d1_b1;
    }
    return {value, w1 * (1.0 + sum1), w1 * w1 * sum2};
  }

  double eta(double t) const {
    if (t <= 0.0) return eta0_;
    if (t >= 1.0) return eta1_;
    if (eta1_ == eta0_) return eta0_;
    double g0 = raw(0.0).value, n = raw(1.0).value - g0;
    return std::clamp(eta0_ + (eta1_ - eta0_) * (raw(t).value - g0) / n, eta0_, eta1_);
  }

  double deta_dt(double t) const {
    double n = raw(1.0).value - raw(0.0).value;
    return (eta1_ - eta0_) * raw(t).d1 / n;
  }

  struct Eval {
    double eta, d1, d2;
    Vector grad_eta, grad_d1;  // parameter gradients of eta(t) and eta'(t)
  };

  Eval evaluate(double t, bool with_grad) const {
    Vector g0, g1, gt, gd;
    Raw r0 = raw(0.0, with_grad ? &g0 : nullptr);
    Raw r1 = raw(1.0, with_grad ? &g1 : nullptr);
    Raw rt = raw(t, with_grad ? &gt : nullptr, with_grad ? &gd : nullptr);
    const double delta = eta1_ - eta0_;
    const double n = r1.value - r0.value, g = rt.value - r0.value;
    Eval e{eta0_ + delta * g / n, delta * rt.d1 / n, delta * rt.d2 / n, {}, {}};
    if (with_grad) {
      e.grad_eta.resize(params_.size());
      e.grad_d1.resize(params_.size());
      for (std::size_t i = 0; i < params_.size(); ++i) {
        double dg = gt[i] - g0[i], dn = g1[i] - g0[i];
        e.grad_eta[i] = delta * (dg * n - g * dn) / (n * n);
        e.grad_d1[i] = delta * (gd[i] * n - rt.d1 * dn) / (n * n);
      }
    }
    return e;
  }

  // Smallest forward difference of eta over an even grid; negative means non-monotone.
  double min_increment(std::size_t points = 10000) const {
    double prev = eta(0.0), worst = kInf;
    for (std::size_t i = 1; i <= points; ++i) {
      double e = eta(static_cast<double>(i) / points);
      worst = std::min(worst, e - prev);
      prev = e;
    }
    return worst;
  }

 private:
  double eta0_, eta1_;
  std::size_t h_;
  Vector params_;
};

class LearnedProposal final : public Proposal {
 public:
  explicit LearnedProposal(MonotoneNet net) : net_(std::move(net)) {
    if (!(net_.eta1() > net_.eta0())) throw ProposalSupportError("learned proposal needs eta0 < eta1");
  }
  std::string id() const override { return "learned"; }
  double eta0() const override { return net_.eta0(); }
  double eta1() const override { return net_.eta1(); }
  double time_of(double eta) const {
    if (eta <= eta0()) return 0.0;
    if (eta >= eta1()) return 1.0;
    return invert_monotone([this](double t) { return net_.eta(t); }, [this](double t) { return net_.deta_dt(t); },
                           eta, 0.0, 1.0);
  }
  double density(double eta) const override {
    if (eta < eta0() || eta > eta1()) return 0.0;
    return 1.0 / net_.deta_dt(time_of(eta));
  }
  double cdf(double eta) const override { return time_of(eta); }
  double sample(double u) const override {
    check_unit(u);
    return net_.eta(u);
  }
  ProposalDraw draw(double u) const override {
    check_unit(u);
    return {net_.eta(u), 1.0 / net_.deta_dt(u)};
  }
  double normalizer() const override { return 1.0; }
  const MonotoneNet& net() const { return net_; }

 private:
  MonotoneNet net_;
};

}  // namespace vlb

#endif
