#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <memory>

#include "vlb/presets.hpp"
#include "vlb/proposal.hpp"

using namespace vlb;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ChannelSchedule sched(Regime r, VarianceFamily f, double e0, double e1) { return {r, f, {e0, e1}}; }

double integrate(const Proposal& p) {
  Rule1D r = composite_rule({p.eta0(), 0.5 * (p.eta0() + p.eta1()), p.eta1()}, 256);
  double t = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) t += r.weights[i] * p.density(r.nodes[i]);
  return t;
}

std::vector<std::shared_ptr<Proposal>> all_proposals() {
  auto vp = sched(Regime::VP, VarianceFamily::sigmoid(), -8.7, 5.0);
  std::vector<std::shared_ptr<Proposal>> v;
  v.push_back(std::make_shared<UniformTProposal>(vp));
  v.push_back(std::make_shared<DesignedProposal>(vp));
  v.push_back(std::make_shared<DesignedProposal>(vp, DesignedTarget::AlphaSquared));
  v.push_back(std::make_shared<DesignedProposal>(sched(Regime::SP, VarianceFamily::sigmoid(), -8.7, 5.0),
                                                 DesignedTarget::AlphaSquared));
  v.push_back(std::make_shared<DesignedProposal>(sched(Regime::VP, VarianceFamily::generalized(2.0), -8.7, 5.0),
                                                 DesignedTarget::AlphaSquared));
  v.push_back(std::make_shared<DesignedProposal>(sched(Regime::VP, VarianceFamily::tanh_squash(), -4.33, 2.5)));
  v.push_back(std::make_shared<DesignedProposal>(
      sched(Regime::VE, VarianceFamily::ve_exponential(), 2.0 * std::log(0.01), 2.0 * std::log(50.0))));
  v.push_back(std::make_shared<LearnedProposal>(MonotoneNet(-8.7, 5.0, 32, 3)));
  return v;
}

}  // namespace

TEST_CASE("designed normalizer examples", "[proposal]") {
  auto vp = sched(Regime::VP, VarianceFamily::sigmoid(), -8.7, 5.0);
  CHECK_THAT(designed_normalizer(vp), WithinAbs(8.69345122344799412606, 1e-12));
  auto th = sched(Regime::VP, VarianceFamily::tanh_squash(), -4.33, 2.5);
  CHECK_THAT(designed_normalizer(th), WithinAbs(4.32672901039423185201, 1e-12));
  CHECK(designed_normalizer(sched(Regime::VP, VarianceFamily::sigmoid(), 1.0, 1.0)) == 0.0);
  CHECK_THROWS_AS(DesignedProposal(sched(Regime::VP, VarianceFamily::sigmoid(), 1.0, 1.0)), ProposalSupportError);
  CHECK_THROWS_AS(UniformTProposal(sched(Regime::VP, VarianceFamily::sigmoid(), 1.0, 1.0)), ProposalSupportError);
}

TEST_CASE("closed-form normalizer matches quadrature", "[proposal]") {
  for (auto f : {VarianceFamily::sigmoid(), VarianceFamily::tanh_squash()}) {
    auto s = sched(Regime::VP, f, -8.7, 5.0);
    DesignedProposal d(s);
    Rule1D r = rule_on(QuadratureRule::GaussLegendre, 512, s.eta0(), s.eta1());
    double z = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) z += r.weights[i] * d.shape(r.nodes[i]);
    CHECK_THAT(d.normalizer(), WithinAbs(z, 1e-9));
  }
  // For VP sigmoid alpha^2 is the likelihood weight, so both targets coincide.
  auto s = sched(Regime::VP, VarianceFamily::sigmoid(), -8.7, 5.0);
  CHECK_THAT(DesignedProposal(s, DesignedTarget::AlphaSquared).normalizer(), WithinAbs(DesignedProposal(s).normalizer(), 1e-14));
}

TEST_CASE("every proposal integrates to 1", "[proposal][property]") {
  for (const auto& p : all_proposals()) {
    INFO(p->id());
    CHECK_THAT(integrate(*p), WithinAbs(1.0, 1e-8));
  }
}

TEST_CASE("inverse CDF round trips and endpoints", "[proposal][property]") {
  for (const auto& p : all_proposals()) {
    INFO(p->id());
    CHECK(p->sample(0.0) == p->eta0());
    CHECK(p->sample(1.0) == p->eta1());
    for (int k = 1; k <= 9; ++k) {
      double u = k / 10.0;
      CHECK_THAT(p->cdf(p->sample(u)), WithinAbs(u, 1e-8));
    }
    double prev = -kInf;
    for (int i = 1; i < 2000; ++i) {
      double e = p->sample(i / 2000.0);
      REQUIRE(e > prev);
      prev = e;
    }
    CHECK_THROWS_AS(p->sample(1.5), DomainError);
  }
}

TEST_CASE("designed proposal passes a Kolmogorov-Smirnov check", "[proposal]") {
  auto s = sched(Regime::VP, VarianceFamily::sigmoid(), -8.7, 5.0);
  DesignedProposal d(s);
  Rng rng(31);
  const std::size_t n = 100000;
  std::vector<double> e(n);
  for (auto& v : e) v = d.sample(rng.uniform());
  std::sort(e.begin(), e.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double f = d.cdf(e[i]);
    ks = std::max({ks, std::abs(f - static_cast<double>(i) / n), std::abs(f - static_cast<double>(i + 1) / n)});
  }
  CHECK(ks < 0.006);
}

TEST_CASE("draw agrees with sample and density", "[proposal][property]") {
  for (const auto& p : all_proposals()) {
    for (double u : {1e-6, 0.1, 0.37, 0.5, 0.9, 1.0 - 1e-6}) {
      auto d = p->draw(u);
      CHECK(d.eta == p->sample(u));
      CHECK_THAT(d.density, WithinRel(p->density(d.eta), 1e-8));
    }
  }
}

TEST_CASE("uniform-t density is the change of variables", "[proposal]") {
  auto s = sched(Regime::VP, VarianceFamily::sigmoid(), -8.7, 5.0);
  UniformTProposal u(s);
  CHECK_THAT(u.density(0.0), WithinRel(1.0 / 13.7, 1e-15));
  CHECK_THAT(u.sample(0.25), WithinAbs(-8.7 + 0.25 * 13.7, 1e-14));
  CHECK(u.density(6.0) == 0.0);
}

TEST_CASE("monotone net is monotone and pinned", "[proposal]") {
  MonotoneNet net(-8.7, 5.0, 64, 11);
  CHECK(net.eta(0.0) == -8.7);
  CHECK(net.eta(1.0) == 5.0);
  CHECK(net.min_increment(10000) >= 0.0);
  // scrambled parameters keep monotonicity since weights enter squared
  Rng rng(2);
  for (auto& p : net.params()) p = 3.0 * rng.normal();
  CHECK(net.min_increment(10000) >= 0.0);
  CHECK(net.eta(0.0) == -8.7);
  CHECK(net.eta(1.0) == 5.0);
}

TEST_CASE("monotone net derivatives and parameter gradients", "[proposal][property]") {
  MonotoneNet net(-8.7, 5.0, 16, 4);
  for (double t : {0.1, 0.45, 0.8}) {
    auto e = net.evaluate(t, true);
    const double h = 1e-6;
    CHECK_THAT(e.d1, WithinRel((net.eta(t + h) - net.eta(t - h)) / (2 * h), 1e-6));
    CHECK_THAT(e.d2, WithinAbs((net.deta_dt(t + h) - net.deta_dt(t - h)) / (2 * h), 1e-5 * (1 + std::abs(e.d2))));
    for (std::size_t i = 0; i < net.num_params(); ++i) {
      MonotoneNet a = net, b = net;
      a.params()[i] += h;
      b.params()[i] -= h;
      double fd_eta = (a.evaluate(t, false).eta - b.evaluate(t, false).eta) / (2 * h);
      double fd_d1 = (a.evaluate(t, false).d1 - b.evaluate(t, false).d1) / (2 * h);
      REQUIRE_THAT(e.grad_eta[i], WithinAbs(fd_eta, 1e-6 * (1 + std::abs(fd_eta))));
      REQUIRE_THAT(e.grad_d1[i], WithinAbs(fd_d1, 1e-6 * (1 + std::abs(fd_d1))));
    }
  }
}

TEST_CASE("learned proposal density is the inverse slope", "[proposal]") {
  LearnedProposal p(MonotoneNet(-8.7, 5.0, 8, 1));
  for (double t : {0.2, 0.6}) {
    double eta = p.sample(t);
    CHECK_THAT(p.cdf(eta), WithinAbs(t, 1e-9));
    CHECK_THAT(p.density(eta), WithinRel(1.0 / p.net().deta_dt(t), 1e-8));
  }
}

TEST_CASE("root finder reports non-convergence", "[proposal]") {
  auto F = [](double x) { return x; };
  auto dF = [](double) { return 1.0; };
  CHECK_THAT(invert_monotone(F, dF, 0.3, 0.0, 1.0), WithinAbs(0.3, 1e-12));
  CHECK_THROWS_AS(invert_monotone(F, dF, 0.3, 0.0, 1e300), NumericError);
}
