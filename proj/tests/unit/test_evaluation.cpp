#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "vlb/evaluation.hpp"
#include "vlb/presets.hpp"

using namespace vlb;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ChannelSchedule vp_sigmoid(double e0 = -8.7, double e1 = 5.0) {
  return {Regime::VP, VarianceFamily::sigmoid(), {e0, e1}};
}

// 30-digit value of 1/2 ln(2 pi e) - H(N(0,1) truncated to (-3, 3)).
constexpr double kGapTau3 = 0.0160349847542052248601;
constexpr double kOptimalFloor = 3.85015531621852815879;

}  // namespace

TEST_CASE("prior cross-entropy closed form", "[evaluation]") {
  auto s = vp_sigmoid();
  auto c = s.coefficients_at(5.0);
  std::vector<double> x{0.5, -2.0};
  double expected = 0.0;
  for (double v : x) expected += 0.5 * (std::log(2.0 * std::numbers::pi) + c.sigma * c.sigma + c.alpha * c.alpha * v * v);
  CHECK_THAT(prior_cross_entropy(x, s), WithinAbs(expected, 1e-14));
  ChannelSchedule ve(Regime::VE, VarianceFamily::ve_exponential(), {-9.0, 7.0});
  CHECK_THROWS_AS(prior_cross_entropy(x, ve), UnsupportedError);
}

TEST_CASE("truncated normal entropy gap", "[evaluation][dequant]") {
  CHECK_THAT(truncated_normal_entropy_gap(3.0), WithinAbs(kGapTau3, 1e-15));
  CHECK_THAT(truncated_normal_entropy_gap_mc(3.0, 1000000, 3), WithinAbs(kGapTau3, 1e-5));
  CHECK(truncated_normal_from_uniform(0.5, 3.0) == 0.0);
  CHECK(truncated_normal_from_uniform(1e-12, 3.0) > -3.0);
  CHECK(truncated_normal_from_uniform(1.0 - 1e-12, 3.0) < 3.0);
}

TEST_CASE("tau = 3 noise level and dequantization offset", "[evaluation][dequant]") {
  auto s = vp_sigmoid(-20.0, 5.0);
  double eta = eta_for_tau(s, 3.0);
  CHECK_THAT(eta, WithinAbs(-std::log(9.0 * 65536.0), 1e-10));
  auto tn = truncated_normal_dequant_offset(s, eta, 3);
  CHECK_THAT(tn.tau, WithinAbs(3.0, 1e-9));
  double expected = 1.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * tn.sigma_eps * tn.sigma_eps) - 3.0 * kTnEntropyGap;
  CHECK_THAT(tn.offset, WithinAbs(expected, 1e-12));
  CHECK_THROWS_AS(truncated_normal_dequant_offset(s, -10.0, 3), ConfigError);
  CHECK_THROWS_AS(truncated_normal_dequant_offset(s, eta, 3, 16), ConfigError);
}

TEST_CASE("uniform dequantization stays in its bin", "[evaluation][dequant]") {
  Rng rng(1);
  std::vector<double> codes{0.0, 17.0, 255.0};
  for (int rep = 0; rep < 1000; ++rep) {
    auto v = uniform_dequant(codes, 256, rng);
    for (std::size_t i = 0; i < codes.size(); ++i) {
      double lo = codes[i] * 2.0 / 256 - 1.0;
      REQUIRE(v[i] >= lo);
      REQUIRE(v[i] < lo + 2.0 / 256);
    }
  }
  std::vector<double> bad{256.0}, frac{1.5};
  CHECK_THROWS_AS(uniform_dequant(bad, 256, rng), DomainError);
  CHECK_THROWS_AS(uniform_dequant(frac, 256, rng), DomainError);
  CHECK(parse_dequant("tn") == DequantMode::TruncatedNormal);
  CHECK_THROWS_AS(parse_dequant("variational"), ConfigError);
}

TEST_CASE("nll bound for Gaussian data with the exact score", "[evaluation]") {
  auto s = vp_sigmoid();
  auto p = density_preset("gauss");
  ExactScorePredictor exact(p, s);
  DesignedProposal prop(s);
  auto data = draw_samples(p, 400, 12);
  NllOptions opt;
  opt.n_samples = 2000;
  opt.seed = 5;
  auto rep = nll_bound(data, s, exact, prop, opt);
  REQUIRE(rep.per_point_nats.size() == 400);
  CHECK(std::abs(rep.dsm_term.mean - kOptimalFloor) < 4.0 * rep.dsm_term.std_error);
  CHECK_THAT(rep.prior_term_nats, WithinAbs(0.5 * (std::log(2.0 * std::numbers::pi) + 1.0), 0.15));
  CHECK_THAT(rep.mean_nats, WithinAbs(rep.dsm_term.mean + rep.prior_term_nats, 1e-10));
  CHECK_THAT(rep.bits_per_dim, WithinRel(rep.mean_nats / std::numbers::ln2, 1e-14));
  CHECK(rep.dequant_offset_nats == 0.0);

  auto again = nll_bound(data, s, exact, prop, opt);
  CHECK(again.per_point_nats == rep.per_point_nats);
}

TEST_CASE("nll bound checks options and warm-start records", "[evaluation]") {
  auto s = vp_sigmoid();
  auto p = density_preset("gauss");
  ExactScorePredictor exact(p, s);
  UniformTProposal prop(s);
  auto data = draw_samples(p, 4, 1);
  NllOptions opt;
  opt.n_samples = 1;
  CHECK_THROWS_AS(nll_bound(data, s, exact, prop, opt), ConfigError);
  opt.n_samples = 10;
  opt.warm_start = WarmStartRecord{"gaussian", 1.0, 0.1, 3};
  CHECK_THROWS_AS(nll_bound(data, s, exact, prop, opt), ConfigError);
  opt.warm_start.reset();
  opt.dequant = DequantMode::Uniform;
  CHECK_THROWS_AS(nll_bound(data, s, exact, prop, opt), DomainError);
}

TEST_CASE("nll bound dequantization offsets on a quantized source", "[evaluation][dequant]") {
  auto s = vp_sigmoid(-14.0, 5.0);
  auto g = QuantizedGrid::uniform_source(256);
  ExactScorePredictor exact(g, s);
  UniformTProposal prop(s);
  auto codes = draw_codes(g, 8, 2);
  NllOptions opt;
  opt.n_samples = 20;
  opt.dequant = DequantMode::Uniform;
  auto u = nll_bound(codes, s, exact, prop, opt);
  CHECK_THAT(u.dequant_offset_nats, WithinAbs(std::log(128.0), 1e-14));
  opt.dequant = DequantMode::TruncatedNormal;
  auto t = nll_bound(codes, s, exact, prop, opt);
  auto tn = truncated_normal_dequant_offset(s, eta_for_tau(s, 3.0), 1);
  CHECK_THAT(t.dequant_offset_nats, WithinAbs(-tn.offset + std::log(tn.alpha_eps), 1e-12));
  CHECK(std::isfinite(t.bits_per_dim));
}

TEST_CASE("ancestral sampling with the exact score recovers N(0, 1)", "[evaluation][sampling]") {
  auto s = vp_sigmoid();
  ExactScorePredictor exact(density_preset("gauss"), s);
  auto x = ancestral_sample(s, exact, 500, 20000, 3);
  double m = 0.0, m2 = 0.0;
  for (double v : x.data) {
    m += v;
    m2 += v * v;
  }
  m /= 20000.0;
  m2 /= 20000.0;
  CHECK(std::abs(m) < 0.03);
  CHECK_THAT(m2 - m * m, WithinAbs(1.0, 0.05));
  auto y = ancestral_sample(s, exact, 500, 50, 3);
  for (std::size_t i = 0; i < 50; ++i) CHECK(y(i, 0) == x(i, 0));
  CHECK_THROWS_AS(ancestral_sample(s, exact, 1, 10, 3), ConfigError);
}

TEST_CASE("ancestral sampling on a bimodal mixture", "[evaluation][sampling]") {
  auto s = vp_sigmoid();
  ExactScorePredictor exact(density_preset("bimodal"), s);
  auto x = ancestral_sample(s, exact, 1000, 4000, 9);
  double pos = 0.0, near = 0.0;
  for (double v : x.data) {
    pos += v > 0;
    near += std::abs(std::abs(v) - 2.0) < 0.6;
  }
  CHECK(std::abs(pos / 4000.0 - 0.5) < 0.04);
  CHECK(near / 4000.0 > 0.98);
}
