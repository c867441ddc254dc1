#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "vlb/density.hpp"
#include "vlb/functionals.hpp"
#include "vlb/presets.hpp"

using namespace vlb;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double variance_by_quadrature(const Density& d) {
  auto g = default_grid(d);
  double m1 = 0.0, m2 = 0.0;
  g.for_each([&](std::span<const double> x, double w) {
    double p = std::exp(d.log_density(x));
    m1 += w * p * x[0];
    m2 += w * p * x[0] * x[0];
  });
  return m2 - m1 * m1;
}

}  // namespace

TEST_CASE("density_eval examples", "[density]") {
  std::vector<double> zero{0.0}, two{2.0};
  auto v = density_eval(GaussianMixture::normal(1), zero);
  CHECK_THAT(v.log_density, WithinAbs(-0.5 * std::log(2.0 * std::numbers::pi), 1e-15));
  CHECK(v.score[0] == 0.0);

  GaussianMixture pair{{0.5, 0.5}, {{-1.0}, {1.0}}, {1.0, 1.0}};
  CHECK_THAT(density_eval(pair, zero).score[0], WithinAbs(0.0, 1e-16));

  auto w = density_eval(GaussianMixture::normal(1, 0.0, 4.0), two);
  CHECK_THAT(w.log_density, WithinAbs(-0.5 * std::log(8.0 * std::numbers::pi) - 0.5, 1e-14));
  CHECK_THAT(w.score[0], WithinAbs(-0.5, 1e-15));

  CHECK_THROWS_AS(density_eval(QuantizedGrid::uniform_source(4), zero), UnsupportedError);
}

TEST_CASE("mixture score matches finite differences", "[density][property]") {
  for (const auto& name : {"gmm2", "gmm2-alt", "bimodal"}) {
    auto d = density_preset(name);
    for (double x = -4.0; x <= 4.0; x += 0.37) {
      std::vector<double> a{x - 1e-6}, b{x + 1e-6}, c{x};
      double fd = (density_eval(d, b).log_density - density_eval(d, a).log_density) / 2e-6;
      REQUIRE_THAT(density_eval(d, c).score[0], WithinAbs(fd, 1e-6 * (1.0 + std::abs(fd))));
    }
  }
}

TEST_CASE("mixture log-density stays finite far from the modes", "[density]") {
  auto d = density_preset("bimodal");
  std::vector<double> far{1e3};
  auto v = density_eval(d, far);
  CHECK(std::isfinite(v.log_density));
  CHECK(std::isfinite(v.score[0]));
}

TEST_CASE("mixture validation", "[density]") {
  GaussianMixture bad{{0.6, 0.6}, {{0.0}, {1.0}}, {1.0, 1.0}};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  GaussianMixture neg{{1.0}, {{0.0}}, {-1.0}};
  CHECK_THROWS_AS(neg.validate(), ConfigError);
  QuantizedGrid g = QuantizedGrid::uniform_source(4);
  g.masses[0] = 0.5;
  CHECK_THROWS_AS(g.validate(), ConfigError);
}

TEST_CASE("smoothed_density examples", "[density]") {
  auto n01 = GaussianMixture::normal(1);
  std::vector<double> x{0.7};
  auto s0 = smoothed_density(n01, NoiseFamily::gaussian(), 2.0, 0.0);
  CHECK_THAT(s0->log_density(x), WithinAbs(MixtureDensity(GaussianMixture::normal(1, 0.0, 4.0)).log_density(x), 1e-15));

  auto s1 = smoothed_density(n01, NoiseFamily::gaussian(), 1.0, 1.0);
  CHECK_THAT(s1->log_density(x), WithinAbs(MixtureDensity(GaussianMixture::normal(1, 0.0, 2.0)).log_density(x), 1e-15));

  auto su = smoothed_density(n01, NoiseFamily::uniform(), 1.0, 0.5);
  QuadratureGrid g{{{-12.0, 12.0}}, {2048}, QuadratureRule::GaussLegendre};
  CHECK_THAT(integrate_density(*su, g), WithinAbs(1.0, 1e-8));
  CHECK_THAT(variance_by_quadrature(*su), WithinAbs(1.25, 1e-8));

  CHECK_THROWS_AS(smoothed_density(n01, NoiseFamily::gaussian(), 0.0, 1.0), ConfigError);
  CHECK_THROWS_AS(smoothed_density(n01, NoiseFamily::gaussian(), 1.0, -1.0), ConfigError);
}

TEST_CASE("convolution path agrees with the closed form under Gaussian noise", "[density][property]") {
  SmoothingOptions force;
  force.force_quadrature = true;
  for (const auto& name : {"gauss", "gmm2", "bimodal"}) {
    auto d = density_preset(name);
    for (double sigma : {0.01, 0.1, 0.7}) {
      auto closed = smoothed_density(d, NoiseFamily::gaussian(), 0.9, sigma);
      auto quad = smoothed_density(d, NoiseFamily::gaussian(), 0.9, sigma, force);
      for (double y = -4.0; y <= 4.0; y += 0.31) {
        std::vector<double> p{y};
        REQUIRE_THAT(std::exp(quad->log_density(p)), WithinAbs(std::exp(closed->log_density(p)), 1e-7));
        REQUIRE_THAT(quad->score(p)[0], WithinAbs(closed->score(p)[0], 1e-6 * (1.0 + std::abs(closed->score(p)[0]))));
      }
    }
  }
}

TEST_CASE("smoothed handles integrate to 1 for every family", "[density][property]") {
  for (const auto& noise : NoiseFamily::all()) {
    for (const auto& name : {"gauss4", "gmm2", "gmm2d"}) {
      auto d = density_preset(name);
      for (double sigma : {0.01, 0.3}) {
        auto h = smoothed_density(d, noise, 1.0, sigma);
        auto g = default_grid(*h, nullptr, dim_of(d) == 1 ? 512 : 160);
        REQUIRE_THAT(integrate_density(*h, g), WithinAbs(1.0, 1e-6));
      }
    }
  }
}

TEST_CASE("smoothed quantized grid integrates to 1 and matches the bin mass", "[density]") {
  auto g = QuantizedGrid::uniform_source(8);
  for (const auto& noise : NoiseFamily::all()) {
    auto h = smoothed_density(g, noise, 1.0, 0.05);
    QuadratureGrid qg{{{-2.0, 2.0}}, {4096}, QuadratureRule::GaussLegendre};
    CHECK_THAT(integrate_density(*h, qg), WithinAbs(1.0, 1e-6));
  }
  auto raw = make_density(g);
  std::vector<double> inside{0.1};
  CHECK_THAT(raw->log_density(inside), WithinAbs(std::log(0.5), 1e-14));
  CHECK_FALSE(raw->has_score());
}

TEST_CASE("quantized grid score is finite in the far tail", "[density]") {
  auto g = QuantizedGrid::uniform_source(256);
  auto h = smoothed_density(g, NoiseFamily::gaussian(), 1.0, 1e-3);
  std::vector<double> far{5.0};
  CHECK(h->log_density(far) == -kInf);
  CHECK_THAT(h->score(far)[0], WithinRel(-(5.0 - 1.0) / 1e-6, 1e-12));
}

TEST_CASE("noise families have zero mean and unit variance", "[density][noise]") {
  for (const auto& noise : NoiseFamily::all()) {
    const std::size_t n = 1000000;
    auto m = draw_samples(noise, n, 1234);
    double s = 0.0, s2 = 0.0;
    for (double v : m.data) {
      s += v;
      s2 += v * v;
    }
    double mean = s / n, var = s2 / n - mean * mean;
    INFO(noise.name());
    CHECK(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(n)));
    CHECK(var >= 0.99);
    CHECK(var <= 1.01);

    auto edges = noise.panels();
    auto rule = composite_rule(edges, 64);
    double total = 0.0, second = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
      total += rule.weights[i] * std::exp(noise.log_pdf(rule.nodes[i]));
      second += rule.weights[i] * noise.pdf(rule.nodes[i]) * rule.nodes[i] * rule.nodes[i];
    }
    CHECK_THAT(total, WithinAbs(1.0, 1e-8));
    CHECK_THAT(second, WithinAbs(1.0, 1e-8));
  }
}

TEST_CASE("noise cdf and inverse cdf are consistent", "[noise][property]") {
  for (const auto& noise : NoiseFamily::all()) {
    for (double u = 0.01; u < 1.0; u += 0.049) {
      REQUIRE_THAT(noise.cdf(noise.inverse_cdf(u)), WithinAbs(u, 1e-13));
    }
    CHECK_THAT(noise.mass(-kInf, kInf), WithinAbs(1.0, 1e-15));
  }
  CHECK(NoiseFamily::parse("laplace").kind == NoiseFamily::Kind::Laplace);
  CHECK_THROWS_AS(NoiseFamily::parse("cauchy"), ConfigError);
}

TEST_CASE("sampling is deterministic and rejects zero count", "[density]") {
  auto d = density_preset("gmm2");
  auto a = draw_samples(d, 100, 5), b = draw_samples(d, 100, 5), c = draw_samples(d, 100, 6);
  CHECK(a.data == b.data);
  CHECK(a.data != c.data);
  CHECK_THROWS_AS(draw_samples(d, 0, 5), ConfigError);
  CHECK_THROWS_AS(draw_samples(NoiseFamily::laplace(), 0, 5), ConfigError);
}

TEST_CASE("mixture samples reproduce the mixture moments", "[density]") {
  auto d = density_preset("gmm2-alt");
  auto m = draw_samples(d, 400000, 77);
  double s = 0.0, s2 = 0.0;
  for (double v : m.data) {
    s += v;
    s2 += v * v;
  }
  const double n = 400000.0;
  // mean = 0.4(-0.8) + 0.6(1.1), second moment = sum w (v + mu^2)
  double mean = 0.4 * -0.8 + 0.6 * 1.1;
  double second = 0.4 * (0.6 + 0.64) + 0.6 * (0.45 + 1.21);
  double sd = std::sqrt(second - mean * mean);
  CHECK(std::abs(s / n - mean) < 4.0 * sd / std::sqrt(n));
  CHECK(std::abs(s2 / n - second) < 0.01);
}

TEST_CASE("grid codes follow the masses", "[density]") {
  QuantizedGrid g{4, -1.0, 1.0, 1, {0.1, 0.2, 0.3, 0.4}};
  auto c = draw_codes(g, 200000, 9);
  std::vector<double> counts(4, 0.0);
  for (double v : c.data) counts[static_cast<int>(v)] += 1.0;
  for (int k = 0; k < 4; ++k) CHECK(std::abs(counts[k] / 200000.0 - g.masses[k]) < 0.005);
}
