#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>

#include "vlb/predictor.hpp"
#include "vlb/presets.hpp"
#include "vlb/rng.hpp"

using namespace vlb;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr PredictorKind kKinds[] = {PredictorKind::Score, PredictorKind::Noise, PredictorKind::Data,
                                    PredictorKind::Velocity, PredictorKind::StaticVelocity};

}  // namespace

TEST_CASE("data prediction by direct substitution", "[predictor]") {
  const double a = std::sqrt(0.5);
  std::vector<double> y{1.0, 1.0}, n{1.0, 1.0};
  auto x = convert_predictor(PredictorKind::Noise, PredictorKind::Data, n, y, a, a);
  CHECK_THAT(x[0], WithinAbs(std::sqrt(2.0) - 1.0, 1e-15));
  CHECK_THAT(x[1], WithinAbs(std::sqrt(2.0) - 1.0, 1e-15));
}

TEST_CASE("score to noise to score round trip", "[predictor]") {
  std::vector<double> y{0.3, -1.2}, s{2.5, -0.7};
  auto n = convert_predictor(PredictorKind::Score, PredictorKind::Noise, s, y, 0.6, 0.8);
  auto back = convert_predictor(PredictorKind::Noise, PredictorKind::Score, n, y, 0.6, 0.8);
  CHECK_THAT(back[0], WithinRel(s[0], 1e-15));
  CHECK_THAT(back[1], WithinRel(s[1], 1e-15));
}

TEST_CASE("optimal Gaussian denoiser from the smoothed score", "[predictor]") {
  auto s = make_schedule(parse_schedule_name("vp-sigmoid"));
  ExactScorePredictor p(GaussianMixture::normal(1), s);
  for (double eta : {-8.0, -1.0, 0.0, 3.0}) {
    auto c = s.coefficients_at(eta);
    std::vector<double> y{0.77};
    auto smooth = smoothed_density(GaussianMixture::normal(1), NoiseFamily::gaussian(), c.alpha, c.sigma);
    auto n = convert_predictor(PredictorKind::Score, PredictorKind::Noise, smooth->score(y), y, c.alpha, c.sigma);
    double expected = c.sigma * y[0] / (c.alpha * c.alpha + c.sigma * c.sigma);
    CHECK_THAT(n[0], WithinRel(expected, 1e-14));
    CHECK_THAT(p.predict(y, eta)[0], WithinRel(expected, 1e-14));
  }
}

TEST_CASE("all round-trip conversions agree to 1e-12 on random tuples", "[predictor][property]") {
  Rng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    double alpha = 0.05 + 0.95 * rng.uniform(), sigma = 0.05 + 0.95 * rng.uniform();
    ScheduleRates rates{-0.1 - rng.uniform(), 0.1 + rng.uniform()};
    std::vector<double> y{2.0 * rng.normal(), 2.0 * rng.normal()};
    std::vector<double> v{rng.normal(), rng.normal()};
    for (auto from : kKinds) {
      for (auto to : kKinds) {
        auto mid = convert_predictor(from, to, v, y, alpha, sigma, rates);
        auto back = convert_predictor(to, from, mid, y, alpha, sigma, rates);
        for (std::size_t d = 0; d < v.size(); ++d) worst = std::max(worst, std::abs(back[d] - v[d]) / (1.0 + std::abs(v[d])));
      }
    }
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("velocity forms coincide with their definitions", "[predictor]") {
  const double alpha = 0.6, sigma = 0.8;
  ScheduleRates rates{-0.3, 0.4};
  std::vector<double> x{0.5}, n{-1.1}, y{alpha * x[0] + sigma * n[0]};
  auto v = convert_predictor(PredictorKind::Noise, PredictorKind::Velocity, n, y, alpha, sigma, rates);
  CHECK_THAT(v[0], WithinAbs(rates.dalpha_dt * x[0] + rates.dsigma_dt * n[0], 1e-15));
  auto sv = convert_predictor(PredictorKind::Noise, PredictorKind::StaticVelocity, n, y, alpha, sigma);
  CHECK_THAT(sv[0], WithinAbs(alpha * n[0] - sigma * x[0], 1e-15));
}

TEST_CASE("conversion errors", "[predictor]") {
  std::vector<double> y{1.0}, v{1.0};
  CHECK_THROWS_AS(convert_predictor(PredictorKind::Noise, PredictorKind::Data, v, y, 0.0, 1.0), DomainError);
  CHECK_THROWS_AS(convert_predictor(PredictorKind::Noise, PredictorKind::Score, v, y, 1.0, 0.0), DomainError);
  CHECK_THROWS_AS(convert_predictor(PredictorKind::Noise, PredictorKind::Velocity, v, y, 0.5, 0.5), ConfigError);
  std::vector<double> y2{1.0, 2.0};
  CHECK_THROWS_AS(convert_predictor(PredictorKind::Noise, PredictorKind::Score, v, y2, 0.5, 0.5), DimensionError);
}

TEST_CASE("exact score predictor on a smoothed grid", "[predictor]") {
  auto s = make_schedule(parse_schedule_name("vp-sigmoid"));
  auto g = QuantizedGrid::uniform_source(16);
  ExactScorePredictor p(g, s);
  std::vector<double> y{0.2};
  double eta = -2.0;
  auto c = s.coefficients_at(eta);
  auto smooth = smoothed_density(g, NoiseFamily::gaussian(), c.alpha, c.sigma);
  CHECK_THAT(p.predict(y, eta)[0], WithinRel(-c.sigma * smooth->score(y)[0], 1e-14));
}

TEST_CASE("perturbed and interpolated predictors", "[predictor]") {
  auto s = make_schedule(parse_schedule_name("vp-sigmoid"));
  auto exact = std::make_shared<ExactScorePredictor>(GaussianMixture::normal(1), s);
  auto zero = std::make_shared<ZeroPredictor>(1);
  std::vector<double> y{0.4};
  InterpolatedPredictor half(exact, zero, 0.5);
  CHECK_THAT(half.predict(y, 0.0)[0], WithinAbs(0.5 * exact->predict(y, 0.0)[0], 1e-15));
  PerturbedPredictor pert(zero, 0.2, 1.0, 0.0, 0.0);
  CHECK_THAT(pert.predict(y, 0.0)[0], WithinAbs(0.2 * std::sin(0.4), 1e-15));
}
