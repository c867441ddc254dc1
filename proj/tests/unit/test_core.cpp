#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "vlb/core.hpp"
#include "vlb/optim.hpp"
#include "vlb/rng.hpp"

using namespace vlb;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("sigmoid and softplus are stable at extreme arguments", "[core]") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(800.0) == 1.0);
  CHECK(sigmoid(-800.0) == 0.0);
  CHECK_THAT(softplus(-50.0), WithinRel(std::exp(-50.0), 1e-14));
  CHECK_THAT(softplus(50.0), WithinRel(50.0, 1e-15));
  CHECK(std::isfinite(softplus(1e6)));
  CHECK_THAT(log_sigmoid(-40.0), WithinRel(-40.0 - std::log1p(std::exp(-40.0)), 1e-15));
}

TEST_CASE("normal_mass keeps tail accuracy", "[core]") {
  CHECK_THAT(normal_mass(-1.0, 1.0), WithinAbs(0.68268949213708585, 1e-15));
  // P(Z > 10) = 7.6198530241605260e-24
  CHECK_THAT(normal_mass(10.0, kInf), WithinRel(7.6198530241605260e-24, 1e-12));
  CHECK_THAT(normal_mass(-kInf, -10.0), WithinRel(7.6198530241605260e-24, 1e-12));
}

TEST_CASE("log_sum_exp handles -inf and large values", "[core]") {
  std::vector<double> v{1000.0, 1000.0};
  CHECK_THAT(log_sum_exp(v), WithinAbs(1000.0 + std::log(2.0), 1e-12));
  std::vector<double> w{-kInf, -kInf};
  CHECK(log_sum_exp(w) == -kInf);
}

TEST_CASE("require_same_dim throws DimensionError", "[core]") {
  CHECK_THROWS_AS(require_same_dim(2, 3, "x"), DimensionError);
  CHECK_NOTHROW(require_same_dim(3, 3, "x"));
}

TEST_CASE("Rng streams are reproducible and distinct", "[rng]") {
  Rng a(7), b(7), c(7, 1), d(7, 2);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  CHECK(c.next_u64() != d.next_u64());
  CHECK(derive_seed(7, 1) != derive_seed(8, 1));
}

TEST_CASE("Rng normal has unit moments", "[rng]") {
  Rng r(3);
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double z = r.normal();
    s += z;
    s2 += z * z;
  }
  CHECK(std::abs(s / n) < 5.0 / std::sqrt(n));
  CHECK(std::abs(s2 / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
}

TEST_CASE("Rng uniform stays in [0, 1) and uniform_open avoids 0", "[rng]") {
  Rng r(11);
  for (int i = 0; i < 10000; ++i) {
    double u = r.uniform();
    double v = r.uniform_open();
    CHECK((u >= 0.0 && u < 1.0));
    CHECK((v > 0.0 && v < 1.0));
  }
}

TEST_CASE("Adam step matches hand-computed first update", "[optim]") {
  AdamConfig cfg;
  cfg.lr = 0.1;
  cfg.weight_decay = 0.0;
  AdamState st;
  Vector p{1.0, -2.0}, g{0.5, -3.0};
  st.update(cfg, p, g);
  // First bias-corrected step is lr * sign(g) up to eps.
  CHECK_THAT(p[0], WithinAbs(0.9, 1e-7));
  CHECK_THAT(p[1], WithinAbs(-1.9, 1e-7));
}

TEST_CASE("Adam decoupled weight decay shrinks parameters with zero gradient", "[optim]") {
  AdamConfig cfg;
  cfg.lr = 0.1;
  cfg.weight_decay = 0.5;
  AdamState st;
  Vector p{2.0}, g{0.0};
  st.update(cfg, p, g);
  CHECK_THAT(p[0], WithinAbs(2.0 * (1.0 - 0.1 * 0.5), 1e-12));
}

TEST_CASE("EMA tracks parameters with warm-up decay", "[optim]") {
  Ema e;
  e.rate = 0.9999;
  e.warmup = true;
  Vector p{1.0};
  e.update(p, 0);
  CHECK(e.shadow[0] == 1.0);
  p[0] = 2.0;
  e.update(p, 1);
  double d = std::min(0.9999, 2.0 / 11.0);
  CHECK_THAT(e.shadow[0], WithinAbs(d * 1.0 + (1.0 - d) * 2.0, 1e-15));
}
