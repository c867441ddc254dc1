#ifndef VLB_FUNCTIONALS_HPP
#define VLB_FUNCTIONALS_HPP

#include <algorithm>
#include <cmath>
#include <string>

#include "density.hpp"
#include "quadrature.hpp"

namespace vlb {

enum class Functional { Entropy, KL, CrossEntropy, FisherDivergence, FisherInformation };

inline std::string to_string(Functional f) {
  switch (f) {
    case Functional::Entropy: return "entropy";
    case Functional::KL: return "kl";
    case Functional::CrossEntropy: return "cross_entropy";
    case Functional::FisherDivergence: return "fisher_divergence";
    case Functional::FisherInformation: return "fisher_information";
  }
  return "?";
}

// Gauss-Legendre box covering both densities.
inline QuadratureGrid default_grid(const Density& p, const Density* q = nullptr, int nodes = 512) {
  auto b = p.bounds();
  if (q) {
    require_same_dim(p.dim(), q->dim(), "default_grid");
    auto bq = q->bounds();
    for (std::size_t d = 0; d < b.size(); ++d) {
      b[d].lo = std::min(b[d].lo, bq[d].lo);
      b[d].hi = std::max(b[d].hi, bq[d].hi);
    }
  }
  QuadratureGrid g;
  g.bounds = b;
  g.nodes.assign(b.size(), nodes);
  g.rule = QuadratureRule::GaussLegendre;
  return g;
}

inline double info_functional(Functional f, const Density& p, const Density* q, const QuadratureGrid& grid) {
  bool needs_q = f == Functional::KL || f == Functional::CrossEntropy || f == Functional::FisherDivergence;
  if (needs_q && !q) throw ConfigError(to_string(f) + " requires a second density");
  if (q) require_same_dim(p.dim(), q->dim(), "info_functional");
  require_same_dim(p.dim(), grid.dim(), "info_functional grid");
  const std::size_t D = p.dim();
  Vector sp(D), sq(D);
  double total = 0.0;
  grid.for_each([&](std::span<const double> x, double w) {
    double lp = p.log_density(x);
    if (lp == -kInf) return;
    double px = std::exp(lp);
    if (px == 0.0) return;
    double lq = 0.0;
    if (needs_q) {
      lq = q->log_density(x);
      if (lq == -kInf) throw SupportError("q vanishes where p is positive");
    }
    switch (f) {
      case Functional::Entropy: total -= w * px * lp; break;
      case Functional::KL: total += w * px * (lp - lq); break;
      case Functional::CrossEntropy: total -= w * px * lq; break;
      case Functional::FisherDivergence: {
        p.score(x, sp);
        q->score(x, sq);
        double s = 0.0;
        for (std::size_t d = 0; d < D; ++d) s += (sp[d] - sq[d]) * (sp[d] - sq[d]);
        total += w * px * s;
        break;
      }
      case Functional::FisherInformation: {
        p.score(x, sp);
        total += w * px * squared_norm(sp);
        break;
      }
    }
  });
  return total;
}

inline double info_functional(Functional f, const Density& p, const Density* q = nullptr) {
  return info_functional(f, p, q, default_grid(p, q));
}

inline double integrate_density(const Density& p, const QuadratureGrid& grid) {
  double total = 0.0;
  grid.for_each([&](std::span<const double> x, double w) { total += w * std::exp(p.log_density(x)); });
  return total;
}

}  // namespace vlb

#endif
