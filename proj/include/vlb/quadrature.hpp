#ifndef VLB_QUADRATURE_HPP
#define VLB_QUADRATURE_HPP

#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <vector>

#include "core.hpp"

namespace vlb {

struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::size_t size() const { return nodes.size(); }
};

namespace detail {

// Gauss-Legendre on [-1, 1] by Newton iteration on P_n.
inline Rule1D compute_gauss_legendre(int n) {
  Rule1D r;
  r.nodes.resize(n);
  r.weights.resize(n);
  int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-16) {
        // one more pass for the derivative at the converged node
        p1 = 1.0;
        p2 = 0.0;
        for (int j = 1; j <= n; ++j) {
          double p3 = p2;
          p2 = p1;
          p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
        }
        pp = n * (z * p1 - p2) / (z * z - 1.0);
        break;
      }
    }
    r.nodes[i] = -z;
    r.nodes[n - 1 - i] = z;
    double w = 2.0 / ((1.0 - z * z) * pp * pp);
    r.weights[i] = w;
    r.weights[n - 1 - i] = w;
  }
  return r;
}

// Gauss-Hermite for weight exp(-x^2), converted to the standard normal measure.
inline Rule1D compute_gauss_hermite(int n) {
  Rule1D r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const double pim4 = 0.7511255444649425;
  int m = (n + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < m; ++i) {
    if (i == 0)
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    else if (i == 1)
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    else if (i == 2)
      z = 1.86 * z - 0.86 * r.nodes[0];
    else if (i == 3)
      z = 1.91 * z - 0.91 * r.nodes[1];
    else
      z = 2.0 * z - r.nodes[i - 2];
    double pp = 0.0;
    for (int it = 0; it < 200; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    r.nodes[i] = z;
    r.nodes[n - 1 - i] = -z;
    r.weights[i] = 2.0 / (pp * pp);
    r.weights[n - 1 - i] = r.weights[i];
  }
  Rule1D out;
  out.nodes.resize(n);
  out.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    out.nodes[i] = -r.nodes[i] * std::numbers::sqrt2;
    out.weights[i] = r.weights[i] / std::sqrt(std::numbers::pi);
  }
  return out;
}

inline Rule1D compute_clenshaw_curtis(int n) {
  // n + 1 nodes cos(k pi / n) on [-1, 1]; n even
  if (n % 2) ++n;
  Rule1D r;
  r.nodes.resize(n + 1);
  r.weights.resize(n + 1);
  for (int k = 0; k <= n; ++k) {
    double th = k * std::numbers::pi / n;
    r.nodes[k] = -std::cos(th);
    double s = 0.0;
    for (int j = 1; j <= n / 2; ++j) {
      double b = (2 * j == n) ? 1.0 : 2.0;
      s += b / (4.0 * j * j - 1.0) * std::cos(2.0 * j * th);
    }
    double c = (k == 0 || k == n) ? 1.0 : 2.0;
    r.weights[k] = c / n * (1.0 - s);
  }
  return r;
}

template <class F>
const Rule1D& cached_rule(std::map<int, Rule1D>& cache, int n, F make) {
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, make(n)).first;
  return it->second;
}

}  // namespace detail

inline const Rule1D& gauss_legendre(int n) {
  static std::map<int, Rule1D> cache;
  return detail::cached_rule(cache, n, detail::compute_gauss_legendre);
}

inline const Rule1D& gauss_hermite(int n) {
  static std::map<int, Rule1D> cache;
  return detail::cached_rule(cache, n, detail::compute_gauss_hermite);
}

inline const Rule1D& clenshaw_curtis(int n) {
  static std::map<int, Rule1D> cache;
  return detail::cached_rule(cache, n, detail::compute_clenshaw_curtis);
}

enum class QuadratureRule { GaussLegendre, Trapezoid, ClenshawCurtis };

// Rule mapped onto [a, b].
inline Rule1D rule_on(QuadratureRule rule, int n, double a, double b) {
  Rule1D out;
  if (rule == QuadratureRule::Trapezoid) {
    if (n < 2) n = 2;
    double h = (b - a) / (n - 1);
    for (int i = 0; i < n; ++i) {
      out.nodes.push_back(a + i * h);
      out.weights.push_back((i == 0 || i == n - 1) ? 0.5 * h : h);
    }
    return out;
  }
  const Rule1D& ref = rule == QuadratureRule::GaussLegendre ? gauss_legendre(n) : clenshaw_curtis(n);
  double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  out.nodes.resize(ref.size());
  out.weights.resize(ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) {
    out.nodes[i] = mid + half * ref.nodes[i];
    out.weights[i] = half * ref.weights[i];
  }
  return out;
}

// Composite Gauss-Legendre over consecutive panels [edges[i], edges[i+1]].
inline Rule1D composite_rule(const std::vector<double>& edges, int per_panel) {
  Rule1D out;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    if (edges[i + 1] <= edges[i]) continue;
    Rule1D p = rule_on(QuadratureRule::GaussLegendre, per_panel, edges[i], edges[i + 1]);
    out.nodes.insert(out.nodes.end(), p.nodes.begin(), p.nodes.end());
    out.weights.insert(out.weights.end(), p.weights.begin(), p.weights.end());
  }
  return out;
}

struct Interval {
  double lo;
  double hi;
};

struct QuadratureGrid {
  std::vector<Interval> bounds;
  std::vector<int> nodes;
  QuadratureRule rule = QuadratureRule::GaussLegendre;

  std::size_t dim() const { return bounds.size(); }

  // Calls f(point, weight) over the tensor-product grid.
  void for_each(const std::function<void(std::span<const double>, double)>& f) const {
    if (bounds.empty() || bounds.size() != nodes.size()) throw ConfigError("malformed quadrature grid");
    std::vector<Rule1D> rules;
    for (std::size_t d = 0; d < bounds.size(); ++d)
      rules.push_back(rule_on(rule, nodes[d], bounds[d].lo, bounds[d].hi));
    Vector pt(bounds.size());
    if (bounds.size() == 1) {
      for (std::size_t i = 0; i < rules[0].size(); ++i) {
        pt[0] = rules[0].nodes[i];
        f(pt, rules[0].weights[i]);
      }
      return;
    }
    if (bounds.size() != 2) throw UnsupportedError("quadrature functionals support D <= 2");
    for (std::size_t i = 0; i < rules[0].size(); ++i)
      for (std::size_t j = 0; j < rules[1].size(); ++j) {
        pt[0] = rules[0].nodes[i];
        pt[1] = rules[1].nodes[j];
        f(pt, rules[0].weights[i] * rules[1].weights[j]);
      }
  }
};

// E[f(Z)] for Z ~ N(0, I_D), tensor Gauss-Hermite.
template <class F>
double gaussian_expectation(std::size_t dim, int n, F&& f) {
  const Rule1D& gh = gauss_hermite(n);
  Vector z(dim);
  double total = 0.0;
  if (dim == 1) {
    for (std::size_t i = 0; i < gh.size(); ++i) {
      z[0] = gh.nodes[i];
      total += gh.weights[i] * f(std::span<const double>(z));
    }
    return total;
  }
  if (dim != 2) throw UnsupportedError("Gauss-Hermite expectations support D <= 2");
  for (std::size_t i = 0; i < gh.size(); ++i)
    for (std::size_t j = 0; j < gh.size(); ++j) {
      z[0] = gh.nodes[i];
      z[1] = gh.nodes[j];
      total += gh.weights[i] * gh.weights[j] * f(std::span<const double>(z));
    }
  return total;
}

}  // namespace vlb

#endif
