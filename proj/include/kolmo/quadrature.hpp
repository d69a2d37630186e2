/**
 * @file quadrature.hpp
 * @brief Gauss-Legendre rules and composite/adaptive integration in time.
 */
#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <vector>

#include "kolmo/error.hpp"

namespace kolmo {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// m-point Gauss-Legendre rule on [-1, 1] (Newton on P_m).
[[nodiscard]] inline QuadratureRule gauss_legendre(std::size_t m) {
  if (m < 1) {
    throw InvalidArgument("gauss_legendre: need at least one node");
  }
  QuadratureRule rule;
  rule.nodes.resize(m);
  rule.weights.resize(m);
  const auto md = static_cast<double>(m);
  for (std::size_t i = 0; i < (m + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (md + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (std::size_t k = 2; k <= m; ++k) {
        const auto kd = static_cast<double>(k);
        const double p2 = ((2.0 * kd - 1.0) * x * p1 - (kd - 1.0) * p0) / kd;
        p0 = p1;
        p1 = p2;
      }
      dp = md * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) {
        break;
      }
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.weights[i] = w;
    rule.nodes[m - 1 - i] = x;
    rule.weights[m - 1 - i] = w;
  }
  if (m % 2 == 1) {
    rule.nodes[m / 2] = 0.0;
  }
  return rule;
}

/// Nodes and weights of a composite rule over consecutive panels.
[[nodiscard]] inline QuadratureRule composite_rule(const std::vector<double>& edges,
                                                   std::size_t nodes_per_panel) {
  const QuadratureRule base = gauss_legendre(nodes_per_panel);
  QuadratureRule out;
  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    const double a = edges[p];
    const double b = edges[p + 1];
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (std::size_t i = 0; i < base.nodes.size(); ++i) {
      out.nodes.push_back(mid + half * base.nodes[i]);
      out.weights.push_back(half * base.weights[i]);
    }
  }
  return out;
}

/// Edges 0, t_min, then geometric up to t_max.
[[nodiscard]] inline std::vector<double> log_panels(double t_min, double t_max, std::size_t panels) {
  if (!(t_min > 0.0) || !(t_max > t_min) || panels < 1) {
    throw InvalidArgument("log_panels: need 0 < t_min < t_max and panels >= 1");
  }
  std::vector<double> edges = {0.0, t_min};
  const double ratio = std::pow(t_max / t_min, 1.0 / static_cast<double>(panels));
  double t = t_min;
  for (std::size_t p = 1; p <= panels; ++p) {
    t = p == panels ? t_max : t * ratio;
    edges.push_back(t);
  }
  return edges;
}

/// Adaptive Gauss-Legendre: 10- vs 20-point estimate, bisect until they agree.
[[nodiscard]] inline double integrate_adaptive(const std::function<double(double)>& f, double a,
                                               double b, double rel_tol = 1e-12,
                                               int max_depth = 40) {
  static const QuadratureRule coarse = gauss_legendre(10);
  static const QuadratureRule fine = gauss_legendre(20);
  auto apply = [&](const QuadratureRule& r, double lo, double hi) {
    const double half = 0.5 * (hi - lo);
    const double mid = 0.5 * (hi + lo);
    double s = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) {
      s += r.weights[i] * f(mid + half * r.nodes[i]);
    }
    return half * s;
  };
  std::function<double(double, double, double, int)> rec = [&](double lo, double hi, double scale,
                                                               int depth) -> double {
    const double c = apply(coarse, lo, hi);
    const double g = apply(fine, lo, hi);
    if (std::abs(g - c) <= rel_tol * std::max(scale, std::abs(g)) || depth >= max_depth) {
      return g;
    }
    const double mid = 0.5 * (lo + hi);
    return rec(lo, mid, scale, depth + 1) + rec(mid, hi, scale, depth + 1);
  };
  const double scale = std::abs(apply(fine, a, b));
  return rec(a, b, scale, 0);
}

}  // namespace kolmo
