#include "kglab/quadrature.hpp"

#include <array>
#include <numbers>

#include "kglab/errors.hpp"

namespace kglab {

namespace {

GaussLegendreRule compute_rule(int order) {
  GaussLegendreRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  for (int i = 0; i < (order + 1) / 2; ++i) {
    // Tricomi initial guess, then Newton on P_n.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double pn = order == 0 ? 1.0 : p1;
      const double pn1 = order == 1 ? 1.0 : p0;
      dp = order * (x * pn - pn1) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node.
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= order; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = order * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[order - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[order - 1 - i] = w;
  }
  if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
  return rule;
}

constexpr int kCachedOrders = 32;

}  // namespace

const GaussLegendreRule& gauss_legendre(int order) {
  if (order < 2) throw ConfigError("gauss_legendre: order must be >= 2");
  static const std::array<GaussLegendreRule, kCachedOrders + 1> cache = [] {
    std::array<GaussLegendreRule, kCachedOrders + 1> rules;
    for (int n = 2; n <= kCachedOrders; ++n) rules[n] = compute_rule(n);
    return rules;
  }();
  if (order <= kCachedOrders) return cache[order];
  thread_local GaussLegendreRule scratch;
  scratch = compute_rule(order);
  return scratch;
}

std::vector<double> cumulative_trapezoid(std::span<const double> x, std::span<const double> f) {
  if (x.size() != f.size()) throw ConfigError("cumulative_trapezoid: size mismatch");
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t i = 1; i < x.size(); ++i) {
    out[i] = out[i - 1] + 0.5 * (x[i] - x[i - 1]) * (f[i] + f[i - 1]);
  }
  return out;
}

}  // namespace kglab
