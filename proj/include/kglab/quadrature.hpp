#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace kglab {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Rule of the given order. Orders up to 32 are computed once and shared.
const GaussLegendreRule& gauss_legendre(int order);

/// Composite Gauss-Legendre over [a, b] with `panels` equal panels.
template <class Fn>
double integrate_gl(Fn&& fn, double a, double b, int panels, const GaussLegendreRule& rule) {
  if (!(b > a)) return 0.0;
  const double width = (b - a) / panels;
  const double half = 0.5 * width;
  double total = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double mid = a + (k + 0.5) * width;
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      acc += rule.weights[i] * fn(mid + half * rule.nodes[i]);
    }
    total += acc * half;
  }
  return total;
}

/// Panel count for a density of `per_unit` panels per unit length.
inline int panels_for(double length, int per_unit) {
  const double n = std::ceil(length * per_unit);
  return n < 1.0 ? 1 : static_cast<int>(n);
}

/// Running trapezoid integral of samples `f` on abscissae `x`
/// (result[0] = 0, result[i] = integral from x[0] to x[i]).
std::vector<double> cumulative_trapezoid(std::span<const double> x, std::span<const double> f);

}  // namespace kglab
