#include "kglab/special_fn.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "kglab/errors.hpp"

namespace kglab {

namespace {

void check_argument(double x, const char* fn) {
  if (!std::isfinite(x) || x < 0.0) {
    throw DomainError(std::string(fn) + ": argument must be finite and >= 0, got " +
                      std::to_string(x));
  }
}

// sum_k (x^2/4)^k / (k! (k+order)!), i.e. I_order(x) / (x/2)^order.
double reduced_i_series(int order, double x, const BesselEvalConfig& cfg) {
  const double y = 0.25 * x * x;
  double term = 1.0;
  for (int k = 1; k <= order; ++k) term /= k;
  double sum = term;
  for (int k = 1; k < cfg.max_terms; ++k) {
    term *= y / (static_cast<double>(k) * (k + order));
    sum += term;
    if (term <= cfg.series_tol * sum) break;
  }
  return sum;
}

// Same with alternating signs: J_order(x) / (x/2)^order.
// Only used for x < 2 where the largest term is O(1).
double reduced_j_series(int order, double x) {
  const double y = -0.25 * x * x;
  double term = 1.0;
  for (int k = 1; k <= order; ++k) term /= k;
  double sum = term;
  for (int k = 1; k < 60; ++k) {
    term *= y / (static_cast<double>(k) * (k + order));
    sum += term;
    if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

constexpr double kSeriesLimitJ = 2.0;
constexpr double kHankelLimitJ = 25.0;

// Miller's backward recurrence normalised by J0 + 2 sum J_2k = 1.
void bessel_j01_miller(double x, double& j0, double& j1) {
  int start = static_cast<int>(x + 20.0 + 10.0 * std::sqrt(x));
  start += start % 2;  // even start keeps the normalisation sum aligned
  double next = 0.0;
  double cur = 1e-30;
  double norm = 0.0;
  double val1 = 0.0;
  for (int k = start; k >= 1; --k) {
    const double prev = (2.0 * k / x) * cur - next;
    next = cur;
    cur = prev;  // cur now holds the (k-1)-th value
    if ((k - 1) % 2 == 0 && k - 1 > 0) norm += 2.0 * cur;
    if (k - 1 == 1) val1 = cur;
    if (std::abs(cur) > 1e250) {
      cur *= 1e-250;
      next *= 1e-250;
      norm *= 1e-250;
      val1 *= 1e-250;
    }
  }
  norm += cur;
  j0 = cur / norm;
  j1 = val1 / norm;
}

// Hankel expansion, J_order(x) = sqrt(2/(pi x)) (P cos chi - Q sin chi).
double bessel_j_hankel(int order, double x) {
  const double nu4 = 4.0 * order * order;
  double p = 1.0;
  double q = 0.0;
  double term = 1.0;
  double last = std::numeric_limits<double>::infinity();
  for (int k = 1; k < 200; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= (nu4 - odd * odd) / (8.0 * k * x);
    if (std::abs(term) > last) break;  // asymptotic series started to diverge
    last = std::abs(term);
    // a_k / x^k with sign pattern: P collects even k, Q odd k.
    switch (k % 4) {
      case 1: q += term; break;
      case 2: p -= term; break;
      case 3: q -= term; break;
      case 0: p += term; break;
    }
    if (last < 1e-18) break;
  }
  const double chi = x - (0.5 * order + 0.25) * std::numbers::pi;
  return std::sqrt(2.0 / (std::numbers::pi * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

}  // namespace

void BesselEvalConfig::validate() const {
  if (!(series_crossover > 0.0)) throw ConfigError("BesselEvalConfig: series_crossover must be > 0");
  if (!(series_tol > 0.0)) throw ConfigError("BesselEvalConfig: series_tol must be > 0");
  if (max_terms <= 0) throw ConfigError("BesselEvalConfig: max_terms must be positive");
}

namespace detail {

double bessel_i_series(int order, double x, const BesselEvalConfig& cfg) {
  const double scale = order == 0 ? 1.0 : 0.5 * x;
  return scale * reduced_i_series(order, x, cfg);
}

double bessel_i_asymptotic(int order, double x, const BesselEvalConfig& cfg) {
  const double nu4 = 4.0 * order * order;
  double sum = 1.0;
  double term = 1.0;
  double last = std::numeric_limits<double>::infinity();
  for (int k = 1; k < cfg.max_terms; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= -(nu4 - odd * odd) / (8.0 * k * x);
    if (std::abs(term) > last) break;
    last = std::abs(term);
    sum += term;
    if (last <= cfg.series_tol * std::abs(sum)) break;
  }
  return std::exp(x) / std::sqrt(2.0 * std::numbers::pi * x) * sum;
}

}  // namespace detail

double bessel_i0(double x, const BesselEvalConfig& cfg) {
  check_argument(x, "bessel_i0");
  cfg.validate();
  if (x <= cfg.series_crossover) return detail::bessel_i_series(0, x, cfg);
  return detail::bessel_i_asymptotic(0, x, cfg);
}

double bessel_i1(double x, const BesselEvalConfig& cfg) {
  check_argument(x, "bessel_i1");
  cfg.validate();
  if (x <= cfg.series_crossover) return detail::bessel_i_series(1, x, cfg);
  return detail::bessel_i_asymptotic(1, x, cfg);
}

double i1_over_z(double x, const BesselEvalConfig& cfg) {
  check_argument(x, "i1_over_z");
  cfg.validate();
  if (x <= cfg.series_crossover) return 0.5 * reduced_i_series(1, x, cfg);
  return detail::bessel_i_asymptotic(1, x, cfg) / x;
}

double bessel_j0(double x) {
  check_argument(x, "bessel_j0");
  if (x < kSeriesLimitJ) return reduced_j_series(0, x);
  if (x >= kHankelLimitJ) return bessel_j_hankel(0, x);
  double j0 = 0.0;
  double j1 = 0.0;
  bessel_j01_miller(x, j0, j1);
  return j0;
}

double bessel_j1(double x) {
  check_argument(x, "bessel_j1");
  if (x < kSeriesLimitJ) return 0.5 * x * reduced_j_series(1, x);
  if (x >= kHankelLimitJ) return bessel_j_hankel(1, x);
  double j0 = 0.0;
  double j1 = 0.0;
  bessel_j01_miller(x, j0, j1);
  return j1;
}

double j1_over_z(double x) {
  check_argument(x, "j1_over_z");
  if (x < kSeriesLimitJ) return 0.5 * reduced_j_series(1, x);
  return bessel_j1(x) / x;
}

}  // namespace kglab
