#pragma once

// Bessel functions of order 0 and 1 for nonnegative real arguments.
//
// I0, I1 and I1(z)/z use the Maclaurin series up to `series_crossover` and
// the scaled large-argument expansion e^x/sqrt(2 pi x) * sum a_k / x^k above.
// J0, J1 use the series for small arguments, Miller's backward recurrence in
// the middle range and Hankel's expansion for large arguments.
//
// All functions are pure and reentrant.

namespace kglab {

struct BesselEvalConfig {
  /// Argument above which the asymptotic expansion replaces the power series.
  double series_crossover = 15.0;
  /// Relative truncation tolerance for series.
  double series_tol = 1e-17;
  int max_terms = 500;

  void validate() const;
};

double bessel_i0(double x, const BesselEvalConfig& cfg = {});
double bessel_i1(double x, const BesselEvalConfig& cfg = {});

/// I1(x)/x, equal to 1/2 at x = 0. Never divides near the origin.
double i1_over_z(double x, const BesselEvalConfig& cfg = {});

double bessel_j0(double x);
double bessel_j1(double x);

/// J1(x)/x, equal to 1/2 at x = 0.
double j1_over_z(double x);

namespace detail {
// Exposed for the seam-agreement tests.
double bessel_i_series(int order, double x, const BesselEvalConfig& cfg);
double bessel_i_asymptotic(int order, double x, const BesselEvalConfig& cfg);
}  // namespace detail

}  // namespace kglab
