#pragma once

// Exact solution operator of the one-dimensional damped Klein-Gordon
// equation
//
//   phi_tt - phi_xx + b phi_t + m2 phi = F(t, x),  phi(0) = f,  phi_t(0) = g,
//
// evaluated by composite Gauss-Legendre quadrature of its Riemann-function
// representation. The kernel is I0 (b^2 > 4 m2), 1 (b^2 = 4 m2) or
// J0 (b^2 < 4 m2) of mu * sqrt(t^2 - (x-y)^2), mu = sqrt(|b^2/4 - m2|).

#include <functional>
#include <string>
#include <vector>

namespace kglab {

struct LinearParams {
  double b = 1.0;
  double m2 = 0.0;

  void validate() const;
};

enum class DampingRegime { DominantDamping, Balanced, DominantMass };

std::string to_string(DampingRegime regime);

enum class Smoothness { C1, C2 };

/// Real function of one variable with a declared compact support [lo, hi].
/// Evaluates to exactly 0 outside the support.
class Profile {
 public:
  Profile() = default;
  Profile(std::function<double(double)> fn, double lo, double hi, Smoothness smoothness);

  static Profile zero();
  /// amplitude * (1 - ((x - center)/radius)^2)_+^power
  static Profile polynomial_bump(double amplitude, double radius, int power = 3,
                                 double center = 0.0);
  /// Constant value on [lo, hi]; used for interior (domain of dependence) tests.
  static Profile constant(double value, double lo, double hi);

  double operator()(double x) const {
    if (is_zero_ || x < lo_ || x > hi_) return 0.0;
    return fn_(x);
  }

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  Smoothness smoothness() const { return smoothness_; }
  bool is_zero() const { return is_zero_; }

  /// a*this + c*other with the union support.
  Profile combine(double a, const Profile& other, double c) const;

 private:
  std::function<double(double)> fn_;
  double lo_ = 0.0;
  double hi_ = 0.0;
  Smoothness smoothness_ = Smoothness::C2;
  bool is_zero_ = true;
};

/// Source term F(t, x) supported in [lo - growth*t, hi + growth*t].
class SourceFn {
 public:
  SourceFn() = default;
  SourceFn(std::function<double(double, double)> fn, double lo, double hi, double growth = 1.0);

  static SourceFn zero();

  double operator()(double t, double x) const {
    if (is_zero_) return 0.0;
    if (x < lo_ - growth_ * t || x > hi_ + growth_ * t) return 0.0;
    return fn_(t, x);
  }

  double lo_at(double t) const { return lo_ - growth_ * t; }
  double hi_at(double t) const { return hi_ + growth_ * t; }
  double growth() const { return growth_; }
  bool is_zero() const { return is_zero_; }

 private:
  std::function<double(double, double)> fn_;
  double lo_ = 0.0;
  double hi_ = 0.0;
  double growth_ = 1.0;
  bool is_zero_ = true;
};

struct QuadratureConfig {
  /// Gauss-Legendre panels per unit length in y.
  int panels = 8;
  int gl_order = 8;
  /// Duhamel subdivisions per unit time (64 gives dtau <= 1/64).
  int duhamel_steps = 64;
  /// When > 0, every kernel integral is recomputed with twice the panels and
  /// a disagreement above refine_tol * max(1, |value|) throws NumericalError.
  double refine_tol = 0.0;

  void validate() const;
};

double mu(const LinearParams& params);
DampingRegime classify_regime(const LinearParams& params);

/// S(t; b, m2) h evaluated at x.
double apply_S(double t, const LinearParams& params, const Profile& h, double x,
               const QuadratureConfig& quad = {});

/// d/dt S(t; b, m2) h evaluated at x (boundary term, damping term and the
/// kernel-derivative term written with I1(z)/z).
double apply_dS_dt(double t, const LinearParams& params, const Profile& h, double x,
                   const QuadratureConfig& quad = {});

/// phi(t, x) = S(t)(g + b f) + d/dt S(t) f + int_0^t S(t - tau) F(tau, .) dtau.
double solve_linear_ivp(const Profile& f, const Profile& g, const SourceFn& source,
                        const LinearParams& params, double t, double x,
                        const QuadratureConfig& quad = {});

/// Probe points (t, x) at which the discrete operator is applied with
/// centred stencils of widths ht, hx.
struct ResidualGrid {
  std::vector<double> times;
  std::vector<double> points;
  double ht = 0.05;
  double hx = 0.05;
};

/// max |(d_tt - d_xx + b d_t + m2) phi - F| over the grid, using centred
/// second-order differences of the exact-operator solution.
double pde_residual(const LinearParams& params, const Profile& f, const Profile& g,
                    const SourceFn& source, const ResidualGrid& grid,
                    const QuadratureConfig& quad = {});

}  // namespace kglab
