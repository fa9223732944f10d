#include "kglab/kernel_ops.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kglab/errors.hpp"
#include "kglab/quadrature.hpp"
#include "kglab/special_fn.hpp"

namespace kglab {

namespace {

// Riemann kernel K(s) with s = t^2 - (x-y)^2 >= 0, and its time derivative
// divided by t: dK/dt = t * rate(s).
struct Kernel {
  DampingRegime regime;
  double mu;

  double value(double s) const {
    switch (regime) {
      case DampingRegime::Balanced:
        return 1.0;
      case DampingRegime::DominantDamping: {
        const double k = bessel_i0(mu * std::sqrt(s));
        if (!(k >= 1.0)) throw NumericalError("kernel positivity violated: I0 < 1");
        return k;
      }
      case DampingRegime::DominantMass:
        return bessel_j0(mu * std::sqrt(s));
    }
    return 0.0;
  }

  double rate(double s) const {
    switch (regime) {
      case DampingRegime::Balanced:
        return 0.0;
      case DampingRegime::DominantDamping:
        return mu * mu * i1_over_z(mu * std::sqrt(s));
      case DampingRegime::DominantMass:
        return -mu * mu * j1_over_z(mu * std::sqrt(s));
    }
    return 0.0;
  }
};

Kernel make_kernel(const LinearParams& params) {
  return Kernel{classify_regime(params), mu(params)};
}

// t^2 - (x-y)^2 in factored form, clamped at 0 against rounding at the cone.
inline double cone_gap(double t, double x, double y) {
  const double d = x - y;
  return std::max(0.0, (t - d) * (t + d));
}

// int_{[x-t, x+t] ∩ [lo, hi]} weight(s) * h(y) dy
template <class Weight, class Fn>
double kernel_integral(double t, double x, double lo, double hi, const Fn& h,
                       const Weight& weight, const QuadratureConfig& quad) {
  const double a = std::max(x - t, lo);
  const double b = std::min(x + t, hi);
  if (!(b > a)) return 0.0;
  const auto& rule = gauss_legendre(quad.gl_order);
  auto integrand = [&](double y) { return weight(cone_gap(t, x, y)) * h(y); };
  const int panels = panels_for(b - a, quad.panels);
  const double value = integrate_gl(integrand, a, b, panels, rule);
  if (quad.refine_tol > 0.0) {
    const double fine = integrate_gl(integrand, a, b, 2 * panels, rule);
    if (std::abs(fine - value) > quad.refine_tol * std::max(1.0, std::abs(fine))) {
      std::ostringstream msg;
      msg << "kernel quadrature did not converge on [" << a << ", " << b << "] at t=" << t
          << ", x=" << x << ": " << value << " vs " << fine << " (" << panels << " vs "
          << 2 * panels << " panels)";
      throw NumericalError(msg.str());
    }
  }
  return value;
}

double apply_S_impl(double t, const Kernel& kernel, double b, const Profile& h, double x,
                    const QuadratureConfig& quad) {
  if (t <= 0.0 || h.is_zero()) return 0.0;
  const double integral = kernel_integral(
      t, x, h.lo(), h.hi(), h, [&](double s) { return kernel.value(s); }, quad);
  return 0.5 * std::exp(-0.5 * b * t) * integral;
}

}  // namespace

void LinearParams::validate() const {
  if (!(b > 0.0) || !std::isfinite(b)) throw ConfigError("LinearParams: b must be > 0");
  if (!(m2 >= 0.0) || !std::isfinite(m2)) throw ConfigError("LinearParams: m2 must be >= 0");
}

std::string to_string(DampingRegime regime) {
  switch (regime) {
    case DampingRegime::DominantDamping: return "dominant-damping";
    case DampingRegime::Balanced: return "balanced";
    case DampingRegime::DominantMass: return "dominant-mass";
  }
  return "unknown";
}

Profile::Profile(std::function<double(double)> fn, double lo, double hi, Smoothness smoothness)
    : fn_(std::move(fn)), lo_(lo), hi_(hi), smoothness_(smoothness), is_zero_(false) {
  if (!(hi >= lo)) throw ConfigError("Profile: support must satisfy lo <= hi");
  if (!fn_) throw ConfigError("Profile: empty function");
}

Profile Profile::zero() { return Profile(); }

Profile Profile::polynomial_bump(double amplitude, double radius, int power, double center) {
  if (!(radius > 0.0)) throw ConfigError("polynomial_bump: radius must be > 0");
  if (power < 2) throw ConfigError("polynomial_bump: power must be >= 2");
  if (amplitude == 0.0) return zero();
  auto fn = [=](double x) {
    const double r = (x - center) / radius;
    const double base = 1.0 - r * r;
    return base > 0.0 ? amplitude * std::pow(base, power) : 0.0;
  };
  return Profile(fn, center - radius, center + radius,
                 power >= 3 ? Smoothness::C2 : Smoothness::C1);
}

Profile Profile::constant(double value, double lo, double hi) {
  if (value == 0.0) return zero();
  return Profile([value](double) { return value; }, lo, hi, Smoothness::C2);
}

Profile Profile::combine(double a, const Profile& other, double c) const {
  if (other.is_zero_ || c == 0.0) {
    if (is_zero_ || a == 0.0) return zero();
    Profile self = *this;
    self.fn_ = [fn = fn_, a](double x) { return a * fn(x); };
    return self;
  }
  if (is_zero_ || a == 0.0) return other.combine(c, zero(), 0.0);
  const Profile lhs = *this;
  const Profile rhs = other;
  return Profile([lhs, rhs, a, c](double x) { return a * lhs(x) + c * rhs(x); },
                 std::min(lo_, other.lo_), std::max(hi_, other.hi_),
                 std::min(smoothness_, other.smoothness_));
}

SourceFn::SourceFn(std::function<double(double, double)> fn, double lo, double hi, double growth)
    : fn_(std::move(fn)), lo_(lo), hi_(hi), growth_(growth), is_zero_(false) {
  if (!(hi >= lo)) throw ConfigError("SourceFn: support must satisfy lo <= hi");
  if (!(growth >= 0.0)) throw ConfigError("SourceFn: growth must be >= 0");
  if (!fn_) throw ConfigError("SourceFn: empty function");
}

SourceFn SourceFn::zero() { return SourceFn(); }

void QuadratureConfig::validate() const {
  if (panels <= 0 || gl_order < 2 || duhamel_steps <= 0) {
    throw ConfigError("QuadratureConfig: panels, gl_order (>= 2) and duhamel_steps must be positive");
  }
  if (!(refine_tol >= 0.0)) throw ConfigError("QuadratureConfig: refine_tol must be >= 0");
}

double mu(const LinearParams& params) {
  params.validate();
  if (params.b * params.b == 4.0 * params.m2) return 0.0;
  return std::sqrt(std::abs(0.25 * params.b * params.b - params.m2));
}

DampingRegime classify_regime(const LinearParams& params) {
  params.validate();
  const double lhs = params.b * params.b;
  const double rhs = 4.0 * params.m2;
  if (lhs > rhs) return DampingRegime::DominantDamping;
  if (lhs == rhs) return DampingRegime::Balanced;
  return DampingRegime::DominantMass;
}

double apply_S(double t, const LinearParams& params, const Profile& h, double x,
               const QuadratureConfig& quad) {
  if (!(t >= 0.0)) throw DomainError("apply_S: t must be >= 0");
  quad.validate();
  return apply_S_impl(t, make_kernel(params), params.b, h, x, quad);
}

double apply_dS_dt(double t, const LinearParams& params, const Profile& h, double x,
                   const QuadratureConfig& quad) {
  if (!(t >= 0.0)) throw DomainError("apply_dS_dt: t must be >= 0");
  quad.validate();
  if (h.is_zero()) return 0.0;
  if (t == 0.0) return h(x);
  const Kernel kernel = make_kernel(params);
  const double decay = std::exp(-0.5 * params.b * t);
  const double boundary = 0.5 * decay * (h(x + t) + h(x - t));
  const double damping = -0.25 * params.b * decay *
                         kernel_integral(t, x, h.lo(), h.hi(), h,
                                         [&](double s) { return kernel.value(s); }, quad);
  double spread = 0.0;
  if (kernel.regime != DampingRegime::Balanced) {
    spread = 0.5 * t * decay *
             kernel_integral(t, x, h.lo(), h.hi(), h,
                             [&](double s) { return kernel.rate(s); }, quad);
  }
  return boundary + damping + spread;
}

namespace {

double duhamel(const Kernel& kernel, double b, const SourceFn& source, double t, double x,
               const QuadratureConfig& quad) {
  if (source.is_zero() || t <= 0.0) return 0.0;
  // Times at which the window [x-(t-tau), x+(t-tau)] meets a moving edge of
  // the source support; the tau-integrand is only piecewise smooth across them.
  const double g = source.growth();
  const double lo0 = source.lo_at(0.0);
  const double hi0 = source.hi_at(0.0);
  std::vector<double> cuts = {0.0, t};
  auto add_cut = [&](double tau) {
    if (std::isfinite(tau) && tau > 0.0 && tau < t) cuts.push_back(tau);
  };
  add_cut((lo0 - x + t) / (1.0 + g));
  add_cut((x + t - hi0) / (1.0 + g));
  if (g != 1.0) {
    add_cut((hi0 - x + t) / (1.0 - g));
    add_cut((x + t - lo0) / (1.0 - g));
  }
  std::sort(cuts.begin(), cuts.end());

  const auto& rule = gauss_legendre(quad.gl_order);
  auto integrand = [&](double tau) {
    const double rem = t - tau;
    if (rem <= 0.0) return 0.0;
    auto slice = [&](double y) { return source(tau, y); };
    const double inner = kernel_integral(
        rem, x, source.lo_at(tau), source.hi_at(tau), slice,
        [&](double s) { return kernel.value(s); }, quad);
    return 0.5 * std::exp(-0.5 * b * rem) * inner;
  };
  double total = 0.0;
  for (std::size_t i = 1; i < cuts.size(); ++i) {
    const double len = cuts[i] - cuts[i - 1];
    if (len <= 0.0) continue;
    total += integrate_gl(integrand, cuts[i - 1], cuts[i], panels_for(len, quad.duhamel_steps), rule);
  }
  return total;
}

}  // namespace

double solve_linear_ivp(const Profile& f, const Profile& g, const SourceFn& source,
                        const LinearParams& params, double t, double x,
                        const QuadratureConfig& quad) {
  if (!(t >= 0.0)) throw DomainError("solve_linear_ivp: t must be >= 0");
  quad.validate();
  if (t == 0.0) return f(x);
  const Kernel kernel = make_kernel(params);
  const Profile velocity_part = g.combine(1.0, f, params.b);
  const double from_velocity = apply_S_impl(t, kernel, params.b, velocity_part, x, quad);
  const double from_position = apply_dS_dt(t, params, f, x, quad);
  return from_velocity + from_position + duhamel(kernel, params.b, source, t, x, quad);
}

double pde_residual(const LinearParams& params, const Profile& f, const Profile& g,
                    const SourceFn& source, const ResidualGrid& grid,
                    const QuadratureConfig& quad) {
  params.validate();
  quad.validate();
  if (!(grid.ht > 0.0) || !(grid.hx > 0.0)) throw ConfigError("pde_residual: ht, hx must be > 0");
  if (grid.times.empty() || grid.points.empty()) throw ConfigError("pde_residual: empty grid");
  for (double t : grid.times) {
    if (t - grid.ht < 0.0) throw ConfigError("pde_residual: stencil reaches t < 0");
  }
  // The stencil has to resolve the data: at least four cells per support.
  for (const Profile* p : {&f, &g}) {
    if (!p->is_zero() && grid.hx > 0.25 * (p->hi() - p->lo())) {
      throw ConfigError("pde_residual: hx too coarse relative to the data support");
    }
  }
  auto phi = [&](double t, double x) { return solve_linear_ivp(f, g, source, params, t, x, quad); };
  const double ht = grid.ht;
  const double hx = grid.hx;
  double worst = 0.0;
  for (double t : grid.times) {
    for (double x : grid.points) {
      const double c = phi(t, x);
      const double tp = phi(t + ht, x);
      const double tm = phi(t - ht, x);
      const double xp = phi(t, x + hx);
      const double xm = phi(t, x - hx);
      const double op = (tp - 2.0 * c + tm) / (ht * ht) - (xp - 2.0 * c + xm) / (hx * hx) +
                        params.b * (tp - tm) / (2.0 * ht) + params.m2 * c - source(t, x);
      worst = std::max(worst, std::abs(op));
    }
  }
  return worst;
}

}  // namespace kglab
