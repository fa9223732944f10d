#include "kglab/verify.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "kglab/errors.hpp"
#include "kglab/experiments.hpp"
#include "kglab/special_fn.hpp"

namespace kglab {

namespace {

struct Derivs {
  double d1, d2;
};

// Fourth-order centred differences; the step shrinks near the origin so the
// stencil stays inside the domain x >= 0.
Derivs five_point(const std::function<double(double)>& f, double x) {
  const double h = std::min(1e-2, 0.4 * x);
  const double fm2 = f(x - 2 * h), fm1 = f(x - h), f0 = f(x), fp1 = f(x + h), fp2 = f(x + 2 * h);
  return {(fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * h),
          (-fm2 + 16 * fm1 - 30 * f0 + 16 * fp1 - fp2) / (12 * h * h)};
}

// |x^2 y'' + x y' + sign x^2 y| relative to the size of its terms.
double bessel_ode_residual(const std::function<double(double)>& f, double x, double sign) {
  const auto d = five_point(f, x);
  const double y = f(x);
  const double terms[] = {x * x * d.d2, x * d.d1, sign * x * x * y};
  const double scale = std::abs(terms[0]) + std::abs(terms[1]) + std::abs(terms[2]);
  return std::abs(terms[0] + terms[1] + terms[2]) / scale;
}

CheckResult tolerance_check(std::string name, double error, double tol, std::string detail = {}) {
  CheckResult c;
  c.name = std::move(name);
  c.max_error = error;
  c.passed = error <= tol;
  std::ostringstream msg;
  msg << "max error " << error << " (tolerance " << tol << ")";
  if (!detail.empty()) msg << "; " << detail;
  c.detail = msg.str();
  return c;
}

CheckResult flag_check(std::string name, bool passed, std::string detail) {
  CheckResult c;
  c.name = std::move(name);
  c.passed = passed;
  c.detail = std::move(detail);
  return c;
}

}  // namespace

SuiteReport verify_bessel_suite(std::uint64_t seed) {
  SuiteReport report;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double res_i0 = 0.0, res_j0 = 0.0;
  auto i0 = [](double x) { return bessel_i0(x); };
  auto j0 = [](double x) { return bessel_j0(x); };
  for (int k = 0; k < 100; ++k) {
    const double x = 30.0 * (1.0 - unit(rng));  // (0, 30]
    res_i0 = std::max(res_i0, bessel_ode_residual(i0, x, -1.0));
    res_j0 = std::max(res_j0, bessel_ode_residual(j0, x, +1.0));
  }
  report.checks.push_back(tolerance_check("I0 ODE residual (finite differences)", res_i0, 1e-8));
  report.checks.push_back(tolerance_check("J0 ODE residual (finite differences)", res_j0, 1e-8));

  // Same ODEs with derivatives from I0' = I1, I0'' = I0 - I1/x and
  // J0' = -J1, J0'' = -J0 + J1/x.
  rng.seed(seed);
  double rel_i0 = 0.0, abs_j0 = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double x = 30.0 * (1.0 - unit(rng));
    const double i0v = bessel_i0(x), i1v = bessel_i1(x);
    const double ri = x * x * (i0v - i1v / x) + x * i1v - x * x * i0v;
    rel_i0 = std::max(rel_i0, std::abs(ri) / (x * x * i0v));
    const double j0v = bessel_j0(x), j1v = bessel_j1(x);
    abs_j0 = std::max(abs_j0, std::abs(x * x * (-j0v + j1v / x) - x * j1v + x * x * j0v));
  }
  report.checks.push_back(tolerance_check("I0 ODE residual (identities, relative)", rel_i0, 1e-8));
  report.checks.push_back(tolerance_check("J0 ODE residual (identities, absolute)", abs_j0, 1e-8));

  report.checks.push_back(flag_check("I0(0) = 1", bessel_i0(0.0) == 1.0, "exact"));
  report.checks.push_back(flag_check("i1_over_z(0) = 1/2", i1_over_z(0.0) == 0.5, "exact"));

  bool lower_ok = true;
  std::string where;
  for (int k = 0; k < 1000; ++k) {
    const double x = 30.0 * k / 999.0;
    if (!(bessel_i0(x) >= 1.0) || !(bessel_i1(x) >= 0.5 * x)) {
      lower_ok = false;
      where = "violated at x = " + std::to_string(x);
      break;
    }
  }
  report.checks.push_back(
      flag_check("I0 >= 1 and I1 >= x/2", lower_ok, lower_ok ? "1000-point grid on [0, 30]" : where));

  const BesselEvalConfig cfg;
  double seam = 0.0;
  for (int order : {0, 1}) {
    const double s = detail::bessel_i_series(order, cfg.series_crossover, cfg);
    const double a = detail::bessel_i_asymptotic(order, cfg.series_crossover, cfg);
    seam = std::max(seam, std::abs(s - a) / std::abs(s));
  }
  report.checks.push_back(tolerance_check("series/asymptotic seam", seam, 1e-12));

  double vs_std = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double x = 0.2 * k;
    vs_std = std::max(vs_std, std::abs(bessel_i0(x) - std::cyl_bessel_i(0.0, x)) /
                                  std::cyl_bessel_i(0.0, x));
    vs_std = std::max(vs_std, std::abs(bessel_j0(x) - std::cyl_bessel_j(0.0, x)));
    vs_std = std::max(vs_std, std::abs(bessel_j1(x) - std::cyl_bessel_j(1.0, x)));
  }
  report.checks.push_back(tolerance_check("agreement with std special functions", vs_std, 1e-12));
  return report;
}

SuiteReport verify_kernel_suite() {
  SuiteReport report;
  QuadratureConfig quad;

  {
    const double c = 0.75;
    const LinearParams params{2.0, 1.0};
    const auto f = Profile::constant(c, -20.0, 20.0);
    const SourceFn F([c](double, double) { return c; }, -20.0, 20.0, 0.0);
    double err = 0.0;
    for (double t : {0.5, 1.0, 2.0}) {
      for (double x : {-3.0, 0.0, 1.7, 4.0}) {
        err = std::max(err, std::abs(solve_linear_ivp(f, Profile::zero(), F, params, t, x, quad) - c));
      }
    }
    report.checks.push_back(tolerance_check("stationary solution", err, 1e-8));
  }

  const auto bump = Profile::polynomial_bump(1.0, 1.0, 6);
  const auto velocity = Profile::polynomial_bump(0.5, 1.0, 6, 0.2);
  for (const LinearParams params : {LinearParams{1.0, 0.0}, LinearParams{2.0, 1.0}, LinearParams{1.0, 1.0}}) {
    double r[3];
    double h = 0.1;
    for (double& value : r) {
      ResidualGrid grid;
      grid.times = {0.6, 1.1};
      grid.points = {-0.7, 0.1, 0.9};
      grid.ht = grid.hx = h;
      value = pde_residual(params, bump, velocity, SourceFn::zero(), grid, quad);
      h *= 0.5;
    }
    const double o1 = std::log2(r[0] / r[1]);
    const double o2 = std::log2(r[1] / r[2]);
    std::ostringstream msg;
    msg << "residuals " << r[0] << ", " << r[1] << ", " << r[2] << "; orders " << o1 << ", " << o2;
    report.checks.push_back(flag_check("pde_residual order, " + to_string(classify_regime(params)),
                                       o1 >= 1.5 && o1 <= 2.5 && o2 >= 1.5 && o2 <= 2.5, msg.str()));
  }

  {
    const LinearParams params{1.0, 0.0};
    double err = 0.0;
    for (double x : {-0.8, -0.1, 0.4, 0.95}) {
      err = std::max(err, std::abs(solve_linear_ivp(bump, velocity, SourceFn::zero(), params, 0.0, x,
                                                    quad) - bump(x)));
      err = std::max(err, std::abs(apply_dS_dt(0.0, params, velocity, x, quad) - velocity(x)));
    }
    report.checks.push_back(tolerance_check("initial conditions", err, 1e-12));
  }

  {
    double worst = 0.0;
    for (const LinearParams params : {LinearParams{1.0, 0.0}, LinearParams{1.0, 1.0}}) {
      for (double t : {0.5, 2.0}) {
        for (double x : {-(1.0 + t) - 0.01, 1.0 + t + 0.3}) {
          worst = std::max(worst, std::abs(solve_linear_ivp(bump, velocity, SourceFn::zero(), params,
                                                            t, x, quad)));
        }
      }
    }
    report.checks.push_back(tolerance_check("finite speed of propagation", worst, 0.0));
  }
  return report;
}

SuiteReport verify_frame_suite() {
  SuiteReport report;
  ModelParams params;
  params.p = params.q = 2.0;
  params.b = 1.0;
  params.m2 = 0.0;
  params.R = 1.0;
  params.eps = 0.3;
  InitialDataSpec spec;
  Numerics numerics;
  numerics.hx = 0.02;
  numerics.t_max = 400.0;
  const auto run = simulate(params, spec, numerics);
  if (!run.report.T_num) {
    report.checks.push_back(flag_check("standard run blows up", false, "no blow-up before t_max"));
    return report;
  }
  const double T = *run.report.T_num;
  report.checks.push_back(flag_check("standard run blows up", true, "T_num = " + std::to_string(T)));

  const auto lower = first_lower_bound_check(run.trace, params, spec, 0.9 * T);
  std::ostringstream lb;
  lb << "min V/(M eps) = " << lower.worst_ratio << " at t = " << lower.worst_t << " over "
     << lower.samples << " samples";
  report.checks.push_back(flag_check("first lower bound", lower.holds, lb.str()));

  const auto frame = FrameConstants::one_dimensional_unweighted(params.p, params.q, params.R);
  const auto seqs = subcritical_sequences(params, lower.M, frame);
  const auto fc = verify_iteration_frame(run.trace, params, frame, 0.9 * T - params.R, &seqs, 5);
  std::ostringstream fr;
  fr << "min lhs/rhs: U " << fc.worst_ratio_U << ", V " << fc.worst_ratio_V << " over "
     << fc.samples << " samples";
  if (!fc.holds) fr << "; " << fc.failure;
  report.checks.push_back(flag_check("iteration frame", fc.holds, fr.str()));
  for (const auto& e : fc.envelopes) {
    std::ostringstream env;
    env << "min ln(V/envelope) = " << e.worst_log_margin << " at z = " << e.worst_z;
    report.checks.push_back(flag_check("envelope j=" + std::to_string(e.j), e.holds, env.str()));
  }
  return report;
}

ModelParams critical_reference_params() {
  ModelParams params;
  params.n = 2;
  params.p = 1.5;
  params.q = 2.0;
  params.b = 1.0;
  params.m2 = 0.0;
  params.R = 1.0;
  params.eps = 0.1;
  return params;
}

SuiteReport verify_closed_forms_suite() {
  SuiteReport report;
  auto append = [&](const std::string& prefix, const ClosedFormReport& r) {
    for (auto c : r.checks) {
      c.name = prefix + c.name;
      report.checks.push_back(std::move(c));
    }
  };
  append("exact (p,q)=(2,2): ", verify_closed_forms_exact(1, 4, 1, 40));
  append("exact pq=3, n=2: ", verify_closed_forms_exact(2, 3, 1, 40));

  ModelParams sub;
  sub.p = sub.q = 2.0;
  sub.eps = 0.1;
  const auto sub_frame = FrameConstants::one_dimensional_unweighted(sub.p, sub.q, sub.R);
  const auto sseq = subcritical_sequences(sub, 16.0 / 35.0, sub_frame, 260);
  append("subcritical: ", verify_closed_forms(sseq, std::min(200, sseq.j_max())));
  {
    ClosedFormReport tail;
    tail.checks = verify_closed_forms(sseq, sseq.j0 + 50).checks;
    append("subcritical j0..j0+50: ", tail);
  }

  const auto crit = critical_reference_params();
  const auto cseq = critical_sequences(crit, 16.0 / 35.0, FrameConstants{0.5, 0.5}, 260);
  append("critical: ", verify_closed_forms(cseq, std::min(200, cseq.j_max())));
  append("critical j1..j1+50: ", verify_closed_forms(cseq, cseq.j1 + 50));
  return report;
}

SuiteReport run_verify_suite(const std::string& which, std::uint64_t seed) {
  if (which == "bessel") return verify_bessel_suite(seed);
  if (which == "kernel") return verify_kernel_suite();
  if (which == "frame") return verify_frame_suite();
  if (which == "closed-forms") return verify_closed_forms_suite();
  throw ConfigError("verify: unknown suite '" + which + "'");
}

}  // namespace kglab
