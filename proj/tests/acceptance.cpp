// Acceptance run: one PASS/FAIL line per criterion, exit status 1 when any fails.
//
//   acceptance [--out DIR]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "kglab/experiments.hpp"
#include "kglab/fd_sim.hpp"
#include "kglab/iteration.hpp"
#include "kglab/kernel_ops.hpp"
#include "kglab/special_fn.hpp"

using namespace kglab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  double budget_s;
  std::function<Outcome()> run;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

ModelParams standard_params(double eps) {
  ModelParams m;
  m.n = 1;
  m.p = m.q = 2.0;
  m.b = 1.0;
  m.m2 = 0.0;
  m.R = 1.0;
  m.eps = eps;
  return m;
}

// Residual of x^2 y'' + x y' + s x^2 y with five-point derivatives,
// relative to the size of the terms.
double ode_residual(const std::function<double(double)>& y, double x, double s) {
  const double h = std::min(1e-2, x / 4.0);
  const double ym2 = y(x - 2 * h), ym1 = y(x - h), y0 = y(x), yp1 = y(x + h), yp2 = y(x + 2 * h);
  const double d1 = (ym2 - 8 * ym1 + 8 * yp1 - yp2) / (12 * h);
  const double d2 = (-ym2 + 16 * ym1 - 30 * y0 + 16 * yp1 - yp2) / (12 * h * h);
  const double terms[3] = {x * x * d2, x * d1, s * x * x * y0};
  const double scale = std::abs(terms[0]) + std::abs(terms[1]) + std::abs(terms[2]);
  return std::abs(terms[0] + terms[1] + terms[2]) / scale;
}

Outcome special_functions() {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst_i = 0.0, worst_j = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double x = 30.0 * (1.0 - unit(rng));  // (0, 30]
    worst_i = std::max(worst_i, ode_residual([](double t) { return bessel_i0(t); }, x, -1.0));
    worst_j = std::max(worst_j, ode_residual([](double t) { return bessel_j0(t); }, x, 1.0));
  }
  bool bounds = true;
  for (int k = 0; k < 1000; ++k) {
    const double x = 30.0 * k / 999.0;
    bounds = bounds && bessel_i0(x) >= 1.0 && bessel_i1(x) >= 0.5 * x;
  }
  const bool exact = bessel_i0(0.0) == 1.0 && i1_over_z(0.0) == 0.5;
  return {worst_i <= 1e-8 && worst_j <= 1e-8 && bounds && exact,
          "ODE residual I0 " + fmt(worst_i) + ", J0 " + fmt(worst_j) + "; exact values " +
              (exact ? "ok" : "wrong") + "; grid bounds " + (bounds ? "ok" : "violated")};
}

Outcome residual_orders() {
  const auto f = Profile::polynomial_bump(1.0, 1.0, 6);
  const auto g = Profile::polynomial_bump(0.5, 1.0, 6, 0.2);
  bool ok = true;
  std::ostringstream detail;
  for (const LinearParams params : {LinearParams{1.0, 0.0}, LinearParams{2.0, 1.0}, LinearParams{1.0, 1.0}}) {
    double r[3];
    double h = 0.1;
    for (double& value : r) {
      ResidualGrid grid;
      grid.times = {0.6, 1.1};
      grid.points = {-0.7, 0.1, 0.9};
      grid.ht = grid.hx = h;
      value = pde_residual(params, f, g, SourceFn::zero(), grid);
      h *= 0.5;
    }
    const double o1 = std::log2(r[0] / r[1]), o2 = std::log2(r[1] / r[2]);
    ok = ok && o1 >= 1.5 && o1 <= 2.5 && o2 >= 1.5 && o2 <= 2.5;
    detail << to_string(classify_regime(params)) << " (" << params.b << "," << params.m2
           << ") orders " << fmt(o1) << ", " << fmt(o2) << "; ";
  }
  return {ok, detail.str()};
}

Outcome cross_validation() {
  InitialDataSpec spec;
  spec.amp_u1 = 1.0;
  spec.amp_v1 = 0.0;
  const auto params = standard_params(1.0);
  const auto g = Profile::polynomial_bump(1.0, 1.0, 3);
  const double t_end = 2.0;
  std::vector<double> errors;
  for (double hx : {0.04, 0.02, 0.01}) {
    Numerics n;
    n.hx = hx;
    n.t_max = t_end;
    n.nonlinear = false;
    const auto run = simulate(params, spec, n);
    const auto& s = run.trajectory.final_state;
    double err = 0.0;
    for (int k = 0; k < 50; ++k) {
      const double x = 0.08 * (k - 25);  // a node of every grid
      const auto i = static_cast<std::size_t>(std::lround((x - s.x.front()) / hx));
      const double exact = solve_linear_ivp(Profile::zero(), g, SourceFn::zero(), params.linear(), s.t, x);
      err = std::max(err, std::abs(s.u[i] - exact));
    }
    errors.push_back(err);
  }
  return {errors[1] <= 1e-3 && errors[2] < errors[1] && errors[1] < errors[0],
          "max error at 50 probes, hx 0.04/0.02/0.01: " + fmt(errors[0]) + ", " + fmt(errors[1]) +
              ", " + fmt(errors[2])};
}

Outcome stationary() {
  const double c = 0.75;
  const LinearParams params{2.0, 1.0};
  const auto f = Profile::constant(c, -20.0, 20.0);
  const SourceFn F([c, &params](double, double) { return params.m2 * c; }, -20.0, 20.0, 0.0);
  double err = 0.0;
  for (double t : {0.5, 1.0, 2.5}) {
    for (double x : {-4.0, -1.0, 0.0, 2.2, 5.0}) {
      err = std::max(err, std::abs(solve_linear_ivp(f, Profile::zero(), F, params, t, x) - c));
    }
  }
  return {err <= 1e-8, "max |phi - c| = " + fmt(err)};
}

std::string check_list(const ClosedFormReport& r) {
  std::string out;
  for (const auto& c : r.checks) {
    if (!c.passed) out += " [" + c.name + ": " + c.detail + "]";
  }
  return out;
}

Outcome closed_forms() {
  constexpr double M = 16.0 / 35.0;
  const auto exact = verify_closed_forms_exact(1, 4, 1, 40);
  bool exact_zero = exact.passed();
  for (const auto& c : exact.checks) exact_zero = exact_zero && c.max_error == 0.0;

  const auto sub = standard_params(0.1);
  const auto sseq = subcritical_sequences(sub, M, FrameConstants::one_dimensional_unweighted(2.0, 2.0, 1.0),
                                          200);
  const auto floats = verify_closed_forms(sseq, 200);
  const auto sums = verify_closed_forms(sseq, 40);

  // ln C_j >= (pq)^j ln(E eps), compared in the (pq)^{-j}-scaled form.
  bool c_bound = true;
  for (int j = sseq.j0; j <= sseq.j0 + 50; ++j) {
    c_bound = c_bound && sseq.logC_scaled.at(j) >= sseq.log_E + std::log(sub.eps);
  }
  ModelParams crit;
  crit.n = 2;
  crit.p = 1.5;
  crit.q = 2.0;
  crit.b = 1.0;
  crit.R = 1.0;
  crit.eps = 0.1;
  const auto cseq = critical_sequences(crit, M, FrameConstants{0.5, 0.5}, 260);
  bool k_bound = true;
  for (int j = cseq.j1; j <= cseq.j1 + 50; ++j) {
    k_bound = k_bound && cseq.logK_scaled.at(j) >= cseq.log_Etilde + std::log(crit.eps);
  }
  const bool ok = exact_zero && floats.passed() && sums.passed() && c_bound && k_bound;
  std::ostringstream detail;
  detail << "exact j<=40 " << (exact_zero ? "zero error" : "MISMATCH") << "; floats j<=200 "
         << (floats.passed() ? "ok" : "fail") << "; sums j<=40 " << (sums.passed() ? "ok" : "fail")
         << "; C_j bound j0=" << sseq.j0 << ".." << sseq.j0 + 50 << (c_bound ? " ok" : " fail")
         << "; K_j bound j1=" << cseq.j1 << ".." << cseq.j1 + 50 << (k_bound ? " ok" : " fail")
         << check_list(exact) << check_list(floats);
  return {ok, detail.str()};
}

// Shared standard run for criteria 6 and 7.
struct StandardRun {
  SimulationResult result;
  bool ready = false;
};

StandardRun& standard_run() {
  static StandardRun run;
  if (!run.ready) {
    Numerics n;
    n.hx = 0.02;
    n.t_max = 400.0;
    run.result = simulate(standard_params(0.3), InitialDataSpec{}, n);
    run.ready = true;
  }
  return run;
}

Outcome first_lower_bound() {
  const auto& r = standard_run().result;
  if (!r.report.T_num) return {false, "standard run did not blow up"};
  const double T = *r.report.T_num;
  // M from the data: half of int (1 - x^2)^3 dx = 16/35.
  double mass = 0.0;
  const int cells = 20000;
  for (int i = 0; i < cells; ++i) {
    const double x = -1.0 + (i + 0.5) * 2.0 / cells;
    mass += std::pow(1.0 - x * x, 3) * 2.0 / cells;
  }
  const double M = 0.5 * mass;
  double worst = std::numeric_limits<double>::infinity();
  std::size_t samples = 0;
  for (std::size_t i = 0; i < r.trace.t.size(); ++i) {
    const double t = r.trace.t[i];
    if (t < 2.0 || t > 0.9 * T) continue;
    worst = std::min(worst, r.trace.V[i] / (M * 0.3));
    ++samples;
  }
  return {samples > 0 && worst >= 0.95,
          "T_num = " + fmt(T) + ", M = " + fmt(M) + ", min V/(M eps) = " + fmt(worst) + " over " +
              std::to_string(samples) + " samples"};
}

Outcome iteration_frame() {
  const auto& r = standard_run().result;
  if (!r.report.T_num) return {false, "standard run did not blow up"};
  const auto params = standard_params(0.3);
  const auto frame = FrameConstants::one_dimensional_unweighted(2.0, 2.0, 1.0);
  const auto seqs = subcritical_sequences(params, half_mass_v1(InitialDataSpec{}), frame);
  const auto fc = verify_iteration_frame(r.trace, params, frame, 0.9 * *r.report.T_num - params.R, &seqs, 5);
  std::ostringstream detail;
  detail << "C = " << frame.C << ", K = " << frame.K << "; min lhs/rhs U " << fmt(fc.worst_ratio_U)
         << ", V " << fmt(fc.worst_ratio_V) << " over " << fc.samples << " samples; envelopes";
  for (const auto& e : fc.envelopes) detail << " j" << e.j << (e.holds ? ":ok" : ":FAIL");
  if (!fc.holds) detail << "; " << fc.failure;
  return {fc.holds && fc.envelopes.size() == 6 && fc.envelopes_hold(), detail.str()};
}

SweepConfig ladder_config(const fs::path& dir) {
  SweepConfig cfg;
  cfg.base = standard_params(1.0);
  cfg.data = InitialDataSpec{};
  cfg.numerics.hx = 0.02;
  cfg.numerics.cfl = 0.5;
  cfg.numerics.t_max = 1800.0;
  cfg.eps_start = 1.0;
  cfg.eps_ratio = 1.0 / std::sqrt(2.0);
  cfg.eps_count = 6;
  cfg.output_dir = dir.string();
  return cfg;
}

std::string run_and_emit(const SweepConfig& cfg, std::vector<SweepRecord>& records, FitResult& fit) {
  records = run_sweep(cfg);
  ReportInputs in;
  in.records = records;
  in.theta = theta(1, 2.0, 2.0).theta;
  try {
    fit = fit_power_law(records);
    in.fits.push_back(fit);
  } catch (const std::exception& e) {
    fit.points = 0;
  }
  emit_report(in, cfg);
  std::ifstream csv(fs::path(cfg.output_dir) / "sweep.csv", std::ios::binary);
  std::ostringstream bytes;
  bytes << csv.rdbuf();
  return bytes.str();
}

fs::path g_out = "acceptance_out";
std::string g_first_csv;

Outcome lifespan_consistency() {
  std::vector<SweepRecord> recs;
  FitResult fit;
  g_first_csv = run_and_emit(ladder_config(g_out / "sweep"), recs, fit);
  bool all_blew = true, insensitive = true, monotone = true, bounded = true;
  std::ostringstream detail;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& r = recs[i];
    all_blew = all_blew && r.error.empty() && r.blew_up && r.T_num;
    insensitive = insensitive && r.threshold_insensitive;
    if (i > 0 && r.T_num && recs[i - 1].T_num) monotone = monotone && *r.T_num >= *recs[i - 1].T_num;
    if (r.T_num && r.eps <= r.eps0) bounded = bounded && *r.T_num <= r.lifespan_bound;
    detail << "eps " << fmt(r.eps) << ": T " << (r.T_num ? fmt(*r.T_num) : "-") << " <= "
           << fmt(r.lifespan_bound) << "; ";
  }
  const bool eps0_covers = !recs.empty() && recs.back().eps <= recs.back().eps0;
  if (!eps0_covers) detail << "warning: computed eps0 below the ladder; ";
  const bool slope_ok = fit.points >= 4 && fit.coefficient <= 0.0 && std::abs(fit.coefficient) <= 3.5;
  detail << "fitted slope " << fmt(fit.coefficient) << " (theory -3), eps0 "
         << (recs.empty() ? "-" : fmt(recs.front().eps0));
  if (!all_blew) detail << "; not every run blew up";
  if (!insensitive) detail << "; threshold-sensitive run";
  if (!monotone) detail << "; T_num not monotone";
  if (!bounded) detail << "; bound violated";
  return {recs.size() == 6 && all_blew && insensitive && monotone && bounded && slope_ok, detail.str()};
}

Outcome determinism() {
  if (g_first_csv.empty()) return {false, "criterion 8 produced no sweep.csv"};
  std::vector<SweepRecord> recs;
  FitResult fit;
  const std::string second = run_and_emit(ladder_config(g_out / "sweep_repeat"), recs, fit);
  return {second == g_first_csv,
          std::to_string(g_first_csv.size()) + " bytes, " +
              (second == g_first_csv ? "identical" : "DIFFERENT")};
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--out" && i + 1 < argc) {
      g_out = argv[++i];
    } else {
      std::cerr << "usage: acceptance [--out DIR]\n";
      return 2;
    }
  }
  fs::create_directories(g_out);

  const std::vector<Criterion> criteria = {
      {1, "special functions", 1.0, special_functions},
      {2, "pde_residual convergence order", 60.0, residual_orders},
      {3, "simulator vs exact operator", 60.0, cross_validation},
      {4, "stationary solution", 5.0, stationary},
      {5, "closed forms and identities", 1.0, closed_forms},
      {6, "first lower bound", 120.0, first_lower_bound},
      {7, "iteration frame and envelopes", 120.0, iteration_frame},
      {8, "blow-up and lifespan consistency", 900.0, lifespan_consistency},
      {9, "determinism", 900.0, determinism},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.budget_s;
    if (!in_time) out.detail += "; over the " + fmt(c.budget_s) + " s budget";
    const bool passed = out.passed && in_time;
    failures += passed ? 0 : 1;
    std::printf("%s criterion %d (%s) %.2f s: %s\n", passed ? "PASS" : "FAIL", c.id, c.title.c_str(),
                secs, out.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
