// Command-line front end: linear-solve, simulate, sweep, sequences, verify.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "kglab/errors.hpp"
#include "kglab/experiments.hpp"
#include "kglab/verify.hpp"

namespace fs = std::filesystem;
using namespace kglab;

namespace {

// "-" (or the bare word "csv") means standard output.
void with_output(const std::string& target, const std::function<void(std::ostream&)>& write) {
  if (target == "-" || target == "csv") {
    write(std::cout);
    return;
  }
  std::ofstream out(target, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + target + " for writing");
  write(out);
  if (!out) throw std::runtime_error("write failed for " + target);
}

nlohmann::ordered_json num(double x) {
  if (std::isfinite(x)) return x;
  return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
}

struct LinearSolveArgs {
  double b = 1.0, m2 = 0.0, t = 1.0, R = 1.0, grid = 0.05;
  std::string profile = "bump";
  std::string data = "velocity";
  int power = 3;
  std::string out = "-";
};

int cmd_linear_solve(const LinearSolveArgs& a) {
  if (a.profile != "bump") throw ConfigError("linear-solve: only --profile bump is available");
  if (!(a.grid > 0.0)) throw ConfigError("linear-solve: --grid must be > 0");
  if (!(a.t >= 0.0)) throw ConfigError("linear-solve: --t must be >= 0");
  const LinearParams params{a.b, a.m2};
  params.validate();
  const auto bump = Profile::polynomial_bump(1.0, a.R, a.power);
  Profile f = Profile::zero(), g = Profile::zero();
  if (a.data == "velocity") g = bump;
  else if (a.data == "displacement") f = bump;
  else throw ConfigError("linear-solve: --data must be velocity or displacement");

  const double half = a.R + a.t + 1.0;
  const auto cells = static_cast<long>(std::ceil(2.0 * half / a.grid));
  with_output(a.out, [&](std::ostream& os) {
    os << "t,x,phi\n";
    char line[96];
    for (long i = 0; i <= cells; ++i) {
      const double x = -half + static_cast<double>(i) * a.grid;
      const double phi = solve_linear_ivp(f, g, SourceFn::zero(), params, a.t, x);
      std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", a.t, x, phi);
      os << line;
    }
  });
  return 0;
}

struct SimulateArgs {
  ModelParams model;
  InitialDataSpec data;
  Numerics numerics;
  std::string out = "simulate_out";
  bool unweighted_frame = false;
};

int cmd_simulate(SimulateArgs a) {
  a.data.R = a.model.R;
  a.model.validate();
  const auto result = simulate(a.model, a.data, a.numerics);
  fs::create_directories(a.out);
  const fs::path dir(a.out);
  write_trace_csv(result.trace, (dir / "trace.csv").string());
  write_trajectory_csv(result.trajectory, (dir / "trajectory.csv").string());

  const auto& rep = result.report;
  nlohmann::ordered_json j;
  j["tool"] = "kglab";
  j["version"] = version_string();
  j["params"] = {{"n", a.model.n}, {"p", a.model.p}, {"q", a.model.q}, {"b", a.model.b},
                 {"m2", a.model.m2}, {"R", a.model.R}, {"eps", a.model.eps}};
  j["numerics"] = {{"hx", a.numerics.hx}, {"cfl", a.numerics.cfl}, {"ht", result.trajectory.ht},
                   {"t_max", a.numerics.t_max}, {"threshold_factor", a.numerics.threshold_factor}};
  nlohmann::ordered_json blow;
  blow["blew_up"] = rep.blew_up;
  blow["T_num"] = rep.T_num ? num(*rep.T_num) : nlohmann::ordered_json(nullptr);
  blow["T_confirm"] = rep.T_confirm ? num(*rep.T_confirm) : nlohmann::ordered_json(nullptr);
  blow["threshold"] = num(rep.threshold);
  blow["threshold_insensitive"] = rep.threshold_insensitive;
  blow["trigger"] = to_string(rep.trigger);
  j["blowup"] = blow;

  const double t_end = rep.T_num ? 0.9 * *rep.T_num : a.numerics.t_max;
  bool ok = true;
  if (a.data.amp_v1 > 0.0 && a.model.eps > 0.0) {
    const auto lb = first_lower_bound_check(result.trace, a.model, a.data, t_end);
    j["first_lower_bound"] = {{"holds", lb.holds}, {"M", lb.M}, {"bound", lb.bound},
                              {"samples", lb.samples}, {"worst_ratio", num(lb.worst_ratio)},
                              {"worst_t", lb.worst_t}};
    ok = ok && lb.holds;
    if (a.model.b * a.model.b >= 4.0 * a.model.m2) {
      const auto frame = a.unweighted_frame
                             ? FrameConstants::one_dimensional_unweighted(a.model.p, a.model.q, a.model.R)
                             : FrameConstants::one_dimensional(a.model.p, a.model.q, a.model.b, a.model.R);
      const auto seqs = subcritical_sequences(a.model, lb.M, frame);
      const auto fc = verify_iteration_frame(result.trace, a.model, frame, t_end - a.model.R, &seqs, 5);
      nlohmann::ordered_json fj;
      fj["C"] = frame.C;
      fj["K"] = frame.K;
      fj["holds"] = fc.holds;
      fj["samples"] = fc.samples;
      fj["worst_ratio_U"] = num(fc.worst_ratio_U);
      fj["worst_ratio_V"] = num(fc.worst_ratio_V);
      fj["failure"] = fc.failure;
      auto& envs = fj["envelopes"] = nlohmann::ordered_json::array();
      for (const auto& e : fc.envelopes) {
        envs.push_back({{"j", e.j}, {"holds", e.holds}, {"worst_log_margin", num(e.worst_log_margin)},
                        {"worst_z", e.worst_z}});
      }
      j["iteration_frame"] = fj;
      const auto bound = lifespan_bound(a.model.eps, seqs);
      j["lifespan_bound"] = {{"bound", num(bound.bound)}, {"log_bound", num(bound.log_bound)},
                             {"eps0", num(bound.eps0)}, {"hypotheses_met", bound.hypotheses_met}};
      ok = ok && fc.holds && fc.envelopes_hold();
    }
  }
  std::ofstream(dir / "report.json") << j.dump(2) << "\n";
  std::cout << "T_num: " << (rep.T_num ? std::to_string(*rep.T_num) : std::string("none"))
            << ", trigger: " << to_string(rep.trigger) << ", report: " << (dir / "report.json").string()
            << "\n";
  return ok ? 0 : 1;
}

int cmd_sweep(const std::string& config_path, const std::string& out) {
  auto config = load_sweep_config(config_path);
  if (!out.empty()) config.output_dir = out;
  const auto records = run_sweep(config);
  const auto idx = theta(config.base.n, config.base.p, config.base.q);

  ReportInputs inputs;
  inputs.records = records;
  inputs.theta = idx.theta;
  try {
    if (idx.kind == Criticality::Critical) {
      inputs.fits.push_back(fit_critical_law(records, config.base.p * config.base.q));
    } else {
      inputs.fits.push_back(fit_power_law(records));
    }
  } catch (const FitError& e) {
    std::cerr << "warning: " << e.what() << "\n";
  }

  auto add = [&](std::string name, bool passed, std::string detail) {
    CheckResult c;
    c.name = std::move(name);
    c.passed = passed;
    c.detail = std::move(detail);
    inputs.checks.push_back(std::move(c));
  };
  bool all_blew = true, insensitive = true, monotone = true, no_violation = true, clean = true;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    all_blew = all_blew && r.blew_up;
    insensitive = insensitive && r.threshold_insensitive;
    no_violation = no_violation && !r.bound_violation;
    clean = clean && r.error.empty();
    if (i > 0 && r.T_num && records[i - 1].T_num) monotone = monotone && *r.T_num >= *records[i - 1].T_num;
  }
  add("runs completed without error", clean, "");
  add("every run blew up", all_blew, "");
  add("threshold-insensitive T_num", insensitive, "2% criterion");
  add("T_num nonincreasing in eps", monotone, "");
  add("T_num <= lifespan_bound for eps <= eps0", no_violation, "");
  if (!inputs.fits.empty() && inputs.fits.front().kind == FitKind::PowerLaw && idx.theta > 0.0) {
    const double s = inputs.fits.front().coefficient;
    std::ostringstream msg;
    msg << "slope " << s << ", theoretical " << -1.0 / idx.theta;
    add("fitted slope within 1/theta + 0.5", s <= 0.0 && std::abs(s) <= 1.0 / idx.theta + 0.5, msg.str());
  }
  emit_report(inputs, config);

  bool ok = true;
  for (const auto& c : inputs.checks) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << (c.detail.empty() ? "" : ": ") << c.detail
              << "\n";
    ok = ok && c.passed;
  }
  std::cout << "wrote " << config.output_dir << "/{sweep.csv,report.json,plot.gp}\n";
  return no_violation ? (ok ? 0 : 1) : 2;
}

struct SequencesArgs {
  std::string mode = "subcritical";
  int jmax = 50;
  ModelParams model;
  double M = 16.0 / 35.0;
  double C = 0.0, K = 0.0;
  bool unweighted_frame = false;
  std::string out = "-";
};

int cmd_sequences(SequencesArgs a) {
  FrameConstants frame;
  if (a.C > 0.0 || a.K > 0.0) {
    frame = {a.C, a.K};
  } else if (a.model.n == 1) {
    frame = a.unweighted_frame
                ? FrameConstants::one_dimensional_unweighted(a.model.p, a.model.q, a.model.R)
                : FrameConstants::one_dimensional(a.model.p, a.model.q, a.model.b, a.model.R);
  } else {
    throw ConfigError("sequences: --C and --K are required for n >= 2");
  }
  with_output(a.out, [&](std::ostream& os) {
    if (a.mode == "subcritical") {
      write_sequences_csv(subcritical_sequences(a.model, a.M, frame, a.jmax), os);
    } else if (a.mode == "critical") {
      write_sequences_csv(critical_sequences(a.model, a.M, frame, a.jmax), os);
    } else {
      throw ConfigError("sequences: --mode must be subcritical or critical");
    }
  });
  return 0;
}

int cmd_verify(const std::string& which, std::uint64_t seed) {
  const auto report = run_verify_suite(which, seed);
  for (const auto& c : report.checks) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << (c.detail.empty() ? "" : ": ") << c.detail
              << "\n";
  }
  std::cout << (report.passed() ? "suite passed" : "suite FAILED") << "\n";
  return report.passed() ? 0 : 1;
}

void add_model_options(CLI::App* app, ModelParams& m) {
  app->add_option("--n", m.n, "space dimension")->capture_default_str();
  app->add_option("--p", m.p, "exponent of |v_t| in the u equation")->capture_default_str();
  app->add_option("--q", m.q, "exponent of |u_t| in the v equation")->capture_default_str();
  app->add_option("--b", m.b, "damping coefficient")->capture_default_str();
  app->add_option("--m2", m.m2, "mass squared")->capture_default_str();
  app->add_option("--R", m.R, "support radius of the data")->capture_default_str();
  app->add_option("--eps", m.eps, "data size")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kglab: damped Klein-Gordon / wave system numerical lab"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);

  LinearSolveArgs ls;
  auto* linear = app.add_subcommand("linear-solve", "evaluate the exact linear solution on a grid");
  linear->add_option("--b", ls.b)->capture_default_str();
  linear->add_option("--m2", ls.m2)->capture_default_str();
  linear->add_option("--t", ls.t, "time")->capture_default_str();
  linear->add_option("--profile", ls.profile, "data profile (bump)")->capture_default_str();
  linear->add_option("--R", ls.R, "bump radius")->capture_default_str();
  linear->add_option("--grid", ls.grid, "spatial spacing H")->capture_default_str();
  linear->add_option("--data", ls.data, "velocity | displacement")->capture_default_str();
  linear->add_option("--power", ls.power, "bump exponent")->capture_default_str();
  linear->add_option("--out", ls.out, "CSV path; '-' or 'csv' for stdout")->capture_default_str();

  SimulateArgs sim;
  sim.model.eps = 0.3;
  auto* simulate_cmd = app.add_subcommand("simulate", "one finite-difference run with diagnostics");
  add_model_options(simulate_cmd, sim.model);
  simulate_cmd->add_option("--tmax", sim.numerics.t_max)->capture_default_str();
  simulate_cmd->add_option("--hx", sim.numerics.hx)->capture_default_str();
  simulate_cmd->add_option("--cfl", sim.numerics.cfl)->capture_default_str();
  simulate_cmd->add_option("--threshold-factor", sim.numerics.threshold_factor)->capture_default_str();
  simulate_cmd->add_option("--amp-v1", sim.data.amp_v1)->capture_default_str();
  simulate_cmd->add_option("--amp-u1", sim.data.amp_u1)->capture_default_str();
  simulate_cmd->add_option("--power", sim.data.power)->capture_default_str();
  simulate_cmd->add_option("--snapshot-every", sim.numerics.snapshot_every)->capture_default_str();
  simulate_cmd->add_option("--snapshot-stride", sim.numerics.snapshot_stride)->capture_default_str();
  simulate_cmd->add_flag("--unweighted-frame", sim.unweighted_frame, "frame constants without e^{-bR}");
  simulate_cmd->add_flag("!--nonlinear-off", sim.numerics.nonlinear, "drop both source terms");
  simulate_cmd->add_option("--out", sim.out, "output directory")->capture_default_str();

  std::string sweep_config, sweep_out;
  auto* sweep = app.add_subcommand("sweep", "eps sweep, fits and report");
  sweep->add_option("--config", sweep_config, "key = value config file")->required();
  sweep->add_option("--out", sweep_out, "output directory (overrides output_dir)");

  SequencesArgs seq;
  auto* sequences = app.add_subcommand("sequences", "iteration sequences as CSV");
  sequences->add_option("--mode", seq.mode, "subcritical | critical")->capture_default_str();
  sequences->add_option("--jmax", seq.jmax)->capture_default_str();
  add_model_options(sequences, seq.model);
  sequences->add_option("--M", seq.M, "half mass of v1")->capture_default_str();
  sequences->add_option("--C", seq.C, "frame constant C (required for n >= 2)");
  sequences->add_option("--K", seq.K, "frame constant K (required for n >= 2)");
  sequences->add_flag("--unweighted-frame", seq.unweighted_frame);
  sequences->add_option("--out", seq.out, "CSV path; '-' for stdout")->capture_default_str();

  std::string which;
  std::uint64_t seed = 20240601;
  auto* verify = app.add_subcommand("verify", "run a property suite (exit 0 on success)");
  verify->add_option("--which", which, "bessel | kernel | frame | closed-forms")
      ->required()
      ->check(CLI::IsMember({"bessel", "kernel", "frame", "closed-forms"}));
  verify->add_option("--seed", seed)->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*linear) return cmd_linear_solve(ls);
    if (*simulate_cmd) return cmd_simulate(sim);
    if (*sweep) return cmd_sweep(sweep_config, sweep_out);
    if (*sequences) return cmd_sequences(seq);
    if (*verify) return cmd_verify(which, seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
