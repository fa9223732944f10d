#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "kglab/errors.hpp"
#include "kglab/experiments.hpp"

using namespace kglab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace fs = std::filesystem;

namespace {

SweepConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_sweep_config(in);
}

SweepRecord blown(double eps, double T) {
  SweepRecord r;
  r.eps = eps;
  r.blew_up = true;
  r.T_num = T;
  r.T_confirm = T * 1.001;
  r.threshold_insensitive = true;
  r.trigger = "max_dudt";
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  return dir;
}

// Trace with V = c on the whole line and U = factor * (exact U right-hand side).
CharacteristicTrace synthetic_trace(double c, double factor, double C, double b, double p, double R,
                                    double t_end) {
  CharacteristicTrace tr;
  for (double t = 0.0; t <= t_end + 1e-12; t += 0.01) {
    const double z = t - R;
    const double rhs = z > R ? C * std::pow(c, p) * (2.0 / b) * (1.0 - std::exp(-0.5 * b * (z - R))) : 0.0;
    tr.t.push_back(t);
    tr.U.push_back(factor * rhs);
    tr.V.push_back(c);
  }
  return tr;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto cfg = parse(R"(# comment
n = 1
p = 2.5   # trailing comment
q = 2
b = 1
eps_start = 0.5
eps_ratio = 0.5
eps_count = 5
hx = 0.03
t_max = 300
amp_v1 = 2
power = 4
output_dir = out dir
seed = 99
workers = 3
frame = unweighted
)");
  CHECK(cfg.base.p == 2.5);
  CHECK(cfg.numerics.hx == 0.03);
  CHECK(cfg.numerics.t_max == 300.0);
  CHECK(cfg.data.amp_v1 == 2.0);
  CHECK(cfg.data.power == 4);
  CHECK(cfg.output_dir == "out dir");
  CHECK(cfg.seed == 99u);
  CHECK(cfg.workers == 3);
  CHECK(cfg.frame == FrameChoice::OneDimensionalUnweighted);
  const auto ladder = cfg.eps_ladder();
  REQUIRE(ladder.size() == 5);
  CHECK(ladder.front() == 0.5);
  CHECK_THAT(ladder.back(), WithinRel(0.5 / 16.0, 1e-15));

  CHECK_THROWS_AS(parse("bogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse("p = 2\np = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse("p = two\n"), ConfigError);
  CHECK_THROWS_AS(parse("p 2\n"), ConfigError);
  CHECK_THROWS_AS(parse("eps_count = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse("eps_ratio = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse("frame = cubic\n"), ConfigError);
  CHECK_THROWS_AS(parse("m2 = 1\n"), ConfigError);  // b^2 < 4 m2
  CHECK_THROWS_AS(parse("n = 2\n"), ConfigError);
  CHECK_THROWS_AS(load_sweep_config("/nonexistent/kglab.cfg"), ConfigError);
}

TEST_CASE("power-law fit recovers an exact exponent") {
  std::vector<SweepRecord> recs;
  for (double eps = 1.0; eps > 0.05; eps *= 0.6) recs.push_back(blown(eps, std::pow(eps, -3.0)));
  const auto fit = fit_power_law(recs);
  CHECK(fit.kind == FitKind::PowerLaw);
  CHECK_THAT(fit.coefficient, WithinAbs(-3.0, 1e-12));
  CHECK_THAT(fit.intercept, WithinAbs(0.0, 1e-12));
  CHECK(fit.residual_rms < 1e-12);
  CHECK(fit.points == recs.size());
  CHECK(fit.eps_max == 1.0);
}

TEST_CASE("power-law fit tolerates small noise") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> noise(-1.0, 1.0);
  std::vector<SweepRecord> recs;
  for (double eps = 1.0; eps > 0.01; eps *= 0.7) {
    recs.push_back(blown(eps, 2.0 * std::pow(eps, -3.0) * (1.0 + 0.01 * noise(rng))));
  }
  const auto fit = fit_power_law(recs);
  CHECK(fit.coefficient >= -3.1);
  CHECK(fit.coefficient <= -2.9);
  CHECK_THAT(fit.intercept, WithinAbs(std::log(2.0), 0.05));
  CHECK(fit.residual_rms < 0.01);
}

TEST_CASE("critical-law fit") {
  std::vector<SweepRecord> recs;
  for (double eps : {1.0, 0.8, 0.6, 0.5, 0.4}) recs.push_back(blown(eps, std::exp(1.0 / eps)));
  const auto fit = fit_critical_law(recs, 2.0);
  CHECK(fit.kind == FitKind::CriticalLaw);
  CHECK_THAT(fit.coefficient, WithinAbs(1.0, 1e-12));
  CHECK_THAT(fit.intercept, WithinAbs(0.0, 1e-12));
  CHECK_THROWS_AS(fit_critical_law(recs, 1.0), ConfigError);
}

TEST_CASE("fits need four blown-up records") {
  std::vector<SweepRecord> recs = {blown(1.0, 1.0), blown(0.5, 8.0), blown(0.25, 64.0)};
  SweepRecord quiet;
  quiet.eps = 0.1;
  recs.push_back(quiet);
  CHECK_THROWS_AS(fit_power_law(recs), FitError);
  recs.push_back(blown(0.125, 512.0));
  CHECK_NOTHROW(fit_power_law(recs));
}

TEST_CASE("frame check on synthetic traces") {
  ModelParams m;
  m.b = 1.0;
  m.R = 1.0;
  m.eps = 0.1;
  const FrameConstants frame{0.5, 0.01};
  const auto good = synthetic_trace(1.0, 2.0, frame.C, m.b, m.p, m.R, 25.0);
  const auto ok = verify_iteration_frame(good, m, frame, 20.0);
  CHECK(ok.holds);
  CHECK(ok.failure.empty());
  CHECK_THAT(ok.worst_ratio_U, WithinRel(2.0, 1e-3));
  CHECK(ok.worst_ratio_V >= 1.0);
  CHECK(ok.samples > 1000);

  const auto weak = synthetic_trace(1.0, 0.5, frame.C, m.b, m.p, m.R, 25.0);
  const auto bad = verify_iteration_frame(weak, m, frame, 20.0);
  CHECK_FALSE(bad.holds);
  CHECK_FALSE(bad.failure.empty());
  CHECK_THAT(bad.worst_ratio_U, WithinRel(0.5, 1e-3));

  // 0.96 of the right-hand side is inside the 5% allowance, 0.9 is not.
  CHECK(verify_iteration_frame(synthetic_trace(1.0, 0.96, frame.C, m.b, m.p, m.R, 25.0), m, frame, 20.0).holds);
  CHECK_FALSE(verify_iteration_frame(synthetic_trace(1.0, 0.9, frame.C, m.b, m.p, m.R, 25.0), m, frame, 20.0).holds);
  CHECK_THROWS_AS(verify_iteration_frame(good, m, frame, 20.0, nullptr, 5, 1.0), ConfigError);
  auto three = m;
  three.n = 3;
  CHECK_THROWS_AS(verify_iteration_frame(good, three, frame, 20.0), ConfigError);
}

TEST_CASE("zero data satisfies the frame with equality") {
  ModelParams m;
  m.eps = 0.0;
  Numerics n;
  n.hx = 0.05;
  n.t_max = 10.0;
  const auto r = simulate(m, InitialDataSpec{}, n);
  const auto check = verify_iteration_frame(r.trace, m, FrameConstants::one_dimensional(2, 2, 1, 1), 8.0);
  CHECK(check.holds);
  CHECK(check.samples > 0);
}

TEST_CASE("the j = 0 envelope is the first lower bound") {
  ModelParams m;
  m.eps = 0.5;
  Numerics n;
  n.hx = 0.04;
  n.t_max = 30.0;
  InitialDataSpec spec;
  const auto r = simulate(m, spec, n);
  const double M = half_mass_v1(spec);
  const auto frame = FrameConstants::one_dimensional_unweighted(m.p, m.q, m.R);
  const auto seqs = subcritical_sequences(m, M, frame, 10);
  const auto fc = verify_iteration_frame(r.trace, m, frame, 20.0, &seqs, 0);
  REQUIRE(fc.envelopes.size() == 1);
  const auto lb = first_lower_bound_check(r.trace, m, spec, 21.0);
  CHECK(fc.envelopes[0].holds == lb.holds);
  CHECK_THAT(fc.envelopes[0].worst_log_margin, WithinAbs(std::log(lb.worst_ratio), 1e-3));
}

TEST_CASE("report emission and round trip") {
  SweepConfig cfg;
  cfg.output_dir = fresh_dir("kglab_report").string();
  ReportInputs empty;
  CHECK_THROWS(emit_report(empty, cfg));
  CHECK_FALSE(fs::exists(cfg.output_dir));

  ReportInputs in;
  in.theta = 1.0 / 3.0;
  in.records = {blown(1.0, 11.84), blown(0.7, 24.2), blown(0.5, 55.24)};
  SweepRecord odd;
  odd.eps = 0.35;
  odd.lifespan_bound = std::numeric_limits<double>::infinity();
  odd.log_lifespan_bound = 900.5;
  odd.eps0 = std::numeric_limits<double>::infinity();
  odd.error = "solver said \"no\", twice";
  in.records.push_back(odd);
  in.records[0].lifespan_bound = 1.5e6;
  in.records[0].bound_violation = false;
  CheckResult c;
  c.name = "all runs completed";
  c.passed = false;
  c.detail = "one error";
  in.checks.push_back(c);
  emit_report(in, cfg);

  const fs::path dir(cfg.output_dir);
  for (const char* f : {"sweep.csv", "report.json", "plot.gp"}) CHECK(fs::exists(dir / f));
  for (const auto& e : fs::directory_iterator(dir)) CHECK(e.path().extension() != ".partial");

  const std::string csv = slurp(dir / "sweep.csv");
  CHECK(csv.find('\r') == std::string::npos);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  CHECK(csv.rfind("eps,T_num,blew_up,T_confirm,threshold_insensitive,trigger,lifespan_bound,"
                  "log_lifespan_bound,eps0,bound_violation,hx,ht,error\n", 0) == 0);

  const auto back = load_report_records((dir / "report.json").string());
  REQUIRE(back.size() == in.records.size());
  for (std::size_t i = 0; i < back.size(); ++i) CHECK(back[i] == in.records[i]);

  const auto report = nlohmann::ordered_json::parse(slurp(dir / "report.json"));
  std::vector<std::string> keys;
  for (const auto& item : report.items()) keys.push_back(item.key());
  CHECK(keys == std::vector<std::string>{"tool", "versions", "config", "theta", "theoretical_slope",
                                         "records", "fits", "checks", "bound_violations"});
  CHECK_THAT(report["theoretical_slope"].get<double>(), WithinAbs(-3.0, 1e-12));

  // Emitting again gives byte-identical files.
  const std::string first = slurp(dir / "report.json");
  emit_report(in, cfg);
  CHECK(slurp(dir / "report.json") == first);
  CHECK(slurp(dir / "sweep.csv") == csv);
}

TEST_CASE("record JSON round trip keeps empty optionals") {
  SweepRecord r;
  r.eps = 0.25;
  r.hx = 0.02;
  r.ht = 0.01;
  const auto back = record_from_json(to_json(r));
  CHECK(back == r);
  CHECK_FALSE(back.T_num.has_value());
}

TEST_CASE("small sweep is ordered, monotone and deterministic") {
  auto cfg = load_sweep_config(KGLAB_TEST_DATA_DIR "/quick_sweep.cfg");
  cfg.workers = 2;
  const auto a = run_sweep(cfg);
  REQUIRE(a.size() == 4);
  for (std::size_t i = 0; i < a.size(); ++i) {
    INFO("eps " << a[i].eps << " error " << a[i].error);
    REQUIRE(a[i].error.empty());
    REQUIRE(a[i].blew_up);
    CHECK(a[i].threshold_insensitive);
    CHECK_FALSE(a[i].bound_violation);
    if (i > 0) {
      CHECK(a[i].eps < a[i - 1].eps);
      CHECK(*a[i].T_num >= *a[i - 1].T_num);
    }
  }
  cfg.workers = 1;
  const auto b = run_sweep(cfg);
  CHECK(a == b);
  std::ostringstream ca, cb;
  write_sweep_csv(a, ca);
  write_sweep_csv(b, cb);
  CHECK(ca.str() == cb.str());
}

TEST_CASE("version string") {
  CHECK_FALSE(version_string().empty());
}
