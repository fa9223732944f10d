#include "kglab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include <boost/version.hpp>

#include "kglab/errors.hpp"

#ifndef KGLAB_VERSION
#define KGLAB_VERSION "0.0.0"
#endif

namespace kglab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lifespan bounds beyond this many time units are treated as "not
// reachable by a desk-scale run"; below it, t_max must cover the bound.
constexpr double kRuntimeCapTime = 5000.0;

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text, int line) {
  T value{};
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("config line " + std::to_string(line) + ": bad value '" + text +
                      "' for key '" + key + "'");
  }
  return value;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// JSON has no inf/nan; encode them as strings so records round-trip.
nlohmann::ordered_json json_number(double x) {
  if (std::isfinite(x)) return x;
  return format_double(x);
}

double number_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw ConfigError("report.json: unexpected numeric string '" + s + "'");
  }
  return j.get<double>();
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  out += '"';
  return out;
}

const char* to_string(FitKind kind) {
  return kind == FitKind::PowerLaw ? "power_law" : "critical_law";
}

const char* to_string(FrameChoice c) {
  return c == FrameChoice::OneDimensional ? "one_dimensional" : "unweighted";
}

FrameConstants frame_for(const SweepConfig& config) {
  const auto& m = config.base;
  return config.frame == FrameChoice::OneDimensional
             ? FrameConstants::one_dimensional(m.p, m.q, m.b, m.R)
             : FrameConstants::one_dimensional_unweighted(m.p, m.q, m.R);
}

// Evaluates the lifespan bound for any eps of the ladder.
class BoundOracle {
 public:
  explicit BoundOracle(const SweepConfig& config) {
    ModelParams params = config.base;
    params.eps = config.eps_start;
    const double M = half_mass_v1(config.data);
    const auto frame = frame_for(config);
    const auto idx = theta(params.n, params.p, params.q);
    if (idx.kind == Criticality::Critical) {
      critical_ = critical_sequences(params, M, frame);
    } else {
      subcritical_ = subcritical_sequences(params, M, frame);
    }
  }

  LifespanBound operator()(double eps) const {
    return subcritical_ ? lifespan_bound(eps, *subcritical_) : lifespan_bound(eps, *critical_);
  }

 private:
  std::optional<SubcriticalSequences> subcritical_;
  std::optional<CriticalSequences> critical_;
};

SweepRecord run_one(const SweepConfig& config, double eps, const BoundOracle& oracle) {
  SweepRecord rec;
  rec.eps = eps;
  rec.hx = config.numerics.hx;
  rec.ht = config.numerics.cfl * config.numerics.hx;
  try {
    const auto bound = oracle(eps);
    rec.lifespan_bound = bound.bound;
    rec.log_lifespan_bound = bound.log_bound;
    rec.eps0 = bound.eps0;

    ModelParams params = config.base;
    params.eps = eps;
    Numerics numerics = config.numerics;
    numerics.snapshot_every = 0;
    const auto result = simulate(params, config.data, numerics);
    rec.ht = result.trajectory.ht;
    rec.blew_up = result.report.blew_up;
    rec.T_num = result.report.T_num;
    rec.T_confirm = result.report.T_confirm;
    rec.threshold_insensitive = result.report.threshold_insensitive;
    rec.trigger = to_string(result.report.trigger);
    rec.bound_violation = rec.T_num && eps <= rec.eps0 && *rec.T_num > rec.lifespan_bound;
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  return rec;
}

FitResult least_squares(FitKind kind, const std::vector<double>& x, const std::vector<double>& y,
                        const std::vector<double>& eps) {
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw FitError("fit: abscissae are all equal");
  FitResult fit;
  fit.kind = kind;
  fit.coefficient = sxy / sxx;
  fit.intercept = my - fit.coefficient * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.coefficient * x[i]);
    ss += r * r;
  }
  fit.residual_rms = std::sqrt(ss / n);
  fit.points = x.size();
  fit.eps_min = *std::min_element(eps.begin(), eps.end());
  fit.eps_max = *std::max_element(eps.begin(), eps.end());
  return fit;
}

std::vector<const SweepRecord*> usable(const std::vector<SweepRecord>& records) {
  std::vector<const SweepRecord*> out;
  for (const auto& r : records) {
    if (r.blew_up && r.T_num && *r.T_num > 0.0 && r.eps > 0.0) out.push_back(&r);
  }
  if (out.size() < 4) {
    throw FitError("fit: need at least 4 blown-up records, have " + std::to_string(out.size()));
  }
  return out;
}

// Trace resampled onto z = t - R, starting exactly at z = R.
struct FrameSamples {
  std::vector<double> z, U, V;
};

FrameSamples frame_samples(const CharacteristicTrace& trace, double R, double z_max) {
  FrameSamples s;
  const auto& t = trace.t;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double z = t[i] - R;
    if (z > z_max) break;
    if (z < R) continue;
    if (s.z.empty() && z > R && i > 0 && t[i - 1] - R < R) {
      const double w = (R - (t[i - 1] - R)) / (t[i] - t[i - 1]);
      s.z.push_back(R);
      s.U.push_back((1.0 - w) * trace.U[i - 1] + w * trace.U[i]);
      s.V.push_back((1.0 - w) * trace.V[i - 1] + w * trace.V[i]);
    }
    s.z.push_back(z);
    s.U.push_back(trace.U[i]);
    s.V.push_back(trace.V[i]);
  }
  return s;
}

template <typename Envelope>
FrameCheck verify_frame_impl(const CharacteristicTrace& trace, const ModelParams& params,
                             const FrameConstants& frame, double z_max, const Envelope* envelope,
                             int envelope_j_max, double allowance) {
  if (params.n != 1) throw ConfigError("verify_iteration_frame: pinned constants need n = 1");
  frame.validate();
  if (!(allowance >= 0.0 && allowance < 1.0)) {
    throw ConfigError("verify_iteration_frame: allowance must lie in [0, 1)");
  }
  if (trace.t.size() != trace.U.size() || trace.t.size() != trace.V.size()) {
    throw ConfigError("verify_iteration_frame: ragged trace");
  }
  const double R = params.R;
  const double b = params.b;
  const double wp = -0.5 * (params.n - 1) * (params.p - 1.0);
  const double wq = -0.5 * (params.n - 1) * (params.q - 1.0);

  const auto s = frame_samples(trace, R, z_max);
  FrameCheck out;
  out.z_max = z_max;
  out.samples = s.z.size();
  out.worst_ratio_U = kInf;
  out.worst_ratio_V = kInf;

  auto gU = [&](std::size_t i) {
    return std::pow(R + s.z[i], wp) * std::pow(std::abs(s.V[i]), params.p);
  };
  auto gV = [&](std::size_t i) {
    return std::pow(R + s.z[i], wq) * std::pow(std::abs(s.U[i]), params.q);
  };
  auto note_failure = [&](const char* which, double z, double lhs, double rhs) {
    if (!out.holds) return;
    out.holds = false;
    std::ostringstream msg;
    msg << which << " inequality fails at (z, lhs, rhs) = (" << z << ", " << lhs << ", " << rhs
        << ")";
    out.failure = msg.str();
  };

  double int_U = 0.0;  // int_R^z e^{-b(z-y)/2} gU(y) dy
  double int_V = 0.0;  // int_R^z gV(y) dy
  for (std::size_t i = 0; i < s.z.size(); ++i) {
    if (i > 0) {
      const double dz = s.z[i] - s.z[i - 1];
      const double decay = std::exp(-0.5 * b * dz);
      int_U = decay * int_U + 0.5 * dz * (decay * gU(i - 1) + gU(i));
      int_V += 0.5 * dz * (gV(i - 1) + gV(i));
    }
    const double rhs_U = frame.C * int_U;
    const double rhs_V = frame.K * int_V;
    if (rhs_U > 0.0 && s.U[i] / rhs_U < out.worst_ratio_U) {
      out.worst_ratio_U = s.U[i] / rhs_U;
      out.worst_z_U = s.z[i];
    }
    if (rhs_V > 0.0 && s.V[i] / rhs_V < out.worst_ratio_V) {
      out.worst_ratio_V = s.V[i] / rhs_V;
      out.worst_z_V = s.z[i];
    }
    if (!(s.U[i] >= (1.0 - allowance) * rhs_U)) note_failure("U", s.z[i], s.U[i], rhs_U);
    if (!(s.V[i] >= (1.0 - allowance) * rhs_V)) note_failure("V", s.z[i], s.V[i], rhs_V);
  }

  if (envelope != nullptr) {
    const double log_slack = std::log1p(-allowance);
    for (int j = 0; j <= envelope_j_max; ++j) {
      EnvelopeCheck ec;
      ec.j = j;
      ec.worst_log_margin = kInf;
      for (std::size_t i = 0; i < s.z.size(); ++i) {
        double log_env = 0.0;
        try {
          log_env = log_lower_bound_envelope(s.z[i], j, *envelope);
        } catch (const DomainError&) {
          continue;  // below this slice
        }
        ++ec.samples;
        if (log_env == -kInf) continue;
        const double log_v = s.V[i] > 0.0 ? std::log(s.V[i]) : -kInf;
        const double margin = log_v - log_env;
        if (margin < ec.worst_log_margin) {
          ec.worst_log_margin = margin;
          ec.worst_z = s.z[i];
        }
        if (!(margin >= log_slack)) ec.holds = false;
      }
      out.envelopes.push_back(ec);
    }
  }
  return out;
}

nlohmann::ordered_json check_json(const CheckResult& c) {
  nlohmann::ordered_json j;
  j["name"] = c.name;
  j["passed"] = c.passed;
  j["max_error"] = json_number(c.max_error);
  j["detail"] = c.detail;
  return j;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << content;
  out.close();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string plot_script(const ReportInputs& inputs) {
  std::ostringstream gp;
  gp << "# log T_num versus log eps; run with: gnuplot plot.gp\n";
  gp << "set terminal pngcairo size 900,650\n";
  gp << "set output 'lifespan.png'\n";
  gp << "set logscale xy\n";
  gp << "set xlabel 'eps'\n";
  gp << "set ylabel 'T_num'\n";
  gp << "set key top right\n";
  gp << "set grid\n";
  gp << "$sweep << EOD\n";
  double log_eps_sum = 0.0, log_t_sum = 0.0;
  int count = 0;
  for (const auto& r : inputs.records) {
    if (!r.T_num) continue;
    gp << format_double(r.eps) << ' ' << format_double(*r.T_num) << '\n';
    log_eps_sum += std::log(r.eps);
    log_t_sum += std::log(*r.T_num);
    ++count;
  }
  gp << "EOD\n";
  std::string plot = "plot $sweep using 1:2 with points pt 7 title 'simulation'";
  for (const auto& f : inputs.fits) {
    if (f.kind != FitKind::PowerLaw) continue;
    gp << "a = " << format_double(f.intercept) << "\n";
    gp << "s = " << format_double(f.coefficient) << "\n";
    gp << "fit_line(x) = exp(a) * x**s\n";
    plot += ", fit_line(x) with lines lw 2 title sprintf('fit, slope %.3f', s)";
  }
  if (inputs.theta > 0.0 && count > 0) {
    gp << "theoretical_slope = " << format_double(-1.0 / inputs.theta) << "\n";
    gp << "x0 = " << format_double(std::exp(log_eps_sum / count)) << "\n";
    gp << "y0 = " << format_double(std::exp(log_t_sum / count)) << "\n";
    gp << "reference(x) = y0 * (x / x0)**theoretical_slope\n";
    plot += ", reference(x) with lines dt 2 title sprintf('slope -1/theta = %.3f', "
            "theoretical_slope)";
  }
  gp << plot << "\n";
  return gp.str();
}

}  // namespace

std::string version_string() { return KGLAB_VERSION; }

void SweepConfig::validate() const {
  base.validate_for_blowup();
  data.validate(true);
  numerics.validate();
  if (!(eps_start > 0.0) || !std::isfinite(eps_start)) {
    throw ConfigError("SweepConfig: eps_start must be finite and > 0");
  }
  if (!(eps_ratio > 0.0 && eps_ratio < 1.0)) throw ConfigError("SweepConfig: ratio must be in (0,1)");
  if (eps_count < 4) throw ConfigError("SweepConfig: count must be >= 4");
  if (workers < 0) throw ConfigError("SweepConfig: workers must be >= 0");
  if (output_dir.empty()) throw ConfigError("SweepConfig: output_dir is empty");
  if (std::abs(data.R - base.R) > 1e-15) {
    throw ConfigError("SweepConfig: data support radius must equal R");
  }
  if (base.n != 1) throw ConfigError("SweepConfig: sweeps run the one-dimensional solver (n = 1)");
  const BoundOracle oracle(*this);
  const auto bound = oracle(eps_start);
  if (std::isfinite(bound.bound) && bound.bound < kRuntimeCapTime && numerics.t_max <= bound.bound) {
    throw ConfigError("SweepConfig: t_max must exceed lifespan_bound(eps_start) = " +
                      format_double(bound.bound));
  }
}

std::vector<double> SweepConfig::eps_ladder() const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(std::max(eps_count, 0)));
  for (int k = 0; k < eps_count; ++k) out.push_back(eps_start * std::pow(eps_ratio, k));
  return out;
}

SweepConfig parse_sweep_config(std::istream& in) {
  SweepConfig c;
  std::string raw;
  int line = 0;
  std::map<std::string, int> seen;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line) + ": expected key = value");
    }
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (seen.count(key)) {
      throw ConfigError("config line " + std::to_string(line) + ": duplicate key '" + key + "'");
    }
    seen[key] = line;
    auto num = [&] { return parse_number<double>(key, value, line); };
    auto integer = [&] { return parse_number<int>(key, value, line); };

    if (key == "n") c.base.n = integer();
    else if (key == "p") c.base.p = num();
    else if (key == "q") c.base.q = num();
    else if (key == "b") c.base.b = num();
    else if (key == "m2") c.base.m2 = num();
    else if (key == "R") { c.base.R = num(); c.data.R = c.base.R; }
    else if (key == "eps_start") c.eps_start = num();
    else if (key == "eps_ratio") c.eps_ratio = num();
    else if (key == "eps_count") c.eps_count = integer();
    else if (key == "hx") c.numerics.hx = num();
    else if (key == "cfl") c.numerics.cfl = num();
    else if (key == "t_max") c.numerics.t_max = num();
    else if (key == "threshold_factor") c.numerics.threshold_factor = num();
    else if (key == "confirm_factor") c.numerics.confirm_factor = num();
    else if (key == "sensitivity_tol") c.numerics.sensitivity_tol = num();
    else if (key == "amp_u0") c.data.amp_u0 = num();
    else if (key == "amp_u1") c.data.amp_u1 = num();
    else if (key == "amp_v0") c.data.amp_v0 = num();
    else if (key == "amp_v1") c.data.amp_v1 = num();
    else if (key == "power") c.data.power = integer();
    else if (key == "output_dir") c.output_dir = value;
    else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value, line);
    else if (key == "workers") c.workers = integer();
    else if (key == "frame") {
      if (value == "one_dimensional") c.frame = FrameChoice::OneDimensional;
      else if (value == "unweighted") c.frame = FrameChoice::OneDimensionalUnweighted;
      else throw ConfigError("config line " + std::to_string(line) + ": unknown frame '" + value + "'");
    } else {
      throw ConfigError("config line " + std::to_string(line) + ": unknown key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

SweepConfig load_sweep_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_sweep_config(in);
}

std::vector<SweepRecord> run_sweep(const SweepConfig& config) {
  config.validate();
  const auto ladder = config.eps_ladder();
  const BoundOracle oracle(config);
  std::vector<SweepRecord> records(ladder.size());

  unsigned workers = config.workers > 0 ? static_cast<unsigned>(config.workers)
                                        : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(ladder.size()));

  // Each slot is written by exactly one worker; runs are single-threaded.
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < ladder.size(); k = next++) {
      records[k] = run_one(config, ladder[k], oracle);
    }
  };
  std::vector<std::jthread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  pool.clear();

  std::sort(records.begin(), records.end(),
            [](const SweepRecord& a, const SweepRecord& b) { return a.eps > b.eps; });
  return records;
}

FitResult fit_power_law(const std::vector<SweepRecord>& records) {
  std::vector<double> x, y, eps;
  for (const auto* r : usable(records)) {
    x.push_back(std::log(r->eps));
    y.push_back(std::log(*r->T_num));
    eps.push_back(r->eps);
  }
  return least_squares(FitKind::PowerLaw, x, y, eps);
}

FitResult fit_critical_law(const std::vector<SweepRecord>& records, double pq) {
  if (!(pq > 1.0)) throw ConfigError("fit_critical_law: pq must be > 1");
  std::vector<double> x, y, eps;
  for (const auto* r : usable(records)) {
    x.push_back(std::pow(r->eps, -(pq - 1.0)));
    y.push_back(std::log(*r->T_num));
    eps.push_back(r->eps);
  }
  return least_squares(FitKind::CriticalLaw, x, y, eps);
}

bool FrameCheck::envelopes_hold() const {
  return std::all_of(envelopes.begin(), envelopes.end(),
                     [](const EnvelopeCheck& e) { return e.holds; });
}

FrameCheck verify_iteration_frame(const CharacteristicTrace& trace, const ModelParams& params,
                                  const FrameConstants& frame, double z_max,
                                  const SubcriticalSequences* envelopes, int envelope_j_max,
                                  double allowance) {
  return verify_frame_impl(trace, params, frame, z_max, envelopes, envelope_j_max, allowance);
}

FrameCheck verify_iteration_frame(const CharacteristicTrace& trace, const ModelParams& params,
                                  const FrameConstants& frame, double z_max,
                                  const CriticalSequences& envelopes, int envelope_j_max,
                                  double allowance) {
  return verify_frame_impl(trace, params, frame, z_max, &envelopes, envelope_j_max, allowance);
}

nlohmann::ordered_json to_json(const SweepConfig& c) {
  nlohmann::ordered_json j;
  j["n"] = c.base.n;
  j["p"] = c.base.p;
  j["q"] = c.base.q;
  j["b"] = c.base.b;
  j["m2"] = c.base.m2;
  j["R"] = c.base.R;
  j["eps_start"] = c.eps_start;
  j["eps_ratio"] = c.eps_ratio;
  j["eps_count"] = c.eps_count;
  j["hx"] = c.numerics.hx;
  j["cfl"] = c.numerics.cfl;
  j["t_max"] = c.numerics.t_max;
  j["threshold_factor"] = c.numerics.threshold_factor;
  j["confirm_factor"] = c.numerics.confirm_factor;
  j["sensitivity_tol"] = c.numerics.sensitivity_tol;
  j["amp_u0"] = c.data.amp_u0;
  j["amp_u1"] = c.data.amp_u1;
  j["amp_v0"] = c.data.amp_v0;
  j["amp_v1"] = c.data.amp_v1;
  j["power"] = c.data.power;
  j["frame"] = to_string(c.frame);
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  return j;
}

nlohmann::ordered_json to_json(const SweepRecord& r) {
  nlohmann::ordered_json j;
  j["eps"] = json_number(r.eps);
  j["blew_up"] = r.blew_up;
  j["T_num"] = r.T_num ? json_number(*r.T_num) : nlohmann::ordered_json(nullptr);
  j["T_confirm"] = r.T_confirm ? json_number(*r.T_confirm) : nlohmann::ordered_json(nullptr);
  j["threshold_insensitive"] = r.threshold_insensitive;
  j["trigger"] = r.trigger;
  j["lifespan_bound"] = json_number(r.lifespan_bound);
  j["log_lifespan_bound"] = json_number(r.log_lifespan_bound);
  j["eps0"] = json_number(r.eps0);
  j["bound_violation"] = r.bound_violation;
  j["hx"] = json_number(r.hx);
  j["ht"] = json_number(r.ht);
  j["error"] = r.error;
  return j;
}

nlohmann::ordered_json to_json(const FitResult& f) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(f.kind);
  j["intercept"] = json_number(f.intercept);
  j[f.kind == FitKind::PowerLaw ? "slope" : "coefficient"] = json_number(f.coefficient);
  j["residual_rms"] = json_number(f.residual_rms);
  j["eps_min"] = json_number(f.eps_min);
  j["eps_max"] = json_number(f.eps_max);
  j["points"] = f.points;
  return j;
}

SweepRecord record_from_json(const nlohmann::json& j) {
  SweepRecord r;
  r.eps = number_from_json(j.at("eps"));
  r.blew_up = j.at("blew_up").get<bool>();
  if (!j.at("T_num").is_null()) r.T_num = number_from_json(j.at("T_num"));
  if (!j.at("T_confirm").is_null()) r.T_confirm = number_from_json(j.at("T_confirm"));
  r.threshold_insensitive = j.at("threshold_insensitive").get<bool>();
  r.trigger = j.at("trigger").get<std::string>();
  r.lifespan_bound = number_from_json(j.at("lifespan_bound"));
  r.log_lifespan_bound = number_from_json(j.at("log_lifespan_bound"));
  r.eps0 = number_from_json(j.at("eps0"));
  r.bound_violation = j.at("bound_violation").get<bool>();
  r.hx = number_from_json(j.at("hx"));
  r.ht = number_from_json(j.at("ht"));
  r.error = j.at("error").get<std::string>();
  return r;
}

void write_sweep_csv(const std::vector<SweepRecord>& records, std::ostream& out) {
  out << "eps,T_num,blew_up,T_confirm,threshold_insensitive,trigger,lifespan_bound,"
         "log_lifespan_bound,eps0,bound_violation,hx,ht,error\n";
  for (const auto& r : records) {
    out << format_double(r.eps) << ',' << (r.T_num ? format_double(*r.T_num) : "") << ','
        << (r.blew_up ? 1 : 0) << ',' << (r.T_confirm ? format_double(*r.T_confirm) : "") << ','
        << (r.threshold_insensitive ? 1 : 0) << ',' << r.trigger << ','
        << format_double(r.lifespan_bound) << ',' << format_double(r.log_lifespan_bound) << ','
        << format_double(r.eps0) << ',' << (r.bound_violation ? 1 : 0) << ','
        << format_double(r.hx) << ',' << format_double(r.ht) << ',' << csv_quote(r.error) << '\n';
  }
}

void emit_report(const ReportInputs& inputs, const SweepConfig& config) {
  if (inputs.records.empty()) throw ConfigError("emit_report: no records to report");
  namespace fs = std::filesystem;
  const fs::path dir(config.output_dir);

  std::ostringstream csv;
  write_sweep_csv(inputs.records, csv);

  nlohmann::ordered_json report;
  report["tool"] = "kglab";
  nlohmann::ordered_json versions;
  versions["kglab"] = version_string();
  versions["compiler"] = __VERSION__;
  versions["cplusplus"] = static_cast<long>(__cplusplus);
  versions["boost"] = BOOST_LIB_VERSION;
  versions["nlohmann_json"] = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                              std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                              std::to_string(NLOHMANN_JSON_VERSION_PATCH);
  report["versions"] = versions;
  report["config"] = to_json(config);
  report["theta"] = json_number(inputs.theta);
  report["theoretical_slope"] =
      inputs.theta > 0.0 ? json_number(-1.0 / inputs.theta) : nlohmann::ordered_json(nullptr);
  auto& recs = report["records"] = nlohmann::ordered_json::array();
  std::size_t violations = 0;
  for (const auto& r : inputs.records) {
    recs.push_back(to_json(r));
    if (r.bound_violation) ++violations;
  }
  auto& fits = report["fits"] = nlohmann::ordered_json::array();
  for (const auto& f : inputs.fits) fits.push_back(to_json(f));
  auto& checks = report["checks"] = nlohmann::ordered_json::array();
  for (const auto& c : inputs.checks) checks.push_back(check_json(c));
  report["bound_violations"] = violations;

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  // Stage everything first so a failure leaves no partial report behind.
  const std::vector<std::pair<std::string, std::string>> files = {
      {"sweep.csv", csv.str()}, {"report.json", report.dump(2) + "\n"},
      {"plot.gp", plot_script(inputs)}};
  std::vector<fs::path> staged;
  try {
    for (const auto& [name, content] : files) {
      const fs::path tmp = dir / (name + ".partial");
      staged.push_back(tmp);
      write_file(tmp, content);
    }
  } catch (...) {
    for (const auto& p : staged) fs::remove(p, ec);
    throw;
  }
  for (std::size_t i = 0; i < files.size(); ++i) fs::rename(staged[i], dir / files[i].first);
}

std::vector<SweepRecord> load_report_records(const std::string& report_path) {
  std::ifstream in(report_path);
  if (!in) throw std::runtime_error("cannot open " + report_path);
  const auto j = nlohmann::json::parse(in);
  std::vector<SweepRecord> out;
  for (const auto& r : j.at("records")) out.push_back(record_from_json(r));
  return out;
}

}  // namespace kglab
