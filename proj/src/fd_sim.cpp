#include "kglab/fd_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "kglab/errors.hpp"
#include "kglab/quadrature.hpp"

namespace kglab {

namespace {

// |w|^p with the common integer exponents unrolled; exact 0 at w = 0.
inline double power_abs(double w, double p) {
  const double a = std::abs(w);
  if (p == 2.0) return a * a;
  if (p == 3.0) return a * a * a;
  return std::pow(a, p);
}

double profile_family(const InitialDataSpec& spec, double amplitude, double eps, Profile& out) {
  switch (spec.family) {
    case ProfileFamily::PolynomialBump:
      out = Profile::polynomial_bump(eps * amplitude, spec.R, spec.power);
      return eps * amplitude;
  }
  return 0.0;
}

inline double interpolate(const std::vector<double>& f, double x, double origin, double hx) {
  const double pos = (x - origin) / hx;
  if (pos <= 0.0) return f.front();
  const auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= f.size()) return f.back();
  const double w = pos - static_cast<double>(i);
  return (1.0 - w) * f[i] + w * f[i + 1];
}

}  // namespace

void ModelParams::validate() const {
  if (n < 1) throw ConfigError("ModelParams: n must be >= 1");
  if (!(p > 1.0) || !(q > 1.0)) throw ConfigError("ModelParams: p and q must be > 1");
  if (!(b > 0.0)) throw ConfigError("ModelParams: b must be > 0");
  if (!(m2 >= 0.0)) throw ConfigError("ModelParams: m2 must be >= 0");
  if (!(R > 0.0)) throw ConfigError("ModelParams: R must be > 0");
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw ConfigError("ModelParams: eps must be >= 0");
}

void ModelParams::validate_for_blowup() const {
  validate();
  if (!(eps > 0.0)) throw ConfigError("ModelParams: blow-up experiments need eps > 0");
  if (b * b < 4.0 * m2) {
    throw ConfigError("ModelParams: blow-up experiments require b^2 >= 4 m2");
  }
  const double theta = 1.0 / (p * q - 1.0) - 0.5 * (n - 1);
  if (theta < -1e-14) throw ConfigError("ModelParams: blow-up experiments require theta >= 0");
}

void InitialDataSpec::validate(bool for_blowup) const {
  for (double a : {amp_u0, amp_u1, amp_v0, amp_v1}) {
    if (!(a >= 0.0) || !std::isfinite(a)) {
      throw ConfigError("InitialDataSpec: amplitudes must be finite and >= 0");
    }
  }
  if (!(R > 0.0)) throw ConfigError("InitialDataSpec: R must be > 0");
  if (power < 3) throw ConfigError("InitialDataSpec: power must be >= 3 for C^2 data");
  if (for_blowup && amp_v1 == 0.0) {
    throw ConfigError("InitialDataSpec: v1 must be nontrivial for blow-up experiments");
  }
}

InitialData make_initial_data(const InitialDataSpec& spec, const ModelParams& params,
                              bool for_blowup) {
  params.validate();
  spec.validate(for_blowup);
  if (spec.R > params.R) throw ConfigError("InitialDataSpec: data radius exceeds model R");
  InitialData data;
  profile_family(spec, spec.amp_u0, params.eps, data.u0);
  profile_family(spec, spec.amp_u1, params.eps, data.u1);
  profile_family(spec, spec.amp_v0, params.eps, data.v0);
  profile_family(spec, spec.amp_v1, params.eps, data.v1);
  return data;
}

double half_mass_v1(const InitialDataSpec& spec) {
  spec.validate(false);
  Profile v1;
  profile_family(spec, spec.amp_v1, 1.0, v1);
  if (v1.is_zero()) return 0.0;
  const auto& rule = gauss_legendre(16);
  return 0.5 * integrate_gl(v1, v1.lo(), v1.hi(), 16, rule);
}

void Numerics::validate() const {
  if (!(hx > 0.0)) throw ConfigError("Numerics: hx must be > 0");
  if (!(cfl > 0.0) || cfl > 0.9) throw ConfigError("Numerics: CFL number must lie in (0, 0.9]");
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw ConfigError("Numerics: t_max must be finite and > 0");
  if (!(threshold_factor > 0.0)) throw ConfigError("Numerics: threshold_factor must be > 0");
  if (!(confirm_factor >= 1.0)) throw ConfigError("Numerics: confirm_factor must be >= 1");
  if (snapshot_every < 0 || snapshot_stride < 1 || trace_every < 1) {
    throw ConfigError("Numerics: invalid snapshot/trace cadence");
  }
}

std::string to_string(BlowupTrigger trigger) {
  switch (trigger) {
    case BlowupTrigger::None: return "none";
    case BlowupTrigger::MaxU: return "max|u|";
    case BlowupTrigger::MaxV: return "max|v|";
    case BlowupTrigger::MaxDuDt: return "max|dudt|";
    case BlowupTrigger::MaxDvDt: return "max|dvdt|";
    case BlowupTrigger::NonFinite: return "non-finite";
  }
  return "unknown";
}

namespace {

// Which monitor crosses `level` first in this sample (None if none).
BlowupTrigger crossing(const MonitorSample& s, double level) {
  const double vals[4] = {s.max_dudt, s.max_dvdt, s.max_u, s.max_v};
  const BlowupTrigger kinds[4] = {BlowupTrigger::MaxDuDt, BlowupTrigger::MaxDvDt,
                                  BlowupTrigger::MaxU, BlowupTrigger::MaxV};
  for (double v : vals) {
    if (!std::isfinite(v)) return BlowupTrigger::NonFinite;
  }
  for (int i = 0; i < 4; ++i) {
    if (vals[i] > level) return kinds[i];
  }
  return BlowupTrigger::None;
}

}  // namespace

BlowupReport detect_blowup(std::span<const MonitorSample> history, const BlowupPolicy& policy) {
  if (history.empty()) throw ConfigError("detect_blowup: empty monitor history");
  BlowupReport report;
  report.threshold = policy.threshold;
  report.final_values = history.back();
  for (const auto& s : history) {
    const BlowupTrigger hit = crossing(s, policy.threshold);
    if (hit != BlowupTrigger::None) {
      report.blew_up = true;
      report.T_num = s.t;
      report.trigger = hit;
      report.final_values = s;
      break;
    }
  }
  if (!report.blew_up || report.trigger == BlowupTrigger::NonFinite) return report;
  const double confirm = policy.threshold * policy.confirm_factor;
  for (const auto& s : history) {
    const BlowupTrigger hit = crossing(s, confirm);
    if (hit == BlowupTrigger::NonFinite) break;
    if (hit != BlowupTrigger::None) {
      report.T_confirm = s.t;
      break;
    }
  }
  if (report.T_confirm) {
    const double rel = std::abs(*report.T_confirm - *report.T_num) / *report.T_num;
    report.threshold_insensitive = rel < policy.sensitivity_tol;
  }
  return report;
}

SimulationResult simulate(const ModelParams& params, const InitialDataSpec& spec,
                          const Numerics& numerics) {
  params.validate();
  numerics.validate();
  if (params.n != 1) throw ConfigError("simulate: the finite-difference solver is one-dimensional (n = 1)");
  const InitialData data = make_initial_data(spec, params, false);

  const double hx = numerics.hx;
  const double dt = numerics.cfl * hx;
  const double R = params.R;
  const double b = params.b;
  const double m2 = params.m2;
  const double p = params.p;
  const double q = params.q;
  const bool nonlinear = numerics.nonlinear;

  // x_i = (i - half) hx covers [-(R + t_max + 1), R + t_max + 1].
  const auto half = static_cast<std::size_t>(std::ceil((R + numerics.t_max + 1.0) / hx));
  const std::size_t size = 2 * half + 1;
  const double origin = -static_cast<double>(half) * hx;
  auto x_at = [&](std::size_t i) { return origin + static_cast<double>(i) * hx; };
  if (!(x_at(0) <= -(R + numerics.t_max)) || !(x_at(size - 1) >= R + numerics.t_max)) {
    throw ConfigError("simulate: grid does not cover the light cone");
  }

  std::vector<double> u(size, 0.0), u_m(size, 0.0), u_mm(size, 0.0), u_p(size, 0.0);
  std::vector<double> v(size, 0.0), v_m(size, 0.0), v_mm(size, 0.0), v_p(size, 0.0);
  std::vector<double> dudt(size, 0.0), dvdt(size, 0.0);

  SimulationResult result;
  double data_max = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    const double x = x_at(i);
    u_m[i] = data.u0(x);
    v_m[i] = data.v0(x);
    dudt[i] = data.u1(x);
    dvdt[i] = data.v1(x);
    data_max = std::max({data_max, std::abs(u_m[i]), std::abs(v_m[i]), std::abs(dudt[i]),
                         std::abs(dvdt[i])});
  }
  result.data_max = data_max;
  const double threshold = numerics.threshold_factor * data_max;
  const double stop_level = threshold * numerics.confirm_factor;

  // Level 0 sits in u_m/v_m; Taylor expansion gives levels +1 and -1.
  for (std::size_t i = 1; i + 1 < size; ++i) {
    const double lap_u = (u_m[i + 1] - 2.0 * u_m[i] + u_m[i - 1]) / (hx * hx);
    const double lap_v = (v_m[i + 1] - 2.0 * v_m[i] + v_m[i - 1]) / (hx * hx);
    double utt = lap_u - b * dudt[i] - m2 * u_m[i];
    double vtt = lap_v;
    if (nonlinear) {
      utt += power_abs(dvdt[i], p);
      vtt += power_abs(dudt[i], q);
    }
    u[i] = u_m[i] + dt * dudt[i] + 0.5 * dt * dt * utt;
    v[i] = v_m[i] + dt * dvdt[i] + 0.5 * dt * dt * vtt;
    u_mm[i] = u_m[i] - dt * dudt[i] + 0.5 * dt * dt * utt;
    v_mm[i] = v_m[i] - dt * dvdt[i] + 0.5 * dt * dt * vtt;
  }
  // u_mm = level -1, u_m = level 0, u = level 1.

  auto& traj = result.trajectory;
  traj.hx = hx;
  traj.ht = dt;

  auto record_trace = [&](double t, const std::vector<double>& uu, const std::vector<double>& vv) {
    result.trace.t.push_back(t);
    result.trace.U.push_back(interpolate(uu, t - R, origin, hx));
    result.trace.V.push_back(interpolate(vv, t - R, origin, hx));
  };
  auto take_snapshot = [&](double t, const std::vector<double>& uu, const std::vector<double>& vv,
                           const std::vector<double>& du, const std::vector<double>& dv) {
    Snapshot s;
    s.t = t;
    for (std::size_t i = 0; i < size; i += static_cast<std::size_t>(numerics.snapshot_stride)) {
      s.x.push_back(x_at(i));
      s.u.push_back(uu[i]);
      s.v.push_back(vv[i]);
      s.dudt.push_back(du[i]);
      s.dvdt.push_back(dv[i]);
    }
    return s;
  };

  // Level 0 monitor uses the exact initial velocities.
  {
    MonitorSample s;
    for (std::size_t i = 0; i < size; ++i) {
      s.max_u = std::max(s.max_u, std::abs(u_m[i]));
      s.max_v = std::max(s.max_v, std::abs(v_m[i]));
      s.max_dudt = std::max(s.max_dudt, std::abs(dudt[i]));
      s.max_dvdt = std::max(s.max_dvdt, std::abs(dvdt[i]));
    }
    traj.monitor.push_back(s);
    record_trace(0.0, u_m, v_m);
    if (numerics.snapshot_every > 0) traj.snapshots.push_back(take_snapshot(0.0, u_m, v_m, dudt, dvdt));
  }

  const auto max_steps = static_cast<long long>(std::floor(numerics.t_max / dt + 1e-9));
  const double inv_hx2 = 1.0 / (hx * hx);
  const double damp = 0.5 * b * dt;
  const double dt2 = dt * dt;
  const double inv_2dt = 1.0 / (2.0 * dt);

  long long k = 1;  // current level held in u, v
  bool stopped = false;
  for (; k <= max_steps && !stopped; ++k) {
    const double t_next = static_cast<double>(k + 1) * dt;
    const double radius = R + t_next + 2.0 * hx;
    const auto lo_idx = static_cast<std::size_t>(
        std::max(1.0, std::floor((-radius - origin) / hx)));
    const auto hi_idx = static_cast<std::size_t>(
        std::min(static_cast<double>(size - 2), std::ceil((radius - origin) / hx)));
    MonitorSample s;
    s.t = static_cast<double>(k) * dt;
    for (std::size_t i = lo_idx; i <= hi_idx; ++i) {
      const double lap_u = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv_hx2;
      const double lap_v = (v[i + 1] - 2.0 * v[i] + v[i - 1]) * inv_hx2;
      const double base_u = 2.0 * u[i] - u_m[i] + damp * u_m[i] + dt2 * (lap_u - m2 * u[i]);
      const double base_v = 2.0 * v[i] - v_m[i] + dt2 * lap_v;
      double up = base_u / (1.0 + damp);
      double vp = base_v;
      if (nonlinear) {
        // Predictor: one-sided second-order derivative at level k.
        const double du0 = (3.0 * u[i] - 4.0 * u_m[i] + u_mm[i]) * inv_2dt;
        const double dv0 = (3.0 * v[i] - 4.0 * v_m[i] + v_mm[i]) * inv_2dt;
        const double up0 = (base_u + dt2 * power_abs(dv0, p)) / (1.0 + damp);
        const double vp0 = base_v + dt2 * power_abs(du0, q);
        // Corrector: centred derivative from the predicted level k+1.
        const double du1 = (up0 - u_m[i]) * inv_2dt;
        const double dv1 = (vp0 - v_m[i]) * inv_2dt;
        up = (base_u + dt2 * power_abs(dv1, p)) / (1.0 + damp);
        vp = base_v + dt2 * power_abs(du1, q);
      }
      u_p[i] = up;
      v_p[i] = vp;
      dudt[i] = (up - u_m[i]) * inv_2dt;
      dvdt[i] = (vp - v_m[i]) * inv_2dt;
      s.max_u = std::max(s.max_u, std::abs(u[i]));
      s.max_v = std::max(s.max_v, std::abs(v[i]));
      s.max_dudt = std::max(s.max_dudt, std::abs(dudt[i]));
      s.max_dvdt = std::max(s.max_dvdt, std::abs(dvdt[i]));
      if (!std::isfinite(up) || !std::isfinite(vp)) s.max_u = std::numeric_limits<double>::quiet_NaN();
    }
    traj.monitor.push_back(s);
    if (k % numerics.trace_every == 0) record_trace(s.t, u, v);
    if (numerics.snapshot_every > 0 && k % numerics.snapshot_every == 0) {
      traj.snapshots.push_back(take_snapshot(s.t, u, v, dudt, dvdt));
    }
    if (crossing(s, stop_level) != BlowupTrigger::None && data_max > 0.0) stopped = true;
    if (std::isnan(s.max_u)) stopped = true;

    // Rotate levels: (mm, m, cur, p) <- (m, cur, p, mm).
    std::swap(u_mm, u_m);
    std::swap(u_m, u);
    std::swap(u, u_p);
    std::swap(v_mm, v_m);
    std::swap(v_m, v);
    std::swap(v, v_p);
  }
  // The level held in u_m is the last monitored one.
  traj.final_state = take_snapshot(traj.monitor.back().t, u_m, v_m, dudt, dvdt);

  BlowupPolicy policy;
  policy.threshold = threshold;
  policy.confirm_factor = numerics.confirm_factor;
  policy.sensitivity_tol = numerics.sensitivity_tol;
  result.report = detect_blowup(traj.monitor, policy);
  return result;
}

LowerBoundCheck first_lower_bound_check(const CharacteristicTrace& trace, const ModelParams& params,
                                        const InitialDataSpec& spec, double t_end, double tol) {
  LowerBoundCheck check;
  check.M = half_mass_v1(spec);
  check.bound = check.M * params.eps;
  check.worst_ratio = std::numeric_limits<double>::infinity();
  const double floor = check.bound * (1.0 - tol);
  for (std::size_t i = 0; i < trace.t.size(); ++i) {
    const double t = trace.t[i];
    if (t < 2.0 * params.R || t > t_end) continue;
    ++check.samples;
    const double value = trace.V[i];
    const double ratio = check.bound > 0.0 ? value / check.bound
                                           : std::numeric_limits<double>::infinity();
    if (ratio < check.worst_ratio || check.samples == 1) {
      check.worst_ratio = ratio;
      check.worst_t = t;
      check.worst_value = value;
    }
    if (!(value >= floor)) check.holds = false;
  }
  return check;
}

double dalembert(const Profile& v0, const Profile& v1, double t, double x, int gl_order) {
  double value = 0.5 * (v0(x + t) + v0(x - t));
  if (!v1.is_zero()) {
    const double a = std::max(x - t, v1.lo());
    const double b = std::min(x + t, v1.hi());
    if (b > a) value += 0.5 * integrate_gl(v1, a, b, panels_for(b - a, 8), gauss_legendre(gl_order));
  }
  return value;
}

void write_trajectory_csv(const Trajectory& trajectory, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "t,x,u,v,dudt,dvdt\n";
  char line[256];
  auto dump = [&](const Snapshot& s) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      std::snprintf(line, sizeof line, "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n", s.t, s.x[i],
                    s.u[i], s.v[i], s.dudt[i], s.dvdt[i]);
      out << line;
    }
  };
  if (trajectory.snapshots.empty()) {
    dump(trajectory.final_state);
  } else {
    for (const auto& s : trajectory.snapshots) dump(s);
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_trace_csv(const CharacteristicTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "t,U_char,V_char\n";
  char line[128];
  for (std::size_t i = 0; i < trace.t.size(); ++i) {
    std::snprintf(line, sizeof line, "%.12g,%.12g,%.12g\n", trace.t[i], trace.U[i], trace.V[i]);
    out << line;
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace kglab
