#pragma once

// Explicit leapfrog simulation of the coupled system in one space dimension
//
//   u_tt - u_xx + b u_t + m2 u = |v_t|^p
//   v_tt - v_xx               = |u_t|^q
//
// with data eps*(u0, u1), eps*(v0, v1) supported in [-R, R].

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kglab/kernel_ops.hpp"

namespace kglab {

struct ModelParams {
  int n = 1;
  double p = 2.0;
  double q = 2.0;
  double b = 1.0;
  double m2 = 0.0;
  double R = 1.0;
  double eps = 0.1;

  void validate() const;
  /// Additionally requires b^2 >= 4 m2 and theta(n, p, q) >= 0.
  void validate_for_blowup() const;
  LinearParams linear() const { return {b, m2}; }
};

enum class ProfileFamily { PolynomialBump };

struct InitialDataSpec {
  ProfileFamily family = ProfileFamily::PolynomialBump;
  double amp_u0 = 0.0;
  double amp_u1 = 0.0;
  double amp_v0 = 0.0;
  double amp_v1 = 1.0;
  double R = 1.0;
  /// Exponent k of (1 - (x/R)^2)_+^k; k >= 3 gives C^2 data.
  int power = 3;

  void validate(bool for_blowup) const;
};

/// Data profiles already multiplied by eps.
struct InitialData {
  Profile u0, u1, v0, v1;
};

InitialData make_initial_data(const InitialDataSpec& spec, const ModelParams& params,
                              bool for_blowup = false);

/// M = (1/2) * integral of the unscaled v1 profile.
double half_mass_v1(const InitialDataSpec& spec);

struct Numerics {
  double hx = 0.02;
  double cfl = 0.5;
  double t_max = 20.0;
  /// Blow-up threshold as a multiple of the largest initial-data value.
  double threshold_factor = 1e6;
  /// The run continues until the monitors exceed confirm_factor * threshold,
  /// so the threshold sensitivity of T_num can be measured.
  double confirm_factor = 10.0;
  double sensitivity_tol = 0.02;
  bool nonlinear = true;
  /// Snapshot every this many steps (0 disables snapshots).
  int snapshot_every = 0;
  /// Spatial decimation of snapshots.
  int snapshot_stride = 1;
  /// Characteristic-trace sample every this many steps.
  int trace_every = 1;

  void validate() const;
};

enum class BlowupTrigger { None, MaxU, MaxV, MaxDuDt, MaxDvDt, NonFinite };

std::string to_string(BlowupTrigger trigger);

struct MonitorSample {
  double t = 0.0;
  double max_u = 0.0;
  double max_v = 0.0;
  double max_dudt = 0.0;
  double max_dvdt = 0.0;
};

struct BlowupPolicy {
  double threshold = 1e6;
  double confirm_factor = 10.0;
  double sensitivity_tol = 0.02;
};

struct BlowupReport {
  bool blew_up = false;
  std::optional<double> T_num;
  BlowupTrigger trigger = BlowupTrigger::None;
  double threshold = 0.0;
  MonitorSample final_values;
  /// Crossing time of confirm_factor * threshold, when reached.
  std::optional<double> T_confirm;
  /// |T_confirm - T_num| / T_num < sensitivity_tol.
  bool threshold_insensitive = false;
};

struct CharacteristicTrace {
  /// Samples of (t, U(t, t-R), V(t, t-R)).
  std::vector<double> t;
  std::vector<double> U;
  std::vector<double> V;
};

struct Snapshot {
  double t = 0.0;
  std::vector<double> x, u, v, dudt, dvdt;
};

struct Trajectory {
  double hx = 0.0;
  double ht = 0.0;
  std::vector<Snapshot> snapshots;
  std::vector<MonitorSample> monitor;
  Snapshot final_state;
};

struct SimulationResult {
  Trajectory trajectory;
  CharacteristicTrace trace;
  BlowupReport report;
  double data_max = 0.0;
};

SimulationResult simulate(const ModelParams& params, const InitialDataSpec& spec,
                          const Numerics& numerics);

/// First crossing of the policy threshold by any monitored maximum.
BlowupReport detect_blowup(std::span<const MonitorSample> history, const BlowupPolicy& policy);

struct LowerBoundCheck {
  bool holds = true;
  double M = 0.0;
  double bound = 0.0;
  std::size_t samples = 0;
  double worst_t = 0.0;
  double worst_value = 0.0;
  /// min over samples of V / (M eps); +inf when no samples.
  double worst_ratio = 0.0;
};

/// Checks V(t, t-R) >= M eps (1 - tol) for sampled t in [2R, t_end].
LowerBoundCheck first_lower_bound_check(const CharacteristicTrace& trace, const ModelParams& params,
                                        const InitialDataSpec& spec, double t_end,
                                        double tol = 0.05);

/// d'Alembert solution of v_tt = v_xx with data (v0, v1), used as an oracle.
double dalembert(const Profile& v0, const Profile& v1, double t, double x, int gl_order = 16);

void write_trajectory_csv(const Trajectory& trajectory, const std::string& path);
void write_trace_csv(const CharacteristicTrace& trace, const std::string& path);

}  // namespace kglab
