#pragma once

// Sweep driver, lifespan-scaling fits, iteration-frame verification and
// report emission.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kglab/fd_sim.hpp"
#include "kglab/iteration.hpp"

namespace kglab {

enum class FrameChoice {
  OneDimensional,            ///< FrameConstants::one_dimensional (with e^{-bR})
  OneDimensionalUnweighted,  ///< FrameConstants::one_dimensional_unweighted
};

struct SweepConfig {
  ModelParams base;  ///< eps is ignored; the ladder supplies it
  InitialDataSpec data;
  Numerics numerics;
  double eps_start = 1.0;
  double eps_ratio = 0.70710678118654752;
  int eps_count = 6;
  std::string output_dir = "sweep_out";
  std::uint64_t seed = 20240601;
  /// 0 selects std::thread::hardware_concurrency().
  int workers = 0;
  FrameChoice frame = FrameChoice::OneDimensional;

  void validate() const;
  /// eps_start * ratio^k, k = 0..count-1 (descending).
  std::vector<double> eps_ladder() const;
};

/// Parses `key = value` lines ('#' starts a comment). Keys:
///   n p q b m2 R                  model constants
///   eps_start eps_ratio eps_count ladder
///   hx cfl t_max threshold_factor confirm_factor sensitivity_tol
///   amp_u0 amp_u1 amp_v0 amp_v1 power
///   output_dir seed workers frame (one_dimensional | unweighted)
SweepConfig parse_sweep_config(std::istream& in);
SweepConfig load_sweep_config(const std::string& path);

struct SweepRecord {
  double eps = 0.0;
  bool blew_up = false;
  std::optional<double> T_num;
  std::optional<double> T_confirm;
  bool threshold_insensitive = false;
  std::string trigger = "none";
  double lifespan_bound = 0.0;
  double log_lifespan_bound = 0.0;
  double eps0 = 0.0;
  /// T_num > lifespan_bound while eps <= eps0.
  bool bound_violation = false;
  double hx = 0.0;
  double ht = 0.0;
  std::string error;

  bool operator==(const SweepRecord&) const = default;
};

/// One simulation per eps, concurrently; records sorted by eps descending.
std::vector<SweepRecord> run_sweep(const SweepConfig& config);

enum class FitKind { PowerLaw, CriticalLaw };

struct FitResult {
  FitKind kind = FitKind::PowerLaw;
  /// log T = intercept + coefficient * log eps          (power law)
  /// log T = intercept + coefficient * eps^{-(pq-1)}    (critical law)
  double intercept = 0.0;
  double coefficient = 0.0;
  double residual_rms = 0.0;
  double eps_min = 0.0;
  double eps_max = 0.0;
  std::size_t points = 0;
};

FitResult fit_power_law(const std::vector<SweepRecord>& records);
FitResult fit_critical_law(const std::vector<SweepRecord>& records, double pq);

struct EnvelopeCheck {
  int j = 0;
  bool holds = true;
  std::size_t samples = 0;
  /// min over samples of ln V - ln envelope.
  double worst_log_margin = 0.0;
  double worst_z = 0.0;
};

struct FrameCheck {
  bool holds = true;
  std::size_t samples = 0;
  double z_max = 0.0;
  double worst_ratio_U = 0.0;  ///< min lhs/rhs of the U inequality (rhs > 0)
  double worst_z_U = 0.0;
  double worst_ratio_V = 0.0;
  double worst_z_V = 0.0;
  std::string failure;  ///< "(z, lhs, rhs)" of the first violation
  std::vector<EnvelopeCheck> envelopes;
  bool envelopes_hold() const;
};

/// Evaluates both frame right-hand sides from the trace by trapezoid
/// quadrature and checks lhs >= (1 - allowance) rhs for every sampled
/// z in [R, z_max]; then checks V(R+z, z) >= (1 - allowance) * envelope_j(z)
/// on each slice domain for j = 0..envelope_j_max.
FrameCheck verify_iteration_frame(const CharacteristicTrace& trace, const ModelParams& params,
                                  const FrameConstants& frame, double z_max,
                                  const SubcriticalSequences* envelopes = nullptr,
                                  int envelope_j_max = 5, double allowance = 0.05);
FrameCheck verify_iteration_frame(const CharacteristicTrace& trace, const ModelParams& params,
                                  const FrameConstants& frame, double z_max,
                                  const CriticalSequences& envelopes, int envelope_j_max = 5,
                                  double allowance = 0.05);

struct ReportInputs {
  std::vector<SweepRecord> records;
  std::vector<FitResult> fits;
  std::vector<CheckResult> checks;
  double theta = 0.0;
};

nlohmann::ordered_json to_json(const SweepConfig& config);
nlohmann::ordered_json to_json(const SweepRecord& record);
nlohmann::ordered_json to_json(const FitResult& fit);
SweepRecord record_from_json(const nlohmann::json& j);

void write_sweep_csv(const std::vector<SweepRecord>& records, std::ostream& out);

/// Writes sweep.csv, report.json and plot.gp into config.output_dir.
/// Throws before touching the filesystem when there are no records.
void emit_report(const ReportInputs& inputs, const SweepConfig& config);

/// Reads the records back from a report.json.
std::vector<SweepRecord> load_report_records(const std::string& report_path);

std::string version_string();

}  // namespace kglab
