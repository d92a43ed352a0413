#pragma once

// Batch front-end: scenario configs, Monte Carlo orchestration over user
// drops and beta sweeps, CSV emission and the oracle verification bundle.

#include <filesystem>
#include <optional>

#include "pass/multi_user.hpp"
#include "pass/oracle.hpp"
#include "pass/types.hpp"

namespace pass {

struct ScenarioConfig {
  enum class Mode { Single, Multi };
  Mode mode = Mode::Single;

  SystemParams params;  // finalized

  int num_users = 1;
  std::vector<UserPos> explicit_users;  // empty -> uniform random drops
  int drops = 100;
  std::uint64_t seed = 1;

  std::vector<double> betas;  // sweep values, ascending

  PsoConfig pso;
  int taylor_order = 1;
  bool baseline_uniform = false;
  bool record_timing = false;
  int threads = 0;  // 0 = hardware concurrency
  std::filesystem::path output_dir = "out";

  /// Parse and schema-validate a JSON document; unknown keys are rejected.
  static ScenarioConfig from_json_text(const std::string& text);
  static ScenarioConfig from_file(const std::filesystem::path& path);
};

/// One row of pareto.csv.
struct SweepRow {
  std::uint64_t seed = 0;
  int drop = 0;
  double beta = 0.0;
  double se = 0.0;
  double ee = 0.0;
  double power = 0.0;  // P_opt (single) or tr(Lambda P) (multi)
  std::string regime;
  int outer_iterations = 0;
  double wall_ms = 0.0;
  bool failed = false;
  std::string error;
};

struct ScenarioOutcome {
  std::vector<SweepRow> rows;
  int failed_drops = 0;
  std::filesystem::path pareto_csv;
  std::filesystem::path convergence_csv;
  std::filesystem::path layout_csv;
  std::filesystem::path manifest;
};

ScenarioOutcome run_scenario(const ScenarioConfig& config);

/// Uniform user drop for a given (seed, drop) pair, shared by the runner
/// and the verification suites.
UserSet drop_users(const SystemParams& params, int count, std::uint64_t seed, int drop);

enum class VerifyLevel { Quick, Full };

/// Oracle cross-validation bundle; every report carries its seed and
/// tolerance. The full level adds the phase-refinement termination sweep.
std::vector<OracleReport> run_verify(VerifyLevel level, std::uint64_t seed = 1);

std::string format_reports(const std::vector<OracleReport>& reports);

}  // namespace pass
