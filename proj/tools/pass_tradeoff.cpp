// pass-tradeoff: batch simulator for joint SE/EE beamforming designs on
// pinching-antenna systems.
//
//   solve   run a configured scenario and write CSV outputs
//   pareto  convenience wrapper forcing a full beta sweep
//   verify  run the oracle cross-validation bundle
//
// Exit codes: 0 ok, 2 config error, 3 at least one drop failed,
// 4 verification failure.

#include <CLI11.hpp>
#include <iostream>

#include "pass/scenario.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::int64_t seed = -1;
  int drops = -1;
  double beta_step = -1.0;
  int order = 0;
  std::string baseline;
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "scenario config (JSON)");
  cmd->add_option("--seed", flags.seed, "override the config seed");
  cmd->add_option("--drops", flags.drops, "override the number of user drops");
  cmd->add_option("--beta-step", flags.beta_step, "override the beta sweep step");
  cmd->add_option("--order", flags.order, "Taylor expansion order (1 or 2)")
      ->check(CLI::IsMember({1, 2}));
  cmd->add_option("--baseline", flags.baseline, "enable a baseline ('uniform')")
      ->check(CLI::IsMember({std::string("uniform")}));
  cmd->add_option("--out", flags.out_dir, "output directory");
}

pass::ScenarioConfig load_config(const CommonFlags& flags, bool force_sweep) {
  pass::ScenarioConfig cfg = flags.config_path.empty()
                                 ? pass::ScenarioConfig::from_json_text("{}")
                                 : pass::ScenarioConfig::from_file(flags.config_path);
  if (flags.seed >= 0) cfg.seed = static_cast<std::uint64_t>(flags.seed);
  if (flags.drops > 0) {
    if (!cfg.explicit_users.empty())
      pass::fail(pass::ErrorCode::ConfigInvalid,
                 "--drops cannot override explicit user positions");
    cfg.drops = flags.drops;
  }
  if (flags.beta_step > 0 || force_sweep) {
    const double step = flags.beta_step > 0 ? flags.beta_step : 0.05;
    cfg.betas.clear();
    for (double b = 0.0; b <= 1.0 + 1e-12; b += step) cfg.betas.push_back(std::min(b, 1.0));
  }
  if (flags.order != 0) cfg.taylor_order = flags.order;
  if (flags.baseline == "uniform") cfg.baseline_uniform = true;
  if (!flags.out_dir.empty()) cfg.output_dir = flags.out_dir;
  return cfg;
}

int run_solve(const CommonFlags& flags, bool force_sweep) {
  pass::ScenarioConfig cfg;
  try {
    cfg = load_config(flags, force_sweep);
  } catch (const pass::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  try {
    const pass::ScenarioOutcome outcome = pass::run_scenario(cfg);
    std::cout << "wrote " << outcome.pareto_csv.string() << " ("
              << outcome.rows.size() << " rows, " << outcome.failed_drops
              << " failed drops)\n";
    return outcome.failed_drops > 0 ? 3 : 0;
  } catch (const pass::Error& e) {
    if (e.code() == pass::ErrorCode::ConfigInvalid) {
      std::cerr << "config error: " << e.what() << "\n";
      return 2;
    }
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SE/EE tradeoff designs for pinching-antenna systems"};
  app.require_subcommand(1);

  CommonFlags solve_flags, pareto_flags;
  CLI::App* solve = app.add_subcommand("solve", "run a scenario");
  add_common(solve, solve_flags);
  CLI::App* pareto = app.add_subcommand("pareto", "run a full beta sweep");
  add_common(pareto, pareto_flags);

  std::string level = "quick";
  std::int64_t verify_seed = 1;
  CLI::App* verify = app.add_subcommand("verify", "oracle cross-validation");
  verify->add_option("--level", level, "quick or full")
      ->check(CLI::IsMember({std::string("quick"), std::string("full")}));
  verify->add_option("--seed", verify_seed, "verification seed");

  CLI11_PARSE(app, argc, argv);

  if (solve->parsed()) return run_solve(solve_flags, false);
  if (pareto->parsed()) return run_solve(pareto_flags, true);

  const auto reports = pass::run_verify(
      level == "full" ? pass::VerifyLevel::Full : pass::VerifyLevel::Quick,
      static_cast<std::uint64_t>(verify_seed));
  std::cout << pass::format_reports(reports);
  for (const auto& r : reports)
    if (!r.passed) return 4;
  return 0;
}
