#include "pass/scenario.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>
#include <thread>

#include <json.hpp>

#include "pass/metrics.hpp"
#include "pass/rng.hpp"
#include "pass/single_user.hpp"
#include "pass/zf.hpp"

namespace pass {

namespace {

using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

void reject_unknown(const json& j, const std::set<std::string>& allowed,
                    const std::string& scope) {
  for (const auto& item : j.items())
    if (!allowed.count(item.key()))
      fail(ErrorCode::ConfigInvalid, "unknown config key '" + item.key() + "' in " + scope);
}

double require_number(const json& j, const std::string& key) {
  if (!j.at(key).is_number()) fail(ErrorCode::ConfigInvalid, key + " must be a number");
  return j.at(key).get<double>();
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

ScenarioConfig ScenarioConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    fail(ErrorCode::ConfigInvalid, std::string("config is not valid JSON: ") + e.what());
  }

  static const std::set<std::string> top_keys = {
      "mode", "carrier_frequency_hz", "n_eff", "noise_dbm", "noise_w",
      "noise_dbm_per_user", "fixed_circuit_power_w", "rate_power_coeff",
      "power_budget_dbm", "power_budget_w", "sinr_threshold_db",
      "sinr_threshold_linear", "sinr_threshold_db_per_user", "min_spacing_m",
      "region_x_m", "region_y_m", "height_m", "waveguides", "pas_per_waveguide",
      "num_users", "user_positions", "drops", "seed", "beta", "beta_list",
      "beta_sweep", "pso", "taylor_order", "baseline_uniform", "record_timing",
      "threads", "output_dir"};
  reject_unknown(j, top_keys, "the top level");

  ScenarioConfig cfg;
  const std::string mode = j.value("mode", "single");
  if (mode == "single")
    cfg.mode = Mode::Single;
  else if (mode == "multi")
    cfg.mode = Mode::Multi;
  else
    fail(ErrorCode::ConfigInvalid, "mode must be 'single' or 'multi'");

  SystemParams& p = cfg.params;
  if (j.contains("carrier_frequency_hz")) p.carrier_frequency = require_number(j, "carrier_frequency_hz");
  if (j.contains("n_eff")) p.n_eff = require_number(j, "n_eff");
  if (j.contains("noise_dbm") && j.contains("noise_w"))
    fail(ErrorCode::ConfigInvalid, "give noise_dbm or noise_w, not both");
  if (j.contains("noise_dbm")) p.noise_power = dbm_to_watts(require_number(j, "noise_dbm"));
  if (j.contains("noise_w")) p.noise_power = require_number(j, "noise_w");
  if (j.contains("fixed_circuit_power_w")) p.fixed_power = require_number(j, "fixed_circuit_power_w");
  if (j.contains("rate_power_coeff")) p.rate_power = require_number(j, "rate_power_coeff");
  if (j.contains("power_budget_dbm") && j.contains("power_budget_w"))
    fail(ErrorCode::ConfigInvalid, "give power_budget_dbm or power_budget_w, not both");
  if (j.contains("power_budget_dbm")) p.budget = dbm_to_watts(require_number(j, "power_budget_dbm"));
  if (j.contains("power_budget_w")) p.budget = require_number(j, "power_budget_w");
  if (j.contains("sinr_threshold_db") && j.contains("sinr_threshold_linear"))
    fail(ErrorCode::ConfigInvalid, "give sinr_threshold_db or sinr_threshold_linear, not both");
  if (j.contains("sinr_threshold_db")) p.sinr_threshold = db_to_linear(require_number(j, "sinr_threshold_db"));
  if (j.contains("sinr_threshold_linear")) p.sinr_threshold = require_number(j, "sinr_threshold_linear");
  if (j.contains("noise_dbm_per_user")) {
    const auto& arr = j.at("noise_dbm_per_user");
    p.noise_power_user.resize(arr.size());
    for (std::size_t k = 0; k < arr.size(); ++k)
      p.noise_power_user[k] = dbm_to_watts(arr.at(k).get<double>());
  }
  if (j.contains("sinr_threshold_db_per_user")) {
    const auto& arr = j.at("sinr_threshold_db_per_user");
    p.sinr_threshold_user.resize(arr.size());
    for (std::size_t k = 0; k < arr.size(); ++k)
      p.sinr_threshold_user[k] = db_to_linear(arr.at(k).get<double>());
  }
  if (j.contains("min_spacing_m")) p.min_spacing = require_number(j, "min_spacing_m");
  if (j.contains("region_x_m")) p.region_x = require_number(j, "region_x_m");
  if (j.contains("region_y_m")) p.region_y = require_number(j, "region_y_m");
  if (j.contains("height_m")) p.height = require_number(j, "height_m");
  if (j.contains("waveguides")) p.num_waveguides = j.at("waveguides").get<int>();
  if (j.contains("pas_per_waveguide")) p.pas_per_waveguide = j.at("pas_per_waveguide").get<int>();
  p.finalize();

  cfg.num_users = (cfg.mode == Mode::Single) ? 1 : j.value("num_users", 2);
  if (cfg.mode == Mode::Single && j.contains("num_users") && j.at("num_users").get<int>() != 1)
    fail(ErrorCode::ConfigInvalid, "single mode serves exactly one user");
  if (cfg.num_users < 1) fail(ErrorCode::ConfigInvalid, "num_users must be at least 1");
  if (cfg.mode == Mode::Multi && cfg.num_users > p.num_waveguides)
    fail(ErrorCode::ConfigInvalid, "zero-forcing needs waveguides >= users");

  if (j.contains("user_positions")) {
    for (const auto& pos : j.at("user_positions")) {
      if (!pos.is_array() || pos.size() != 2)
        fail(ErrorCode::ConfigInvalid, "user_positions must be [x, y] pairs");
      cfg.explicit_users.push_back({pos[0].get<double>(), pos[1].get<double>()});
    }
    if (static_cast<int>(cfg.explicit_users.size()) != cfg.num_users &&
        j.contains("num_users"))
      fail(ErrorCode::ConfigInvalid, "user_positions length disagrees with num_users");
    cfg.num_users = static_cast<int>(cfg.explicit_users.size());
  }

  if (cfg.params.noise_power_user.size() > 0 &&
      cfg.params.noise_power_user.size() != cfg.num_users)
    fail(ErrorCode::ConfigInvalid, "noise_dbm_per_user length disagrees with num_users");
  if (cfg.params.sinr_threshold_user.size() > 0 &&
      cfg.params.sinr_threshold_user.size() != cfg.num_users)
    fail(ErrorCode::ConfigInvalid,
         "sinr_threshold_db_per_user length disagrees with num_users");

  cfg.drops = j.value("drops", cfg.explicit_users.empty() ? 100 : 1);
  if (cfg.drops < 1) fail(ErrorCode::ConfigInvalid, "drops must be at least 1");
  if (!cfg.explicit_users.empty() && cfg.drops != 1)
    fail(ErrorCode::ConfigInvalid, "explicit user positions imply a single drop");
  cfg.seed = j.value("seed", 1ull);

  int beta_specs = j.contains("beta") + j.contains("beta_list") + j.contains("beta_sweep");
  if (beta_specs > 1) fail(ErrorCode::ConfigInvalid, "give only one of beta, beta_list, beta_sweep");
  if (j.contains("beta")) {
    cfg.betas = {require_number(j, "beta")};
  } else if (j.contains("beta_list")) {
    for (const auto& b : j.at("beta_list")) cfg.betas.push_back(b.get<double>());
  } else {
    double start = 0.0, stop = 1.0, step = 0.05;
    if (j.contains("beta_sweep")) {
      const auto& s = j.at("beta_sweep");
      reject_unknown(s, {"start", "stop", "step"}, "beta_sweep");
      start = s.value("start", 0.0);
      stop = s.value("stop", 1.0);
      step = s.value("step", 0.05);
    }
    if (step <= 0) fail(ErrorCode::ConfigInvalid, "beta step must be positive");
    for (double b = start; b <= stop + 1e-12; b += step) cfg.betas.push_back(std::min(b, 1.0));
  }
  for (double b : cfg.betas)
    if (b < 0.0 || b > 1.0) fail(ErrorCode::ConfigInvalid, "beta values must lie in [0,1]");
  if (cfg.betas.empty()) fail(ErrorCode::ConfigInvalid, "empty beta sweep");

  if (j.contains("pso")) {
    const auto& s = j.at("pso");
    reject_unknown(s, {"particles", "iterations", "inertia", "cognitive", "social", "penalty_tau"},
                   "pso");
    cfg.pso.particles = s.value("particles", cfg.pso.particles);
    cfg.pso.iterations = s.value("iterations", cfg.pso.iterations);
    cfg.pso.inertia = s.value("inertia", cfg.pso.inertia);
    cfg.pso.cognitive = s.value("cognitive", cfg.pso.cognitive);
    cfg.pso.social = s.value("social", cfg.pso.social);
    cfg.pso.penalty = s.value("penalty_tau", cfg.pso.penalty);
    cfg.pso.validate();
  }

  cfg.taylor_order = j.value("taylor_order", 1);
  if (cfg.taylor_order != 1 && cfg.taylor_order != 2)
    fail(ErrorCode::ConfigInvalid, "taylor_order must be 1 or 2");
  cfg.baseline_uniform = j.value("baseline_uniform", false);
  cfg.record_timing = j.value("record_timing", false);
  cfg.threads = j.value("threads", 0);
  cfg.output_dir = j.value("output_dir", std::string("out"));
  return cfg;
}

ScenarioConfig ScenarioConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ConfigInvalid, "cannot open config file " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json_text(text);
}

UserSet drop_users(const SystemParams& params, int count, std::uint64_t seed, int drop) {
  Rng rng(derive_seed(seed, 0xd709, static_cast<std::uint64_t>(drop)));
  UserSet users;
  users.positions.reserve(count);
  for (int k = 0; k < count; ++k)
    users.positions.push_back(
        {rng.uniform(0.0, params.region_x), rng.uniform(0.0, params.region_y)});
  return users;
}

namespace {

struct ConvRow {
  int drop;
  double beta;
  int outer;
  double objective, tx_power, se, ee;
  int sca_iterations;
  double sca_residual;
  double pso_objective;
  int pso_sweeps;
};

struct LayoutRow {
  int drop;
  double beta;  // -1 for beta-independent layouts
  int m, n;
  double x, y;
};

struct DropOutput {
  std::vector<SweepRow> rows;
  std::vector<SweepRow> baseline_rows;
  std::vector<ConvRow> conv;
  std::vector<LayoutRow> layouts;
};

const char* regime_name(PowerRegime r) {
  return r == PowerRegime::BudgetLimited ? "budget-limited" : "interior-P**";
}

DropOutput run_single_drop(const ScenarioConfig& cfg, int drop) {
  DropOutput out;
  const UserSet users = cfg.explicit_users.empty()
                            ? drop_users(cfg.params, 1, cfg.seed, drop)
                            : UserSet{cfg.explicit_users};
  const UserPos user = users.positions[0];

  SystemParams params = cfg.params;
  PlacementResult placement;
  double zeta = 0.0;
  std::string place_error;
  try {
    placement = place_all_detailed(params, user);
    const ChannelState cs = build_channels(placement.layout(params), params, users);
    zeta = channel_gain_zeta(cs, params);
    for (int m = 0; m < params.num_waveguides; ++m)
      for (int n = 0; n < params.pas_per_waveguide; ++n)
        out.layouts.push_back({drop, -1.0, m, n, placement.x(n, m),
                               waveguide_positions(params)[m]});
  } catch (const Error& e) {
    place_error = e.what();
  }

  double zeta_uniform = 0.0;
  if (cfg.baseline_uniform && place_error.empty()) {
    const ChannelState cs = build_channels(uniform_layout(params), params, users);
    zeta_uniform = channel_gain_zeta(cs, params);
  }

  for (double beta : cfg.betas) {
    params.beta = beta;
    SweepRow row;
    row.seed = cfg.seed;
    row.drop = drop;
    row.beta = beta;
    const auto t0 = std::chrono::steady_clock::now();
    if (!place_error.empty()) {
      row.failed = true;
      row.error = place_error;
    } else {
      const OptimalPower p = optimal_power(zeta, params);
      const SeEe m = se_ee_single(params, zeta, p.power);
      row.se = m.se;
      row.ee = m.ee;
      row.power = p.power;
      row.regime = regime_name(p.regime);
      row.outer_iterations = 1;
      out.conv.push_back({drop, beta, 1, weighted_objective(beta, m), p.power, m.se, m.ee,
                          0, 0.0, 0.0, 0});
    }
    if (cfg.record_timing)
      row.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0).count();
    out.rows.push_back(row);

    if (cfg.baseline_uniform && place_error.empty()) {
      const OptimalPower p = optimal_power(zeta_uniform, params);
      const SeEe m = se_ee_single(params, zeta_uniform, p.power);
      SweepRow base = row;
      base.se = m.se;
      base.ee = m.ee;
      base.power = p.power;
      base.regime = regime_name(p.regime);
      base.wall_ms = 0.0;
      out.baseline_rows.push_back(base);
    }
  }
  return out;
}

DropOutput run_multi_drop(const ScenarioConfig& cfg, int drop) {
  DropOutput out;
  const UserSet users = cfg.explicit_users.empty()
                            ? drop_users(cfg.params, cfg.num_users, cfg.seed, drop)
                            : UserSet{cfg.explicit_users};
  SystemParams params = cfg.params;

  for (std::size_t bi = 0; bi < cfg.betas.size(); ++bi) {
    const double beta = cfg.betas[bi];
    params.beta = beta;
    SweepRow row;
    row.seed = cfg.seed;
    row.drop = drop;
    row.beta = beta;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      BcdOptions opt;
      opt.taylor_order = cfg.taylor_order;
      opt.pso = cfg.pso;
      opt.pso.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(drop), bi);
      const BcdResult res = bcd_solve(params, users, uniform_layout(params), opt);
      row.se = res.se;
      row.ee = res.ee;
      row.power = res.tx_power;
      row.regime = (res.tx_power >= params.budget * (1.0 - 1e-6)) ? "multi-budget-tight"
                                                                  : "multi-interior";
      row.outer_iterations = res.outer_iterations;
      for (const auto& r : res.trace.rows)
        out.conv.push_back({drop, beta, r.outer, r.objective, r.tx_power, r.se, r.ee,
                            r.sca_iterations, r.sca_residual, r.pso_objective, r.pso_sweeps});
      const Eigen::VectorXd y = waveguide_positions(params);
      for (int m = 0; m < params.num_waveguides; ++m)
        for (int n = 0; n < params.pas_per_waveguide; ++n)
          out.layouts.push_back({drop, beta, m, n, res.layout_x(n, m), y[m]});

      if (cfg.baseline_uniform) {
        const ChannelState cs = build_channels(uniform_layout(params), params, users);
        const Eigen::MatrixXcd Lambda = zf_lambda(cs.Psi);
        const ScaResult sca =
            sca_power(params, Lambda, Eigen::VectorXd(), cfg.taylor_order);
        const double tx = Lambda.diagonal().real().dot(sca.power);
        const SeEe m = se_ee_multi(params, sca.power, tx);
        SweepRow base = row;
        base.se = m.se;
        base.ee = m.ee;
        base.power = tx;
        base.regime = "uniform-baseline";
        base.outer_iterations = sca.iterations;
        base.wall_ms = 0.0;
        out.baseline_rows.push_back(base);
      }
    } catch (const Error& e) {
      row.failed = true;
      row.error = e.what();
    }
    if (cfg.record_timing)
      row.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0).count();
    out.rows.push_back(row);
  }
  return out;
}

void write_pareto(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
  std::ofstream f(path);
  f << "seed,drop,beta,se_bits_hz,ee_bits_hz_w,power_w,regime,outer_iterations,wall_ms,status\n";
  for (const auto& r : rows) {
    f << r.seed << ',' << r.drop << ',' << fmt(r.beta) << ',' << fmt(r.se) << ','
      << fmt(r.ee) << ',' << fmt(r.power) << ',' << (r.failed ? "failed" : r.regime) << ','
      << r.outer_iterations << ',' << fmt(r.wall_ms) << ','
      << (r.failed ? r.error : "ok") << '\n';
  }
}

}  // namespace

ScenarioOutcome run_scenario(const ScenarioConfig& config) {
  namespace fs = std::filesystem;
  fs::create_directories(config.output_dir);

  std::vector<DropOutput> outputs(config.drops);
  std::atomic<int> next{0};
  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  const int workers = std::max(1, std::min(config.drops,
                                           config.threads > 0 ? config.threads : hw));
  auto work = [&]() {
    for (;;) {
      const int drop = next.fetch_add(1);
      if (drop >= config.drops) return;
      outputs[drop] = (config.mode == ScenarioConfig::Mode::Single)
                          ? run_single_drop(config, drop)
                          : run_multi_drop(config, drop);
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  ScenarioOutcome outcome;
  std::vector<SweepRow> baseline;
  outcome.pareto_csv = config.output_dir / "pareto.csv";
  outcome.convergence_csv = config.output_dir / "convergence.csv";
  outcome.layout_csv = config.output_dir / "layout.csv";
  outcome.manifest = config.output_dir / "run_manifest.json";

  std::ofstream conv(outcome.convergence_csv);
  conv << "drop,beta,outer,objective,tx_power_w,se_bits_hz,ee_bits_hz_w,sca_iterations,"
          "sca_residual,pso_objective,pso_sweeps\n";
  std::ofstream lay(outcome.layout_csv);
  lay << "drop,beta,waveguide,pa,x_m,y_m\n";

  std::set<int> failed_drops;
  for (const auto& dropped : outputs) {
    for (const auto& r : dropped.rows) {
      outcome.rows.push_back(r);
      if (r.failed) failed_drops.insert(r.drop);
    }
    for (const auto& r : dropped.baseline_rows) baseline.push_back(r);
    for (const auto& c : dropped.conv)
      conv << c.drop << ',' << fmt(c.beta) << ',' << c.outer << ',' << fmt(c.objective)
           << ',' << fmt(c.tx_power) << ',' << fmt(c.se) << ',' << fmt(c.ee) << ','
           << c.sca_iterations << ',' << fmt(c.sca_residual) << ',' << fmt(c.pso_objective)
           << ',' << c.pso_sweeps << '\n';
    for (const auto& l : dropped.layouts)
      lay << l.drop << ',' << fmt(l.beta) << ',' << l.m << ',' << l.n << ',' << fmt(l.x)
          << ',' << fmt(l.y) << '\n';
  }
  outcome.failed_drops = static_cast<int>(failed_drops.size());
  write_pareto(outcome.pareto_csv, outcome.rows);
  if (config.baseline_uniform)
    write_pareto(config.output_dir / "baseline.csv", baseline);

  json manifest;
  manifest["version"] = kVersion;
  manifest["seed"] = config.seed;
  manifest["drops"] = config.drops;
  manifest["mode"] = config.mode == ScenarioConfig::Mode::Single ? "single" : "multi";
  manifest["betas"] = config.betas;
  manifest["taylor_order"] = config.taylor_order;
  manifest["pso"] = {{"particles", config.pso.particles},
                     {"iterations", config.pso.iterations},
                     {"inertia", config.pso.inertia},
                     {"cognitive", config.pso.cognitive},
                     {"social", config.pso.social},
                     {"penalty_tau", config.pso.penalty}};
  manifest["tolerances"] = {{"bcd_outer", 1e-6}, {"pso_sweep", 1e-6}, {"sca_inner", 1e-6},
                            {"root_bisection_rel", 1e-10}};
  manifest["params"] = {{"carrier_frequency_hz", config.params.carrier_frequency},
                        {"n_eff", config.params.n_eff},
                        {"noise_w", config.params.noise_power},
                        {"fixed_circuit_power_w", config.params.fixed_power},
                        {"rate_power_coeff", config.params.rate_power},
                        {"power_budget_w", config.params.budget},
                        {"sinr_threshold_linear", config.params.sinr_threshold},
                        {"min_spacing_m", config.params.min_spacing},
                        {"region_x_m", config.params.region_x},
                        {"region_y_m", config.params.region_y},
                        {"height_m", config.params.height},
                        {"waveguides", config.params.num_waveguides},
                        {"pas_per_waveguide", config.params.pas_per_waveguide}};
  manifest["failed_drops"] = outcome.failed_drops;
  manifest["notes"] = json::array(
      {"no conventional multi-antenna baseline: the comparison system lacks a channel "
       "model in this scope and is intentionally not reproduced"});
  std::ofstream(outcome.manifest) << manifest.dump(2) << '\n';
  return outcome;
}

std::string format_reports(const std::vector<OracleReport>& reports) {
  std::string out;
  for (const auto& r : reports) {
    out += r.passed ? "[PASS] " : "[FAIL] ";
    out += r.name + ": oracle=" + fmt(r.oracle_value) + " fast=" + fmt(r.fast_value) +
           " abs=" + fmt(r.abs_error) + " rel=" + fmt(r.rel_error) +
           " tol=" + fmt(r.tolerance) + " seed=" + std::to_string(r.seed);
    if (!r.note.empty()) out += " (" + r.note + ")";
    out += '\n';
  }
  return out;
}

}  // namespace pass
