#include <cmath>

#include "pass/metrics.hpp"
#include "pass/rng.hpp"
#include "pass/scenario.hpp"
#include "pass/zf.hpp"

// Oracle cross-validation bundle behind `pass-tradeoff verify` and the
// acceptance suite's quick checks. Every check pairs a fast path with an
// independent reference and reports both values.

namespace pass {

namespace {

SystemParams bench_params() {
  SystemParams p;
  p.region_x = 30.0;
  p.region_y = 10.0;
  return p.finalize();
}

PinchLayout random_layout(const SystemParams& params, Rng& rng) {
  const int N = params.pas_per_waveguide;
  const int M = params.num_waveguides;
  Eigen::MatrixXd x(N, M);
  for (int m = 0; m < M; ++m) {
    double cursor = rng.uniform(0.0, params.region_x / 4.0);
    for (int n = 0; n < N; ++n) {
      x(n, m) = cursor;
      cursor += params.min_spacing * (1.0 + rng.uniform(0.0, 4.0));
    }
    const double overhang = x(N - 1, m) - params.region_x;
    if (overhang > 0.0) x.col(m).array() -= overhang;
  }
  return PinchLayout(std::move(x), waveguide_positions(params), params.height,
                     params.region_x, params.min_spacing);
}

void check_psi_routes(std::vector<OracleReport>& out, std::uint64_t seed) {
  const SystemParams params = bench_params();
  Rng rng(derive_seed(seed, 1));
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const PinchLayout layout = random_layout(params, rng);
    const UserSet users = drop_users(params, 3, seed, trial);
    const ChannelState cs = build_channels(layout, params, users);
    for (int m = 0; m < params.num_waveguides; ++m) {
      for (int k = 0; k < users.count(); ++k) {
        cxd sum = 0.0;
        for (int n = 0; n < params.pas_per_waveguide; ++n)
          sum += std::conj(inwaveguide_phase(layout, params, m, n)) *
                 std::conj(freespace_gain(layout, params, users.positions[k], m, n));
        worst = std::max(worst, std::abs(sum - cs.Psi(m, k)) / std::abs(sum));
      }
    }
  }
  out.push_back(OracleReport::compare("psi-two-routes-max-rel", 0.0, worst, 1e-12, false,
                                      seed, "matrix product vs per-column path sums"));
}

void check_zeta(std::vector<OracleReport>& out, std::uint64_t seed) {
  const SystemParams params = bench_params();
  Rng rng(derive_seed(seed, 2));
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const PinchLayout layout = random_layout(params, rng);
    const UserPos user = drop_users(params, 1, seed, 100 + trial).positions[0];
    const ChannelState cs = build_channels(layout, params, UserSet{{user}});
    const double fast = channel_gain_zeta(cs, params);
    const CoherenceStats st = coherence_stats(params, layout, user);
    const double oracle = params.eta * st.waveguide_norm2 / params.noise_power;
    worst = std::max(worst, std::abs(fast - oracle) / oracle);
  }
  out.push_back(OracleReport::compare("zeta-explicit-sum-max-rel", 0.0, worst, 1e-11,
                                      false, seed, "per-waveguide coherent combining"));
}

void check_icr_scan(std::vector<OracleReport>& out, std::uint64_t seed, int drops) {
  const SystemParams params = bench_params();
  double worst = 0.0;
  int count = 0;
  int max_k = 0;
  for (int d = 0; d < drops; ++d) {
    const UserPos user = drop_users(params, 1, seed, d).positions[0];
    const PlacementResult pr = place_all_detailed(params, user);
    max_k = std::max(max_k, pr.max_k);
    for (const auto& rec : pr.refinements) {
      const double scanned = phase_scan_oracle(rec.ctx, params, params.wavelength / 200.0,
                                               5.0 * params.guided_wavelength);
      worst = std::max(worst, std::abs(scanned - rec.result.delta));
      ++count;
    }
  }
  out.push_back(OracleReport::compare("icr-vs-phase-scan-max-abs", 0.0, worst,
                                      bench_params().wavelength / 100.0, false, seed,
                                      std::to_string(count) + " refinements, max k " +
                                          std::to_string(max_k)));
}

void check_power(std::vector<OracleReport>& out, std::uint64_t seed, int tuples,
                 int grid) {
  Rng rng(derive_seed(seed, 3));
  double worst_steps = 0.0;
  double worst_g2 = 0.0;
  for (int t = 0; t < tuples; ++t) {
    SystemParams params = bench_params();
    const double zeta = std::pow(10.0, rng.uniform(3.0, 9.0));
    params.budget = std::pow(10.0, rng.uniform(-2.0, 1.0));
    params.beta = rng.uniform();
    const double fast = optimal_power(zeta, params).power;
    const double oracle = grid_power_oracle(zeta, params, grid);
    const double step = (params.budget - kPowerFloor) / grid;
    worst_steps = std::max(worst_steps, std::abs(fast - oracle) / step);
    worst_g2 = std::max(worst_g2,
                        std::abs(g2_eval(zeta, params, ee_peak_power(zeta, params)) - 1.0));
  }
  out.push_back(OracleReport::compare("optimal-power-vs-grid-steps", 1.0, worst_steps, 1.0,
                                      false, seed, "worst distance in grid steps"));
  out.push_back(OracleReport::compare("g2-at-peak-minus-one", 0.0, worst_g2, 1e-8, false,
                                      seed));
}

void check_trace(std::vector<OracleReport>& out, std::uint64_t seed, int instances) {
  const SystemParams params = bench_params();
  Rng rng(derive_seed(seed, 4));
  double worst = 0.0;
  for (int t = 0; t < instances; ++t) {
    const int K = 2 + (t % 2);
    const PinchLayout layout = random_layout(params, rng);
    const UserSet users = drop_users(params, K, seed, 200 + t);
    const ChannelState cs = build_channels(layout, params, users);
    Eigen::VectorXd power(K);
    for (int k = 0; k < K; ++k) power[k] = std::pow(10.0, rng.uniform(-9.0, -5.0));

    Eigen::MatrixXcd columns(K, params.num_waveguides);
    for (int m = 0; m < params.num_waveguides; ++m)
      columns.col(m) = waveguide_column(params, layout.x().col(m), layout.waveguide_y()[m],
                                        users);
    const int m_probe = t % params.num_waveguides;
    TraceObjective obj(columns, m_probe, power, params.budget, 1e4);
    const double fast = obj.eval(columns.col(m_probe)).trace;
    const double oracle = direct_trace_oracle(cs.Psi, power);
    worst = std::max(worst, std::abs(fast - oracle) / std::abs(oracle));
  }
  out.push_back(OracleReport::compare("sherman-morrison-trace-max-rel", 0.0, worst, 1e-9,
                                      false, seed, std::to_string(instances) + " instances"));
}

void check_sinr(std::vector<OracleReport>& out, std::uint64_t seed) {
  const SystemParams params = bench_params();
  Rng rng(derive_seed(seed, 5));
  const PinchLayout layout = random_layout(params, rng);
  const UserSet users = drop_users(params, 2, seed, 777);
  const ChannelState cs = build_channels(layout, params, users);
  Eigen::VectorXd power(2);
  power << 2e-7, 5e-8;
  const ZfState zf = zf_build(cs, PowerAllocation{power});
  const Eigen::VectorXd sinr =
      sinr_simulation_oracle(params, layout, users, zf.W, 100000, derive_seed(seed, 6));
  double worst = 0.0;
  for (int k = 0; k < 2; ++k) {
    const double expect = power[k] / params.noise_of(k);
    worst = std::max(worst, std::abs(sinr[k] - expect) / expect);
  }
  out.push_back(OracleReport::compare("zf-sinr-simulation-max-rel", 0.0, worst, 2e-2,
                                      false, seed, "1e5 trials"));
}

void check_k1_consistency(std::vector<OracleReport>& out, std::uint64_t seed) {
  SystemParams params = bench_params();
  params.beta = 0.35;
  params.sinr_threshold = 1e-3;  // inactive floor for the comparison
  Rng rng(derive_seed(seed, 7));
  const PinchLayout layout = random_layout(params, rng);
  const UserPos user = drop_users(params, 1, seed, 901).positions[0];
  const ChannelState cs = build_channels(layout, params, UserSet{{user}});

  const Eigen::MatrixXcd Lambda = zf_lambda(cs.Psi);
  const ScaResult sca = sca_power(params, Lambda, Eigen::VectorXd());
  const double tx = Lambda(0, 0).real() * sca.power[0];
  const double multi_obj = multi_objective(params, sca.power, tx);

  const double zeta = 1.0 / (params.noise_power * Lambda(0, 0).real());
  const OptimalPower p = optimal_power(zeta, params);
  const double single_obj = power_objective(zeta, params, p.power);
  out.push_back(OracleReport::compare("k1-sca-vs-closed-form-objective", single_obj,
                                      multi_obj, 1e-4, true, seed));
}

void check_subproblem(std::vector<OracleReport>& out, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 8));
  double worst = 0.0;
  for (int t = 0; t < 5; ++t) {
    SubproblemSpec spec;
    const double l0 = std::pow(10.0, rng.uniform(5.0, 7.0));
    const double l1 = std::pow(10.0, rng.uniform(5.0, 7.0));
    spec.Lambda = Eigen::Vector2d(l0, l1).asDiagonal().toDenseMatrix().cast<cxd>();
    spec.sigma2 = Eigen::Vector2d::Constant(1e-12);
    spec.gamma_th = Eigen::Vector2d::Constant(3.98107170553497);
    spec.budget = 1.0;
    spec.beta = rng.uniform(0.1, 0.9);
    spec.fixed_power = 0.1;
    spec.rate_power = 0.1;
    spec.power_local = Eigen::Vector2d(0.2 / l0, 0.2 / l1);
    double se = 0.0;
    for (int k = 0; k < 2; ++k)
      se += std::log1p(spec.power_local[k] / spec.sigma2[k]) / 0.6931471805599453;
    spec.kappa_local = l0 * spec.power_local[0] + l1 * spec.power_local[1] +
                       spec.fixed_power + spec.rate_power * se;
    spec.mu2_local = (1.0 - spec.beta) * std::log(se / spec.kappa_local);
    spec.delta = (t % 2 == 0) ? 0.0
                              : hessian_bound(spec.beta, spec.mu2_local, spec.kappa_local);

    const SubproblemSolution sol = solve_subproblem(spec);
    const double oracle = subproblem_grid_oracle(spec, 200, 4);
    worst = std::max(worst, std::abs(sol.objective - oracle));
  }
  out.push_back(OracleReport::compare("subproblem-vs-grid-objective", 0.0, worst, 1e-6,
                                      false, seed, "zoomed 200x200 grid"));
}

void check_termination(std::vector<OracleReport>& out, std::uint64_t seed, int drops) {
  const SystemParams params = bench_params();
  int cap_hits = 0;
  int max_k = 0;
  for (int d = 0; d < drops; ++d) {
    const UserPos user = drop_users(params, 1, seed, d).positions[0];
    try {
      const PlacementResult pr = place_all_detailed(params, user);
      max_k = std::max(max_k, pr.max_k);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::KCapExceeded) ++cap_hits;
    }
  }
  out.push_back(OracleReport::compare("icr-termination-cap-hits", 0.0, cap_hits, 0.0,
                                      false, seed,
                                      std::to_string(drops) + " drops, empirical max k " +
                                          std::to_string(max_k)));
}

}  // namespace

std::vector<OracleReport> run_verify(VerifyLevel level, std::uint64_t seed) {
  std::vector<OracleReport> out;
  check_psi_routes(out, seed);
  check_zeta(out, seed);
  check_icr_scan(out, seed, level == VerifyLevel::Quick ? 25 : 200);
  check_power(out, seed, level == VerifyLevel::Quick ? 50 : 500,
              level == VerifyLevel::Quick ? 100000 : 1000000);
  check_trace(out, seed, level == VerifyLevel::Quick ? 50 : 500);
  check_sinr(out, seed);
  check_k1_consistency(out, seed);
  check_subproblem(out, seed);
  if (level == VerifyLevel::Full) check_termination(out, seed, 10000);
  return out;
}

}  // namespace pass
