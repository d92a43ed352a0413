#include "pass/multi_user.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "pass/metrics.hpp"
#include "pass/rng.hpp"
#include "pass/zf.hpp"

namespace pass {

namespace {
constexpr double kLn2 = 0.6931471805599453;
}

TraceObjective::TraceObjective(const Eigen::MatrixXcd& psi_h_columns, int m,
                               const Eigen::VectorXd& power, double budget, double penalty)
    : columns_(psi_h_columns), m_(m), power_(power), budget_(budget), penalty_(penalty) {
  const int K = static_cast<int>(columns_.rows());
  const int M = static_cast<int>(columns_.cols());
  Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(K, K);
  for (int mm = 0; mm < M; ++mm) {
    if (mm == m_) continue;
    b.noalias() += columns_.col(mm) * columns_.col(mm).adjoint();
  }

  // B_m has full rank only when the other M-1 columns span C^K; with
  // M == K it is structurally singular and the direct route takes over.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(b);
  const double emin = es.eigenvalues().minCoeff();
  const double emax = es.eigenvalues().maxCoeff();
  if (M - 1 < K || emin < 1e-12 * std::max(emax, 1e-300)) {
    fallback_ = true;
    return;
  }
  b_inv_ = b.llt().solve(Eigen::MatrixXcd::Identity(K, K));
  b_inv_p_binv_ = b_inv_ * power_.asDiagonal().toDenseMatrix().cast<cxd>() * b_inv_;
  trace_binv_p_ = (b_inv_.diagonal().real().array() * power_.array()).sum();
}

TraceValue TraceObjective::eval(const Eigen::VectorXcd& a_candidate) const {
  TraceValue out;
  if (fallback_) {
    const int K = static_cast<int>(columns_.rows());
    Eigen::MatrixXcd gram = Eigen::MatrixXcd::Zero(K, K);
    for (int mm = 0; mm < columns_.cols(); ++mm) {
      const auto& col = (mm == m_) ? a_candidate : columns_.col(mm);
      gram.noalias() += col * col.adjoint();
    }
    const Eigen::MatrixXcd inv = gram.llt().solve(Eigen::MatrixXcd::Identity(K, K));
    out.trace = (inv.diagonal().real().array() * power_.array()).sum();
  } else {
    // tr((aa^H + B)^{-1} P) = tr(B^{-1}P) - a^H B^{-1} P B^{-1} a / (1 + a^H B^{-1} a)
    const std::complex<double> quad = a_candidate.dot(b_inv_p_binv_ * a_candidate);
    const std::complex<double> denom = a_candidate.dot(b_inv_ * a_candidate);
    out.trace = trace_binv_p_ - quad.real() / (1.0 + denom.real());
  }
  const double over = std::max(0.0, out.trace - budget_);
  out.penalized = out.trace + penalty_ * over * over;
  return out;
}

namespace {

/// One scalar PSO run over x in [lo, hi], seeded with the incumbent.
double pso_scalar(const PsoConfig& cfg, double lo, double hi, double incumbent,
                  Rng& rng, const std::function<double(double)>& objective) {
  const double width = hi - lo;
  const double vmax = 0.5 * width;

  struct Particle {
    double x, v, best_x, best_val;
  };
  std::vector<Particle> swarm(cfg.particles);
  double gbest_x = incumbent;
  double gbest_val = objective(incumbent);
  for (int i = 0; i < cfg.particles; ++i) {
    auto& p = swarm[i];
    p.x = (i == 0) ? incumbent : rng.uniform(lo, hi);
    p.v = (i == 0) ? 0.0 : rng.uniform(-vmax, vmax);
    p.best_x = p.x;
    p.best_val = (i == 0) ? gbest_val : objective(p.x);
    if (p.best_val < gbest_val) {
      gbest_val = p.best_val;
      gbest_x = p.best_x;
    }
  }

  for (int it = 0; it < cfg.iterations; ++it) {
    for (auto& p : swarm) {
      p.v = cfg.inertia * p.v + cfg.cognitive * rng.uniform() * (p.best_x - p.x) +
            cfg.social * rng.uniform() * (gbest_x - p.x);
      p.v = std::clamp(p.v, -vmax, vmax);
      p.x += p.v;
      // Reflect at the interval boundary.
      if (p.x < lo) p.x = std::min(hi, 2.0 * lo - p.x);
      if (p.x > hi) p.x = std::max(lo, 2.0 * hi - p.x);
      const double val = objective(p.x);
      if (val < p.best_val) {
        p.best_val = val;
        p.best_x = p.x;
      }
      if (val < gbest_val) {
        gbest_val = val;
        gbest_x = p.x;
      }
    }
  }
  return gbest_x;
}

}  // namespace

PinchLayout pso_optimize_pa(const SystemParams& params, const PinchLayout& layout,
                            const UserSet& users, const Eigen::VectorXd& power,
                            const PsoConfig& cfg, double eps_sweep, PsoDetail* detail) {
  cfg.validate();
  const int M = layout.num_waveguides();
  const int N = layout.pas_per_waveguide();
  const Eigen::VectorXd y = layout.waveguide_y();

  Eigen::MatrixXd x = layout.x();
  Eigen::MatrixXcd columns(users.count(), M);  // columns of Psi^H
  for (int m = 0; m < M; ++m)
    columns.col(m) = waveguide_column(params, x.col(m), y[m], users);

  auto penalized_now = [&]() {
    TraceObjective probe(columns, 0, power, params.budget, cfg.penalty);
    return probe.eval(columns.col(0)).penalized;
  };

  Rng rng(derive_seed(cfg.seed, 0x50));
  double incumbent_obj = penalized_now();
  int sweeps = 0;
  int fallbacks = 0;

  for (;; ++sweeps) {
    const double sweep_start_obj = incumbent_obj;
    for (int m = 0; m < M; ++m) {
      TraceObjective obj(columns, m, power, params.budget, cfg.penalty);
      if (obj.used_fallback()) ++fallbacks;
      for (int n = 0; n < N; ++n) {
        const double lo = std::max(0.0, (n > 0) ? x(n - 1, m) + params.min_spacing : 0.0);
        const double hi =
            std::min(params.region_x,
                     (n + 1 < N) ? x(n + 1, m) - params.min_spacing : params.region_x);
        if (lo > hi + 1e-12)
          fail(ErrorCode::EmptyFeasibleRange, "incumbent layout leaves no feasible range");

        Eigen::VectorXd column = x.col(m);
        auto eval_at = [&](double cand) {
          column[n] = cand;
          return obj.eval(waveguide_column(params, column, y[m], users)).penalized;
        };
        const double incumbent_x = x(n, m);
        const double winner = pso_scalar(cfg, lo, hi, incumbent_x, rng, eval_at);
        const double winner_obj = eval_at(winner);
        const double current_obj = eval_at(incumbent_x);
        if (winner_obj < current_obj) {
          x(n, m) = winner;
          column[n] = winner;
          columns.col(m) = waveguide_column(params, column, y[m], users);
          incumbent_obj = obj.eval(columns.col(m)).penalized;
        }
      }
    }
    if (sweep_start_obj - incumbent_obj <= eps_sweep * std::abs(sweep_start_obj)) break;
    if (sweeps >= 50) break;
  }

  if (detail) {
    detail->sweeps = sweeps + 1;
    detail->objective = incumbent_obj;
    detail->fallback_count = fallbacks;
  }
  return PinchLayout(std::move(x), y, params.height, params.region_x, params.min_spacing);
}

ScaResult sca_power(const SystemParams& params, const Eigen::MatrixXcd& Lambda,
                    const Eigen::VectorXd& warm_start, int taylor_order, double eps,
                    int max_iters) {
  const int K = static_cast<int>(Lambda.rows());
  const Eigen::VectorXd lambda = Lambda.diagonal().real();

  SubproblemSpec spec;
  spec.Lambda = Lambda;
  spec.sigma2.resize(K);
  spec.gamma_th.resize(K);
  for (int k = 0; k < K; ++k) {
    spec.sigma2[k] = params.noise_of(k);
    spec.gamma_th[k] = params.sinr_threshold_of(k);
  }
  spec.budget = params.budget;
  spec.beta = params.beta;
  spec.fixed_power = params.fixed_power;
  spec.rate_power = params.rate_power;

  // Feasibility gate: the SINR floors must fit into the budget.
  double floor_cost = 0.0;
  for (int k = 0; k < K; ++k) floor_cost += lambda[k] * spec.gamma_th[k] * spec.sigma2[k];
  if (floor_cost > params.budget)
    fail(ErrorCode::Infeasible, "QoS floors are incompatible with the power budget");

  // Expansion point: warm start pulled to the floors and budget.
  Eigen::VectorXd p = warm_start;
  if (p.size() != K) p = Eigen::VectorXd::Zero(K);
  for (int k = 0; k < K; ++k)
    p[k] = std::max(p[k], spec.gamma_th[k] * spec.sigma2[k] * (1.0 + 1e-9));
  const double use = lambda.dot(p);
  if (use > params.budget) {
    const double s = 0.999 * (params.budget - floor_cost) / (use - floor_cost);
    for (int k = 0; k < K; ++k) {
      const double fl = spec.gamma_th[k] * spec.sigma2[k];
      p[k] = fl + s * (p[k] - fl);
    }
  }

  ScaResult res;
  res.power = p;
  double prev_obj = -std::numeric_limits<double>::infinity();

  for (int l = 0; l < max_iters; ++l) {
    // Tight slack values at the expansion point.
    double se = 0.0;
    for (int k = 0; k < K; ++k) se += std::log1p(p[k] / spec.sigma2[k]) / kLn2;
    const double kappa = lambda.dot(p) + params.fixed_power + params.rate_power * se;
    spec.power_local = p;
    spec.kappa_local = kappa;
    spec.mu2_local = (params.beta < 1.0 - 1e-9)
                         ? (1.0 - params.beta) * std::log(se / kappa)
                         : 0.0;
    spec.delta = (taylor_order >= 2 && params.beta < 1.0 - 1e-9)
                     ? hessian_bound(params.beta, spec.mu2_local, spec.kappa_local)
                     : 0.0;

    const SubproblemSolution sol = solve_subproblem(spec);
    res.power = sol.power;
    res.mu1 = sol.mu1;
    res.mu2 = sol.mu2;
    res.kappa = sol.kappa;
    res.objective = sol.objective;
    res.kkt_residual = sol.kkt_residual;
    res.objective_trace.push_back(sol.objective);
    res.iterations = l + 1;

    if (sol.objective < prev_obj - 1e-9) res.nonmonotone = true;
    const double increase = sol.objective - prev_obj;
    p = sol.power;
    if (l > 0 && std::abs(increase) <= eps * std::max(1.0, std::abs(prev_obj))) break;
    prev_obj = sol.objective;
  }
  return res;
}

double multi_objective(const SystemParams& params, const Eigen::VectorXd& power,
                       double tx_power) {
  const SeEe m = se_ee_multi(params, power, tx_power);
  return weighted_objective(params.beta, m);
}

BcdResult bcd_solve(const SystemParams& params, const UserSet& users,
                    const PinchLayout& init_layout, const BcdOptions& options) {
  users.validate(params);
  if (init_layout.num_waveguides() < users.count())
    fail(ErrorCode::RankDeficient, "zero-forcing needs at least as many waveguides as users");

  BcdResult res;
  res.layout_x = init_layout.x();
  PinchLayout layout = init_layout;
  Eigen::MatrixXcd Lambda = zf_lambda(build_channels(layout, params, users).Psi);
  Eigen::VectorXd power;  // empty until the first power step

  double objective = -std::numeric_limits<double>::infinity();
  double prev_outer = -std::numeric_limits<double>::infinity();

  for (int q = 0; q < options.max_outer; ++q) {
    BcdIterRecord rec;
    rec.outer = q + 1;

    // Power block: accept only if the true objective does not decrease
    // (the first-order inner bound is not a majorant, so this guards the
    // monotone chain).
    const ScaResult sca = sca_power(params, Lambda, power, options.taylor_order,
                                    options.eps_sca);
    const Eigen::VectorXd lambda_diag = Lambda.diagonal().real();
    const double cand_obj = multi_objective(params, sca.power, lambda_diag.dot(sca.power));
    if (power.size() == 0 || cand_obj >= objective - 1e-12) {
      power = sca.power;
      objective = cand_obj;
    } else {
      rec.power_step_rejected = true;
    }
    rec.sca_iterations = sca.iterations;
    rec.sca_residual = sca.kkt_residual;
    rec.sca_nonmonotone = sca.nonmonotone;

    // Placement block: monotone by its acceptance rule.
    PsoConfig pso_cfg = options.pso;
    pso_cfg.seed = derive_seed(options.pso.seed, 0xb0d, static_cast<std::uint64_t>(q));
    PsoDetail pso_detail;
    layout = pso_optimize_pa(params, layout, users, power, pso_cfg, options.eps_pso,
                             &pso_detail);
    Lambda = zf_lambda(build_channels(layout, params, users).Psi);
    rec.pso_objective = pso_detail.objective;
    rec.pso_sweeps = pso_detail.sweeps;

    const double tx = Lambda.diagonal().real().dot(power);
    const double new_obj = multi_objective(params, power, tx);
    rec.objective = new_obj;
    rec.tx_power = tx;
    const SeEe m = se_ee_multi(params, power, tx);
    rec.se = m.se;
    rec.ee = m.ee;
    res.trace.rows.push_back(rec);
    res.outer_iterations = q + 1;

    objective = std::max(objective, new_obj);
    const double increase = objective - prev_outer;
    prev_outer = objective;
    if (q > 0 && std::abs(increase) <= options.eps_outer * std::max(1.0, std::abs(objective)))
      break;
  }

  // The loop ends on a placement block, which leaves budget slack behind;
  // re-optimise the power for the final layout so the returned operating
  // point is power-optimal for the returned positions.
  {
    const ScaResult polish = sca_power(params, Lambda, power, options.taylor_order,
                                       options.eps_sca);
    const double tx = Lambda.diagonal().real().dot(polish.power);
    const double polished_obj = multi_objective(params, polish.power, tx);
    if (polished_obj >= objective - 1e-12) {
      power = polish.power;
      objective = polished_obj;
    }
  }

  res.layout_x = layout.x();
  res.power = power;
  res.objective = objective;
  res.tx_power = Lambda.diagonal().real().dot(power);
  const SeEe m = se_ee_multi(params, power, res.tx_power);
  res.se = m.se;
  res.ee = m.ee;
  return res;
}

}  // namespace pass
