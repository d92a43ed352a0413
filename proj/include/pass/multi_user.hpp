#pragma once

// Multi-user alternating design: zero-forcing power allocation solved by
// successive convex approximation, alternating with element-wise PSO over
// PA positions. The placement objective tr((Psi^H Psi)^{-1} P) is
// evaluated per candidate through a rank-one (Sherman-Morrison) update so
// the K x K inverse of the other waveguides is formed once per sweep.

#include "pass/channel.hpp"
#include "pass/convex_kernel.hpp"
#include "pass/types.hpp"

namespace pass {

struct PsoConfig {
  int particles = 30;
  int iterations = 300;
  double inertia = 0.7298;
  double cognitive = 1.4962;
  double social = 1.4962;
  double penalty = 1e4;  // tau on the squared budget overshoot
  std::uint64_t seed = 1;

  void validate() const {
    if (particles < 1 || iterations < 1) fail(ErrorCode::ConfigInvalid, "PSO needs particles and iterations");
    if (inertia <= 0.0 || inertia >= 1.0) fail(ErrorCode::ConfigInvalid, "PSO inertia must lie in (0,1)");
    if (penalty <= 0.0) fail(ErrorCode::ConfigInvalid, "penalty coefficient must be positive");
  }
};

struct TraceValue {
  double trace = 0.0;      // tr((Psi^H Psi)^{-1} P)
  double penalized = 0.0;  // trace + tau ([trace - P_T]^+)^2
};

/// Evaluates the placement objective for candidate columns of one
/// waveguide. Precomputes the inverse of B_m = sum_{m' != m} a_m' a_m'^H
/// once; falls back to direct inversion per candidate when B_m is
/// singular (M == K).
class TraceObjective {
 public:
  TraceObjective(const Eigen::MatrixXcd& psi_h_columns, int m,
                 const Eigen::VectorXd& power, double budget, double penalty);

  /// Objective for a replacement column a_m.
  TraceValue eval(const Eigen::VectorXcd& a_candidate) const;

  bool used_fallback() const { return fallback_; }

 private:
  Eigen::MatrixXcd columns_;  // K x M, columns of Psi^H
  int m_;
  Eigen::VectorXd power_;
  double budget_;
  double penalty_;
  bool fallback_ = false;
  Eigen::MatrixXcd b_inv_;        // K x K
  Eigen::MatrixXcd b_inv_p_binv_;  // B^{-1} P B^{-1}
  double trace_binv_p_ = 0.0;
};

struct PsoDetail {
  int sweeps = 0;
  double objective = 0.0;  // penalized objective of the accepted layout
  int fallback_count = 0;
};

/// Element-wise PSO over all PA coordinates at fixed power control.
/// Monotone by construction: a candidate is adopted only if it strictly
/// lowers the penalized objective.
PinchLayout pso_optimize_pa(const SystemParams& params, const PinchLayout& layout,
                            const UserSet& users, const Eigen::VectorXd& power,
                            const PsoConfig& cfg, double eps_sweep = 1e-6,
                            PsoDetail* detail = nullptr);

struct ScaResult {
  Eigen::VectorXd power;
  double mu1 = 0.0;
  double mu2 = 0.0;
  double kappa = 0.0;
  double objective = 0.0;  // mu1 + mu2 at the last iterate
  int iterations = 0;
  bool nonmonotone = false;
  double kkt_residual = 0.0;
  std::vector<double> objective_trace;
};

/// Successive convex approximation for the power control matrix at fixed
/// placement. taylor_order 1 uses the first-order bound on
/// e^{mu2/(1-beta)} kappa, order 2 adds the max-eigenvalue curvature term.
ScaResult sca_power(const SystemParams& params, const Eigen::MatrixXcd& Lambda,
                    const Eigen::VectorXd& warm_start, int taylor_order = 1,
                    double eps = 1e-6, int max_iters = 2000);

struct BcdOptions {
  double eps_outer = 1e-6;
  double eps_pso = 1e-6;
  double eps_sca = 1e-6;
  int max_outer = 50;
  int taylor_order = 1;
  PsoConfig pso;
};

struct BcdIterRecord {
  int outer = 0;
  double objective = 0.0;
  double tx_power = 0.0;
  double se = 0.0;
  double ee = 0.0;
  int sca_iterations = 0;
  double sca_residual = 0.0;
  bool sca_nonmonotone = false;
  bool power_step_rejected = false;
  double pso_objective = 0.0;
  int pso_sweeps = 0;
};

struct BcdTrace {
  std::vector<BcdIterRecord> rows;
};

struct BcdResult {
  Eigen::MatrixXd layout_x;
  Eigen::VectorXd power;
  BcdTrace trace;
  double objective = 0.0;
  double se = 0.0;
  double ee = 0.0;
  double tx_power = 0.0;
  int outer_iterations = 0;

  PinchLayout layout(const SystemParams& params) const {
    return PinchLayout(layout_x, waveguide_positions(params), params.height,
                       params.region_x, params.min_spacing);
  }
};

/// Block-coordinate descent alternating power allocation and placement.
/// Throws ErrorCode::Infeasible if the SINR floors exceed the budget at
/// the initial placement.
BcdResult bcd_solve(const SystemParams& params, const UserSet& users,
                    const PinchLayout& init_layout, const BcdOptions& options = {});

/// Weighted objective of a multi-user operating point.
double multi_objective(const SystemParams& params, const Eigen::VectorXd& power,
                       double tx_power);

}  // namespace pass
