#pragma once

// Dense log-barrier interior-point solver for the per-iteration convex
// program of the multi-user power design: maximise mu1 + mu2 over
// (P, mu1, mu2, kappa) subject to the power budget, per-user SINR floors,
// the SE epigraph e^{mu1/beta} <= sum-rate, a quadratic upper bound
// U(mu2, kappa) <= sum-rate and the linearised power-plus-rate bound on
// kappa. Dimension is K + 3, so dense Newton steps are adequate.

#include "pass/types.hpp"

namespace pass {

struct SubproblemSpec {
  Eigen::MatrixXcd Lambda;   // K x K HPD power coupling
  Eigen::VectorXd sigma2;    // per-user noise power, W
  Eigen::VectorXd gamma_th;  // per-user SINR floor, linear
  double budget = 0.0;       // P_T, W
  double beta = 0.5;
  double fixed_power = 0.0;  // P_f, W
  double rate_power = 0.0;   // chi

  // Expansion point of the successive approximation.
  Eigen::VectorXd power_local;  // P^(l), strictly positive
  double mu2_local = 0.0;
  double kappa_local = 0.0;
  double delta = 0.0;  // curvature of the U bound; 0 selects the first-order bound

  int users() const { return static_cast<int>(sigma2.size()); }
};

enum class SolveStatus { Optimal, NumericalStall };

struct SubproblemSolution {
  Eigen::VectorXd power;
  double mu1 = 0.0;
  double mu2 = 0.0;
  double kappa = 0.0;
  double objective = 0.0;  // mu1 + mu2
  double kkt_residual = 0.0;
  SolveStatus status = SolveStatus::Optimal;
  int newton_steps = 0;
};

/// Optional instrumentation: barrier objective per Newton step, grouped by
/// centering stage.
struct BarrierTrace {
  struct Step {
    int stage;
    double t;
    double barrier_objective;
  };
  std::vector<Step> steps;
};

/// Solve the subproblem. Throws ErrorCode::Infeasible when the SINR floors
/// are incompatible with the budget.
SubproblemSolution solve_subproblem(const SubproblemSpec& spec,
                                    BarrierTrace* trace = nullptr);

/// Convex upper bound U(mu2, kappa) around the expansion point, exposed for
/// the bound-quality tests.
double taylor_upper_bound(const SubproblemSpec& spec, double mu2, double kappa);

/// Linearised rate bound g_k(P_k) at the expansion point.
double linearized_rate(const SubproblemSpec& spec, int k, double power);

/// Largest Hessian eigenvalue of u(mu2, kappa) = e^{mu2/(1-beta)} kappa at
/// the expansion point (closed form for the 2x2 Hessian).
double hessian_bound(double beta, double mu2_local, double kappa_local);

}  // namespace pass
