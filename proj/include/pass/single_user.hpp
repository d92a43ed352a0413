#pragma once

// Two-stage single-user design. Stage one places the PAs: a coarse comb
// centred on the user maximises the sum of reciprocal distances, then an
// iterative closed-form refinement (ICR) nudges each PA so that all
// received paths arrive phase-aligned. Stage two picks the transmit
// power in closed form from the tradeoff weight beta.

#include "pass/types.hpp"

namespace pass {

enum class IcrCase {
  PositiveX,       // refine against the already-refined left neighbour
  NegativeX,       // refine against the already-refined right neighbour
  CrossWaveguide,  // align a waveguide's central PA with the reference PA
};

/// Inputs of one refinement step. anchor_position is the already-refined
/// neighbour (or reference) PA; anchor_x is the unrefined x-coordinate the
/// offset is measured from, kept separate because the alignment equation
/// mixes both.
struct IcrContext {
  Eigen::Vector3d anchor_position = Eigen::Vector3d::Zero();
  double anchor_x = 0.0;
  UserPos user;
  double waveguide_y = 0.0;  // waveguide hosting the PA being refined
  IcrCase direction = IcrCase::PositiveX;
  int k_cap = 10000;
};

/// Coefficients of the alignment quadratic a*d'^2 + b*d' + c = 0 for a
/// given phase-wrap index k. In every case a = 1 - n_eff^2.
struct QuadraticCoeffs {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double range_term = 0.0;  // T such that the residual root test is T -/+ n_eff*d' >= 0
};

QuadraticCoeffs icr_quadratic(const IcrContext& ctx, const SystemParams& params, int k);

struct IcrResult {
  double delta = 0.0;  // offset from the case's base coordinate, >= 0
  int k = 0;           // smallest phase-wrap index admitting a valid root
};

/// Solve the alignment equation for the smallest valid offset, escalating
/// the phase-wrap index from 1. Throws ErrorCode::KCapExceeded if no valid
/// root is found below the cap.
IcrResult icr_refine(const IcrContext& ctx, const SystemParams& params);

/// New x-coordinate implied by an offset for the given refinement case.
double icr_refined_x(const IcrContext& ctx, const SystemParams& params, double delta);

/// Coarse comb: N PAs per waveguide at minimum spacing, centred on the
/// user's x, shifted minimally into [0, D_x] if the comb overhangs.
PinchLayout coarse_placement(const SystemParams& params, const UserPos& user);

struct RefinementRecord {
  IcrContext ctx;
  IcrResult result;
  int m = 0;
  int n = 0;
  bool clamped = false;  // refined position hit the region boundary
  double x_after = 0.0;
};

struct PlacementResult {
  Eigen::MatrixXd x;  // refined coordinates, N x M
  std::vector<RefinementRecord> refinements;
  int reference_waveguide = 0;
  int reference_index = 0;
  int clamp_count = 0;
  double comb_shift = 0.0;
  int max_k = 0;

  PinchLayout layout(const SystemParams& params) const;
};

/// Full placement pass: coarse comb plus ICR over all waveguides, with
/// per-refinement records for diagnostics and cross-validation.
PlacementResult place_all_detailed(const SystemParams& params, const UserPos& user);

PinchLayout place_all(const SystemParams& params, const UserPos& user);

/// Unique EE-maximising power P*, the root of
/// zeta*(P + P_f) = (1 + zeta*P) ln(1 + zeta*P).
double ee_peak_power(double zeta, const SystemParams& params);

/// Normalised tradeoff slope g2(P); equals 1 at P* and decreases towards
/// the budget, so the interior optimum solves g2(P) = 1 - beta.
double g2_eval(double zeta, const SystemParams& params, double power);

enum class PowerRegime {
  BudgetLimited,  // optimum sits at the power budget
  Interior,       // optimum is the interior root P** of g2 = 1 - beta
};

struct OptimalPower {
  double power = 0.0;
  PowerRegime regime = PowerRegime::BudgetLimited;
};

OptimalPower optimal_power(double zeta, const SystemParams& params);

/// Weighted objective of the power subproblem at power P (natural-log
/// scale).
double power_objective(double zeta, const SystemParams& params, double power);

struct SingleUserSolution {
  PlacementResult placement;
  double zeta = 0.0;
  double power = 0.0;
  double se = 0.0;
  double ee = 0.0;
  PowerRegime regime = PowerRegime::BudgetLimited;
};

SingleUserSolution solve_single_user(const SystemParams& params, const UserPos& user);

/// Baseline layout: N PAs per waveguide spread evenly across [0, D_x].
PinchLayout uniform_layout(const SystemParams& params);

}  // namespace pass
