#pragma once

// Independent brute-force references used by the test and verify suites.
// Deliberately simple and slow: dense scans, grids and hand-rolled
// elimination instead of the closed forms and library routines they
// cross-validate.

#include "pass/convex_kernel.hpp"
#include "pass/single_user.hpp"
#include "pass/types.hpp"

namespace pass {

struct OracleReport {
  std::string name;
  double oracle_value = 0.0;
  double fast_value = 0.0;
  double abs_error = 0.0;
  double rel_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::uint64_t seed = 0;
  std::string note;

  static OracleReport compare(std::string name, double oracle, double fast,
                              double tolerance, bool relative, std::uint64_t seed,
                              std::string note = {});
};

/// Argmax of the weighted power objective over a uniform grid on
/// (power floor, P_T].
double grid_power_oracle(double zeta, const SystemParams& params, int grid_size);

/// Smallest offset at which the phase-alignment residual reaches the first
/// admissible full turn: dense scan with the given step, then bisection.
/// Throws ErrorCode::NoZeroInRange if no crossing lies within range.
double phase_scan_oracle(const IcrContext& ctx, const SystemParams& params,
                         double step, double range);

/// Alignment residual (radians) at a given offset, evaluated from the raw
/// geometry rather than the quadratic closed form.
double phase_residual(const IcrContext& ctx, const SystemParams& params, double delta);

/// tr((Psi^H Psi)^{-1} P) via hand-rolled Gauss-Jordan elimination.
double direct_trace_oracle(const Eigen::MatrixXcd& Psi, const Eigen::VectorXd& power);

/// Hand-rolled complex matrix inverse (partial pivoting); exposed for the
/// rank-one-update identity checks.
Eigen::MatrixXcd gauss_jordan_inverse(Eigen::MatrixXcd a);

/// Monte Carlo SINR measurement: random unit-power symbols plus AWGN
/// through an explicitly simulated received signal for each user.
Eigen::VectorXd sinr_simulation_oracle(const SystemParams& params,
                                       const PinchLayout& layout, const UserSet& users,
                                       const Eigen::MatrixXcd& W, int trials,
                                       std::uint64_t seed);

/// Exhaustive zoomed grid search over the two-user power box of the convex
/// subproblem, with the slack variables set tight in closed form. Returns
/// the best objective found.
double subproblem_grid_oracle(const SubproblemSpec& spec, int grid_per_dim,
                              int zoom_rounds);

/// Coherent received magnitude sum_m |sum_n e^{-j phi}/d| statistics used
/// by the placement tests: returns {sum of reciprocal distances,
/// coherent magnitude, norm of per-waveguide coherent sums}.
struct CoherenceStats {
  double reciprocal_sum = 0.0;   // sum_{m,n} 1/d
  double coherent_mag = 0.0;     // |sum_{m,n} e^{-j phi}/d|
  double waveguide_norm2 = 0.0;  // sum_m |sum_n e^{-j phi}/d|^2
};
CoherenceStats coherence_stats(const SystemParams& params, const PinchLayout& layout,
                               const UserPos& user);

}  // namespace pass
