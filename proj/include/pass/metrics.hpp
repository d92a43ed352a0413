#pragma once

// Spectral and energy efficiency metrics. EE divides the rate by the sum
// of transmit power, fixed circuit power and a rate-proportional
// coding/backhaul term.

#include "pass/channel.hpp"
#include "pass/types.hpp"

namespace pass {

struct SeEe {
  double se = 0.0;  // bit/s/Hz
  double ee = 0.0;  // (bit/s/Hz)/W
};

/// Received SNR of a single user under matched transmission at power P.
double snr_single(const SystemParams& params, const PinchLayout& layout,
                  const UserPos& user, double power);

/// SE/EE of the single-user link from the effective gain zeta and power P.
SeEe se_ee_single(const SystemParams& params, double zeta, double power);

/// SE/EE of the multi-user link. Under interference-free power control the
/// per-user SINR is P_k over the user's noise power; total transmit power
/// is supplied by the caller (it depends on the precoder coupling).
SeEe se_ee_multi(const SystemParams& params, const Eigen::VectorXd& power,
                 double total_tx_power);

/// Weighted tradeoff objective beta*ln(SE) + (1-beta)*ln(EE).
double weighted_objective(double beta, const SeEe& point);

}  // namespace pass
