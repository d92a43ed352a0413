#include "pass/metrics.hpp"

#include <cmath>

namespace pass {

namespace {
constexpr double kLn2 = 0.6931471805599453;
}

double snr_single(const SystemParams& params, const PinchLayout& layout,
                  const UserPos& user, double power) {
  if (power < 0) fail(ErrorCode::ConfigInvalid, "transmit power must be nonnegative");
  UserSet users{{user}};
  const ChannelState cs = build_channels(layout, params, users);
  return power * channel_gain_zeta(cs, params);
}

SeEe se_ee_single(const SystemParams& params, double zeta, double power) {
  SeEe out;
  out.se = std::log1p(zeta * power) / kLn2;
  const double denom = power + params.fixed_power + params.rate_power * out.se;
  out.ee = (out.se > 0.0) ? out.se / denom : 0.0;
  return out;
}

SeEe se_ee_multi(const SystemParams& params, const Eigen::VectorXd& power,
                 double total_tx_power) {
  SeEe out;
  for (int k = 0; k < power.size(); ++k) {
    if (power[k] < 0) fail(ErrorCode::ConfigInvalid, "per-user power must be nonnegative");
    out.se += std::log1p(power[k] / params.noise_of(k)) / kLn2;
  }
  const double denom = total_tx_power + params.fixed_power + params.rate_power * out.se;
  out.ee = (out.se > 0.0) ? out.se / denom : 0.0;
  return out;
}

double weighted_objective(double beta, const SeEe& point) {
  return beta * std::log(point.se) + (1.0 - beta) * std::log(point.ee);
}

}  // namespace pass
