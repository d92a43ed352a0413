#pragma once

// Zero-forcing precoding over the per-waveguide aggregate channel. With
// W = Psi (Psi^H Psi)^{-1} P^{1/2} every user sees an interference-free
// channel with SINR P_k / sigma_k^2 and the transmit power collapses to
// tr(Lambda P) with Lambda = (Psi^H Psi)^{-1}.

#include "pass/channel.hpp"
#include "pass/types.hpp"

namespace pass {

struct ZfState {
  Eigen::MatrixXcd Psi;     // M x K
  Eigen::MatrixXcd Lambda;  // K x K Hermitian positive definite
  Eigen::MatrixXcd W;       // M x K precoder
  double condition_number = 0.0;

  Eigen::VectorXd lambda_diag() const { return Lambda.diagonal().real(); }
  double total_power(const Eigen::VectorXd& power) const {
    return lambda_diag().dot(power);
  }
};

/// Power-coupling matrix Lambda from the aggregate channel. Throws
/// ErrorCode::RankDeficient when Psi loses column rank.
Eigen::MatrixXcd zf_lambda(const Eigen::MatrixXcd& Psi, double* condition_number = nullptr);

ZfState zf_build(const ChannelState& channels, const PowerAllocation& power);

}  // namespace pass
