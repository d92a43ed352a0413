#include "pass/zf.hpp"

#include <Eigen/SVD>

namespace pass {

Eigen::MatrixXcd zf_lambda(const Eigen::MatrixXcd& Psi, double* condition_number) {
  const int M = static_cast<int>(Psi.rows());
  const int K = static_cast<int>(Psi.cols());
  if (M < K) fail(ErrorCode::RankDeficient, "need at least as many waveguides as users");

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(Psi);
  const auto& sv = svd.singularValues();
  if (sv[K - 1] < 1e-12 * sv[0])
    fail(ErrorCode::RankDeficient, "aggregate channel matrix is rank deficient");
  if (condition_number) *condition_number = sv[0] / sv[K - 1];

  const Eigen::MatrixXcd gram = Psi.adjoint() * Psi;
  return gram.llt().solve(Eigen::MatrixXcd::Identity(K, K));
}

ZfState zf_build(const ChannelState& channels, const PowerAllocation& power) {
  ZfState zf;
  zf.Psi = channels.Psi;
  zf.Lambda = zf_lambda(zf.Psi, &zf.condition_number);
  const Eigen::VectorXcd root = power.p.cwiseSqrt().cast<cxd>();
  zf.W = zf.Psi * zf.Lambda * root.asDiagonal();
  return zf;
}

}  // namespace pass
