#pragma once

// End-to-end channel construction. A signal travels through the feed
// waveguide (pure phase shift at guided wavelength) and is radiated by
// each PA into free space (spherical spreading at the carrier
// wavelength). The per-waveguide aggregate matrix Psi = G^H H drives
// every beamforming design in this project.

#include "pass/types.hpp"

namespace pass {

/// Derived channel matrices for one layout / user set.
struct ChannelState {
  Eigen::MatrixXcd G;    // MN x M block diagonal, unit-modulus entries
  Eigen::MatrixXcd H;    // MN x K free-space channel columns
  Eigen::MatrixXcd Psi;  // M x K, Psi = G^H H
};

/// In-waveguide phase shift of PA (m, n): exp(-j 2pi/lambda_g * d_feed),
/// where d_feed = x_pa + D_x/2 (feed and PA share y and height).
cxd inwaveguide_phase(const PinchLayout& layout, const SystemParams& params, int m, int n);

/// Free-space coefficient from PA (m, n) to a user:
/// sqrt(eta) * exp(-j 2pi/lambda * d) / d.
cxd freespace_gain(const PinchLayout& layout, const SystemParams& params,
                   const UserPos& user, int m, int n);

/// Total propagation phase of the path through PA (m, n): carrier phase
/// over the free-space distance plus guided phase over the in-waveguide
/// distance.
double path_phase(const PinchLayout& layout, const SystemParams& params,
                  const UserPos& user, int m, int n);

/// Build G, H and Psi for the given layout and users. Throws
/// ErrorCode::LayoutInvalid if the layout violates its constraints.
ChannelState build_channels(const PinchLayout& layout, const SystemParams& params,
                            const UserSet& users);

/// Aggregate coefficient of one waveguide towards each user for a candidate
/// x-column: entry k equals sum_n sqrt(eta) e^{-j phi_{m,n,k}} / d_{m,n,k}.
/// This is the m-th column of Psi^H; rebuilding it is all the PA placement
/// search needs when it moves PAs on a single waveguide.
Eigen::VectorXcd waveguide_column(const SystemParams& params,
                                  const Eigen::VectorXd& x_column, double waveguide_y,
                                  const UserSet& users);

/// Effective channel gain over noise for a single user: zeta such that the
/// received SNR equals P * zeta under matched (MRT) transmission.
double channel_gain_zeta(const ChannelState& channels, const SystemParams& params);

}  // namespace pass
