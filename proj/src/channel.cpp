#include "pass/channel.hpp"

#include <cmath>

namespace pass {

namespace {

double freespace_distance(const PinchLayout& layout, const UserPos& user, int m, int n) {
  return std::hypot(user.x - layout.x()(n, m), user.y - layout.waveguide_y()[m],
                    layout.height());
}

}  // namespace

cxd inwaveguide_phase(const PinchLayout& layout, const SystemParams& params, int m, int n) {
  const double d_feed = layout.x()(n, m) - layout.feed_x();
  const double phase = 2.0 * kPi / params.guided_wavelength * d_feed;
  return std::polar(1.0, -phase);
}

cxd freespace_gain(const PinchLayout& layout, const SystemParams& params,
                   const UserPos& user, int m, int n) {
  const double d = freespace_distance(layout, user, m, n);
  const double phase = 2.0 * kPi / params.wavelength * d;
  return std::polar(std::sqrt(params.eta) / d, -phase);
}

double path_phase(const PinchLayout& layout, const SystemParams& params,
                  const UserPos& user, int m, int n) {
  const double d_free = freespace_distance(layout, user, m, n);
  const double d_feed = layout.x()(n, m) - layout.feed_x();
  return 2.0 * kPi * (d_free / params.wavelength + d_feed / params.guided_wavelength);
}

ChannelState build_channels(const PinchLayout& layout, const SystemParams& params,
                            const UserSet& users) {
  layout.validate();
  users.validate(params);
  const int M = layout.num_waveguides();
  const int N = layout.pas_per_waveguide();
  const int K = users.count();

  ChannelState cs;
  cs.G = Eigen::MatrixXcd::Zero(M * N, M);
  cs.H = Eigen::MatrixXcd::Zero(M * N, K);
  for (int m = 0; m < M; ++m) {
    for (int n = 0; n < N; ++n) {
      cs.G(m * N + n, m) = inwaveguide_phase(layout, params, m, n);
      // H holds the channel columns of the received-signal model, the
      // conjugates of the free-space row entries, so that Psi = G^H H
      // carries the full path phase of every PA with one sign.
      for (int k = 0; k < K; ++k)
        cs.H(m * N + n, k) = std::conj(freespace_gain(layout, params, users.positions[k], m, n));
    }
  }
  cs.Psi = cs.G.adjoint() * cs.H;
  return cs;
}

Eigen::VectorXcd waveguide_column(const SystemParams& params,
                                  const Eigen::VectorXd& x_column, double waveguide_y,
                                  const UserSet& users) {
  const int K = users.count();
  const double feed_x = -params.region_x / 2.0;
  Eigen::VectorXcd a = Eigen::VectorXcd::Zero(K);
  const double amp = std::sqrt(params.eta);
  for (int k = 0; k < K; ++k) {
    const auto& u = users.positions[k];
    cxd sum = 0.0;
    for (int n = 0; n < x_column.size(); ++n) {
      const double d = std::hypot(u.x - x_column[n], u.y - waveguide_y, params.height);
      const double phi = 2.0 * kPi * (d / params.wavelength +
                                      (x_column[n] - feed_x) / params.guided_wavelength);
      sum += std::polar(amp / d, -phi);
    }
    a[k] = sum;
  }
  return a;
}

double channel_gain_zeta(const ChannelState& channels, const SystemParams& params) {
  if (channels.Psi.cols() != 1)
    fail(ErrorCode::ConfigInvalid, "zeta is defined for a single user");
  return channels.Psi.col(0).squaredNorm() / params.noise_power;
}

}  // namespace pass
