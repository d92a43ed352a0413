#include <doctest.h>

#include <cmath>

#include "pass/channel.hpp"
#include "pass/metrics.hpp"
#include "pass/rng.hpp"
#include "pass/types.hpp"

using namespace pass;

namespace {

SystemParams make_params(double region_x = 30.0) {
  SystemParams p;
  p.region_x = region_x;
  return p.finalize();
}

PinchLayout single_pa_layout(const SystemParams& p, double x) {
  Eigen::MatrixXd coords(1, 1);
  coords(0, 0) = x;
  Eigen::VectorXd y(1);
  y << p.region_y / 2.0;
  return PinchLayout(std::move(coords), std::move(y), p.height, p.region_x, p.min_spacing);
}

PinchLayout random_layout(const SystemParams& p, Rng& rng) {
  Eigen::MatrixXd x(p.pas_per_waveguide, p.num_waveguides);
  for (int m = 0; m < p.num_waveguides; ++m) {
    double cursor = rng.uniform(0.0, p.region_x / 3.0);
    for (int n = 0; n < p.pas_per_waveguide; ++n) {
      x(n, m) = cursor;
      cursor += p.min_spacing * rng.uniform(1.0, 4.0);
    }
    if (x(p.pas_per_waveguide - 1, m) > p.region_x)
      x.col(m).array() -= x(p.pas_per_waveguide - 1, m) - p.region_x;
  }
  return PinchLayout(std::move(x), waveguide_positions(p), p.height, p.region_x,
                     p.min_spacing);
}

}  // namespace

TEST_CASE("derived constants at 28 GHz") {
  const SystemParams p = make_params();
  CHECK(p.wavelength == doctest::Approx(0.0107069).epsilon(1e-5));
  CHECK(p.eta == doctest::Approx(7.26e-7).epsilon(1e-2));
  CHECK(p.guided_wavelength == doctest::Approx(p.wavelength / 1.4).epsilon(1e-12));
}

TEST_CASE("in-waveguide phase periodicity") {
  SystemParams p;
  p.region_x = 0.05;
  p.finalize();

  // Feed distance is x + D_x/2; a whole number of guided wavelengths is a
  // full cycle.
  const double turns = std::ceil(p.region_x / 2.0 / p.guided_wavelength);
  const double full = turns * p.guided_wavelength - p.region_x / 2.0;
  PinchLayout cycle = single_pa_layout(p, full);
  const cxd g = inwaveguide_phase(cycle, p, 0, 0);
  CHECK(g.real() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(g.imag()) < 1e-9);

  const double half = (turns + 0.5) * p.guided_wavelength - p.region_x / 2.0;
  PinchLayout half_cycle = single_pa_layout(p, half);
  const cxd gh = inwaveguide_phase(half_cycle, p, 0, 0);
  CHECK(gh.real() == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(std::abs(gh.imag()) < 1e-9);
}

TEST_CASE("free-space gain follows the reciprocal distance law") {
  const SystemParams p = make_params();
  PinchLayout layout = single_pa_layout(p, 10.0);
  const UserPos below{10.0, p.region_y / 2.0};
  CHECK(std::abs(freespace_gain(layout, p, below, 0, 0)) ==
        doctest::Approx(std::sqrt(p.eta) / 3.0).epsilon(1e-12));

  // sqrt(4^2 + 3^2) = 5 and sqrt(91 + 9) = 10: doubling distance halves it.
  const UserPos near{14.0, p.region_y / 2.0};
  const UserPos far{10.0 + std::sqrt(91.0), p.region_y / 2.0};
  CHECK(std::abs(freespace_gain(layout, p, near, 0, 0)) ==
        doctest::Approx(2.0 * std::abs(freespace_gain(layout, p, far, 0, 0))).epsilon(1e-12));
}

TEST_CASE("channel matrices: unit modulus, magnitudes and phases") {
  const SystemParams p = make_params();
  Rng rng(42);
  for (int trial = 0; trial < 10; ++trial) {
    const PinchLayout layout = random_layout(p, rng);
    UserSet users;
    for (int k = 0; k < 3; ++k)
      users.positions.push_back({rng.uniform(0.0, p.region_x), rng.uniform(0.0, p.region_y)});
    const ChannelState cs = build_channels(layout, p, users);

    for (int m = 0; m < p.num_waveguides; ++m)
      for (int n = 0; n < p.pas_per_waveguide; ++n)
        CHECK(std::abs(std::abs(cs.G(m * p.pas_per_waveguide + n, m)) - 1.0) < 1e-12);

    for (int m = 0; m < p.num_waveguides; ++m) {
      for (int n = 0; n < p.pas_per_waveguide; ++n) {
        for (int k = 0; k < users.count(); ++k) {
          const auto& u = users.positions[k];
          const double d = std::hypot(u.x - layout.x()(n, m), u.y - layout.waveguide_y()[m],
                                      layout.height());
          const cxd entry = cs.H(m * p.pas_per_waveguide + n, k);
          CHECK(std::abs(entry) * d == doctest::Approx(std::sqrt(p.eta)).epsilon(1e-12));
          // Carrier phase over the free-space distance, up to whole turns.
          const double want = 2.0 * kPi * d / p.wavelength;
          CHECK(std::abs(std::remainder(std::arg(entry) - want, 2.0 * kPi)) < 1e-9);
        }
      }
    }

    // Psi against the literal matrix product.
    const Eigen::MatrixXcd product = cs.G.adjoint() * cs.H;
    CHECK((cs.Psi - product).norm() <= 1e-12 * product.norm());
  }
}

TEST_CASE("psi columns track the user ordering") {
  const SystemParams p = make_params();
  Rng rng(7);
  const PinchLayout layout = random_layout(p, rng);
  UserSet users{{{3.0, 1.0}, {12.0, 8.0}, {25.0, 4.0}}};
  UserSet swapped{{users.positions[2], users.positions[0], users.positions[1]}};
  const ChannelState a = build_channels(layout, p, users);
  const ChannelState b = build_channels(layout, p, swapped);
  CHECK((a.Psi.col(0) - b.Psi.col(1)).norm() == 0.0);
  CHECK((a.Psi.col(2) - b.Psi.col(0)).norm() == 0.0);
}

TEST_CASE("single-path channel magnitude") {
  SystemParams p;
  p.num_waveguides = 1;
  p.pas_per_waveguide = 1;
  p.region_x = 30.0;
  p.finalize();
  const PinchLayout layout = single_pa_layout(p, 4.0);
  const UserPos user{7.0, 9.0};
  const ChannelState cs = build_channels(layout, p, UserSet{{user}});
  REQUIRE(cs.Psi.rows() == 1);
  const double d = std::hypot(user.x - 4.0, user.y - p.region_y / 2.0, p.height);
  CHECK(std::abs(cs.Psi(0, 0)) == doctest::Approx(std::sqrt(p.eta) / d).epsilon(1e-12));
}

TEST_CASE("layout constructor rejects bad geometries") {
  const SystemParams p = make_params();
  Eigen::VectorXd y(1);
  y << 5.0;
  Eigen::MatrixXd tight(2, 1);
  tight << 1.0, 1.0 + p.min_spacing / 2.0;
  CHECK_THROWS_AS(PinchLayout(tight, y, p.height, p.region_x, p.min_spacing), Error);

  Eigen::MatrixXd outside(1, 1);
  outside << p.region_x + 1.0;
  CHECK_THROWS_AS(PinchLayout(outside, y, p.height, p.region_x, p.min_spacing), Error);

  // Columns are sorted on construction.
  Eigen::MatrixXd unsorted(2, 1);
  unsorted << 5.0, 1.0;
  const PinchLayout sorted(unsorted, y, p.height, p.region_x, p.min_spacing);
  CHECK(sorted.x()(0, 0) == 1.0);
  CHECK(sorted.x()(1, 0) == 5.0);
}

TEST_CASE("snr is linear in transmit power") {
  const SystemParams p = make_params();
  Rng rng(9);
  const PinchLayout layout = random_layout(p, rng);
  const UserPos user{11.0, 4.0};
  CHECK(snr_single(p, layout, user, 0.0) == 0.0);
  const double g1 = snr_single(p, layout, user, 0.25);
  const double g2 = snr_single(p, layout, user, 0.5);
  CHECK(g2 == doctest::Approx(2.0 * g1).epsilon(1e-12));
}

TEST_CASE("single-user SE/EE identities") {
  SystemParams p = make_params();
  const SeEe zero = se_ee_single(p, 1e6, 0.0);
  CHECK(zero.se == 0.0);
  CHECK(zero.ee == 0.0);

  Rng rng(13);
  for (int t = 0; t < 50; ++t) {
    const double zeta = std::pow(10.0, rng.uniform(2.0, 8.0));
    const double power = std::pow(10.0, rng.uniform(-4.0, 1.0));
    const SeEe m = se_ee_single(p, zeta, power);
    CHECK(m.ee * (power + p.fixed_power + p.rate_power * m.se) ==
          doctest::Approx(m.se).epsilon(1e-12));
  }

  // chi = 0 with dominant fixed power: EE collapses to SE / P_f.
  SystemParams heavy = make_params();
  heavy.rate_power = 0.0;
  heavy.fixed_power = 1e6;
  const SeEe m = se_ee_single(heavy, 1e5, 0.01);
  CHECK(m.ee == doctest::Approx(m.se / (1e6 + 0.01)).epsilon(1e-12));
}

TEST_CASE("multi-user SE adds over users and matches the single-user form at K=1") {
  SystemParams p = make_params();
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);
  CHECK(se_ee_multi(p, zero, 0.0).se == 0.0);

  Eigen::VectorXd pk(2);
  pk << 3e-7, 3e-7;
  const double se2 = se_ee_multi(p, pk, 0.5).se;
  Eigen::VectorXd pk4(4);
  pk4 << 3e-7, 3e-7, 3e-7, 3e-7;
  CHECK(se_ee_multi(p, pk4, 0.5).se == doctest::Approx(2.0 * se2).epsilon(1e-12));

  // K = 1 reduction: same SE and EE after the change of power variable.
  const double lambda11 = 2.7e5;
  Eigen::VectorXd single_entry(1);
  single_entry << 4e-7;
  const double tx = lambda11 * single_entry[0];
  const SeEe multi = se_ee_multi(p, single_entry, tx);
  const double zeta = 1.0 / (p.noise_power * lambda11);
  const SeEe single = se_ee_single(p, zeta, tx);
  CHECK(multi.se == doctest::Approx(single.se).epsilon(1e-12));
  CHECK(multi.ee == doctest::Approx(single.ee).epsilon(1e-12));
}

TEST_CASE("matched transmission: vector and scalar rate forms agree") {
  const SystemParams p = make_params();
  Rng rng(201);
  for (int t = 0; t < 10; ++t) {
    const PinchLayout layout = random_layout(p, rng);
    const UserPos user{rng.uniform(0.0, p.region_x), rng.uniform(0.0, p.region_y)};
    const double power = std::pow(10.0, rng.uniform(-2.0, 0.0));

    // Physical per-waveguide coefficients from raw path sums.
    Eigen::VectorXcd coef = Eigen::VectorXcd::Zero(p.num_waveguides);
    for (int m = 0; m < p.num_waveguides; ++m)
      for (int n = 0; n < p.pas_per_waveguide; ++n) {
        const double d = std::hypot(user.x - layout.x()(n, m),
                                    user.y - layout.waveguide_y()[m], p.height);
        const double phi = 2.0 * kPi * (d / p.wavelength +
                                        (layout.x()(n, m) - layout.feed_x()) /
                                            p.guided_wavelength);
        coef[m] += std::polar(std::sqrt(p.eta) / d, -phi);
      }

    // Matched direction scaled to the power budget.
    Eigen::VectorXcd w = coef.conjugate();
    w *= std::sqrt(power) / w.norm();
    cxd received = 0.0;
    for (int m = 0; m < p.num_waveguides; ++m) received += coef[m] * w[m];
    const double gamma_vec = std::norm(received) / p.noise_power;
    const double se_vec = std::log1p(gamma_vec) / std::log(2.0);

    const ChannelState cs = build_channels(layout, p, UserSet{{user}});
    const double se_scalar = se_ee_single(p, channel_gain_zeta(cs, p), power).se;
    CHECK(se_vec == doctest::Approx(se_scalar).epsilon(1e-9));

    // A random beamformer evaluates identically through either route.
    Eigen::VectorXcd wr(p.num_waveguides);
    for (int m = 0; m < p.num_waveguides; ++m) wr[m] = rng.cnormal();
    wr *= std::sqrt(power) / wr.norm();
    cxd direct = 0.0;
    for (int m = 0; m < p.num_waveguides; ++m) direct += coef[m] * wr[m];
    const cxd via_psi = (cs.Psi.col(0).conjugate().array() * wr.array()).sum();
    CHECK(std::norm(direct) == doctest::Approx(std::norm(via_psi)).epsilon(1e-9));
  }
}
