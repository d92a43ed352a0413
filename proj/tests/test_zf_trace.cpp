#include <doctest.h>

#include <cmath>

#include "pass/multi_user.hpp"
#include "pass/oracle.hpp"
#include "pass/rng.hpp"
#include "pass/scenario.hpp"
#include "pass/zf.hpp"

using namespace pass;

namespace {

SystemParams make_params() {
  SystemParams p;
  p.region_x = 30.0;
  return p.finalize();
}

PinchLayout random_layout(const SystemParams& p, Rng& rng) {
  Eigen::MatrixXd x(p.pas_per_waveguide, p.num_waveguides);
  for (int m = 0; m < p.num_waveguides; ++m) {
    double cursor = rng.uniform(0.0, p.region_x / 3.0);
    for (int n = 0; n < p.pas_per_waveguide; ++n) {
      x(n, m) = cursor;
      cursor += p.min_spacing * rng.uniform(1.0, 4.0);
    }
  }
  return PinchLayout(std::move(x), waveguide_positions(p), p.height, p.region_x,
                     p.min_spacing);
}

Eigen::VectorXd random_power(int K, Rng& rng) {
  Eigen::VectorXd power(K);
  for (int k = 0; k < K; ++k) power[k] = std::pow(10.0, rng.uniform(-9.0, -5.0));
  return power;
}

}  // namespace

TEST_CASE("zero forcing nulls interference and meets the power identity") {
  const SystemParams p = make_params();
  Rng rng(3);
  for (int t = 0; t < 25; ++t) {
    const int K = 2 + (t % 3);
    const PinchLayout layout = random_layout(p, rng);
    const UserSet users = drop_users(p, K, 99, t);
    const ChannelState cs = build_channels(layout, p, users);
    const Eigen::VectorXd power = random_power(K, rng);
    const ZfState zf = zf_build(cs, PowerAllocation{power});

    const Eigen::MatrixXcd received = zf.Psi.adjoint() * zf.W;
    const double diag_scale = power.cwiseSqrt().norm();
    for (int i = 0; i < K; ++i) {
      for (int k = 0; k < K; ++k) {
        if (i == k)
          CHECK(std::abs(received(i, i) - std::sqrt(power[i])) < 1e-9 * diag_scale);
        else
          CHECK(std::abs(received(i, k)) < 1e-9 * diag_scale);
      }
    }

    const double via_w = zf.W.squaredNorm();
    const double via_lambda = zf.total_power(power);
    CHECK(via_w == doctest::Approx(via_lambda).epsilon(1e-9));
  }
}

TEST_CASE("K=1 zero forcing reduces to the matched scalar channel") {
  const SystemParams p = make_params();
  Rng rng(17);
  const PinchLayout layout = random_layout(p, rng);
  const UserSet users = drop_users(p, 1, 12, 0);
  const ChannelState cs = build_channels(layout, p, users);
  Eigen::VectorXd power(1);
  power << 3e-7;
  const ZfState zf = zf_build(cs, PowerAllocation{power});
  const cxd r = (zf.Psi.adjoint() * zf.W)(0, 0);
  CHECK(std::norm(r) / p.noise_power ==
        doctest::Approx(power[0] / p.noise_power).epsilon(1e-12));
}

TEST_CASE("coincident users make the channel rank deficient") {
  const SystemParams p = make_params();
  Rng rng(21);
  const PinchLayout layout = random_layout(p, rng);
  UserSet users{{{10.0, 4.0}, {10.0, 4.0}}};
  const ChannelState cs = build_channels(layout, p, users);
  CHECK_THROWS_AS(zf_lambda(cs.Psi), Error);
}

TEST_CASE("rank-one update identity for the gram inverse") {
  Rng rng(33);
  for (int t = 0; t < 20; ++t) {
    const int K = 2 + (t % 3);
    // Random HPD B plus a random column a.
    Eigen::MatrixXcd g(K + 2, K);
    for (int i = 0; i < g.rows(); ++i)
      for (int j = 0; j < K; ++j) g(i, j) = rng.cnormal();
    const Eigen::MatrixXcd b = g.adjoint() * g;
    Eigen::VectorXcd a(K);
    for (int j = 0; j < K; ++j) a[j] = rng.cnormal();

    const Eigen::MatrixXcd direct = gauss_jordan_inverse(b + a * a.adjoint());
    const Eigen::MatrixXcd b_inv = gauss_jordan_inverse(b);
    const Eigen::MatrixXcd update =
        b_inv - (b_inv * a * a.adjoint() * b_inv) / (1.0 + a.dot(b_inv * a)).real();
    CHECK((direct - update).norm() <= 1e-9 * direct.norm());
  }
}

TEST_CASE("incremental trace equals dense inversion") {
  const SystemParams p = make_params();
  Rng rng(41);
  for (int t = 0; t < 30; ++t) {
    const int K = 2;
    const PinchLayout layout = random_layout(p, rng);
    const UserSet users = drop_users(p, K, 7, t);
    const ChannelState cs = build_channels(layout, p, users);
    const Eigen::VectorXd power = random_power(K, rng);

    Eigen::MatrixXcd columns(K, p.num_waveguides);
    for (int m = 0; m < p.num_waveguides; ++m)
      columns.col(m) =
          waveguide_column(p, layout.x().col(m), layout.waveguide_y()[m], users);

    const double oracle = direct_trace_oracle(cs.Psi, power);
    for (int m = 0; m < p.num_waveguides; ++m) {
      TraceObjective obj(columns, m, power, p.budget, 1e4);
      CHECK(!obj.used_fallback());
      const TraceValue v = obj.eval(columns.col(m));
      CHECK(v.trace == doctest::Approx(oracle).epsilon(1e-9));
      // No overshoot, no penalty.
      if (v.trace <= p.budget) CHECK(v.penalized == v.trace);
    }
  }
}

TEST_CASE("square systems fall back to direct inversion") {
  SystemParams p = make_params();
  p.num_waveguides = 2;
  Rng rng(43);
  const PinchLayout layout = random_layout(p, rng);
  const UserSet users = drop_users(p, 2, 5, 1);
  const ChannelState cs = build_channels(layout, p, users);
  const Eigen::VectorXd power = random_power(2, rng);

  Eigen::MatrixXcd columns(2, 2);
  for (int m = 0; m < 2; ++m)
    columns.col(m) = waveguide_column(p, layout.x().col(m), layout.waveguide_y()[m], users);
  TraceObjective obj(columns, 0, power, p.budget, 1e4);
  CHECK(obj.used_fallback());
  CHECK(obj.eval(columns.col(0)).trace ==
        doctest::Approx(direct_trace_oracle(cs.Psi, power)).epsilon(1e-9));
}

TEST_CASE("penalty activates exactly on budget overshoot") {
  Eigen::MatrixXcd columns(2, 3);
  Rng rng(47);
  for (int i = 0; i < 2; ++i)
    for (int m = 0; m < 3; ++m) columns(i, m) = rng.cnormal();
  Eigen::VectorXd power(2);
  power << 1.0, 2.0;

  TraceObjective loose(columns, 0, power, 1e9, 10.0);
  const TraceValue ok = loose.eval(columns.col(0));
  CHECK(ok.penalized == ok.trace);

  TraceObjective tight(columns, 0, power, ok.trace / 2.0, 10.0);
  const TraceValue over = tight.eval(columns.col(0));
  const double overshoot = over.trace - ok.trace / 2.0;
  CHECK(over.penalized ==
        doctest::Approx(over.trace + 10.0 * overshoot * overshoot).epsilon(1e-12));
}

TEST_CASE("spectral identity: trace with scaled identity power") {
  Rng rng(53);
  const int K = 3;
  Eigen::MatrixXcd psi(5, K);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < K; ++j) psi(i, j) = rng.cnormal();
  const double scale = 2.5e-7;
  const Eigen::VectorXd power = Eigen::VectorXd::Constant(K, scale);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(psi.adjoint() * psi);
  double expected = 0.0;
  for (int k = 0; k < K; ++k) expected += scale / es.eigenvalues()[k];
  CHECK(direct_trace_oracle(psi, power) == doctest::Approx(expected).epsilon(1e-10));

  // Scalar case: trace is P / |Psi|^2.
  Eigen::MatrixXcd column = psi.col(0);
  Eigen::VectorXd p1(1);
  p1 << scale;
  CHECK(direct_trace_oracle(column, p1) ==
        doctest::Approx(scale / column.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("simulated SINR scales linearly with the power coefficients") {
  const SystemParams p = make_params();
  Rng rng(59);
  const PinchLayout layout = random_layout(p, rng);
  const UserSet users = drop_users(p, 2, 31, 2);
  const ChannelState cs = build_channels(layout, p, users);
  Eigen::VectorXd power(2);
  power << 2e-7, 8e-8;

  const ZfState zf1 = zf_build(cs, PowerAllocation{power});
  const ZfState zf2 = zf_build(cs, PowerAllocation{Eigen::VectorXd(2.0 * power)});
  const Eigen::VectorXd s1 = sinr_simulation_oracle(p, layout, users, zf1.W, 20000, 88);
  const Eigen::VectorXd s2 = sinr_simulation_oracle(p, layout, users, zf2.W, 20000, 88);
  for (int k = 0; k < 2; ++k) {
    CHECK(s1[k] == doctest::Approx(power[k] / p.noise_power).epsilon(0.02));
    CHECK(s2[k] == doctest::Approx(2.0 * s1[k]).epsilon(1e-9));
  }

  const ZfState zf0 = zf_build(cs, PowerAllocation{Eigen::VectorXd(0.0 * power)});
  const Eigen::VectorXd s0 = sinr_simulation_oracle(p, layout, users, zf0.W, 20000, 88);
  CHECK(s0[0] == 0.0);
  CHECK(s0[1] == 0.0);
}
