#include "pass/oracle.hpp"

#include <cmath>

#include "pass/rng.hpp"

namespace pass {

OracleReport OracleReport::compare(std::string name, double oracle, double fast,
                                   double tolerance, bool relative, std::uint64_t seed,
                                   std::string note) {
  OracleReport r;
  r.name = std::move(name);
  r.oracle_value = oracle;
  r.fast_value = fast;
  r.abs_error = std::abs(oracle - fast);
  const double scale = std::max(std::abs(oracle), std::abs(fast));
  r.rel_error = (scale > 0.0) ? r.abs_error / scale : 0.0;
  r.tolerance = tolerance;
  r.passed = (relative ? r.rel_error : r.abs_error) <= tolerance;
  r.seed = seed;
  r.note = std::move(note);
  return r;
}

double grid_power_oracle(double zeta, const SystemParams& params, int grid_size) {
  if (grid_size < 1000) fail(ErrorCode::ConfigInvalid, "grid too coarse to be an oracle");
  constexpr double kLn2 = 0.6931471805599453;
  const double lo = kPowerFloor;
  const double hi = params.budget;
  const double step = (hi - lo) / grid_size;

  // Written out directly instead of reusing the metric helpers.
  double best_p = lo;
  double best_val = -std::numeric_limits<double>::infinity();
  for (int i = 1; i <= grid_size; ++i) {
    const double p = lo + i * step;
    const double se = std::log1p(zeta * p) / kLn2;
    const double val = std::log(se) - (1.0 - params.beta) *
                                          std::log(p + params.fixed_power + params.rate_power * se);
    if (val > best_val) {
      best_val = val;
      best_p = p;
    }
  }
  return best_p;
}

double phase_residual(const IcrContext& ctx, const SystemParams& params, double delta) {
  const double two_pi = 2.0 * kPi;
  const double a1 = (ctx.waveguide_y - ctx.user.y) * (ctx.waveguide_y - ctx.user.y) +
                    params.height * params.height;
  const double anchor_dist = std::hypot(ctx.anchor_position.x() - ctx.user.x,
                                        ctx.anchor_position.y() - ctx.user.y,
                                        ctx.anchor_position.z());
  auto dist_at = [&](double x) { return std::sqrt((x - ctx.user.x) * (x - ctx.user.x) + a1); };

  switch (ctx.direction) {
    case IcrCase::PositiveX: {
      const double x_new = ctx.anchor_x + params.min_spacing + delta;
      return two_pi / params.wavelength * (dist_at(x_new) - anchor_dist) +
             two_pi / params.guided_wavelength * (x_new - ctx.anchor_position.x());
    }
    case IcrCase::NegativeX: {
      const double x_new = ctx.anchor_x - params.min_spacing - delta;
      return two_pi / params.wavelength * (anchor_dist - dist_at(x_new)) +
             two_pi / params.guided_wavelength * (ctx.anchor_position.x() - x_new);
    }
    case IcrCase::CrossWaveguide: {
      const double x_new = ctx.anchor_x + delta;
      return two_pi / params.wavelength * (dist_at(x_new) - anchor_dist) +
             two_pi / params.guided_wavelength * delta;
    }
  }
  return 0.0;
}

double phase_scan_oracle(const IcrContext& ctx, const SystemParams& params,
                         double step, double range) {
  if (step > params.wavelength / 100.0)
    fail(ErrorCode::ConfigInvalid, "scan step too coarse");
  const double two_pi = 2.0 * kPi;

  // The residual grows strictly with the offset (n_eff > 1), so the first
  // admissible alignment is the crossing of the smallest full turn at or
  // above the residual at zero offset, and at least one full turn.
  const double r0 = phase_residual(ctx, params, 0.0);
  const double target = two_pi * std::max(1.0, std::ceil(r0 / two_pi - 1e-9));
  if (r0 >= target - 1e-12 && r0 <= target + 1e-12) return 0.0;

  double prev = r0;
  for (double d = step; d <= range + step; d += step) {
    const double cur = phase_residual(ctx, params, d);
    if (prev < target && cur >= target) {
      double lo = d - step, hi = d;
      for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        (phase_residual(ctx, params, mid) < target ? lo : hi) = mid;
      }
      return 0.5 * (lo + hi);
    }
    prev = cur;
  }
  fail(ErrorCode::NoZeroInRange, "no alignment crossing within the scan range");
}

Eigen::MatrixXcd gauss_jordan_inverse(Eigen::MatrixXcd a) {
  const int n = static_cast<int>(a.rows());
  Eigen::MatrixXcd inv = Eigen::MatrixXcd::Identity(n, n);
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    if (std::abs(a(pivot, col)) < 1e-300)
      fail(ErrorCode::RankDeficient, "singular matrix in oracle inversion");
    if (pivot != col) {
      a.row(pivot).swap(a.row(col));
      inv.row(pivot).swap(inv.row(col));
    }
    const cxd d = a(col, col);
    a.row(col) /= d;
    inv.row(col) /= d;
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const cxd f = a(r, col);
      if (f != cxd(0.0)) {
        a.row(r) -= f * a.row(col);
        inv.row(r) -= f * inv.row(col);
      }
    }
  }
  return inv;
}

double direct_trace_oracle(const Eigen::MatrixXcd& Psi, const Eigen::VectorXd& power) {
  const int K = static_cast<int>(Psi.cols());
  Eigen::MatrixXcd gram = Eigen::MatrixXcd::Zero(K, K);
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j)
      for (int m = 0; m < Psi.rows(); ++m) gram(i, j) += std::conj(Psi(m, i)) * Psi(m, j);
  const Eigen::MatrixXcd inv = gauss_jordan_inverse(gram);
  double trace = 0.0;
  for (int k = 0; k < K; ++k) trace += (inv(k, k) * power[k]).real();
  return trace;
}

Eigen::VectorXd sinr_simulation_oracle(const SystemParams& params,
                                       const PinchLayout& layout, const UserSet& users,
                                       const Eigen::MatrixXcd& W, int trials,
                                       std::uint64_t seed) {
  if (trials < 10000) fail(ErrorCode::ConfigInvalid, "too few trials for the SINR oracle");
  const int K = users.count();
  const int M = layout.num_waveguides();
  const int N = layout.pas_per_waveguide();

  // Received coefficient of user k for stream i, from raw path sums.
  Eigen::MatrixXcd coef = Eigen::MatrixXcd::Zero(K, K);
  const double amp = std::sqrt(params.eta);
  for (int k = 0; k < K; ++k) {
    const auto& u = users.positions[k];
    for (int m = 0; m < M; ++m) {
      cxd row_sum = 0.0;
      for (int n = 0; n < N; ++n) {
        const double d = std::hypot(u.x - layout.x()(n, m), u.y - layout.waveguide_y()[m],
                                    layout.height());
        const double phi = 2.0 * kPi * (d / params.wavelength +
                                        (layout.x()(n, m) - layout.feed_x()) /
                                            params.guided_wavelength);
        row_sum += std::polar(amp / d, -phi);
      }
      for (int i = 0; i < K; ++i) coef(k, i) += row_sum * W(m, i);
    }
  }

  Rng rng(seed);
  Eigen::VectorXd sig = Eigen::VectorXd::Zero(K);
  Eigen::VectorXd intf = Eigen::VectorXd::Zero(K);
  Eigen::VectorXd noise = Eigen::VectorXd::Zero(K);
  Eigen::VectorXcd s(K);
  for (int t = 0; t < trials; ++t) {
    for (int i = 0; i < K; ++i) s[i] = rng.cnormal();
    for (int k = 0; k < K; ++k) {
      const cxd desired = coef(k, k) * s[k];
      cxd other = 0.0;
      for (int i = 0; i < K; ++i)
        if (i != k) other += coef(k, i) * s[i];
      const cxd n = std::sqrt(params.noise_of(k)) * rng.cnormal();
      sig[k] += std::norm(desired);
      intf[k] += std::norm(other);
      noise[k] += std::norm(n);
    }
  }
  Eigen::VectorXd sinr(K);
  for (int k = 0; k < K; ++k) sinr[k] = sig[k] / (intf[k] + noise[k]);
  return sinr;
}

namespace {

/// Best objective of the subproblem at a fixed power pair: mu1 from the
/// tight SE epigraph, kappa at its lower bound, mu2 as the largest value
/// admitted by the quadratic upper bound.
double slack_tight_objective(const SubproblemSpec& spec, double p0, double p1) {
  constexpr double kLn2g = 0.6931471805599453;
  const Eigen::VectorXd lam = spec.Lambda.diagonal().real();
  const double budget_use = lam[0] * p0 + lam[1] * p1;
  if (budget_use > spec.budget) return -std::numeric_limits<double>::infinity();
  if (p0 < spec.gamma_th[0] * spec.sigma2[0] || p1 < spec.gamma_th[1] * spec.sigma2[1])
    return -std::numeric_limits<double>::infinity();

  const double s = std::log1p(p0 / spec.sigma2[0]) / kLn2g +
                   std::log1p(p1 / spec.sigma2[1]) / kLn2g;
  double objective = 0.0;
  if (spec.beta > 1e-9) objective += spec.beta * std::log(s);  // tight mu1
  if (spec.beta >= 1.0 - 1e-9) return objective;

  const double r = budget_use + spec.fixed_power +
                   spec.rate_power * (linearized_rate(spec, 0, p0) +
                                      linearized_rate(spec, 1, p1));
  const double omb = 1.0 - spec.beta;
  const double e0 = std::exp(spec.mu2_local / omb);
  const double u0 = e0 * spec.kappa_local;
  const double g_mu = u0 / omb;
  const double g_kappa = e0;

  double kappa = r;
  if (spec.delta > 0.0)
    kappa = std::max(r, spec.kappa_local - g_kappa / spec.delta);  // minimiser of U over kappa
  const double dk = kappa - spec.kappa_local;
  const double u_from_kappa = u0 + g_kappa * dk + 0.5 * spec.delta * dk * dk;

  double mu2;
  if (spec.delta == 0.0) {
    mu2 = spec.mu2_local + (s - u_from_kappa) / g_mu;
  } else {
    // (delta/2) x^2 + g_mu x + (u_from_kappa - s) = 0, largest root.
    const double disc = g_mu * g_mu - 2.0 * spec.delta * (u_from_kappa - s);
    if (disc < 0.0) return -std::numeric_limits<double>::infinity();
    mu2 = spec.mu2_local + (-g_mu + std::sqrt(disc)) / spec.delta;
  }
  return objective + mu2;
}

}  // namespace

double subproblem_grid_oracle(const SubproblemSpec& spec, int grid_per_dim,
                              int zoom_rounds) {
  if (spec.users() != 2) fail(ErrorCode::ConfigInvalid, "grid oracle covers two users");
  const Eigen::VectorXd lam = spec.Lambda.diagonal().real();
  const double f0 = spec.gamma_th[0] * spec.sigma2[0];
  const double f1 = spec.gamma_th[1] * spec.sigma2[1];
  double lo0 = f0, hi0 = (spec.budget - lam[1] * f1) / lam[0];
  double lo1 = f1, hi1 = (spec.budget - lam[0] * f0) / lam[1];
  if (hi0 <= lo0 || hi1 <= lo1)
    fail(ErrorCode::Infeasible, "empty power box for the grid oracle");

  double best = -std::numeric_limits<double>::infinity();
  double best0 = lo0, best1 = lo1;
  for (int round = 0; round < zoom_rounds; ++round) {
    const double s0 = (hi0 - lo0) / grid_per_dim;
    const double s1 = (hi1 - lo1) / grid_per_dim;
    for (int i = 0; i <= grid_per_dim; ++i) {
      for (int j = 0; j <= grid_per_dim; ++j) {
        const double p0 = lo0 + i * s0;
        const double p1 = lo1 + j * s1;
        const double val = slack_tight_objective(spec, p0, p1);
        if (val > best) {
          best = val;
          best0 = p0;
          best1 = p1;
        }
      }
    }
    lo0 = std::max(f0, best0 - 2.0 * s0);
    hi0 = std::min((spec.budget - lam[1] * f1) / lam[0], best0 + 2.0 * s0);
    lo1 = std::max(f1, best1 - 2.0 * s1);
    hi1 = std::min((spec.budget - lam[0] * f0) / lam[1], best1 + 2.0 * s1);
  }
  return best;
}

CoherenceStats coherence_stats(const SystemParams& params, const PinchLayout& layout,
                               const UserPos& user) {
  CoherenceStats st;
  cxd total = 0.0;
  for (int m = 0; m < layout.num_waveguides(); ++m) {
    cxd per_wg = 0.0;
    for (int n = 0; n < layout.pas_per_waveguide(); ++n) {
      const double d = std::hypot(user.x - layout.x()(n, m), user.y - layout.waveguide_y()[m],
                                  layout.height());
      const double phi = 2.0 * kPi * (d / params.wavelength +
                                      (layout.x()(n, m) - layout.feed_x()) /
                                          params.guided_wavelength);
      st.reciprocal_sum += 1.0 / d;
      per_wg += std::polar(1.0 / d, -phi);
    }
    total += per_wg;
    st.waveguide_norm2 += std::norm(per_wg);
  }
  st.coherent_mag = std::abs(total);
  return st;
}

}  // namespace pass
