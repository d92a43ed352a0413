#include "pass/single_user.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pass/channel.hpp"
#include "pass/metrics.hpp"

namespace pass {

namespace {

double user_distance(const Eigen::Vector3d& pa, const UserPos& user) {
  return std::hypot(pa.x() - user.x, pa.y() - user.y, pa.z());
}

/// Base coordinate the offset is measured from.
double icr_base_x(const IcrContext& ctx, const SystemParams& params) {
  switch (ctx.direction) {
    case IcrCase::PositiveX:
      return ctx.anchor_x + params.min_spacing;
    case IcrCase::NegativeX:
      return ctx.anchor_x - params.min_spacing;
    case IcrCase::CrossWaveguide:
      return ctx.anchor_x;
  }
  return ctx.anchor_x;
}

/// Central PA index (0-based) for N PAs per waveguide.
int central_index(int n_pas) {
  return (n_pas % 2 == 1) ? (n_pas - 1) / 2 : n_pas / 2 - 1;
}

}  // namespace

QuadraticCoeffs icr_quadratic(const IcrContext& ctx, const SystemParams& params, int k) {
  const double rho = params.n_eff;  // lambda / lambda_g
  const double lambda = params.wavelength;
  const double base = icr_base_x(ctx, params);
  const double offset_x = base - ctx.user.x;
  const double a1 = (ctx.waveguide_y - ctx.user.y) * (ctx.waveguide_y - ctx.user.y) +
                    params.height * params.height;
  const double anchor_dist = user_distance(ctx.anchor_position, ctx.user);

  // Squaring sqrt((offset_x +- d')^2 + a1) = T -+ rho*d' yields the
  // quadratic; T also gates the spurious root introduced by squaring.
  double range_term = 0.0;
  double b_sign = 1.0;
  switch (ctx.direction) {
    case IcrCase::PositiveX:
      range_term = k * lambda + anchor_dist - rho * (base - ctx.anchor_position.x());
      b_sign = 1.0;
      break;
    case IcrCase::NegativeX:
      range_term = anchor_dist - k * lambda + rho * (ctx.anchor_position.x() - base);
      b_sign = -1.0;
      break;
    case IcrCase::CrossWaveguide:
      range_term = k * lambda + anchor_dist;
      b_sign = 1.0;
      break;
  }

  QuadraticCoeffs q;
  q.a = 1.0 - rho * rho;
  q.b = b_sign * 2.0 * (offset_x + rho * range_term);
  q.c = offset_x * offset_x + a1 - range_term * range_term;
  q.range_term = range_term;
  return q;
}

IcrResult icr_refine(const IcrContext& ctx, const SystemParams& params) {
  const double rho = params.n_eff;
  // The squared equation reads sqrt(...) = T - rho*d' for rightward and
  // cross-waveguide moves but T + rho*d' for leftward moves.
  const double branch_sign = (ctx.direction == IcrCase::NegativeX) ? 1.0 : -1.0;
  constexpr double kRootSlack = 1e-12;

  for (int k = 1; k <= ctx.k_cap; ++k) {
    const QuadraticCoeffs q = icr_quadratic(ctx, params, k);
    const double disc = q.b * q.b - 4.0 * q.a * q.c;
    if (disc < 0.0) continue;

    // Numerically stable pair of roots.
    const double sq = std::sqrt(disc);
    const double r = -(q.b + std::copysign(sq, q.b)) / 2.0;
    const double roots[2] = {r / q.a, (r != 0.0) ? q.c / r : -q.b / (2.0 * q.a)};

    double best = std::numeric_limits<double>::infinity();
    for (double root : roots) {
      if (!(root > -kRootSlack)) continue;
      const double d = std::max(0.0, root);
      if (q.range_term + branch_sign * rho * d < -kRootSlack) continue;  // spurious branch
      best = std::min(best, d);
    }
    if (std::isfinite(best)) return {best, k};
  }
  fail(ErrorCode::KCapExceeded, "phase-wrap index exceeded its cap without a valid root");
}

double icr_refined_x(const IcrContext& ctx, const SystemParams& params, double delta) {
  const double base = icr_base_x(ctx, params);
  return (ctx.direction == IcrCase::NegativeX) ? base - delta : base + delta;
}

PinchLayout coarse_placement(const SystemParams& params, const UserPos& user) {
  const int N = params.pas_per_waveguide;
  const int M = params.num_waveguides;
  if (N * params.min_spacing > params.region_x)
    fail(ErrorCode::RegionTooSmall, "the PA comb does not fit into the region");

  Eigen::VectorXd column(N);
  for (int n = 0; n < N; ++n)
    column[n] = user.x - ((N - 1) / 2.0 - n) * params.min_spacing;

  // Shift the whole comb minimally into [0, D_x]; it keeps its spacing.
  double shift = 0.0;
  if (column[0] < 0.0) shift = -column[0];
  if (column[N - 1] + shift > params.region_x) shift = params.region_x - column[N - 1];
  column.array() += shift;

  Eigen::MatrixXd x(N, M);
  for (int m = 0; m < M; ++m) x.col(m) = column;
  return PinchLayout(std::move(x), waveguide_positions(params), params.height,
                     params.region_x, params.min_spacing);
}

PinchLayout PlacementResult::layout(const SystemParams& params) const {
  return PinchLayout(x, waveguide_positions(params), params.height, params.region_x,
                     params.min_spacing);
}

namespace {

struct RefineState {
  const SystemParams& params;
  const UserPos& user;
  const Eigen::MatrixXd& coarse;
  Eigen::VectorXd y;
  PlacementResult out;

  void note(const IcrContext& ctx, const IcrResult& r, int m, int n, bool clamped,
            double x_after) {
    out.refinements.push_back({ctx, r, m, n, clamped, x_after});
    out.max_k = std::max(out.max_k, r.k);
    if (clamped) ++out.clamp_count;
  }

  /// Clamp a refined coordinate to the region while keeping the spacing
  /// towards the already-placed neighbour.
  double clamp_positive(int m, int n, double candidate, bool& clamped) {
    clamped = false;
    if (candidate <= params.region_x) return candidate;
    clamped = true;
    double fallback = std::min(out.x(n, m), params.region_x);  // coarse slot
    const double floor_x = out.x(n - 1, m) + params.min_spacing;
    fallback = std::max(fallback, floor_x);
    if (fallback > params.region_x + 1e-9)
      fail(ErrorCode::LayoutInvalid, "no feasible position left of the region edge");
    return fallback;
  }

  double clamp_negative(int m, int n, double candidate, bool& clamped) {
    clamped = false;
    if (candidate >= 0.0) return candidate;
    clamped = true;
    double fallback = std::max(out.x(n, m), 0.0);
    const double ceil_x = out.x(n + 1, m) - params.min_spacing;
    fallback = std::min(fallback, ceil_x);
    if (fallback < -1e-9)
      fail(ErrorCode::LayoutInvalid, "no feasible position right of the region edge");
    return fallback;
  }

  /// Refine PAs on waveguide m outward from its (already final) central PA.
  void refine_wings(int m, int centre) {
    const int N = static_cast<int>(coarse.rows());
    for (int n = centre + 1; n < N; ++n) {
      IcrContext ctx;
      ctx.anchor_position = {out.x(n - 1, m), y[m], params.height};
      ctx.anchor_x = coarse(n - 1, m);
      ctx.user = user;
      ctx.waveguide_y = y[m];
      ctx.direction = IcrCase::PositiveX;
      const IcrResult r = icr_refine(ctx, params);
      bool clamped = false;
      out.x(n, m) = clamp_positive(m, n, icr_refined_x(ctx, params, r.delta), clamped);
      note(ctx, r, m, n, clamped, out.x(n, m));
    }
    for (int n = centre - 1; n >= 0; --n) {
      IcrContext ctx;
      ctx.anchor_position = {out.x(n + 1, m), y[m], params.height};
      ctx.anchor_x = coarse(n + 1, m);
      ctx.user = user;
      ctx.waveguide_y = y[m];
      ctx.direction = IcrCase::NegativeX;
      const IcrResult r = icr_refine(ctx, params);
      bool clamped = false;
      out.x(n, m) = clamp_negative(m, n, icr_refined_x(ctx, params, r.delta), clamped);
      note(ctx, r, m, n, clamped, out.x(n, m));
    }
  }
};

}  // namespace

PlacementResult place_all_detailed(const SystemParams& params, const UserPos& user) {
  const PinchLayout coarse = coarse_placement(params, user);
  const int M = params.num_waveguides;
  const int N = params.pas_per_waveguide;
  const int centre = central_index(N);

  RefineState st{params, user, coarse.x(), coarse.waveguide_y(), {}};
  st.out.x = coarse.x();
  st.out.comb_shift = coarse.x()(0, 0) - (user.x - ((N - 1) / 2.0) * params.min_spacing);
  st.out.reference_index = centre;

  // The reference PA stays at its coarse position; hosting it on the
  // waveguide nearest the user keeps every cross-waveguide offset within
  // one phase period instead of walking PAs towards the region edge.
  int ref_wg = 0;
  for (int m = 1; m < M; ++m)
    if (std::abs(st.y[m] - user.y) < std::abs(st.y[ref_wg] - user.y)) ref_wg = m;
  st.out.reference_waveguide = ref_wg;

  st.refine_wings(ref_wg, centre);
  for (int m = 0; m < M; ++m) {
    if (m == ref_wg) continue;
    IcrContext ctx;
    ctx.anchor_position = {st.out.x(centre, ref_wg), st.y[ref_wg], params.height};
    ctx.anchor_x = st.out.x(centre, m);  // coarse central coordinate
    ctx.user = user;
    ctx.waveguide_y = st.y[m];
    ctx.direction = IcrCase::CrossWaveguide;
    const IcrResult r = icr_refine(ctx, params);
    bool clamped = false;
    const double candidate = icr_refined_x(ctx, params, r.delta);
    st.out.x(centre, m) = (candidate <= params.region_x)
                              ? candidate
                              : (clamped = true, st.out.x(centre, m));
    st.note(ctx, r, m, centre, clamped, st.out.x(centre, m));
    st.refine_wings(m, centre);
  }

  st.out.layout(params);  // validate bounds and spacing
  return st.out;
}

PinchLayout place_all(const SystemParams& params, const UserPos& user) {
  return place_all_detailed(params, user).layout(params);
}

double ee_peak_power(double zeta, const SystemParams& params) {
  if (!(zeta > 0)) fail(ErrorCode::ConfigInvalid, "zeta must be positive");
  const auto g = [&](double p) {
    return zeta * (p + params.fixed_power) - (1.0 + zeta * p) * std::log1p(zeta * p);
  };

  // g(0) = zeta*P_f > 0 and g decreases strictly; expand the bracket
  // until it straddles the root.
  double lo = 0.0;
  double hi = std::max(params.fixed_power, 1.0 / zeta);
  int expansions = 0;
  while (g(hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (++expansions > 200)
      fail(ErrorCode::BracketFailure, "EE peak bracket expansion exceeded its bound");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? lo : hi) = mid;
    if (hi - lo <= 1e-10 * hi) break;
  }
  return 0.5 * (lo + hi);
}

double g2_eval(double zeta, const SystemParams& params, double power) {
  if (!(power > 0)) fail(ErrorCode::ConfigInvalid, "g2 requires positive power");
  constexpr double kLn2 = 0.6931471805599453;
  const double log_term = std::log1p(zeta * power);
  const double num = zeta * (power + params.fixed_power + params.rate_power / kLn2 * log_term);
  const double den = (1.0 + zeta * power + params.rate_power * zeta / kLn2) * log_term;
  return num / den;
}

double power_objective(double zeta, const SystemParams& params, double power) {
  const SeEe m = se_ee_single(params, zeta, power);
  return params.beta * std::log(m.se) + (1.0 - params.beta) * std::log(m.ee);
}

OptimalPower optimal_power(double zeta, const SystemParams& params) {
  const double p_star = ee_peak_power(zeta, params);
  if (params.budget <= p_star) return {params.budget, PowerRegime::BudgetLimited};

  const double target = 1.0 - params.beta;
  if (g2_eval(zeta, params, params.budget) > target)
    return {params.budget, PowerRegime::BudgetLimited};

  // g2 falls from 1 at P* to a value <= 1-beta at the budget; bisect for
  // the unique crossing.
  double lo = p_star;
  double hi = params.budget;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g2_eval(zeta, params, mid) > target ? lo : hi) = mid;
    if (hi - lo <= 1e-10 * hi) break;
  }
  return {0.5 * (lo + hi), PowerRegime::Interior};
}

SingleUserSolution solve_single_user(const SystemParams& params, const UserPos& user) {
  SingleUserSolution sol;
  sol.placement = place_all_detailed(params, user);
  const ChannelState cs = build_channels(sol.placement.layout(params), params, UserSet{{user}});
  sol.zeta = channel_gain_zeta(cs, params);
  const OptimalPower p = optimal_power(sol.zeta, params);
  sol.power = p.power;
  sol.regime = p.regime;
  const SeEe m = se_ee_single(params, sol.zeta, sol.power);
  sol.se = m.se;
  sol.ee = m.ee;
  return sol;
}

PinchLayout uniform_layout(const SystemParams& params) {
  const int N = params.pas_per_waveguide;
  const int M = params.num_waveguides;
  Eigen::VectorXd column(N);
  if (N == 1) {
    column[0] = params.region_x / 2.0;
  } else {
    const double step = params.region_x / (N - 1);
    if (step < params.min_spacing)
      fail(ErrorCode::RegionTooSmall, "uniform layout violates the minimum spacing");
    for (int n = 0; n < N; ++n) column[n] = n * step;
  }
  Eigen::MatrixXd x(N, M);
  for (int m = 0; m < M; ++m) x.col(m) = column;
  return PinchLayout(std::move(x), waveguide_positions(params), params.height,
                     params.region_x, params.min_spacing);
}

}  // namespace pass
