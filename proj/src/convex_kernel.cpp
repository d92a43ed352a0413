#include "pass/convex_kernel.hpp"

#include <Eigen/Cholesky>
#include <cmath>

namespace pass {

namespace {

constexpr double kLn2 = 0.6931471805599453;
constexpr double kGapTol = 1e-9;
constexpr double kNewtonTol = 1e-10;
constexpr int kMaxNewton = 50;
constexpr double kBetaEdge = 1e-9;

enum class Flavor { Mixed, SeOnly, EeOnly };

Flavor flavor_of(double beta) {
  if (beta >= 1.0 - kBetaEdge) return Flavor::SeOnly;
  if (beta <= kBetaEdge) return Flavor::EeOnly;
  return Flavor::Mixed;
}

struct Kernel {
  const SubproblemSpec& spec;
  Flavor flavor;
  int K;
  int dim;
  int i_mu1 = -1;
  int i_mu2 = -1;
  int i_kappa = -1;
  int n_constraints = 0;

  Eigen::VectorXd lambda;     // real diagonal of the coupling matrix
  Eigen::VectorXd scale_p;    // per-power variable scale
  double scale_kappa = 1.0;
  Eigen::VectorXd rate_slope;  // d/dP of the linearised rate at the expansion point
  Eigen::VectorXd rate_at_local;

  // U-bound pieces around the expansion point.
  double u0 = 0.0, g_mu = 0.0, g_kappa = 0.0;

  explicit Kernel(const SubproblemSpec& s) : spec(s), flavor(flavor_of(s.beta)) {
    K = spec.users();
    lambda = spec.Lambda.diagonal().real();
    for (int k = 0; k < K; ++k)
      if (!(lambda[k] > 0)) fail(ErrorCode::ConfigInvalid, "coupling matrix must be HPD");

    dim = K;
    if (flavor != Flavor::EeOnly) i_mu1 = dim++;
    if (flavor != Flavor::SeOnly) {
      i_mu2 = dim++;
      i_kappa = dim++;
    }
    n_constraints = 1 + K;                        // budget + SINR floors
    if (flavor != Flavor::EeOnly) ++n_constraints;  // SE epigraph
    if (flavor != Flavor::SeOnly) n_constraints += 2;

    scale_p.resize(K);
    rate_slope.resize(K);
    rate_at_local.resize(K);
    for (int k = 0; k < K; ++k) {
      const double p0 = std::max(spec.power_local[k], spec.gamma_th[k] * spec.sigma2[k]);
      scale_p[k] = std::max(p0, 1e-300);
      rate_slope[k] = 1.0 / (kLn2 * (spec.sigma2[k] + spec.power_local[k]));
      rate_at_local[k] = std::log1p(spec.power_local[k] / spec.sigma2[k]) / kLn2;
    }
    scale_kappa = std::max(spec.kappa_local, spec.fixed_power);

    if (flavor != Flavor::SeOnly) {
      const double omb = 1.0 - spec.beta;
      const double e = std::exp(spec.mu2_local / omb);
      u0 = e * spec.kappa_local;
      g_mu = u0 / omb;
      g_kappa = e;
    }
  }

  double power_of(const Eigen::VectorXd& z, int k) const { return scale_p[k] * z[k]; }
  double kappa_of(const Eigen::VectorXd& z) const { return scale_kappa * z[i_kappa]; }

  double sum_rate(const Eigen::VectorXd& z) const {
    double s = 0.0;
    for (int k = 0; k < K; ++k) s += std::log1p(power_of(z, k) / spec.sigma2[k]) / kLn2;
    return s;
  }

  double ubound(double mu2, double kappa) const {
    const double dm = mu2 - spec.mu2_local;
    const double dk = kappa - spec.kappa_local;
    return u0 + g_mu * dm + g_kappa * dk + 0.5 * spec.delta * (dm * dm + dk * dk);
  }

  double linear_kappa_lhs(const Eigen::VectorXd& z) const {
    double v = spec.fixed_power;
    for (int k = 0; k < K; ++k) {
      const double p = power_of(z, k);
      v += lambda[k] * p +
           spec.rate_power * (rate_at_local[k] + (p - spec.power_local[k]) * rate_slope[k]);
    }
    return v;
  }

  /// All constraint values at z; f_i < 0 means strictly feasible.
  Eigen::VectorXd constraints(const Eigen::VectorXd& z) const {
    Eigen::VectorXd f(n_constraints);
    int i = 0;
    double budget_use = 0.0;
    for (int k = 0; k < K; ++k) budget_use += lambda[k] * power_of(z, k);
    f[i++] = budget_use - spec.budget;
    for (int k = 0; k < K; ++k)
      f[i++] = spec.gamma_th[k] * spec.sigma2[k] - power_of(z, k);
    const double s = sum_rate(z);
    if (flavor != Flavor::EeOnly) {
      const double beta = (flavor == Flavor::SeOnly) ? 1.0 : spec.beta;
      f[i++] = std::exp(z[i_mu1] / beta) - s;
    }
    if (flavor != Flavor::SeOnly) {
      f[i++] = ubound(z[i_mu2], kappa_of(z)) - s;
      f[i++] = linear_kappa_lhs(z) - kappa_of(z);
    }
    return f;
  }

  bool strictly_feasible(const Eigen::VectorXd& z) const {
    const Eigen::VectorXd f = constraints(z);
    return (f.array() < 0.0).all() && f.allFinite();
  }

  Eigen::VectorXd objective_grad() const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
    if (i_mu1 >= 0) g[i_mu1] = -1.0;  // maximisation, solver minimises
    if (i_mu2 >= 0) g[i_mu2] = -1.0;
    return g;
  }

  /// Per-constraint gradients, one row per constraint.
  Eigen::MatrixXd constraint_jacobian(const Eigen::VectorXd& z) const {
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n_constraints, dim);
    int i = 0;
    for (int k = 0; k < K; ++k) jac(0, k) = lambda[k] * scale_p[k];
    ++i;
    for (int k = 0; k < K; ++k) jac(i++, k) = -scale_p[k];

    Eigen::VectorXd s1(K);
    for (int k = 0; k < K; ++k)
      s1[k] = scale_p[k] / (kLn2 * (spec.sigma2[k] + power_of(z, k)));

    if (flavor != Flavor::EeOnly) {
      const double beta = (flavor == Flavor::SeOnly) ? 1.0 : spec.beta;
      for (int k = 0; k < K; ++k) jac(i, k) = -s1[k];
      jac(i, i_mu1) = std::exp(z[i_mu1] / beta) / beta;
      ++i;
    }
    if (flavor != Flavor::SeOnly) {
      for (int k = 0; k < K; ++k) jac(i, k) = -s1[k];
      jac(i, i_mu2) = g_mu + spec.delta * (z[i_mu2] - spec.mu2_local);
      jac(i, i_kappa) =
          (g_kappa + spec.delta * (kappa_of(z) - spec.kappa_local)) * scale_kappa;
      ++i;
      for (int k = 0; k < K; ++k)
        jac(i, k) = (lambda[k] + spec.rate_power * rate_slope[k]) * scale_p[k];
      jac(i, i_kappa) = -scale_kappa;
    }
    return jac;
  }

  /// Gradient and Hessian of the log barrier -sum ln(-f_i).
  void barrier_derivatives(const Eigen::VectorXd& z, Eigen::VectorXd& grad,
                           Eigen::MatrixXd& hess) const {
    grad.setZero(dim);
    hess.setZero(dim, dim);
    const Eigen::VectorXd f = constraints(z);
    Eigen::VectorXd gi(dim);
    int i = 0;

    auto accumulate = [&](double fi, const Eigen::VectorXd& gfi,
                          const std::vector<std::pair<int, double>>& hdiag) {
      const double inv = 1.0 / (-fi);
      grad += gfi * inv;
      hess += (gfi * gfi.transpose()) * (inv * inv);
      for (const auto& [idx, v] : hdiag) hess(idx, idx) += v * inv;
    };

    // Budget.
    gi.setZero();
    for (int k = 0; k < K; ++k) gi[k] = lambda[k] * scale_p[k];
    accumulate(f[i++], gi, {});

    // SINR floors.
    for (int k = 0; k < K; ++k) {
      gi.setZero();
      gi[k] = -scale_p[k];
      accumulate(f[i++], gi, {});
    }

    // Shared rate derivatives.
    Eigen::VectorXd s1(K), s2neg(K);
    for (int k = 0; k < K; ++k) {
      const double denom = spec.sigma2[k] + power_of(z, k);
      s1[k] = scale_p[k] / (kLn2 * denom);
      s2neg[k] = scale_p[k] * scale_p[k] / (kLn2 * denom * denom);
    }

    if (flavor != Flavor::EeOnly) {
      const double beta = (flavor == Flavor::SeOnly) ? 1.0 : spec.beta;
      const double e = std::exp(z[i_mu1] / beta);
      gi.setZero();
      for (int k = 0; k < K; ++k) gi[k] = -s1[k];
      gi[i_mu1] = e / beta;
      std::vector<std::pair<int, double>> hd;
      for (int k = 0; k < K; ++k) hd.emplace_back(k, s2neg[k]);
      hd.emplace_back(i_mu1, e / (beta * beta));
      accumulate(f[i++], gi, hd);
    }

    if (flavor != Flavor::SeOnly) {
      // Quadratic upper bound minus the sum rate.
      gi.setZero();
      for (int k = 0; k < K; ++k) gi[k] = -s1[k];
      gi[i_mu2] = g_mu + spec.delta * (z[i_mu2] - spec.mu2_local);
      gi[i_kappa] = (g_kappa + spec.delta * (kappa_of(z) - spec.kappa_local)) * scale_kappa;
      std::vector<std::pair<int, double>> hd;
      for (int k = 0; k < K; ++k) hd.emplace_back(k, s2neg[k]);
      hd.emplace_back(i_mu2, spec.delta);
      hd.emplace_back(i_kappa, spec.delta * scale_kappa * scale_kappa);
      accumulate(f[i++], gi, hd);

      // Linearised kappa bound.
      gi.setZero();
      for (int k = 0; k < K; ++k)
        gi[k] = (lambda[k] + spec.rate_power * rate_slope[k]) * scale_p[k];
      gi[i_kappa] = -scale_kappa;
      accumulate(f[i++], gi, {});
    }
  }

  double barrier_value(const Eigen::VectorXd& z, double t) const {
    const Eigen::VectorXd f = constraints(z);
    double v = 0.0;
    if (i_mu1 >= 0) v -= z[i_mu1];
    if (i_mu2 >= 0) v -= z[i_mu2];
    v *= t;
    for (int i = 0; i < n_constraints; ++i) {
      if (!(f[i] < 0.0)) return std::numeric_limits<double>::infinity();
      v -= std::log(-f[i]);
    }
    return v;
  }
};

/// Strictly interior start from the expansion point, nudged off every
/// boundary. Escalates the margins if a nudge lands outside.
Eigen::VectorXd interior_start(const Kernel& ker) {
  const auto& spec = ker.spec;
  const int K = ker.K;

  Eigen::VectorXd floor_p(K);
  double floor_budget = 0.0;
  for (int k = 0; k < K; ++k) {
    floor_p[k] = spec.gamma_th[k] * spec.sigma2[k];
    floor_budget += ker.lambda[k] * floor_p[k];
  }
  if (floor_budget >= spec.budget * (1.0 - 1e-12))
    fail(ErrorCode::Infeasible, "SINR floors exhaust the power budget");

  Eigen::VectorXd p = spec.power_local;
  for (int k = 0; k < K; ++k) p[k] = std::max(p[k], floor_p[k] * (1.0 + 1e-9) + 1e-300);
  const double usable = spec.budget - floor_budget;
  double excess_cost = 0.0;
  for (int k = 0; k < K; ++k) excess_cost += ker.lambda[k] * (p[k] - floor_p[k]);
  if (excess_cost > 0.999 * usable) {
    const double s = 0.999 * usable / excess_cost;
    for (int k = 0; k < K; ++k) p[k] = floor_p[k] + s * (p[k] - floor_p[k]);
  } else if (excess_cost <= 0.0) {
    for (int k = 0; k < K; ++k) p[k] = floor_p[k] + 0.25 * usable / (K * ker.lambda[k]);
  }

  for (double margin = 1e-3; margin <= 0.6; margin *= 2.0) {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(ker.dim);
    for (int k = 0; k < K; ++k) z[k] = p[k] / ker.scale_p[k];

    double s = 0.0;
    for (int k = 0; k < K; ++k) s += std::log1p(p[k] / spec.sigma2[k]) / kLn2;

    if (ker.i_mu1 >= 0) {
      const double beta = (ker.flavor == Flavor::SeOnly) ? 1.0 : spec.beta;
      z[ker.i_mu1] = beta * (std::log(s) - margin);
    }
    if (ker.i_kappa >= 0) {
      const double kappa = ker.linear_kappa_lhs(z) * (1.0 + 1e-6) + 1e-12;
      z[ker.i_kappa] = kappa / ker.scale_kappa;
      // Walk mu2 down until the quadratic bound clears the sum rate.
      const double omb = 1.0 - spec.beta;
      double mu2 = spec.mu2_local - omb * margin;
      bool ok = false;
      for (int tries = 0; tries < 60; ++tries) {
        if (ker.ubound(mu2, kappa) < s * (1.0 - 1e-12) - 1e-300) {
          ok = true;
          break;
        }
        mu2 -= omb * std::max(margin, 1e-3) * (1 << std::min(tries, 20));
      }
      if (!ok) continue;
      z[ker.i_mu2] = mu2;
    }
    if (ker.strictly_feasible(z)) return z;
  }
  fail(ErrorCode::Infeasible, "could not construct a strictly interior start");
}

}  // namespace

double taylor_upper_bound(const SubproblemSpec& spec, double mu2, double kappa) {
  Kernel ker(spec);
  return ker.ubound(mu2, kappa);
}

double linearized_rate(const SubproblemSpec& spec, int k, double power) {
  const double slope = 1.0 / (kLn2 * (spec.sigma2[k] + spec.power_local[k]));
  return std::log1p(spec.power_local[k] / spec.sigma2[k]) / kLn2 +
         (power - spec.power_local[k]) * slope;
}

double hessian_bound(double beta, double mu2_local, double kappa_local) {
  const double omb = 1.0 - beta;
  const double e = std::exp(mu2_local / omb);
  const double h_mm = e * kappa_local / (omb * omb);
  const double h_mk = e / omb;
  // Eigenvalues of [[h_mm, h_mk], [h_mk, 0]].
  return 0.5 * (h_mm + std::sqrt(h_mm * h_mm + 4.0 * h_mk * h_mk));
}

SubproblemSolution solve_subproblem(const SubproblemSpec& spec, BarrierTrace* trace) {
  Kernel ker(spec);
  Eigen::VectorXd z = interior_start(ker);
  const Eigen::VectorXd g0 = ker.objective_grad();

  SubproblemSolution sol;
  double t = 1.0;
  int stage = 0;
  bool stalled = false;

  while (true) {
    // Final stages are centered as far as floating-point cancellation in
    // the near-tight constraints allows; earlier stages only need to track
    // the central path.
    const bool final_stage = ker.n_constraints / t < kGapTol;
    const double grad_target = (final_stage ? 1e-6 : 1e-5) * t;
    for (int step = 0; step < kMaxNewton; ++step) {
      Eigen::VectorXd bgrad;
      Eigen::MatrixXd bhess;
      ker.barrier_derivatives(z, bgrad, bhess);
      const Eigen::VectorXd grad = t * g0 + bgrad;
      if (grad.lpNorm<Eigen::Infinity>() <= grad_target) break;

      // Jacobi-preconditioned Newton system; tiny dense dimensions.
      Eigen::VectorXd d(ker.dim);
      for (int i = 0; i < ker.dim; ++i) d[i] = 1.0 / std::sqrt(std::max(bhess(i, i), 1e-300));
      Eigen::MatrixXd hs = d.asDiagonal() * bhess * d.asDiagonal();
      Eigen::VectorXd rhs = -(d.asDiagonal() * grad);

      Eigen::VectorXd dz;
      double ridge = 0.0;
      for (int attempt = 0; attempt < 8; ++attempt) {
        Eigen::LDLT<Eigen::MatrixXd> ldlt(hs + ridge * Eigen::MatrixXd::Identity(ker.dim, ker.dim));
        dz = d.asDiagonal() * ldlt.solve(rhs);
        if (dz.allFinite() && ldlt.info() == Eigen::Success) break;
        ridge = (ridge == 0.0) ? 1e-10 : ridge * 100.0;
      }
      if (!dz.allFinite()) {
        stalled = true;
        break;
      }

      const double dec2 = -grad.dot(dz);
      if (dec2 * 0.5 < kNewtonTol && !final_stage) break;
      if (!(dec2 > 0.0)) break;  // no descent left at this precision

      const double b0 = ker.barrier_value(z, t);
      if (trace) trace->steps.push_back({stage, t, b0});
      double alpha = 1.0;
      bool moved = false;
      while (alpha > 1e-16) {
        const Eigen::VectorXd zn = z + alpha * dz;
        const double bn = ker.barrier_value(zn, t);
        if (std::isfinite(bn) && bn <= b0 + 0.25 * alpha * grad.dot(dz)) {
          z = zn;
          moved = true;
          break;
        }
        alpha *= 0.5;
      }
      ++sol.newton_steps;
      if (!moved) {
        stalled = true;
        break;
      }
    }
    if (ker.n_constraints / t < kGapTol) break;
    t *= 10.0;
    ++stage;
  }

  // Unscale and report.
  sol.power.resize(ker.K);
  for (int k = 0; k < ker.K; ++k) sol.power[k] = ker.power_of(z, k);
  sol.mu1 = (ker.i_mu1 >= 0) ? z[ker.i_mu1] : 0.0;
  sol.mu2 = (ker.i_mu2 >= 0) ? z[ker.i_mu2] : 0.0;
  sol.kappa = (ker.i_kappa >= 0) ? ker.kappa_of(z) : 0.0;
  sol.objective = sol.mu1 + sol.mu2;
  sol.status = stalled ? SolveStatus::NumericalStall : SolveStatus::Optimal;

  // KKT certificate. The raw barrier multipliers 1/(t(-f_i)) inherit the
  // cancellation noise of the near-tight constraint values, so the
  // stationarity residual is instead measured with multipliers fitted by
  // least squares over the near-active set.
  {
    const Eigen::VectorXd f = ker.constraints(z);
    const Eigen::MatrixXd jac = ker.constraint_jacobian(z);
    Eigen::VectorXd barrier_mult(ker.n_constraints);
    for (int i = 0; i < ker.n_constraints; ++i)
      barrier_mult[i] = 1.0 / (t * std::max(-f[i], 1e-300));
    std::vector<int> active;
    for (int i = 0; i < ker.n_constraints; ++i)
      if (barrier_mult[i] > 1e-6 * barrier_mult.maxCoeff()) active.push_back(i);

    Eigen::VectorXd stat = g0;
    Eigen::VectorXd fitted = Eigen::VectorXd::Zero(ker.n_constraints);
    if (!active.empty()) {
      Eigen::MatrixXd ja(active.size(), ker.dim);
      for (std::size_t r = 0; r < active.size(); ++r) ja.row(r) = jac.row(active[r]);
      Eigen::VectorXd mult =
          ja.transpose().colPivHouseholderQr().solve(-g0).cwiseMax(0.0);
      for (std::size_t r = 0; r < active.size(); ++r) fitted[active[r]] = mult[r];
      stat = g0 + ja.transpose() * mult;
    }
    double complementarity = 0.0;
    for (int i = 0; i < ker.n_constraints; ++i)
      complementarity = std::max(complementarity, fitted[i] * std::max(-f[i], 0.0));
    sol.kkt_residual = std::max({stat.lpNorm<Eigen::Infinity>(), complementarity,
                                 ker.n_constraints / t, f.maxCoeff()});
  }
  return sol;
}

}  // namespace pass
