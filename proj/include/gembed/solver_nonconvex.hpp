#pragma once

#include <cmath>
#include <iostream>
#include <optional>
#include <utility>
#include <vector>

#include "gembed/errors.hpp"
#include "gembed/linalg.hpp"
#include "gembed/metrics.hpp"
#include "gembed/objective.hpp"

namespace gembed {

enum class NcStepKind { TheoremRule, Fixed, Backtracking };

struct NonconvexConfig {
  int r = 1;
  int max_iters = 500;
  double rel_tol = 1e-10;
  NcStepKind step = NcStepKind::TheoremRule;
  double eta = 0.0;  // Fixed only
};

struct SpectralInit {
  Matrix m0;  // unconstrained minimizer of the quadratic loss
  Matrix v0;  // rank-r factor from the eigen-truncation of sym(M0)
  bool ridged = false;
};

struct NonconvexResult {
  Matrix v_hat;
  Matrix m_hat;
  Matrix init_m0;
  Matrix init_v0;
  std::vector<double> loss_trace;
  std::vector<double> distance_trace;  // filled only when V* is supplied
  int iters = 0;
  bool converged = false;
  double step_used = 0.0;
};

/// Closed-form initialization: M0 = [(1/m) X Xt^T] H^{-1} solves the normal
/// equations of the unconstrained quadratic loss. V0 comes from the r
/// algebraically largest eigenpairs of sym(M0) with negative eigenvalues
/// clamped to zero, V0 = Q_r diag(max(lambda, 0))^{1/2}. A tiny ridge is
/// added when H is numerically singular.
inline SpectralInit init_spectral(const LossContext& ctx, int r) {
  if (r < 1 || r > ctx.p) throw InputError("init_spectral: need 1 <= r <= p");
  SpectralInit init;
  Matrix h = ctx.H;
  if (ctx.kappa_mu <= 1e-12) {
    const double ridge = 1e-10 * ctx.H.trace() / ctx.p;
    if (!(ridge > 0.0)) throw SingularHessian("init_spectral: H is singular");
    h += ridge * Matrix::Identity(ctx.p, ctx.p);
    init.ridged = true;
  }
  Matrix m0t;
  try {
    m0t = solve_spd(h, ctx.C.transpose());
  } catch (const SingularSystem&) {
    throw SingularHessian("init_spectral: H is singular");
  }
  init.m0 = m0t.transpose();

  const auto eig = sym_eig(0.5 * (init.m0 + init.m0.transpose()));
  init.v0 = Matrix::Zero(ctx.p, r);
  for (int i = 0; i < r; ++i) {
    const double lam = std::max(eig.eigenvalues(i), 0.0);
    init.v0.col(i) = eig.eigenvectors.col(i) * std::sqrt(lam);
  }
  return init;
}

/// Gradient of V -> L(V V^T): (G + G^T) V with G = grad(V V^T).
inline Matrix grad_v(const Matrix& v, const LossContext& ctx) {
  if (v.rows() != ctx.p) throw InputError("grad_v: V must have p rows");
  const Matrix g = grad(v * v.transpose(), ctx);
  return (g + g.transpose()) * v;
}

/// eta = [32 ||M0||_2^2 (kappa_mu + kappa_L)]^{-1}; falls back to
/// 1/(32 kappa_L) when M0 = 0.
inline double theorem_step(const Matrix& m0, const LossContext& ctx) {
  const double norm = spectral_norm(m0);
  const double kappa_sum = ctx.kappa_mu + ctx.kappa_L;
  if (norm == 0.0) {
    std::cerr << "theorem_step: M0 = 0, falling back to 1/(32 kappa_L)\n";
    return ctx.kappa_L > 0.0 ? 1.0 / (32.0 * ctx.kappa_L) : 1.0;
  }
  if (!(kappa_sum > 0.0)) return 1.0;
  return 1.0 / (32.0 * norm * norm * kappa_sum);
}

/// Factored gradient descent from the spectral initialization. Records the
/// loss per iteration, and d^2(V, V*) per iteration when V* is supplied.
inline NonconvexResult fit_nonconvex(const LossContext& ctx, const NonconvexConfig& cfg,
                                     const std::optional<Matrix>& v_star = std::nullopt) {
  if (cfg.max_iters < 1 || !(cfg.rel_tol > 0.0)) throw InputError("fit_nonconvex: bad config");
  if (cfg.step == NcStepKind::Fixed && !(cfg.eta > 0.0))
    throw InputError("fit_nonconvex: fixed step requires eta > 0");
  if (v_star.has_value() && (v_star->rows() != ctx.p || v_star->cols() != cfg.r))
    throw InputError("fit_nonconvex: V* must be p x r");

  const SpectralInit init = init_spectral(ctx, cfg.r);
  NonconvexResult res;
  res.init_m0 = init.m0;
  res.init_v0 = init.v0;

  double eta = 0.0;
  switch (cfg.step) {
    case NcStepKind::TheoremRule:
      eta = theorem_step(init.m0, ctx);
      break;
    case NcStepKind::Fixed:
      eta = cfg.eta;
      break;
    case NcStepKind::Backtracking:
      eta = ctx.kappa_L > 0.0 ? 1.0 / ctx.kappa_L : 1.0;
      break;
  }
  res.step_used = eta;

  Matrix v = init.v0;
  auto current_loss = [&ctx](const Matrix& vv) { return loss(vv * vv.transpose(), ctx); };
  double cur = current_loss(v);
  res.loss_trace.push_back(cur);
  if (v_star.has_value()) res.distance_trace.push_back(subspace_distance_sq(v, *v_star));

  for (int t = 0; t < cfg.max_iters; ++t) {
    const Matrix d = grad_v(v, ctx);
    double next;
    Matrix v_next;
    if (cfg.step == NcStepKind::Backtracking) {
      const double dnorm_sq = d.squaredNorm();
      for (int k = 0;; ++k) {
        v_next = v - eta * d;
        next = current_loss(v_next);
        if (next <= cur - 1e-4 * eta * dnorm_sq || k >= 60) break;
        eta *= 0.5;
      }
      eta *= 2.0;  // allow recovery on later iterations
    } else {
      v_next = v - eta * d;
      next = current_loss(v_next);
    }
    if (!std::isfinite(next)) throw DivergenceError("fit_nonconvex: loss diverged");
    v = std::move(v_next);
    res.iters = t + 1;
    res.loss_trace.push_back(next);
    if (v_star.has_value()) res.distance_trace.push_back(subspace_distance_sq(v, *v_star));
    if (std::abs(cur - next) <= cfg.rel_tol * std::max(1.0, std::abs(cur))) {
      res.converged = true;
      cur = next;
      break;
    }
    cur = next;
  }

  res.v_hat = std::move(v);
  Matrix m = res.v_hat * res.v_hat.transpose();
  res.m_hat = 0.5 * (m + m.transpose());
  return res;
}

}  // namespace gembed
