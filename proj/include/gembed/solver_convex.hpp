#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "gembed/errors.hpp"
#include "gembed/linalg.hpp"
#include "gembed/objective.hpp"

namespace gembed {

enum class StepKind { FixedLipschitz, FixedManual, Backtracking };

struct StepRule {
  StepKind kind = StepKind::FixedLipschitz;
  double eta = 0.0;     // FixedManual only
  double shrink = 0.5;  // Backtracking only

  static StepRule fixed_lipschitz() { return StepRule{}; }
  static StepRule fixed(double eta) {
    if (!(eta > 0.0)) throw InputError("StepRule::fixed: eta must be positive");
    return StepRule{StepKind::FixedManual, eta, 0.5};
  }
  static StepRule backtracking(double shrink = 0.5) {
    return StepRule{StepKind::Backtracking, 0.0, shrink};
  }
};

struct ConvexConfig {
  double lambda = 0.0;
  int max_iters = 2000;
  double rel_tol = 1e-9;
  StepRule step;
  int path_points = 20;      // lambda_path defaults
  double path_decades = 2.0;
};

struct ConvexResult {
  Matrix m_hat;
  std::vector<double> objective_trace;  // composite loss + lambda ||M||_*
  int iters = 0;
  bool converged = false;
};

/// prox of tau * ||.||_* over the symmetric PSD cone: eigenvalue
/// soft-threshold with clamp at zero, Q diag(max(lambda_i - tau, 0)) Q^T.
/// tau = 0 is plain PSD projection.
inline Matrix prox_nuclear_psd(const Matrix& y, double tau) {
  if (tau < 0.0) throw InputError("prox_nuclear_psd: tau must be nonnegative");
  const auto eig = sym_eig(y);
  const int p = static_cast<int>(y.rows());
  Matrix out = Matrix::Zero(p, p);
  for (int i = 0; i < p; ++i) {
    const double shrunk = eig.eigenvalues(i) - tau;
    if (shrunk <= 0.0) break;  // eigenvalues are descending
    out.noalias() += shrunk * (eig.eigenvectors.col(i) * eig.eigenvectors.col(i).transpose());
  }
  return 0.5 * (out + out.transpose());
}

/// Proximal gradient on L(M) + lambda ||M||_* over symmetric PSD matrices.
/// Iterates M <- prox(M - eta * sym_grad(M), eta * lambda); every iterate is
/// PSD, so the nuclear norm in the composite objective is tr(M).
inline ConvexResult fit_convex(const LossContext& ctx, const ConvexConfig& cfg,
                               const std::optional<Matrix>& init = std::nullopt) {
  if (cfg.lambda < 0.0) throw InputError("fit_convex: lambda must be nonnegative");
  if (cfg.max_iters < 1 || !(cfg.rel_tol > 0.0)) throw InputError("fit_convex: bad config");

  Matrix m = init.has_value() ? *init : Matrix::Zero(ctx.p, ctx.p);
  if (m.rows() != ctx.p || m.cols() != ctx.p) throw InputError("fit_convex: bad init shape");

  const double lipschitz = ctx.kappa_L;
  double eta;
  switch (cfg.step.kind) {
    case StepKind::FixedLipschitz:
    case StepKind::Backtracking:
      eta = lipschitz > 0.0 ? 1.0 / lipschitz : 1.0;
      break;
    case StepKind::FixedManual:
      eta = cfg.step.eta;
      break;
  }

  auto composite = [&](const Matrix& z) { return loss(z, ctx) + cfg.lambda * z.trace(); };

  ConvexResult res;
  res.objective_trace.reserve(cfg.max_iters + 1);
  double obj = composite(m);
  res.objective_trace.push_back(obj);

  for (int t = 0; t < cfg.max_iters; ++t) {
    const Matrix g = sym_grad(m, ctx);
    Matrix z = prox_nuclear_psd(m - eta * g, eta * cfg.lambda);
    if (cfg.step.kind == StepKind::Backtracking) {
      // Quadratic upper-bound test; shrink eta until the smooth part is
      // majorized at the candidate point.
      const double lm = loss(m, ctx);
      for (int k = 0; k < 60; ++k) {
        const Matrix diff = z - m;
        const double bound =
            lm + g.cwiseProduct(diff).sum() + diff.squaredNorm() / (2.0 * eta);
        if (loss(z, ctx) <= bound + 1e-15 * std::max(1.0, std::abs(bound))) break;
        eta *= cfg.step.shrink;
        z = prox_nuclear_psd(m - eta * g, eta * cfg.lambda);
      }
    }
    const double next = composite(z);
    if (!std::isfinite(next))
      throw DivergenceError("fit_convex: objective diverged (step too large)");
    m = std::move(z);
    res.iters = t + 1;
    res.objective_trace.push_back(next);
    if (std::abs(obj - next) <= cfg.rel_tol * std::max(1.0, std::abs(obj))) {
      obj = next;
      res.converged = true;
      break;
    }
    obj = next;
  }
  res.m_hat = std::move(m);
  return res;
}

/// Log-spaced grid from lambda_max = ||sym_grad(0)||_2 down `decades`
/// decades. At the top of the grid the fit returns exactly zero.
inline std::vector<double> lambda_path(const LossContext& ctx, int n_points = 20,
                                       double decades = 2.0) {
  if (n_points < 1 || !(decades > 0.0)) throw InputError("lambda_path: bad grid");
  const double lambda_max = spectral_norm(sym_grad(Matrix::Zero(ctx.p, ctx.p), ctx));
  std::vector<double> grid;
  grid.reserve(n_points);
  if (n_points == 1 || lambda_max == 0.0) {
    grid.push_back(lambda_max);
    return grid;
  }
  for (int i = 0; i < n_points; ++i)
    grid.push_back(lambda_max * std::pow(10.0, -decades * i / (n_points - 1)));
  return grid;
}

struct LambdaSelection {
  double lambda = 0.0;
  ConvexResult result;
  std::vector<std::pair<double, double>> path;  // (lambda, validation loss)
};

/// Fit an explicit lambda grid (descending) with warm starts and pick the
/// lambda minimizing the validation loss; ties break toward larger lambda.
inline LambdaSelection select_lambda_on_grid(const LossContext& train_ctx,
                                             const LossContext& val_ctx,
                                             const std::vector<double>& grid,
                                             const ConvexConfig& cfg) {
  if (grid.empty()) throw InputError("select_lambda: empty lambda grid");
  LambdaSelection sel;
  double best = std::numeric_limits<double>::infinity();
  std::optional<Matrix> warm;
  for (double lam : grid) {
    ConvexConfig point_cfg = cfg;
    point_cfg.lambda = lam;
    ConvexResult fit = fit_convex(train_ctx, point_cfg, warm);
    warm = fit.m_hat;
    const double val_loss = loss(fit.m_hat, val_ctx);
    sel.path.emplace_back(lam, val_loss);
    if (val_loss < best) {  // strict: earlier (larger) lambda wins ties
      best = val_loss;
      sel.lambda = lam;
      sel.result = std::move(fit);
    }
  }
  return sel;
}

inline LambdaSelection select_lambda(const LossContext& train_ctx, const Matrix& val_x,
                                     const ContextGraph& g, const ConvexConfig& cfg) {
  const auto grid = lambda_path(train_ctx, cfg.path_points, cfg.path_decades);
  return select_lambda_on_grid(train_ctx, make_loss_context(val_x, g), grid, cfg);
}

}  // namespace gembed
