#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "gembed/context_graph.hpp"
#include "gembed/errors.hpp"
#include "gembed/linalg.hpp"
#include "gembed/model.hpp"

namespace gembed {

/// Everything the conditional-likelihood loss needs, precomputed once per
/// dataset. The loss is exactly quadratic in M, so after forming
///   H = (1/m) Xt Xt^T   and   C = (1/m) X Xt^T,
/// every evaluation is O(p^3) regardless of m:
///   L(M)     = ||X||_F^2/(2m) - <C, M> + <M, M H>/2
///   grad(M)  = M H - C.
/// Both identities are checked against the direct residual formulas in the
/// test suite. kappa_mu/kappa_L are the extreme eigenvalues of H.
struct LossContext {
  Matrix X;
  Matrix Xt;
  Matrix H;
  Matrix C;
  double x_sq = 0.0;
  double kappa_mu = 0.0;
  double kappa_L = 0.0;
  int p = 0;
  int m = 0;
};

/// Build a context from an explicit (X, Xt) design pair. Used directly by
/// the noiseless oracle mode, where Xt is generated first and X = M* Xt.
inline LossContext make_loss_context_from_design(Matrix x, Matrix xt) {
  if (x.rows() != xt.rows() || x.cols() != xt.cols())
    throw InputError("loss context: X and Xt shapes differ");
  if (x.cols() == 0) throw InputError("loss context: empty data");
  LossContext ctx;
  ctx.p = static_cast<int>(x.rows());
  ctx.m = static_cast<int>(x.cols());
  const double inv_m = 1.0 / ctx.m;
  Matrix h = inv_m * (xt * xt.transpose());
  ctx.H = 0.5 * (h + h.transpose());
  ctx.C = inv_m * (x * xt.transpose());
  ctx.x_sq = x.squaredNorm();
  const auto eig = sym_eig(ctx.H);
  ctx.kappa_L = eig.eigenvalues(0);
  ctx.kappa_mu = std::max(eig.eigenvalues(eig.eigenvalues.size() - 1), 0.0);
  ctx.X = std::move(x);
  ctx.Xt = std::move(xt);
  return ctx;
}

inline LossContext make_loss_context(const Matrix& x, const ContextGraph& g) {
  return make_loss_context_from_design(x, context_sums(x, g));
}

/// (1/m) sum_j (1/2)||x_j - M xt_j||^2.
inline double loss(const Matrix& m, const LossContext& ctx) {
  if (m.rows() != ctx.p || m.cols() != ctx.p) throw InputError("loss: M must be p x p");
  const double quad = (m * ctx.H).cwiseProduct(m).sum();
  return 0.5 * ctx.x_sq / ctx.m - ctx.C.cwiseProduct(m).sum() + 0.5 * quad;
}

/// (1/m) (M Xt - X) Xt^T; not symmetric in general.
inline Matrix grad(const Matrix& m, const LossContext& ctx) {
  if (m.rows() != ctx.p || m.cols() != ctx.p) throw InputError("grad: M must be p x p");
  return m * ctx.H - ctx.C;
}

/// Projection of grad onto the symmetric subspace.
inline Matrix sym_grad(const Matrix& m, const LossContext& ctx) {
  const Matrix g = grad(m, ctx);
  return 0.5 * (g + g.transpose());
}

struct HessianSummary {
  double kappa_mu = 0.0;
  double kappa_L = 0.0;
};

inline HessianSummary hessian_summary(const LossContext& ctx) {
  return HessianSummary{ctx.kappa_mu, ctx.kappa_L};
}

/// The curvature form deltaL(Delta) = (1/m) sum_j ||Delta xt_j||^2, computed
/// both directly and as sum_i Delta_i^T H Delta_i. The two routes must agree
/// to 1e-10; disagreement means the context is internally inconsistent.
inline double quadratic_form_check(const Matrix& delta, const LossContext& ctx) {
  if (delta.rows() != ctx.p || delta.cols() != ctx.p)
    throw InputError("quadratic_form_check: Delta must be p x p");
  if ((delta - delta.transpose()).cwiseAbs().maxCoeff() > 1e-8)
    throw InputError("quadratic_form_check: Delta must be symmetric");
  const double direct = (delta * ctx.Xt).squaredNorm() / ctx.m;
  const double via_h = (ctx.H * delta).cwiseProduct(delta).sum();
  if (std::abs(direct - via_h) > 1e-10 * std::max(1.0, std::abs(direct)))
    throw InternalConsistencyError("quadratic_form_check: curvature routes disagree");
  return direct;
}

/// e_stat = sup over symmetric rank-<=2r unit-Frobenius Delta of
/// <grad(M*), Delta>, which is the l2 norm of the 2r largest-magnitude
/// eigenvalues of the symmetrized gradient. `bound` is sqrt(2r) times the
/// spectral norm of the raw gradient; exact <= bound always.
struct StatError {
  double exact = 0.0;
  double bound = 0.0;
};

inline StatError stat_error(const LossContext& ctx, const Matrix& m_star, int r) {
  if (r < 1) throw InputError("stat_error: r must be positive");
  const Matrix g = grad(m_star, ctx);
  const Matrix s = 0.5 * (g + g.transpose());
  Vector ev = sym_eig(s).eigenvalues;
  std::vector<double> mags(ev.data(), ev.data() + ev.size());
  for (auto& v : mags) v = std::abs(v);
  std::sort(mags.begin(), mags.end(), std::greater<double>());
  const int k = std::min<int>(2 * r, ctx.p);
  double sq = 0.0;
  for (int i = 0; i < k; ++i) sq += mags[i] * mags[i];
  StatError out;
  out.exact = std::sqrt(sq);
  out.bound = std::sqrt(2.0 * r) * spectral_norm(g);
  return out;
}

/// Generalized least squares loss (1/m) sum_j (1/2) r_j^T Sigma_j^{-1} r_j
/// with r_j = x_j - M xt_j. This is the conditional MLE objective when the
/// Sigma_j are known.
inline double gls_loss(const Matrix& m, const Matrix& x, const Matrix& xt,
                       const SigmaSpec& sigmas) {
  if (m.rows() != x.rows() || m.cols() != x.rows()) throw InputError("gls_loss: M must be p x p");
  if (x.rows() != xt.rows() || x.cols() != xt.cols())
    throw InputError("gls_loss: X and Xt shapes differ");
  const int cols = static_cast<int>(x.cols());
  const Matrix resid = m * xt - x;
  double total = 0.0;
  for (int j = 0; j < cols; ++j) {
    const Vector rj = resid.col(j);
    total += rj.dot(sigmas.apply_inverse(j, rj));
  }
  return 0.5 * total / cols;
}

inline double gls_loss(const Matrix& m, const Matrix& x, const ContextGraph& g,
                       const SigmaSpec& sigmas) {
  return gls_loss(m, x, context_sums(x, g), sigmas);
}

/// (1/m) sum_j Sigma_j^{-1} (M xt_j - x_j) xt_j^T.
inline Matrix gls_grad(const Matrix& m, const Matrix& x, const Matrix& xt,
                       const SigmaSpec& sigmas) {
  if (m.rows() != x.rows() || m.cols() != x.rows()) throw InputError("gls_grad: M must be p x p");
  if (x.rows() != xt.rows() || x.cols() != xt.cols())
    throw InputError("gls_grad: X and Xt shapes differ");
  const int cols = static_cast<int>(x.cols());
  const Matrix resid = m * xt - x;
  Matrix weighted(x.rows(), cols);
  for (int j = 0; j < cols; ++j) weighted.col(j) = sigmas.apply_inverse(j, resid.col(j));
  return (1.0 / cols) * (weighted * xt.transpose());
}

inline Matrix gls_grad(const Matrix& m, const Matrix& x, const ContextGraph& g,
                       const SigmaSpec& sigmas) {
  return gls_grad(m, x, context_sums(x, g), sigmas);
}

}  // namespace gembed
