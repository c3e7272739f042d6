#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "gembed/context_graph.hpp"
#include "gembed/errors.hpp"
#include "gembed/linalg.hpp"
#include "gembed/rng.hpp"

namespace gembed {

enum class SigmaKind { Identity, SharedMatrix, SharedToeplitz, PerNodeToeplitz, PerNodeMatrix };

/// Per-node conditional covariance specification. Structured kinds (identity,
/// Toeplitz) sample and invert in closed form; matrix kinds cache a Cholesky
/// factor per distinct matrix at construction.
///
/// Toeplitz covariances scale*rho^|i-l| are AR(1) covariances, so noise draws
/// use the O(p) recursion w_i = rho*w_{i-1} + sqrt(1-rho^2)*z_i and the
/// inverse is the tridiagonal AR(1) precision; no p x p factor is stored.
class SigmaSpec {
 public:
  SigmaSpec() = default;

  static SigmaSpec identity() { return SigmaSpec(); }

  static SigmaSpec shared(Matrix sigma) {
    SigmaSpec s;
    s.kind_ = SigmaKind::SharedMatrix;
    s.chol_.push_back(cholesky_spd(sigma));  // throws if not SPD
    s.mats_.push_back(std::move(sigma));
    return s;
  }

  static SigmaSpec shared_toeplitz(double rho, double scale = 1.0) {
    check_toeplitz_params(rho, scale);
    SigmaSpec s;
    s.kind_ = SigmaKind::SharedToeplitz;
    s.rho_.push_back(rho);
    s.scale_.push_back(scale);
    return s;
  }

  static SigmaSpec per_node_toeplitz(std::vector<double> rho, std::vector<double> scale) {
    if (rho.size() != scale.size() || rho.empty())
      throw InputError("per_node_toeplitz: rho/scale lists must be non-empty and equal-length");
    for (std::size_t j = 0; j < rho.size(); ++j) check_toeplitz_params(rho[j], scale[j]);
    SigmaSpec s;
    s.kind_ = SigmaKind::PerNodeToeplitz;
    s.rho_ = std::move(rho);
    s.scale_ = std::move(scale);
    return s;
  }

  static SigmaSpec per_node(std::vector<Matrix> sigmas) {
    if (sigmas.empty()) throw InputError("per_node: empty covariance list");
    SigmaSpec s;
    s.kind_ = SigmaKind::PerNodeMatrix;
    for (const auto& m : sigmas) s.chol_.push_back(cholesky_spd(m));
    s.mats_ = std::move(sigmas);
    return s;
  }

  SigmaKind kind() const { return kind_; }
  bool is_identity() const { return kind_ == SigmaKind::Identity; }

  /// Number of nodes this spec is pinned to; 0 means any m.
  int node_count() const {
    switch (kind_) {
      case SigmaKind::PerNodeToeplitz: return static_cast<int>(rho_.size());
      case SigmaKind::PerNodeMatrix: return static_cast<int>(mats_.size());
      default: return 0;
    }
  }

  /// Dimension this spec is pinned to; 0 means any p.
  int dim() const {
    if (kind_ == SigmaKind::SharedMatrix || kind_ == SigmaKind::PerNodeMatrix)
      return static_cast<int>(mats_[0].rows());
    return 0;
  }

  double toeplitz_rho(int j) const { return rho_[kind_ == SigmaKind::SharedToeplitz ? 0 : j]; }
  double toeplitz_scale(int j) const { return scale_[kind_ == SigmaKind::SharedToeplitz ? 0 : j]; }

  /// Materialize Sigma_j as a dense p x p matrix.
  Matrix matrix(int j, int p) const {
    switch (kind_) {
      case SigmaKind::Identity:
        return Matrix::Identity(p, p);
      case SigmaKind::SharedMatrix:
        require_dim(p);
        return mats_[0];
      case SigmaKind::SharedToeplitz:
        return toeplitz_dense(p, rho_[0], scale_[0]);
      case SigmaKind::PerNodeToeplitz:
        require_node(j);
        return toeplitz_dense(p, rho_[j], scale_[j]);
      case SigmaKind::PerNodeMatrix:
        require_dim(p);
        require_node(j);
        return mats_[j];
    }
    throw InputError("matrix: bad kind");
  }

  /// Draw a noise vector with covariance Sigma_j into `out`.
  void draw_noise(int j, int p, RandomStream& rs, Eigen::Ref<Vector> out) const {
    switch (kind_) {
      case SigmaKind::Identity:
        for (int i = 0; i < p; ++i) out(i) = rs.normal();
        return;
      case SigmaKind::SharedMatrix:
      case SigmaKind::PerNodeMatrix: {
        require_dim(p);
        const Matrix& l = chol_[kind_ == SigmaKind::SharedMatrix ? 0 : check_node(j)];
        Vector z(p);
        for (int i = 0; i < p; ++i) z(i) = rs.normal();
        out = l.triangularView<Eigen::Lower>() * z;
        return;
      }
      case SigmaKind::SharedToeplitz:
      case SigmaKind::PerNodeToeplitz: {
        const int idx = kind_ == SigmaKind::SharedToeplitz ? 0 : check_node(j);
        const double rho = rho_[idx];
        const double sd = std::sqrt(scale_[idx]);
        const double innov = std::sqrt(1.0 - rho * rho);
        double w = rs.normal();
        out(0) = sd * w;
        for (int i = 1; i < p; ++i) {
          w = rho * w + innov * rs.normal();
          out(i) = sd * w;
        }
        return;
      }
    }
  }

  /// w = Sigma_j^{-1} v (generalized least squares weighting).
  Vector apply_inverse(int j, const Vector& v) const {
    const int p = static_cast<int>(v.size());
    switch (kind_) {
      case SigmaKind::Identity:
        return v;
      case SigmaKind::SharedMatrix:
      case SigmaKind::PerNodeMatrix: {
        require_dim(p);
        const Matrix& l = chol_[kind_ == SigmaKind::SharedMatrix ? 0 : check_node(j)];
        Vector w = l.triangularView<Eigen::Lower>().solve(v);
        return l.triangularView<Eigen::Lower>().transpose().solve(w);
      }
      case SigmaKind::SharedToeplitz:
      case SigmaKind::PerNodeToeplitz: {
        const int idx = kind_ == SigmaKind::SharedToeplitz ? 0 : check_node(j);
        return toeplitz_inverse_apply(v, rho_[idx], scale_[idx]);
      }
    }
    throw InputError("apply_inverse: bad kind");
  }

 private:
  static void check_toeplitz_params(double rho, double scale) {
    if (!(rho >= 0.0 && rho < 1.0)) throw InputError("toeplitz: rho must be in [0, 1)");
    if (!(scale > 0.0)) throw InputError("toeplitz: scale must be positive");
  }

  static Matrix toeplitz_dense(int p, double rho, double scale) {
    Matrix s(p, p);
    for (int i = 0; i < p; ++i)
      for (int l = 0; l < p; ++l) s(i, l) = scale * std::pow(rho, std::abs(i - l));
    return s;
  }

  /// AR(1) precision is tridiagonal: diag (1, 1+rho^2, ..., 1+rho^2, 1) and
  /// off-diagonal -rho, all over scale*(1-rho^2).
  static Vector toeplitz_inverse_apply(const Vector& v, double rho, double scale) {
    const int p = static_cast<int>(v.size());
    if (p == 1) return v / scale;
    const double denom = scale * (1.0 - rho * rho);
    Vector w(p);
    w(0) = (v(0) - rho * v(1)) / denom;
    for (int i = 1; i + 1 < p; ++i)
      w(i) = ((1.0 + rho * rho) * v(i) - rho * (v(i - 1) + v(i + 1))) / denom;
    w(p - 1) = (v(p - 1) - rho * v(p - 2)) / denom;
    return w;
  }

  void require_dim(int p) const {
    if (dim() != 0 && dim() != p) throw InputError("sigma spec: dimension mismatch");
  }
  void require_node(int j) const { check_node(j); }
  int check_node(int j) const {
    if (j < 0 || (node_count() != 0 && j >= node_count()))
      throw InputError("sigma spec: node index out of range");
    return j;
  }

  SigmaKind kind_ = SigmaKind::Identity;
  std::vector<Matrix> mats_;
  std::vector<Matrix> chol_;
  std::vector<double> rho_;
  std::vector<double> scale_;
};

/// Ground-truth Gaussian embedding model: factor V* (p x r), interaction
/// matrix M* = V* V*^T, and the conditional covariance spec.
struct EmbeddingModel {
  int p = 0;
  int r = 0;
  Matrix v_star;
  Matrix m_star;
  SigmaSpec sigmas;
};

/// Joint precision I - A (x) M of the stacked vector X_col, materialized
/// densely. Valid joint model iff min_eig > 0.
struct JointSpec {
  Matrix precision;
  double min_eig = 0.0;
};

struct ValidityReport {
  bool valid_sufficient = false;
  std::optional<bool> valid_exact;
  double adjacency_norm = 0.0;  // exact where computable, upper bound otherwise
  double interaction_norm = 0.0;
};

inline constexpr int kDefaultMaterializeCap = 4096;

/// Draw V* with iid standard normal entries, then rescale so that
/// ||M*||_2 equals target_spec_norm exactly. Deterministic given seed.
inline EmbeddingModel random_model(int p, int r, double target_spec_norm,
                                   SigmaSpec sigmas, std::uint64_t seed) {
  if (r < 1 || r > p) throw InputError("random_model: need 1 <= r <= p");
  if (!(target_spec_norm > 0.0)) throw InputError("random_model: target norm must be positive");
  if (sigmas.dim() != 0 && sigmas.dim() != p)
    throw InputError("random_model: sigma spec dimension mismatch");
  RandomStream rs(seed);
  Matrix v(p, r);
  for (int c = 0; c < r; ++c)
    for (int i = 0; i < p; ++i) v(i, c) = rs.normal();
  const double norm = spectral_norm(v * v.transpose());
  v *= std::sqrt(target_spec_norm / norm);
  EmbeddingModel model;
  model.p = p;
  model.r = r;
  model.v_star = std::move(v);
  model.m_star = model.v_star * model.v_star.transpose();
  model.sigmas = std::move(sigmas);
  return model;
}

namespace detail {

/// Dense I - A (x) M: block (j, k) is -a_jk M off the diagonal and the
/// identity on it. Node index is the outer (block) index, matching the
/// column-stacked X_col.
inline Matrix assemble_joint_precision(const ContextGraph& g, const Matrix& m, int cap) {
  const int p = static_cast<int>(m.rows());
  if (m.cols() != p) throw InputError("joint_precision: M not square");
  if (static_cast<long>(p) * g.m() > cap)
    throw CapExceeded("joint_precision: pm exceeds materialization cap");
  const Matrix msym = 0.5 * (m + m.transpose());
  const int n = p * g.m();
  Matrix precision = Matrix::Identity(n, n);
  for (int j = 0; j < g.m(); ++j)
    for (int k : g.context(j)) precision.block(j * p, k * p, p, p) = -msym;
  return precision;
}

}  // namespace detail

inline JointSpec joint_precision(const ContextGraph& g, const Matrix& m,
                                 int cap = kDefaultMaterializeCap) {
  JointSpec spec;
  spec.precision = detail::assemble_joint_precision(g, m, cap);
  const auto eig = sym_eig(spec.precision);
  spec.min_eig = eig.eigenvalues(eig.eigenvalues.size() - 1);
  return spec;
}

/// Sufficient condition ||A||_2 ||M||_2 < 1 plus the exact minimum-eigenvalue
/// check of I - A (x) M when pm fits under the materialization cap.
inline ValidityReport validate(const ContextGraph& g, const Matrix& m,
                               int cap = kDefaultMaterializeCap) {
  ValidityReport rep;
  rep.interaction_norm = spectral_norm(m);
  rep.adjacency_norm = adjacency_spectral_norm(g);
  rep.valid_sufficient = rep.adjacency_norm * rep.interaction_norm < 1.0;
  if (static_cast<long>(m.rows()) * g.m() <= cap)
    rep.valid_exact = joint_precision(g, m, cap).min_eig > 0.0;
  return rep;
}

/// Conditional mean of node j: M * sum_{k in c_j} x_k.
inline Vector conditional_mean(const Matrix& m, const Matrix& x, const ContextGraph& g, int j) {
  if (j < 0 || j >= g.m()) throw InputError("conditional_mean: node index out of range");
  if (x.cols() != g.m()) throw InputError("conditional_mean: X must have m columns");
  Vector sum = Vector::Zero(x.rows());
  for (int k : g.context(j)) sum += x.col(k);
  return m * sum;
}

/// Toeplitz covariance with entry (i, l) = rho^|i-l|; SPD for rho in [0, 1).
inline Matrix toeplitz_sigma(int p, double rho) {
  if (p < 1) throw InputError("toeplitz_sigma: p must be positive");
  if (!(rho >= 0.0 && rho < 1.0)) throw InputError("toeplitz_sigma: rho must be in [0, 1)");
  Matrix s(p, p);
  for (int i = 0; i < p; ++i)
    for (int l = 0; l < p; ++l) s(i, l) = std::pow(rho, std::abs(i - l));
  return s;
}

/// sigma * Toeplitz(rho).
inline Matrix scaled_toeplitz(int p, double rho, double sigma) {
  if (!(sigma > 0.0)) throw InputError("scaled_toeplitz: sigma must be positive");
  return sigma * toeplitz_sigma(p, rho);
}

}  // namespace gembed
