#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "gembed/errors.hpp"

namespace gembed {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Eigendecomposition of a symmetric matrix, eigenvalues sorted descending,
/// eigenvectors orthonormal in the matching column order.
struct SymEigDecomp {
  Vector eigenvalues;
  Matrix eigenvectors;

  Matrix reconstruct() const {
    return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
  }
};

/// Thin SVD A = U diag(s) V^T with singular values sorted descending.
struct SvdDecomp {
  Matrix u;
  Vector singular_values;
  Matrix v;
};

namespace detail {

inline void require_finite(const Matrix& a, const char* who) {
  if (!a.allFinite()) throw InputError(std::string(who) + ": non-finite entries");
}

}  // namespace detail

/// Full spectrum of a symmetric matrix. The input is symmetrized as
/// (S + S^T)/2 before decomposition; asymmetry beyond 1e-8 elementwise is
/// rejected. Gradients in this codebase are asymmetric by construction, so
/// callers rely on the explicit symmetrization.
inline SymEigDecomp sym_eig(const Matrix& s) {
  detail::require_finite(s, "sym_eig");
  if (s.rows() != s.cols()) throw InputError("sym_eig: matrix not square");
  const double asym = (s - s.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-8) throw InputError("sym_eig: input asymmetric beyond 1e-8");
  const Matrix sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success)
    throw SingularSystem("sym_eig: eigensolver did not converge");
  // Eigen returns ascending order; flip to descending.
  SymEigDecomp out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

inline SvdDecomp svd(const Matrix& a) {
  detail::require_finite(a, "svd");
  Eigen::JacobiSVD<Matrix> solver(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return SvdDecomp{solver.matrixU(), solver.singularValues(), solver.matrixV()};
}

/// Largest singular value. Symmetric inputs go through the eigensolver
/// (cheaper and accurate); general inputs through the SVD.
inline double spectral_norm(const Matrix& a) {
  detail::require_finite(a, "spectral_norm");
  if (a.size() == 0) return 0.0;
  if (a.rows() == a.cols() &&
      (a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff())) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (a + a.transpose()),
                                                 Eigen::EigenvaluesOnly);
    const auto& ev = solver.eigenvalues();
    return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  }
  Eigen::JacobiSVD<Matrix> solver(a);
  return solver.singularValues()(0);
}

/// Lower-triangular L with L L^T = P. Throws NotPositiveDefinite on a
/// non-positive pivot, which downstream signals an invalid joint model.
inline Matrix cholesky_spd(const Matrix& p) {
  detail::require_finite(p, "cholesky_spd");
  if (p.rows() != p.cols()) throw InputError("cholesky_spd: matrix not square");
  const Matrix sym = 0.5 * (p + p.transpose());
  Eigen::LLT<Matrix> llt(sym);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite("cholesky_spd: matrix is not positive definite");
  return llt.matrixL();
}

/// Solve P X = B for symmetric positive definite P.
inline Matrix solve_spd(const Matrix& p, const Matrix& b) {
  detail::require_finite(p, "solve_spd");
  detail::require_finite(b, "solve_spd");
  if (p.rows() != p.cols()) throw InputError("solve_spd: matrix not square");
  if (p.cols() != b.rows()) throw InputError("solve_spd: dimension mismatch");
  Eigen::LLT<Matrix> llt(0.5 * (p + p.transpose()));
  if (llt.info() != Eigen::Success) throw SingularSystem("solve_spd: system is singular");
  return llt.solve(b);
}

}  // namespace gembed
