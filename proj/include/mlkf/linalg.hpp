#ifndef MLKF_LINALG_HPP
#define MLKF_LINALG_HPP

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "mlkf/error.hpp"

namespace mlkf::linalg {

inline Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a) { return 0.5 * (a + a.transpose()); }

inline double min_eigenvalue(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(a), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw numeric_error("eigenvalue computation failed");
  return es.eigenvalues().minCoeff();
}

/// A^{-1/2} for symmetric A via eigen-decomposition; eigenvalues below `floor` are raised to it.
inline Eigen::MatrixXd inverse_sqrt(const Eigen::MatrixXd& a, double floor = 1e-12) {
  if (a.rows() == 1) return Eigen::MatrixXd::Constant(1, 1, 1.0 / std::sqrt(std::max(a(0, 0), floor)));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(a));
  if (es.info() != Eigen::Success) throw numeric_error("eigen-decomposition failed");
  const Eigen::VectorXd inv_root = es.eigenvalues().cwiseMax(floor).cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * inv_root.asDiagonal() * es.eigenvectors().transpose();
}

/// Returns C with C^T C = A for symmetric PSD A. Uses Cholesky (C upper triangular) when it
/// succeeds; otherwise an eigen square root with eigenvalues in [-neg_tol, 0) clamped to 0.
/// Throws conditioning_error if A has an eigenvalue below -neg_tol.
inline Eigen::MatrixXd psd_square_root(const Eigen::MatrixXd& a, double neg_tol, const std::string& what) {
  const Eigen::MatrixXd sym = symmetrize(a);
  Eigen::LLT<Eigen::MatrixXd> llt(sym);
  if (llt.info() == Eigen::Success) return llt.matrixU();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) throw numeric_error("eigen-decomposition failed for " + what);
  const double lo = es.eigenvalues().minCoeff();
  if (lo < -neg_tol) {
    throw conditioning_error(what + " is indefinite (minimum eigenvalue " + std::to_string(lo) + ")");
  }
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return root.asDiagonal() * es.eigenvectors().transpose();
}

inline double max_abs(const Eigen::MatrixXd& a) { return a.cwiseAbs().maxCoeff(); }

}  // namespace mlkf::linalg

#endif  // MLKF_LINALG_HPP
