#ifndef MLKF_GROUP_KNOCKOFFS_HPP
#define MLKF_GROUP_KNOCKOFFS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "mlkf/core_model.hpp"
#include "mlkf/error.hpp"
#include "mlkf/linalg.hpp"
#include "mlkf/rng.hpp"

namespace mlkf {

inline constexpr double kGammaSlack = 1e-5;

/// Equicorrelated group construction for one layer: S_g = gamma * Sigma_{A_g, A_g}.
struct GramPackage {
  Eigen::MatrixXd sigma;
  Partition partition;
  double lambda_min = 0.0;  // lambda_min(D Sigma D)
  double gamma_raw = 0.0;   // min(1, 2 lambda_min), before slack
  double gamma = 0.0;       // gamma_raw * (1 - kGammaSlack)
  Eigen::MatrixXd S;
  Eigen::MatrixXd D;
};

struct KnockoffDesign {
  Eigen::MatrixXd X_tilde;
  Eigen::MatrixXd C;        // C^T C = 2S - S Sigma^{-1} S
  Eigen::MatrixXd U_tilde;  // empty for model-X designs
  Index layer = 0;
};

namespace detail {

inline Eigen::MatrixXd block(const Eigen::MatrixXd& a, const std::vector<Index>& idx) {
  const auto k = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd out(k, k);
  for (Eigen::Index r = 0; r < k; ++r) {
    for (Eigen::Index c = 0; c < k; ++c) {
      out(r, c) = a(static_cast<Eigen::Index>(idx[r]), static_cast<Eigen::Index>(idx[c]));
    }
  }
  return out;
}

inline void scatter_block(Eigen::MatrixXd& a, const std::vector<Index>& idx, const Eigen::MatrixXd& b) {
  for (Index r = 0; r < idx.size(); ++r) {
    for (Index c = 0; c < idx.size(); ++c) {
      a(static_cast<Eigen::Index>(idx[r]), static_cast<Eigen::Index>(idx[c])) =
          b(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
  }
}

inline Eigen::MatrixXd thin_q(const Eigen::MatrixXd& a) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  return qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), a.cols());
}

}  // namespace detail

inline GramPackage build_equicorrelated_S(const Eigen::MatrixXd& sigma, const Partition& partition) {
  const auto p = sigma.rows();
  if (sigma.cols() != p || static_cast<Index>(p) != partition.num_variables()) {
    throw dimension_error("Sigma must be square and match the partition size");
  }
  if (!sigma.allFinite()) throw input_error("Sigma contains non-finite entries");
  if (linalg::max_abs(sigma - sigma.transpose()) > 1e-10 * std::max(1.0, linalg::max_abs(sigma))) {
    throw input_error("Sigma is not symmetric");
  }
  const double sigma_min = linalg::min_eigenvalue(sigma);
  if (!(sigma_min > 1e-10)) {
    throw conditioning_error("Sigma is singular or indefinite (minimum eigenvalue " +
                             std::to_string(sigma_min) + ")");
  }

  GramPackage pkg;
  pkg.sigma = sigma;
  pkg.partition = partition;
  pkg.D = Eigen::MatrixXd::Zero(p, p);
  for (const auto& g : partition.groups()) {
    const Eigen::MatrixXd sub = detail::block(sigma, g);
    if (g.size() > 1 && !(linalg::min_eigenvalue(sub) > 1e-10)) {
      throw conditioning_error("within-group block of Sigma is singular");
    }
    detail::scatter_block(pkg.D, g, linalg::inverse_sqrt(sub));
  }
  const Eigen::MatrixXd dsd = pkg.D * sigma * pkg.D;
  pkg.lambda_min = linalg::min_eigenvalue(dsd);
  pkg.gamma_raw = std::min(1.0, 2.0 * pkg.lambda_min);
  pkg.gamma = pkg.gamma_raw * (1.0 - kGammaSlack);
  pkg.S = Eigen::MatrixXd::Zero(p, p);
  for (const auto& g : partition.groups()) {
    detail::scatter_block(pkg.S, g, pkg.gamma * detail::block(sigma, g));
  }
  return pkg;
}

/// Fixed-design group knockoffs X~ = X (I - Sigma^{-1} S) + U~ C for a standardized design
/// with n >= 2N. U~ is a seeded orthonormal basis orthogonal to span(X) (and to the
/// intercept when n > 2N, which keeps the knockoff columns centered).
inline KnockoffDesign fixed_design_knockoffs(const Dataset& ds, const GramPackage& pkg, std::uint64_t seed,
                                             Index layer = 0) {
  ds.validate();
  if (!ds.standardized) throw input_error("fixed-design knockoffs need a standardized dataset");
  const Eigen::Index n = ds.X.rows();
  const Eigen::Index p = ds.X.cols();
  if (n < 2 * p) {
    throw dimension_error("fixed-design knockoffs need n >= 2N (n = " + std::to_string(n) +
                          ", N = " + std::to_string(p) + ")");
  }
  if (pkg.sigma.rows() != p) throw dimension_error("Gram package does not match the design");
  const Eigen::MatrixXd sigma = ds.X.transpose() * ds.X;
  if (linalg::max_abs(sigma - pkg.sigma) > 1e-8 * std::max(1.0, linalg::max_abs(sigma))) {
    throw input_error("Gram package was not built from X^T X of this design");
  }

  Eigen::LLT<Eigen::MatrixXd> llt(pkg.sigma);
  if (llt.info() != Eigen::Success) throw conditioning_error("X^T X is not positive definite");
  const Eigen::MatrixXd sigma_inv_s = llt.solve(pkg.S);
  const Eigen::MatrixXd inner = 2.0 * pkg.S - pkg.S * sigma_inv_s;

  KnockoffDesign design;
  design.layer = layer;
  design.C = linalg::psd_square_root(inner, 1e-10, "2S - S Sigma^{-1} S");

  const bool with_intercept = n > 2 * p;
  Eigen::MatrixXd basis(n, p + (with_intercept ? 1 : 0));
  basis.leftCols(p) = ds.X;
  if (with_intercept) basis.col(p).setConstant(1.0 / std::sqrt(static_cast<double>(n)));
  const Eigen::MatrixXd q = detail::thin_q(basis);

  Rng rng(seed);
  Eigen::MatrixXd z = standard_normal_matrix(n, p, rng);
  for (int pass = 0; pass < 2; ++pass) z -= q * (q.transpose() * z);
  Eigen::HouseholderQR<Eigen::MatrixXd> zqr(z);
  const double rmin = zqr.matrixQR().diagonal().cwiseAbs().minCoeff();
  if (!(rmin > 1e-8 * std::sqrt(static_cast<double>(n)))) {
    throw conditioning_error("could not build an orthogonal complement of span(X)");
  }
  design.U_tilde = zqr.householderQ() * Eigen::MatrixXd::Identity(n, p);

  design.X_tilde = ds.X - ds.X * sigma_inv_s + design.U_tilde * design.C;
  return design;
}

/// Second-order Gaussian group knockoffs: each row drawn from N(x - x Sigma^{-1} S, 2S - S Sigma^{-1} S).
inline Eigen::MatrixXd modelx_gaussian_knockoffs(const Eigen::MatrixXd& rows, const GramPackage& pkg,
                                                 std::uint64_t seed) {
  const Eigen::Index p = pkg.sigma.rows();
  if (rows.cols() != p) throw dimension_error("rows do not match the covariance dimension");
  if (!rows.allFinite()) throw input_error("rows contain non-finite entries");
  Eigen::LLT<Eigen::MatrixXd> llt(pkg.sigma);
  if (llt.info() != Eigen::Success) throw conditioning_error("Sigma is not positive definite");
  const Eigen::MatrixXd sigma_inv_s = llt.solve(pkg.S);
  const Eigen::MatrixXd v = 2.0 * pkg.S - pkg.S * sigma_inv_s;
  const Eigen::MatrixXd root = linalg::psd_square_root(v, 1e-10, "knockoff conditional covariance");
  Rng rng(seed);
  const Eigen::MatrixXd z = standard_normal_matrix(rows.rows(), p, rng);
  return rows - rows * sigma_inv_s + z * root;
}

/// Augmented Gram [X X~]^T [X X~].
inline Eigen::MatrixXd augmented_gram(const Eigen::MatrixXd& x, const Eigen::MatrixXd& x_tilde) {
  const Eigen::Index p = x.cols();
  Eigen::MatrixXd g(2 * p, 2 * p);
  g.topLeftCorner(p, p) = x.transpose() * x;
  g.topRightCorner(p, p) = x.transpose() * x_tilde;
  g.bottomLeftCorner(p, p) = g.topRightCorner(p, p).transpose();
  g.bottomRightCorner(p, p) = x_tilde.transpose() * x_tilde;
  return g;
}

}  // namespace mlkf

#endif  // MLKF_GROUP_KNOCKOFFS_HPP
