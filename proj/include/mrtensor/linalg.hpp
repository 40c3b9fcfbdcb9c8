#pragma once

#include <Eigen/Core>

namespace mrt {

/// Thin SVD A = U * diag(sigma) * V^T with k = min(rows, cols) columns.
///
/// Singular values are sorted descending. Each left singular vector has its
/// largest-magnitude component positive (first such component on ties). For
/// zero singular values the corresponding columns of U and V are zero.
struct Svd {
    Eigen::MatrixXd u;
    Eigen::VectorXd sigma;
    Eigen::MatrixXd v;
};

/// One-sided (Hestenes) Jacobi SVD. Tall inputs are reduced by a Householder
/// QR first, wide inputs are handled through the transpose.
Svd jacobi_svd(const Eigen::MatrixXd& a);

/// Number of singular values to keep so that the discarded tail satisfies
/// sqrt(sum_{i>=r} sigma_i^2) <= abs_tol, capped at max_rank (negative means
/// no cap). Exact zeros are always discarded.
Eigen::Index truncation_rank(const Eigen::VectorXd& sigma, double abs_tol, Eigen::Index max_rank);

/// Thin QR: a = q * r with q having min(rows, cols) orthonormal columns.
void thin_qr(const Eigen::MatrixXd& a, Eigen::MatrixXd& q, Eigen::MatrixXd& r);

}  // namespace mrt
