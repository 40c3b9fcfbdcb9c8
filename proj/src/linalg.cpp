#include "mrtensor/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/QR>

namespace mrt {

namespace {

constexpr int kMaxSweeps = 80;

// Orthogonalizes the columns of a square-or-tall matrix in place, accumulating
// the rotations into v.
void hestenes(Eigen::MatrixXd& a, Eigen::MatrixXd& v) {
    const Eigen::Index n = a.cols();
    const double tol = std::numeric_limits<double>::epsilon() * std::sqrt(static_cast<double>(a.rows()));
    Eigen::VectorXd norms2(n);
    for (Eigen::Index j = 0; j < n; ++j) norms2[j] = a.col(j).squaredNorm();

    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        bool rotated = false;
        for (Eigen::Index p = 0; p + 1 < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double alpha = norms2[p];
                const double beta = norms2[q];
                if (alpha == 0.0 || beta == 0.0) continue;
                const double gamma = a.col(p).dot(a.col(q));
                if (std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (Eigen::Index i = 0; i < a.rows(); ++i) {
                    const double x = a(i, p);
                    const double y = a(i, q);
                    a(i, p) = c * x - s * y;
                    a(i, q) = s * x + c * y;
                }
                for (Eigen::Index i = 0; i < v.rows(); ++i) {
                    const double x = v(i, p);
                    const double y = v(i, q);
                    v(i, p) = c * x - s * y;
                    v(i, q) = s * x + c * y;
                }
                norms2[p] = a.col(p).squaredNorm();
                norms2[q] = a.col(q).squaredNorm();
            }
        }
        if (!rotated) break;
    }
}

// SVD of a matrix with rows >= cols.
Svd svd_tall(const Eigen::MatrixXd& a) {
    const Eigen::Index m = a.rows();
    const Eigen::Index n = a.cols();
    Eigen::MatrixXd work;
    Eigen::MatrixXd q;
    if (m > n) {
        Eigen::MatrixXd r;
        thin_qr(a, q, r);
        work = std::move(r);
    } else {
        work = a;
    }
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
    hestenes(work, v);

    Eigen::VectorXd sigma(n);
    for (Eigen::Index j = 0; j < n; ++j) sigma[j] = work.col(j).norm();

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index x, Eigen::Index y) { return sigma[x] > sigma[y]; });

    Svd out;
    out.sigma.resize(n);
    out.u = Eigen::MatrixXd::Zero(work.rows(), n);
    out.v = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index j = order[static_cast<std::size_t>(k)];
        out.sigma[k] = sigma[j];
        if (sigma[j] > 0.0) {
            out.u.col(k) = work.col(j) / sigma[j];
            out.v.col(k) = v.col(j);
        }
    }
    if (m > n) out.u = q * out.u;

    for (Eigen::Index k = 0; k < n; ++k) {
        if (out.sigma[k] == 0.0) continue;
        Eigen::Index imax = 0;
        out.u.col(k).cwiseAbs().maxCoeff(&imax);
        if (out.u(imax, k) < 0.0) {
            out.u.col(k) = -out.u.col(k);
            out.v.col(k) = -out.v.col(k);
        }
    }
    return out;
}

}  // namespace

Svd jacobi_svd(const Eigen::MatrixXd& a) {
    if (a.rows() >= a.cols()) return svd_tall(a);
    Svd t = svd_tall(a.transpose());
    Svd out{std::move(t.v), std::move(t.sigma), std::move(t.u)};
    // Re-apply the sign rule to the new left factor.
    for (Eigen::Index k = 0; k < out.sigma.size(); ++k) {
        if (out.sigma[k] == 0.0) continue;
        Eigen::Index imax = 0;
        out.u.col(k).cwiseAbs().maxCoeff(&imax);
        if (out.u(imax, k) < 0.0) {
            out.u.col(k) = -out.u.col(k);
            out.v.col(k) = -out.v.col(k);
        }
    }
    return out;
}

Eigen::Index truncation_rank(const Eigen::VectorXd& sigma, double abs_tol, Eigen::Index max_rank) {
    Eigen::Index r = sigma.size();
    while (r > 0 && sigma[r - 1] == 0.0) --r;
    // Drop trailing values while the accumulated tail stays within tolerance.
    double tail2 = 0.0;
    const double tol2 = abs_tol * abs_tol;
    while (r > 0) {
        const double next = tail2 + sigma[r - 1] * sigma[r - 1];
        if (next > tol2) break;
        tail2 = next;
        --r;
    }
    if (max_rank >= 0) r = std::min(r, max_rank);
    return r;
}

void thin_qr(const Eigen::MatrixXd& a, Eigen::MatrixXd& q, Eigen::MatrixXd& r) {
    const Eigen::Index k = std::min(a.rows(), a.cols());
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    q = qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), k);
    r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
}

}  // namespace mrt
