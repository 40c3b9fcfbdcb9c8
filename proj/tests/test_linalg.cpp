#include <doctest.h>

#include <Eigen/SVD>

#include "mrtensor/linalg.hpp"
#include "support.hpp"

using namespace mrt;
using namespace mrt::test;

namespace {

Eigen::MatrixXd random_matrix(Index rows, Index cols, Rng& rng) {
    Eigen::MatrixXd m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = gaussian(rng);
    return m;
}

void check_factorization(const Eigen::MatrixXd& a, const Svd& s) {
    const Index k = std::min(a.rows(), a.cols());
    REQUIRE(s.u.cols() == k);
    REQUIRE(s.v.cols() == k);
    const Eigen::MatrixXd rebuilt = s.u * s.sigma.asDiagonal() * s.v.transpose();
    CHECK((rebuilt - a).norm() <= 1e-13 * std::max(1.0, a.norm()));
    for (Index i = 1; i < k; ++i) CHECK(s.sigma[i - 1] >= s.sigma[i]);
    const Eigen::BDCSVD<Eigen::MatrixXd> oracle(a);
    CHECK((s.sigma - oracle.singularValues()).norm() <= 1e-13 * std::max(1.0, a.norm()));
    for (Index c = 0; c < k; ++c) {
        if (s.sigma[c] == 0.0) continue;
        Index imax = 0;
        s.u.col(c).cwiseAbs().maxCoeff(&imax);
        CHECK(s.u(imax, c) > 0.0);
    }
}

}  // namespace

TEST_CASE("jacobi svd matches an independent SVD") {
    Rng rng(11);
    for (auto [rows, cols] : {std::pair<Index, Index>{1, 1}, {5, 5}, {12, 4}, {4, 12}, {30, 17}, {1, 9}, {9, 1}}) {
        const Eigen::MatrixXd a = random_matrix(rows, cols, rng);
        const Svd s = jacobi_svd(a);
        check_factorization(a, s);
        const Index k = std::min(rows, cols);
        CHECK((s.u.transpose() * s.u - Eigen::MatrixXd::Identity(k, k)).norm() < 1e-13);
        CHECK((s.v.transpose() * s.v - Eigen::MatrixXd::Identity(k, k)).norm() < 1e-13);
    }
}

TEST_CASE("rank-deficient input gives zero columns for zero singular values") {
    Rng rng(12);
    const Eigen::MatrixXd a = random_matrix(8, 2, rng) * random_matrix(2, 6, rng);
    const Svd s = jacobi_svd(a);
    check_factorization(a, s);
    CHECK(s.sigma[2] <= 1e-13 * s.sigma[0]);

    const Svd z = jacobi_svd(Eigen::MatrixXd::Zero(3, 4));
    CHECK(z.sigma.norm() == 0.0);
    CHECK(z.u.norm() == 0.0);
}

TEST_CASE("repeated singular values are deterministic") {
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(4, 4) * 2.0;
    const Svd s1 = jacobi_svd(a);
    const Svd s2 = jacobi_svd(a);
    CHECK(s1.u == s2.u);
    CHECK(s1.sigma == Eigen::VectorXd::Constant(4, 2.0));
}

TEST_CASE("truncation rank") {
    const Eigen::Vector4d sigma(4, 3, 0.3, 0.4 * 0);
    CHECK(truncation_rank(sigma, 0.0, -1) == 3);
    CHECK(truncation_rank(sigma, 0.3, -1) == 2);
    CHECK(truncation_rank(sigma, 0.29, -1) == 3);
    CHECK(truncation_rank(sigma, 0.0, 1) == 1);
    CHECK(truncation_rank(sigma, 10.0, -1) == 0);
}

TEST_CASE("thin qr") {
    Rng rng(13);
    const Eigen::MatrixXd a = random_matrix(9, 4, rng);
    Eigen::MatrixXd q, r;
    thin_qr(a, q, r);
    CHECK(q.cols() == 4);
    CHECK((q * r - a).norm() < 1e-13);
    CHECK((q.transpose() * q - Eigen::MatrixXd::Identity(4, 4)).norm() < 1e-13);
}
