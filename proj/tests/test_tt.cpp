#include <doctest.h>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "mrtensor/experiments.hpp"
#include "mrtensor/tt.hpp"
#include "support.hpp"

using namespace mrt;
using namespace mrt::test;

namespace {

TTTensor random_tt_tensor(const Shape& s, Index r, Rng& rng) {
    return tt_scale(random_tt(s, TTRanks(s.size() - 1, r), rng), 1.0 + gaussian(rng) * 0.1);
}

Eigen::MatrixXd pinv(const Eigen::MatrixXd& m) { return m.completeOrthogonalDecomposition().pseudoInverse(); }

// Independent fixed-rank alternating least squares for order-3 TT; returns the
// best error over `restarts` random starts.
double tt3_als_best(const DenseTensor& t, Index r1, Index r2, int restarts, Rng& rng) {
    const Index n1 = t.mode(0), n2 = t.mode(1), n3 = t.mode(2);
    double best = std::numeric_limits<double>::infinity();
    for (int s = 0; s < restarts; ++s) {
        Eigen::MatrixXd g1 = Eigen::MatrixXd::NullaryExpr(n1, r1, [&] { return gaussian(rng); });
        std::vector<Eigen::MatrixXd> g2(n2, Eigen::MatrixXd(r1, r2));
        for (auto& m : g2) m = Eigen::MatrixXd::NullaryExpr(r1, r2, [&] { return gaussian(rng); });
        Eigen::MatrixXd g3 = Eigen::MatrixXd::NullaryExpr(r2, n3, [&] { return gaussian(rng); });
        auto slice = [&](Index j) {
            Eigen::MatrixXd m(n1, n3);
            for (Index i = 0; i < n1; ++i)
                for (Index k = 0; k < n3; ++k) m(i, k) = t({i, j, k});
            return m;
        };
        double err = 0.0;
        for (int sweep = 0; sweep < 15; ++sweep) {
            // G1: T_(1) = G1 * [G2_j G3]_j
            Eigen::MatrixXd m(r1, n2 * n3), t1(n1, n2 * n3);
            for (Index j = 0; j < n2; ++j) {
                m.middleCols(j * n3, n3) = g2[j] * g3;
                t1.middleCols(j * n3, n3) = slice(j);
            }
            g1 = t1 * pinv(m);
            // G3: stacked over j, [G1 G2_j] G3 = T_j
            Eigen::MatrixXd nmat(n1 * n2, r2), t3(n1 * n2, n3);
            for (Index j = 0; j < n2; ++j) {
                nmat.middleRows(j * n1, n1) = g1 * g2[j];
                t3.middleRows(j * n1, n1) = slice(j);
            }
            g3 = pinv(nmat) * t3;
            const Eigen::MatrixXd p1 = pinv(g1), p3 = pinv(g3);
            err = 0.0;
            for (Index j = 0; j < n2; ++j) {
                g2[j] = p1 * slice(j) * p3;
                err += (slice(j) - g1 * g2[j] * g3).squaredNorm();
            }
        }
        best = std::min(best, std::sqrt(err));
    }
    return best;
}

}  // namespace

TEST_CASE("tt_svd recovers rank-one tensors exactly") {
    Rng rng(21);
    const std::vector<Eigen::VectorXd> f{random_vector(4, rng), random_vector(5, rng), random_vector(3, rng)};
    const DenseTensor t = outer(f);
    const TTTensor x = tt_svd(t, Truncation::ranks({1, 1}));
    CHECK(x.ranks() == TTRanks{1, 1});
    CHECK(rel_diff(tt_to_dense(x), t) <= 1e-12);
}

TEST_CASE("lossless tt_svd round trip") {
    Rng rng(22);
    for (const Shape& s : {Shape{7}, Shape{3, 9}, Shape{4, 5, 6}, Shape{16, 16, 16, 16}}) {
        const DenseTensor t = random_dense(s, rng);
        CHECK(rel_diff(tt_to_dense(tt_svd(t)), t) <= 1e-12);
    }
}

TEST_CASE("matrix truncation equals the singular value tail") {
    Rng rng(23);
    const DenseTensor t = random_dense({16, 16}, rng);
    Eigen::MatrixXd m(16, 16);
    for (Index i = 0; i < 16; ++i)
        for (Index j = 0; j < 16; ++j) m(i, j) = t({i, j});
    const Eigen::VectorXd sigma = Eigen::BDCSVD<Eigen::MatrixXd>(m).singularValues();
    const double tail = sigma.tail(13).norm();
    const TTTensor x = tt_svd(t, Truncation::ranks({3}));
    CHECK(std::abs(frobenius_norm(subtract(t, tt_to_dense(x))) - tail) <= 1e-10);

    const TTTensor big = tt_svd(t);
    const TTTensor rounded = tt_round(big, Truncation::ranks({3}));
    CHECK(std::abs(frobenius_norm(subtract(t, tt_to_dense(rounded))) - tail) <= 1e-10);
}

TEST_CASE("relative tolerance contract") {
    Rng rng(24);
    for (double eps : {0.5, 0.1, 0.01}) {
        const DenseTensor t = random_dense({6, 5, 4, 3}, rng);
        const TTTensor x = tt_svd(t, Truncation::relative(eps));
        CHECK(frobenius_norm(subtract(t, tt_to_dense(x))) <= eps * frobenius_norm(t) * (1 + 1e-12));
        const TTTensor y = tt_round(tt_svd(t), Truncation::relative(eps));
        CHECK(frobenius_norm(subtract(t, tt_to_dense(y))) <= eps * frobenius_norm(t) * (1 + 1e-12));
    }
}

TEST_CASE("quasi-optimality against an independent alternating optimizer") {
    Rng rng(25);
    for (int trial = 0; trial < 2; ++trial) {
        const DenseTensor t = random_dense({4, 5, 4}, rng);
        for (Index r1 = 1; r1 <= 3; ++r1)
            for (Index r2 = 1; r2 <= 3; ++r2) {
                const double svd_err = frobenius_norm(subtract(t, tt_to_dense(tt_svd(t, Truncation::ranks({r1, r2})))));
                const double best = tt3_als_best(t, r1, r2, 200, rng);
                CHECK(svd_err <= std::sqrt(2.0) * best + 1e-12);
            }
    }
}

TEST_CASE("rounding keeps or reduces ranks") {
    Rng rng(26);
    const TTTensor x = random_tt_tensor({5, 6, 4, 3}, 3, rng);
    const TTTensor same = tt_round(x, Truncation::ranks({10, 10, 10}));
    CHECK(rel_diff(tt_to_dense(same), tt_to_dense(x)) <= 1e-12);
    for (std::size_t i = 0; i < 3; ++i) CHECK(same.ranks()[i] <= x.ranks()[i]);

    const TTTensor doubled = tt_add(x, x);
    CHECK(doubled.ranks() == TTRanks{6, 6, 6});
    const TTTensor back = tt_round(doubled, Truncation::relative(1e-14));
    CHECK(back.ranks() == tt_svd(tt_to_dense(doubled), Truncation::relative(1e-14)).ranks());
    CHECK(back.ranks() == x.ranks());

    for (int trial = 0; trial < 10; ++trial) {
        const TTTensor y = random_tt_tensor({4, 4, 4, 4}, uniform_int(rng, 1, 4), rng);
        const TTTensor z = tt_round(y, Truncation::relative(0.3));
        for (std::size_t i = 0; i < 3; ++i) CHECK(z.ranks()[i] <= y.ranks()[i]);
    }
}

TEST_CASE("tt arithmetic against dense oracles") {
    Rng rng(27);
    const Shape s{3, 4, 5};
    const TTTensor x = random_tt_tensor(s, 2, rng), y = random_tt_tensor(s, 3, rng);
    const DenseTensor dx = tt_to_dense(x), dy = tt_to_dense(y);

    CHECK(rel_diff(tt_to_dense(tt_add(x, TTTensor::zero(s))), dx) == 0.0);
    CHECK(rel_diff(tt_to_dense(tt_add(x, y)), add(dx, dy)) <= 1e-10);
    CHECK(rel_diff(tt_to_dense(tt_subtract(x, y)), subtract(dx, dy)) <= 1e-10);
    const TTTensor h = tt_hadamard(x, y);
    CHECK(h.ranks() == TTRanks{6, 6});
    CHECK(rel_diff(tt_to_dense(h), hadamard(dx, dy)) <= 1e-10);
    CHECK(rel_diff(tt_to_dense(tt_hadamard(x, TTTensor::ones(s))), dx) <= 1e-12);
    CHECK(rel_diff(tt_to_dense(tt_scale(x, -2.5)), scale(dx, -2.5)) <= 1e-14);
    CHECK(tt_inner(x, y) == doctest::Approx(inner(dx, dy)).epsilon(1e-12));
    CHECK(tt_norm(x) == doctest::Approx(frobenius_norm(dx)).epsilon(1e-12));
    CHECK(tt_norm(TTTensor::zero(s)) == 0.0);
    CHECK_THROWS(tt_add(x, TTTensor::zero({3, 4, 6})));

    const TTTensor m1 = random_tt_tensor({7}, 1, rng);
    CHECK(rel_diff(tt_to_dense(tt_add(m1, m1)), scale(tt_to_dense(m1), 2.0)) <= 1e-15);
}

TEST_CASE("tt mode contraction") {
    Rng rng(28);
    const Shape s{3, 4, 5};
    const TTTensor x = random_tt_tensor(s, 2, rng);
    const DenseTensor dx = tt_to_dense(x);
    for (Index j = 0; j < 3; ++j) {
        const Eigen::VectorXd v = random_vector(s[static_cast<std::size_t>(j)], rng);
        CHECK(rel_diff(tt_to_dense(tt_mode_contract(x, j, v)), mode_contract_oracle(dx, j, v)) <= 1e-12);
        Eigen::VectorXd e = Eigen::VectorXd::Zero(v.size());
        e[1] = 1.0;
        CHECK(rel_diff(tt_to_dense(tt_mode_contract(x, j, e)), mode_contract(dx, j, e)) <= 1e-12);
    }
    const TTTensor vec = random_tt_tensor({6}, 1, rng);
    const TTTensor total = tt_mode_contract(vec, 0, Eigen::VectorXd::Ones(6));
    CHECK(tt_to_dense(total).values()[0] == doctest::Approx(tt_to_dense(vec).values().sum()).epsilon(1e-14));
}

TEST_CASE("tt ext and ave commute with reconstruction") {
    Rng rng(29);
    for (int trial = 0; trial < 10; ++trial) {
        const Index b = uniform_int(rng, 2, 3);
        const Shape s = random_shape(rng, uniform_int(rng, 1, 4), b * b, 9);
        const TTTensor x = random_tt_tensor(s, uniform_int(rng, 1, 3), rng);
        const DenseTensor dx = tt_to_dense(x);
        const TTTensor e = tt_ext(x, 2, b);
        CHECK(e.ranks() == x.ranks());
        CHECK(rel_diff(tt_to_dense(e), ext(dx, 2, b)) <= 1e-12);
        const TTTensor a = tt_ave(x, 2, b);
        CHECK(a.ranks() == x.ranks());
        CHECK(rel_diff(tt_to_dense(a), ave(dx, 2, b)) <= 1e-12);
        CHECK(rel_diff(tt_to_dense(tt_ave(tt_ext(x, 1, b), 1, b)), dx) <= 1e-12);
    }
    CHECK_THROWS(tt_ave(TTTensor::ones({6, 4}), 2, 2));
}

TEST_CASE("rank helpers") {
    CHECK(maximal_ranks({2, 3, 4}) == TTRanks{2, 4});
    CHECK(clip_ranks({5, 5}, {2, 3, 4}) == TTRanks{2, 4});
    CHECK(TTTensor::zero({3, 3}).ranks() == TTRanks{0});
}
