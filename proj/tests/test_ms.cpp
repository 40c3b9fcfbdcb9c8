#include <doctest.h>

#include "mrtensor/experiments.hpp"
#include "mrtensor/ms.hpp"
#include "support.hpp"

using namespace mrt;
using namespace mrt::test;

namespace {

MSTensor random_instance(Rng& rng, const GridSpec& g, Index r) {
    return random_ms_tensor(g, BaseFormat::TT, make_rank_vector(std::vector<Index>(g.levels + 1, r), g.order() - 1), rng);
}

}  // namespace

TEST_CASE("reconstruction") {
    const GridSpec g(2, 2, {8, 4});
    CHECK(frobenius_norm(ms_reconstruct(MSTensor::zero(g, BaseFormat::TT))) == 0.0);

    Rng rng(41);
    const TTTensor fine = random_tt({8, 4}, {2}, rng);
    const MSTensor x = MSTensor::from_finest(g, fine);
    CHECK(rel_diff(ms_reconstruct(x), tt_to_dense(fine)) == 0.0);

    const GridSpec g2(2, 1, {4, 4});
    const MSTensor y = random_instance(rng, g2, 1);
    const DenseTensor want = add(ext(tt_to_dense(y.tt(0)), 1, 2), tt_to_dense(y.tt(1)));
    CHECK(rel_diff(ms_reconstruct(y), want) <= 1e-15);
    CHECK(rel_diff(ms_reconstruct(y), ms_oracle(y)) <= 1e-15);
}

TEST_CASE("partial reconstruction") {
    Rng rng(42);
    const GridSpec g(2, 1, {4, 4});
    const MSTensor x = random_instance(rng, g, 2);
    CHECK(frobenius_norm(ms_partial_reconstruct(x, std::vector<Index>{})) == 0.0);
    CHECK(rel_diff(ms_partial_reconstruct(x, std::vector<Index>{0, 1}), ms_reconstruct(x)) <= 1e-15);
    CHECK(rel_diff(ms_partial_reconstruct(x, std::vector<Index>{0}), ext(tt_to_dense(x.tt(0)), 1, 2)) <= 1e-15);
    CHECK_THROWS(ms_partial_reconstruct(x, std::vector<Index>{2}));
}

TEST_CASE("level shapes are validated") {
    const GridSpec g(2, 1, {4, 4});
    CHECK_THROWS(MSTensor(g, BaseFormat::TT, {TTTensor::zero({4, 4}), TTTensor::zero({4, 4})}));
    CHECK_THROWS(MSTensor(g, BaseFormat::TT, {TTTensor::zero({2, 2}), CPTensor::zero({4, 4})}));
    CHECK_THROWS(MSTensor(g, BaseFormat::TT, {TTTensor::zero({2, 2})}));
}

TEST_CASE("addition") {
    Rng rng(43);
    const GridSpec g(2, 2, {8, 8, 4});
    const MSTensor x = random_instance(rng, g, 2), y = random_instance(rng, g, 1);
    CHECK(rel_diff(ms_reconstruct(ms_add(x, MSTensor::zero(g, BaseFormat::TT))), ms_reconstruct(x)) == 0.0);
    const MSTensor s = ms_add(x, y);
    CHECK(rel_diff(ms_reconstruct(s), add(ms_reconstruct(x), ms_reconstruct(y))) <= 1e-12);
    for (Index k = 0; k <= 2; ++k) {
        for (std::size_t i = 0; i < 2; ++i) {
            CHECK(s.tt(k).ranks()[i] == x.tt(k).ranks()[i] + y.tt(k).ranks()[i]);
        }
    }
    CHECK_THROWS(ms_add(x, MSTensor::zero(GridSpec(2, 1, {8, 8, 4}), BaseFormat::TT)));
}

TEST_CASE("rounding") {
    Rng rng(44);
    const GridSpec g(2, 2, {8, 8, 8});
    const MSTensor x = random_instance(rng, g, 2);
    CHECK(rel_diff(ms_reconstruct(ms_round(x, 0.0)), ms_reconstruct(x)) <= 1e-12);
    CHECK(ms_round(ms_add(x, x), 1e-12).ranks() == x.ranks());

    for (double eps : {0.1, 0.01}) {
        const MSTensor y = random_instance(rng, g, 4);
        double budget = 0.0;
        for (double n : level_norms(y)) budget += eps * n;
        const double err = frobenius_norm(subtract(ms_reconstruct(y), ms_reconstruct(ms_round(y, eps))));
        CHECK(err <= budget);
    }
    const MSTensor cp = random_ms_tensor(g, BaseFormat::CP, make_rank_vector(std::vector<Index>{1, 1, 1}, 1), rng);
    CHECK_THROWS_AS(ms_round(cp, 0.1), FormatError);
}

TEST_CASE("hadamard product") {
    Rng rng(45);
    const GridSpec g(2, 2, {8, 4});
    const MSTensor x = random_instance(rng, g, 2), y = random_instance(rng, g, 2);
    CHECK(rel_diff(ms_reconstruct(ms_hadamard(x, y)), hadamard(ms_reconstruct(x), ms_reconstruct(y))) <= 1e-10);

    std::vector<Payload> ones;
    for (Index k = 0; k <= 2; ++k) {
        ones.emplace_back(k == 0 ? TTTensor::ones(g.level_shape(0)) : TTTensor::zero(g.level_shape(k)));
    }
    const MSTensor one(g, BaseFormat::TT, ones);
    CHECK(rel_diff(ms_reconstruct(ms_hadamard(x, one)), ms_reconstruct(x)) <= 1e-10);
    CHECK(frobenius_norm(ms_reconstruct(ms_hadamard(MSTensor::zero(g, BaseFormat::TT), y))) == 0.0);
}

TEST_CASE("mode contraction") {
    Rng rng(46);
    const GridSpec g(2, 2, {8, 4, 4});
    const MSTensor x = random_instance(rng, g, 2);
    const DenseTensor dx = ms_reconstruct(x);
    for (Index j = 0; j < 3; ++j) {
        const Index n = g.base_shape[static_cast<std::size_t>(j)];
        Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
        e[n - 1] = 1.0;
        CHECK(rel_diff(ms_reconstruct(ms_mode_contract(x, j, e)), mode_contract_oracle(dx, j, e)) <= 1e-10);
        const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
        CHECK(rel_diff(ms_reconstruct(ms_mode_contract(x, j, ones)), mode_contract(dx, j, ones)) <= 1e-10);
    }
    const GridSpec single(2, 0, {4, 6});
    const MSTensor s = random_instance(rng, single, 2);
    const Eigen::VectorXd v = random_vector(6, rng);
    CHECK(rel_diff(ms_reconstruct(ms_mode_contract(s, 1, v)), tt_to_dense(tt_mode_contract(s.tt(0), 1, v))) <= 1e-14);
    CHECK_THROWS(ms_mode_contract(x, 3, v));
    CHECK_THROWS(ms_mode_contract(x, 0, v));

    const GridSpec line(2, 2, {8});
    const MSTensor vec = random_instance(rng, line, 1);
    const Eigen::VectorXd w = random_vector(8, rng);
    const DenseTensor want = mode_contract(ms_reconstruct(vec), 0, w);
    CHECK(ms_reconstruct(ms_mode_contract(vec, 0, w)).values()[0] == doctest::Approx(want.values()[0]).epsilon(1e-12));
}

TEST_CASE("norm") {
    Rng rng(47);
    const GridSpec g(2, 2, {8, 8});
    CHECK(ms_norm(MSTensor::zero(g, BaseFormat::TT)) == 0.0);
    const TTTensor fine = random_tt({8, 8}, {3}, rng);
    CHECK(ms_norm(MSTensor::from_finest(g, fine)) == doctest::Approx(tt_norm(fine)).epsilon(1e-12));
    const MSTensor x = random_instance(rng, g, 2);
    CHECK(ms_norm(x) == doctest::Approx(frobenius_norm(ms_reconstruct(x))).epsilon(1e-10));
}

TEST_CASE("storage accounting") {
    CHECK(ms_storage(MSTensor::zero(GridSpec(2, 1, {8, 8}), BaseFormat::TT)).total_parameters == 0);
    Rng rng(48);
    const GridSpec g(2, 1, {8, 8});
    const MSTensor x = random_instance(rng, g, 1);
    const StorageReport s = ms_storage(x);
    CHECK(s.level_parameters == std::vector<Index>{8, 16});
    CHECK(s.total_parameters == 24);
    CHECK(s.dense_elements == 64);
    CHECK(s.compression_ratio == doctest::Approx(64.0 / 24.0));

    const TTTensor t3 = random_tt({4, 5, 6}, {2, 3}, rng);
    CHECK(t3.parameter_count() == 1 * 4 * 2 + 2 * 5 * 3 + 3 * 6 * 1);
    const MSTensor cp = random_ms_tensor(g, BaseFormat::CP, make_rank_vector(std::vector<Index>{2, 1}, 1), rng);
    CHECK(ms_storage(cp).total_parameters == 2 * (1 + 4 + 4) + 1 * (1 + 8 + 8));
}

TEST_CASE("stability margin flags cancelling components") {
    Rng rng(49);
    const GridSpec g(2, 1, {4, 4});
    const MSTensor x = random_instance(rng, g, 1);
    const double m = stability_margin(x);
    CHECK(m > 0.0);
    CHECK(std::isfinite(m));
}
