#include <doctest.h>

#include "mrtensor/decompose.hpp"
#include "mrtensor/experiments.hpp"
#include "mrtensor/theory.hpp"
#include "support.hpp"

using namespace mrt;
using namespace mrt::test;

namespace {

DecomposeConfig config(const std::vector<Index>& scalars, Index order, BaseFormat format = BaseFormat::TT) {
    DecomposeConfig cfg;
    cfg.ranks = make_rank_vector(scalars, format == BaseFormat::CP ? 1 : order - 1);
    cfg.levels = static_cast<Index>(scalars.size()) - 1;
    cfg.format = format;
    return cfg;
}

void check_budget(const MSTensor& x, const RankVector& ranks) {
    const RankVector got = x.ranks();
    for (std::size_t k = 0; k < ranks.size(); ++k)
        for (std::size_t i = 0; i < got[k].size(); ++i) CHECK(got[k][i] <= ranks[k][i]);
}

}  // namespace

TEST_CASE("constant tensor on the coarsest level") {
    const DenseTensor t = ext(DenseTensor::constant({1, 1, 1}, 3.5), 3, 2);
    DecomposeConfig cfg = config({1, 0, 0, 0}, 3);
    cfg.max_iter = 1;
    const DecomposeResult r = alternating_decompose(t, cfg);
    REQUIRE(r.trace.residuals.size() == 1);
    CHECK(r.trace.residuals[0] <= 1e-12 * frobenius_norm(t));
    CHECK(r.approximation.tt(0).ranks() == TTRanks{1, 1});
}

TEST_CASE("exact multiresolution matrices are recovered") {
    Rng rng(51);
    for (int trial = 0; trial < 3; ++trial) {
        const GridSpec g(2, 2, {64, 64});
        DecomposeConfig cfg = config({1, 1, 2}, 2);
        cfg.max_iter = 50;
        cfg.early_stop = 0.0;
        const MSTensor x = random_ms_tensor(g, BaseFormat::TT, cfg.ranks, rng);
        const DenseTensor t = ms_reconstruct(x);
        const DecomposeResult r = alternating_decompose(t, cfg);
        CHECK(r.trace.residuals.back() <= 1e-8 * frobenius_norm(t));
        check_budget(r.approximation, cfg.ranks);
    }
}

TEST_CASE("residuals decrease for matrices") {
    Rng rng(52);
    for (int trial = 0; trial < 5; ++trial) {
        const DenseTensor t = random_dense({32, 32}, rng);
        DecomposeConfig cfg = config({2, 2, 2, 2}, 2);
        cfg.max_iter = 8;
        cfg.early_stop = 0.0;
        const DecomposeResult r = alternating_decompose(t, cfg);
        CHECK(r.trace.residuals.size() == 8);
        CHECK(r.trace.level_norms.size() == 8);
        CHECK(r.trace.seconds.size() == 8);
        for (std::size_t i = 1; i < r.trace.residuals.size(); ++i) {
            CHECK(r.trace.residuals[i] <= r.trace.residuals[i - 1] + 1e-10);
        }
    }
}

TEST_CASE("trace residual matches the reconstruction") {
    Rng rng(53);
    const DenseTensor t = random_dense({16, 8, 8}, rng);
    const DecomposeResult r = alternating_decompose(t, config({1, 2, 3}, 3));
    CHECK(r.trace.residuals.back() ==
          doctest::Approx(frobenius_norm(subtract(t, ms_reconstruct(r.approximation)))).epsilon(1e-10));
}

TEST_CASE("dense and compressed sweeps agree") {
    Rng rng(54);
    for (int trial = 0; trial < 2; ++trial) {
        const GridSpec g(2, 2, {16, 16, 16});
        DecomposeConfig cfg = config({2, 2, 3}, 3);
        cfg.max_iter = 4;
        cfg.early_stop = 0.0;
        const MSTensor x = random_ms_tensor(g, BaseFormat::TT, config({2, 2, 4}, 3).ranks, rng);
        DenseTensor t = ms_reconstruct(x);
        t.values() += 0.05 * random_dense(t.shape(), rng).values() / std::sqrt(static_cast<double>(t.size()));
        const DecomposeResult dense = alternating_decompose(t, cfg);
        const DecomposeResult compressed = alternating_decompose(tt_svd(t), cfg);
        CHECK(rel_diff(ms_reconstruct(compressed.approximation), ms_reconstruct(dense.approximation)) <= 1e-8);
        check_budget(compressed.approximation, cfg.ranks);
    }
}

TEST_CASE("rank chains are clipped and reported") {
    Rng rng(55);
    const DenseTensor t = random_dense({8, 8}, rng);
    const DecomposeResult r = alternating_decompose(t, config({5, 5, 5, 5}, 2));
    CHECK(r.trace.notes.size() == 3);
    CHECK(r.approximation.tt(0).ranks() == TTRanks{1});
    CHECK(r.approximation.tt(1).ranks() == TTRanks{2});
}

TEST_CASE("invalid configurations") {
    const DenseTensor t({8, 8});
    CHECK_THROWS(alternating_decompose(t, config({1, 1}, 3)));
    DecomposeConfig cfg = config({1, 1}, 2);
    cfg.max_iter = 0;
    CHECK_THROWS(alternating_decompose(t, cfg));
    CHECK_THROWS(alternating_decompose(DenseTensor({6, 8}), config({1, 1, 1, 1}, 2)));
}

TEST_CASE("motivating example with canonical levels") {
    const MultiscaleSample s = multiscale_test_tensor(64, 3, 2);
    DecomposeConfig cfg = config({0, 0, 0, 0, 1, 1, 1}, 3, BaseFormat::CP);
    cfg.max_iter = 1;
    const DecomposeResult r = alternating_decompose(s.tensor, cfg);
    const double err = relative_error(s.tensor, r.approximation);
    CHECK(err < 1.0 / std::sqrt(3.0) - 0.1);
    CHECK(err < 10.0 / 64.0);
}

TEST_CASE("restructured sweep") {
    SUBCASE("zero tensor") {
        const DecomposeResult r = restructured_decompose(DenseTensor({8, 8}), config({1, 1, 1, 1}, 2));
        for (const auto& p : r.approximation.payloads()) CHECK(payload_is_zero(p));
    }
    SUBCASE("only the finest level reduces to one truncation") {
        Rng rng(56);
        const DenseTensor t = random_dense({8, 8}, rng);
        const DecomposeResult r = restructured_decompose(t, config({0, 0, 3}, 2));
        CHECK(rel_diff(ms_reconstruct(r.approximation), tt_to_dense(tt_svd(t, Truncation::ranks({3})))) <= 1e-14);
    }
    SUBCASE("local convergence from a perturbed start") {
        Rng rng(57);
        const GridSpec g(2, 4, {32, 32});
        DecomposeConfig cfg = config({0, 2, 0, 3, 3}, 2);
        cfg.max_iter = 60;
        cfg.early_stop = 0.0;
        cfg.reference = random_ms_tensor(g, BaseFormat::TT, cfg.ranks, rng);
        cfg.warm_start = perturb_levels(*cfg.reference, 0.1, rng);
        const DecomposeResult r = restructured_decompose(ms_reconstruct(*cfg.reference), cfg);
        REQUIRE(r.trace.levels.size() == 3);
        for (const auto& h : r.trace.levels) {
            CHECK(h.errors.size() == h.norms.size());
            CHECK(h.e_norms.size() == h.errors.size());
            CHECK(h.errors.back() < 1e-8);
        }
    }
}
