#include "mrtensor/experiments.hpp"

#include <chrono>
#include <cmath>

namespace mrt {

namespace {

Eigen::MatrixXd gaussian(Index rows, Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    Eigen::MatrixXd m(rows, cols);
    for (Index c = 0; c < cols; ++c)
        for (Index r = 0; r < rows; ++r) m(r, c) = normal(rng);
    return m;
}

RankVector uniform_ranks(const GridSpec& g, BaseFormat format, Index r) {
    const Index chain = format == BaseFormat::CP ? 1 : std::max<Index>(g.order() - 1, 1);
    RankVector out;
    for (Index k = 0; k <= g.levels; ++k) out.push_back(TTRanks(static_cast<std::size_t>(chain), r));
    return out;
}

}  // namespace

TTTensor random_tt(const Shape& shape, const TTRanks& ranks, std::mt19937_64& rng) {
    const auto d = static_cast<Index>(shape.size());
    if (d > 1 && is_zero_rank(ranks)) return TTTensor::zero(shape);
    const TTRanks chain = d > 1 ? clip_ranks(ranks, shape) : TTRanks{};
    std::vector<TTCore> cores;
    Index left = 1;
    for (Index j = 0; j < d; ++j) {
        const Index right = j + 1 < d ? chain[static_cast<std::size_t>(j)] : 1;
        const Index n = shape[static_cast<std::size_t>(j)];
        cores.push_back(TTCore::from_left_unfolding(gaussian(left * n, right, rng), left, n));
        left = right;
    }
    TTTensor x(std::move(cores));
    return tt_scale(x, 1.0 / tt_norm(x));
}

CPTensor random_cp(const Shape& shape, Index rank, std::mt19937_64& rng) {
    if (rank == 0) return CPTensor::zero(shape);
    std::vector<Eigen::MatrixXd> factors;
    for (Index n : shape) factors.push_back(gaussian(n, rank, rng));
    CPTensor x(Eigen::VectorXd::Ones(rank), std::move(factors));
    return cp_scale(x, 1.0 / x.norm());
}

MSTensor random_ms_tensor(const GridSpec& grid, BaseFormat format, const RankVector& ranks, std::mt19937_64& rng) {
    if (static_cast<Index>(ranks.size()) != grid.levels + 1) throw std::invalid_argument("rank vector length mismatch");
    std::vector<Payload> levels;
    for (Index k = 0; k <= grid.levels; ++k) {
        const TTRanks& r = ranks[static_cast<std::size_t>(k)];
        const Shape s = grid.level_shape(k);
        if (format == BaseFormat::CP) {
            levels.emplace_back(random_cp(s, r.at(0), rng));
        } else if (!r.empty() && is_zero_rank(r)) {
            levels.emplace_back(TTTensor::zero(s));
        } else {
            levels.emplace_back(random_tt(s, r, rng));
        }
    }
    return MSTensor(grid, format, std::move(levels));
}

MSTensor perturb_levels(const MSTensor& x, double relative, std::mt19937_64& rng) {
    std::vector<Payload> levels;
    for (const auto& p : x.payloads()) {
        if (payload_is_zero(p)) {
            levels.push_back(p);
            continue;
        }
        DenseTensor t = payload_to_dense(p);
        const Eigen::VectorXd g = gaussian(t.size(), 1, rng).col(0);
        t.values() += relative * frobenius_norm(t) / g.norm() * g;
        if (x.format() == BaseFormat::TT) {
            levels.emplace_back(tt_svd(t));
        } else {
            const Index r = std::get<CPTensor>(p).rank();
            levels.emplace_back(cp_als(t, r).tensor);
        }
    }
    return MSTensor(x.grid(), x.format(), std::move(levels));
}

DenseTensor planted_multiscale_image(Index n, Index levels, Index rank, double noise, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const GridSpec grid(2, levels, {n, n});
    DenseTensor image({n, n});
    for (Index k : {Index{0}, levels / 2, levels}) {
        const Shape s = grid.level_shape(k);
        DenseTensor part = ext(tt_to_dense(random_tt(s, {rank}, rng)), levels - k, 2);
        image.values() += part.values() / frobenius_norm(part);
    }
    const Eigen::VectorXd g = gaussian(image.size(), 1, rng).col(0);
    image.values() += noise * frobenius_norm(image) / g.norm() * g;
    return image;
}

std::vector<BenchRow> compression_sweep(const DenseTensor& t, const SweepOptions& options) {
    using Clock = std::chrono::steady_clock;
    if (options.rank_from < 1 || options.rank_to < options.rank_from) {
        throw std::invalid_argument("rank sweep " + std::to_string(options.rank_from) + ":" +
                                    std::to_string(options.rank_to) + " is empty");
    }
    const GridSpec grid(options.batch, options.levels, t.shape());
    const double t_norm = frobenius_norm(t);
    const auto dense_elements = static_cast<double>(t.size());
    auto rel = [&](double e) { return t_norm == 0.0 ? e : e / t_norm; };
    auto elapsed = [&](Clock::time_point start) {
        return options.timings ? std::chrono::duration<double>(Clock::now() - start).count() : 0.0;
    };

    std::vector<BenchRow> rows;
    for (Index r = options.rank_from; r <= options.rank_to; ++r) {
        DecomposeConfig cfg;
        cfg.ranks = uniform_ranks(grid, options.format, r);
        cfg.batch = options.batch;
        cfg.levels = options.levels;
        cfg.max_iter = options.max_iter;
        cfg.format = options.format;
        cfg.cp = options.cp;
        auto start = Clock::now();
        const DecomposeResult fit =
            options.restructured ? restructured_decompose(t, cfg) : alternating_decompose(t, cfg);
        const StorageReport storage = ms_storage(fit.approximation);
        rows.push_back({"ms", r, relative_error(t, fit.approximation), storage.compression_ratio, elapsed(start)});

        start = Clock::now();
        double err = 0.0;
        Index params = 0;
        if (options.format == BaseFormat::TT) {
            const TTRanks chain(static_cast<std::size_t>(std::max<Index>(t.order() - 1, 1)), r);
            const TTTensor base = tt_svd(t, Truncation::ranks(t.order() > 1 ? chain : TTRanks{}));
            err = frobenius_norm(subtract(t, tt_to_dense(base)));
            params = base.parameter_count();
        } else {
            const CpAlsResult base = cp_als(t, r, options.cp);
            err = base.residual;
            params = base.tensor.parameter_count();
        }
        const double ratio = params == 0 ? std::numeric_limits<double>::infinity() : dense_elements / static_cast<double>(params);
        rows.push_back({options.format == BaseFormat::TT ? "tt" : "cp", r, rel(err), ratio, elapsed(start)});
    }
    return rows;
}

}  // namespace mrt
