#include "mrtensor/decompose.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>

namespace mrt {

namespace {

using Clock = std::chrono::steady_clock;
using Observer = std::function<void(const std::vector<Payload>&, double)>;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string chain_string(const TTRanks& r) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << ')';
    return os.str();
}

// Validates the rank vector and clips TT chains to what each level supports.
RankVector effective_ranks(const GridSpec& g, const DecomposeConfig& cfg, std::vector<std::string>& notes) {
    if (static_cast<Index>(cfg.ranks.size()) != g.levels + 1) {
        throw std::invalid_argument("rank vector has " + std::to_string(cfg.ranks.size()) + " entries but the grid has " +
                                    std::to_string(g.levels + 1) + " levels");
    }
    const Index d = g.order();
    RankVector out;
    for (Index k = 0; k <= g.levels; ++k) {
        const TTRanks& req = cfg.ranks[static_cast<std::size_t>(k)];
        if (cfg.format == BaseFormat::CP) {
            if (req.size() != 1 || req[0] < 0) {
                throw std::invalid_argument("CP levels take a single non-negative rank");
            }
            out.push_back(req);
            continue;
        }
        if (d == 1) {
            if (req.size() > 1) throw std::invalid_argument("order-1 TT levels take at most one rank entry");
            out.push_back(is_zero_rank(req) ? TTRanks{0} : TTRanks{});
            continue;
        }
        if (static_cast<Index>(req.size()) != d - 1) {
            throw std::invalid_argument("level " + std::to_string(k) + " rank chain " + chain_string(req) +
                                        " needs " + std::to_string(d - 1) + " entries");
        }
        if (is_zero_rank(req)) {
            out.push_back(req);
            continue;
        }
        TTRanks clipped = clip_ranks(req, g.level_shape(k));
        if (clipped != req) {
            notes.push_back("level " + std::to_string(k) + ": rank chain " + chain_string(req) + " clipped to " +
                            chain_string(clipped));
        }
        out.push_back(std::move(clipped));
    }
    return out;
}

Payload zero_payload(const Shape& shape, BaseFormat format) {
    if (format == BaseFormat::TT) return TTTensor::zero(shape);
    return CPTensor::zero(shape);
}

bool rank_is_zero(const TTRanks& chain) { return !chain.empty() && is_zero_rank(chain); }

Payload round_dense(const DenseTensor& target, const TTRanks& chain, const DecomposeConfig& cfg) {
    if (rank_is_zero(chain)) return zero_payload(target.shape(), cfg.format);
    if (cfg.format == BaseFormat::TT) return tt_svd(target, Truncation::ranks(chain));
    return cp_als(target, chain[0], cfg.cp).tensor;
}

std::vector<Payload> initial_levels(const GridSpec& g, const DecomposeConfig& cfg) {
    std::vector<Payload> levels;
    if (cfg.warm_start) {
        if (!(cfg.warm_start->grid() == g) || cfg.warm_start->format() != cfg.format) {
            throw std::invalid_argument("warm start does not match the grid or base format");
        }
        return cfg.warm_start->payloads();
    }
    for (Index k = 0; k <= g.levels; ++k) levels.push_back(zero_payload(g.level_shape(k), cfg.format));
    return levels;
}

std::vector<double> norms_of(const std::vector<Payload>& levels) {
    std::vector<double> out;
    for (const auto& p : levels) out.push_back(payload_norm(p));
    return out;
}

bool should_stop(const DecomposeTrace& trace, double early_stop) {
    const auto& r = trace.residuals;
    if (r.empty()) return false;
    if (r.back() == 0.0) return true;
    if (early_stop <= 0.0 || r.size() < 2) return false;
    const double prev = r[r.size() - 2];
    return prev > 0.0 && (prev - r.back()) / prev < early_stop;
}

DecomposeResult run_dense(const DenseTensor& t, const GridSpec& g, const RankVector& ranks, const DecomposeConfig& cfg,
                          std::vector<Payload> levels, const Observer& observe) {
    const Index top = g.levels;
    const auto L = static_cast<std::size_t>(top);
    DecomposeResult result;
    std::vector<DenseTensor> dense_levels;
    for (const auto& p : levels) dense_levels.push_back(payload_to_dense(p));

    for (int it = 0; it < cfg.max_iter; ++it) {
        const auto start = Clock::now();
        // Downward sweep: down[k] = ave_{L-k}(T - sum_{l>k} ext_{L-l}(T_l)).
        std::vector<DenseTensor> down(L + 1);
        for (Index k = top; k >= 1; --k) {
            const auto ku = static_cast<std::size_t>(k);
            const DenseTensor& above = k == top ? t : down[ku];
            down[ku - 1] = payload_is_zero(levels[ku]) ? ave(above, 1, g.batch)
                                                        : ave(subtract(above, dense_levels[ku]), 1, g.batch);
        }
        // Upward sweep.
        DenseTensor up(g.level_shape(0));
        for (Index k = 0; k < top; ++k) {
            const auto ku = static_cast<std::size_t>(k);
            if (rank_is_zero(ranks[ku])) {
                levels[ku] = zero_payload(g.level_shape(k), cfg.format);
                dense_levels[ku] = DenseTensor(g.level_shape(k));
                up = ext(up, 1, g.batch);
                continue;
            }
            levels[ku] = round_dense(subtract(down[ku], up), ranks[ku], cfg);
            dense_levels[ku] = payload_to_dense(levels[ku]);
            up.values() += dense_levels[ku].values();
            up = ext(up, 1, g.batch);
        }
        down.clear();
        DenseTensor residual = top == 0 ? t : subtract(t, up);
        levels[L] = round_dense(residual, ranks[L], cfg);
        dense_levels[L] = payload_to_dense(levels[L]);
        residual.values() -= dense_levels[L].values();

        const double res = frobenius_norm(residual);
        result.trace.residuals.push_back(res);
        result.trace.level_norms.push_back(norms_of(levels));
        result.trace.seconds.push_back(seconds_since(start));
        if (observe) observe(levels, res);
        if (should_stop(result.trace, cfg.early_stop)) {
            result.trace.early_stopped = it + 1 < cfg.max_iter;
            break;
        }
    }
    result.approximation = MSTensor(g, cfg.format, std::move(levels));
    return result;
}

TTTensor hygiene_round(const TTTensor& x, const DecomposeConfig& cfg) {
    return tt_round(x, Truncation::relative(cfg.hygiene));
}

DecomposeResult run_tt(const TTTensor& t, const GridSpec& g, const RankVector& ranks, const DecomposeConfig& cfg,
                       std::vector<Payload> init) {
    const Index top = g.levels;
    const auto L = static_cast<std::size_t>(top);
    std::vector<TTTensor> levels;
    for (auto& p : init) levels.push_back(std::get<TTTensor>(std::move(p)));
    auto round_level = [&](const TTTensor& target, std::size_t k) {
        if (rank_is_zero(ranks[k])) return TTTensor::zero(target.shape());
        return tt_round(target, Truncation::ranks(ranks[k]));
    };

    DecomposeResult result;
    for (int it = 0; it < cfg.max_iter; ++it) {
        const auto start = Clock::now();
        std::vector<TTTensor> down(L + 1);
        down[L] = t;
        for (Index k = top; k >= 1; --k) {
            const auto ku = static_cast<std::size_t>(k);
            const TTTensor diff = levels[ku].is_zero() ? down[ku] : hygiene_round(tt_subtract(down[ku], levels[ku]), cfg);
            down[ku - 1] = tt_ave(diff, 1, g.batch);
        }
        TTTensor up = TTTensor::zero(g.level_shape(0));
        for (Index k = 0; k < top; ++k) {
            const auto ku = static_cast<std::size_t>(k);
            levels[ku] = round_level(tt_subtract(down[ku], up), ku);
            up = tt_ext(hygiene_round(tt_add(up, levels[ku]), cfg), 1, g.batch);
        }
        const TTTensor residual_target = top == 0 ? t : hygiene_round(tt_subtract(t, up), cfg);
        levels[L] = round_level(residual_target, L);
        const double res = tt_norm(tt_subtract(residual_target, levels[L]));

        std::vector<double> norms;
        for (const auto& l : levels) norms.push_back(tt_norm(l));
        result.trace.residuals.push_back(res);
        result.trace.level_norms.push_back(std::move(norms));
        result.trace.seconds.push_back(seconds_since(start));
        if (should_stop(result.trace, cfg.early_stop)) {
            result.trace.early_stopped = it + 1 < cfg.max_iter;
            break;
        }
    }
    std::vector<Payload> payloads(levels.begin(), levels.end());
    result.approximation = MSTensor(g, BaseFormat::TT, std::move(payloads));
    return result;
}

void check_config(const DecomposeConfig& cfg) {
    if (cfg.max_iter < 1) throw std::invalid_argument("max_iter must be at least 1");
}

}  // namespace

DecomposeResult alternating_decompose(const DenseTensor& t, const DecomposeConfig& cfg) {
    check_config(cfg);
    const GridSpec g(cfg.batch, cfg.levels, t.shape());
    std::vector<std::string> notes;
    const RankVector ranks = effective_ranks(g, cfg, notes);
    DecomposeResult r = run_dense(t, g, ranks, cfg, initial_levels(g, cfg), nullptr);
    r.trace.notes = std::move(notes);
    return r;
}

DecomposeResult alternating_decompose(const TTTensor& t, const DecomposeConfig& cfg) {
    check_config(cfg);
    if (cfg.format != BaseFormat::TT) return alternating_decompose(tt_to_dense(t), cfg);
    const GridSpec g(cfg.batch, cfg.levels, t.shape());
    std::vector<std::string> notes;
    const RankVector ranks = effective_ranks(g, cfg, notes);
    DecomposeResult r = run_tt(t, g, ranks, cfg, initial_levels(g, cfg));
    r.trace.notes = std::move(notes);
    return r;
}

DecomposeResult restructured_decompose(const DenseTensor& t, const DecomposeConfig& cfg) {
    check_config(cfg);
    const GridSpec g(cfg.batch, cfg.levels, t.shape());
    const Index top = g.levels;
    const auto L = static_cast<std::size_t>(top);
    DecomposeResult result;
    const RankVector ranks = effective_ranks(g, cfg, result.trace.notes);
    const std::vector<Payload> warm = initial_levels(g, cfg);

    std::vector<DenseTensor> ref_dense;
    DenseTensor optimal_residual;
    if (cfg.reference) {
        if (!(cfg.reference->grid() == g)) throw std::invalid_argument("reference does not match the grid");
        for (const auto& p : cfg.reference->payloads()) ref_dense.push_back(payload_to_dense(p));
        optimal_residual = subtract(t, ms_reconstruct(*cfg.reference));
    }

    std::vector<Payload> finals;
    for (Index k = 0; k <= top; ++k) finals.push_back(zero_payload(g.level_shape(k), cfg.format));
    DenseTensor settled(g.base_shape);     // sum_{l<k} ext_{L-l}(T_l^(M))
    DenseTensor settled_err(g.base_shape); // sum_{l<k} ext_{L-l}(T_l - T_l^(M))

    for (Index k = 0; k <= top; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        if (rank_is_zero(ranks[ku])) continue;
        const auto start = Clock::now();
        const DenseTensor target = subtract(t, settled);

        // Companion rank on the finest level: r_{k+1} + ... + r_L.
        TTRanks companion;
        bool companion_zero = true;
        for (std::size_t l = ku + 1; l <= L; ++l) {
            if (rank_is_zero(ranks[l])) continue;
            if (companion.empty()) {
                companion = ranks[l];
            } else {
                for (std::size_t e = 0; e < companion.size(); ++e) companion[e] += ranks[l][e];
            }
            companion_zero = false;
        }
        RankVector two_level;
        for (Index m = 0; m <= top; ++m) {
            two_level.push_back(cfg.format == BaseFormat::CP || g.order() > 1
                                    ? TTRanks(std::max<std::size_t>(1, ranks[ku].size()), 0)
                                    : TTRanks{0});
        }
        two_level[ku] = ranks[ku];
        if (k < top && !companion_zero) {
            two_level[L] = cfg.format == BaseFormat::TT && g.order() > 1 ? clip_ranks(companion, g.base_shape) : companion;
        }

        std::vector<Payload> init;
        for (Index m = 0; m <= top; ++m) init.push_back(zero_payload(g.level_shape(m), cfg.format));
        init[ku] = warm[ku];
        if (k < top && !companion_zero) {
            DenseTensor fine(g.base_shape);
            for (std::size_t l = ku + 1; l <= L; ++l) {
                if (!payload_is_zero(warm[l])) {
                    fine.values() += ext(payload_to_dense(warm[l]), top - static_cast<Index>(l), g.batch).values();
                }
            }
            init[L] = round_dense(fine, two_level[L], cfg);
        }

        LevelHistory history;
        history.level = k;
        DenseTensor fine_truth;
        if (cfg.reference) {
            fine_truth = DenseTensor(g.base_shape);
            for (std::size_t l = ku + 1; l <= L; ++l) {
                fine_truth.values() += ext(ref_dense[l], top - static_cast<Index>(l), g.batch).values();
            }
        }
        auto observe = [&](const std::vector<Payload>& levels, double residual) {
            const DenseTensor current = payload_to_dense(levels[ku]);
            history.norms.push_back(frobenius_norm(current));
            history.residuals.push_back(residual);
            if (!cfg.reference) return;
            const DenseTensor level_err = subtract(ref_dense[ku], current);
            history.errors.push_back(frobenius_norm(level_err));
            const DenseTensor companion_now =
                k < top ? payload_to_dense(levels[L]) : DenseTensor(g.base_shape);
            DenseTensor e = subtract(optimal_residual, companion_now);
            e.values() += fine_truth.values() + settled_err.values();
            history.e_norms.push_back(frobenius_norm(ave(e, top - k, g.batch)));
            DenseTensor dres = ext(level_err, top - k, g.batch);
            dres.values() += optimal_residual.values() + settled_err.values();
            history.d_norms.push_back(frobenius_norm(dres));
        };

        DecomposeConfig inner = cfg;
        inner.warm_start.reset();
        DecomposeResult step = run_dense(target, g, two_level, inner, std::move(init), observe);
        finals[ku] = step.approximation.payload(k);
        const DenseTensor placed = ext(payload_to_dense(finals[ku]), top - k, g.batch);
        settled.values() += placed.values();
        if (cfg.reference) {
            settled_err.values() += ext(ref_dense[ku], top - k, g.batch).values() - placed.values();
        }
        result.trace.residuals.push_back(step.trace.residuals.back());
        result.trace.level_norms.push_back(norms_of(finals));
        result.trace.seconds.push_back(seconds_since(start));
        result.trace.levels.push_back(std::move(history));
    }
    result.approximation = MSTensor(g, cfg.format, std::move(finals));
    return result;
}

double relative_error(const DenseTensor& t, const MSTensor& x) {
    const double n = frobenius_norm(t);
    const double e = frobenius_norm(subtract(t, ms_reconstruct(x)));
    return n == 0.0 ? e : e / n;
}

}  // namespace mrt
