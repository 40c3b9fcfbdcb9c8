#include "mrtensor/ms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mrt {

const char* to_string(BaseFormat f) { return f == BaseFormat::TT ? "tt" : "cp"; }

RankVector make_rank_vector(std::span<const Index> scalars, Index chain_length) {
    RankVector out;
    for (Index r : scalars) out.emplace_back(static_cast<std::size_t>(chain_length), r);
    return out;
}

bool is_zero_rank(const TTRanks& chain) {
    for (Index r : chain) {
        if (r == 0) return true;
    }
    return false;
}

Shape payload_shape(const Payload& p) {
    return std::visit([](const auto& t) { return t.shape(); }, p);
}

bool payload_is_zero(const Payload& p) {
    return std::visit([](const auto& t) { return t.is_zero(); }, p);
}

Index payload_parameters(const Payload& p) {
    return std::visit([](const auto& t) { return t.parameter_count(); }, p);
}

double payload_norm(const Payload& p) {
    if (const auto* tt = std::get_if<TTTensor>(&p)) return tt_norm(*tt);
    return std::get<CPTensor>(p).norm();
}

DenseTensor payload_to_dense(const Payload& p, std::size_t limit) {
    if (const auto* tt = std::get_if<TTTensor>(&p)) return tt_to_dense(*tt, limit);
    return cp_to_dense(std::get<CPTensor>(p), limit);
}

MSTensor::MSTensor(GridSpec grid, BaseFormat format, std::vector<Payload> levels)
    : grid_(std::move(grid)), format_(format), levels_(std::move(levels)) {
    if (static_cast<Index>(levels_.size()) != grid_.levels + 1) {
        throw ShapeError("MSTensor needs " + std::to_string(grid_.levels + 1) + " levels, got " +
                         std::to_string(levels_.size()));
    }
    for (Index k = 0; k <= grid_.levels; ++k) {
        const Payload& p = levels_[static_cast<std::size_t>(k)];
        const bool is_tt = std::holds_alternative<TTTensor>(p);
        if (is_tt != (format_ == BaseFormat::TT)) {
            throw FormatError("level " + std::to_string(k) + " does not use the base format " + to_string(format_));
        }
        if (payload_shape(p) != grid_.level_shape(k)) {
            throw ShapeError("level " + std::to_string(k) + " has shape " + to_string(payload_shape(p)) +
                             ", expected " + to_string(grid_.level_shape(k)));
        }
    }
}

MSTensor MSTensor::zero(GridSpec grid, BaseFormat format) {
    std::vector<Payload> levels;
    for (Index k = 0; k <= grid.levels; ++k) {
        if (format == BaseFormat::TT) {
            levels.emplace_back(TTTensor::zero(grid.level_shape(k)));
        } else {
            levels.emplace_back(CPTensor::zero(grid.level_shape(k)));
        }
    }
    return MSTensor(std::move(grid), format, std::move(levels));
}

MSTensor MSTensor::from_finest(GridSpec grid, TTTensor finest) {
    MSTensor x = zero(std::move(grid), BaseFormat::TT);
    if (finest.shape() != x.grid_.base_shape) {
        throw ShapeError("finest level has shape " + to_string(finest.shape()) + ", expected " +
                         to_string(x.grid_.base_shape));
    }
    x.levels_.back() = std::move(finest);
    return x;
}

const TTTensor& MSTensor::tt(Index k) const {
    const auto* p = std::get_if<TTTensor>(&payload(k));
    if (!p) throw FormatError("level payload is not a TT tensor");
    return *p;
}

const CPTensor& MSTensor::cp(Index k) const {
    const auto* p = std::get_if<CPTensor>(&payload(k));
    if (!p) throw FormatError("level payload is not a CP tensor");
    return *p;
}

RankVector MSTensor::ranks() const {
    RankVector out;
    for (const auto& p : levels_) {
        if (const auto* tt = std::get_if<TTTensor>(&p)) {
            out.push_back(tt->ranks());
        } else {
            out.push_back({std::get<CPTensor>(p).rank()});
        }
    }
    return out;
}

namespace {

DenseTensor reconstruct_selected(const MSTensor& x, const std::vector<bool>& include, std::size_t limit) {
    const GridSpec& g = x.grid();
    element_count(g.base_shape, limit);
    DenseTensor acc(g.level_shape(0), limit);
    for (Index k = 0; k <= g.levels; ++k) {
        if (k > 0) acc = ext(acc, 1, g.batch, limit);
        const Payload& p = x.payload(k);
        if (include[static_cast<std::size_t>(k)] && !payload_is_zero(p)) {
            acc.values() += payload_to_dense(p, limit).values();
        }
    }
    return acc;
}

void require_compatible(const MSTensor& x, const MSTensor& y, const char* what) {
    if (!(x.grid() == y.grid())) throw ShapeError(std::string(what) + ": grid mismatch");
    if (x.format() != y.format()) throw FormatError(std::string(what) + ": base format mismatch");
}

void require_tt(const MSTensor& x, const char* what) {
    if (x.format() != BaseFormat::TT) {
        throw FormatError(std::string(what) + " requires the TT base format");
    }
}

double level_tolerance(const GridSpec& g, Index k, double eps) {
    return eps * std::pow(static_cast<double>(g.batch), -0.5 * static_cast<double>(g.order() * (g.levels - k)));
}

}  // namespace

DenseTensor ms_reconstruct(const MSTensor& x, std::size_t limit) {
    return reconstruct_selected(x, std::vector<bool>(static_cast<std::size_t>(x.levels() + 1), true), limit);
}

DenseTensor ms_partial_reconstruct(const MSTensor& x, std::span<const Index> scales, std::size_t limit) {
    std::vector<bool> include(static_cast<std::size_t>(x.levels() + 1), false);
    for (Index k : scales) {
        if (k < 0 || k > x.levels()) {
            throw std::out_of_range("scale " + std::to_string(k) + " outside 0.." + std::to_string(x.levels()));
        }
        include[static_cast<std::size_t>(k)] = true;
    }
    return reconstruct_selected(x, include, limit);
}

MSTensor ms_add(const MSTensor& x, const MSTensor& y) {
    require_compatible(x, y, "ms_add");
    std::vector<Payload> levels;
    for (Index k = 0; k <= x.levels(); ++k) {
        if (x.format() == BaseFormat::TT) {
            levels.emplace_back(tt_add(x.tt(k), y.tt(k)));
        } else {
            levels.emplace_back(cp_add(x.cp(k), y.cp(k)));
        }
    }
    return MSTensor(x.grid(), x.format(), std::move(levels));
}

MSTensor ms_scale(const MSTensor& x, double alpha) {
    std::vector<Payload> levels;
    for (Index k = 0; k <= x.levels(); ++k) {
        if (x.format() == BaseFormat::TT) {
            levels.emplace_back(tt_scale(x.tt(k), alpha));
        } else {
            levels.emplace_back(cp_scale(x.cp(k), alpha));
        }
    }
    return MSTensor(x.grid(), x.format(), std::move(levels));
}

MSTensor ms_round(const MSTensor& x, double eps) {
    require_tt(x, "ms_round");
    if (eps < 0.0) throw std::invalid_argument("ms_round: eps must be non-negative");
    std::vector<Payload> levels;
    for (Index k = 0; k <= x.levels(); ++k) {
        levels.emplace_back(tt_round(x.tt(k), Truncation::relative(level_tolerance(x.grid(), k, eps))));
    }
    return MSTensor(x.grid(), x.format(), std::move(levels));
}

MSTensor ms_hadamard(const MSTensor& x, const MSTensor& y, double eps) {
    require_compatible(x, y, "ms_hadamard");
    require_tt(x, "ms_hadamard");
    const GridSpec& g = x.grid();
    const Truncation prefix_trunc = Truncation::relative(eps);

    // prefix_x(k) = sum_{m<=k} ext_{k-m}(X_m), likewise for y.
    TTTensor prefix_x;
    TTTensor prefix_y;
    std::vector<Payload> levels;
    for (Index k = 0; k <= g.levels; ++k) {
        const TTTensor& xk = x.tt(k);
        const TTTensor& yk = y.tt(k);
        TTTensor coarse_x = k == 0 ? TTTensor::zero(xk.shape()) : tt_ext(prefix_x, 1, g.batch);
        TTTensor coarse_y = k == 0 ? TTTensor::zero(yk.shape()) : tt_ext(prefix_y, 1, g.batch);
        prefix_y = tt_round(tt_add(yk, coarse_y), prefix_trunc);
        // X_k against all of y up to level k, Y_k against x strictly coarser than k.
        TTTensor level = tt_add(tt_hadamard(xk, prefix_y), tt_hadamard(yk, coarse_x));
        levels.emplace_back(tt_round(level, Truncation::relative(level_tolerance(g, k, eps))));
        prefix_x = tt_round(tt_add(xk, coarse_x), prefix_trunc);
    }
    return MSTensor(g, BaseFormat::TT, std::move(levels));
}

CPTensor cp_mode_contract(const CPTensor& x, Index j, const Eigen::VectorXd& v) {
    if (j < 0 || j >= x.order()) {
        throw std::out_of_range("cp_mode_contract: mode " + std::to_string(j) + " out of range");
    }
    if (v.size() != x.shape()[static_cast<std::size_t>(j)]) {
        throw ShapeError("cp_mode_contract: vector length mismatch");
    }
    Shape out_shape = x.shape();
    out_shape.erase(out_shape.begin() + j);
    if (out_shape.empty()) out_shape = {1};
    if (x.is_zero()) return CPTensor::zero(out_shape);
    Eigen::VectorXd w = x.weights().cwiseProduct(x.factor(j).transpose() * v);
    std::vector<Eigen::MatrixXd> factors;
    if (x.order() == 1) {
        factors.push_back(Eigen::MatrixXd::Ones(1, x.rank()));
    } else {
        for (Index m = 0; m < x.order(); ++m) {
            if (m != j) factors.push_back(x.factor(m));
        }
    }
    CPTensor out(std::move(w), std::move(factors));
    if (out.is_zero()) return CPTensor::zero(out_shape);
    return out;
}

MSTensor ms_mode_contract(const MSTensor& x, Index j, const Eigen::VectorXd& v) {
    const GridSpec& g = x.grid();
    if (j < 0 || j >= g.order()) {
        throw std::out_of_range("ms_mode_contract: mode " + std::to_string(j) + " out of range for order " +
                                std::to_string(g.order()));
    }
    if (v.size() != g.base_shape[static_cast<std::size_t>(j)]) {
        throw ShapeError("ms_mode_contract: vector length " + std::to_string(v.size()) + " != mode size " +
                         std::to_string(g.base_shape[static_cast<std::size_t>(j)]));
    }
    std::vector<Payload> contracted;
    Eigen::VectorXd averaged = v;
    for (Index k = g.levels; k >= 0; --k) {
        if (k < g.levels) averaged = ave_vector(averaged, 1, g.batch);
        const double factor = static_cast<double>(ipow(g.batch, g.levels - k));
        if (x.format() == BaseFormat::TT) {
            contracted.emplace_back(tt_scale(tt_mode_contract(x.tt(k), j, averaged), factor));
        } else {
            contracted.emplace_back(cp_scale(cp_mode_contract(x.cp(k), j, averaged), factor));
        }
    }
    std::reverse(contracted.begin(), contracted.end());

    if (g.order() == 1) {
        // Every level collapses to a scalar on the same one-point grid.
        Payload total = contracted[0];
        for (std::size_t k = 1; k < contracted.size(); ++k) {
            if (x.format() == BaseFormat::TT) {
                total = tt_add(std::get<TTTensor>(total), std::get<TTTensor>(contracted[k]));
            } else {
                total = cp_add(std::get<CPTensor>(total), std::get<CPTensor>(contracted[k]));
            }
        }
        return MSTensor(GridSpec(g.batch, 0, {1}), x.format(), {std::move(total)});
    }
    Shape base = g.base_shape;
    base.erase(base.begin() + j);
    return MSTensor(GridSpec(g.batch, g.levels, std::move(base)), x.format(), std::move(contracted));
}

double ms_norm(const MSTensor& x) {
    require_tt(x, "ms_norm");
    MSTensor h = ms_hadamard(x, x, 0.0);
    while (h.order() > 0) {
        const Index n = h.grid().base_shape[0];
        const bool last = h.order() == 1;
        h = ms_mode_contract(h, 0, Eigen::VectorXd::Ones(n));
        if (last) break;
    }
    const TTTensor& s = h.tt(0);
    const double sq = s.is_zero() ? 0.0 : s.cores()[0].data[0];
    return std::sqrt(std::max(0.0, sq));
}

StorageReport ms_storage(const MSTensor& x) {
    StorageReport r;
    for (const auto& p : x.payloads()) {
        r.level_parameters.push_back(payload_parameters(p));
        r.total_parameters += r.level_parameters.back();
    }
    r.dense_elements = static_cast<Index>(element_count(x.grid().base_shape, std::numeric_limits<std::size_t>::max()));
    r.compression_ratio = r.total_parameters == 0
                              ? std::numeric_limits<double>::infinity()
                              : static_cast<double>(r.dense_elements) / static_cast<double>(r.total_parameters);
    return r;
}

std::vector<double> level_norms(const MSTensor& x) {
    std::vector<double> out;
    for (const auto& p : x.payloads()) out.push_back(payload_norm(p));
    return out;
}

double stability_margin(const MSTensor& x) {
    double largest = 0.0;
    for (double n : level_norms(x)) largest = std::max(largest, n);
    if (largest == 0.0) return 0.0;
    const double total = x.format() == BaseFormat::TT ? ms_norm(x) : frobenius_norm(ms_reconstruct(x));
    if (total == 0.0) return std::numeric_limits<double>::infinity();
    return largest / total;
}

}  // namespace mrt
