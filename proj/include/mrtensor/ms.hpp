#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "mrtensor/cp.hpp"
#include "mrtensor/dense.hpp"
#include "mrtensor/tt.hpp"

namespace mrt {

enum class BaseFormat : std::uint8_t { TT = 0, CP = 1 };

const char* to_string(BaseFormat f);

class FormatError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

using Payload = std::variant<TTTensor, CPTensor>;

/// Per-level rank budget. TT levels hold a chain of d-1 entries, CP levels a
/// single entry. A chain containing 0 means the level is zero.
using RankVector = std::vector<TTRanks>;

/// Expands scalar ranks (r_0, ..., r_L) to uniform chains of the given length.
RankVector make_rank_vector(std::span<const Index> scalars, Index chain_length);
bool is_zero_rank(const TTRanks& chain);

/**
 * Multiresolution tensor: sum over k of ext_{L-k}(T_k), where level k lives on
 * the grid base_shape / batch^(L-k). Level 0 is the coarsest.
 */
class MSTensor {
public:
    MSTensor() = default;
    MSTensor(GridSpec grid, BaseFormat format, std::vector<Payload> levels);

    static MSTensor zero(GridSpec grid, BaseFormat format);
    /// Places a TT tensor on the finest level, all coarser levels zero.
    static MSTensor from_finest(GridSpec grid, TTTensor finest);

    const GridSpec& grid() const { return grid_; }
    BaseFormat format() const { return format_; }
    Index levels() const { return grid_.levels; }
    Index order() const { return grid_.order(); }
    const std::vector<Payload>& payloads() const { return levels_; }
    const Payload& payload(Index k) const { return levels_[static_cast<std::size_t>(k)]; }

    const TTTensor& tt(Index k) const;
    const CPTensor& cp(Index k) const;

    /// Rank chain (TT) or {rank} (CP) of each level.
    RankVector ranks() const;

private:
    GridSpec grid_;
    BaseFormat format_ = BaseFormat::TT;
    std::vector<Payload> levels_;
};

struct StorageReport {
    std::vector<Index> level_parameters;
    Index total_parameters = 0;
    Index dense_elements = 0;
    /// dense_elements / total_parameters (infinite for an all-zero tensor).
    double compression_ratio = 0.0;
};

Shape payload_shape(const Payload& p);
bool payload_is_zero(const Payload& p);
Index payload_parameters(const Payload& p);
double payload_norm(const Payload& p);
DenseTensor payload_to_dense(const Payload& p, std::size_t limit = kDefaultMaxElements);

DenseTensor ms_reconstruct(const MSTensor& x, std::size_t limit = kDefaultMaxElements);
/// Sum of ext_{L-k}(T_k) over the given scales only.
DenseTensor ms_partial_reconstruct(const MSTensor& x, std::span<const Index> scales,
                                   std::size_t limit = kDefaultMaxElements);

MSTensor ms_add(const MSTensor& x, const MSTensor& y);
MSTensor ms_scale(const MSTensor& x, double alpha);
/// Rounds level k at relative tolerance batch^(-d(L-k)/2) * eps; TT only.
MSTensor ms_round(const MSTensor& x, double eps);
/// Elementwise product computed level by level from rounded prefix sums; TT only.
MSTensor ms_hadamard(const MSTensor& x, const MSTensor& y, double eps = 0.0);
/// Mode-j contraction; level k becomes batch^(L-k) * (T_k x_j ave_{L-k}(v)).
MSTensor ms_mode_contract(const MSTensor& x, Index j, const Eigen::VectorXd& v);
/// Frobenius norm from the all-ones contraction of x∘x; TT only.
double ms_norm(const MSTensor& x);
StorageReport ms_storage(const MSTensor& x);

std::vector<double> level_norms(const MSTensor& x);
/// max_k ||T_k|| / ||x||; large values flag cancelling components.
double stability_margin(const MSTensor& x);

/// Mode contraction of a CP tensor (weights absorb the contracted factor).
CPTensor cp_mode_contract(const CPTensor& x, Index j, const Eigen::VectorXd& v);

}  // namespace mrt
