#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mrtensor/decompose.hpp"
#include "mrtensor/ms.hpp"

namespace mrt {

/// TT tensor with Gaussian cores and the given rank chain, scaled to unit norm.
TTTensor random_tt(const Shape& shape, const TTRanks& ranks, std::mt19937_64& rng);
/// CP tensor with Gaussian factors, scaled to unit norm.
CPTensor random_cp(const Shape& shape, Index rank, std::mt19937_64& rng);

/// Exact multiresolution tensor whose non-zero levels have unit norm.
MSTensor random_ms_tensor(const GridSpec& grid, BaseFormat format, const RankVector& ranks, std::mt19937_64& rng);

/// Adds relative Gaussian noise of size `relative * ||T_k||` to every non-zero
/// level. TT levels come back as lossless (full-rank) TT tensors.
MSTensor perturb_levels(const MSTensor& x, double relative, std::mt19937_64& rng);

/// n x n image: random rank-`rank` structures on levels 0, L/2 and L of a
/// batch-2 grid with `levels` levels, equal energy each, plus Gaussian noise
/// of relative size `noise`.
DenseTensor planted_multiscale_image(Index n, Index levels, Index rank, double noise, std::uint64_t seed);

struct BenchRow {
    std::string method;
    Index rank = 0;
    double relative_error = 0.0;
    double compression_ratio = 0.0;
    double seconds = 0.0;
};

struct SweepOptions {
    Index batch = 2;
    Index levels = 0;
    Index rank_from = 1;
    Index rank_to = 1;
    int max_iter = 10;
    BaseFormat format = BaseFormat::TT;
    bool restructured = false;
    CpAlsOptions cp;
    /// When false, every row reports 0 seconds so output is byte-stable.
    bool timings = true;
};

/// For each rank r in the sweep: the multiresolution fit with uniform rank
/// vector (r, ..., r) and the single-scale rank-r baseline, in that order.
std::vector<BenchRow> compression_sweep(const DenseTensor& t, const SweepOptions& options);

}  // namespace mrt
