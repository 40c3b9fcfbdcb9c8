#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mrtensor/cp.hpp"
#include "mrtensor/dense.hpp"
#include "mrtensor/ms.hpp"
#include "mrtensor/tt.hpp"

namespace mrt {

struct DecomposeConfig {
    /// One entry per level 0..L (see RankVector).
    RankVector ranks;
    Index batch = 2;
    Index levels = 0;
    /// Hard cap M on the number of sweeps.
    int max_iter = 10;
    /// Stop when (res_{n-1} - res_n) / res_{n-1} < early_stop; 0 disables.
    double early_stop = 1e-8;
    BaseFormat format = BaseFormat::TT;
    /// Used for every CP rounding step.
    CpAlsOptions cp;
    /// Relative tolerance of the rank-control rounding in compressed sweeps.
    double hygiene = 1e-14;
    /// Initial levels instead of zeros.
    std::optional<MSTensor> warm_start;
    /// Known exact levels; enables the per-level error diagnostics.
    std::optional<MSTensor> reference;
};

/// Convergence history of one level in the restructured sweep.
struct LevelHistory {
    Index level = 0;
    /// ||T_k^(n)|| per inner iteration.
    std::vector<double> norms;
    /// Inner residual per iteration.
    std::vector<double> residuals;
    /// ||T_k - T_k^(n)|| against the reference, when one was given.
    std::vector<double> errors;
    /// Norms of the amalgamated residuals E_k (from S_k^(n)) and D_k (from T_k^(n)).
    std::vector<double> e_norms;
    std::vector<double> d_norms;
};

struct DecomposeTrace {
    /// ||T - sum_k ext_{L-k}(T_k^(n))|| after every completed iteration.
    std::vector<double> residuals;
    /// ||T_k^(n)|| after every completed iteration.
    std::vector<std::vector<double>> level_norms;
    std::vector<double> seconds;
    /// Human-readable notes, e.g. rank chains clipped to the level shape.
    std::vector<std::string> notes;
    /// Restructured variant only: one entry per non-zero level.
    std::vector<LevelHistory> levels;
    bool early_stopped = false;
};

struct DecomposeResult {
    MSTensor approximation;
    DecomposeTrace trace;
};

/// Alternating downward/upward sweeps over all levels.
DecomposeResult alternating_decompose(const DenseTensor& t, const DecomposeConfig& cfg);
/// Same sweeps carried out entirely in TT arithmetic (TT base format).
DecomposeResult alternating_decompose(const TTTensor& t, const DecomposeConfig& cfg);

/// Level-by-level variant: level k is converged against a single fine
/// companion of rank r_{k+1} + ... + r_L before moving to level k+1.
DecomposeResult restructured_decompose(const DenseTensor& t, const DecomposeConfig& cfg);

/// Relative reconstruction error ||T - reconstruct(X)|| / ||T||.
double relative_error(const DenseTensor& t, const MSTensor& x);

}  // namespace mrt
