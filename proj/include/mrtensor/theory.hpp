#pragma once

#include <vector>

#include "mrtensor/dense.hpp"
#include "mrtensor/ms.hpp"

namespace mrt {

/// Separable terms sorted from the finest to the coarsest length scale.
/// factors[t][j] is the mode-j vector of term t.
using SeparableTerms = std::vector<std::vector<Eigen::VectorXd>>;

struct MultiscaleSample {
    DenseTensor tensor;
    SeparableTerms terms;
};

/**
 * Samples prod sin(x_j) + prod sin(2 x_j) + prod sin(4 x_j) at x_i = pi i / n,
 * i = 1..n, per mode. Terms are returned finest first: sin(4x), sin(2x), sin(x).
 * n must be a power of `batch`.
 */
MultiscaleSample multiscale_test_tensor(Index n, Index d, Index batch);

/// sqrt((7 b^(2s) - 15 + 8 b^(-2s)) / 60) for block offset s = k - 1.
double block_radical(Index batch, Index offset);

/// Closed form of sum_{i=1}^{m} (sum_{l=1}^{m} |i - l|)^2 = m (7 m^4 - 15 m^2 + 8) / 60.
long long block_deviation_sum(long long m);

struct BoundInput {
    SeparableTerms terms;
    /// Length scales, strictly increasing (finest term first).
    std::vector<double> omega;
    /// Lipschitz constants C[t][j] of the generating functions.
    std::vector<std::vector<double>> lipschitz;
    Index batch = 2;
    double a = 0.0;
    double b = 0.0;
};

struct ScaleBound {
    /// delta_t per term; delta_0 = 0 since the finest term is kept exactly.
    std::vector<double> delta;
    std::vector<double> term_norms;
    /// sum_t delta_t ||T_t||.
    double total = 0.0;
    /// First-order expansion of `total` in 1/sqrt(n).
    double large_n = 0.0;
};

/// Error bound for the averaged separable approximation; n is the mode length.
ScaleBound scale_separation_bound(const BoundInput& in);

/// Term t becomes the rank-1 CP level L - t with factors ave_t(u_{t,j}).
MSTensor prescribed_ms_approximation(const SeparableTerms& terms, Index batch);

struct ClosednessSample {
    /// n J - v v^T with v = (sqrt(n+1), sqrt(n-1)).
    DenseTensor tensor;
    /// Exact (1,1) representation: coarse scalar n, fine rank-1 term -v v^T.
    MSTensor witness;
};

ClosednessSample closedness_sequence(double n);
/// ||T^(n) - diag(-1, 1)|| = sqrt(2) / (n + sqrt(n^2 - 1)).
double closedness_error(double n);
DenseTensor closedness_limit();

}  // namespace mrt
