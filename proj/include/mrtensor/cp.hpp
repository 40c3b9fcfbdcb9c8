#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "mrtensor/dense.hpp"

namespace mrt {

/**
 * Canonical (CP) tensor: sum_k weights[k] * u_{1,k} ⊗ ... ⊗ u_{d,k}.
 *
 * Factor j is an n_j x r matrix whose columns have unit Euclidean norm; the
 * weights carry all magnitude. Rank 0 is the zero tensor.
 */
class CPTensor {
public:
    CPTensor() = default;
    /// Builds from arbitrary factors and normalizes; zero columns drop their term.
    CPTensor(Eigen::VectorXd weights, std::vector<Eigen::MatrixXd> factors);

    static CPTensor zero(Shape shape);
    /// Takes already-normalized data verbatim (no rescaling); used when loading.
    static CPTensor from_normalized(Eigen::VectorXd weights, std::vector<Eigen::MatrixXd> factors);

    const Shape& shape() const { return shape_; }
    Index order() const { return static_cast<Index>(shape_.size()); }
    Index rank() const { return weights_.size(); }
    bool is_zero() const { return rank() == 0; }
    const Eigen::VectorXd& weights() const { return weights_; }
    const std::vector<Eigen::MatrixXd>& factors() const { return factors_; }
    const Eigen::MatrixXd& factor(Index j) const { return factors_[static_cast<std::size_t>(j)]; }

    /// r * (1 + sum_j n_j).
    Index parameter_count() const;
    double norm() const;

private:
    Shape shape_;
    Eigen::VectorXd weights_;
    std::vector<Eigen::MatrixXd> factors_;
};

enum class CpInit { Hosvd, Random };

struct CpAlsOptions {
    CpInit init = CpInit::Hosvd;
    std::uint64_t seed = 0;
    int max_sweeps = 200;
    /// Stop once the relative change of the residual drops below this.
    double tolerance = 1e-8;
    /// Added to the Gram diagonal, relative to its largest entry.
    double ridge = 1e-12;
};

struct CpAlsResult {
    CPTensor tensor;
    /// ||T - X|| after each completed sweep.
    std::vector<double> residuals;
    double residual = 0.0;
    int sweeps = 0;
    /// Set when a weight exceeded 1e8 * ||T||; the best earlier iterate is returned.
    bool unstable = false;
};

CpAlsResult cp_als(const DenseTensor& t, Index rank, const CpAlsOptions& options = {});

DenseTensor cp_to_dense(const CPTensor& x, std::size_t limit = kDefaultMaxElements);
CPTensor cp_add(const CPTensor& x, const CPTensor& y);
CPTensor cp_scale(const CPTensor& x, double alpha);
CPTensor cp_ext(const CPTensor& x, Index level, Index batch);
CPTensor cp_ave(const CPTensor& x, Index level, Index batch);

/// Leading `rank` left singular vectors of the mode-j unfolding (padded with
/// seeded random columns when rank > n_j).
Eigen::MatrixXd hosvd_factor(const DenseTensor& t, Index j, Index rank, std::uint64_t seed);

/// M = T_(j) * (Khatri-Rao of the other factors), n_j x r.
Eigen::MatrixXd mttkrp(const DenseTensor& t, const std::vector<Eigen::MatrixXd>& factors, Index j);

}  // namespace mrt
