#pragma once

#include <vector>

#include <Eigen/Core>

#include "mrtensor/dense.hpp"

namespace mrt {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Chain of internal TT ranks (r_1, ..., r_{d-1}). A zero entry marks the zero tensor.
using TTRanks = std::vector<Index>;

/// Third-order core G(a, i, b) of shape (left, mode, right), row-major.
struct TTCore {
    Index left = 1;
    Index mode = 1;
    Index right = 1;
    Eigen::VectorXd data;

    TTCore() = default;
    TTCore(Index l, Index n, Index r) : left(l), mode(n), right(r), data(Eigen::VectorXd::Zero(l * n * r)) {}

    double operator()(Index a, Index i, Index b) const { return data[(a * mode + i) * right + b]; }
    double& operator()(Index a, Index i, Index b) { return data[(a * mode + i) * right + b]; }

    /// (left*mode) x right view.
    Eigen::Map<const RowMatrix> left_unfolding() const { return {data.data(), left * mode, right}; }
    Eigen::Map<RowMatrix> left_unfolding() { return {data.data(), left * mode, right}; }
    /// left x (mode*right) view.
    Eigen::Map<const RowMatrix> right_unfolding() const { return {data.data(), left, mode * right}; }
    Eigen::Map<RowMatrix> right_unfolding() { return {data.data(), left, mode * right}; }

    /// The left x right matrix G(:, i, :).
    RowMatrix slice(Index i) const;

    static TTCore from_left_unfolding(const Eigen::MatrixXd& m, Index left, Index mode);
    static TTCore from_right_unfolding(const Eigen::MatrixXd& m, Index mode, Index right);
};

/**
 * Tensor-train tensor: cores G_1..G_d with boundary ranks 1.
 *
 * The zero tensor carries no cores; every operation short-circuits on it.
 */
class TTTensor {
public:
    TTTensor() = default;
    explicit TTTensor(std::vector<TTCore> cores);

    static TTTensor zero(Shape shape);
    /// Rank-1 TT of the all-ones tensor.
    static TTTensor ones(const Shape& shape);
    /// Rank-1 TT of the outer product of the given vectors.
    static TTTensor rank_one(std::span<const Eigen::VectorXd> factors);

    const Shape& shape() const { return shape_; }
    Index order() const { return static_cast<Index>(shape_.size()); }
    bool is_zero() const { return cores_.empty(); }
    const std::vector<TTCore>& cores() const { return cores_; }
    std::vector<TTCore>& cores() { return cores_; }

    /// Internal rank chain; all zeros for the zero tensor.
    TTRanks ranks() const;
    Index max_rank() const;
    Index parameter_count() const;

private:
    Shape shape_;
    std::vector<TTCore> cores_;
};

/// Rank budget and relative tolerance for TT truncation. Both apply when set.
struct Truncation {
    /// Empty means unbounded; negative entries are unbounded too.
    TTRanks max_ranks;
    /// Target ||T - round(T)|| <= tolerance * ||T||.
    double tolerance = 0.0;

    static Truncation ranks(TTRanks r) { return {std::move(r), 0.0}; }
    static Truncation relative(double eps) { return {{}, eps}; }
    static Truncation lossless() { return {}; }
};

/// Largest meaningful chain for a shape: min(prod n_{<=k}, prod n_{>k}).
TTRanks maximal_ranks(const Shape& shape);
/// Entry-wise min of a requested chain and the maximal chain.
TTRanks clip_ranks(const TTRanks& requested, const Shape& shape);

TTTensor tt_svd(const DenseTensor& t, const Truncation& trunc = Truncation::lossless());
TTTensor tt_round(const TTTensor& x, const Truncation& trunc);

DenseTensor tt_to_dense(const TTTensor& x, std::size_t limit = kDefaultMaxElements);
TTTensor tt_add(const TTTensor& x, const TTTensor& y);
TTTensor tt_subtract(const TTTensor& x, const TTTensor& y);
TTTensor tt_hadamard(const TTTensor& x, const TTTensor& y);
TTTensor tt_scale(const TTTensor& x, double alpha);
double tt_inner(const TTTensor& x, const TTTensor& y);
double tt_norm(const TTTensor& x);

/// Contract mode j (0-based) with v; the result has order d-1 (shape {1} for d = 1).
TTTensor tt_mode_contract(const TTTensor& x, Index j, const Eigen::VectorXd& v);

/// Core-wise ext/ave along the mode index; ranks are unchanged.
TTTensor tt_ext(const TTTensor& x, Index level, Index batch);
TTTensor tt_ave(const TTTensor& x, Index level, Index batch);

/// Right-orthogonalizes cores 1..d-1 in place; returns ||x||.
double tt_orthogonalize_right(TTTensor& x);

}  // namespace mrt
