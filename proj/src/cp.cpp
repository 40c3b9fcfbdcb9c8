#include "mrtensor/cp.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "mrtensor/tt.hpp"

namespace mrt {

CPTensor::CPTensor(Eigen::VectorXd weights, std::vector<Eigen::MatrixXd> factors) {
    if (factors.empty()) throw ShapeError("CPTensor needs at least one factor");
    const Index r = weights.size();
    for (const auto& f : factors) {
        if (f.cols() != r) throw ShapeError("CP factor column count does not match the number of weights");
        if (f.rows() < 1) throw ShapeError("CP factor with empty mode");
        shape_.push_back(f.rows());
    }
    std::vector<Index> keep;
    for (Index k = 0; k < r; ++k) {
        double w = weights[k];
        for (auto& f : factors) {
            const double n = f.col(k).norm();
            w *= n;
            if (n > 0.0) f.col(k) /= n;
        }
        weights[k] = w;
        if (w != 0.0) keep.push_back(k);
    }
    const auto kept = static_cast<Index>(keep.size());
    weights_.resize(kept);
    for (auto& f : factors) factors_.emplace_back(f.rows(), kept);
    for (Index c = 0; c < kept; ++c) {
        const Index k = keep[static_cast<std::size_t>(c)];
        weights_[c] = weights[k];
        for (std::size_t j = 0; j < factors.size(); ++j) factors_[j].col(c) = factors[j].col(k);
    }
}

CPTensor CPTensor::zero(Shape shape) {
    element_count(shape, std::numeric_limits<std::size_t>::max());
    CPTensor t;
    t.shape_ = std::move(shape);
    for (Index n : t.shape_) t.factors_.emplace_back(n, 0);
    return t;
}

CPTensor CPTensor::from_normalized(Eigen::VectorXd weights, std::vector<Eigen::MatrixXd> factors) {
    if (factors.empty()) throw ShapeError("CPTensor needs at least one factor");
    CPTensor t;
    for (const auto& f : factors) {
        if (f.cols() != weights.size()) throw ShapeError("CP factor column count does not match the number of weights");
        if (f.rows() < 1) throw ShapeError("CP factor with empty mode");
        t.shape_.push_back(f.rows());
    }
    t.weights_ = std::move(weights);
    t.factors_ = std::move(factors);
    return t;
}

Index CPTensor::parameter_count() const {
    Index per_term = 1;
    for (Index n : shape_) per_term += n;
    return rank() * per_term;
}

double CPTensor::norm() const {
    if (is_zero()) return 0.0;
    Eigen::MatrixXd gram = weights_ * weights_.transpose();
    for (const auto& f : factors_) gram = gram.cwiseProduct(f.transpose() * f);
    return std::sqrt(std::max(0.0, gram.sum()));
}

namespace {

// Khatri-Rao product of factors[first..last) in row-major index order.
RowMatrix khatri_rao(const std::vector<Eigen::MatrixXd>& factors, std::size_t first, std::size_t last, Index r) {
    RowMatrix acc = RowMatrix::Ones(1, r);
    for (std::size_t m = first; m < last; ++m) {
        const auto& f = factors[m];
        RowMatrix next(acc.rows() * f.rows(), r);
        for (Index p = 0; p < acc.rows(); ++p)
            for (Index i = 0; i < f.rows(); ++i) {
                next.row(p * f.rows() + i) = acc.row(p).cwiseProduct(f.row(i));
            }
        acc = std::move(next);
    }
    return acc;
}

Eigen::MatrixXd random_matrix(Index rows, Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    Eigen::MatrixXd m(rows, cols);
    for (Index c = 0; c < cols; ++c)
        for (Index i = 0; i < rows; ++i) m(i, c) = normal(rng);
    return m;
}

// Mode-j Gram matrix of the unfolding, T_(j) T_(j)^T.
Eigen::MatrixXd unfolding_gram(const DenseTensor& t, Index j) {
    const Index p_size = t.outer_size(j);
    const Index n = t.mode(j);
    const Index q = t.inner_size(j);
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
    if (q == 1) {
        Eigen::Map<const RowMatrix> tm(t.values().data(), p_size, n);
        gram.selfadjointView<Eigen::Lower>().rankUpdate(tm.transpose());
    } else {
        for (Index p = 0; p < p_size; ++p) {
            Eigen::Map<const RowMatrix> block(t.values().data() + p * n * q, n, q);
            gram.selfadjointView<Eigen::Lower>().rankUpdate(block);
        }
    }
    return gram.selfadjointView<Eigen::Lower>();
}

}  // namespace

Eigen::MatrixXd hosvd_factor(const DenseTensor& t, Index j, Index rank, std::uint64_t seed) {
    const Index n = t.mode(j);
    const Index lead = std::min(rank, n);
    Eigen::MatrixXd out(n, rank);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(unfolding_gram(t, j));
    for (Index c = 0; c < lead; ++c) {
        Eigen::VectorXd v = eig.eigenvectors().col(n - 1 - c);
        Eigen::Index imax = 0;
        v.cwiseAbs().maxCoeff(&imax);
        if (v[imax] < 0.0) v = -v;
        out.col(c) = v;
    }
    if (rank > lead) {
        std::mt19937_64 rng(seed + static_cast<std::uint64_t>(j));
        out.rightCols(rank - lead) = random_matrix(n, rank - lead, rng);
    }
    return out;
}

Eigen::MatrixXd mttkrp(const DenseTensor& t, const std::vector<Eigen::MatrixXd>& factors, Index j) {
    const auto ju = static_cast<std::size_t>(j);
    const Index r = factors[ju].cols();
    const Index n = t.mode(j);
    const Index p_size = t.outer_size(j);
    const Index q = t.inner_size(j);
    const RowMatrix left = khatri_rao(factors, 0, ju, r);
    const RowMatrix right = khatri_rao(factors, ju + 1, factors.size(), r);
    if (q == 1) {
        Eigen::Map<const RowMatrix> tm(t.values().data(), p_size, n);
        return tm.transpose() * left;
    }
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, r);
    Eigen::MatrixXd w(n, r);
    for (Index p = 0; p < p_size; ++p) {
        Eigen::Map<const RowMatrix> block(t.values().data() + p * n * q, n, q);
        w.noalias() = block * right;
        m += w * left.row(p).asDiagonal();
    }
    return m;
}

DenseTensor cp_to_dense(const CPTensor& x, std::size_t limit) {
    DenseTensor out(x.shape(), limit);
    if (x.is_zero()) return out;
    const std::size_t d = x.factors().size();
    const RowMatrix head = khatri_rao(x.factors(), 0, d - 1, x.rank());
    const Eigen::MatrixXd& last = x.factors().back();
    Eigen::Map<RowMatrix> values(out.values().data(), head.rows(), last.rows());
    values.noalias() = head * x.weights().asDiagonal() * last.transpose();
    return out;
}

CpAlsResult cp_als(const DenseTensor& t, Index rank, const CpAlsOptions& options) {
    CpAlsResult result;
    const double t_norm = frobenius_norm(t);
    if (rank < 0) throw std::invalid_argument("cp_als: rank must be non-negative");
    if (rank == 0 || t_norm == 0.0) {
        result.tensor = CPTensor::zero(t.shape());
        result.residual = t_norm;
        return result;
    }
    const Index d = t.order();
    std::vector<Eigen::MatrixXd> factors;
    std::mt19937_64 rng(options.seed);
    for (Index j = 0; j < d; ++j) {
        if (options.init == CpInit::Hosvd) {
            factors.push_back(hosvd_factor(t, j, rank, options.seed));
        } else {
            factors.push_back(random_matrix(t.mode(j), rank, rng));
        }
    }
    for (auto& f : factors) f.colwise().normalize();
    Eigen::VectorXd weights = Eigen::VectorXd::Ones(rank);

    double best = std::numeric_limits<double>::infinity();
    CPTensor best_tensor = CPTensor::zero(t.shape());
    double previous = std::numeric_limits<double>::infinity();
    for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
        for (Index j = 0; j < d; ++j) {
            const auto ju = static_cast<std::size_t>(j);
            Eigen::MatrixXd gram = Eigen::MatrixXd::Ones(rank, rank);
            for (Index m = 0; m < d; ++m) {
                if (m == j) continue;
                const auto& f = factors[static_cast<std::size_t>(m)];
                gram = gram.cwiseProduct(f.transpose() * f);
            }
            const double shift = options.ridge * std::max(gram.diagonal().maxCoeff(), 1e-300);
            gram.diagonal().array() += shift;
            const Eigen::MatrixXd rhs = mttkrp(t, factors, j);
            Eigen::MatrixXd updated = gram.ldlt().solve(rhs.transpose()).transpose();
            for (Index c = 0; c < rank; ++c) {
                const double nrm = updated.col(c).norm();
                weights[c] = nrm;
                if (nrm > 0.0) updated.col(c) /= nrm;
            }
            factors[ju] = std::move(updated);
        }
        ++result.sweeps;
        CPTensor current(weights, factors);
        if (weights.cwiseAbs().maxCoeff() > 1e8 * t_norm || !weights.allFinite()) {
            result.unstable = true;
            break;
        }
        const double residual = frobenius_norm(subtract(t, cp_to_dense(current)));
        result.residuals.push_back(residual);
        if (residual < best) {
            best = residual;
            best_tensor = std::move(current);
        }
        if (residual == 0.0) break;
        if (std::isfinite(previous) && std::abs(previous - residual) < options.tolerance * previous) break;
        previous = residual;
    }
    if (!std::isfinite(best)) {
        best = t_norm;
        best_tensor = CPTensor::zero(t.shape());
    }
    result.tensor = std::move(best_tensor);
    result.residual = best;
    return result;
}

CPTensor cp_add(const CPTensor& x, const CPTensor& y) {
    if (x.shape() != y.shape()) {
        throw ShapeError("cp_add: shape mismatch " + to_string(x.shape()) + " vs " + to_string(y.shape()));
    }
    if (x.is_zero()) return y;
    if (y.is_zero()) return x;
    Eigen::VectorXd w(x.rank() + y.rank());
    w << x.weights(), y.weights();
    std::vector<Eigen::MatrixXd> factors;
    for (Index j = 0; j < x.order(); ++j) {
        Eigen::MatrixXd f(x.shape()[static_cast<std::size_t>(j)], w.size());
        f << x.factor(j), y.factor(j);
        factors.push_back(std::move(f));
    }
    return CPTensor(std::move(w), std::move(factors));
}

CPTensor cp_scale(const CPTensor& x, double alpha) {
    if (x.is_zero() || alpha == 0.0) return CPTensor::zero(x.shape());
    return CPTensor(alpha * x.weights(), x.factors());
}

namespace {

template <typename Map>
CPTensor factorwise(const CPTensor& x, Shape shape, Map&& map) {
    if (x.is_zero()) return CPTensor::zero(std::move(shape));
    std::vector<Eigen::MatrixXd> factors;
    for (const auto& f : x.factors()) {
        Eigen::MatrixXd g;
        for (Index c = 0; c < f.cols(); ++c) {
            Eigen::VectorXd col = map(Eigen::VectorXd(f.col(c)));
            if (c == 0) g.resize(col.size(), f.cols());
            g.col(c) = col;
        }
        factors.push_back(std::move(g));
    }
    CPTensor out(x.weights(), std::move(factors));
    if (out.is_zero()) return CPTensor::zero(std::move(shape));
    return out;
}

}  // namespace

CPTensor cp_ext(const CPTensor& x, Index level, Index batch) {
    if (level < 0) throw std::invalid_argument("cp_ext: level must be non-negative");
    const Index f = ipow(batch, level);
    Shape s = x.shape();
    for (auto& n : s) n *= f;
    return factorwise(x, s, [&](const Eigen::VectorXd& v) { return ext_vector(v, level, batch); });
}

CPTensor cp_ave(const CPTensor& x, Index level, Index batch) {
    if (level < 0) throw std::invalid_argument("cp_ave: level must be non-negative");
    const Index f = ipow(batch, level);
    Shape s = x.shape();
    for (auto& n : s) {
        if (n % f != 0) {
            throw ShapeError("cp_ave: block side " + std::to_string(f) + " does not divide shape " +
                             to_string(x.shape()));
        }
        n /= f;
    }
    return factorwise(x, s, [&](const Eigen::VectorXd& v) { return ave_vector(v, level, batch); });
}

}  // namespace mrt
