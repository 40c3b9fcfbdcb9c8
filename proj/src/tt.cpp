#include "mrtensor/tt.hpp"

#include <cmath>
#include <limits>

#include "mrtensor/linalg.hpp"

namespace mrt {

RowMatrix TTCore::slice(Index i) const {
    RowMatrix s(left, right);
    for (Index a = 0; a < left; ++a) {
        s.row(a) = data.segment((a * mode + i) * right, right).transpose();
    }
    return s;
}

TTCore TTCore::from_left_unfolding(const Eigen::MatrixXd& m, Index left, Index mode) {
    TTCore c(left, mode, m.cols());
    c.left_unfolding() = m;
    return c;
}

TTCore TTCore::from_right_unfolding(const Eigen::MatrixXd& m, Index mode, Index right) {
    TTCore c(m.rows(), mode, right);
    c.right_unfolding() = m;
    return c;
}

TTTensor::TTTensor(std::vector<TTCore> cores) : cores_(std::move(cores)) {
    if (cores_.empty()) {
        throw ShapeError("TTTensor needs at least one core; use TTTensor::zero for the zero tensor");
    }
    for (std::size_t k = 0; k < cores_.size(); ++k) {
        const auto& c = cores_[k];
        if (c.mode < 1 || c.left < 1 || c.right < 1 || c.data.size() != c.left * c.mode * c.right) {
            throw ShapeError("malformed TT core " + std::to_string(k));
        }
        if (k == 0 && c.left != 1) throw ShapeError("first TT core must have left rank 1");
        if (k + 1 == cores_.size() && c.right != 1) throw ShapeError("last TT core must have right rank 1");
        if (k > 0 && cores_[k - 1].right != c.left) {
            throw ShapeError("TT rank chain broken between cores " + std::to_string(k - 1) + " and " +
                             std::to_string(k));
        }
        shape_.push_back(c.mode);
    }
}

TTTensor TTTensor::zero(Shape shape) {
    element_count(shape, std::numeric_limits<std::size_t>::max());
    TTTensor t;
    t.shape_ = std::move(shape);
    return t;
}

TTTensor TTTensor::ones(const Shape& shape) {
    std::vector<TTCore> cores;
    for (Index n : shape) {
        TTCore c(1, n, 1);
        c.data.setOnes();
        cores.push_back(std::move(c));
    }
    return TTTensor(std::move(cores));
}

TTTensor TTTensor::rank_one(std::span<const Eigen::VectorXd> factors) {
    std::vector<TTCore> cores;
    for (const auto& f : factors) {
        TTCore c(1, f.size(), 1);
        c.data = f;
        cores.push_back(std::move(c));
    }
    return TTTensor(std::move(cores));
}

TTRanks TTTensor::ranks() const {
    TTRanks r(shape_.empty() ? 0 : shape_.size() - 1, 0);
    if (is_zero()) return r;
    for (std::size_t k = 0; k + 1 < cores_.size(); ++k) r[k] = cores_[k].right;
    return r;
}

Index TTTensor::max_rank() const {
    Index m = is_zero() ? 0 : 1;
    for (Index r : ranks()) m = std::max(m, r);
    return m;
}

Index TTTensor::parameter_count() const {
    Index p = 0;
    for (const auto& c : cores_) p += c.data.size();
    return p;
}

TTRanks maximal_ranks(const Shape& shape) {
    TTRanks r;
    for (std::size_t k = 0; k + 1 < shape.size(); ++k) {
        double left = 1.0;
        double right = 1.0;
        for (std::size_t j = 0; j <= k; ++j) left *= static_cast<double>(shape[j]);
        for (std::size_t j = k + 1; j < shape.size(); ++j) right *= static_cast<double>(shape[j]);
        r.push_back(static_cast<Index>(std::min({left, right, 1e15})));
    }
    return r;
}

TTRanks clip_ranks(const TTRanks& requested, const Shape& shape) {
    const TTRanks cap = maximal_ranks(shape);
    if (requested.size() != cap.size()) {
        throw ShapeError("rank chain of length " + std::to_string(requested.size()) + " for a tensor of order " +
                         std::to_string(shape.size()));
    }
    TTRanks out(requested.size());
    for (std::size_t k = 0; k < cap.size(); ++k) out[k] = requested[k] < 0 ? cap[k] : std::min(requested[k], cap[k]);
    return out;
}

namespace {

Index budget_at(const Truncation& trunc, std::size_t k) {
    if (k >= trunc.max_ranks.size()) return -1;
    return trunc.max_ranks[k];
}

double split_tolerance(double eps, double norm, Index order) {
    if (order < 2) return 0.0;
    return eps * norm / std::sqrt(static_cast<double>(order - 1));
}

// Contract `m` (r x left) into the left index of core c.
TTCore absorb_left(const Eigen::MatrixXd& m, const TTCore& c) {
    return TTCore::from_right_unfolding(m * c.right_unfolding(), c.mode, c.right);
}

// Contract `m` (right x r) into the right index of core c.
TTCore absorb_right(const TTCore& c, const Eigen::MatrixXd& m) {
    return TTCore::from_left_unfolding(c.left_unfolding() * m, c.left, c.mode);
}

}  // namespace

TTTensor tt_svd(const DenseTensor& t, const Truncation& trunc) {
    const Index d = t.order();
    const double norm = frobenius_norm(t);
    if (norm == 0.0) return TTTensor::zero(t.shape());
    for (Index r : trunc.max_ranks) {
        if (r == 0) return TTTensor::zero(t.shape());
    }
    const double delta = split_tolerance(trunc.tolerance, norm, d);

    std::vector<TTCore> cores;
    Eigen::VectorXd rest = t.values();
    Index left = 1;
    for (Index k = 0; k + 1 < d; ++k) {
        const Index n = t.mode(k);
        const Index rows = left * n;
        const Index cols = rest.size() / rows;
        const Eigen::MatrixXd unfolding = Eigen::Map<const RowMatrix>(rest.data(), rows, cols);
        const Svd svd = jacobi_svd(unfolding);
        const Index r = truncation_rank(svd.sigma, delta, budget_at(trunc, static_cast<std::size_t>(k)));
        if (r == 0) return TTTensor::zero(t.shape());
        cores.push_back(TTCore::from_left_unfolding(svd.u.leftCols(r), left, n));
        const RowMatrix carry = svd.sigma.head(r).asDiagonal() * svd.v.leftCols(r).transpose();
        rest = Eigen::Map<const Eigen::VectorXd>(carry.data(), carry.size());
        left = r;
    }
    TTCore last(left, t.mode(d - 1), 1);
    last.data = rest;
    cores.push_back(std::move(last));
    return TTTensor(std::move(cores));
}

double tt_orthogonalize_right(TTTensor& x) {
    if (x.is_zero()) return 0.0;
    auto& cores = x.cores();
    for (std::size_t k = cores.size() - 1; k > 0; --k) {
        const TTCore& c = cores[k];
        Eigen::MatrixXd q;
        Eigen::MatrixXd r;
        thin_qr(c.right_unfolding().transpose(), q, r);
        TTCore next = TTCore::from_right_unfolding(q.transpose(), c.mode, c.right);
        cores[k - 1] = absorb_right(cores[k - 1], r.transpose());
        cores[k] = std::move(next);
    }
    return cores[0].data.norm();
}

TTTensor tt_round(const TTTensor& x, const Truncation& trunc) {
    if (x.is_zero()) return x;
    for (Index r : trunc.max_ranks) {
        if (r == 0) return TTTensor::zero(x.shape());
    }
    TTTensor y = x;
    const double norm = tt_orthogonalize_right(y);
    if (norm == 0.0) return TTTensor::zero(x.shape());
    const Index d = y.order();
    const double delta = split_tolerance(trunc.tolerance, norm, d);

    auto& cores = y.cores();
    for (Index k = 0; k + 1 < d; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        const TTCore& c = cores[ku];
        const Svd svd = jacobi_svd(c.left_unfolding());
        const Index r = truncation_rank(svd.sigma, delta, budget_at(trunc, ku));
        if (r == 0) return TTTensor::zero(x.shape());
        const Eigen::MatrixXd carry = svd.sigma.head(r).asDiagonal() * svd.v.leftCols(r).transpose();
        cores[ku] = TTCore::from_left_unfolding(svd.u.leftCols(r), c.left, c.mode);
        cores[ku + 1] = absorb_left(carry, cores[ku + 1]);
    }
    return TTTensor(std::move(cores));
}

DenseTensor tt_to_dense(const TTTensor& x, std::size_t limit) {
    if (x.is_zero()) return DenseTensor(x.shape(), limit);
    element_count(x.shape(), limit);
    RowMatrix acc = RowMatrix::Ones(1, 1);
    for (const auto& c : x.cores()) {
        RowMatrix next = acc * c.right_unfolding();
        acc = Eigen::Map<const RowMatrix>(next.data(), next.rows() * c.mode, c.right);
    }
    return DenseTensor(x.shape(), Eigen::Map<const Eigen::VectorXd>(acc.data(), acc.size()));
}

namespace {

void require_same_shape(const TTTensor& x, const TTTensor& y, const char* what) {
    if (x.shape() != y.shape()) {
        throw ShapeError(std::string(what) + ": shape mismatch " + to_string(x.shape()) + " vs " +
                         to_string(y.shape()));
    }
}

}  // namespace

TTTensor tt_add(const TTTensor& x, const TTTensor& y) {
    require_same_shape(x, y, "tt_add");
    if (x.is_zero()) return y;
    if (y.is_zero()) return x;
    const auto& cx = x.cores();
    const auto& cy = y.cores();
    const std::size_t d = cx.size();
    if (d == 1) {
        TTCore c = cx[0];
        c.data += cy[0].data;
        return TTTensor({std::move(c)});
    }
    std::vector<TTCore> cores;
    for (std::size_t k = 0; k < d; ++k) {
        const TTCore& a = cx[k];
        const TTCore& b = cy[k];
        const bool first = k == 0;
        const bool last = k + 1 == d;
        const Index left = first ? 1 : a.left + b.left;
        const Index right = last ? 1 : a.right + b.right;
        TTCore c(left, a.mode, right);
        const Index b_left_off = first ? 0 : a.left;
        const Index b_right_off = last ? 0 : a.right;
        for (Index i = 0; i < a.mode; ++i) {
            for (Index p = 0; p < a.left; ++p)
                for (Index q = 0; q < a.right; ++q) c(p, i, q) = a(p, i, q);
            for (Index p = 0; p < b.left; ++p)
                for (Index q = 0; q < b.right; ++q) c(b_left_off + p, i, b_right_off + q) += b(p, i, q);
        }
        cores.push_back(std::move(c));
    }
    return TTTensor(std::move(cores));
}

TTTensor tt_scale(const TTTensor& x, double alpha) {
    if (x.is_zero() || alpha == 0.0) return TTTensor::zero(x.shape());
    TTTensor y = x;
    y.cores()[0].data *= alpha;
    return y;
}

TTTensor tt_subtract(const TTTensor& x, const TTTensor& y) { return tt_add(x, tt_scale(y, -1.0)); }

TTTensor tt_hadamard(const TTTensor& x, const TTTensor& y) {
    require_same_shape(x, y, "tt_hadamard");
    if (x.is_zero() || y.is_zero()) return TTTensor::zero(x.shape());
    std::vector<TTCore> cores;
    for (std::size_t k = 0; k < x.cores().size(); ++k) {
        const TTCore& a = x.cores()[k];
        const TTCore& b = y.cores()[k];
        TTCore c(a.left * b.left, a.mode, a.right * b.right);
        for (Index pa = 0; pa < a.left; ++pa)
            for (Index pb = 0; pb < b.left; ++pb)
                for (Index i = 0; i < a.mode; ++i)
                    for (Index qa = 0; qa < a.right; ++qa) {
                        const double av = a(pa, i, qa);
                        for (Index qb = 0; qb < b.right; ++qb) {
                            c(pa * b.left + pb, i, qa * b.right + qb) = av * b(pb, i, qb);
                        }
                    }
        cores.push_back(std::move(c));
    }
    return TTTensor(std::move(cores));
}

double tt_inner(const TTTensor& x, const TTTensor& y) {
    require_same_shape(x, y, "tt_inner");
    if (x.is_zero() || y.is_zero()) return 0.0;
    Eigen::MatrixXd z = Eigen::MatrixXd::Ones(1, 1);
    for (std::size_t k = 0; k < x.cores().size(); ++k) {
        const TTCore& a = x.cores()[k];
        const TTCore& b = y.cores()[k];
        Eigen::MatrixXd next = Eigen::MatrixXd::Zero(a.right, b.right);
        for (Index i = 0; i < a.mode; ++i) {
            next.noalias() += a.slice(i).transpose() * z * b.slice(i);
        }
        z = std::move(next);
    }
    return z(0, 0);
}

double tt_norm(const TTTensor& x) {
    TTTensor y = x;
    return tt_orthogonalize_right(y);
}

TTTensor tt_mode_contract(const TTTensor& x, Index j, const Eigen::VectorXd& v) {
    if (j < 0 || j >= x.order()) {
        throw std::out_of_range("tt_mode_contract: mode " + std::to_string(j) + " out of range for order " +
                                std::to_string(x.order()));
    }
    if (v.size() != x.shape()[static_cast<std::size_t>(j)]) {
        throw ShapeError("tt_mode_contract: vector length " + std::to_string(v.size()) + " != mode size " +
                         std::to_string(x.shape()[static_cast<std::size_t>(j)]));
    }
    Shape out_shape = x.shape();
    out_shape.erase(out_shape.begin() + j);
    if (out_shape.empty()) out_shape = {1};
    if (x.is_zero()) return TTTensor::zero(out_shape);

    std::vector<TTCore> cores = x.cores();
    const auto ju = static_cast<std::size_t>(j);
    const TTCore& c = cores[ju];
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(c.left, c.right);
    for (Index i = 0; i < c.mode; ++i) m += v[i] * c.slice(i);

    if (cores.size() == 1) {
        TTCore s(1, 1, 1);
        s.data[0] = m(0, 0);
        return TTTensor({std::move(s)});
    }
    if (ju + 1 < cores.size()) {
        cores[ju + 1] = absorb_left(m, cores[ju + 1]);
    } else {
        cores[ju - 1] = absorb_right(cores[ju - 1], m);
    }
    cores.erase(cores.begin() + j);
    return TTTensor(std::move(cores));
}

TTTensor tt_ext(const TTTensor& x, Index level, Index batch) {
    if (level < 0) throw std::invalid_argument("tt_ext: level must be non-negative");
    if (level == 0) return x;
    const Index f = ipow(batch, level);
    if (x.is_zero()) {
        Shape s = x.shape();
        for (auto& n : s) n *= f;
        return TTTensor::zero(s);
    }
    std::vector<TTCore> cores;
    for (const auto& c : x.cores()) {
        TTCore e(c.left, c.mode * f, c.right);
        for (Index a = 0; a < c.left; ++a)
            for (Index i = 0; i < c.mode; ++i) {
                const auto src = c.data.segment((a * c.mode + i) * c.right, c.right);
                for (Index t = 0; t < f; ++t) {
                    e.data.segment((a * e.mode + i * f + t) * c.right, c.right) = src;
                }
            }
        cores.push_back(std::move(e));
    }
    return TTTensor(std::move(cores));
}

TTTensor tt_ave(const TTTensor& x, Index level, Index batch) {
    if (level < 0) throw std::invalid_argument("tt_ave: level must be non-negative");
    if (level == 0) return x;
    const Index f = ipow(batch, level);
    Shape s = x.shape();
    for (auto& n : s) {
        if (n % f != 0) {
            throw ShapeError("tt_ave: block side " + std::to_string(f) + " does not divide shape " +
                             to_string(x.shape()));
        }
        n /= f;
    }
    if (x.is_zero()) return TTTensor::zero(s);
    const double inv = 1.0 / static_cast<double>(f);
    std::vector<TTCore> cores;
    for (const auto& c : x.cores()) {
        TTCore e(c.left, c.mode / f, c.right);
        for (Index a = 0; a < c.left; ++a)
            for (Index i = 0; i < e.mode; ++i) {
                auto dst = e.data.segment((a * e.mode + i) * c.right, c.right);
                for (Index t = 0; t < f; ++t) {
                    dst += c.data.segment((a * c.mode + i * f + t) * c.right, c.right);
                }
                dst *= inv;
            }
        cores.push_back(std::move(e));
    }
    return TTTensor(std::move(cores));
}

}  // namespace mrt
