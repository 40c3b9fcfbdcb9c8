#include "mrtensor/dense.hpp"

#include <limits>
#include <sstream>

namespace mrt {

std::string to_string(const Shape& shape) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        os << (i ? "x" : "") << shape[i];
    }
    os << ')';
    return os.str();
}

std::size_t element_count(const Shape& shape, std::size_t limit) {
    std::size_t count = 1;
    for (Index n : shape) {
        if (n < 1) {
            throw ShapeError("mode sizes must be positive, got " + to_string(shape));
        }
        const auto un = static_cast<std::size_t>(n);
        if (count > limit / un) {
            throw SizeLimitError("tensor of shape " + to_string(shape) + " exceeds the element limit " +
                                 std::to_string(limit));
        }
        count *= un;
    }
    if (count > limit) {
        throw SizeLimitError("tensor of shape " + to_string(shape) + " exceeds the element limit " +
                             std::to_string(limit));
    }
    return count;
}

Index ipow(Index base, Index exponent) {
    if (exponent < 0) {
        throw std::invalid_argument("negative exponent in ipow");
    }
    Index r = 1;
    for (Index i = 0; i < exponent; ++i) {
        if (r > std::numeric_limits<Index>::max() / base) {
            throw SizeLimitError("integer overflow in batch power");
        }
        r *= base;
    }
    return r;
}

DenseTensor::DenseTensor(Shape shape, std::size_t limit) : shape_(std::move(shape)) {
    if (shape_.empty()) {
        throw ShapeError("tensor order must be at least 1");
    }
    values_ = Eigen::VectorXd::Zero(static_cast<Index>(element_count(shape_, limit)));
}

DenseTensor::DenseTensor(Shape shape, Eigen::VectorXd values)
    : shape_(std::move(shape)), values_(std::move(values)) {
    if (shape_.empty()) {
        throw ShapeError("tensor order must be at least 1");
    }
    if (static_cast<std::size_t>(values_.size()) != element_count(shape_, std::numeric_limits<std::size_t>::max())) {
        throw ShapeError("data length " + std::to_string(values_.size()) + " does not match shape " +
                         to_string(shape_));
    }
}

DenseTensor DenseTensor::constant(Shape shape, double value) {
    DenseTensor t(std::move(shape));
    t.values_.setConstant(value);
    return t;
}

Index DenseTensor::offset(std::span<const Index> index) const {
    Index off = 0;
    for (std::size_t j = 0; j < shape_.size(); ++j) {
        off = off * shape_[j] + index[j];
    }
    return off;
}

Index DenseTensor::outer_size(Index j) const {
    Index p = 1;
    for (Index m = 0; m < j; ++m) p *= mode(m);
    return p;
}

Index DenseTensor::inner_size(Index j) const {
    Index q = 1;
    for (Index m = j + 1; m < order(); ++m) q *= mode(m);
    return q;
}

GridSpec::GridSpec(Index batch_size, Index level_count, Shape base)
    : batch(batch_size), levels(level_count), base_shape(std::move(base)) {
    if (batch < 2) {
        throw ShapeError("batch size must be at least 2, got " + std::to_string(batch));
    }
    if (levels < 0) {
        throw ShapeError("level count must be non-negative, got " + std::to_string(levels));
    }
    if (base_shape.empty()) {
        throw ShapeError("grid needs at least one mode");
    }
    const Index block = ipow(batch, levels);
    for (Index n : base_shape) {
        if (n < 1 || n % block != 0) {
            throw ShapeError("batch^levels = " + std::to_string(block) + " does not divide mode size " +
                             std::to_string(n) + " of " + to_string(base_shape));
        }
    }
}

Shape GridSpec::level_shape(Index k) const {
    if (k < 0 || k > levels) {
        throw std::out_of_range("level " + std::to_string(k) + " outside 0.." + std::to_string(levels));
    }
    const Index block = ipow(batch, levels - k);
    Shape s = base_shape;
    for (auto& n : s) n /= block;
    return s;
}

Index GridSpec::max_levels(const Shape& shape, Index batch) {
    Index levels = 0;
    Index block = batch;
    for (;;) {
        for (Index n : shape) {
            if (n % block != 0) return levels;
        }
        ++levels;
        block *= batch;
    }
}

void require_same_shape(const DenseTensor& a, const DenseTensor& b, const char* what) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(what) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
    }
}

double inner(const DenseTensor& a, const DenseTensor& b) {
    require_same_shape(a, b, "inner");
    return a.values().dot(b.values());
}

double frobenius_norm(const DenseTensor& t) { return t.values().norm(); }

DenseTensor add(const DenseTensor& a, const DenseTensor& b) {
    require_same_shape(a, b, "add");
    return DenseTensor(a.shape(), a.values() + b.values());
}

DenseTensor subtract(const DenseTensor& a, const DenseTensor& b) {
    require_same_shape(a, b, "subtract");
    return DenseTensor(a.shape(), a.values() - b.values());
}

DenseTensor hadamard(const DenseTensor& a, const DenseTensor& b) {
    require_same_shape(a, b, "hadamard");
    return DenseTensor(a.shape(), a.values().cwiseProduct(b.values()));
}

DenseTensor scale(const DenseTensor& t, double alpha) { return DenseTensor(t.shape(), alpha * t.values()); }

namespace {

// Repeat every slice along mode j `factor` times.
DenseTensor ext_mode(const DenseTensor& t, Index j, Index factor, std::size_t limit) {
    Shape out_shape = t.shape();
    out_shape[static_cast<std::size_t>(j)] *= factor;
    DenseTensor out(out_shape, limit);
    const Index p_size = t.outer_size(j);
    const Index n = t.mode(j);
    const Index q = t.inner_size(j);
    const double* src = t.values().data();
    double* dst = out.values().data();
    for (Index p = 0; p < p_size; ++p) {
        for (Index i = 0; i < n; ++i) {
            const double* row = src + (p * n + i) * q;
            for (Index f = 0; f < factor; ++f) {
                std::copy(row, row + q, dst);
                dst += q;
            }
        }
    }
    return out;
}

DenseTensor ave_mode(const DenseTensor& t, Index j, Index factor) {
    const Index n = t.mode(j);
    Shape out_shape = t.shape();
    out_shape[static_cast<std::size_t>(j)] = n / factor;
    DenseTensor out(out_shape);
    const Index p_size = t.outer_size(j);
    const Index q = t.inner_size(j);
    const Index coarse = n / factor;
    const double inv = 1.0 / static_cast<double>(factor);
    for (Index p = 0; p < p_size; ++p) {
        for (Index c = 0; c < coarse; ++c) {
            auto acc = out.values().segment((p * coarse + c) * q, q);
            for (Index f = 0; f < factor; ++f) {
                acc += t.values().segment((p * n + c * factor + f) * q, q);
            }
            acc *= inv;
        }
    }
    return out;
}

}  // namespace

DenseTensor ext(const DenseTensor& t, Index level, Index batch, std::size_t limit) {
    if (level < 0) throw std::invalid_argument("ext: level must be non-negative");
    if (batch < 2) throw std::invalid_argument("ext: batch size must be at least 2");
    if (level == 0) return t;
    const Index factor = ipow(batch, level);
    Shape out_shape = t.shape();
    for (auto& n : out_shape) n *= factor;
    element_count(out_shape, limit);
    DenseTensor out = t;
    for (Index j = 0; j < t.order(); ++j) {
        out = ext_mode(out, j, factor, limit);
    }
    return out;
}

DenseTensor ave(const DenseTensor& t, Index level, Index batch) {
    if (level < 0) throw std::invalid_argument("ave: level must be non-negative");
    if (batch < 2) throw std::invalid_argument("ave: batch size must be at least 2");
    if (level == 0) return t;
    const Index factor = ipow(batch, level);
    for (Index n : t.shape()) {
        if (n % factor != 0) {
            throw ShapeError("ave: block side " + std::to_string(factor) + " does not divide shape " +
                             to_string(t.shape()));
        }
    }
    DenseTensor out = t;
    for (Index j = 0; j < t.order(); ++j) {
        out = ave_mode(out, j, factor);
    }
    return out;
}

DenseTensor mode_contract(const DenseTensor& t, Index j, const Eigen::VectorXd& v) {
    if (j < 0 || j >= t.order()) {
        throw std::out_of_range("mode_contract: mode " + std::to_string(j) + " out of range for order " +
                                std::to_string(t.order()));
    }
    if (v.size() != t.mode(j)) {
        throw ShapeError("mode_contract: vector length " + std::to_string(v.size()) + " != mode size " +
                         std::to_string(t.mode(j)));
    }
    Shape out_shape = t.shape();
    out_shape.erase(out_shape.begin() + j);
    if (out_shape.empty()) out_shape = {1};
    DenseTensor out(out_shape);
    const Index p_size = t.outer_size(j);
    const Index n = t.mode(j);
    const Index q = t.inner_size(j);
    for (Index p = 0; p < p_size; ++p) {
        auto acc = out.values().segment(p * q, q);
        for (Index i = 0; i < n; ++i) {
            acc += v[i] * t.values().segment((p * n + i) * q, q);
        }
    }
    return out;
}

Eigen::VectorXd ext_vector(const Eigen::VectorXd& v, Index level, Index batch) {
    const Index factor = ipow(batch, level);
    Eigen::VectorXd out(v.size() * factor);
    for (Index i = 0; i < v.size(); ++i) {
        out.segment(i * factor, factor).setConstant(v[i]);
    }
    return out;
}

Eigen::VectorXd ave_vector(const Eigen::VectorXd& v, Index level, Index batch) {
    const Index factor = ipow(batch, level);
    if (v.size() % factor != 0) {
        throw ShapeError("ave: block side " + std::to_string(factor) + " does not divide length " +
                         std::to_string(v.size()));
    }
    Eigen::VectorXd out(v.size() / factor);
    for (Index i = 0; i < out.size(); ++i) {
        out[i] = v.segment(i * factor, factor).mean();
    }
    return out;
}

DenseTensor outer(std::span<const Eigen::VectorXd> factors) {
    Shape shape;
    for (const auto& f : factors) shape.push_back(f.size());
    DenseTensor out(shape);
    Eigen::VectorXd acc = Eigen::VectorXd::Ones(1);
    for (const auto& f : factors) {
        Eigen::VectorXd next(acc.size() * f.size());
        for (Index a = 0; a < acc.size(); ++a) {
            next.segment(a * f.size(), f.size()) = acc[a] * f;
        }
        acc = std::move(next);
    }
    out.values() = std::move(acc);
    return out;
}

}  // namespace mrt
