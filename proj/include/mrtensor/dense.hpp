#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace mrt {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

/// Dense operations refuse to produce more elements than this unless a larger
/// limit is passed explicitly.
inline constexpr std::size_t kDefaultMaxElements = std::size_t{1} << 31;

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class SizeLimitError : public std::length_error {
public:
    using std::length_error::length_error;
};

std::string to_string(const Shape& shape);

/// Product of the mode sizes; throws SizeLimitError past `limit`.
std::size_t element_count(const Shape& shape, std::size_t limit = kDefaultMaxElements);

/// Integer power b^e for grid arithmetic.
Index ipow(Index base, Index exponent);

/**
 * Dense d-way array of doubles stored row-major (last index fastest).
 *
 * The flat storage is an Eigen vector, so elementwise algebra can be written
 * directly against `values()`. Order-0 results (full contractions) are stored
 * as shape {1}.
 */
class DenseTensor {
public:
    DenseTensor() = default;
    explicit DenseTensor(Shape shape, std::size_t limit = kDefaultMaxElements);
    DenseTensor(Shape shape, Eigen::VectorXd values);

    static DenseTensor zeros(Shape shape) { return DenseTensor(std::move(shape)); }
    static DenseTensor constant(Shape shape, double value);

    const Shape& shape() const { return shape_; }
    Index order() const { return static_cast<Index>(shape_.size()); }
    Index mode(Index j) const { return shape_[static_cast<std::size_t>(j)]; }
    Index size() const { return values_.size(); }

    const Eigen::VectorXd& values() const { return values_; }
    Eigen::VectorXd& values() { return values_; }

    /// Row-major flat offset of a 0-based multi-index.
    Index offset(std::span<const Index> index) const;

    double operator()(std::span<const Index> index) const { return values_[offset(index)]; }
    double& operator()(std::span<const Index> index) { return values_[offset(index)]; }
    double operator()(std::initializer_list<Index> index) const {
        return (*this)(std::span<const Index>(index.begin(), index.size()));
    }
    double& operator()(std::initializer_list<Index> index) {
        return (*this)(std::span<const Index>(index.begin(), index.size()));
    }

    /// Product of the mode sizes before / after mode j.
    Index outer_size(Index j) const;
    Index inner_size(Index j) const;

private:
    Shape shape_;
    Eigen::VectorXd values_;
};

/// Batch size and level count of a multiresolution grid over `base_shape`.
struct GridSpec {
    Index batch = 2;
    Index levels = 0;
    Shape base_shape;

    GridSpec() = default;
    GridSpec(Index batch_size, Index level_count, Shape base);

    Index order() const { return static_cast<Index>(base_shape.size()); }
    /// Shape of level k: base_shape / batch^(levels - k).
    Shape level_shape(Index k) const;
    /// Largest L with batch^L dividing every mode of `shape`.
    static Index max_levels(const Shape& shape, Index batch);

    bool operator==(const GridSpec&) const = default;
};

void require_same_shape(const DenseTensor& a, const DenseTensor& b, const char* what);

double inner(const DenseTensor& a, const DenseTensor& b);
double frobenius_norm(const DenseTensor& t);

DenseTensor add(const DenseTensor& a, const DenseTensor& b);
DenseTensor subtract(const DenseTensor& a, const DenseTensor& b);
DenseTensor hadamard(const DenseTensor& a, const DenseTensor& b);
DenseTensor scale(const DenseTensor& t, double alpha);

/// Replaces every entry by a constant block of side batch^level.
DenseTensor ext(const DenseTensor& t, Index level, Index batch,
                std::size_t limit = kDefaultMaxElements);

/// Block means over aligned blocks of side batch^level; left inverse of ext.
DenseTensor ave(const DenseTensor& t, Index level, Index batch);

/// Sum over mode j (0-based) against v; drops that mode.
DenseTensor mode_contract(const DenseTensor& t, Index j, const Eigen::VectorXd& v);

/// ext/ave along a single vector (1-D case used by factor-wise formats).
Eigen::VectorXd ext_vector(const Eigen::VectorXd& v, Index level, Index batch);
Eigen::VectorXd ave_vector(const Eigen::VectorXd& v, Index level, Index batch);

/// Outer product u_1 ⊗ ... ⊗ u_d.
DenseTensor outer(std::span<const Eigen::VectorXd> factors);

}  // namespace mrt
