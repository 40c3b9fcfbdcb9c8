#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "mrtensor/dense.hpp"
#include "mrtensor/ms.hpp"
#include "mrtensor/tt.hpp"

namespace mrt::test {

using Rng = std::mt19937_64;

inline Index uniform_int(Rng& rng, Index lo, Index hi) {
    return std::uniform_int_distribution<Index>(lo, hi)(rng);
}

inline double gaussian(Rng& rng) { return std::normal_distribution<double>()(rng); }

inline DenseTensor random_dense(const Shape& shape, Rng& rng, bool integer = false) {
    DenseTensor t(shape);
    for (Index i = 0; i < t.size(); ++i) {
        t.values()[i] = integer ? static_cast<double>(uniform_int(rng, -9, 9)) : gaussian(rng);
    }
    return t;
}

inline Eigen::VectorXd random_vector(Index n, Rng& rng) {
    Eigen::VectorXd v(n);
    for (Index i = 0; i < n; ++i) v[i] = gaussian(rng);
    return v;
}

/// Shape with `order` modes, each a multiple of `block` and at most `max_mode`.
inline Shape random_shape(Rng& rng, Index order, Index block, Index max_mode) {
    Shape s;
    const Index max_mult = std::max<Index>(1, max_mode / block);
    for (Index j = 0; j < order; ++j) s.push_back(block * uniform_int(rng, 1, max_mult));
    return s;
}

/// Calls f with every multi-index of `shape` in row-major order.
inline void for_each_index(const Shape& shape, const std::function<void(const std::vector<Index>&)>& f) {
    std::vector<Index> idx(shape.size(), 0);
    Index total = 1;
    for (Index n : shape) total *= n;
    for (Index c = 0; c < total; ++c) {
        f(idx);
        for (std::size_t j = shape.size(); j-- > 0;) {
            if (++idx[j] < shape[j]) break;
            idx[j] = 0;
        }
    }
}

inline double rel_diff(const DenseTensor& a, const DenseTensor& b) {
    const double nb = frobenius_norm(b);
    const double d = (a.values() - b.values()).norm();
    return nb == 0.0 ? d : d / nb;
}

// Loop oracles written directly from the index definitions.

inline double inner_oracle(const DenseTensor& a, const DenseTensor& b) {
    double s = 0.0;
    for_each_index(a.shape(), [&](const std::vector<Index>& i) { s += a(i) * b(i); });
    return s;
}

inline DenseTensor ext_oracle(const DenseTensor& t, Index level, Index batch) {
    const Index f = ipow(batch, level);
    Shape s = t.shape();
    for (auto& n : s) n *= f;
    DenseTensor out(s);
    for_each_index(s, [&](const std::vector<Index>& i) {
        std::vector<Index> src(i);
        for (auto& v : src) v /= f;
        out(i) = t(src);
    });
    return out;
}

inline DenseTensor ave_oracle(const DenseTensor& t, Index level, Index batch) {
    const Index f = ipow(batch, level);
    Shape s = t.shape();
    for (auto& n : s) n /= f;
    DenseTensor out(s);
    Shape block(s.size(), f);
    const double count = std::pow(static_cast<double>(f), static_cast<double>(s.size()));
    for_each_index(s, [&](const std::vector<Index>& i) {
        double sum = 0.0;
        for_each_index(block, [&](const std::vector<Index>& j) {
            std::vector<Index> src(i.size());
            for (std::size_t m = 0; m < i.size(); ++m) src[m] = i[m] * f + j[m];
            sum += t(src);
        });
        out(i) = sum / count;
    });
    return out;
}

inline DenseTensor mode_contract_oracle(const DenseTensor& t, Index j, const Eigen::VectorXd& v) {
    Shape s;
    for (Index m = 0; m < t.order(); ++m)
        if (m != j) s.push_back(t.mode(m));
    if (s.empty()) s.push_back(1);
    DenseTensor out(s);
    for_each_index(t.shape(), [&](const std::vector<Index>& i) {
        std::vector<Index> o;
        for (Index m = 0; m < t.order(); ++m)
            if (m != j) o.push_back(i[static_cast<std::size_t>(m)]);
        if (o.empty()) o.push_back(0);
        out(o) += t(i) * v[i[static_cast<std::size_t>(j)]];
    });
    return out;
}

/// Reconstruction straight from the definition: sum_k ext_{L-k}(T_k) via loops.
inline DenseTensor ms_oracle(const MSTensor& x) {
    const GridSpec& g = x.grid();
    DenseTensor out(g.base_shape);
    for (Index k = 0; k <= g.levels; ++k) {
        out.values() += ext_oracle(payload_to_dense(x.payload(k)), g.levels - k, g.batch).values();
    }
    return out;
}

}  // namespace mrt::test
