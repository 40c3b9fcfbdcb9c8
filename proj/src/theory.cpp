#include "mrtensor/theory.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mrt {

namespace {

Index exact_log(Index n, Index batch) {
    if (batch < 2) throw std::invalid_argument("batch size must be at least 2, got " + std::to_string(batch));
    Index levels = 0;
    Index m = n;
    while (m > 1 && m % batch == 0) {
        m /= batch;
        ++levels;
    }
    if (m != 1) {
        throw std::invalid_argument("n = " + std::to_string(n) + " is not a power of " + std::to_string(batch));
    }
    return levels;
}

}  // namespace

MultiscaleSample multiscale_test_tensor(Index n, Index d, Index batch) {
    if (d < 1) throw std::invalid_argument("order must be at least 1");
    exact_log(n, batch);
    MultiscaleSample out;
    for (double freq : {4.0, 2.0, 1.0}) {
        Eigen::VectorXd u(n);
        for (Index i = 0; i < n; ++i) {
            u[i] = std::sin(freq * std::numbers::pi * static_cast<double>(i + 1) / static_cast<double>(n));
        }
        out.terms.emplace_back(static_cast<std::size_t>(d), u);
    }
    out.tensor = DenseTensor(Shape(static_cast<std::size_t>(d), n));
    for (const auto& term : out.terms) out.tensor.values() += outer(term).values();
    return out;
}

double block_radical(Index batch, Index offset) {
    const double b2 = std::pow(static_cast<double>(batch), 2.0 * static_cast<double>(offset));
    return std::sqrt((7.0 * b2 - 15.0 + 8.0 / b2) / 60.0);
}

long long block_deviation_sum(long long m) { return m * (7 * m * m * m * m - 15 * m * m + 8) / 60; }

ScaleBound scale_separation_bound(const BoundInput& in) {
    const std::size_t r = in.terms.size();
    if (r == 0) throw std::invalid_argument("bound needs at least one term");
    if (in.omega.size() != r || in.lipschitz.size() != r) {
        throw std::invalid_argument("omega and Lipschitz constants need one entry per term");
    }
    for (std::size_t t = 1; t < r; ++t) {
        if (!(in.omega[t] > in.omega[t - 1])) throw std::invalid_argument("length scales must be strictly increasing");
    }
    if (in.omega[0] <= 0.0) throw std::invalid_argument("length scales must be positive");
    const auto n = static_cast<double>(in.terms[0][0].size());
    ScaleBound out;
    for (std::size_t t = 0; t < r; ++t) {
        double prod = 1.0;
        double first_order = 0.0;
        double norm = 1.0;
        for (std::size_t j = 0; j < in.terms[t].size(); ++j) {
            const double un = in.terms[t][j].norm();
            norm *= un;
            const double rel = (in.b - in.a) * in.lipschitz[t][j] * block_radical(in.batch, static_cast<Index>(t)) /
                               (std::sqrt(n) * in.omega[t] * un);
            prod *= 1.0 + rel;
            first_order += rel;
        }
        const double delta = t == 0 ? 0.0 : prod - 1.0;
        out.delta.push_back(delta);
        out.term_norms.push_back(norm);
        out.total += delta * norm;
        if (t > 0) out.large_n += first_order * norm;
    }
    return out;
}

MSTensor prescribed_ms_approximation(const SeparableTerms& terms, Index batch) {
    if (terms.empty()) throw std::invalid_argument("no terms given");
    Shape base;
    for (const auto& u : terms[0]) base.push_back(u.size());
    const Index levels = exact_log(base[0], batch);
    const auto r = static_cast<Index>(terms.size());
    if (r - 1 > levels) {
        throw std::invalid_argument(std::to_string(r) + " terms need at least " + std::to_string(r - 1) + " levels");
    }
    const GridSpec grid(batch, levels, base);
    std::vector<Payload> payloads;
    for (Index k = 0; k <= levels; ++k) payloads.emplace_back(CPTensor::zero(grid.level_shape(k)));
    for (Index t = 0; t < r; ++t) {
        std::vector<Eigen::MatrixXd> factors;
        for (const auto& u : terms[static_cast<std::size_t>(t)]) factors.emplace_back(ave_vector(u, t, batch));
        payloads[static_cast<std::size_t>(levels - t)] = CPTensor(Eigen::VectorXd::Ones(1), std::move(factors));
    }
    return MSTensor(grid, BaseFormat::CP, std::move(payloads));
}

ClosednessSample closedness_sequence(double n) {
    if (!(n >= 1.0)) throw std::invalid_argument("closedness sequence needs n >= 1");
    const Eigen::Vector2d v(std::sqrt(n + 1.0), std::sqrt(n - 1.0));
    ClosednessSample out;
    out.tensor = DenseTensor({2, 2});
    for (Index i = 0; i < 2; ++i)
        for (Index j = 0; j < 2; ++j) out.tensor({i, j}) = n - v[i] * v[j];
    const GridSpec grid(2, 1, {2, 2});
    const Eigen::VectorXd coarse = Eigen::VectorXd::Constant(1, n);
    const Eigen::VectorXd unit = Eigen::VectorXd::Ones(1);
    const std::vector<Eigen::VectorXd> c{coarse, unit};
    const std::vector<Eigen::VectorXd> f{Eigen::VectorXd(-v), Eigen::VectorXd(v)};
    out.witness = MSTensor(grid, BaseFormat::TT, {TTTensor::rank_one(c), TTTensor::rank_one(f)});
    return out;
}

double closedness_error(double n) { return std::sqrt(2.0) / (n + std::sqrt(n * n - 1.0)); }

DenseTensor closedness_limit() {
    DenseTensor t({2, 2});
    t({0, 0}) = -1.0;
    t({1, 1}) = 1.0;
    return t;
}

}  // namespace mrt
