#pragma once

#include <random>

#include "lrtc/manifold.hpp"

namespace lrtc {

using Rng = std::mt19937_64;

inline DenseTensor random_uniform_tensor(const Dims& dims, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    DenseTensor A(dims);
    for (Index k = 0; k < A.size(); ++k) A[k] = u(rng);
    return A;
}

inline DenseTensor random_gaussian_tensor(const Dims& dims, Rng& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    DenseTensor A(dims);
    for (Index k = 0; k < A.size(); ++k) A[k] = g(rng);
    return A;
}

/// Random manifold point: uniform-(0,1) core and factors, QR-orthonormalized.
inline TuckerTensor random_tucker(const Dims& dims, const Dims& ranks, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    DenseTensor core = random_uniform_tensor(ranks, rng);
    std::vector<Matrix> raw(dims.size());
    for (size_t i = 0; i < dims.size(); ++i) {
        raw[i] = Matrix(dims[i], ranks[i]);
        for (Index a = 0; a < raw[i].size(); ++a) raw[i](a) = u(rng);
    }
    return orthonormalize(core, raw);
}

/// Random tangent direction: projection of a Gaussian ambient tensor.
inline TangentVector random_tangent(const TuckerTensor& X, Rng& rng) {
    return project_to_tangent(X, random_gaussian_tensor(X.dims(), rng));
}

/// Uniform sampling set of `count` distinct indices, without replacement.
inline std::vector<MultiIndex> sample_omega(const Dims& dims, Index count, Rng& rng) {
    const Index total = product(dims);
    if (count < 1 || count > total)
        throw std::invalid_argument("sample_omega: count out of range");
    // Selection sampling over the flat index range.
    std::vector<MultiIndex> omega;
    omega.reserve(count);
    Index remaining = total, needed = count;
    const Index d = static_cast<Index>(dims.size());
    for (Index f = 0; f < total && needed > 0; ++f, --remaining) {
        std::uniform_int_distribution<Index> pick(0, remaining - 1);
        if (pick(rng) < needed) {
            MultiIndex idx(d);
            Index rem = f;
            for (Index m = 0; m < d; ++m) {
                idx[m] = rem % dims[m];
                rem /= dims[m];
            }
            omega.push_back(std::move(idx));
            --needed;
        }
    }
    return omega;
}

}  // namespace lrtc
