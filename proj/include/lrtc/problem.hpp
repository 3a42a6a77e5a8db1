#pragma once

#include <iostream>

#include "lrtc/random.hpp"
#include "lrtc/solver.hpp"

namespace lrtc {

enum class TruthKind { LowRank, FullRank, LowRankPlusNoise };

struct ProblemSpec {
    Dims dims;
    Dims rank;
    double fraction = 0.5;  // ignored if omega_size > 0
    Index omega_size = 0;
    TruthKind kind = TruthKind::LowRank;
    double noise_sigma = 0.0;
    /// Mode-wise spectral decay of the low-rank part: column k of each core
    /// matricization is scaled by decay^k. 1.0 leaves the core untouched.
    double decay = 1.0;
    std::uint64_t seed = 0;
};

struct Problem {
    SampledTensor data;
    DenseTensor truth;
};

inline Problem generate_problem(const ProblemSpec& spec) {
    if (spec.omega_size == 0 && !(spec.fraction > 0.0 && spec.fraction <= 1.0))
        throw std::invalid_argument("generate_problem: fraction must be in (0,1]");
    if (spec.noise_sigma < 0.0)
        throw std::invalid_argument("generate_problem: noise sigma must be >= 0");
    if (!(spec.decay > 0.0 && spec.decay <= 1.0))
        throw std::invalid_argument("generate_problem: decay must be in (0,1]");
    Rng rng(spec.seed);

    auto low_rank = [&] {
        TuckerTensor T = random_tucker(spec.dims, spec.rank, rng);
        if (spec.decay == 1.0) return to_full(T);
        DenseTensor core = T.core();
        for (size_t i = 0; i < spec.dims.size(); ++i) {
            Vector d(spec.rank[i]);
            for (Index k = 0; k < spec.rank[i]; ++k) d(k) = std::pow(spec.decay, k);
            core = mode_product(core, Matrix(d.asDiagonal()), static_cast<Index>(i));
        }
        std::vector<Matrix> factors(spec.dims.size());
        for (size_t i = 0; i < spec.dims.size(); ++i) factors[i] = T.factor(i);
        return to_full(orthonormalize(core, factors));
    };
    DenseTensor truth = [&] {
        switch (spec.kind) {
            case TruthKind::FullRank:
                return random_uniform_tensor(spec.dims, rng);
            case TruthKind::LowRank:
                return low_rank();
            case TruthKind::LowRankPlusNoise:
            default: {
                DenseTensor t = low_rank();
                t += spec.noise_sigma * random_gaussian_tensor(spec.dims, rng);
                return t;
            }
        }
    }();

    const Index total = product(spec.dims);
    const Index count = spec.omega_size > 0
                            ? spec.omega_size
                            : static_cast<Index>(spec.fraction * static_cast<double>(total));
    if (count < 1) throw std::invalid_argument("generate_problem: empty sampling set");

    const auto omega = sample_omega(spec.dims, count, rng);
    SampledTensor data = sample_project(truth, omega);
    if (count < manifold_dim(spec.dims, spec.rank))
        std::cerr << "warning: |Omega| = " << count << " < dim(M_r) = "
                  << manifold_dim(spec.dims, spec.rank)
                  << "; completion is underdetermined\n";
    return {std::move(data), std::move(truth)};
}

}  // namespace lrtc
