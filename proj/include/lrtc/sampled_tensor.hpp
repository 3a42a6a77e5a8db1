#pragma once

#include <algorithm>
#include <utility>

#include "lrtc/common.hpp"
#include "lrtc/dense_tensor.hpp"

namespace lrtc {

/// Sampling set Omega together with the known values P_Omega(A).
/// Multi-indices are 0-based, strictly sorted lexicographically, unique.
class SampledTensor {
public:
    SampledTensor(Dims dims, std::vector<MultiIndex> indices, Vector values)
        : dims_(std::move(dims)), indices_(std::move(indices)), values_(std::move(values)) {
        if (dims_.size() < 2)
            throw std::invalid_argument("SampledTensor: order must be >= 2");
        if (indices_.empty()) throw std::invalid_argument("SampledTensor: empty sampling set");
        if (static_cast<Index>(indices_.size()) != values_.size())
            throw std::invalid_argument("SampledTensor: index/value count mismatch");
        if (static_cast<Index>(indices_.size()) > product(dims_))
            throw std::invalid_argument("SampledTensor: more samples than tensor entries");
        const Index d = static_cast<Index>(dims_.size());
        for (const MultiIndex& idx : indices_) {
            if (static_cast<Index>(idx.size()) != d)
                throw std::invalid_argument("SampledTensor: multi-index order mismatch");
            for (Index m = 0; m < d; ++m)
                if (idx[m] < 0 || idx[m] >= dims_[m])
                    throw std::out_of_range("SampledTensor: index out of bounds");
        }
        sort_entries();
        for (size_t k = 1; k < indices_.size(); ++k)
            if (indices_[k] == indices_[k - 1])
                throw std::invalid_argument("SampledTensor: duplicate multi-index");
    }

    const Dims& dims() const { return dims_; }
    Index order() const { return static_cast<Index>(dims_.size()); }
    Index count() const { return static_cast<Index>(indices_.size()); }

    const std::vector<MultiIndex>& indices() const { return indices_; }
    const MultiIndex& index(Index k) const { return indices_[k]; }
    const Vector& values() const { return values_; }
    double value(Index k) const { return values_(k); }

    /// Same sampling set, different values (residuals, P_Omega of a tangent
    /// direction, ...).
    SampledTensor with_values(Vector v) const {
        SampledTensor out = *this;
        if (v.size() != values_.size())
            throw std::invalid_argument("with_values: size mismatch");
        out.values_ = std::move(v);
        return out;
    }

private:
    void sort_entries() {
        std::vector<size_t> perm(indices_.size());
        for (size_t k = 0; k < perm.size(); ++k) perm[k] = k;
        std::sort(perm.begin(), perm.end(), [&](size_t a, size_t b) {
            return std::lexicographical_compare(indices_[a].begin(), indices_[a].end(),
                                                indices_[b].begin(), indices_[b].end());
        });
        std::vector<MultiIndex> si(indices_.size());
        Vector sv(values_.size());
        for (size_t k = 0; k < perm.size(); ++k) {
            si[k] = std::move(indices_[perm[k]]);
            sv(static_cast<Index>(k)) = values_(static_cast<Index>(perm[k]));
        }
        indices_ = std::move(si);
        values_ = std::move(sv);
    }

    Dims dims_;
    std::vector<MultiIndex> indices_;
    Vector values_;
};

/// Restrict a dense tensor to a sampling set.
inline SampledTensor sample_project(const DenseTensor& A, const std::vector<MultiIndex>& omega) {
    Vector v(static_cast<Index>(omega.size()));
    for (size_t k = 0; k < omega.size(); ++k)
        v(static_cast<Index>(k)) = A.at(omega[k]);
    return SampledTensor(A.dims(), omega, std::move(v));
}

/// Dense embedding of a sampled tensor (zeros off Omega). Test helper.
inline DenseTensor to_dense(const SampledTensor& S) {
    DenseTensor A(S.dims());
    for (Index k = 0; k < S.count(); ++k) A.at(S.index(k)) = S.value(k);
    return A;
}

}  // namespace lrtc
