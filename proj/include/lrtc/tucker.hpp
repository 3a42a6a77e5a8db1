#pragma once

#include <utility>

#include "lrtc/common.hpp"
#include "lrtc/dense_tensor.hpp"
#include "lrtc/sampled_tensor.hpp"

namespace lrtc {

/// A point on the fixed-rank manifold: core C (r_1 x ... x r_d) and
/// orthonormal factors U_i (n_i x r_i).
class TuckerTensor {
public:
    TuckerTensor(DenseTensor core, std::vector<Matrix> factors)
        : core_(std::move(core)), factors_(std::move(factors)) {
        const Index d = core_.order();
        if (static_cast<Index>(factors_.size()) != d)
            throw std::invalid_argument("TuckerTensor: one factor per mode required");
        for (Index i = 0; i < d; ++i) {
            const Index ri = core_.dims()[i];
            if (factors_[i].cols() != ri)
                throw std::invalid_argument("TuckerTensor: factor columns must match core dims");
            if (factors_[i].rows() < ri)
                throw std::invalid_argument("TuckerTensor: rank exceeds mode dimension");
            // r_i <= prod_{j != i} r_j is necessary for multilinear rank exactly r.
            Index pr = 1;
            for (Index j = 0; j < d; ++j)
                if (j != i) pr *= core_.dims()[j];
            if (ri > pr)
                throw std::invalid_argument("TuckerTensor: infeasible multilinear rank tuple");
            const double dev = (factors_[i].transpose() * factors_[i] -
                                Matrix::Identity(ri, ri)).cwiseAbs().maxCoeff();
            if (dev > 1e-10)
                throw std::invalid_argument("TuckerTensor: factor columns not orthonormal");
        }
    }

    Index order() const { return core_.order(); }
    const DenseTensor& core() const { return core_; }
    const std::vector<Matrix>& factors() const { return factors_; }
    const Matrix& factor(Index i) const { return factors_[i]; }

    const Dims& ranks() const { return core_.dims(); }
    Dims dims() const {
        Dims n(order());
        for (Index i = 0; i < order(); ++i) n[i] = factors_[i].rows();
        return n;
    }

private:
    DenseTensor core_;
    std::vector<Matrix> factors_;
};

inline DenseTensor to_full(const TuckerTensor& X) {
    DenseTensor A = X.core();
    for (Index i = 0; i < X.order(); ++i) A = mode_product(A, X.factor(i), i);
    return A;
}

/// QR-orthonormalize raw factors, absorbing the triangular parts into the
/// core; the represented tensor is unchanged. R diagonals are made positive
/// so the result is deterministic.
inline TuckerTensor orthonormalize(const DenseTensor& core, const std::vector<Matrix>& raw) {
    const Index d = core.order();
    if (static_cast<Index>(raw.size()) != d)
        throw std::invalid_argument("orthonormalize: one factor per mode required");
    DenseTensor C = core;
    std::vector<Matrix> U(d);
    for (Index i = 0; i < d; ++i) {
        const Index ri = core.dims()[i];
        if (raw[i].cols() != ri)
            throw std::invalid_argument("orthonormalize: factor columns must match core dims");
        Eigen::HouseholderQR<Matrix> qr(raw[i]);
        Matrix Q = qr.householderQ() * Matrix::Identity(raw[i].rows(), ri);
        Matrix R = qr.matrixQR().topRows(ri).triangularView<Eigen::Upper>();
        for (Index k = 0; k < ri; ++k) {
            if (std::abs(R(k, k)) < 1e-13 * raw[i].cwiseAbs().maxCoeff())
                throw std::invalid_argument("orthonormalize: rank-deficient raw factor");
            if (R(k, k) < 0.0) {
                R.row(k) = -R.row(k);
                Q.col(k) = -Q.col(k);
            }
        }
        U[i] = std::move(Q);
        C = mode_product(C, R, i);
    }
    return TuckerTensor(std::move(C), std::move(U));
}

namespace detail {

/// Flip each column's sign so its largest-magnitude entry is positive.
inline void fix_signs(Matrix& U) {
    for (Index c = 0; c < U.cols(); ++c) {
        Index imax = 0;
        U.col(c).cwiseAbs().maxCoeff(&imax);
        if (U(imax, c) < 0.0) U.col(c) = -U.col(c);
    }
}

/// Dominant left singular vectors with the deterministic sign convention.
/// Returns the full singular value vector through `sv` when requested.
inline Matrix dominant_left_singular(const Matrix& M, Index r, Vector* sv = nullptr) {
    Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeThinU);
    if (sv) *sv = svd.singularValues();
    Matrix U = svd.matrixU().leftCols(r);
    fix_signs(U);
    return U;
}

}  // namespace detail

/// Truncated HOSVD: factors from the dominant left singular vectors of each
/// matricization of A, core = A x_i U_i^T over all modes.
inline TuckerTensor hosvd(const DenseTensor& A, const Dims& ranks) {
    const Index d = A.order();
    if (static_cast<Index>(ranks.size()) != d)
        throw std::invalid_argument("hosvd: rank tuple order mismatch");
    std::vector<Matrix> U(d);
    for (Index i = 0; i < d; ++i) {
        if (ranks[i] > A.dims()[i])
            throw std::invalid_argument("hosvd: rank exceeds mode dimension");
        U[i] = detail::dominant_left_singular(matricize(A, i), ranks[i]);
    }
    DenseTensor C = A;
    for (Index i = 0; i < d; ++i) C = mode_product(C, U[i].transpose(), i);
    return TuckerTensor(std::move(C), std::move(U));
}

namespace detail {

/// Per-sample contraction of a Tucker-format tensor (factors need not be
/// orthonormal): the core is contracted mode by mode against one gathered
/// factor row, O(|Omega| * prod r_i) arithmetic per call.
inline Vector sampled_entries_raw(const DenseTensor& core, const std::vector<Matrix>& factors,
                                  const std::vector<MultiIndex>& omega) {
    const Index d = core.order();
    Vector out(static_cast<Index>(omega.size()));
    std::vector<double> buf(core.size()), next(core.size());
    for (size_t s = 0; s < omega.size(); ++s) {
        const MultiIndex& idx = omega[s];
        if (static_cast<Index>(idx.size()) != d)
            throw std::invalid_argument("sampled_entries: multi-index order mismatch");
        for (Index m = 0; m < d; ++m)
            if (idx[m] < 0 || idx[m] >= factors[m].rows())
                throw std::out_of_range("sampled_entries: index out of bounds");
        Index len = core.size();
        for (Index k = 0; k < len; ++k) buf[k] = core[k];
        for (Index m = 0; m < d; ++m) {
            // buf holds a tensor of shape (r_m, ..., r_d) flattened
            // first-index-fastest; contract out the leading mode.
            const Index rm = core.dims()[m];
            const Index rest = len / rm;
            const auto& row = factors[m].row(idx[m]);
            for (Index c = 0; c < rest; ++c) {
                double acc = 0.0;
                for (Index a = 0; a < rm; ++a) acc += row(a) * buf[c * rm + a];
                next[c] = acc;
            }
            std::swap(buf, next);
            len = rest;
        }
        out(static_cast<Index>(s)) = buf[0];
    }
    return out;
}

}  // namespace detail

/// Entries of to_full(X) at the indices of Omega, without materializing the
/// full tensor.
inline Vector sampled_entries(const TuckerTensor& X, const std::vector<MultiIndex>& omega) {
    return detail::sampled_entries_raw(X.core(), X.factors(), omega);
}

inline Vector sampled_entries(const TuckerTensor& X, const SampledTensor& data) {
    return sampled_entries(X, data.indices());
}

/// Singular values of every matricization, descending.
inline std::vector<Vector> singular_spectrum(const DenseTensor& A) {
    std::vector<Vector> out(A.order());
    for (Index i = 0; i < A.order(); ++i) {
        Eigen::JacobiSVD<Matrix> svd(matricize(A, i));
        out[i] = svd.singularValues();
    }
    return out;
}

}  // namespace lrtc
