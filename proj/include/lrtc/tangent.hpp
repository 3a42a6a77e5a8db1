#pragma once

#include <utility>

#include "lrtc/tucker.hpp"

namespace lrtc {

/// Element of the tangent space at a Tucker point X: a core variation and
/// gauged factor variations with dotU_i^T U_i = 0.
class TangentVector {
public:
    TangentVector(TuckerTensor anchor, DenseTensor core_dot, std::vector<Matrix> factor_dots)
        : anchor_(std::move(anchor)),
          core_dot_(std::move(core_dot)),
          factor_dots_(std::move(factor_dots)) {
        if (core_dot_.dims() != anchor_.ranks())
            throw std::invalid_argument("TangentVector: core variation dims mismatch");
        if (factor_dots_.size() != anchor_.factors().size())
            throw std::invalid_argument("TangentVector: one factor variation per mode required");
        for (Index i = 0; i < anchor_.order(); ++i) {
            if (factor_dots_[i].rows() != anchor_.factor(i).rows() ||
                factor_dots_[i].cols() != anchor_.factor(i).cols())
                throw std::invalid_argument("TangentVector: factor variation shape mismatch");
        }
    }

    static TangentVector zero(const TuckerTensor& X) {
        std::vector<Matrix> fd(X.order());
        for (Index i = 0; i < X.order(); ++i)
            fd[i] = Matrix::Zero(X.factor(i).rows(), X.factor(i).cols());
        return TangentVector(X, DenseTensor(X.ranks()), std::move(fd));
    }

    const TuckerTensor& anchor() const { return anchor_; }
    const DenseTensor& core_dot() const { return core_dot_; }
    const std::vector<Matrix>& factor_dots() const { return factor_dots_; }
    const Matrix& factor_dot(Index i) const { return factor_dots_[i]; }

    TangentVector& operator+=(const TangentVector& o) {
        core_dot_ += o.core_dot_;
        for (size_t i = 0; i < factor_dots_.size(); ++i) factor_dots_[i] += o.factor_dots_[i];
        return *this;
    }
    TangentVector& operator-=(const TangentVector& o) {
        core_dot_ -= o.core_dot_;
        for (size_t i = 0; i < factor_dots_.size(); ++i) factor_dots_[i] -= o.factor_dots_[i];
        return *this;
    }
    TangentVector& operator*=(double s) {
        core_dot_ *= s;
        for (auto& m : factor_dots_) m *= s;
        return *this;
    }

    friend TangentVector operator+(TangentVector a, const TangentVector& b) { return a += b; }
    friend TangentVector operator-(TangentVector a, const TangentVector& b) { return a -= b; }
    friend TangentVector operator*(double s, TangentVector a) { return a *= s; }
    friend TangentVector operator-(TangentVector a) { return a *= -1.0; }

private:
    TuckerTensor anchor_;
    DenseTensor core_dot_;
    std::vector<Matrix> factor_dots_;
};

/// Riemannian (= ambient Frobenius) inner product of two tangent vectors at
/// the same anchor. With orthonormal factors and the gauge condition the
/// cross terms vanish and the factor terms contract against the core Gram
/// matrices G_i = C_(i) C_(i)^T.
inline double tangent_inner(const TangentVector& a, const TangentVector& b) {
    const TuckerTensor& X = a.anchor();
    double v = inner(a.core_dot(), b.core_dot());
    for (Index i = 0; i < X.order(); ++i) {
        const Matrix Ci = matricize(X.core(), i);
        v += (a.factor_dot(i) * (Ci * Ci.transpose()))
                 .cwiseProduct(b.factor_dot(i))
                 .sum();
    }
    return v;
}

inline double tangent_norm(const TangentVector& a) {
    return std::sqrt(std::max(0.0, tangent_inner(a, a)));
}

/// Dense ambient embedding dotC x U_i + sum_i C x_i dotU_i x_{j!=i} U_j.
/// Test and oracle use only.
inline DenseTensor tangent_to_ambient(const TangentVector& xi) {
    const TuckerTensor& X = xi.anchor();
    const Index d = X.order();
    DenseTensor out = xi.core_dot();
    for (Index i = 0; i < d; ++i) out = mode_product(out, X.factor(i), i);
    for (Index i = 0; i < d; ++i) {
        DenseTensor term = X.core();
        for (Index j = 0; j < d; ++j)
            term = mode_product(term, j == i ? xi.factor_dot(i) : X.factor(j), j);
        out += term;
    }
    return out;
}

/// Entries of the ambient embedding at the sampling indices, evaluated
/// without dense tensors: each of the d+1 Tucker-format summands is sampled
/// with one swapped factor.
inline Vector tangent_sampled_entries(const TangentVector& xi,
                                      const std::vector<MultiIndex>& omega) {
    const TuckerTensor& X = xi.anchor();
    Vector out = detail::sampled_entries_raw(xi.core_dot(), X.factors(), omega);
    for (Index i = 0; i < X.order(); ++i) {
        std::vector<Matrix> fac = X.factors();
        fac[i] = xi.factor_dot(i);
        out += detail::sampled_entries_raw(X.core(), fac, omega);
    }
    return out;
}

}  // namespace lrtc
