#pragma once

#include <cmath>
#include <utility>

#include "lrtc/common.hpp"

namespace lrtc {

/// Dense order-d tensor over doubles.
///
/// Storage convention (fixed project-wide): the data vector is linearized
/// with the FIRST index varying fastest, i.e.
///   flat(i_1, ..., i_d) = i_1 + n_1 * (i_2 + n_2 * (i_3 + ...)),
/// all indices 0-based. The mode-i matricization puts the mode-i index on
/// the rows and packs the remaining modes into the columns with the
/// smaller-numbered mode varying fastest. With this pairing the mode-1
/// matricization is a plain column-major reshape, and the 2x2x2 reference
/// example (A_(1) = [1 0 0 0; 0 1 0 0]  ==>  A_(3) = [1 0 0 1; 0 0 0 0])
/// comes out as expected.
class DenseTensor {
public:
    explicit DenseTensor(Dims dims) : dims_(std::move(dims)) {
        check_dims(dims_);
        data_ = Vector::Zero(product(dims_));
    }

    DenseTensor(Dims dims, Vector data) : dims_(std::move(dims)), data_(std::move(data)) {
        check_dims(dims_);
        if (data_.size() != product(dims_))
            throw std::invalid_argument("DenseTensor: data length does not match dims");
    }

    Index order() const { return static_cast<Index>(dims_.size()); }
    const Dims& dims() const { return dims_; }
    Index size() const { return data_.size(); }

    Vector& data() { return data_; }
    const Vector& data() const { return data_; }

    double operator[](Index flat) const { return data_(flat); }
    double& operator[](Index flat) { return data_(flat); }

    Index flat_index(const MultiIndex& idx) const {
        Index f = 0;
        for (Index m = order() - 1; m >= 0; --m) {
            if (idx[m] < 0 || idx[m] >= dims_[m])
                throw std::out_of_range("DenseTensor: index out of bounds");
            f = f * dims_[m] + idx[m];
        }
        return f;
    }

    double at(const MultiIndex& idx) const { return data_(flat_index(idx)); }
    double& at(const MultiIndex& idx) { return data_(flat_index(idx)); }

    DenseTensor& operator+=(const DenseTensor& o) {
        require_same_dims(o);
        data_ += o.data_;
        return *this;
    }
    DenseTensor& operator-=(const DenseTensor& o) {
        require_same_dims(o);
        data_ -= o.data_;
        return *this;
    }
    DenseTensor& operator*=(double s) {
        data_ *= s;
        return *this;
    }

    friend DenseTensor operator+(DenseTensor a, const DenseTensor& b) { return a += b; }
    friend DenseTensor operator-(DenseTensor a, const DenseTensor& b) { return a -= b; }
    friend DenseTensor operator*(double s, DenseTensor a) { return a *= s; }

private:
    static void check_dims(const Dims& dims) {
        if (dims.size() < 2)
            throw std::invalid_argument("DenseTensor: order must be >= 2");
        for (Index n : dims)
            if (n < 1) throw std::invalid_argument("DenseTensor: dims must be positive");
    }

    void require_same_dims(const DenseTensor& o) const {
        if (dims_ != o.dims_) throw std::invalid_argument("DenseTensor: dims mismatch");
    }

    Dims dims_;
    Vector data_;
};

/// Mode-i matricization, `mode` 0-based. Rows index mode i, columns pack the
/// remaining modes with the smaller-numbered mode fastest.
inline Matrix matricize(const DenseTensor& A, Index mode) {
    const Dims& dims = A.dims();
    const Index d = A.order();
    if (mode < 0 || mode >= d) throw std::invalid_argument("matricize: mode out of range");
    const Index rows = dims[mode];
    const Index cols = A.size() / rows;
    Matrix M(rows, cols);
    // Walk the flat storage once; decompose into (row, col) incrementally.
    MultiIndex idx(d, 0);
    for (Index f = 0; f < A.size(); ++f) {
        Index col = 0, stride = 1;
        for (Index m = 0; m < d; ++m) {
            if (m == mode) continue;
            col += idx[m] * stride;
            stride *= dims[m];
        }
        M(idx[mode], col) = A[f];
        for (Index m = 0; m < d; ++m) {
            if (++idx[m] < dims[m]) break;
            idx[m] = 0;
        }
    }
    return M;
}

/// Inverse of matricize for the same mode and dims.
inline DenseTensor tensorize(const Matrix& M, Index mode, const Dims& dims) {
    const Index d = static_cast<Index>(dims.size());
    if (mode < 0 || mode >= d) throw std::invalid_argument("tensorize: mode out of range");
    DenseTensor A(dims);
    if (M.rows() != dims[mode] || M.cols() != A.size() / dims[mode])
        throw std::invalid_argument("tensorize: matrix shape does not match dims");
    MultiIndex idx(d, 0);
    for (Index f = 0; f < A.size(); ++f) {
        Index col = 0, stride = 1;
        for (Index m = 0; m < d; ++m) {
            if (m == mode) continue;
            col += idx[m] * stride;
            stride *= dims[m];
        }
        A[f] = M(idx[mode], col);
        for (Index m = 0; m < d; ++m) {
            if (++idx[m] < dims[m]) break;
            idx[m] = 0;
        }
    }
    return A;
}

/// i-mode product A x_i M, with M of shape (m x n_i).
inline DenseTensor mode_product(const DenseTensor& A, const Matrix& M, Index mode) {
    if (mode < 0 || mode >= A.order())
        throw std::invalid_argument("mode_product: mode out of range");
    if (M.cols() != A.dims()[mode])
        throw std::invalid_argument("mode_product: matrix columns must match mode dimension");
    Dims out_dims = A.dims();
    out_dims[mode] = M.rows();
    return tensorize(M * matricize(A, mode), mode, out_dims);
}

inline double inner(const DenseTensor& A, const DenseTensor& B) {
    if (A.dims() != B.dims()) throw std::invalid_argument("inner: dims mismatch");
    return A.data().dot(B.data());
}

inline double norm(const DenseTensor& A) { return A.data().norm(); }

/// Multilinear rank: per mode, the number of singular values of the
/// matricization exceeding rel_tol * sigma_max.
inline Dims multilinear_rank(const DenseTensor& A, double rel_tol = 1e-10) {
    if (!(rel_tol > 0.0 && rel_tol < 1.0))
        throw std::invalid_argument("multilinear_rank: rel_tol must be in (0,1)");
    Dims r(A.order());
    for (Index i = 0; i < A.order(); ++i) {
        Eigen::JacobiSVD<Matrix> svd(matricize(A, i));
        const Vector& s = svd.singularValues();
        const double thresh = s.size() > 0 ? rel_tol * s(0) : 0.0;
        Index cnt = 0;
        for (Index k = 0; k < s.size(); ++k)
            if (s(k) > thresh && s(k) > 0.0) ++cnt;
        r[i] = cnt;
    }
    return r;
}

}  // namespace lrtc
