#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace lrtc {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dimension tuple (n_1, ..., n_d) or rank tuple (r_1, ..., r_d).
using Dims = std::vector<Index>;

/// Multi-index, 0-based internally. File formats are 1-based; conversion
/// happens at the I/O boundary.
using MultiIndex = std::vector<Index>;

inline Index product(const Dims& dims) {
    Index p = 1;
    for (Index n : dims) p *= n;
    return p;
}

/// Truncation would drop the multilinear rank below the requested one
/// (sigma_{r_i} fell under the cutoff).
class RankDropError : public std::runtime_error {
public:
    explicit RankDropError(const std::string& what) : std::runtime_error(what) {}
};

/// A core matricization is rank-deficient beyond the pseudoinverse cutoff;
/// the anchor point is effectively off the manifold.
class PinvCutoffError : public std::runtime_error {
public:
    explicit PinvCutoffError(const std::string& what) : std::runtime_error(what) {}
};

/// Pseudoinverse via SVD with relative cutoff. Throws PinvCutoffError if the
/// smallest singular value that must be inverted falls below the cutoff.
inline Matrix pseudoinverse(const Matrix& A, double rel_cutoff = 1e-12) {
    Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    const Index k = s.size();
    if (k == 0) throw PinvCutoffError("pseudoinverse of empty matrix");
    const double cutoff = s(0) * rel_cutoff;
    const Index r = std::min(A.rows(), A.cols());
    for (Index i = 0; i < r; ++i) {
        if (!(s(i) > cutoff))
            throw PinvCutoffError("singular value " + std::to_string(i) +
                                  " below pseudoinverse cutoff");
    }
    Vector inv = s;
    for (Index i = 0; i < k; ++i) inv(i) = 1.0 / s(i);
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

}  // namespace lrtc
