#pragma once

#include <cmath>
#include <limits>
#include <type_traits>
#include <utility>

#include "lrtc/tangent.hpp"

namespace lrtc {
namespace detail {

/// Ambient vector in sparse-plus-low-rank form: an optional sampled part, an
/// optional dense part and an optional tangent-embedding part, each with a
/// sign. All projection/curvature contractions are evaluated against this
/// representation so that the sparse path never materializes dense tensors.
struct AmbientRep {
    const SampledTensor* sparse = nullptr;
    double sparse_sign = 1.0;
    const DenseTensor* dense = nullptr;
    double dense_sign = 1.0;
    const TangentVector* tangent = nullptr;
    double tangent_sign = 1.0;
};

/// T x_j B_j^T over all modes except `skip` (pass skip = -1 to contract all
/// modes) for the tangent part, using only small factor products.
inline DenseTensor tangent_multi_contract(const TangentVector& xi,
                                          const std::vector<const Matrix*>& B, Index skip) {
    const TuckerTensor& X = xi.anchor();
    const Index d = X.order();
    std::vector<Matrix> P(d), Q(d);
    for (Index j = 0; j < d; ++j) {
        if (j == skip) {
            P[j] = X.factor(j);
            Q[j] = xi.factor_dot(j);
        } else {
            P[j] = B[j]->transpose() * X.factor(j);
            Q[j] = B[j]->transpose() * xi.factor_dot(j);
        }
    }
    DenseTensor out = xi.core_dot();
    for (Index j = 0; j < d; ++j) out = mode_product(out, P[j], j);
    for (Index i = 0; i < d; ++i) {
        DenseTensor term = X.core();
        for (Index j = 0; j < d; ++j) term = mode_product(term, j == i ? Q[j] : P[j], j);
        out += term;
    }
    return out;
}

/// rep x_j B_j^T over all modes; result dims are the column counts of B.
inline DenseTensor contract_all(const AmbientRep& rep, const std::vector<const Matrix*>& B) {
    const Index d = static_cast<Index>(B.size());
    Dims mdims(d);
    for (Index j = 0; j < d; ++j) mdims[j] = B[j]->cols();
    DenseTensor out(mdims);
    if (rep.sparse) {
        const SampledTensor& S = *rep.sparse;
        std::vector<double> buf(out.size()), next(out.size());
        for (Index k = 0; k < S.count(); ++k) {
            const MultiIndex& idx = S.index(k);
            Index len = 1;
            buf[0] = rep.sparse_sign * S.value(k);
            for (Index j = 0; j < d; ++j) {
                const auto row = B[j]->row(idx[j]);
                const Index mj = B[j]->cols();
                for (Index a = 0; a < mj; ++a)
                    for (Index f = 0; f < len; ++f) next[f + len * a] = buf[f] * row(a);
                std::swap(buf, next);
                len *= mj;
            }
            for (Index f = 0; f < len; ++f) out[f] += buf[f];
        }
    }
    if (rep.dense) {
        DenseTensor t = *rep.dense;
        for (Index j = 0; j < d; ++j) t = mode_product(t, B[j]->transpose(), j);
        t *= rep.dense_sign;
        out += t;
    }
    if (rep.tangent) {
        DenseTensor t = tangent_multi_contract(*rep.tangent, B, -1);
        t *= rep.tangent_sign;
        out += t;
    }
    return out;
}

/// [rep x_{j != i} B_j^T]_(i); rows index mode i of the ambient space.
inline Matrix contract_skip(const AmbientRep& rep, const std::vector<const Matrix*>& B, Index i,
                            Index n_i) {
    const Index d = static_cast<Index>(B.size());
    Index cols = 1;
    for (Index j = 0; j < d; ++j)
        if (j != i) cols *= B[j]->cols();
    Matrix out = Matrix::Zero(n_i, cols);
    if (rep.sparse) {
        const SampledTensor& S = *rep.sparse;
        std::vector<double> buf(cols), next(cols);
        for (Index k = 0; k < S.count(); ++k) {
            const MultiIndex& idx = S.index(k);
            Index len = 1;
            buf[0] = rep.sparse_sign * S.value(k);
            for (Index j = 0; j < d; ++j) {
                if (j == i) continue;
                const auto row = B[j]->row(idx[j]);
                const Index mj = B[j]->cols();
                for (Index a = 0; a < mj; ++a)
                    for (Index f = 0; f < len; ++f) next[f + len * a] = buf[f] * row(a);
                std::swap(buf, next);
                len *= mj;
            }
            for (Index f = 0; f < len; ++f) out(idx[i], f) += buf[f];
        }
    }
    if (rep.dense) {
        DenseTensor t = *rep.dense;
        for (Index j = 0; j < d; ++j)
            if (j != i) t = mode_product(t, B[j]->transpose(), j);
        out += rep.dense_sign * matricize(t, i);
    }
    if (rep.tangent) {
        DenseTensor t = tangent_multi_contract(*rep.tangent, B, i);
        out += rep.tangent_sign * matricize(t, i);
    }
    return out;
}

inline std::vector<const Matrix*> factor_ptrs(const TuckerTensor& X) {
    std::vector<const Matrix*> B(X.order());
    for (Index i = 0; i < X.order(); ++i) B[i] = &X.factor(i);
    return B;
}

/// Orthogonal projection of an ambient vector in rep form onto T_X M_r.
inline TangentVector project_rep(const TuckerTensor& X, const AmbientRep& rep) {
    const Index d = X.order();
    const auto B = factor_ptrs(X);
    DenseTensor core_dot = contract_all(rep, B);
    std::vector<Matrix> factor_dots(d);
    for (Index i = 0; i < d; ++i) {
        const Matrix& Ui = X.factor(i);
        const Matrix Fi = contract_skip(rep, B, i, Ui.rows());
        const Matrix Cp = pseudoinverse(matricize(X.core(), i));
        Matrix Ud = Fi * Cp;
        Ud -= Ui * (Ui.transpose() * Ud);
        factor_dots[i] = std::move(Ud);
    }
    return TangentVector(X, std::move(core_dot), std::move(factor_dots));
}

}  // namespace detail

inline TangentVector project_to_tangent(const TuckerTensor& X, const DenseTensor& Z) {
    if (Z.dims() != X.dims()) throw std::invalid_argument("project_to_tangent: dims mismatch");
    detail::AmbientRep rep;
    rep.dense = &Z;
    return detail::project_rep(X, rep);
}

inline TangentVector project_to_tangent(const TuckerTensor& X, const SampledTensor& Z) {
    if (Z.dims() != X.dims()) throw std::invalid_argument("project_to_tangent: dims mismatch");
    detail::AmbientRep rep;
    rep.sparse = &Z;
    return detail::project_rep(X, rep);
}

/// Sparse residual P_Omega X - P_Omega A at X.
inline SampledTensor residual(const TuckerTensor& X, const SampledTensor& data) {
    return data.with_values(sampled_entries(X, data.indices()) - data.values());
}

/// grad f(X) = P_X(P_Omega X - P_Omega A), evaluated on the sparse residual.
inline TangentVector riemannian_gradient(const TuckerTensor& X, const SampledTensor& data) {
    const SampledTensor res = residual(X, data);
    detail::AmbientRep rep;
    rep.sparse = &res;
    return detail::project_rep(X, rep);
}

/// HOSVD retraction R_X(xi) = P_r^HO(X + xi), computed structurally:
/// X + xi is represented exactly over augmented factors [U_i, Q_i] with a
/// small block core, then truncated by an HOSVD of that core. Throws
/// RankDropError if truncation would lose rank.
inline TuckerTensor retract(const TuckerTensor& X, const TangentVector& xi) {
    const Index d = X.order();
    const Dims& r = X.ranks();
    const Dims n = X.dims();

    std::vector<Matrix> V(d), R(d);
    Dims s(d);
    for (Index i = 0; i < d; ++i) {
        const Index qmax = std::min(r[i], n[i] - r[i]);
        Index q = 0;
        Matrix Q;
        if (qmax > 0) {
            // Left singular directions of dotU_i with a relative cutoff: for
            // (near-)zero singular values the vectors are arbitrary and need
            // not respect the gauge, so drop them and re-orthogonalize the
            // rest against U_i before use.
            Eigen::JacobiSVD<Matrix> svd(xi.factor_dot(i), Eigen::ComputeThinU);
            const Vector& sv = svd.singularValues();
            const double smax = sv.size() > 0 ? sv(0) : 0.0;
            while (q < std::min(qmax, static_cast<Index>(sv.size())) &&
                   sv(q) > smax * 1e-14)
                ++q;
            if (q > 0) {
                Matrix raw = svd.matrixU().leftCols(q);
                raw -= X.factor(i) * (X.factor(i).transpose() * raw);
                Eigen::HouseholderQR<Matrix> qr(raw);
                Q = qr.householderQ() * Matrix::Identity(n[i], q);
            }
        }
        V[i] = Matrix(n[i], r[i] + q);
        V[i].leftCols(r[i]) = X.factor(i);
        if (q > 0) {
            V[i].rightCols(q) = Q;
            R[i] = Q.transpose() * xi.factor_dot(i);
        } else {
            R[i] = Matrix::Zero(0, r[i]);
        }
        s[i] = r[i] + q;
    }

    // Block core of X + xi over the augmented factors.
    DenseTensor S(s);
    const DenseTensor first = X.core() + xi.core_dot();  // C + dotC block
    {
        MultiIndex idx(d, 0);
        for (Index f = 0; f < first.size(); ++f) {
            S.at(idx) = first[f];
            for (Index m = 0; m < d; ++m) {
                if (++idx[m] < r[m]) break;
                idx[m] = 0;
            }
        }
    }
    for (Index i = 0; i < d; ++i) {
        if (R[i].rows() == 0) continue;
        const DenseTensor block = mode_product(X.core(), R[i], i);  // C x_i R_i
        Dims bd = r;
        bd[i] = R[i].rows();
        MultiIndex idx(d, 0);
        MultiIndex tgt(d, 0);
        for (Index f = 0; f < block.size(); ++f) {
            tgt = idx;
            tgt[i] += r[i];
            S.at(tgt) = block[f];
            for (Index m = 0; m < d; ++m) {
                if (++idx[m] < bd[m]) break;
                idx[m] = 0;
            }
        }
    }

    // Truncated HOSVD of the small core; rank drop is an error.
    std::vector<Matrix> W(d);
    for (Index i = 0; i < d; ++i) {
        Vector sv;
        W[i] = detail::dominant_left_singular(matricize(S, i), r[i], &sv);
        if (!(sv(r[i] - 1) > sv(0) * 1e-14))
            throw RankDropError("retract: truncation drops multilinear rank in mode " +
                                std::to_string(i));
    }
    // Deterministic signs on the full-space singular vectors V_i W_i.
    std::vector<Matrix> F(d);
    for (Index i = 0; i < d; ++i) {
        F[i] = V[i] * W[i];
        for (Index c = 0; c < r[i]; ++c) {
            Index imax = 0;
            F[i].col(c).cwiseAbs().maxCoeff(&imax);
            if (F[i](imax, c) < 0.0) {
                F[i].col(c) = -F[i].col(c);
                W[i].col(c) = -W[i].col(c);
            }
        }
    }
    DenseTensor core = S;
    for (Index i = 0; i < d; ++i) core = mode_product(core, W[i].transpose(), i);
    return TuckerTensor(std::move(core), std::move(F));
}

/// Transport by orthogonal projection onto T_Y M_r.
inline TangentVector vector_transport(const TangentVector& xi, const TuckerTensor& Y) {
    detail::AmbientRep rep;
    rep.tangent = &xi;
    return detail::project_rep(Y, rep);
}

/// Derivative of the tangent projector, D_xi P_X applied to a dense ambient
/// E. Dense evaluation of the six summand groups; testing and cross-checks
/// only -- the solver path uses curvature_term below.
inline DenseTensor weingarten_dproj(const TuckerTensor& X, const TangentVector& xi,
                                    const DenseTensor& E) {
    const Index d = X.order();
    DenseTensor out(E.dims());

    std::vector<Matrix> G(d), Cp(d), Cmat(d);
    for (Index i = 0; i < d; ++i) {
        DenseTensor t = E;
        for (Index j = 0; j < d; ++j)
            if (j != i) t = mode_product(t, X.factor(j).transpose(), j);
        G[i] = matricize(t, i);
        Cmat[i] = matricize(X.core(), i);
        Cp[i] = pseudoinverse(Cmat[i]);
    }

    auto perp = [&](Index i, const Matrix& M) {
        return M - X.factor(i) * (X.factor(i).transpose() * M);
    };
    auto embed = [&](Index i, const DenseTensor& core_like, const Matrix& Mi) {
        // core_like x_i Mi x_{k != i} U_k
        DenseTensor t = core_like;
        for (Index j = 0; j < d; ++j) t = mode_product(t, j == i ? Mi : X.factor(j), j);
        return t;
    };

    for (Index i = 0; i < d; ++i) {
        const Matrix& Ui = X.factor(i);
        const Matrix& Udi = xi.factor_dot(i);
        const Matrix Pdot = Udi * Ui.transpose() + Ui * Udi.transpose();

        // E x_i Pdot_i x_{j != i} P_{U_j}
        DenseTensor t1 = mode_product(E, Pdot, i);
        for (Index j = 0; j < d; ++j)
            if (j != i) t1 = mode_product(t1, X.factor(j) * X.factor(j).transpose(), j);
        out += t1;

        out += embed(i, xi.core_dot(), perp(i, G[i] * Cp[i]));
        out -= embed(i, X.core(), Pdot * G[i] * Cp[i]);

        for (Index l = 0; l < d; ++l) {
            if (l == i) continue;
            DenseTensor t = E;
            for (Index j = 0; j < d; ++j) {
                if (j == i) continue;
                t = mode_product(t, j == l ? xi.factor_dot(l).transpose()
                                           : X.factor(j).transpose(), j);
            }
            out += embed(i, X.core(), perp(i, matricize(t, i) * Cp[i]));
        }

        const Matrix Cd = matricize(xi.core_dot(), i);
        const Matrix K = (Cd.transpose() - Cp[i] * (Cmat[i] * Cd.transpose())) *
                             (Cp[i].transpose() * Cp[i]) -
                         Cp[i] * Cd * Cp[i];
        out += embed(i, X.core(), perp(i, G[i] * K));

        for (Index l = 0; l < d; ++l) {
            if (l == i) continue;
            const Matrix Mi = perp(i, G[i] * Cp[i]);
            DenseTensor t = X.core();
            for (Index j = 0; j < d; ++j) {
                const Matrix& Fj = (j == i) ? Mi : (j == l ? xi.factor_dot(l) : X.factor(j));
                t = mode_product(t, Fj, j);
            }
            out += t;
        }
    }
    return out;
}

namespace detail {

/// P_X D_xi P_X applied to an ambient rep that is already normal to T_X
/// (the caller supplies E - P_X E). Tangent components per the closed-form
/// curvature expression; the I - C^+C product is multiplied out.
inline TangentVector curvature_rep(const TuckerTensor& X, const TangentVector& xi,
                                   const AmbientRep& rep) {
    const Index d = X.order();
    const auto B = factor_ptrs(X);
    const Dims& r = X.ranks();

    std::vector<Matrix> A(d), Cp(d), Cmat(d);
    for (Index i = 0; i < d; ++i) {
        A[i] = contract_skip(rep, B, i, X.factor(i).rows());
        Cmat[i] = matricize(X.core(), i);
        Cp[i] = pseudoinverse(Cmat[i]);
    }

    DenseTensor core_t(r);
    for (Index j = 0; j < d; ++j) {
        const Matrix M = xi.factor_dot(j).transpose() * A[j];  // r_j x prod_{k!=j} r_k
        core_t += tensorize(M, j, r);
        core_t -= mode_product(X.core(), M * Cp[j], j);
    }

    std::vector<Matrix> factor_t(d);
    for (Index i = 0; i < d; ++i) {
        const Matrix Cd = matricize(xi.core_dot(), i);
        // A_i (I - C^+C) dotC^T C^{+T}, multiplied out
        Matrix M = (A[i] * Cd.transpose() - (A[i] * Cp[i]) * (Cmat[i] * Cd.transpose())) *
                   Cp[i].transpose();
        for (Index k = 0; k < d; ++k) {
            if (k == i) continue;
            std::vector<const Matrix*> Bk = B;
            Bk[k] = &xi.factor_dots()[k];
            M += contract_skip(rep, Bk, i, X.factor(i).rows());
        }
        Matrix Ud = M * Cp[i];
        Ud -= X.factor(i) * (X.factor(i).transpose() * Ud);
        factor_t[i] = std::move(Ud);
    }
    return TangentVector(X, std::move(core_t), std::move(factor_t));
}

template <typename Ambient>
TangentVector curvature_term_impl(const TuckerTensor& X, const TangentVector& xi,
                                  const Ambient& E) {
    const TangentVector pe = project_to_tangent(X, E);
    AmbientRep rep;
    if constexpr (std::is_same_v<Ambient, SampledTensor>)
        rep.sparse = &E;
    else
        rep.dense = &E;
    rep.tangent = &pe;
    rep.tangent_sign = -1.0;  // rep now carries P_X^perp E
    return curvature_rep(X, xi, rep);
}

}  // namespace detail

/// Curvature part of the Riemannian Hessian: P_X D_xi P_X (P_X^perp E).
inline TangentVector curvature_term(const TuckerTensor& X, const TangentVector& xi,
                                    const SampledTensor& E) {
    return detail::curvature_term_impl(X, xi, E);
}
inline TangentVector curvature_term(const TuckerTensor& X, const TangentVector& xi,
                                    const DenseTensor& E) {
    return detail::curvature_term_impl(X, xi, E);
}

/// Gauss-Newton Hessian: P_X P_Omega(xi), the projected Euclidean Hessian
/// with the curvature term dropped.
inline TangentVector hessian_gauss_newton(const TuckerTensor& X, const SampledTensor& data,
                                          const TangentVector& xi) {
    const SampledTensor pxi = data.with_values(tangent_sampled_entries(xi, data.indices()));
    detail::AmbientRep rep;
    rep.sparse = &pxi;
    return detail::project_rep(X, rep);
}

/// Exact Riemannian Hessian: P_X P_Omega(xi) plus the curvature term fed with
/// the sparse residual. Same complexity class as a gradient evaluation.
inline TangentVector hessian_exact(const TuckerTensor& X, const SampledTensor& data,
                                   const TangentVector& xi) {
    TangentVector out = hessian_gauss_newton(X, data, xi);

    const SampledTensor res = residual(X, data);
    detail::AmbientRep rrep;
    rrep.sparse = &res;
    const TangentVector pres = detail::project_rep(X, rrep);
    detail::AmbientRep perp = rrep;
    perp.tangent = &pres;
    perp.tangent_sign = -1.0;
    out += detail::curvature_rep(X, xi, perp);
    return out;
}

/// One-sided finite-difference Hessian along the retraction curve,
/// (T grad f(R_X(h xi)) - grad f(X)) / h with xi pre-normalized. Generally
/// not linear (or symmetric) in xi.
inline TangentVector hessian_fd(const TuckerTensor& X, const SampledTensor& data,
                                const TangentVector& xi,
                                double h = std::sqrt(std::numeric_limits<double>::epsilon())) {
    if (!(h > 0.0)) throw std::invalid_argument("hessian_fd: h must be positive");
    const double nrm = tangent_norm(xi);
    if (nrm == 0.0) return TangentVector::zero(X);
    const TuckerTensor Y = retract(X, (h / nrm) * xi);
    const TangentVector gY = riemannian_gradient(Y, data);
    const TangentVector back = vector_transport(gY, X);
    const TangentVector gX = riemannian_gradient(X, data);
    return (nrm / h) * (back - gX);
}

}  // namespace lrtc
