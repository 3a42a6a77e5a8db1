#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <string>

#include "lrtc/random.hpp"

namespace lrtc {

enum class HessianModel { Exact, GaussNewton, FiniteDifference };

/// dim(M_r) = prod r_i + sum_i (r_i n_i - r_i^2).
inline Index manifold_dim(const Dims& dims, const Dims& ranks) {
    Index dim = product(ranks);
    for (size_t i = 0; i < dims.size(); ++i) dim += ranks[i] * dims[i] - ranks[i] * ranks[i];
    return dim;
}

struct TcgConfig {
    double kappa = 0.1;
    double theta = 1.0;
    Index k_max = 0;  // 0: min(100, dim(M_r))
};

struct StoppingConfig {
    double grad_rel_tol = 1e-12;
    double grad_abs_tol = 0.0;
    Index max_outer_iters = 500;
    double delta_min_factor = 1e-14;  // Delta_min = factor * Delta_bar
};

struct SolverConfig {
    HessianModel hessian_model = HessianModel::Exact;
    double delta_bar = 0.0;  // 0: dim(M_r)
    double delta0 = 0.0;     // 0: delta_bar / 8
    double rho_prime = 0.1;  // in (0, 1/4)
    TcgConfig tcg;
    StoppingConfig stopping;
    double mu = 0.0;  // regularization weight, opt-in
    double fd_step = std::sqrt(std::numeric_limits<double>::epsilon());
    std::uint64_t rng_seed = 0;  // used only when no initial guess is supplied
};

struct IterRecord {
    Index k = 0;
    double f = 0.0;
    double grad_norm = 0.0;
    double grad_rel = 0.0;
    double delta = 0.0;
    double rho = 0.0;
    double step_norm = 0.0;
    bool accepted = false;
    Index inner_iters = 0;
    std::string inner_stop;
    double wall_ms = 0.0;  // cumulative
};

struct SolverTrace {
    std::vector<IterRecord> iters;
    std::string termination;  // grad_tol | max_iters | delta_min | line_search_failure
    bool converged = false;
};

struct SolveResult {
    TuckerTensor point;
    SolverTrace trace;
};

/// f_mu(X) = 1/2 sum_Omega (x - a)^2 + mu/2 ||X||^2; under orthonormal
/// factors ||X|| = ||C||.
inline double cost(const TuckerTensor& X, const SampledTensor& data, double mu = 0.0) {
    const Vector r = sampled_entries(X, data.indices()) - data.values();
    double f = 0.5 * r.squaredNorm();
    if (mu != 0.0) f += 0.5 * mu * X.core().data().squaredNorm();
    return f;
}

/// Gradient of the (optionally regularized) cost. The mu term contributes
/// mu * X, which is already tangent: (dotC, dotU) = (mu C, 0).
inline TangentVector gradient(const TuckerTensor& X, const SampledTensor& data,
                              double mu = 0.0) {
    TangentVector g = riemannian_gradient(X, data);
    if (mu != 0.0) {
        DenseTensor cd = g.core_dot() + mu * X.core();
        g = TangentVector(X, std::move(cd), g.factor_dots());
    }
    return g;
}

using HessianOp = std::function<TangentVector(const TangentVector&)>;

/// Hessian operator for the chosen model; the mu term adds mu * xi.
inline HessianOp make_hessian_op(HessianModel model, const TuckerTensor& X,
                                 const SampledTensor& data, double mu, double fd_step) {
    switch (model) {
        case HessianModel::Exact:
            return [&X, &data, mu](const TangentVector& xi) {
                TangentVector h = hessian_exact(X, data, xi);
                if (mu != 0.0) h += mu * xi;
                return h;
            };
        case HessianModel::GaussNewton:
            return [&X, &data, mu](const TangentVector& xi) {
                TangentVector h = hessian_gauss_newton(X, data, xi);
                if (mu != 0.0) h += mu * xi;
                return h;
            };
        case HessianModel::FiniteDifference:
        default:
            return [&X, &data, mu, fd_step](const TangentVector& xi) {
                TangentVector h = hessian_fd(X, data, xi, fd_step);
                if (mu != 0.0) h += mu * xi;
                return h;
            };
    }
}

enum class ModelKind { SD, N, GN };

/// m(xi) = f + <grad, xi> (+ 1/2 <H xi, xi> for the second-order kinds).
inline double model_eval(ModelKind kind, const TuckerTensor& X, const SampledTensor& data,
                         const TangentVector& xi, double mu = 0.0) {
    double m = cost(X, data, mu) + tangent_inner(gradient(X, data, mu), xi);
    if (kind == ModelKind::N)
        m += 0.5 * tangent_inner(make_hessian_op(HessianModel::Exact, X, data, mu, 0)(xi), xi);
    else if (kind == ModelKind::GN)
        m += 0.5 *
             tangent_inner(make_hessian_op(HessianModel::GaussNewton, X, data, mu, 0)(xi), xi);
    return m;
}

/// Model error e(xi, h) = |f(R_X(h xi)) - m_X(h xi)|.
inline double model_error(ModelKind kind, const TuckerTensor& X, const SampledTensor& data,
                          const TangentVector& xi, double h, double mu = 0.0) {
    if (h == 0.0) return 0.0;
    const TangentVector hxi = h * xi;
    const double fhat = cost(retract(X, hxi), data, mu);
    return std::abs(fhat - model_eval(kind, X, data, hxi, mu));
}

enum class TcgStop { ResidualTol, NegativeCurvature, Boundary, MaxIters };

inline const char* to_string(TcgStop s) {
    switch (s) {
        case TcgStop::ResidualTol: return "residual_tol";
        case TcgStop::NegativeCurvature: return "negative_curvature";
        case TcgStop::Boundary: return "boundary";
        case TcgStop::MaxIters: return "max_iters";
    }
    return "?";
}

struct TcgResult {
    TangentVector step;
    TcgStop stop;
    Index iters = 0;
};

/// Steihaug truncated CG for  min <grad, eta> + 1/2 <H eta, eta>
/// s.t. ||eta|| <= Delta.  Inner stopping ||r|| <= ||r0|| min(kappa,
/// ||r0||^theta).
inline TcgResult tcg_solve(const TangentVector& grad, const HessianOp& H, double Delta,
                           double kappa, double theta, Index k_max) {
    if (!(Delta > 0.0)) throw std::invalid_argument("tcg_solve: Delta must be positive");
    TangentVector eta = TangentVector::zero(grad.anchor());
    TangentVector r = grad;
    TangentVector dir = -grad;
    const double r0n = tangent_norm(r);
    if (r0n == 0.0) return {eta, TcgStop::ResidualTol, 0};
    const double tol = r0n * std::min(kappa, std::pow(r0n, theta));

    auto to_boundary = [&](const TangentVector& e, const TangentVector& dd) {
        const double ee = tangent_inner(e, e);
        const double ed = tangent_inner(e, dd);
        const double dd2 = tangent_inner(dd, dd);
        const double disc = ed * ed + dd2 * (Delta * Delta - ee);
        return (-ed + std::sqrt(std::max(0.0, disc))) / dd2;
    };

    double rr = tangent_inner(r, r);
    for (Index j = 0; j < k_max; ++j) {
        const TangentVector Hd = H(dir);
        const double dHd = tangent_inner(dir, Hd);
        if (!std::isfinite(dHd))
            throw std::runtime_error("tcg_solve: non-finite curvature (ill-posed operator)");
        if (dHd <= 0.0) {
            const double tau = to_boundary(eta, dir);
            return {eta + tau * dir, TcgStop::NegativeCurvature, j + 1};
        }
        const double alpha = rr / dHd;
        TangentVector eta_next = eta + alpha * dir;
        if (tangent_norm(eta_next) >= Delta) {
            const double tau = to_boundary(eta, dir);
            return {eta + tau * dir, TcgStop::Boundary, j + 1};
        }
        eta = std::move(eta_next);
        r += alpha * Hd;
        const double rr_next = tangent_inner(r, r);
        if (std::sqrt(rr_next) <= tol) return {eta, TcgStop::ResidualTol, j + 1};
        dir = -r + (rr_next / rr) * dir;
        rr = rr_next;
    }
    return {eta, TcgStop::MaxIters, k_max};
}

namespace detail {

inline double elapsed_ms(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

inline TuckerTensor initial_guess(const Dims& dims, const Dims& ranks,
                                  const SolverConfig& cfg,
                                  const std::optional<TuckerTensor>& X0) {
    if (X0) return *X0;
    Rng rng(cfg.rng_seed);
    return random_tucker(dims, ranks, rng);
}

}  // namespace detail

/// Riemannian trust-region method: tCG steps, the 1/4 - 3/4 radius update
/// and acceptance at rho > rho'.
inline SolveResult trust_region_solve(const SampledTensor& data, const Dims& ranks,
                                      const SolverConfig& cfg,
                                      std::optional<TuckerTensor> X0 = std::nullopt) {
    const auto t0 = std::chrono::steady_clock::now();
    TuckerTensor X = detail::initial_guess(data.dims(), ranks, cfg, X0);

    const Index mdim = manifold_dim(data.dims(), ranks);
    const double delta_bar = cfg.delta_bar > 0.0 ? cfg.delta_bar : static_cast<double>(mdim);
    double Delta = cfg.delta0 > 0.0 ? cfg.delta0 : delta_bar / 8.0;
    const double delta_min = cfg.stopping.delta_min_factor * delta_bar;
    const Index k_max = cfg.tcg.k_max > 0 ? cfg.tcg.k_max : std::min<Index>(100, mdim);
    if (!(cfg.rho_prime > 0.0 && cfg.rho_prime < 0.25))
        throw std::invalid_argument("trust_region_solve: rho_prime must be in (0, 1/4)");

    SolverTrace trace;
    double f = cost(X, data, cfg.mu);
    double g0norm = -1.0;

    for (Index k = 0; k < cfg.stopping.max_outer_iters; ++k) {
        const TangentVector g = gradient(X, data, cfg.mu);
        const double gnorm = tangent_norm(g);
        if (g0norm < 0.0) g0norm = gnorm;
        const double gtol = std::max(cfg.stopping.grad_abs_tol,
                                     cfg.stopping.grad_rel_tol * g0norm);

        IterRecord rec;
        rec.k = k;
        rec.f = f;
        rec.grad_norm = gnorm;
        rec.grad_rel = g0norm > 0.0 ? gnorm / g0norm : 0.0;
        rec.delta = Delta;

        if (gnorm <= gtol) {
            rec.wall_ms = detail::elapsed_ms(t0);
            trace.iters.push_back(rec);
            trace.termination = "grad_tol";
            trace.converged = true;
            return {std::move(X), std::move(trace)};
        }

        const HessianOp H = make_hessian_op(cfg.hessian_model, X, data, cfg.mu, cfg.fd_step);
        const TcgResult sub = tcg_solve(g, H, Delta, cfg.tcg.kappa, cfg.tcg.theta, k_max);
        rec.inner_iters = sub.iters;
        rec.inner_stop = to_string(sub.stop);
        const TangentVector& eta = sub.step;
        rec.step_norm = tangent_norm(eta);

        const double pred = -(tangent_inner(g, eta) + 0.5 * tangent_inner(H(eta), eta));
        if (!(pred > 1e-15 * std::abs(f))) {
            // Degenerate model decrease; treat as rejection and shrink.
            rec.rho = 0.0;
            rec.accepted = false;
            Delta *= 0.25;
            rec.wall_ms = detail::elapsed_ms(t0);
            trace.iters.push_back(rec);
            if (Delta < delta_min) {
                trace.termination = "delta_min";
                return {std::move(X), std::move(trace)};
            }
            continue;
        }

        const TuckerTensor X_try = retract(X, eta);
        const double f_try = cost(X_try, data, cfg.mu);
        const double rho = (f - f_try) / pred;
        rec.rho = rho;

        if (rho < 0.25) {
            Delta *= 0.25;
        } else if (rho > 0.75 && rec.step_norm >= Delta * (1.0 - 1e-10)) {
            Delta = std::min(2.0 * Delta, delta_bar);
        }
        if (rho > cfg.rho_prime) {
            X = X_try;
            f = f_try;
            rec.accepted = true;
        }
        rec.wall_ms = detail::elapsed_ms(t0);
        trace.iters.push_back(rec);
        if (Delta < delta_min) {
            trace.termination = "delta_min";
            return {std::move(X), std::move(trace)};
        }
    }
    trace.termination = "max_iters";
    return {std::move(X), std::move(trace)};
}

namespace detail {

/// Shared first-order loop: steepest descent or Polak-Ribiere+ nonlinear CG
/// with transported directions, exact quadratic initial step and Armijo
/// backtracking.
inline SolveResult first_order_solve(const SampledTensor& data, const Dims& ranks,
                                     const SolverConfig& cfg, bool use_cg,
                                     std::optional<TuckerTensor> X0) {
    const auto t0 = std::chrono::steady_clock::now();
    TuckerTensor X = initial_guess(data.dims(), ranks, cfg, X0);

    SolverTrace trace;
    double f = cost(X, data, cfg.mu);
    double g0norm = -1.0;
    std::optional<TangentVector> prev_g, prev_dir;

    for (Index k = 0; k < cfg.stopping.max_outer_iters; ++k) {
        const TangentVector g = gradient(X, data, cfg.mu);
        const double gnorm = tangent_norm(g);
        if (g0norm < 0.0) g0norm = gnorm;
        const double gtol = std::max(cfg.stopping.grad_abs_tol,
                                     cfg.stopping.grad_rel_tol * g0norm);

        IterRecord rec;
        rec.k = k;
        rec.f = f;
        rec.grad_norm = gnorm;
        rec.grad_rel = g0norm > 0.0 ? gnorm / g0norm : 0.0;
        rec.accepted = true;

        if (gnorm <= gtol) {
            rec.wall_ms = elapsed_ms(t0);
            trace.iters.push_back(rec);
            trace.termination = "grad_tol";
            trace.converged = true;
            return {std::move(X), std::move(trace)};
        }

        TangentVector dir = -g;
        if (use_cg && prev_g) {
            const TangentVector tg = vector_transport(*prev_g, X);
            const TangentVector td = vector_transport(*prev_dir, X);
            const double denom = tangent_inner(*prev_g, *prev_g);
            const double beta =
                std::max(0.0, tangent_inner(g, g - tg) / denom);  // PR+
            dir = -g + beta * td;
            if (tangent_inner(dir, g) >= 0.0) dir = -g;  // restart on non-descent
        }

        // Exact minimizer of the quadratic t -> 1/2 || P_Omega(X + t dir - A) ||^2.
        const Vector pdir = tangent_sampled_entries(dir, data.indices());
        const Vector pres = sampled_entries(X, data.indices()) - data.values();
        const double dd = pdir.squaredNorm();
        if (!(dd > 0.0)) {
            trace.termination = "line_search_failure";
            rec.wall_ms = elapsed_ms(t0);
            trace.iters.push_back(rec);
            return {std::move(X), std::move(trace)};
        }
        double t = -pdir.dot(pres) / dd;
        if (!(t > 0.0)) t = 1.0;

        const double slope = tangent_inner(g, dir);
        TuckerTensor X_next = X;
        double f_next = f;
        bool ok = false;
        Index backtracks = 0;
        for (; backtracks < 60; ++backtracks) {
            TuckerTensor cand = retract(X, t * dir);
            const double fc = cost(cand, data, cfg.mu);
            if (fc <= f + 1e-4 * t * slope) {
                X_next = std::move(cand);
                f_next = fc;
                ok = true;
                break;
            }
            t *= 0.5;
        }
        rec.inner_iters = backtracks;
        rec.step_norm = t * tangent_norm(dir);
        if (!ok) {
            rec.accepted = false;
            rec.wall_ms = elapsed_ms(t0);
            trace.iters.push_back(rec);
            trace.termination = "line_search_failure";
            return {std::move(X), std::move(trace)};
        }

        if (use_cg) {
            // Kept at the old anchor; transported at the top of the next pass.
            prev_g = g;
            prev_dir = dir;
        }
        X = std::move(X_next);
        f = f_next;
        rec.wall_ms = elapsed_ms(t0);
        trace.iters.push_back(rec);
    }
    trace.termination = "max_iters";
    return {std::move(X), std::move(trace)};
}

}  // namespace detail

inline SolveResult steepest_descent_solve(const SampledTensor& data, const Dims& ranks,
                                          const SolverConfig& cfg,
                                          std::optional<TuckerTensor> X0 = std::nullopt) {
    return detail::first_order_solve(data, ranks, cfg, false, std::move(X0));
}

inline SolveResult nonlinear_cg_solve(const SampledTensor& data, const Dims& ranks,
                                      const SolverConfig& cfg,
                                      std::optional<TuckerTensor> X0 = std::nullopt) {
    return detail::first_order_solve(data, ranks, cfg, true, std::move(X0));
}

}  // namespace lrtc
