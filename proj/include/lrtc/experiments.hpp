#pragma once

#include <algorithm>
#include <cmath>

#include "lrtc/io.hpp"
#include "lrtc/problem.hpp"

namespace lrtc {

enum class PointType { Stationary, Generic };

/// Manufacture data whose residual at X is (numerically) normal to the
/// tangent space: starting from P_Omega X - P_Omega A, alternating
/// projections push the residual into supp(Omega) intersect ker(P_X), then
/// the data values are set to P_Omega X minus that residual. When the
/// intersection is trivial the residual collapses to zero and X is an exact
/// interpolant.
inline SampledTensor make_stationary_data(const TuckerTensor& X, const SampledTensor& data,
                                          Index max_sweeps = 2000, double rel_tol = 1e-13) {
    const Vector px = sampled_entries(X, data.indices());
    Vector e = px - data.values();
    const double scale = std::max(e.norm(), 1e-300);
    SampledTensor E = data.with_values(e);
    for (Index sweep = 0; sweep < max_sweeps; ++sweep) {
        const TangentVector t = project_to_tangent(X, E);
        if (tangent_norm(t) <= rel_tol * scale) break;
        e -= tangent_sampled_entries(t, data.indices());
        E = data.with_values(e);
    }
    return data.with_values(px - e);
}

struct ModelOrderConfig {
    Dims dims{10, 10, 10};
    Dims rank{3, 3, 3};
    std::vector<Index> omega_sizes{10, 100, 1000};
    Index trials = 1000;
    Index j_max = 10;  // errors at h = 2^0 .. 2^-j_max
    TruthKind kind = TruthKind::FullRank;
    std::uint64_t seed = 0;
};

struct ModelOrderCell {
    Index omega_size = 0;
    PointType point = PointType::Generic;
    ModelKind model = ModelKind::SD;
    double f_at_x = 0.0;
    /// Geometric mean over trials of e(xi, 2^-(j+1)) / e(xi, 2^-j), j = 0..j_max-1.
    std::vector<double> ratios;
    /// True when some trial's error fell below machine precision at that j
    /// (those trials are excluded from the mean).
    std::vector<bool> flagged;
};

inline std::vector<ModelOrderCell> run_model_order(const ModelOrderConfig& cfg) {
    if (cfg.trials < 1 || cfg.j_max < 2)
        throw std::invalid_argument("run_model_order: need trials >= 1 and j_max >= 2");
    constexpr double kZero = 1e-16;
    Rng rng(cfg.seed);
    std::vector<ModelOrderCell> out;

    for (Index omega_size : cfg.omega_sizes) {
        for (PointType pt : {PointType::Stationary, PointType::Generic}) {
            TuckerTensor X = random_tucker(cfg.dims, cfg.rank, rng);
            const DenseTensor truth = cfg.kind == TruthKind::FullRank
                                          ? random_uniform_tensor(cfg.dims, rng)
                                          : to_full(random_tucker(cfg.dims, cfg.rank, rng));
            // For a low-rank truth the natural stationary point is the truth
            // itself (zero residual); otherwise manufacture one at X.
            if (pt == PointType::Stationary && cfg.kind != TruthKind::FullRank)
                X = hosvd(truth, cfg.rank);
            const auto omega = sample_omega(cfg.dims, omega_size, rng);
            SampledTensor data = sample_project(truth, omega);
            if (pt == PointType::Stationary && cfg.kind == TruthKind::FullRank)
                data = make_stationary_data(X, data);

            const double f = cost(X, data);
            const TangentVector g = riemannian_gradient(X, data);

            const std::vector<ModelKind> kinds{ModelKind::SD, ModelKind::N, ModelKind::GN};
            std::vector<ModelOrderCell> cells(kinds.size());
            for (size_t m = 0; m < kinds.size(); ++m) {
                cells[m] = {omega_size, pt, kinds[m], f,
                            std::vector<double>(cfg.j_max, 0.0),
                            std::vector<bool>(cfg.j_max, false)};
            }
            std::vector<std::vector<Index>> counts(kinds.size(),
                                                   std::vector<Index>(cfg.j_max, 0));

            for (Index trial = 0; trial < cfg.trials; ++trial) {
                TangentVector xi = random_tangent(X, rng);
                xi *= 1.0 / tangent_norm(xi);
                const double gx = tangent_inner(g, xi);
                const double qn = tangent_inner(hessian_exact(X, data, xi), xi);
                const double qgn = tangent_inner(hessian_gauss_newton(X, data, xi), xi);

                std::vector<std::vector<double>> e(kinds.size(),
                                                   std::vector<double>(cfg.j_max + 1));
                for (Index j = 0; j <= cfg.j_max; ++j) {
                    const double h = std::ldexp(1.0, -static_cast<int>(j));
                    const double fhat = cost(retract(X, h * xi), data);
                    e[0][j] = std::abs(fhat - (f + h * gx));
                    e[1][j] = std::abs(fhat - (f + h * gx + 0.5 * h * h * qn));
                    e[2][j] = std::abs(fhat - (f + h * gx + 0.5 * h * h * qgn));
                }
                for (size_t m = 0; m < kinds.size(); ++m) {
                    for (Index j = 0; j < cfg.j_max; ++j) {
                        if (e[m][j] < kZero || e[m][j + 1] < kZero) {
                            cells[m].flagged[j] = true;
                            continue;
                        }
                        cells[m].ratios[j] += std::log(e[m][j + 1] / e[m][j]);
                        ++counts[m][j];
                    }
                }
            }
            for (size_t m = 0; m < kinds.size(); ++m) {
                for (Index j = 0; j < cfg.j_max; ++j) {
                    cells[m].ratios[j] = counts[m][j] > 0
                                             ? std::exp(cells[m].ratios[j] / counts[m][j])
                                             : 0.0;
                }
                out.push_back(std::move(cells[m]));
            }
        }
    }
    return out;
}

struct ConvergenceRun {
    std::string name;
    SolveResult result;
    std::string error;  // nonempty if the solver failed
};

/// Run all five solvers on the same instance and initial guess.
inline std::vector<ConvergenceRun> run_convergence(const ProblemSpec& spec,
                                                   const SolverConfig& base) {
    const Problem prob = generate_problem(spec);
    // Mix the seed so the initial guess never replays the truth's draws even
    // when the problem and solver seeds coincide.
    Rng rng(base.rng_seed * 0x9e3779b97f4a7c15ULL + 1);
    const TuckerTensor X0 = random_tucker(spec.dims, spec.rank, rng);

    std::vector<ConvergenceRun> out;
    auto run = [&](const std::string& name, auto&& solve) {
        try {
            out.push_back({name, solve(), ""});
        } catch (const std::exception& e) {
            out.push_back({name, SolveResult{X0, {}}, e.what()});
        }
    };

    SolverConfig cfg = base;
    cfg.hessian_model = HessianModel::Exact;
    run("rtr-exact", [&] { return trust_region_solve(prob.data, spec.rank, cfg, X0); });
    cfg.hessian_model = HessianModel::GaussNewton;
    run("rtr-gn", [&] { return trust_region_solve(prob.data, spec.rank, cfg, X0); });
    cfg.hessian_model = HessianModel::FiniteDifference;
    run("rtr-fd", [&] { return trust_region_solve(prob.data, spec.rank, cfg, X0); });
    run("rcg", [&] { return nonlinear_cg_solve(prob.data, spec.rank, base, X0); });
    run("sd", [&] { return steepest_descent_solve(prob.data, spec.rank, base, X0); });
    return out;
}

struct IngestReport {
    bool fully_sampled = false;
    std::vector<Vector> spectra;  // per-mode singular values (full sampling only)
    Index train_count = 0;
    Index heldout_count = 0;
    double heldout_rel_error = 0.0;
    SolveResult solve{TuckerTensor(DenseTensor({1, 1}, Vector::Ones(1)),
                                   {Matrix::Identity(1, 1), Matrix::Identity(1, 1)}),
                      {}};
};

/// Singular-value report plus a completion run on a held-out split of the
/// known entries.
inline IngestReport ingest_and_report(const SampledTensor& S, const Dims& rank,
                                      double holdout_fraction, const SolverConfig& cfg) {
    if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
        throw std::invalid_argument("ingest_and_report: holdout fraction must be in (0,1)");
    IngestReport rep;
    rep.fully_sampled = S.count() == product(S.dims());
    if (rep.fully_sampled) rep.spectra = singular_spectrum(to_dense(S));

    Rng rng(cfg.rng_seed);
    std::vector<Index> perm(S.count());
    for (Index k = 0; k < S.count(); ++k) perm[k] = k;
    std::shuffle(perm.begin(), perm.end(), rng);
    const Index held = std::max<Index>(1, static_cast<Index>(holdout_fraction * S.count()));
    const Index train = S.count() - held;
    if (train < 1) throw std::invalid_argument("ingest_and_report: nothing left to train on");

    std::vector<MultiIndex> tr_idx, ho_idx;
    std::vector<double> tr_val, ho_val;
    for (Index k = 0; k < S.count(); ++k) {
        const bool holdout = k >= train;
        (holdout ? ho_idx : tr_idx).push_back(S.index(perm[k]));
        (holdout ? ho_val : tr_val).push_back(S.value(perm[k]));
    }
    auto to_vec = [](const std::vector<double>& v) {
        Vector out(static_cast<Index>(v.size()));
        for (size_t k = 0; k < v.size(); ++k) out(static_cast<Index>(k)) = v[k];
        return out;
    };
    const SampledTensor train_data(S.dims(), tr_idx, to_vec(tr_val));

    rep.train_count = train;
    rep.heldout_count = held;
    rep.solve = trust_region_solve(train_data, rank, cfg);
    const Vector pred = sampled_entries(rep.solve.point, ho_idx);
    const Vector truth = to_vec(ho_val);
    rep.heldout_rel_error = (pred - truth).norm() / std::max(truth.norm(), 1e-300);
    return rep;
}

}  // namespace lrtc
