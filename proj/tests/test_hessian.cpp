#include <catch2/catch_amalgamated.hpp>

#include <chrono>

#include "lrtc/experiments.hpp"

using namespace lrtc;

namespace {

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0, my = 0;
    for (size_t k = 0; k < x.size(); ++k) mx += x[k], my += y[k];
    mx /= x.size(), my /= y.size();
    double num = 0, den = 0;
    for (size_t k = 0; k < x.size(); ++k) {
        num += (x[k] - mx) * (y[k] - my);
        den += (x[k] - mx) * (x[k] - mx);
    }
    return num / den;
}

}  // namespace

TEST_CASE("weingarten_dproj basics", "[hessian]") {
    Rng rng(1);
    TuckerTensor X = random_tucker({4, 4, 4}, {2, 2, 2}, rng);
    DenseTensor E = random_gaussian_tensor(X.dims(), rng);

    SECTION("zero direction gives zero") {
        REQUIRE(norm(weingarten_dproj(X, TangentVector::zero(X), E)) == 0.0);
    }
    SECTION("finite differences of the projector along the retraction") {
        TangentVector xi = random_tangent(X, rng);
        DenseTensor W = weingarten_dproj(X, xi, E);
        std::vector<double> lh, le;
        for (double h : {1e-3, 1e-4, 1e-5, 1e-6}) {
            TuckerTensor Y = retract(X, h * xi);
            DenseTensor fd = tangent_to_ambient(project_to_tangent(Y, E)) -
                             tangent_to_ambient(project_to_tangent(X, E));
            fd *= 1.0 / h;
            lh.push_back(std::log(h));
            le.push_back(std::log(norm(fd - W)));
        }
        REQUIRE(fit_slope(lh, le) >= 0.9);
    }
}

TEST_CASE("weingarten_dproj matches the matrix projector derivative for d=2", "[hessian]") {
    Rng rng(2);
    TuckerTensor X = random_tucker({5, 4}, {2, 2}, rng);
    TangentVector xi = random_tangent(X, rng);
    DenseTensor E = random_gaussian_tensor(X.dims(), rng);

    const Matrix Xd = matricize(tangent_to_ambient(xi), 0);
    // X = U1 C_(1) U2^T, so the pseudoinverse is U2 C_(1)^{-1} U1^T.
    const Matrix Xp = X.factor(1) * matricize(X.core(), 0).inverse() *
                      X.factor(0).transpose();
    const Matrix P1 = X.factor(0) * X.factor(0).transpose();
    const Matrix P2 = X.factor(1) * X.factor(1).transpose();
    const Matrix I1 = Matrix::Identity(5, 5), I2 = Matrix::Identity(4, 4);

    // Derivatives of the column/row space projectors along xi.
    const Matrix A1 = (I1 - P1) * Xd * Xp;
    const Matrix Pd1 = A1 + A1.transpose();
    const Matrix A2 = (I2 - P2) * Xd.transpose() * Xp.transpose();
    const Matrix Pd2 = A2 + A2.transpose();

    const Matrix Z = matricize(E, 0);
    const Matrix expect = Pd1 * Z * (I2 - P2) + (I1 - P1) * Z * Pd2;
    const Matrix got = matricize(weingarten_dproj(X, xi, E), 0);
    REQUIRE((expect - got).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("curvature_term", "[hessian]") {
    Rng rng(3);
    TuckerTensor X = random_tucker({4, 4, 4}, {2, 2, 2}, rng);
    TangentVector xi = random_tangent(X, rng);

    SECTION("tangent input has no normal part") {
        TangentVector zeta = random_tangent(X, rng);
        DenseTensor E = tangent_to_ambient(zeta);
        REQUIRE(tangent_norm(curvature_term(X, xi, E)) <= 1e-12 * norm(E));
    }
    SECTION("zero input") {
        REQUIRE(tangent_norm(curvature_term(X, xi, DenseTensor(X.dims()))) == 0.0);
    }
    SECTION("dense composition oracle") {
        DenseTensor E = random_gaussian_tensor(X.dims(), rng);
        DenseTensor Eperp = E - tangent_to_ambient(project_to_tangent(X, E));
        DenseTensor expect =
            tangent_to_ambient(project_to_tangent(X, weingarten_dproj(X, xi, Eperp)));
        REQUIRE(norm(tangent_to_ambient(curvature_term(X, xi, E)) - expect) <= 1e-10);
    }
    SECTION("sparse input agrees with its dense embedding") {
        auto omega = sample_omega(X.dims(), 25, rng);
        SampledTensor S = sample_project(random_gaussian_tensor(X.dims(), rng), omega);
        TangentVector a = curvature_term(X, xi, S);
        TangentVector b = curvature_term(X, xi, to_dense(S));
        REQUIRE(norm(tangent_to_ambient(a) - tangent_to_ambient(b)) <= 1e-11);
    }
}

TEST_CASE("hessian_exact", "[hessian]") {
    Rng rng(4);
    TuckerTensor X = random_tucker({4, 4, 4}, {2, 2, 2}, rng);
    auto omega = sample_omega(X.dims(), 30, rng);
    SampledTensor data = sample_project(random_uniform_tensor(X.dims(), rng), omega);

    SECTION("symmetric bilinear form") {
        for (int trial = 0; trial < 10; ++trial) {
            TangentVector a = random_tangent(X, rng);
            TangentVector b = random_tangent(X, rng);
            double s1 = tangent_inner(hessian_exact(X, data, a), b);
            double s2 = tangent_inner(a, hessian_exact(X, data, b));
            REQUIRE(std::abs(s1 - s2) <= 1e-10 * std::max(1.0, std::abs(s1)));
        }
    }
    SECTION("equals Gauss-Newton at zero residual") {
        SampledTensor exact = sample_project(to_full(X), omega);
        for (int trial = 0; trial < 5; ++trial) {
            TangentVector xi = random_tangent(X, rng);
            TangentVector d = hessian_exact(X, exact, xi) - hessian_gauss_newton(X, exact, xi);
            REQUIRE(tangent_norm(d) <= 1e-12);
        }
    }
    SECTION("directional derivative of the gradient, first order in h") {
        TangentVector xi = random_tangent(X, rng);
        xi *= 1.0 / tangent_norm(xi);
        TangentVector hx = hessian_exact(X, data, xi);
        TangentVector g = riemannian_gradient(X, data);
        std::vector<double> lh, le;
        for (double h : {1e-3, 1e-4, 1e-5, 1e-6}) {
            TangentVector fd =
                (1.0 / h) *
                (vector_transport(riemannian_gradient(retract(X, h * xi), data), X) - g);
            lh.push_back(std::log(h));
            le.push_back(std::log(tangent_norm(fd - hx)));
        }
        REQUIRE(fit_slope(lh, le) >= 0.9);
    }
}

TEST_CASE("hessian matches the d=2 closed form", "[hessian]") {
    Rng rng(5);
    // Build the point by HOSVD of a matrix so the core is diagonal (the SVD
    // identification U = U_1, V = U_2, Sigma = C).
    DenseTensor A = random_gaussian_tensor({8, 7}, rng);
    TuckerTensor X = hosvd(A, {3, 3});
    auto omega = sample_omega(X.dims(), 30, rng);
    SampledTensor data = sample_project(random_uniform_tensor(X.dims(), rng), omega);
    TangentVector xi = random_tangent(X, rng);

    const Matrix U = X.factor(0), V = X.factor(1);
    const Matrix S = matricize(X.core(), 0);
    const Matrix Sinv = S.inverse();
    const Matrix PU = U * U.transpose(), PV = V * V.transpose();
    const Matrix IU = Matrix::Identity(8, 8), IV = Matrix::Identity(7, 7);
    // Variations in the SVD-style scaling.
    const Matrix Up = xi.factor_dot(0) * S;
    const Matrix Vp = xi.factor_dot(1) * matricize(X.core(), 1);

    const Matrix Z = matricize(to_dense(sample_project(tangent_to_ambient(xi),
                                                       data.indices())), 0);
    const Matrix R = matricize(to_dense(residual(X, data)), 0);

    const Matrix expect = PU * Z * PV +
                          (IU - PU) * (Z + R * Vp * Sinv * V.transpose()) * PV +
                          PU * (Z + U * Sinv * Up.transpose() * R) * (IV - PV);
    const Matrix got = matricize(tangent_to_ambient(hessian_exact(X, data, xi)), 0);
    REQUIRE((expect - got).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("hessian_gauss_newton", "[hessian]") {
    Rng rng(6);
    TuckerTensor X = random_tucker({4, 4, 4}, {2, 2, 2}, rng);
    auto omega = sample_omega(X.dims(), 30, rng);
    SampledTensor data = sample_project(random_uniform_tensor(X.dims(), rng), omega);

    SECTION("positive semidefinite") {
        for (int trial = 0; trial < 10; ++trial) {
            TangentVector xi = random_tangent(X, rng);
            REQUIRE(tangent_inner(hessian_gauss_newton(X, data, xi), xi) >= -1e-12);
        }
    }
    SECTION("full sampling quadratic form is the squared norm") {
        auto full = sample_omega(X.dims(), 64, rng);
        SampledTensor fdata = sample_project(random_uniform_tensor(X.dims(), rng), full);
        TangentVector xi = random_tangent(X, rng);
        double q = tangent_inner(hessian_gauss_newton(X, fdata, xi), xi);
        REQUIRE(q == Catch::Approx(tangent_inner(xi, xi)));
    }
    SECTION("projected and bare quadratic forms agree") {
        TangentVector xi = random_tangent(X, rng);
        DenseTensor pxi = to_dense(
            data.with_values(tangent_sampled_entries(xi, data.indices())));
        double bare = inner(pxi, tangent_to_ambient(xi));
        double projected = tangent_inner(hessian_gauss_newton(X, data, xi), xi);
        REQUIRE(std::abs(bare - projected) <= 1e-12 * std::max(1.0, std::abs(bare)));
    }
}

TEST_CASE("hessian_fd", "[hessian]") {
    Rng rng(7);
    TuckerTensor X = random_tucker({4, 4, 4}, {2, 2, 2}, rng);

    SECTION("zero direction") {
        auto omega = sample_omega(X.dims(), 30, rng);
        SampledTensor data = sample_project(random_uniform_tensor(X.dims(), rng), omega);
        REQUIRE(tangent_norm(hessian_fd(X, data, TangentVector::zero(X))) == 0.0);
    }
    SECTION("identity operator at an interpolating point under full sampling") {
        // With P_Omega = id and A = X the cost is half the squared distance
        // to X, whose Hessian at X is the identity on the tangent space; the
        // finite-difference operator converges to it as h shrinks.
        auto full = sample_omega(X.dims(), 64, rng);
        SampledTensor data = sample_project(to_full(X), full);
        TangentVector xi = random_tangent(X, rng);
        REQUIRE(tangent_norm(hessian_exact(X, data, xi) - xi) <= 1e-12);
        REQUIRE(tangent_norm(hessian_fd(X, data, xi, 1e-6) - xi) <=
                1e-4 * tangent_norm(xi));
    }
    SECTION("first-order agreement with the exact Hessian near a critical point") {
        auto omega = sample_omega(X.dims(), 40, rng);
        SampledTensor raw = sample_project(random_uniform_tensor(X.dims(), rng), omega);
        SampledTensor data = make_stationary_data(X, raw);
        TangentVector xi = random_tangent(X, rng);
        xi *= 1.0 / tangent_norm(xi);
        TangentVector hx = hessian_exact(X, data, xi);
        std::vector<double> lh, le;
        for (double h : {1e-3, 1e-4, 1e-5, 1e-6}) {
            TangentVector fd = hessian_fd(X, data, xi, h);
            lh.push_back(std::log(h));
            le.push_back(std::log(tangent_norm(fd - hx)));
        }
        // Near a critical point the FD operator converges to the exact one.
        REQUIRE(tangent_norm(hessian_fd(X, data, xi, 1e-6) - hx) <=
                1e-4 * tangent_norm(hx));
        REQUIRE(fit_slope(lh, le) >= 0.9);
    }
}

TEST_CASE("quadratic form matches the second derivative at a critical point", "[hessian]") {
    Rng rng(8);
    TuckerTensor X = random_tucker({5, 5, 5}, {2, 2, 2}, rng);
    auto omega = sample_omega(X.dims(), 70, rng);
    SampledTensor raw = sample_project(random_uniform_tensor(X.dims(), rng), omega);
    SampledTensor data = make_stationary_data(X, raw);
    REQUIRE(tangent_norm(riemannian_gradient(X, data)) <= 1e-10);

    const double f0 = cost(X, data);
    for (int trial = 0; trial < 5; ++trial) {
        TangentVector xi = random_tangent(X, rng);
        xi *= 1.0 / tangent_norm(xi);
        double q = tangent_inner(hessian_exact(X, data, xi), xi);
        const double t = 2e-4;
        double fp = cost(retract(X, t * xi), data);
        double fm = cost(retract(X, (-t) * xi), data);
        double second = (fp - 2.0 * f0 + fm) / (t * t);
        REQUIRE(std::abs(second - q) <= 1e-4 * std::max(1.0, std::abs(q)));
    }
}

TEST_CASE("hessian apply time scales linearly in the sample count", "[hessian]") {
    Rng rng(9);
    Dims dims{15, 15, 15};
    TuckerTensor X = random_tucker(dims, {2, 2, 2}, rng);
    DenseTensor A = random_uniform_tensor(dims, rng);
    TangentVector xi = random_tangent(X, rng);

    auto time_apply = [&](Index m) {
        SampledTensor data = sample_project(A, sample_omega(dims, m, rng));
        double best = std::numeric_limits<double>::infinity();
        for (int rep = 0; rep < 7; ++rep) {
            auto t0 = std::chrono::steady_clock::now();
            for (int it = 0; it < 10; ++it) (void)hessian_exact(X, data, xi);
            best = std::min(best, std::chrono::duration<double>(
                                      std::chrono::steady_clock::now() - t0)
                                      .count());
        }
        return best;
    };
    double ratio = time_apply(3200) / time_apply(1600);
    INFO("time ratio for doubled |Omega|: " << ratio);
    REQUIRE(ratio >= 1.5);
    REQUIRE(ratio <= 3.0);
}
