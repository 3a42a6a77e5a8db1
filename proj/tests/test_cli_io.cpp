#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "lrtc/experiments.hpp"

using namespace lrtc;

TEST_CASE("tensor file round trip", "[io]") {
    ProblemSpec spec;
    spec.dims = {4, 5, 3};
    spec.rank = {2, 2, 2};
    spec.fraction = 0.4;
    spec.seed = 42;
    Problem prob = generate_problem(spec);

    std::ostringstream os;
    write_tensor_file(os, prob.data);
    std::istringstream is(os.str());
    SampledTensor back = read_tensor_file(is);

    REQUIRE(back.dims() == prob.data.dims());
    REQUIRE(back.count() == prob.data.count());
    for (Index k = 0; k < back.count(); ++k) {
        REQUIRE(back.index(k) == prob.data.index(k));
        REQUIRE(back.value(k) == prob.data.value(k));  // %.17g is lossless
    }
}

TEST_CASE("tensor file parsing", "[io]") {
    auto parse = [](const std::string& text) {
        std::istringstream is(text);
        return read_tensor_file(is);
    };

    SECTION("comments and blank lines") {
        SampledTensor S = parse("# header comment\n\n2 3 4\n1 1 2.5 # entry\n\n3 4 -1\n");
        REQUIRE(S.dims() == Dims{3, 4});
        REQUIRE(S.count() == 2);
        REQUIRE(S.value(0) == 2.5);
        REQUIRE(S.index(1) == MultiIndex{2, 3});
    }
    SECTION("missing header") {
        REQUIRE_THROWS_AS(parse("# nothing\n"), TensorFileError);
    }
    SECTION("bad order") {
        REQUIRE_THROWS_AS(parse("1 5\n1 1.0\n"), TensorFileError);
    }
    SECTION("malformed record reports the line number") {
        try {
            parse("2 3 4\n1 1 1.0\n1 x 2.0\n");
            FAIL("expected TensorFileError");
        } catch (const TensorFileError& e) {
            REQUIRE(e.line() == 3);
        }
    }
    SECTION("index out of bounds") {
        REQUIRE_THROWS_AS(parse("2 3 4\n4 1 1.0\n"), TensorFileError);
        REQUIRE_THROWS_AS(parse("2 3 4\n0 1 1.0\n"), TensorFileError);
    }
    SECTION("missing value") {
        REQUIRE_THROWS_AS(parse("2 3 4\n1 1\n"), TensorFileError);
    }
    SECTION("trailing tokens") {
        REQUIRE_THROWS_AS(parse("2 3 4 9\n"), TensorFileError);
        REQUIRE_THROWS_AS(parse("2 3 4\n1 1 1.0 7\n"), TensorFileError);
    }
    SECTION("duplicate index") {
        REQUIRE_THROWS_AS(parse("2 3 4\n1 1 1.0\n1 1 2.0\n"), TensorFileError);
    }
    SECTION("no entries") {
        REQUIRE_THROWS_AS(parse("2 3 4\n"), TensorFileError);
    }
}

TEST_CASE("trace CSV round trip", "[io]") {
    SolverTrace trace;
    for (int k = 0; k < 3; ++k) {
        IterRecord r;
        r.k = k;
        r.f = 1.0 / (k + 1);
        r.grad_rel = std::pow(10.0, -k);
        r.delta = 2.0 + k;
        r.rho = 0.9;
        r.accepted = k != 1;
        r.inner_iters = 4 + k;
        r.wall_ms = 12.5 * k;
        trace.iters.push_back(r);
    }

    std::ostringstream os;
    write_trace_csv(os, trace);
    REQUIRE(os.str().rfind(kTraceCsvHeader, 0) == 0);

    std::istringstream is(os.str());
    auto back = read_trace_csv(is);
    REQUIRE(back.size() == 3);
    for (size_t k = 0; k < 3; ++k) {
        REQUIRE(back[k].k == trace.iters[k].k);
        REQUIRE(back[k].f == trace.iters[k].f);
        REQUIRE(back[k].grad_rel == trace.iters[k].grad_rel);
        REQUIRE(back[k].accepted == trace.iters[k].accepted);
        REQUIRE(back[k].inner_iters == trace.iters[k].inner_iters);
        // Timings are suppressed unless explicitly requested.
        REQUIRE(back[k].wall_ms == 0.0);
    }

    std::ostringstream timed;
    write_trace_csv(timed, trace, true);
    std::istringstream tis(timed.str());
    REQUIRE(read_trace_csv(tis)[2].wall_ms == 25.0);
}

TEST_CASE("generate_problem", "[io]") {
    SECTION("full sampling") {
        ProblemSpec spec;
        spec.dims = {3, 3, 3};
        spec.rank = {2, 2, 2};
        spec.fraction = 1.0;
        Problem prob = generate_problem(spec);
        REQUIRE(prob.data.count() == 27);
    }
    SECTION("low-rank truth has the requested rank") {
        ProblemSpec spec;
        spec.dims = {6, 7, 8};
        spec.rank = {2, 3, 2};
        spec.kind = TruthKind::LowRank;
        spec.seed = 9;
        Problem prob = generate_problem(spec);
        REQUIRE(multilinear_rank(prob.truth) == spec.rank);
    }
    SECTION("deterministic for a fixed seed") {
        ProblemSpec spec;
        spec.dims = {5, 5, 5};
        spec.rank = {2, 2, 2};
        spec.fraction = 0.3;
        spec.seed = 1234;
        Problem a = generate_problem(spec);
        Problem b = generate_problem(spec);
        REQUIRE(a.data.indices() == b.data.indices());
        REQUIRE(a.data.values() == b.data.values());
    }
    SECTION("invalid fraction rejected") {
        ProblemSpec spec;
        spec.dims = {3, 3};
        spec.rank = {2, 2};
        spec.fraction = 0.0;
        REQUIRE_THROWS_AS(generate_problem(spec), std::invalid_argument);
    }
}

TEST_CASE("make_stationary_data produces a critical point", "[io]") {
    Rng rng(7);
    TuckerTensor X = random_tucker({6, 6, 6}, {2, 2, 2}, rng);
    auto omega = sample_omega(X.dims(), 100, rng);
    SampledTensor raw = sample_project(random_uniform_tensor(X.dims(), rng), omega);
    SampledTensor data = make_stationary_data(X, raw);
    REQUIRE(tangent_norm(riemannian_gradient(X, data)) <= 1e-10);
    // The sampling set is untouched.
    REQUIRE(data.indices() == raw.indices());
}

TEST_CASE("run_model_order smoke", "[io]") {
    ModelOrderConfig cfg;
    cfg.dims = {5, 5, 5};
    cfg.rank = {2, 2, 2};
    cfg.omega_sizes = {30};
    cfg.trials = 3;
    cfg.j_max = 4;
    cfg.seed = 2;
    auto cells = run_model_order(cfg);
    // One omega size, two point types, three models.
    REQUIRE(cells.size() == 6);
    for (const auto& c : cells) {
        REQUIRE(c.ratios.size() == 4);
        for (size_t j = 0; j < c.ratios.size(); ++j)
            if (!c.flagged[j]) REQUIRE(c.ratios[j] > 0.0);
    }
}

TEST_CASE("ingest_and_report", "[io]") {
    SECTION("fully sampled synthetic reports spectra") {
        ProblemSpec spec;
        spec.dims = {5, 5, 5};
        spec.rank = {2, 2, 1};
        spec.fraction = 1.0;
        spec.kind = TruthKind::LowRank;
        spec.seed = 21;
        Problem prob = generate_problem(spec);
        SolverConfig cfg;
        cfg.stopping.grad_rel_tol = 1e-8;
        IngestReport rep = ingest_and_report(prob.data, spec.rank, 0.3, cfg);
        REQUIRE(rep.fully_sampled);
        REQUIRE(rep.spectra.size() == 3);
        // Mode 3 of a rank-(2,2,1) tensor: one dominant value, rest noise.
        REQUIRE(rep.spectra[2](1) <= 1e-12 * rep.spectra[2](0));
    }
    SECTION("held-out error is small for an exactly completable instance") {
        ProblemSpec spec;
        spec.dims = {6, 6, 6};
        spec.rank = {2, 2, 2};
        spec.fraction = 0.9;
        spec.kind = TruthKind::LowRank;
        spec.seed = 22;
        Problem prob = generate_problem(spec);
        SolverConfig cfg;
        cfg.stopping.grad_rel_tol = 1e-12;
        cfg.rng_seed = 5;
        // A 0.5 holdout leaves too few samples for reliable recovery here.
        IngestReport rep = ingest_and_report(prob.data, spec.rank, 0.3, cfg);
        REQUIRE(rep.heldout_rel_error <= 1e-6);
    }
}
