// Command-line harness for low-rank tensor completion on the fixed
// multilinear-rank manifold: synthetic problem generation, completion runs,
// model-order and convergence experiments, singular-value reports.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 solver failure.

#include <iostream>

#include <CLI11.hpp>

#include "lrtc/experiments.hpp"

using namespace lrtc;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitSolver = 3;

struct CommonProblemFlags {
    std::vector<Index> dims;
    std::vector<Index> rank;
    double fraction = 0.5;
    Index omega_size = 0;
    double noise = 0.0;
    double decay = 1.0;
    bool full_rank = false;
    std::uint64_t seed = 0;
};

void add_problem_flags(CLI::App* cmd, CommonProblemFlags& f) {
    cmd->add_option("--dims", f.dims, "tensor dimensions n_1 ... n_d")->required();
    cmd->add_option("--rank", f.rank, "multilinear rank r_1 ... r_d")->required();
    cmd->add_option("--fraction", f.fraction, "sampling fraction in (0,1]");
    cmd->add_option("--omega-size", f.omega_size,
                    "explicit sampling-set size (overrides --fraction)");
    cmd->add_option("--noise", f.noise, "noise level sigma added to a low-rank truth");
    cmd->add_option("--decay", f.decay,
                    "spectral decay of the low-rank truth core, in (0,1]");
    cmd->add_flag("--full-rank", f.full_rank, "use a dense uniform ground truth");
    cmd->add_option("--seed", f.seed, "RNG seed");
}

ProblemSpec to_spec(const CommonProblemFlags& f) {
    ProblemSpec spec;
    spec.dims = f.dims;
    spec.rank = f.rank;
    spec.fraction = f.fraction;
    spec.omega_size = f.omega_size;
    spec.noise_sigma = f.noise;
    spec.decay = f.decay;
    spec.kind = f.full_rank ? TruthKind::FullRank
                            : (f.noise > 0.0 ? TruthKind::LowRankPlusNoise
                                             : TruthKind::LowRank);
    spec.seed = f.seed;
    return spec;
}

const char* point_name(PointType p) {
    return p == PointType::Stationary ? "stationary" : "generic";
}

const char* model_name(ModelKind m) {
    switch (m) {
        case ModelKind::SD: return "sd";
        case ModelKind::N: return "n";
        case ModelKind::GN: return "gn";
    }
    return "?";
}

int run_synth(const CommonProblemFlags& f, const std::string& output) {
    Problem prob = generate_problem(to_spec(f));
    if (output.empty() || output == "-")
        write_tensor_file(std::cout, prob.data);
    else
        write_tensor_file(output, prob.data);
    return 0;
}

struct SolveFlags {
    std::string solver = "rtr";
    std::string hessian = "exact";
    double tol = 1e-12;
    Index max_iter = 500;
    double mu = 0.0;
    std::string trace;
    bool timing = false;
    std::uint64_t seed = 0;
};

// with_seed = false when the subcommand already exposes --seed elsewhere.
void add_solve_flags(CLI::App* cmd, SolveFlags& f, bool with_seed = true) {
    cmd->add_option("--solver", f.solver, "rtr | rcg | sd")
        ->check(CLI::IsMember({"rtr", "rcg", "sd"}));
    cmd->add_option("--hessian", f.hessian, "exact | gn | fd (rtr only)")
        ->check(CLI::IsMember({"exact", "gn", "fd"}));
    cmd->add_option("--tol", f.tol, "relative gradient-norm tolerance");
    cmd->add_option("--max-iter", f.max_iter, "outer iteration limit");
    cmd->add_option("--mu", f.mu, "regularization weight (opt-in)");
    cmd->add_option("--trace", f.trace, "write the per-iteration CSV trace here");
    cmd->add_flag("--timing", f.timing, "include wall-clock times in traces");
    if (with_seed) cmd->add_option("--seed", f.seed, "RNG seed for the initial guess");
}

SolverConfig to_config(const SolveFlags& f) {
    SolverConfig cfg;
    cfg.hessian_model = f.hessian == "gn" ? HessianModel::GaussNewton
                        : f.hessian == "fd" ? HessianModel::FiniteDifference
                                            : HessianModel::Exact;
    cfg.stopping.grad_rel_tol = f.tol;
    cfg.stopping.max_outer_iters = f.max_iter;
    cfg.mu = f.mu;
    cfg.rng_seed = f.seed;
    return cfg;
}

SolveResult dispatch_solve(const SampledTensor& data, const Dims& rank,
                           const SolveFlags& f) {
    const SolverConfig cfg = to_config(f);
    if (f.solver == "rcg") return nonlinear_cg_solve(data, rank, cfg);
    if (f.solver == "sd") return steepest_descent_solve(data, rank, cfg);
    return trust_region_solve(data, rank, cfg);
}

void print_summary(std::ostream& os, const std::string& name, const SolverTrace& t) {
    const IterRecord& last = t.iters.back();
    os << name << ": termination=" << t.termination << " iters=" << t.iters.size()
       << " f=" << last.f << " grad_rel=" << last.grad_rel << "\n";
}

int run_complete(const std::string& input, const std::vector<Index>& rank,
                 const SolveFlags& f, double holdout) {
    const SampledTensor data = read_tensor_file(input);
    if (holdout > 0.0) {
        IngestReport rep = ingest_and_report(data, rank, holdout, to_config(f));
        if (rep.fully_sampled) {
            for (size_t i = 0; i < rep.spectra.size(); ++i) {
                std::cout << "spectrum mode " << i + 1 << ":";
                for (Index k = 0; k < rep.spectra[i].size(); ++k)
                    std::cout << ' ' << rep.spectra[i](k);
                std::cout << "\n";
            }
        }
        std::cout << "train=" << rep.train_count << " heldout=" << rep.heldout_count
                  << " heldout_rel_error=" << rep.heldout_rel_error << "\n";
        print_summary(std::cout, f.solver, rep.solve.trace);
        if (!f.trace.empty()) write_trace_csv(f.trace, rep.solve.trace, f.timing);
        return rep.solve.trace.termination == "line_search_failure" ? kExitSolver : 0;
    }
    SolveResult res = dispatch_solve(data, rank, f);
    print_summary(std::cout, f.solver, res.trace);
    if (!f.trace.empty()) write_trace_csv(f.trace, res.trace, f.timing);
    return res.trace.termination == "line_search_failure" ? kExitSolver : 0;
}

int run_model_order_cmd(const CommonProblemFlags& f, std::vector<Index> omegas,
                        Index trials, Index j_max, const std::string& output) {
    ModelOrderConfig cfg;
    cfg.dims = f.dims;
    cfg.rank = f.rank;
    if (!omegas.empty()) cfg.omega_sizes = std::move(omegas);
    cfg.trials = trials;
    cfg.j_max = j_max;
    cfg.kind = f.full_rank ? TruthKind::FullRank : TruthKind::LowRank;
    cfg.seed = f.seed;

    std::ofstream file;
    if (!output.empty() && output != "-") {
        file.open(output);
        if (!file) throw std::runtime_error("cannot open " + output + " for writing");
    }
    std::ostream& os = file.is_open() ? file : std::cout;
    os << "omega,point,model,f,j,ratio,flagged\n";
    for (const ModelOrderCell& c : run_model_order(cfg)) {
        for (size_t j = 0; j < c.ratios.size(); ++j)
            os << c.omega_size << ',' << point_name(c.point) << ','
               << model_name(c.model) << ',' << detail::format_double(c.f_at_x) << ','
               << j << ',' << detail::format_double(c.ratios[j]) << ','
               << (c.flagged[j] ? 1 : 0) << '\n';
    }
    return 0;
}

int run_convergence_cmd(const CommonProblemFlags& f, const SolveFlags& sf,
                        const std::string& trace_dir) {
    SolverConfig cfg = to_config(sf);
    auto runs = run_convergence(to_spec(f), cfg);
    int failures = 0;
    for (const ConvergenceRun& r : runs) {
        if (!r.error.empty()) {
            std::cout << r.name << ": error: " << r.error << "\n";
            ++failures;
            continue;
        }
        print_summary(std::cout, r.name, r.result.trace);
        if (!trace_dir.empty())
            write_trace_csv(trace_dir + "/" + r.name + ".csv", r.result.trace, sf.timing);
    }
    return failures == static_cast<int>(runs.size()) ? kExitSolver : 0;
}

int run_spectrum(const std::string& input, const std::string& output) {
    const SampledTensor data = read_tensor_file(input);
    if (data.count() != product(data.dims()))
        throw TensorFileError("spectrum requires a fully sampled tensor", 0);
    std::ofstream file;
    if (!output.empty() && output != "-") {
        file.open(output);
        if (!file) throw std::runtime_error("cannot open " + output + " for writing");
    }
    std::ostream& os = file.is_open() ? file : std::cout;
    os << "mode,k,sigma\n";
    auto spectra = singular_spectrum(to_dense(data));
    for (size_t i = 0; i < spectra.size(); ++i)
        for (Index k = 0; k < spectra[i].size(); ++k)
            os << i + 1 << ',' << k + 1 << ',' << detail::format_double(spectra[i](k))
               << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Riemannian trust-region tensor completion on the Tucker manifold"};
    app.require_subcommand(1);

    // synth
    CommonProblemFlags synth_flags;
    std::string synth_output = "-";
    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic sampled tensor");
    add_problem_flags(synth, synth_flags);
    synth->add_option("--output", synth_output, "tensor file destination (- for stdout)");

    // complete
    std::string complete_input;
    std::vector<Index> complete_rank;
    SolveFlags complete_solve;
    double holdout = 0.0;
    CLI::App* complete = app.add_subcommand("complete", "complete a sampled tensor");
    complete->add_option("--input", complete_input, "tensor file to complete")->required();
    complete->add_option("--rank", complete_rank, "target multilinear rank")->required();
    add_solve_flags(complete, complete_solve);
    complete->add_option("--holdout", holdout,
                         "hold out this fraction of known entries and report the error");

    // model-order
    CommonProblemFlags mo_flags;
    std::vector<Index> mo_omegas;
    Index mo_trials = 1000, mo_jmax = 10;
    std::string mo_output = "-";
    CLI::App* morder = app.add_subcommand("model-order", "model-order ratio experiment");
    add_problem_flags(morder, mo_flags);
    morder->add_option("--omega", mo_omegas, "sampling-set sizes (default 10 100 1000)");
    morder->add_option("--trials", mo_trials, "random directions per cell");
    morder->add_option("--j-max", mo_jmax, "smallest step is 2^-j_max");
    morder->add_option("--output", mo_output, "CSV destination (- for stdout)");

    // convergence
    CommonProblemFlags cv_flags;
    SolveFlags cv_solve;
    std::string cv_trace_dir;
    CLI::App* conv = app.add_subcommand("convergence", "run all solvers on one instance");
    add_problem_flags(conv, cv_flags);
    add_solve_flags(conv, cv_solve, false);  // --seed comes from the problem flags
    conv->add_option("--trace-dir", cv_trace_dir, "write one CSV trace per solver here");

    // spectrum
    std::string sp_input, sp_output = "-";
    CLI::App* spectrum =
        app.add_subcommand("spectrum", "per-mode singular values of a full tensor file");
    spectrum->add_option("--input", sp_input, "fully sampled tensor file")->required();
    spectrum->add_option("--output", sp_output, "CSV destination (- for stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (synth->parsed()) return run_synth(synth_flags, synth_output);
        if (complete->parsed())
            return run_complete(complete_input, complete_rank, complete_solve, holdout);
        if (morder->parsed())
            return run_model_order_cmd(mo_flags, mo_omegas, mo_trials, mo_jmax, mo_output);
        if (conv->parsed()) {
            cv_solve.seed = cv_flags.seed;
            return run_convergence_cmd(cv_flags, cv_solve, cv_trace_dir);
        }
        if (spectrum->parsed()) return run_spectrum(sp_input, sp_output);
    } catch (const TensorFileError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const RankDropError& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return kExitSolver;
    } catch (const PinvCutoffError& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return kExitSolver;
    } catch (const std::invalid_argument& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
