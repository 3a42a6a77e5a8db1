#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>

#include "lrtc/sampled_tensor.hpp"
#include "lrtc/solver.hpp"

namespace lrtc {

/// A malformed line in a tensor file; carries the 1-based line number.
class TensorFileError : public std::runtime_error {
public:
    TensorFileError(const std::string& what, long line)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    long line() const { return line_; }

private:
    long line_;
};

namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

/// Line-oriented sampled-tensor text format:
///   header   d n_1 ... n_d
///   entries  i_1 ... i_d value          (multi-indices 1-based)
/// '#' starts a comment; blank lines allowed.
inline void write_tensor_file(std::ostream& os, const SampledTensor& S) {
    os << S.order();
    for (Index n : S.dims()) os << ' ' << n;
    os << '\n';
    for (Index k = 0; k < S.count(); ++k) {
        for (Index m = 0; m < S.order(); ++m) os << S.index(k)[m] + 1 << ' ';
        os << detail::format_double(S.value(k)) << '\n';
    }
}

inline void write_tensor_file(const std::string& path, const SampledTensor& S) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    write_tensor_file(os, S);
}

inline SampledTensor read_tensor_file(std::istream& is) {
    std::string line;
    long lineno = 0;
    auto next_line = [&](std::string& out) {
        while (std::getline(is, line)) {
            ++lineno;
            const auto h = line.find('#');
            if (h != std::string::npos) line.erase(h);
            std::istringstream probe(line);
            std::string tok;
            if (probe >> tok) {
                out = line;
                return true;
            }
        }
        return false;
    };

    std::string hdr;
    if (!next_line(hdr)) throw TensorFileError("missing header", lineno);
    std::istringstream hs(hdr);
    long d = 0;
    if (!(hs >> d) || d < 2) throw TensorFileError("invalid tensor order", lineno);
    Dims dims(d);
    for (long m = 0; m < d; ++m)
        if (!(hs >> dims[m]) || dims[m] < 1)
            throw TensorFileError("invalid dimension in header", lineno);
    std::string extra;
    if (hs >> extra) throw TensorFileError("trailing tokens in header", lineno);

    std::vector<MultiIndex> indices;
    std::vector<double> values;
    std::string rec;
    while (next_line(rec)) {
        std::istringstream rs(rec);
        MultiIndex idx(d);
        for (long m = 0; m < d; ++m) {
            long i1 = 0;
            if (!(rs >> i1)) throw TensorFileError("malformed record", lineno);
            if (i1 < 1 || i1 > dims[m])
                throw TensorFileError("index out of bounds", lineno);
            idx[m] = i1 - 1;
        }
        double v = 0.0;
        if (!(rs >> v)) throw TensorFileError("missing value", lineno);
        if (rs >> extra) throw TensorFileError("trailing tokens in record", lineno);
        indices.push_back(std::move(idx));
        values.push_back(v);
    }
    if (indices.empty()) throw TensorFileError("no entries", lineno);
    Vector vals(static_cast<Index>(values.size()));
    for (size_t k = 0; k < values.size(); ++k) vals(static_cast<Index>(k)) = values[k];
    try {
        return SampledTensor(dims, std::move(indices), std::move(vals));
    } catch (const std::invalid_argument& e) {
        throw TensorFileError(e.what(), lineno);
    }
}

inline SampledTensor read_tensor_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    return read_tensor_file(is);
}

inline constexpr const char* kTraceCsvHeader =
    "iter,f,grad_rel,delta,rho,accepted,inner_iters,wall_ms";

/// CSV trace, schema v1. Timings are emitted only on request so that
/// repeated runs with the same seed stay byte-identical.
inline void write_trace_csv(std::ostream& os, const SolverTrace& trace,
                            bool include_timing = false) {
    os << kTraceCsvHeader << '\n';
    for (const IterRecord& r : trace.iters) {
        os << r.k << ',' << detail::format_double(r.f) << ','
           << detail::format_double(r.grad_rel) << ',' << detail::format_double(r.delta)
           << ',' << detail::format_double(r.rho) << ',' << (r.accepted ? 1 : 0) << ','
           << r.inner_iters << ','
           << detail::format_double(include_timing ? r.wall_ms : 0.0) << '\n';
    }
}

inline void write_trace_csv(const std::string& path, const SolverTrace& trace,
                            bool include_timing = false) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    write_trace_csv(os, trace, include_timing);
}

/// Parse back a trace CSV (round-trip checks and external tooling).
inline std::vector<IterRecord> read_trace_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != kTraceCsvHeader)
        throw std::runtime_error("trace CSV: bad header");
    std::vector<IterRecord> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        IterRecord r;
        char c;
        int accepted = 0;
        if (!(ls >> r.k >> c >> r.f >> c >> r.grad_rel >> c >> r.delta >> c >> r.rho >> c >>
              accepted >> c >> r.inner_iters >> c >> r.wall_ms))
            throw std::runtime_error("trace CSV: bad record");
        r.accepted = accepted != 0;
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace lrtc
