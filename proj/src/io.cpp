#include "skm/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "skm/rng.hpp"

namespace skm {

namespace {

[[noreturn]] void parse_fail(const std::string& path, std::size_t line,
                             const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace

SparseMatrixCSR read_matrix_market(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_matrix_market: cannot open " + path);

    std::string line;
    std::size_t lineno = 0;

    if (!std::getline(f, line)) parse_fail(path, 1, "empty file");
    ++lineno;
    std::istringstream banner(line);
    std::string tag, object, format, field, symmetry;
    banner >> tag >> object >> format >> field >> symmetry;
    if (tag != "%%MatrixMarket") parse_fail(path, lineno, "missing MatrixMarket banner");
    object = lower(object);
    format = lower(format);
    field = lower(field);
    symmetry = lower(symmetry);
    if (object != "matrix") parse_fail(path, lineno, "object must be 'matrix'");
    if (format != "coordinate" && format != "array")
        parse_fail(path, lineno, "format must be 'coordinate' or 'array'");
    if (field != "real" && field != "integer" && field != "pattern")
        parse_fail(path, lineno, "unsupported field '" + field + "'");
    if (symmetry != "general" && symmetry != "symmetric" &&
        symmetry != "skew-symmetric")
        parse_fail(path, lineno, "unsupported symmetry '" + symmetry + "'");
    if (format == "array" && field == "pattern")
        parse_fail(path, lineno, "pattern field is invalid for array format");

    // skip comments and blank lines up to the size line
    std::size_t rows = 0, cols = 0, nnz = 0;
    for (;;) {
        if (!std::getline(f, line)) parse_fail(path, lineno + 1, "missing size line");
        ++lineno;
        if (!line.empty() && line[0] == '%') continue;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ss(line);
        const bool ok = format == "coordinate" ? bool(ss >> rows >> cols >> nnz)
                                               : bool(ss >> rows >> cols);
        if (!ok) parse_fail(path, lineno, "malformed size line");
        break;
    }
    if (rows == 0 || cols == 0) parse_fail(path, lineno, "zero matrix dimensions");

    std::vector<std::size_t> ri, ci;
    std::vector<double> vals;

    auto push = [&](std::size_t i, std::size_t j, double v) {
        ri.push_back(i);
        ci.push_back(j);
        vals.push_back(v);
        if (symmetry != "general" && i != j) {
            ri.push_back(j);
            ci.push_back(i);
            vals.push_back(symmetry == "symmetric" ? v : -v);
        }
    };

    if (format == "coordinate") {
        std::size_t seen = 0;
        while (seen < nnz) {
            if (!std::getline(f, line))
                parse_fail(path, lineno + 1,
                           "unexpected end of file: expected " + std::to_string(nnz) +
                               " entries, got " + std::to_string(seen));
            ++lineno;
            if (line.empty() || line[0] == '%' ||
                line.find_first_not_of(" \t\r") == std::string::npos)
                continue;
            std::istringstream ss(line);
            std::size_t i = 0, j = 0;
            double v = 1.0;
            if (!(ss >> i >> j)) parse_fail(path, lineno, "malformed entry");
            if (field != "pattern" && !(ss >> v))
                parse_fail(path, lineno, "missing value");
            if (i < 1 || i > rows || j < 1 || j > cols)
                parse_fail(path, lineno, "index out of range");
            if (!std::isfinite(v)) parse_fail(path, lineno, "nonfinite value");
            push(i - 1, j - 1, v);
            ++seen;
        }
    } else {
        // array: dense column-major listing
        const bool skew = symmetry == "skew-symmetric";
        const bool sym = symmetry != "general";
        std::size_t col = 0, row = sym ? (skew ? 1 : 0) : 0;
        std::size_t expected = 0;
        if (!sym)
            expected = rows * cols;
        else
            for (std::size_t j = 0; j < cols; ++j)
                expected += rows - j - (skew ? 1 : 0);
        std::size_t seen = 0;
        while (seen < expected) {
            if (!std::getline(f, line))
                parse_fail(path, lineno + 1, "unexpected end of file in array data");
            ++lineno;
            if (line.empty() || line[0] == '%' ||
                line.find_first_not_of(" \t\r") == std::string::npos)
                continue;
            std::istringstream ss(line);
            double v;
            while (ss >> v) {
                if (!std::isfinite(v)) parse_fail(path, lineno, "nonfinite value");
                if (v != 0.0) push(row, col, v);
                ++seen;
                ++row;
                if (row >= rows) {
                    ++col;
                    row = sym ? col + (skew ? 1 : 0) : 0;
                }
                if (seen == expected) break;
            }
        }
    }

    return SparseMatrixCSR::from_triples(rows, cols, std::move(ri), std::move(ci),
                                         std::move(vals));
}

void write_metrics_csv(const RunMetrics& metrics, const std::string& path) {
    if (metrics.records.empty())
        throw std::invalid_argument("write_metrics_csv: empty metrics");
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_metrics_csv: cannot open " + path);
    f << "iteration,beta,error_sq,residual_sq,flops,elapsed_s,bound\n";
    char buf[512];
    for (const auto& r : metrics.records) {
        std::snprintf(buf, sizeof(buf),
                      "%ld,%ld,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.k, r.beta,
                      r.error_sq, r.residual_sq, r.flops, r.elapsed_s, r.bound);
        f << buf;
    }
    if (!f) throw std::runtime_error("write_metrics_csv: write failed for " + path);
}

RunMetrics read_metrics_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_metrics_csv: cannot open " + path);
    std::string line;
    if (!std::getline(f, line))
        throw std::runtime_error("read_metrics_csv: empty file " + path);
    RunMetrics out;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        IterationRecord r;
        std::istringstream ss(line);
        char comma;
        ss >> r.k >> comma >> r.beta >> comma >> r.error_sq >> comma >>
            r.residual_sq >> comma >> r.flops >> comma >> r.elapsed_s >> comma >>
            r.bound;
        if (ss.fail())
            throw std::runtime_error("read_metrics_csv: malformed row in " + path);
        out.records.push_back(r);
    }
    if (!out.records.empty()) {
        const auto& last = out.records.back();
        out.iterations = last.k;
        out.final_error_sq = last.error_sq;
        out.final_residual_sq = last.residual_sq;
        out.total_flops = last.flops;
        out.elapsed_s = last.elapsed_s;
    }
    return out;
}

RunMetrics mean_metrics(const std::vector<RunMetrics>& trials) {
    if (trials.empty()) throw std::invalid_argument("mean_metrics: no trials");
    std::size_t len = trials.front().records.size();
    for (const auto& t : trials) len = std::min(len, t.records.size());
    RunMetrics out;
    out.records.resize(len);
    const double nt = static_cast<double>(trials.size());
    for (std::size_t i = 0; i < len; ++i) {
        IterationRecord& r = out.records[i];
        r.k = trials.front().records[i].k;
        double beta = 0.0;
        r.error_sq = r.residual_sq = r.flops = r.elapsed_s = 0.0;
        r.bound = 0.0;
        bool any_bound = true;
        for (const auto& t : trials) {
            const auto& s = t.records[i];
            beta += static_cast<double>(s.beta);
            r.error_sq += s.error_sq;
            r.residual_sq += s.residual_sq;
            r.flops += s.flops;
            r.elapsed_s += s.elapsed_s;
            if (std::isnan(s.bound))
                any_bound = false;
            else
                r.bound += s.bound;
        }
        r.beta = static_cast<long>(beta / nt + 0.5);
        r.error_sq /= nt;
        r.residual_sq /= nt;
        r.flops /= nt;
        r.elapsed_s /= nt;
        r.bound = any_bound ? r.bound / nt
                            : std::numeric_limits<double>::quiet_NaN();
        r.selected_row = -1;
    }
    if (!out.records.empty()) {
        const auto& last = out.records.back();
        out.iterations = last.k;
        out.final_error_sq = last.error_sq;
        out.final_residual_sq = last.residual_sq;
        out.total_flops = last.flops;
        out.elapsed_s = last.elapsed_s;
    }
    return out;
}

LinearSystem embed_real_solution(Matrix matrix, std::uint64_t seed) {
    const std::size_t m = matrix.rows(), n = matrix.cols();
    Philox rng(seed, 0);
    std::vector<double> z(m);
    for (auto& v : z) v = rng.next_gaussian();
    std::vector<double> xstar(n);
    matrix.apply_transpose(z, xstar);
    double nrm = 0.0;
    for (double v : xstar) nrm += v * v;
    nrm = std::sqrt(nrm);
    if (nrm == 0.0)
        throw std::runtime_error("embed_real_solution: A^T z vanished; zero matrix?");
    for (auto& v : xstar) v /= nrm;
    std::vector<double> b(m);
    matrix.apply(xstar, b);
    return make_system(std::move(matrix), std::move(b), xstar, true);
}

}  // namespace skm
