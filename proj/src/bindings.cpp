#include <pybind11/pybind11.h>
#include <pybind11/numpy.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "skm/analysis.hpp"
#include "skm/experiments.hpp"
#include "skm/graphs.hpp"
#include "skm/io.hpp"
#include "skm/linear_system.hpp"
#include "skm/selection.hpp"
#include "skm/solvers.hpp"

namespace py = pybind11;
using namespace skm;

namespace {

std::vector<double> to_vector(const py::array_t<double>& a) {
    const auto buf = a.request();
    const double* p = static_cast<const double*>(buf.ptr);
    return std::vector<double>(p, p + buf.size);
}

Matrix dense_from_numpy(const py::array_t<double>& a) {
    const auto buf = a.request();
    if (buf.ndim != 2) throw std::invalid_argument("expected a 2-d array");
    const auto m = static_cast<std::size_t>(buf.shape[0]);
    const auto n = static_cast<std::size_t>(buf.shape[1]);
    py::array_t<double, py::array::c_style | py::array::forcecast> c(a);
    const double* p = static_cast<const double*>(c.request().ptr);
    return Matrix(DenseMatrix(m, n, std::vector<double>(p, p + m * n)));
}

SelectionRule make_rule(const std::string& rule, const std::string& schedule,
                        long beta, long beta_initial) {
    ExperimentConfig cfg;
    cfg.rule = rule;
    cfg.schedule = schedule;
    cfg.beta_initial = beta_initial;
    return rule_from_config(cfg, beta);
}

py::dict metrics_to_dict(const RunMetrics& m) {
    const auto n = m.records.size();
    py::array_t<long> k(n), beta(n), selected(n);
    py::array_t<double> err(n), res(n), flops(n), elapsed(n), bound(n);
    auto kk = k.mutable_unchecked<1>();
    auto bb = beta.mutable_unchecked<1>();
    auto ss = selected.mutable_unchecked<1>();
    auto ee = err.mutable_unchecked<1>();
    auto rr = res.mutable_unchecked<1>();
    auto ff = flops.mutable_unchecked<1>();
    auto tt = elapsed.mutable_unchecked<1>();
    auto uu = bound.mutable_unchecked<1>();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& rec = m.records[i];
        kk(i) = rec.k;
        bb(i) = rec.beta;
        ss(i) = rec.selected_row;
        ee(i) = rec.error_sq;
        rr(i) = rec.residual_sq;
        ff(i) = rec.flops;
        tt(i) = rec.elapsed_s;
        uu(i) = rec.bound;
    }
    py::dict d;
    d["iteration"] = k;
    d["beta"] = beta;
    d["selected_row"] = selected;
    d["error_sq"] = err;
    d["residual_sq"] = res;
    d["flops"] = flops;
    d["elapsed_s"] = elapsed;
    d["bound"] = bound;
    d["converged"] = m.status == TerminalStatus::Converged;
    d["iterations"] = m.iterations;
    d["final_error_sq"] = m.final_error_sq;
    d["final_residual_sq"] = m.final_residual_sq;
    d["total_flops"] = m.total_flops;
    return d;
}

StopCriteria make_stop(long max_iters, double error_tol_sq,
                       double residual_tol_sq) {
    StopCriteria s;
    s.max_iterations = max_iters;
    s.error_tol_sq = error_tol_sq;
    s.residual_tol_sq = residual_tol_sq;
    return s;
}

}  // namespace

PYBIND11_MODULE(_skm, m) {
    m.doc() = "Row-action Kaczmarz solvers: randomized, greedy, and sampled "
              "hybrids with dynamic-range analysis";

    py::class_<LinearSystem>(m, "LinearSystem")
        .def_property_readonly("rows", &LinearSystem::rows)
        .def_property_readonly("cols", &LinearSystem::cols)
        .def_property_readonly("rhs", [](const LinearSystem& s) { return s.rhs; })
        .def_property_readonly("x_ref",
                               [](const LinearSystem& s) { return s.x_ref; })
        .def_property_readonly(
            "row_norms_sq", [](const LinearSystem& s) { return s.row_norms_sq; });

    py::class_<Graph>(m, "Graph")
        .def_property_readonly("vertex_count",
                               [](const Graph& g) { return g.vertex_count; })
        .def_property_readonly("edges", [](const Graph& g) { return g.edges; })
        .def("degrees", &Graph::degrees)
        .def("connected", &Graph::connected);

    m.def("dense_system",
          [](const py::array_t<double>& a, const py::array_t<double>& b) {
              return make_system(dense_from_numpy(a), to_vector(b));
          },
          py::arg("a"), py::arg("b"),
          "Consistent system from a dense matrix and right-hand side; the "
          "reference point is the minimum-norm solution.");

    m.def("csr_system",
          [](std::size_t rows, std::size_t cols, const std::vector<std::size_t>& rp,
             const std::vector<std::size_t>& ci, const std::vector<double>& v,
             const py::array_t<double>& b) {
              return make_system(Matrix(SparseMatrixCSR(rows, cols, rp, ci, v)),
                                 to_vector(b));
          });

    m.def("normalize_rows", &normalize_rows);
    m.def("sigma_min_nz",
          [](const py::array_t<double>& a) {
              return sigma_min_nz(dense_from_numpy(a));
          });
    m.def("fixed_point",
          [](const LinearSystem& sys, const std::vector<double>& x0) {
              return fixed_point(sys, x0);
          });

    m.def("read_matrix_market", [](const std::string& path) {
        const auto csr = read_matrix_market(path);
        py::dict d;
        d["rows"] = csr.rows;
        d["cols"] = csr.cols;
        d["row_ptr"] = csr.row_ptr;
        d["col_idx"] = csr.col_idx;
        d["values"] = csr.values;
        return d;
    });
    m.def("matrix_market_system", [](const std::string& path, std::uint64_t seed) {
        return embed_real_solution(Matrix(read_matrix_market(path)), seed);
    });

    m.def("complete_graph", &complete_graph, py::arg("n"));
    m.def("barabasi_albert",
          [](std::size_t n_final, std::size_t n_initial, std::size_t per_step,
             std::uint64_t seed) {
              Philox rng(seed, 0);
              return barabasi_albert(n_final, n_initial, per_step, rng);
          },
          py::arg("n_final"), py::arg("n_initial") = 5,
          py::arg("edges_per_step") = 5, py::arg("seed") = 1);
    m.def("ac_system", [](const Graph& g, const std::vector<double>& values) {
        auto ac = ac_system(g, values);
        return py::make_tuple(std::move(ac.system), ac.x0);
    });

    m.def("kaczmarz_run",
          [](const LinearSystem& sys, const std::string& rule, long beta,
             const std::string& schedule, std::uint64_t seed, std::uint64_t stream,
             long max_iters, double error_tol_sq, double residual_tol_sq,
             long record_every, bool track_bound, long beta_initial,
             const std::vector<double>& x0) {
              Philox rng(seed, stream);
              RunOptions opt;
              opt.record_every = record_every;
              opt.track_bound = track_bound;
              opt.x0 = x0;
              const auto metrics = kaczmarz_run(
                  sys, make_rule(rule, schedule, beta, beta_initial),
                  make_stop(max_iters, error_tol_sq, residual_tol_sq), rng, opt);
              return metrics_to_dict(metrics);
          },
          py::arg("system"), py::arg("rule") = "skm-uniform", py::arg("beta") = 1,
          py::arg("schedule") = "fixed", py::arg("seed") = 1,
          py::arg("stream") = 1, py::arg("max_iters") = 1000,
          py::arg("error_tol_sq") = std::numeric_limits<double>::infinity(),
          py::arg("residual_tol_sq") = std::numeric_limits<double>::infinity(),
          py::arg("record_every") = 1, py::arg("track_bound") = false,
          py::arg("beta_initial") = 1,
          py::arg("x0") = std::vector<double>());

    m.def("cgls_run",
          [](const LinearSystem& sys, long max_iters, double error_tol_sq,
             double residual_tol_sq) {
              return metrics_to_dict(cgls_run(
                  sys, make_stop(max_iters, error_tol_sq, residual_tol_sq)));
          },
          py::arg("system"), py::arg("max_iters") = 1000,
          py::arg("error_tol_sq") = std::numeric_limits<double>::infinity(),
          py::arg("residual_tol_sq") = std::numeric_limits<double>::infinity());

    m.def("block_kaczmarz_step",
          [](const LinearSystem& sys, const std::vector<std::size_t>& tau,
             const std::vector<double>& x) {
              return block_kaczmarz_step(sys, tau, x);
          });

    m.def("dynamic_range_exact",
          [](const std::vector<double>& r, long beta) {
              return dynamic_range_exact(r, beta);
          },
          py::arg("residual"), py::arg("beta"));
    m.def("dynamic_range_mc",
          [](const std::vector<double>& r, long beta, long samples,
             std::uint64_t seed) {
              Philox rng(seed, 0);
              const auto est = dynamic_range_mc(r, beta, samples, rng);
              return py::make_tuple(est.estimate, est.ci_half_width);
          },
          py::arg("residual"), py::arg("beta"), py::arg("samples") = 10000,
          py::arg("seed") = 1);

    m.def("generalized_marginals",
          [](const std::vector<double>& r, const std::vector<double>& norms_sq,
             long beta) {
              return generalized_marginals(rank_residuals(r), norms_sq, beta);
          },
          py::arg("residual"), py::arg("row_norms_sq"), py::arg("beta"));

    m.def("gamma_lower_bound",
          [](const LinearSystem& sys, const std::vector<double>& x, long beta) {
              return gamma_lower_bound(sys, x, beta);
          });
    m.def("contraction_thm2",
          [](const LinearSystem& sys, const std::vector<double>& x, long beta) {
              const auto f = contraction_thm2(sys, x, beta);
              return py::make_tuple(f.value, f.converged);
          });
    m.def("mm_factors", [](double sigma_min_sq, double gamma) {
        return mm_factors(sigma_min_sq, gamma);
    });
    m.def("bound_curve",
          [](const std::vector<double>& factors, double e0_sq) {
              return bound_curve(factors, e0_sq);
          });
    m.def("gaussian_gamma_bound", &gaussian_gamma_bound, py::arg("m"),
          py::arg("m_prime"), py::arg("beta"), py::arg("n"),
          py::arg("extra_norms_sq_over_var") = 0.0);
    m.def("incidence_gamma_bound",
          [](const std::vector<double>& diffs, long beta) {
              return incidence_gamma_bound(diffs, beta);
          });

    m.attr("__version__") = "0.1.0";
}
