#include "skm/linear_system.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace skm {

namespace {

double norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

/// n x n Gram matrix A^T A, accumulated row by row.
Eigen::MatrixXd gram(const Matrix& a) {
    const std::size_t m = a.rows(), n = a.cols();
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                              static_cast<Eigen::Index>(n));
    if (a.is_dense()) {
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                       Eigen::RowMajor>>
            map(a.dense().entries.data(), static_cast<Eigen::Index>(m),
                static_cast<Eigen::Index>(n));
        g.selfadjointView<Eigen::Lower>().rankUpdate(map.transpose());
        g = g.selfadjointView<Eigen::Lower>();
    } else {
        const auto& sp = a.sparse();
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t p = sp.row_ptr[i]; p < sp.row_ptr[i + 1]; ++p)
                for (std::size_t q = sp.row_ptr[i]; q < sp.row_ptr[i + 1]; ++q)
                    g(static_cast<Eigen::Index>(sp.col_idx[p]),
                      static_cast<Eigen::Index>(sp.col_idx[q])) +=
                        sp.values[p] * sp.values[q];
        }
    }
    return g;
}

struct GramEigen {
    Eigen::MatrixXd vectors;
    Eigen::VectorXd values;  // ascending, clamped at 0
};

GramEigen gram_eigen(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram(a));
    if (es.info() != Eigen::Success)
        throw std::runtime_error("sigma_min_nz: eigendecomposition failed");
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
    return {es.eigenvectors(), std::move(ev)};
}

}  // namespace

double default_rank_tol(std::size_t rows, std::size_t cols) {
    return static_cast<double>(std::max(rows, cols)) *
           std::numeric_limits<double>::epsilon();
}

std::vector<double> row_norms_sq(const Matrix& matrix) {
    std::vector<double> out(matrix.rows());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = matrix.row_norm_sq(i);
    return out;
}

std::vector<double> residual(const Matrix& matrix, std::span<const double> x,
                             std::span<const double> b) {
    if (x.size() != matrix.cols() || b.size() != matrix.rows())
        throw std::invalid_argument("residual: dimension mismatch");
    std::vector<double> r(matrix.rows());
    matrix.apply(x, r);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
    return r;
}

std::vector<double> project_row(std::span<const double> x,
                                std::span<const double> a, double b_i,
                                double norm_sq_i) {
    if (norm_sq_i <= 0.0)
        throw std::invalid_argument("project_row: row norm must be positive");
    if (x.size() != a.size())
        throw std::invalid_argument("project_row: dimension mismatch");
    double dot = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) dot += a[j] * x[j];
    const double step = (b_i - dot) / norm_sq_i;
    std::vector<double> out(x.begin(), x.end());
    for (std::size_t j = 0; j < x.size(); ++j) out[j] += step * a[j];
    return out;
}

void project_row_inplace(const LinearSystem& sys, std::size_t i,
                         std::span<double> x) {
    const double step =
        (sys.rhs[i] - sys.matrix.row_dot(i, x)) / sys.row_norms_sq[i];
    sys.matrix.row_axpy(i, step, x);
}

double sigma_min_nz(const Matrix& matrix, double rank_tol) {
    if (rank_tol < 0.0) rank_tol = default_rank_tol(matrix.rows(), matrix.cols());
    const GramEigen ge = gram_eigen(matrix);
    const double lam_max = ge.values(ge.values.size() - 1);
    if (lam_max <= 0.0) throw std::runtime_error("sigma_min_nz: zero matrix");
    const double cutoff_sq = rank_tol * rank_tol * lam_max;
    for (Eigen::Index i = 0; i < ge.values.size(); ++i)
        if (ge.values(i) > cutoff_sq) return std::sqrt(ge.values(i));
    throw std::runtime_error("sigma_min_nz: zero matrix");
}

std::vector<double> fixed_point(const LinearSystem& sys,
                                std::span<const double> x0) {
    const std::size_t m = sys.rows(), n = sys.cols();
    if (x0.size() != n) throw std::invalid_argument("fixed_point: x0 size mismatch");

    // A^+ y = (A^T A)^+ A^T y with the pseudoinverse taken on the Gram spectrum
    std::vector<double> y(m);
    sys.matrix.apply(x0, y);
    for (std::size_t i = 0; i < m; ++i) y[i] = sys.rhs[i] - y[i];
    std::vector<double> aty(n);
    sys.matrix.apply_transpose(y, aty);

    const GramEigen ge = gram_eigen(sys.matrix);
    const double lam_max = ge.values(ge.values.size() - 1);
    if (lam_max <= 0.0) throw std::runtime_error("fixed_point: zero matrix");
    const double tol = default_rank_tol(m, n);
    const double cutoff_sq = tol * tol * lam_max;

    Eigen::Map<const Eigen::VectorXd> g(aty.data(), static_cast<Eigen::Index>(n));
    Eigen::VectorXd coeffs = ge.vectors.transpose() * g;
    for (Eigen::Index i = 0; i < coeffs.size(); ++i)
        coeffs(i) = ge.values(i) > cutoff_sq ? coeffs(i) / ge.values(i) : 0.0;
    Eigen::VectorXd z = ge.vectors * coeffs;

    std::vector<double> out(x0.begin(), x0.end());
    for (std::size_t j = 0; j < n; ++j) out[j] += z(static_cast<Eigen::Index>(j));

    const auto r = residual(sys.matrix, out, sys.rhs);
    const double bn = norm(sys.rhs);
    if (norm(r) > 1e-6 * (1.0 + bn))
        throw std::runtime_error("fixed_point: system is inconsistent");
    return out;
}

LinearSystem make_system(Matrix matrix, std::vector<double> rhs,
                         std::optional<std::vector<double>> x_ref,
                         bool consistent) {
    if (rhs.size() != matrix.rows())
        throw std::invalid_argument("make_system: rhs length != rows");
    LinearSystem sys;
    sys.matrix = std::move(matrix);
    sys.rhs = std::move(rhs);
    sys.row_norms_sq = row_norms_sq(sys.matrix);
    for (std::size_t i = 0; i < sys.row_norms_sq.size(); ++i)
        if (!(sys.row_norms_sq[i] > 0.0))
            throw std::invalid_argument("make_system: zero row " + std::to_string(i));
    sys.consistent = consistent;
    if (x_ref) {
        if (x_ref->size() != sys.cols())
            throw std::invalid_argument("make_system: x_ref length != cols");
        sys.x_ref = std::move(*x_ref);
    } else {
        const std::vector<double> zero(sys.cols(), 0.0);
        sys.x_ref = fixed_point(sys, zero);
    }
    if (consistent) {
        const auto r = residual(sys.matrix, sys.x_ref, sys.rhs);
        if (norm(r) > 1e-8 * (1.0 + norm(sys.rhs)))
            throw std::invalid_argument("make_system: x_ref does not solve the system");
    }
    return sys;
}

LinearSystem normalize_rows(const LinearSystem& sys) {
    LinearSystem out = sys;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        const double nrm = std::sqrt(out.row_norms_sq[i]);
        out.matrix.scale_row(i, 1.0 / nrm);
        out.rhs[i] /= nrm;
        out.row_norms_sq[i] = out.matrix.row_norm_sq(i);
    }
    return out;
}

}  // namespace skm
