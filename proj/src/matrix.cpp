#include "skm/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace skm {

DenseMatrix::DenseMatrix(std::size_t r, std::size_t c, std::vector<double> e)
    : rows(r), cols(c), entries(std::move(e)) {
    if (entries.size() != rows * cols)
        throw std::invalid_argument("DenseMatrix: entries size != rows*cols");
    for (double v : entries)
        if (!std::isfinite(v))
            throw std::invalid_argument("DenseMatrix: nonfinite entry");
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

SparseMatrixCSR::SparseMatrixCSR(std::size_t r, std::size_t c,
                                 std::vector<std::size_t> rp,
                                 std::vector<std::size_t> ci,
                                 std::vector<double> v)
    : rows(r), cols(c), row_ptr(std::move(rp)), col_idx(std::move(ci)),
      values(std::move(v)) {
    if (row_ptr.size() != rows + 1)
        throw std::invalid_argument("SparseMatrixCSR: row_ptr size != rows+1");
    if (row_ptr.front() != 0)
        throw std::invalid_argument("SparseMatrixCSR: row_ptr[0] != 0");
    if (row_ptr.back() != values.size() || col_idx.size() != values.size())
        throw std::invalid_argument("SparseMatrixCSR: index/value length mismatch");
    for (std::size_t i = 0; i < rows; ++i) {
        if (row_ptr[i + 1] < row_ptr[i])
            throw std::invalid_argument("SparseMatrixCSR: row_ptr not nondecreasing");
        for (std::size_t p = row_ptr[i]; p + 1 < row_ptr[i + 1]; ++p)
            if (col_idx[p] >= col_idx[p + 1])
                throw std::invalid_argument("SparseMatrixCSR: column indices not strictly increasing");
    }
    for (std::size_t p = 0; p < values.size(); ++p) {
        if (col_idx[p] >= cols)
            throw std::invalid_argument("SparseMatrixCSR: column index out of range");
        if (!std::isfinite(values[p]) || values[p] == 0.0)
            throw std::invalid_argument("SparseMatrixCSR: stored values must be finite and nonzero");
    }
}

SparseMatrixCSR SparseMatrixCSR::from_triples(std::size_t rows, std::size_t cols,
                                              std::vector<std::size_t> ri,
                                              std::vector<std::size_t> ci,
                                              std::vector<double> v) {
    if (ri.size() != ci.size() || ri.size() != v.size())
        throw std::invalid_argument("from_triples: triple arrays differ in length");
    const std::size_t n = ri.size();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
        return ri[a] != ri[b] ? ri[a] < ri[b] : ci[a] < ci[b];
    });

    std::vector<std::size_t> rp(rows + 1, 0), cc;
    std::vector<double> vv;
    cc.reserve(n);
    vv.reserve(n);
    std::size_t last_row = rows;  // sentinel: no previous entry
    for (std::size_t p = 0; p < n; ++p) {
        const std::size_t t = perm[p];
        if (ri[t] >= rows || ci[t] >= cols)
            throw std::invalid_argument("from_triples: index out of range");
        if (!vv.empty() && last_row == ri[t] && cc.back() == ci[t]) {
            vv.back() += v[t];  // duplicate coordinate: sum
        } else {
            cc.push_back(ci[t]);
            vv.push_back(v[t]);
            ++rp[ri[t] + 1];
            last_row = ri[t];
        }
    }
    // drop entries that are exactly zero (including duplicate cancellation)
    std::vector<std::size_t> rp2(rows + 1, 0), cc2;
    std::vector<double> vv2;
    cc2.reserve(vv.size());
    vv2.reserve(vv.size());
    std::size_t p = 0;
    for (std::size_t i = 0; i < rows; ++i) {
        const std::size_t end = p + rp[i + 1];
        for (; p < end; ++p) {
            if (vv[p] != 0.0) {
                cc2.push_back(cc[p]);
                vv2.push_back(vv[p]);
                ++rp2[i + 1];
            }
        }
    }
    for (std::size_t i = 0; i < rows; ++i) rp2[i + 1] += rp2[i];
    return SparseMatrixCSR(rows, cols, std::move(rp2), std::move(cc2), std::move(vv2));
}

std::size_t Matrix::rows() const {
    return is_dense() ? dense().rows : sparse().rows;
}

std::size_t Matrix::cols() const {
    return is_dense() ? dense().cols : sparse().cols;
}

std::size_t Matrix::nnz() const {
    return is_dense() ? dense().rows * dense().cols : sparse().nnz();
}

std::size_t Matrix::row_nnz(std::size_t i) const {
    return is_dense() ? dense().cols : sparse().row_nnz(i);
}

double Matrix::row_dot(std::size_t i, std::span<const double> x) const {
    double s = 0.0;
    if (is_dense()) {
        const auto r = dense().row(i);
        for (std::size_t j = 0; j < r.size(); ++j) s += r[j] * x[j];
    } else {
        const auto& sp = sparse();
        for (std::size_t p = sp.row_ptr[i]; p < sp.row_ptr[i + 1]; ++p)
            s += sp.values[p] * x[sp.col_idx[p]];
    }
    return s;
}

void Matrix::row_axpy(std::size_t i, double alpha, std::span<double> x) const {
    if (is_dense()) {
        const auto r = dense().row(i);
        for (std::size_t j = 0; j < r.size(); ++j) x[j] += alpha * r[j];
    } else {
        const auto& sp = sparse();
        for (std::size_t p = sp.row_ptr[i]; p < sp.row_ptr[i + 1]; ++p)
            x[sp.col_idx[p]] += alpha * sp.values[p];
    }
}

double Matrix::row_norm_sq(std::size_t i) const {
    double s = 0.0;
    if (is_dense()) {
        const auto r = dense().row(i);
        for (double v : r) s += v * v;
    } else {
        const auto& sp = sparse();
        for (std::size_t p = sp.row_ptr[i]; p < sp.row_ptr[i + 1]; ++p)
            s += sp.values[p] * sp.values[p];
    }
    return s;
}

void Matrix::apply(std::span<const double> x, std::span<double> y) const {
    const std::size_t m = rows();
    for (std::size_t i = 0; i < m; ++i) y[i] = row_dot(i, x);
}

void Matrix::apply_transpose(std::span<const double> x, std::span<double> y) const {
    std::fill(y.begin(), y.end(), 0.0);
    const std::size_t m = rows();
    for (std::size_t i = 0; i < m; ++i) row_axpy(i, x[i], y);
}

void Matrix::scale_row(std::size_t i, double s) {
    if (is_dense()) {
        auto& d = std::get<DenseMatrix>(m_);
        for (std::size_t j = 0; j < d.cols; ++j) d.at(i, j) *= s;
    } else {
        auto& sp = std::get<SparseMatrixCSR>(m_);
        for (std::size_t p = sp.row_ptr[i]; p < sp.row_ptr[i + 1]; ++p)
            sp.values[p] *= s;
    }
}

double Matrix::frobenius_norm_sq() const {
    double s = 0.0;
    const std::size_t m = rows();
    for (std::size_t i = 0; i < m; ++i) s += row_norm_sq(i);
    return s;
}

}  // namespace skm
