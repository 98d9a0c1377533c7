#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace skm {

/// Row-major dense matrix.
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> entries;  // rows * cols, row-major, all finite

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c)
        : rows(r), cols(c), entries(r * c, 0.0) {}
    DenseMatrix(std::size_t r, std::size_t c, std::vector<double> e);

    double& at(std::size_t i, std::size_t j) { return entries[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return entries[i * cols + j]; }
    std::span<const double> row(std::size_t i) const {
        return {entries.data() + i * cols, cols};
    }

    static DenseMatrix identity(std::size_t n);
};

/// Compressed sparse rows. Column indices are sorted and unique within each
/// row; stored values are finite and nonzero.
struct SparseMatrixCSR {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> row_ptr;  // rows + 1, nondecreasing, row_ptr[0] == 0
    std::vector<std::size_t> col_idx;
    std::vector<double> values;

    SparseMatrixCSR() = default;
    SparseMatrixCSR(std::size_t r, std::size_t c,
                    std::vector<std::size_t> rp,
                    std::vector<std::size_t> ci,
                    std::vector<double> v);

    std::size_t nnz() const { return values.size(); }
    std::size_t row_nnz(std::size_t i) const { return row_ptr[i + 1] - row_ptr[i]; }

    /// Build from (row, col, value) triples: duplicates summed, zeros dropped.
    static SparseMatrixCSR from_triples(std::size_t rows, std::size_t cols,
                                        std::vector<std::size_t> ri,
                                        std::vector<std::size_t> ci,
                                        std::vector<double> v);
};

/// Value-semantic wrapper over either storage format. Row-action solvers only
/// touch rows, so the interface is row-oriented.
class Matrix {
public:
    Matrix() : m_(DenseMatrix{}) {}
    Matrix(DenseMatrix d) : m_(std::move(d)) {}
    Matrix(SparseMatrixCSR s) : m_(std::move(s)) {}

    bool is_dense() const { return std::holds_alternative<DenseMatrix>(m_); }
    const DenseMatrix& dense() const { return std::get<DenseMatrix>(m_); }
    const SparseMatrixCSR& sparse() const { return std::get<SparseMatrixCSR>(m_); }

    std::size_t rows() const;
    std::size_t cols() const;
    std::size_t nnz() const;
    std::size_t row_nnz(std::size_t i) const;

    double row_dot(std::size_t i, std::span<const double> x) const;
    /// x += alpha * a_i
    void row_axpy(std::size_t i, double alpha, std::span<double> x) const;
    double row_norm_sq(std::size_t i) const;

    /// y = A x
    void apply(std::span<const double> x, std::span<double> y) const;
    /// y = A^T x
    void apply_transpose(std::span<const double> x, std::span<double> y) const;

    /// Scale row i (in place) by s.
    void scale_row(std::size_t i, double s);

    double frobenius_norm_sq() const;

private:
    std::variant<DenseMatrix, SparseMatrixCSR> m_;
};

}  // namespace skm
