#pragma once

#include <optional>
#include <span>
#include <vector>

#include "skm/matrix.hpp"

namespace skm {

/// A consistent linear system together with the reference point runs
/// measure error against. Zero rows are rejected at construction.
struct LinearSystem {
    Matrix matrix;
    std::vector<double> rhs;
    std::vector<double> row_norms_sq;
    std::vector<double> x_ref;
    bool consistent = true;

    std::size_t rows() const { return matrix.rows(); }
    std::size_t cols() const { return matrix.cols(); }
};

/// Builds a LinearSystem, caching row norms and validating invariants.
/// When x_ref is absent it is computed as the minimum-norm solution.
LinearSystem make_system(Matrix matrix, std::vector<double> rhs,
                         std::optional<std::vector<double>> x_ref = std::nullopt,
                         bool consistent = true);

std::vector<double> row_norms_sq(const Matrix& matrix);

/// A x - b
std::vector<double> residual(const Matrix& matrix, std::span<const double> x,
                             std::span<const double> b);

/// Orthogonal projection of x onto the hyperplane a . y = b_i.
std::vector<double> project_row(std::span<const double> x,
                                std::span<const double> a, double b_i,
                                double norm_sq_i);

/// In-place projection onto the hyperplane of the system's row i.
void project_row_inplace(const LinearSystem& sys, std::size_t i,
                         std::span<double> x);

/// Default relative rank cutoff: max(m, n) * machine epsilon.
double default_rank_tol(std::size_t rows, std::size_t cols);

/// Smallest nonzero singular value, where "nonzero" means exceeding
/// rank_tol * sigma_max. Computed from the n x n Gram matrix A^T A.
double sigma_min_nz(const Matrix& matrix, double rank_tol = -1.0);

/// Projection of x0 onto the solution set: x0 + A^+(b - A x0). With x0 = 0
/// this is the minimum-norm solution. Throws if the system is inconsistent.
std::vector<double> fixed_point(const LinearSystem& sys,
                                std::span<const double> x0);

/// Each row and rhs entry divided by the row norm; solution set unchanged.
LinearSystem normalize_rows(const LinearSystem& sys);

}  // namespace skm
