#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skm/linear_system.hpp"
#include "skm/solvers.hpp"

namespace skm {

/// Reads a MatrixMarket exchange file (coordinate or array; real, integer or
/// pattern; general, symmetric or skew-symmetric). One-based indices become
/// zero-based, duplicates are summed, explicit zeros dropped.
SparseMatrixCSR read_matrix_market(const std::string& path);

/// Header iteration,beta,error_sq,residual_sq,flops,elapsed_s,bound with one
/// row per record, 17 significant digits.
void write_metrics_csv(const RunMetrics& metrics, const std::string& path);

/// Inverse of write_metrics_csv (status fields are not serialized).
RunMetrics read_metrics_csv(const std::string& path);

/// Per-iteration arithmetic mean across trials, truncated to the shortest.
RunMetrics mean_metrics(const std::vector<RunMetrics>& trials);

/// Consistent system with a planted solution in range(A^T): draw z standard
/// normal (seeded), x* = A^T z normalized to unit norm, b = A x*.
LinearSystem embed_real_solution(Matrix matrix, std::uint64_t seed);

}  // namespace skm
