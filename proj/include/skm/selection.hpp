#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "skm/rng.hpp"

namespace skm {

/// log C(n, k) via lgamma; exact enough for ratios of huge binomials.
double log_binomial(double n, double k);

/// Exact C(n, k) for small n (throws on overflow past 2^63).
unsigned long long binomial_exact(unsigned n, unsigned k);

/// Squared residual entries under the strict total order (r_i^2, i).
/// Ties rank the lower index lower, so the higher index wins an argmax.
struct RankedResidual {
    std::vector<double> sq;           // r_i^2
    std::vector<std::size_t> order;   // order[p] = row at ascending position p
    std::vector<std::size_t> rank;    // rank[i] in 1..m
    std::size_t size() const { return sq.size(); }
};

RankedResidual rank_residuals(std::span<const double> r);

/// Row i is the argmax of exactly C(rank_i - 1, beta - 1) of the C(m, beta)
/// subsets; log_w stores that count relative to C(m-1, beta-1).
struct ArgmaxWeights {
    std::vector<double> log_w;  // log C(rank-1, beta-1) - log C(m-1, beta-1)
    long beta = 1;

    double weight(std::size_t i) const;  // exp(log_w[i]), 0 when rank < beta
};

ArgmaxWeights argmax_weights(const RankedResidual& ranked, long beta);

/// Row index drawn with probability ||a_i||^2 / ||A||_F^2.
std::size_t rk_sample(std::span<const double> row_norms_sq, Philox& rng);

/// Uniform size-beta subset of [0, m) via partial Fisher-Yates shuffle.
std::vector<std::size_t> sample_uniform_subset(std::size_t m, long beta,
                                               Philox& rng);

/// Same draw sequence as sample_uniform_subset, but reusing a caller-owned
/// identity pool (restored before returning) and output buffer.
void sample_uniform_subset_into(std::vector<std::size_t>& pool, long beta,
                                Philox& rng, std::vector<std::size_t>& out);

/// The member of tau with maximal rank under the strict total order.
std::size_t select_skm(const RankedResidual& ranked,
                       std::span<const std::size_t> tau);

/// Row marginals of the iterate-dependent subset distribution:
/// P(t = i) proportional to ||a_i||^2 * C(rank_i - 1, beta - 1).
std::vector<double> generalized_marginals(const RankedResidual& ranked,
                                          std::span<const double> row_norms_sq,
                                          long beta);

/// Categorical draw from a probability vector (caller guarantees sum 1).
std::size_t categorical_sample(std::span<const double> probs, Philox& rng);

/// All size-beta subsets of [0, m) in lexicographic order.
/// Refuses instances with C(m, beta) > 10^6.
class SubsetEnumerator {
public:
    SubsetEnumerator(std::size_t m, long beta);
    /// Writes the next subset; returns false when exhausted.
    bool next(std::vector<std::size_t>& out);

private:
    std::size_t m_;
    std::size_t beta_;
    std::vector<std::size_t> current_;
    bool done_ = false;
    bool first_ = true;
};

}  // namespace skm
