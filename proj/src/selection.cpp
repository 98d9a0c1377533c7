#include "skm/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace skm {

double log_binomial(double n, double k) {
    if (k < 0.0 || k > n) return -std::numeric_limits<double>::infinity();
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

unsigned long long binomial_exact(unsigned n, unsigned k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    unsigned long long c = 1;
    for (unsigned i = 1; i <= k; ++i) {
        const unsigned long long num = n - k + i;
        if (c > std::numeric_limits<unsigned long long>::max() / num)
            throw std::overflow_error("binomial_exact: overflow");
        c = c * num / i;
    }
    return c;
}

RankedResidual rank_residuals(std::span<const double> r) {
    if (r.empty()) throw std::invalid_argument("rank_residuals: empty residual");
    RankedResidual out;
    const std::size_t m = r.size();
    out.sq.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        if (std::isnan(r[i])) throw std::invalid_argument("rank_residuals: NaN entry");
        out.sq[i] = r[i] * r[i];
    }
    out.order.resize(m);
    std::iota(out.order.begin(), out.order.end(), std::size_t{0});
    std::sort(out.order.begin(), out.order.end(),
              [&](std::size_t a, std::size_t b) {
                  return out.sq[a] != out.sq[b] ? out.sq[a] < out.sq[b] : a < b;
              });
    out.rank.resize(m);
    for (std::size_t p = 0; p < m; ++p) out.rank[out.order[p]] = p + 1;
    return out;
}

double ArgmaxWeights::weight(std::size_t i) const {
    return std::exp(log_w[i]);
}

ArgmaxWeights argmax_weights(const RankedResidual& ranked, long beta) {
    const std::size_t m = ranked.size();
    if (beta < 1 || static_cast<std::size_t>(beta) > m)
        throw std::invalid_argument("argmax_weights: beta out of range");
    ArgmaxWeights w;
    w.beta = beta;
    w.log_w.resize(m);
    const double log_cm1 = log_binomial(static_cast<double>(m - 1),
                                        static_cast<double>(beta - 1));
    for (std::size_t i = 0; i < m; ++i) {
        const double rk = static_cast<double>(ranked.rank[i]);
        w.log_w[i] = log_binomial(rk - 1.0, static_cast<double>(beta - 1)) - log_cm1;
    }
    return w;
}

std::size_t rk_sample(std::span<const double> row_norms_sq, Philox& rng) {
    double total = 0.0;
    for (double v : row_norms_sq) total += v;
    const double target = rng.next_double() * total;
    double cum = 0.0;
    for (std::size_t i = 0; i < row_norms_sq.size(); ++i) {
        cum += row_norms_sq[i];
        if (target < cum) return i;
    }
    return row_norms_sq.size() - 1;
}

void sample_uniform_subset_into(std::vector<std::size_t>& pool, long beta,
                                Philox& rng, std::vector<std::size_t>& out) {
    const std::size_t m = pool.size();
    if (beta < 1 || static_cast<std::size_t>(beta) > m)
        throw std::invalid_argument("sample_uniform_subset: beta out of range");
    const std::size_t b = static_cast<std::size_t>(beta);
    out.resize(b);
    std::vector<std::size_t> js(b);
    for (std::size_t i = 0; i < b; ++i) {
        const std::size_t j = i + rng.next_below(m - i);
        js[i] = j;
        std::swap(pool[i], pool[j]);
        out[i] = pool[i];
    }
    // undo the swaps so the pool stays the identity permutation
    for (std::size_t i = b; i-- > 0;) std::swap(pool[i], pool[js[i]]);
}

std::vector<std::size_t> sample_uniform_subset(std::size_t m, long beta,
                                               Philox& rng) {
    std::vector<std::size_t> pool(m);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    std::vector<std::size_t> out;
    sample_uniform_subset_into(pool, beta, rng, out);
    return out;
}

std::size_t select_skm(const RankedResidual& ranked,
                       std::span<const std::size_t> tau) {
    if (tau.empty()) throw std::invalid_argument("select_skm: empty sample");
    std::size_t best = tau[0];
    for (std::size_t idx : tau)
        if (ranked.rank[idx] > ranked.rank[best]) best = idx;
    return best;
}

std::vector<double> generalized_marginals(const RankedResidual& ranked,
                                          std::span<const double> row_norms_sq,
                                          long beta) {
    const std::size_t m = ranked.size();
    if (row_norms_sq.size() != m)
        throw std::invalid_argument("generalized_marginals: size mismatch");
    const ArgmaxWeights w = argmax_weights(ranked, beta);
    std::vector<double> logp(m);
    double maxlog = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
        logp[i] = std::log(row_norms_sq[i]) + w.log_w[i];
        maxlog = std::max(maxlog, logp[i]);
    }
    double z = 0.0;
    for (std::size_t i = 0; i < m; ++i) z += std::exp(logp[i] - maxlog);
    const double logz = maxlog + std::log(z);
    std::vector<double> p(m);
    for (std::size_t i = 0; i < m; ++i)
        p[i] = std::isinf(logp[i]) ? 0.0 : std::exp(logp[i] - logz);
    return p;
}

std::size_t categorical_sample(std::span<const double> probs, Philox& rng) {
    const double u = rng.next_double();
    double cum = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] > 0.0) last_positive = i;
        cum += probs[i];
        if (u < cum) return i;
    }
    return last_positive;
}

SubsetEnumerator::SubsetEnumerator(std::size_t m, long beta) : m_(m) {
    if (beta < 1 || static_cast<std::size_t>(beta) > m)
        throw std::invalid_argument("SubsetEnumerator: beta out of range");
    beta_ = static_cast<std::size_t>(beta);
    const double count = std::exp(log_binomial(static_cast<double>(m),
                                               static_cast<double>(beta)));
    if (count > 1e6)
        throw std::invalid_argument(
            "SubsetEnumerator: C(m, beta) exceeds 10^6 subsets; enumeration refused");
    current_.resize(beta_);
    std::iota(current_.begin(), current_.end(), std::size_t{0});
}

bool SubsetEnumerator::next(std::vector<std::size_t>& out) {
    if (done_) return false;
    if (first_) {
        first_ = false;
        out = current_;
        return true;
    }
    // advance to the next lexicographic combination
    std::size_t i = beta_;
    while (i-- > 0) {
        if (current_[i] != i + m_ - beta_) {
            ++current_[i];
            for (std::size_t j = i + 1; j < beta_; ++j)
                current_[j] = current_[j - 1] + 1;
            out = current_;
            return true;
        }
    }
    done_ = true;
    return false;
}

}  // namespace skm
