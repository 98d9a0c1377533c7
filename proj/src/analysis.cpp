#include "skm/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace skm {

namespace {

bool all_zero(std::span<const double> r) {
    for (double v : r)
        if (v != 0.0) return false;
    return true;
}

}  // namespace

BoundTerms bound_terms(const RankedResidual& ranked,
                       std::span<const double> row_norms_sq, long beta) {
    const std::size_t m = ranked.size();
    const ArgmaxWeights w = argmax_weights(ranked, beta);
    double sum_sq = 0.0, weighted_sq = 0.0, weighted_norms = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double wi = w.weight(i);
        sum_sq += ranked.sq[i];
        weighted_sq += wi * ranked.sq[i];
        weighted_norms += wi * row_norms_sq[i];
    }
    BoundTerms out;
    out.gamma = sum_sq / weighted_sq;
    out.weighted_row_norm_sum = weighted_norms;
    return out;
}

double dynamic_range_exact(std::span<const double> r, long beta) {
    if (all_zero(r)) throw std::invalid_argument("dynamic_range_exact: zero residual");
    const RankedResidual ranked = rank_residuals(r);
    const ArgmaxWeights w = argmax_weights(ranked, beta);
    double sum_sq = 0.0, weighted_sq = 0.0;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        sum_sq += ranked.sq[i];
        weighted_sq += w.weight(i) * ranked.sq[i];
    }
    return sum_sq / weighted_sq;
}

McEstimate dynamic_range_mc(std::span<const double> r, long beta,
                            long n_samples, Philox& rng) {
    if (n_samples < 100)
        throw std::invalid_argument("dynamic_range_mc: need at least 100 samples");
    const std::size_t m = r.size();
    std::vector<double> sq(m);
    for (std::size_t i = 0; i < m; ++i) sq[i] = r[i] * r[i];

    std::vector<std::size_t> pool(m), tau;
    std::iota(pool.begin(), pool.end(), std::size_t{0});

    // ratio of sample means, CI by the delta method
    double su = 0.0, sv = 0.0, suu = 0.0, svv = 0.0, suv = 0.0;
    const double n = static_cast<double>(n_samples);
    for (long s = 0; s < n_samples; ++s) {
        sample_uniform_subset_into(pool, beta, rng, tau);
        double u = 0.0, v = 0.0;
        for (std::size_t idx : tau) {
            u += sq[idx];
            v = std::max(v, sq[idx]);
        }
        su += u;
        sv += v;
        suu += u * u;
        svv += v * v;
        suv += u * v;
    }
    const double mu = su / n, mv = sv / n;
    if (mv == 0.0) throw std::invalid_argument("dynamic_range_mc: zero residual");
    McEstimate out;
    out.estimate = mu / mv;
    const double var_u = std::max(0.0, suu / n - mu * mu);
    const double var_v = std::max(0.0, svv / n - mv * mv);
    const double cov = suv / n - mu * mv;
    const double var_ratio =
        (var_u - 2.0 * out.estimate * cov + out.estimate * out.estimate * var_v) /
        (mv * mv * n);
    out.ci_half_width = 1.96 * std::sqrt(std::max(0.0, var_ratio));
    return out;
}

double gamma_lower_bound(const LinearSystem& sys, std::span<const double> x,
                         long beta) {
    const auto r = residual(sys.matrix, x, sys.rhs);
    if (all_zero(r)) throw std::invalid_argument("gamma_lower_bound: zero residual");
    const RankedResidual ranked = rank_residuals(r);
    const BoundTerms t = bound_terms(ranked, sys.row_norms_sq, beta);
    const double s2 = sigma_min_nz(sys.matrix);
    return s2 / t.weighted_row_norm_sum;
}

ContractionFactor contraction_thm2(const LinearSystem& sys,
                                   std::span<const double> x, long beta) {
    const auto r = residual(sys.matrix, x, sys.rhs);
    ContractionFactor f;
    f.formula = Formula::Thm2;
    if (all_zero(r)) {
        f.converged = true;
        return f;
    }
    const RankedResidual ranked = rank_residuals(r);
    const BoundTerms t = bound_terms(ranked, sys.row_norms_sq, beta);
    const double s2 = sigma_min_nz(sys.matrix);
    f.value = 1.0 - s2 / (t.gamma * t.weighted_row_norm_sum);
    return f;
}

ContractionFactor contraction_cor3(const LinearSystem& sys,
                                   std::span<const double> x, long beta,
                                   double epsilon) {
    if (epsilon < 0.0) {
        const auto [mn, mx] = std::minmax_element(sys.row_norms_sq.begin(),
                                                  sys.row_norms_sq.end());
        epsilon = *mn / *mx;
    }
    if (epsilon <= 0.0 || epsilon > 1.0)
        throw std::invalid_argument("contraction_cor3: epsilon must be in (0, 1]");
    ContractionFactor f = contraction_thm2(sys, x, beta);
    f.formula = Formula::Cor3;
    if (!f.converged) f.value = 1.0 - epsilon * (1.0 - f.value);
    return f;
}

double contraction_cor1(double sigma_min_sq, double gamma, long beta,
                        std::size_t m) {
    return 1.0 - static_cast<double>(beta) * sigma_min_sq /
                     (gamma * static_cast<double>(m));
}

std::pair<double, double> mm_factors(double sigma_min_sq, double gamma) {
    return {1.0 - sigma_min_sq / gamma, 1.0 - sigma_min_sq / (4.0 * gamma)};
}

std::vector<double> bound_curve(std::span<const double> factors, double e0_sq) {
    std::vector<double> out;
    out.reserve(factors.size());
    double prod = e0_sq;
    for (double f : factors) {
        if (!(f > 0.0) || f > 1.0)
            throw std::invalid_argument("bound_curve: factor outside (0, 1]");
        prod *= f;
        out.push_back(prod);
    }
    return out;
}

double gaussian_gamma_bound(std::size_t m, std::size_t m_prime, long beta,
                            std::size_t n, double extra_norms_sq_over_var) {
    if (beta < 2)
        throw std::invalid_argument("gaussian_gamma_bound: beta must be >= 2");
    if (m_prime > m)
        throw std::invalid_argument("gaussian_gamma_bound: m' must be <= m");
    const double b = static_cast<double>(beta);
    const double log_ratio =
        log_binomial(static_cast<double>(m), b) -
        log_binomial(static_cast<double>(m_prime), b);
    return std::exp(log_ratio) *
           (b * static_cast<double>(n) + extra_norms_sq_over_var) / std::log(b);
}

std::vector<double> conjectured_gauss_curve(std::span<const long> betas,
                                            double scale_c) {
    std::vector<double> out;
    out.reserve(betas.size());
    for (long b : betas) {
        if (b < 2)
            throw std::invalid_argument("conjectured_gauss_curve: beta must be >= 2");
        const double bd = static_cast<double>(b);
        out.push_back(scale_c * bd / std::log(bd));
    }
    return out;
}

double calibrate_conjectured_c(std::span<const long> betas,
                               std::span<const double> gammas) {
    if (betas.size() != gammas.size() || betas.empty())
        throw std::invalid_argument("calibrate_conjectured_c: size mismatch");
    std::size_t best = betas.size();
    for (std::size_t i = 0; i < betas.size(); ++i)
        if (betas[i] >= 2 && (best == betas.size() || betas[i] < betas[best]))
            best = i;
    if (best == betas.size())
        throw std::invalid_argument("calibrate_conjectured_c: no beta >= 2");
    const double b = static_cast<double>(betas[best]);
    return gammas[best] * std::log(b) / b;
}

double incidence_gamma_bound(std::span<const double> edge_differences,
                             long beta) {
    const std::size_t m = edge_differences.size();
    if (beta < 1 || static_cast<std::size_t>(beta) > m)
        throw std::invalid_argument("incidence_gamma_bound: beta out of range");
    std::vector<double> d2(m);
    for (std::size_t i = 0; i < m; ++i)
        d2[i] = edge_differences[i] * edge_differences[i];
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    // same frozen tie order as residual ranking: (value, index) ascending
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return d2[a] != d2[b] ? d2[a] < d2[b] : a < b;
    });
    double total = 0.0;
    for (double v : d2) total += v;
    double tail = 0.0;
    for (std::size_t p = static_cast<std::size_t>(beta) - 1; p < m; ++p)
        tail += d2[order[p]];
    if (tail == 0.0)
        throw std::invalid_argument("incidence_gamma_bound: top differences are all zero");
    const double bd = static_cast<double>(beta);
    const double md = static_cast<double>(m);
    return bd * (md - bd + 1.0) * total / (md * tail);
}

}  // namespace skm
