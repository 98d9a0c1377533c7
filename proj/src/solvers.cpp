#include "skm/solvers.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "skm/analysis.hpp"
#include "skm/selection.hpp"

namespace skm {

BetaSchedule BetaSchedule::fixed(long beta) {
    BetaSchedule s;
    s.kind = Kind::Fixed;
    s.fixed_beta = beta;
    return s;
}

BetaSchedule BetaSchedule::slow_inc() {
    BetaSchedule s;
    s.kind = Kind::SlowInc;
    return s;
}

BetaSchedule BetaSchedule::rand_uniform() {
    BetaSchedule s;
    s.kind = Kind::RandUniform;
    return s;
}

BetaSchedule BetaSchedule::use_dyn_range(long initial_beta) {
    BetaSchedule s;
    s.kind = Kind::UseDynRng;
    s.initial_beta = initial_beta;
    return s;
}

SelectionRule SelectionRule::rk() {
    return {SelectionVariant::RK, BetaSchedule::fixed(1)};
}

SelectionRule SelectionRule::mm() {
    return {SelectionVariant::MM, BetaSchedule::fixed(kFullSampleBeta)};
}

SelectionRule SelectionRule::skm_uniform(BetaSchedule schedule) {
    return {SelectionVariant::SkmUniform, schedule};
}

SelectionRule SelectionRule::skm_exact(BetaSchedule schedule) {
    return {SelectionVariant::SkmExact, schedule};
}

namespace {

long clamp_beta(long beta, std::size_t m) {
    return std::max(1L, std::min(beta, static_cast<long>(m)));
}

double norm_sq(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

double diff_norm_sq(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

void validate_rule(const SelectionRule& rule, std::size_t m) {
    const BetaSchedule& s = rule.schedule;
    switch (rule.variant) {
        case SelectionVariant::RK:
            if (s.kind != BetaSchedule::Kind::Fixed || s.fixed_beta != 1)
                throw std::invalid_argument("kaczmarz_run: RK requires a fixed beta of 1");
            break;
        case SelectionVariant::MM:
            if (s.kind != BetaSchedule::Kind::Fixed ||
                (s.fixed_beta != kFullSampleBeta &&
                 s.fixed_beta != static_cast<long>(m)))
                throw std::invalid_argument("kaczmarz_run: MM requires a fixed beta of m");
            break;
        default:
            if (s.kind == BetaSchedule::Kind::Fixed &&
                s.fixed_beta != kFullSampleBeta &&
                (s.fixed_beta < 1 || s.fixed_beta > static_cast<long>(m)))
                throw std::invalid_argument("kaczmarz_run: fixed beta out of [1, m]");
            break;
    }
}

}  // namespace

long next_beta(const BetaSchedule& schedule, long k, std::size_t m,
               std::size_t n, const SubResidualStats& last, Philox& rng) {
    if (k < 1) throw std::invalid_argument("next_beta: k must be >= 1");
    switch (schedule.kind) {
        case BetaSchedule::Kind::Fixed:
            return clamp_beta(schedule.fixed_beta == kFullSampleBeta
                                  ? static_cast<long>(m)
                                  : schedule.fixed_beta,
                              m);
        case BetaSchedule::Kind::SlowInc:
            return clamp_beta(k, m);
        case BetaSchedule::Kind::RandUniform:
            return 1 + static_cast<long>(rng.next_below(m));
        case BetaSchedule::Kind::UseDynRng: {
            if (!last.valid || last.two_norm == 0.0)
                return clamp_beta(schedule.initial_beta, m);
            const double md = static_cast<double>(m);
            const double nd = static_cast<double>(n);
            const double est = md * last.inf_norm / (nd * last.two_norm);
            const double raw = schedule.raw_dyn_formula ? std::max(md, est) : est;
            return clamp_beta(static_cast<long>(std::ceil(raw)), m);
        }
    }
    throw std::logic_error("next_beta: unknown schedule");
}

double flops_of_iteration(SelectionVariant variant, long beta, std::size_t m,
                          std::size_t n, double nnz_sampled,
                          double nnz_selected) {
    const double projection = 2.0 * nnz_selected + static_cast<double>(n) + 2.0;
    switch (variant) {
        case SelectionVariant::RK:
        case SelectionVariant::SkmUniform:
        case SelectionVariant::MM:
            // sub-residual, argmax scan, projection (MM: beta = m, full residual)
            return 2.0 * nnz_sampled + static_cast<double>(beta) + projection;
        case SelectionVariant::SkmExact:
            // full residual plus the marginal-sampling overhead
            return 2.0 * nnz_sampled +
                   static_cast<double>(m) * std::log2(static_cast<double>(m)) +
                   5.0 * static_cast<double>(m) + projection;
    }
    throw std::logic_error("flops_of_iteration: unknown variant");
}

double flops_of_cgls_iteration(std::size_t m, std::size_t n, double nnz_total) {
    return 4.0 * nnz_total + 10.0 * static_cast<double>(n) +
           6.0 * static_cast<double>(m);
}

RunMetrics kaczmarz_run(const LinearSystem& sys, const SelectionRule& rule,
                        const StopCriteria& stop, Philox& rng,
                        const RunOptions& options) {
    const std::size_t m = sys.rows(), n = sys.cols();
    validate_rule(rule, m);
    if (stop.max_iterations < 0)
        throw std::invalid_argument("kaczmarz_run: negative iteration budget");
    if (!options.x0.empty() && options.x0.size() != n)
        throw std::invalid_argument("kaczmarz_run: x0 size mismatch");
    if (options.record_every < 1)
        throw std::invalid_argument("kaczmarz_run: record_every must be >= 1");

    std::vector<double> x =
        options.x0.empty() ? std::vector<double>(n, 0.0) : options.x0;

    RunMetrics metrics;
    metrics.seed = rng.seed();
    metrics.stream = rng.stream();

    const bool need_full_residual =
        rule.variant == SelectionVariant::MM ||
        rule.variant == SelectionVariant::SkmExact || options.track_bound;

    // instrumentation state (never charged to the cost model)
    double sigma_sq = 0.0;
    if (options.track_bound) sigma_sq = sigma_min_nz(sys.matrix);
    const double e0_sq = diff_norm_sq(x, sys.x_ref);
    double bound_prod = 1.0;
    double frobenius_sq = 0.0;
    for (double v : sys.row_norms_sq) frobenius_sq += v;

    std::vector<double> full_res(m);
    std::vector<std::size_t> pool(m), tau;
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    std::vector<double> sub_res;

    auto full_residual_sq = [&](std::span<const double> xs) {
        sys.matrix.apply(xs, full_res);
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            full_res[i] -= sys.rhs[i];
            s += full_res[i] * full_res[i];
        }
        return s;
    };

    const auto nan = std::numeric_limits<double>::quiet_NaN();
    double err_sq = e0_sq;
    double res_sq = full_residual_sq(x);
    metrics.records.push_back({0, 0, err_sq, res_sq, 0.0, 0.0, -1, nan,
                               options.track_bound ? e0_sq : nan});

    double flops = 0.0, elapsed = 0.0;
    SubResidualStats last_stats;
    TerminalStatus status = TerminalStatus::BudgetExhausted;
    long k = 0;
    // an infinite tolerance disables that criterion
    const bool check_error = std::isfinite(stop.error_tol_sq);
    const bool check_residual = std::isfinite(stop.residual_tol_sq);

    if ((check_error && err_sq <= stop.error_tol_sq) ||
        (check_residual && res_sq <= stop.residual_tol_sq)) {
        status = TerminalStatus::Converged;
    } else {
        for (k = 1; k <= stop.max_iterations; ++k) {
            // residual of the incoming iterate, for selection and the bound
            double bound_factor = nan;
            RankedResidual ranked;
            if (need_full_residual) {
                sys.matrix.apply(x, full_res);
                for (std::size_t i = 0; i < m; ++i) full_res[i] -= sys.rhs[i];
                ranked = rank_residuals(full_res);
            }

            const auto t_start = std::chrono::steady_clock::now();
            const long beta = next_beta(rule.schedule, k, m, n, last_stats, rng);

            std::size_t selected = 0;
            double nnz_sampled = 0.0;
            switch (rule.variant) {
                case SelectionVariant::RK: {
                    selected = rk_sample(sys.row_norms_sq, rng);
                    nnz_sampled = static_cast<double>(sys.matrix.row_nnz(selected));
                    const double rv =
                        sys.matrix.row_dot(selected, x) - sys.rhs[selected];
                    last_stats = {std::abs(rv), std::abs(rv), true};
                    break;
                }
                case SelectionVariant::MM: {
                    selected = ranked.order.back();
                    nnz_sampled = static_cast<double>(sys.matrix.nnz());
                    last_stats = {std::sqrt(ranked.sq[selected]),
                                  std::sqrt(norm_sq(full_res)), true};
                    break;
                }
                case SelectionVariant::SkmUniform: {
                    sample_uniform_subset_into(pool, beta, rng, tau);
                    sub_res.resize(tau.size());
                    double best_sq = -1.0;
                    double two = 0.0;
                    for (std::size_t p = 0; p < tau.size(); ++p) {
                        const std::size_t i = tau[p];
                        const double rv = sys.matrix.row_dot(i, x) - sys.rhs[i];
                        sub_res[p] = rv;
                        two += rv * rv;
                        nnz_sampled += static_cast<double>(sys.matrix.row_nnz(i));
                        const double rsq = rv * rv;
                        // frozen tie rule: (value, index), higher index wins
                        if (rsq > best_sq || (rsq == best_sq && i > selected)) {
                            best_sq = rsq;
                            selected = i;
                        }
                    }
                    last_stats = {std::sqrt(best_sq), std::sqrt(two), true};
                    break;
                }
                case SelectionVariant::SkmExact: {
                    const auto probs =
                        generalized_marginals(ranked, sys.row_norms_sq, beta);
                    selected = categorical_sample(probs, rng);
                    nnz_sampled = static_cast<double>(sys.matrix.nnz());
                    last_stats = {std::sqrt(ranked.sq[ranked.order.back()]),
                                  std::sqrt(norm_sq(full_res)), true};
                    break;
                }
            }

            project_row_inplace(sys, selected, x);
            const auto t_end = std::chrono::steady_clock::now();
            elapsed += std::chrono::duration<double>(t_end - t_start).count();

            flops += flops_of_iteration(
                rule.variant, beta, m, n, nnz_sampled,
                static_cast<double>(sys.matrix.row_nnz(selected)));

            if (options.track_bound) {
                if (beta == 1) {
                    // gamma = 1 and sum_i w_i ||a_i||^2 = ||A||_F^2
                    bound_factor = 1.0 - sigma_sq / frobenius_sq;
                } else {
                    const BoundTerms bt =
                        bound_terms(ranked, sys.row_norms_sq, beta);
                    bound_factor =
                        1.0 - sigma_sq / (bt.gamma * bt.weighted_row_norm_sum);
                }
                bound_prod *= bound_factor;
            }

            err_sq = diff_norm_sq(x, sys.x_ref);
            if (check_residual) res_sq = full_residual_sq(x);
            const bool converged =
                (check_error && err_sq <= stop.error_tol_sq) ||
                (check_residual && res_sq <= stop.residual_tol_sq);
            const bool record = (k % options.record_every == 0) || converged ||
                                k == stop.max_iterations;
            if (record) {
                if (!check_residual) res_sq = full_residual_sq(x);
                metrics.records.push_back(
                    {k, beta, err_sq, res_sq, flops, elapsed,
                     static_cast<long>(selected), bound_factor,
                     options.track_bound ? bound_prod * e0_sq : nan});
            }
            if (converged) {
                status = TerminalStatus::Converged;
                break;
            }
        }
        if (k > stop.max_iterations) k = stop.max_iterations;
    }

    metrics.status = status;
    metrics.iterations = k;
    metrics.final_error_sq = err_sq;
    metrics.final_residual_sq = res_sq;
    metrics.total_flops = flops;
    metrics.elapsed_s = elapsed;
    return metrics;
}

std::vector<double> block_kaczmarz_step(const LinearSystem& sys,
                                        std::span<const std::size_t> tau,
                                        std::span<const double> x) {
    if (tau.empty()) throw std::invalid_argument("block_kaczmarz_step: empty block");
    const std::size_t n = sys.cols();
    Eigen::MatrixXd block = Eigen::MatrixXd::Zero(
        static_cast<Eigen::Index>(tau.size()), static_cast<Eigen::Index>(n));
    Eigen::VectorXd d(static_cast<Eigen::Index>(tau.size()));
    for (std::size_t p = 0; p < tau.size(); ++p) {
        const std::size_t i = tau[p];
        if (sys.matrix.is_dense()) {
            const auto row = sys.matrix.dense().row(i);
            for (std::size_t j = 0; j < n; ++j)
                block(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(j)) =
                    row[j];
        } else {
            const auto& sp = sys.matrix.sparse();
            for (std::size_t q = sp.row_ptr[i]; q < sp.row_ptr[i + 1]; ++q)
                block(static_cast<Eigen::Index>(p),
                      static_cast<Eigen::Index>(sp.col_idx[q])) = sp.values[q];
        }
        d(static_cast<Eigen::Index>(p)) = sys.rhs[i] - sys.matrix.row_dot(i, x);
    }

    // minimum-norm least-squares correction = (A_tau)^+ d
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(block);
    Eigen::VectorXd z = cod.solve(d);

    std::vector<double> out(x.begin(), x.end());
    for (std::size_t j = 0; j < n; ++j) out[j] += z(static_cast<Eigen::Index>(j));

    double bmax = 0.0;
    for (std::size_t i : tau) bmax = std::max(bmax, std::abs(sys.rhs[i]));
    for (std::size_t i : tau) {
        const double r = sys.matrix.row_dot(i, out) - sys.rhs[i];
        if (std::abs(r) > 1e-10 * (1.0 + bmax))
            throw std::runtime_error("block_kaczmarz_step: inconsistent block");
    }
    return out;
}

RunMetrics cgls_run(const LinearSystem& sys, const StopCriteria& stop,
                    const RunOptions& options) {
    const std::size_t m = sys.rows(), n = sys.cols();
    if (!options.x0.empty() && options.x0.size() != n)
        throw std::invalid_argument("cgls_run: x0 size mismatch");
    if (options.record_every < 1)
        throw std::invalid_argument("cgls_run: record_every must be >= 1");

    std::vector<double> x =
        options.x0.empty() ? std::vector<double>(n, 0.0) : options.x0;

    RunMetrics metrics;
    std::vector<double> r(m), s(n), p(n), q(m);

    sys.matrix.apply(x, r);
    for (std::size_t i = 0; i < m; ++i) r[i] = sys.rhs[i] - r[i];
    sys.matrix.apply_transpose(r, s);
    p = s;
    double gamma = norm_sq(s);

    const auto nan = std::numeric_limits<double>::quiet_NaN();
    double err_sq = diff_norm_sq(x, sys.x_ref);
    double res_sq = norm_sq(r);
    metrics.records.push_back({0, 0, err_sq, res_sq, 0.0, 0.0, -1, nan, nan});

    double flops = 0.0, elapsed = 0.0;
    TerminalStatus status = TerminalStatus::BudgetExhausted;
    long k = 0;
    const bool check_error = std::isfinite(stop.error_tol_sq);
    const bool check_residual = std::isfinite(stop.residual_tol_sq);

    if ((check_error && err_sq <= stop.error_tol_sq) ||
        (check_residual && res_sq <= stop.residual_tol_sq)) {
        status = TerminalStatus::Converged;
    } else {
        for (k = 1; k <= stop.max_iterations; ++k) {
            const auto t_start = std::chrono::steady_clock::now();
            if (gamma == 0.0) {  // normal-equations stationary point
                status = TerminalStatus::Converged;
                --k;
                break;
            }
            sys.matrix.apply(p, q);
            const double qq = norm_sq(q);
            if (qq == 0.0) {
                status = TerminalStatus::Converged;
                --k;
                break;
            }
            const double alpha = gamma / qq;
            for (std::size_t j = 0; j < n; ++j) x[j] += alpha * p[j];
            for (std::size_t i = 0; i < m; ++i) r[i] -= alpha * q[i];
            sys.matrix.apply_transpose(r, s);
            const double gamma_new = norm_sq(s);
            const double beta_cg = gamma_new / gamma;
            for (std::size_t j = 0; j < n; ++j) p[j] = s[j] + beta_cg * p[j];
            gamma = gamma_new;
            const auto t_end = std::chrono::steady_clock::now();
            elapsed += std::chrono::duration<double>(t_end - t_start).count();

            flops +=
                flops_of_cgls_iteration(m, n, static_cast<double>(sys.matrix.nnz()));
            err_sq = diff_norm_sq(x, sys.x_ref);
            res_sq = norm_sq(r);
            const bool converged =
                (check_error && err_sq <= stop.error_tol_sq) ||
                (check_residual && res_sq <= stop.residual_tol_sq);
            if (k % options.record_every == 0 || converged ||
                k == stop.max_iterations)
                metrics.records.push_back(
                    {k, 0, err_sq, res_sq, flops, elapsed, -1, nan, nan});
            if (converged) {
                status = TerminalStatus::Converged;
                break;
            }
        }
        if (k > stop.max_iterations) k = stop.max_iterations;
    }

    metrics.status = status;
    metrics.iterations = k;
    metrics.final_error_sq = err_sq;
    metrics.final_residual_sq = res_sq;
    metrics.total_flops = flops;
    metrics.elapsed_s = elapsed;
    return metrics;
}

}  // namespace skm
