#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "skm/linear_system.hpp"
#include "skm/rng.hpp"

namespace skm {

enum class SelectionVariant { RK, MM, SkmUniform, SkmExact };

/// Per-iteration sample-size policy. Emitted values are clamped to [1, m].
struct BetaSchedule {
    enum class Kind { Fixed, SlowInc, RandUniform, UseDynRng };

    Kind kind = Kind::Fixed;
    long fixed_beta = 1;
    long initial_beta = 1;        // first UseDynRng iteration
    bool raw_dyn_formula = false; // ceil(max(m, ...)) form, for comparison only

    static BetaSchedule fixed(long beta);
    static BetaSchedule slow_inc();
    static BetaSchedule rand_uniform();
    static BetaSchedule use_dyn_range(long initial_beta = 1);
};

struct SelectionRule {
    SelectionVariant variant = SelectionVariant::SkmUniform;
    BetaSchedule schedule;

    static SelectionRule rk();
    static SelectionRule mm();
    static SelectionRule skm_uniform(BetaSchedule schedule);
    static SelectionRule skm_exact(BetaSchedule schedule);
};

constexpr long kFullSampleBeta = -1;  // schedule placeholder meaning beta = m

struct StopCriteria {
    long max_iterations = 1000000;
    double error_tol_sq = std::numeric_limits<double>::infinity();
    double residual_tol_sq = std::numeric_limits<double>::infinity();
};

enum class TerminalStatus { Converged, BudgetExhausted };

struct IterationRecord {
    long k = 0;
    long beta = 0;
    double error_sq = 0.0;
    double residual_sq = 0.0;
    double flops = 0.0;      // cumulative
    double elapsed_s = 0.0;  // cumulative, solver loop only
    long selected_row = -1;
    double bound_factor = std::numeric_limits<double>::quiet_NaN();
    double bound = std::numeric_limits<double>::quiet_NaN();  // cumulative curve
};

struct RunMetrics {
    std::vector<IterationRecord> records;
    TerminalStatus status = TerminalStatus::BudgetExhausted;
    long iterations = 0;
    double final_error_sq = 0.0;
    double final_residual_sq = 0.0;
    double total_flops = 0.0;
    double elapsed_s = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
};

struct RunOptions {
    long record_every = 1;
    bool track_bound = false;
    std::vector<double> x0;  // empty: zero start
};

/// Statistics of the last sampled sub-residual, feeding the dynamic-range
/// beta heuristic.
struct SubResidualStats {
    double inf_norm = 0.0;
    double two_norm = 0.0;
    bool valid = false;
};

long next_beta(const BetaSchedule& schedule, long k, std::size_t m,
               std::size_t n, const SubResidualStats& last, Philox& rng);

/// Deterministic per-iteration cost model. Instrumentation is never charged.
double flops_of_iteration(SelectionVariant variant, long beta, std::size_t m,
                          std::size_t n, double nnz_sampled,
                          double nnz_selected);

double flops_of_cgls_iteration(std::size_t m, std::size_t n, double nnz_total);

/// Row-action solver: each iteration selects a row per the rule and projects
/// onto its hyperplane. Records an instrumented trace (a k = 0 record holds
/// the initial state).
RunMetrics kaczmarz_run(const LinearSystem& sys, const SelectionRule& rule,
                        const StopCriteria& stop, Philox& rng,
                        const RunOptions& options = {});

/// One block step: x + (A_tau)^+ (b_tau - A_tau x). Satisfies every equation
/// in tau; throws on an inconsistent block.
std::vector<double> block_kaczmarz_step(const LinearSystem& sys,
                                        std::span<const std::size_t> tau,
                                        std::span<const double> x);

/// Conjugate gradient on the normal equations, traced the same way.
RunMetrics cgls_run(const LinearSystem& sys, const StopCriteria& stop,
                    const RunOptions& options = {});

}  // namespace skm
