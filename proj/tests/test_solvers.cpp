#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "skm/analysis.hpp"
#include "skm/solvers.hpp"
#include "test_util.hpp"

using namespace skm;
using skm::testutil::random_consistent_system;

namespace {

StopCriteria budget(long iters) {
    StopCriteria s;
    s.max_iterations = iters;
    return s;
}

}  // namespace

TEST_CASE("greedy selection traces the diagonal system by hand") {
    auto sys = make_system(Matrix(DenseMatrix::identity(2)), {3.0, 4.0});
    StopCriteria stop = budget(10);
    stop.error_tol_sq = 1e-24;
    Philox rng(1);
    const auto metrics = kaczmarz_run(sys, SelectionRule::mm(), stop, rng);

    REQUIRE(metrics.records.size() >= 3);
    CHECK(metrics.records[1].selected_row == 1);  // |r| = 4 beats 3
    CHECK(metrics.records[1].error_sq == doctest::Approx(9.0));
    CHECK(metrics.records[2].selected_row == 0);
    CHECK(metrics.records[2].error_sq == doctest::Approx(0.0));
    CHECK(metrics.iterations == 2);
    CHECK(metrics.status == TerminalStatus::Converged);
}

TEST_CASE("starting at the fixed point makes no progress") {
    auto sys = make_system(Matrix(DenseMatrix::identity(2)), {1.0, 2.0});
    RunOptions opt;
    opt.x0 = {1.0, 2.0};
    StopCriteria stop = budget(5);
    stop.error_tol_sq = 1e-30;
    for (auto rule : {SelectionRule::rk(), SelectionRule::mm(),
                      SelectionRule::skm_uniform(BetaSchedule::fixed(2)),
                      SelectionRule::skm_exact(BetaSchedule::fixed(2))}) {
        Philox rng(2);
        const auto metrics = kaczmarz_run(sys, rule, stop, rng, opt);
        CHECK(metrics.iterations == 0);
        CHECK(metrics.final_error_sq == 0.0);
        CHECK(metrics.status == TerminalStatus::Converged);
    }
}

TEST_CASE("RK expectation on the identity: E||e_k||^2 = 2^-k ||e0||^2") {
    auto sys = make_system(Matrix(DenseMatrix::identity(2)), {1.0, 1.0});
    const long trials = 10000, k = 5;
    double mean = 0.0;
    for (long t = 0; t < trials; ++t) {
        Philox rng(99, static_cast<std::uint64_t>(t));
        const auto m = kaczmarz_run(sys, SelectionRule::rk(), budget(k), rng);
        mean += m.final_error_sq;
    }
    mean /= static_cast<double>(trials);
    const double expected = std::pow(0.5, k) * 2.0;
    CHECK(mean == doctest::Approx(expected).epsilon(0.05));
}

TEST_CASE("rule/schedule mismatches are rejected") {
    auto sys = make_system(Matrix(DenseMatrix::identity(2)), {1.0, 1.0});
    Philox rng(3);
    SelectionRule bad_rk{SelectionVariant::RK, BetaSchedule::fixed(2)};
    CHECK_THROWS(kaczmarz_run(sys, bad_rk, budget(1), rng));
    SelectionRule bad_mm{SelectionVariant::MM, BetaSchedule::slow_inc()};
    CHECK_THROWS(kaczmarz_run(sys, bad_mm, budget(1), rng));
    SelectionRule wide{SelectionVariant::SkmUniform, BetaSchedule::fixed(7)};
    CHECK_THROWS(kaczmarz_run(sys, wide, budget(1), rng));
    // MM accepts an explicit beta = m
    SelectionRule mm_m{SelectionVariant::MM, BetaSchedule::fixed(2)};
    CHECK_NOTHROW(kaczmarz_run(sys, mm_m, budget(1), rng));
}

TEST_CASE("single-iteration error is monotone for every rule") {
    Philox gen(17);
    auto tiny = random_consistent_system(12, 4, gen);
    StopCriteria stop = budget(60);
    for (auto rule : {SelectionRule::rk(), SelectionRule::mm(),
                      SelectionRule::skm_uniform(BetaSchedule::fixed(4)),
                      SelectionRule::skm_exact(BetaSchedule::fixed(4))}) {
        Philox rng(18);
        RunOptions opt;
        opt.x0 = tiny.x0;
        const auto m = kaczmarz_run(tiny.system, rule, stop, rng, opt);
        for (std::size_t i = 1; i < m.records.size(); ++i)
            CHECK(m.records[i].error_sq <=
                  m.records[i - 1].error_sq * (1.0 + 1e-12) + 1e-300);
    }
}

TEST_CASE("block step: single row equals project_row, block solves exactly") {
    auto sys = make_system(Matrix(DenseMatrix::identity(2)), {1.0, 2.0});
    const std::vector<double> x{0.25, -0.5};

    const std::vector<std::size_t> one{1};
    const auto xb = block_kaczmarz_step(sys, one, x);
    const auto xp = project_row(x, std::vector<double>{0.0, 1.0}, 2.0, 1.0);
    CHECK(xb[0] == doctest::Approx(xp[0]));
    CHECK(xb[1] == doctest::Approx(xp[1]));

    const std::vector<std::size_t> both{0, 1};
    const auto xf = block_kaczmarz_step(sys, both, std::vector<double>{0.0, 0.0});
    CHECK(xf[0] == doctest::Approx(1.0));
    CHECK(xf[1] == doctest::Approx(2.0));

    CHECK_THROWS(block_kaczmarz_step(sys, std::vector<std::size_t>{}, x));
}

TEST_CASE("paired block dominance over 100 random triples") {
    Philox rng(23);
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t m = 6 + rng.next_below(6);
        const std::size_t n = 2 + rng.next_below(3);
        auto tiny = random_consistent_system(m, n, rng, rep % 4 == 0);
        std::vector<double> x(n);
        for (auto& v : x) v = rng.next_gaussian();
        const long beta = 1 + static_cast<long>(rng.next_below(m));
        const auto tau = sample_uniform_subset(m, beta, rng);

        const auto r = residual(tiny.system.matrix, x, tiny.system.rhs);
        const auto ranked = rank_residuals(r);
        const std::size_t t = select_skm(ranked, tau);
        std::vector<double> x_skm = x;
        project_row_inplace(tiny.system, t, x_skm);
        const auto x_bk = block_kaczmarz_step(tiny.system, tau, x);

        double e_skm = 0.0, e_bk = 0.0, e_before = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double ref = tiny.system.x_ref[j];
            e_skm += (x_skm[j] - ref) * (x_skm[j] - ref);
            e_bk += (x_bk[j] - ref) * (x_bk[j] - ref);
            e_before += (x[j] - ref) * (x[j] - ref);
        }
        CHECK(e_bk <= e_skm + 1e-10);
        CHECK(e_skm <= e_before + 1e-10);
    }
}

TEST_CASE("expected single-step error satisfies the theorem bound on tiny systems") {
    Philox rng(29);
    for (int rep = 0; rep < 30; ++rep) {
        const std::size_t m = 3 + rng.next_below(6);  // <= 8
        const std::size_t n = 2 + rng.next_below(3);  // <= 4
        auto tiny = random_consistent_system(m, n, rng, rep % 5 == 0);
        const long beta =
            1 + static_cast<long>(rng.next_below(std::min<std::size_t>(m, 3)));

        double e0 = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double d = tiny.x0[j] - tiny.system.x_ref[j];
            e0 += d * d;
        }
        if (e0 < 1e-12) continue;

        const double expected =
            testutil::enumerated_expected_error_sq(tiny.system, tiny.x0, beta);
        const auto f = contraction_thm2(tiny.system, tiny.x0, beta);
        REQUIRE(!f.converged);
        CHECK(expected <= f.value * e0 + 1e-12);
    }
}

TEST_CASE("cgls terminates finitely on easy spectra") {
    auto eye = make_system(Matrix(DenseMatrix::identity(3)), {1.0, -2.0, 0.5});
    StopCriteria stop = budget(10);
    stop.error_tol_sq = 1e-22;
    auto m = cgls_run(eye, stop);
    CHECK(m.iterations == 1);
    CHECK(m.status == TerminalStatus::Converged);

    auto diag = make_system(Matrix(DenseMatrix(2, 2, {1.0, 0.0, 0.0, 2.0})),
                            {1.0, 2.0});
    stop.error_tol_sq = 1e-20;
    m = cgls_run(diag, stop);
    CHECK(m.iterations <= 2);
    CHECK(m.final_error_sq <= 1e-20);

    // zero-iteration budget is a status, not an error
    m = cgls_run(diag, budget(0));
    CHECK(m.status == TerminalStatus::BudgetExhausted);
    CHECK(m.iterations == 0);
}

TEST_CASE("cgls converges to the min-norm solution on rank-deficient systems") {
    Philox rng(31);
    auto tiny = random_consistent_system(10, 4, rng, true);
    StopCriteria stop = budget(50);
    stop.error_tol_sq = 1e-18;
    const auto m = cgls_run(tiny.system, stop);
    CHECK(m.status == TerminalStatus::Converged);
}

TEST_CASE("next_beta schedules") {
    Philox rng(37);
    SubResidualStats none;

    CHECK(next_beta(BetaSchedule::fixed(100), 1, 1000, 10, none, rng) == 100);
    CHECK(next_beta(BetaSchedule::slow_inc(), 3, 10, 2, none, rng) == 3);
    CHECK(next_beta(BetaSchedule::slow_inc(), 15, 10, 2, none, rng) == 10);

    for (int i = 0; i < 50; ++i) {
        const long b = next_beta(BetaSchedule::rand_uniform(), 1, 10, 2, none, rng);
        CHECK(b >= 1);
        CHECK(b <= 10);
    }

    // single-spike sub-residual: ||r||_inf = ||r||_2, so beta = ceil(m/n)
    SubResidualStats spike{2.5, 2.5, true};
    CHECK(next_beta(BetaSchedule::use_dyn_range(), 2, 1000, 100, spike, rng) == 10);
    // first iteration: configured initial value
    CHECK(next_beta(BetaSchedule::use_dyn_range(7), 1, 1000, 100, none, rng) == 7);
    // raw printed form degenerates to m
    BetaSchedule raw = BetaSchedule::use_dyn_range();
    raw.raw_dyn_formula = true;
    CHECK(next_beta(raw, 2, 1000, 100, spike, rng) == 1000);

    CHECK_THROWS(next_beta(BetaSchedule::fixed(1), 0, 10, 2, none, rng));
}

TEST_CASE("per-iteration cost model") {
    // dense, beta=1, n=500: 2*500 + 1 + (2*500 + 500 + 2) = 2503
    CHECK(flops_of_iteration(SelectionVariant::SkmUniform, 1, 1000, 500, 500.0,
                             500.0) == doctest::Approx(2503.0));
    // beta = m matches the greedy full-residual cost
    const std::size_t m = 100, n = 10;
    const double uniform_full =
        flops_of_iteration(SelectionVariant::SkmUniform, 100, m, n, 1000.0, 10.0);
    const double greedy =
        flops_of_iteration(SelectionVariant::MM, 100, m, n, 1000.0, 10.0);
    CHECK(uniform_full == doctest::Approx(greedy));
    // cgls model
    CHECK(flops_of_cgls_iteration(100, 10, 1000.0) ==
          doctest::Approx(4.0 * 1000 + 10.0 * 10 + 6.0 * 100));
}

TEST_CASE("identical seeds give bitwise-identical traces") {
    Philox gen(41);
    auto tiny = random_consistent_system(20, 5, gen);
    StopCriteria stop = budget(40);
    RunOptions opt;
    opt.track_bound = true;

    for (auto rule : {SelectionRule::rk(),
                      SelectionRule::skm_uniform(BetaSchedule::fixed(5)),
                      SelectionRule::skm_uniform(BetaSchedule::rand_uniform()),
                      SelectionRule::skm_exact(BetaSchedule::fixed(3))}) {
        Philox r1(7, 3), r2(7, 3);
        const auto m1 = kaczmarz_run(tiny.system, rule, stop, r1, opt);
        const auto m2 = kaczmarz_run(tiny.system, rule, stop, r2, opt);
        REQUIRE(m1.records.size() == m2.records.size());
        for (std::size_t i = 0; i < m1.records.size(); ++i) {
            const auto &a = m1.records[i], &b = m2.records[i];
            CHECK(a.k == b.k);
            CHECK(a.beta == b.beta);
            CHECK(a.selected_row == b.selected_row);
            CHECK(std::memcmp(&a.error_sq, &b.error_sq, sizeof(double)) == 0);
            CHECK(std::memcmp(&a.residual_sq, &b.residual_sq, sizeof(double)) == 0);
            CHECK(std::memcmp(&a.flops, &b.flops, sizeof(double)) == 0);
            CHECK(std::memcmp(&a.bound, &b.bound, sizeof(double)) == 0);
        }
    }
}

TEST_CASE("dynamic schedules and the exact-marginal sampler converge") {
    Philox gen(43);
    auto tiny = random_consistent_system(60, 6, gen);
    StopCriteria stop = budget(600);
    stop.error_tol_sq = 1e-16;
    for (auto rule :
         {SelectionRule::skm_uniform(BetaSchedule::slow_inc()),
          SelectionRule::skm_uniform(BetaSchedule::rand_uniform()),
          SelectionRule::skm_uniform(BetaSchedule::use_dyn_range()),
          SelectionRule::skm_exact(BetaSchedule::fixed(10))}) {
        Philox rng(44);
        const auto m = kaczmarz_run(tiny.system, rule, stop, rng);
        CHECK(m.status == TerminalStatus::Converged);
    }
}

TEST_CASE("record_every thins the trace but keeps the final row") {
    Philox gen(47);
    auto tiny = random_consistent_system(30, 5, gen);
    StopCriteria stop = budget(100);
    RunOptions opt;
    opt.record_every = 10;
    Philox rng(48);
    const auto m = kaczmarz_run(
        tiny.system, SelectionRule::skm_uniform(BetaSchedule::fixed(3)), stop,
        rng, opt);
    REQUIRE(m.records.size() == 11);  // k = 0, 10, ..., 100
    CHECK(m.records[1].k == 10);
    CHECK(m.records.back().k == 100);
}

TEST_CASE("residual tolerance stops the run") {
    Philox gen(53);
    auto tiny = random_consistent_system(25, 4, gen);
    StopCriteria stop = budget(100000);
    stop.residual_tol_sq = 1e-14;
    Philox rng(54);
    const auto m = kaczmarz_run(
        tiny.system, SelectionRule::skm_uniform(BetaSchedule::fixed(6)), stop,
        rng);
    CHECK(m.status == TerminalStatus::Converged);
    CHECK(m.final_residual_sq <= 1e-14);
}
