#include "skm/experiments.hpp"

#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "skm/analysis.hpp"
#include "skm/selection.hpp"

namespace skm {

namespace {

using nlohmann::json;

constexpr std::uint64_t kGenerationStream = 0;
constexpr std::uint64_t kTrialStreamBase = 1;
constexpr std::uint64_t kGammaStreamBase = 1ull << 32;

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string to_json(const ExperimentConfig& c) {
    json j;
    j["artifact"] = "skm";
    j["version"] = "0.1.0";
    j["command"] = c.command;
    j["source"] = c.source;
    j["m"] = c.m;
    j["n"] = c.n;
    j["rule"] = c.rule;
    j["schedule"] = c.schedule;
    j["betas"] = c.betas;
    j["beta_initial"] = c.beta_initial;
    j["raw_dynrng"] = c.raw_dynrng;
    j["trials"] = c.trials;
    j["seed"] = c.seed;
    j["max_iters"] = c.max_iters;
    j["error_tol"] = std::isfinite(c.error_tol) ? json(c.error_tol) : json();
    j["residual_tol"] =
        std::isfinite(c.residual_tol) ? json(c.residual_tol) : json();
    j["normalize"] = c.normalize;
    j["track_bound"] = c.track_bound;
    j["estimate_gamma"] = c.estimate_gamma;
    j["gamma_samples"] = c.gamma_samples;
    j["conjecture_c"] =
        std::isnan(c.conjecture_c) ? json() : json(c.conjecture_c);
    j["bernoulli_p"] = c.bernoulli_p;
    j["record_every"] = c.record_every;
    j["jobs"] = c.jobs;
    j["ba_seed_size"] = c.ba_seed_size;
    j["ba_edges_per_step"] = c.ba_edges_per_step;
    j["output_dir"] = c.output_dir;
    return j.dump(2) + "\n";
}

ExperimentConfig config_from_json(const std::string& text) {
    const json j = json::parse(text);
    ExperimentConfig c;
    c.command = j.value("command", c.command);
    c.source = j.value("source", c.source);
    c.m = j.value("m", c.m);
    c.n = j.value("n", c.n);
    c.rule = j.value("rule", c.rule);
    c.schedule = j.value("schedule", c.schedule);
    c.betas = j.value("betas", c.betas);
    c.beta_initial = j.value("beta_initial", c.beta_initial);
    c.raw_dynrng = j.value("raw_dynrng", c.raw_dynrng);
    c.trials = j.value("trials", c.trials);
    c.seed = j.value("seed", c.seed);
    c.max_iters = j.value("max_iters", c.max_iters);
    if (j.contains("error_tol") && !j["error_tol"].is_null())
        c.error_tol = j["error_tol"].get<double>();
    if (j.contains("residual_tol") && !j["residual_tol"].is_null())
        c.residual_tol = j["residual_tol"].get<double>();
    c.normalize = j.value("normalize", c.normalize);
    c.track_bound = j.value("track_bound", c.track_bound);
    c.estimate_gamma = j.value("estimate_gamma", c.estimate_gamma);
    c.gamma_samples = j.value("gamma_samples", c.gamma_samples);
    if (j.contains("conjecture_c") && !j["conjecture_c"].is_null())
        c.conjecture_c = j["conjecture_c"].get<double>();
    c.bernoulli_p = j.value("bernoulli_p", c.bernoulli_p);
    c.record_every = j.value("record_every", c.record_every);
    c.jobs = j.value("jobs", c.jobs);
    c.ba_seed_size = j.value("ba_seed_size", c.ba_seed_size);
    c.ba_edges_per_step = j.value("ba_edges_per_step", c.ba_edges_per_step);
    c.output_dir = j.value("output_dir", c.output_dir);
    return c;
}

BuiltSystem build_system(const ExperimentConfig& config) {
    Philox rng(config.seed, kGenerationStream);
    BuiltSystem out;

    const auto gaussian_vector = [&](std::size_t len) {
        std::vector<double> v(len);
        for (auto& x : v) x = rng.next_gaussian();
        return v;
    };

    const auto make_dense_source = [&](auto&& entry) {
        DenseMatrix a(config.m, config.n);
        for (std::size_t i = 0; i < config.m; ++i)
            for (std::size_t j = 0; j < config.n; ++j) a.at(i, j) = entry(i);
        std::vector<double> xstar = gaussian_vector(config.n);
        std::vector<double> b(config.m);
        Matrix mat(std::move(a));
        mat.apply(xstar, b);
        out.system = make_system(std::move(mat), std::move(b), xstar, true);
        out.x0.assign(config.n, 0.0);
    };

    if (config.source == "gaussian") {
        make_dense_source([&](std::size_t) { return rng.next_gaussian(); });
    } else if (config.source == "uniform") {
        make_dense_source([&](std::size_t) { return rng.next_double(); });
    } else if (config.source == "scaled-gaussian") {
        // row i has E||a_i||^2 = i (1-based): entry variance i / n
        make_dense_source([&](std::size_t i) {
            const double sd = std::sqrt(static_cast<double>(i + 1) /
                                        static_cast<double>(config.n));
            return sd * rng.next_gaussian();
        });
    } else if (config.source == "ac-complete") {
        const Graph g = complete_graph(config.n);
        AcSystem ac = ac_system(g, gaussian_vector(config.n));
        out.system = std::move(ac.system);
        out.x0 = std::move(ac.x0);
    } else if (config.source == "ac-ba") {
        const Graph g = barabasi_albert(
            config.n, static_cast<std::size_t>(config.ba_seed_size),
            static_cast<std::size_t>(config.ba_edges_per_step), rng);
        AcSystem ac = ac_system(g, gaussian_vector(config.n));
        out.system = std::move(ac.system);
        out.x0 = std::move(ac.x0);
    } else if (config.source.rfind("matrix-market:", 0) == 0) {
        const std::string path = config.source.substr(14);
        SparseMatrixCSR a = read_matrix_market(path);
        out.system = embed_real_solution(Matrix(std::move(a)), config.seed);
        out.x0.assign(out.system.cols(), 0.0);
    } else {
        throw std::invalid_argument("unknown system source '" + config.source + "'");
    }

    if (config.normalize) out.system = normalize_rows(out.system);
    return out;
}

SelectionRule rule_from_config(const ExperimentConfig& config, long beta) {
    BetaSchedule schedule;
    if (config.schedule == "fixed")
        schedule = BetaSchedule::fixed(beta);
    else if (config.schedule == "slowinc")
        schedule = BetaSchedule::slow_inc();
    else if (config.schedule == "rand")
        schedule = BetaSchedule::rand_uniform();
    else if (config.schedule == "usedynrng")
        schedule = BetaSchedule::use_dyn_range(config.beta_initial);
    else
        throw std::invalid_argument("unknown schedule '" + config.schedule + "'");
    schedule.raw_dyn_formula = config.raw_dynrng;

    if (config.rule == "rk") return SelectionRule::rk();
    if (config.rule == "mm") return SelectionRule::mm();
    if (config.rule == "skm-uniform") return SelectionRule::skm_uniform(schedule);
    if (config.rule == "skm-exact") return SelectionRule::skm_exact(schedule);
    throw std::invalid_argument("unknown rule '" + config.rule + "'");
}

std::vector<RunMetrics> run_trials(const ExperimentConfig& config,
                                   const BuiltSystem& built, long beta) {
    const SelectionRule rule = rule_from_config(config, beta);
    StopCriteria stop;
    stop.max_iterations = config.max_iters;
    stop.error_tol_sq = config.error_tol;
    stop.residual_tol_sq = config.residual_tol;

    RunOptions options;
    options.record_every = config.record_every;
    options.track_bound = config.track_bound;
    options.x0 = built.x0;

    std::vector<RunMetrics> results(static_cast<std::size_t>(config.trials));
    std::atomic<long> next{0};
    const long jobs = std::max(1L, std::min(config.jobs, config.trials));

    auto worker = [&]() {
        for (;;) {
            const long t = next.fetch_add(1);
            if (t >= config.trials) break;
            Philox rng(config.seed, kTrialStreamBase + static_cast<std::uint64_t>(t));
            results[static_cast<std::size_t>(t)] =
                kaczmarz_run(built.system, rule, stop, rng, options);
        }
    };

    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(jobs));
        for (long i = 0; i < jobs; ++i) threads.emplace_back(worker);
        for (auto& th : threads) th.join();
    }
    return results;
}

namespace {

void write_manifest(const ExperimentConfig& config, RunSummary& summary) {
    std::filesystem::create_directories(config.output_dir);
    const std::string path = config.output_dir + "/manifest.json";
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write manifest " + path);
    f << to_json(config);
    summary.manifest_path = path;
}

}  // namespace

RunSummary run_experiment(const ExperimentConfig& config) {
    if (config.trials < 1) throw std::invalid_argument("run: trials must be >= 1");
    const BuiltSystem built = build_system(config);
    const long beta = config.betas.empty() ? 1 : config.betas.front();
    const auto results = run_trials(config, built, beta);

    RunSummary summary;
    write_manifest(config, summary);
    for (long t = 0; t < config.trials; ++t) {
        char name[64];
        std::snprintf(name, sizeof(name), "/trial_%03ld.csv", t);
        const std::string path = config.output_dir + name;
        write_metrics_csv(results[static_cast<std::size_t>(t)], path);
        summary.csv_paths.push_back(path);
    }
    const RunMetrics mean = mean_metrics(results);
    const std::string mean_path = config.output_dir + "/mean.csv";
    write_metrics_csv(mean, mean_path);
    summary.csv_paths.push_back(mean_path);

    summary.mean_final_error_sq = mean.final_error_sq;
    for (const auto& r : results)
        if (r.status == TerminalStatus::Converged) ++summary.converged_trials;
    return summary;
}

RunSummary gamma_experiment(const ExperimentConfig& config) {
    const bool incidence = config.source.rfind("ac-", 0) == 0;
    const BuiltSystem built = build_system(config);
    const std::size_t m = built.system.rows();
    const std::size_t n = built.system.cols();

    std::vector<long> betas = config.betas;
    if (betas.empty()) {
        for (long b = 1; static_cast<std::size_t>(b) <= m; b *= 2)
            betas.push_back(b);
    }

    const long draws = std::max(1L, config.trials);
    Philox err_rng(config.seed, kGammaStreamBase);
    Philox mc_rng(config.seed, kGammaStreamBase + 1);

    // per-beta mean exact gamma over fresh error draws, plus bounds
    std::vector<double> gamma_gauss(betas.size(), 0.0);
    std::vector<double> gamma_bern(betas.size(), 0.0);
    std::vector<double> bound_gauss(betas.size(), 0.0);
    std::vector<double> bound_bern(betas.size(), 0.0);
    std::vector<double> gamma_mc(betas.size(),
                                 std::numeric_limits<double>::quiet_NaN());
    std::vector<double> gamma_mc_ci(betas.size(),
                                    std::numeric_limits<double>::quiet_NaN());

    std::vector<double> e(n), r(m);
    for (long d = 0; d < draws; ++d) {
        for (auto& v : e) v = err_rng.next_gaussian();
        built.system.matrix.apply(e, r);
        for (std::size_t bi = 0; bi < betas.size(); ++bi) {
            gamma_gauss[bi] +=
                dynamic_range_exact(r, betas[bi]) / static_cast<double>(draws);
            if (incidence)
                bound_gauss[bi] += incidence_gamma_bound(r, betas[bi]) /
                                   static_cast<double>(draws);
        }
        if (incidence) {
            bool nonzero = false;
            do {  // a constant 0/1 vector has zero residual: resample
                for (auto& v : e)
                    v = err_rng.next_double() < config.bernoulli_p ? 1.0 : 0.0;
                built.system.matrix.apply(e, r);
                nonzero = false;
                for (double v : r) nonzero = nonzero || v != 0.0;
            } while (!nonzero);
            for (std::size_t bi = 0; bi < betas.size(); ++bi) {
                gamma_bern[bi] += dynamic_range_exact(r, betas[bi]) /
                                  static_cast<double>(draws);
                bound_bern[bi] += incidence_gamma_bound(r, betas[bi]) /
                                  static_cast<double>(draws);
            }
        }
    }

    if (config.estimate_gamma) {
        for (auto& v : e) v = err_rng.next_gaussian();
        built.system.matrix.apply(e, r);
        for (std::size_t bi = 0; bi < betas.size(); ++bi) {
            const McEstimate mc =
                dynamic_range_mc(r, betas[bi], config.gamma_samples, mc_rng);
            gamma_mc[bi] = mc.estimate;
            gamma_mc_ci[bi] = mc.ci_half_width;
        }
    }

    // conjectured curve calibrated on the measured gammas (gaussian sources)
    std::vector<double> conjectured(betas.size(),
                                    std::numeric_limits<double>::quiet_NaN());
    std::vector<double> gaussbound(betas.size(),
                                   std::numeric_limits<double>::quiet_NaN());
    if (!incidence) {
        double c = config.conjecture_c;
        if (std::isnan(c)) c = calibrate_conjectured_c(betas, gamma_gauss);
        for (std::size_t bi = 0; bi < betas.size(); ++bi) {
            if (betas[bi] >= 2) {
                const double bd = static_cast<double>(betas[bi]);
                conjectured[bi] = c * bd / std::log(bd);
                gaussbound[bi] = gaussian_gamma_bound(m, m, betas[bi], n);
            }
        }
    }

    RunSummary summary;
    write_manifest(config, summary);
    const std::string path = config.output_dir + "/gamma.csv";
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    if (incidence) {
        f << "beta,gamma_gaussian,incidence_bound_gaussian,gamma_bernoulli,"
             "incidence_bound_bernoulli\n";
        for (std::size_t bi = 0; bi < betas.size(); ++bi)
            f << betas[bi] << ',' << format_double(gamma_gauss[bi]) << ','
              << format_double(bound_gauss[bi]) << ','
              << format_double(gamma_bern[bi]) << ','
              << format_double(bound_bern[bi]) << '\n';
    } else {
        f << "beta,gamma,gamma_mc,gamma_mc_ci,conjectured,gauss_bound\n";
        for (std::size_t bi = 0; bi < betas.size(); ++bi)
            f << betas[bi] << ',' << format_double(gamma_gauss[bi]) << ','
              << format_double(gamma_mc[bi]) << ','
              << format_double(gamma_mc_ci[bi]) << ','
              << format_double(conjectured[bi]) << ','
              << format_double(gaussbound[bi]) << '\n';
    }
    summary.csv_paths.push_back(path);
    return summary;
}

RunSummary compare_experiment(const ExperimentConfig& config) {
    const BuiltSystem built = build_system(config);

    StopCriteria stop;
    stop.max_iterations = config.max_iters;
    stop.error_tol_sq = config.error_tol;
    stop.residual_tol_sq = config.residual_tol;

    RunSummary summary;
    write_manifest(config, summary);
    const std::string path = config.output_dir + "/compare.csv";
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "method,beta,final_error_sq,iterations,flops,elapsed_s\n";

    for (long beta : config.betas) {
        const auto results = run_trials(config, built, beta);
        double err = 0.0, flops = 0.0, elapsed = 0.0, iters = 0.0;
        for (const auto& r : results) {
            err += r.final_error_sq;
            flops += r.total_flops;
            elapsed += r.elapsed_s;
            iters += static_cast<double>(r.iterations);
        }
        const double nt = static_cast<double>(results.size());
        f << config.rule << ',' << beta << ',' << format_double(err / nt) << ','
          << static_cast<long>(iters / nt) << ',' << format_double(flops / nt)
          << ',' << format_double(elapsed / nt) << '\n';
    }

    RunOptions options;
    options.record_every = config.record_every;
    options.x0 = built.x0;
    const RunMetrics cgls = cgls_run(built.system, stop, options);
    f << "cgls,," << format_double(cgls.final_error_sq) << ','
      << cgls.iterations << ',' << format_double(cgls.total_flops) << ','
      << format_double(cgls.elapsed_s) << '\n';

    summary.csv_paths.push_back(path);
    return summary;
}

RunSummary rerun_from_manifest(const std::string& manifest_path) {
    std::ifstream f(manifest_path);
    if (!f) throw std::runtime_error("cannot open manifest " + manifest_path);
    std::stringstream ss;
    ss << f.rdbuf();
    const ExperimentConfig config = config_from_json(ss.str());
    if (config.command == "run") return run_experiment(config);
    if (config.command == "gamma") return gamma_experiment(config);
    if (config.command == "compare") return compare_experiment(config);
    throw std::runtime_error("manifest has unknown command '" + config.command + "'");
}

}  // namespace skm
