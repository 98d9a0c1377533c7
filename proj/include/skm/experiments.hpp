#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "skm/graphs.hpp"
#include "skm/io.hpp"
#include "skm/solvers.hpp"

namespace skm {

/// Everything needed to reproduce one experiment. Serialized verbatim into
/// the output directory's manifest.
struct ExperimentConfig {
    std::string command = "run";  // run | gamma | compare
    std::string source = "gaussian";
    std::size_t m = 2000;
    std::size_t n = 50;
    std::string rule = "skm-uniform";      // rk | mm | skm-uniform | skm-exact
    std::string schedule = "fixed";        // fixed | slowinc | rand | usedynrng
    std::vector<long> betas = {16};
    long beta_initial = 1;
    bool raw_dynrng = false;
    long trials = 20;
    std::uint64_t seed = 1;
    long max_iters = 1000;
    double error_tol = std::numeric_limits<double>::infinity();     // on ||e||^2
    double residual_tol = std::numeric_limits<double>::infinity();  // on ||r||^2
    bool normalize = false;
    bool track_bound = false;
    bool estimate_gamma = false;
    long gamma_samples = 100000;
    double conjecture_c = std::numeric_limits<double>::quiet_NaN();  // nan: calibrate
    double bernoulli_p = 0.05;
    long record_every = 1;
    long jobs = 1;
    long ba_seed_size = 5;
    long ba_edges_per_step = 5;
    std::string output_dir = "out";
};

std::string to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const std::string& text);

struct BuiltSystem {
    LinearSystem system;
    std::vector<double> x0;  // zeros unless the source dictates a start
};

/// Instantiates the configured system source. Stream 0 of the master seed is
/// reserved for generation; trials use streams 1 + t.
BuiltSystem build_system(const ExperimentConfig& config);

SelectionRule rule_from_config(const ExperimentConfig& config, long beta);

struct RunSummary {
    std::vector<std::string> csv_paths;
    std::string manifest_path;
    double mean_final_error_sq = 0.0;
    long converged_trials = 0;
};

/// Runs `trials` independent solver runs and writes per-trial CSVs, a mean
/// CSV and the manifest into output_dir.
RunSummary run_experiment(const ExperimentConfig& config);

/// Tabulates the dynamic range against beta, with the applicable bounds,
/// into output_dir/gamma.csv.
RunSummary gamma_experiment(const ExperimentConfig& config);

/// SKM at each requested beta plus a CGLS baseline under the shared stop
/// budget, into output_dir/compare.csv.
RunSummary compare_experiment(const ExperimentConfig& config);

/// Re-executes the experiment recorded in a manifest file.
RunSummary rerun_from_manifest(const std::string& manifest_path);

/// Runs the per-trial solver invocations (shared by run/compare); exposed for
/// tests that need the raw metrics rather than CSV files.
std::vector<RunMetrics> run_trials(const ExperimentConfig& config,
                                   const BuiltSystem& built, long beta);

}  // namespace skm
