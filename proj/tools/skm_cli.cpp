#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "skm/experiments.hpp"
#include "skm/graphs.hpp"

namespace {

void add_common_flags(CLI::App* cmd, skm::ExperimentConfig& cfg) {
    cmd->add_option("--source", cfg.source,
                    "gaussian | uniform | scaled-gaussian | ac-complete | "
                    "ac-ba | matrix-market:PATH");
    cmd->add_option("--m", cfg.m, "rows (synthetic sources)");
    cmd->add_option("--n", cfg.n, "columns / vertex count");
    cmd->add_option("--rule", cfg.rule, "rk | mm | skm-uniform | skm-exact");
    cmd->add_option("--schedule", cfg.schedule,
                    "fixed | slowinc | rand | usedynrng");
    cmd->add_option("--beta", cfg.betas, "sample size(s)");
    cmd->add_option("--beta-initial", cfg.beta_initial,
                    "first-iteration beta for usedynrng");
    cmd->add_flag("--raw-dynrng", cfg.raw_dynrng,
                  "use the unclamped ceil(max(m, .)) heuristic");
    cmd->add_option("--trials", cfg.trials, "independent trials");
    cmd->add_option("--seed", cfg.seed, "master seed");
    cmd->add_option("--max-iters", cfg.max_iters, "iteration budget");
    cmd->add_option("--error-tol", cfg.error_tol, "stop on ||x - x_ref||^2");
    cmd->add_option("--residual-tol", cfg.residual_tol, "stop on ||Ax - b||^2");
    cmd->add_flag("--normalize", cfg.normalize, "normalize rows first");
    cmd->add_flag("--track-bound", cfg.track_bound,
                  "record the per-iteration theoretical bound");
    cmd->add_flag("--estimate-gamma", cfg.estimate_gamma,
                  "Monte-Carlo dynamic-range column");
    cmd->add_option("--gamma-samples", cfg.gamma_samples,
                    "Monte-Carlo sample count");
    cmd->add_option("--conjecture-c", cfg.conjecture_c,
                    "override the conjectured-curve constant");
    cmd->add_option("--bernoulli-p", cfg.bernoulli_p,
                    "sparse-error Bernoulli parameter");
    cmd->add_option("--record-every", cfg.record_every,
                    "record every K-th iteration");
    cmd->add_option("--jobs", cfg.jobs, "concurrent trials");
    cmd->add_option("--ba-seed-size", cfg.ba_seed_size,
                    "initial vertices of the scale-free generator");
    cmd->add_option("--ba-edges-per-step", cfg.ba_edges_per_step,
                    "edges attached per new vertex");
    cmd->add_option("--output", cfg.output_dir, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Row-action Kaczmarz solver benchmark harness"};
    app.require_subcommand(0, 1);

    skm::ExperimentConfig cfg;
    std::string manifest;
    app.add_option("--from-manifest", manifest,
                   "re-run the experiment recorded in a manifest file");

    auto* run = app.add_subcommand("run", "solve and trace one configuration");
    add_common_flags(run, cfg);
    auto* gamma =
        app.add_subcommand("gamma", "tabulate dynamic ranges against beta");
    add_common_flags(gamma, cfg);
    auto* compare = app.add_subcommand(
        "compare", "SKM at each beta plus CGLS under one stop budget");
    add_common_flags(compare, cfg);

    auto* graph_gen = app.add_subcommand("graph-gen", "write an edge list");
    std::string kind = "complete", out_path = "graph.txt";
    std::size_t gg_n = 100, gg_seed_size = 5, gg_eps = 5;
    std::uint64_t gg_seed = 1;
    graph_gen->add_option("--kind", kind, "complete | ba");
    graph_gen->add_option("--n", gg_n, "vertex count");
    graph_gen->add_option("--seed-size", gg_seed_size, "ba initial vertices");
    graph_gen->add_option("--edges-per-step", gg_eps, "ba edges per step");
    graph_gen->add_option("--seed", gg_seed, "ba seed");
    graph_gen->add_option("--out", out_path, "output file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (!manifest.empty()) {
            const auto summary = skm::rerun_from_manifest(manifest);
            std::cout << "reproduced " << summary.csv_paths.size()
                      << " file(s) from " << manifest << "\n";
            return 0;
        }
        if (run->parsed()) {
            cfg.command = "run";
            const auto summary = skm::run_experiment(cfg);
            std::cout << "wrote " << summary.csv_paths.size() << " CSV file(s) to "
                      << cfg.output_dir << " (mean final error_sq "
                      << summary.mean_final_error_sq << ", "
                      << summary.converged_trials << "/" << cfg.trials
                      << " trials converged)\n";
            return 0;
        }
        if (gamma->parsed()) {
            cfg.command = "gamma";
            skm::gamma_experiment(cfg);
            std::cout << "wrote " << cfg.output_dir << "/gamma.csv\n";
            return 0;
        }
        if (compare->parsed()) {
            cfg.command = "compare";
            skm::compare_experiment(cfg);
            std::cout << "wrote " << cfg.output_dir << "/compare.csv\n";
            return 0;
        }
        if (graph_gen->parsed()) {
            skm::Graph g;
            if (kind == "complete") {
                g = skm::complete_graph(gg_n);
            } else if (kind == "ba") {
                skm::Philox rng(gg_seed, 0);
                g = skm::barabasi_albert(gg_n, gg_seed_size, gg_eps, rng);
            } else {
                std::cerr << "graph-gen: unknown kind '" << kind << "'\n";
                return 1;
            }
            skm::write_edge_list(g, out_path);
            std::cout << g.vertex_count << " " << g.edge_count() << "\n";
            return 0;
        }
        std::cerr << app.help();
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
