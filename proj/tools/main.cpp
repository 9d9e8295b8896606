#include "commands.hpp"

#include <dpact/log.hpp>
#include <dpact/types.hpp>

#include <CLI11.hpp>
#include <omp.h>

#include <iostream>

using namespace dpact;

int main(int argc, char** argv) {
    CLI::App app{"dpact: low-rank dynamic photoacoustic reconstruction"};
    app.fallthrough();
    app.require_subcommand(1);

    cli::GlobalOptions global;
    std::string config_path, output_dir;
    std::uint64_t seed = 0;
    int threads = 0;
    auto* config_opt = app.add_option("--config", config_path, "Experiment config (JSON)");
    auto* output_opt = app.add_option("--output", output_dir, "Output directory (overrides the config)");
    auto* seed_opt = app.add_option("--seed", seed, "Seed for noise and solver (overrides the config)");
    auto* threads_opt = app.add_option("--threads", threads, "OpenMP thread count")->check(CLI::PositiveNumber);
    app.add_flag("--emit-mip", global.emit_mip, "Also write per-frame z maximum-intensity projections");

    auto* phantom = app.add_subcommand("phantom", "Generate the configured phantom");
    auto* simulate = app.add_subcommand("simulate", "Simulate noiseless and noisy measurements");

    cli::ReconstructOptions rec;
    std::string rec_data;
    auto* reconstruct = app.add_subcommand("reconstruct", "Run the configured reconstruction study");
    auto* rec_data_opt = reconstruct->add_option("--data", rec_data, "Measurement container to reconstruct");
    reconstruct->add_flag("--emit-volumes", rec.emit_volumes, "Write dense per-frame volumes");

    cli::UbpOptions ubp_opts;
    std::string ubp_data;
    double speed = 0.0;
    auto* ubp = app.add_subcommand("ubp", "Universal back-projection and speed-of-sound sweep");
    auto* ubp_data_opt = ubp->add_option("--data", ubp_data, "Measurement container");
    auto* speed_opt = ubp->add_option("--speed", speed, "Single sound speed instead of a sweep (m/s)")
                          ->check(CLI::PositiveNumber);
    std::string ubp_frames;
    auto* frames_opt = ubp->add_option("--frames", ubp_frames, "Frames to back-project, e.g. 1-60 or 1,5,9-12");

    cli::MetricsOptions met;
    std::string estimate_path, truth_path;
    auto* metrics = app.add_subcommand("metrics", "nSE and TAC comparison of an estimate against the truth");
    metrics->add_option("--estimate", estimate_path, "Estimate container")->required();
    metrics->add_option("--truth", truth_path, "Truth container")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? cli::kOk : cli::kConfigInvalid;
    }

    if (*config_opt) global.config_path = config_path;
    if (*output_opt) global.output_dir = output_dir;
    if (*seed_opt) global.seed = seed;
    if (*threads_opt) {
        global.threads = threads;
        omp_set_num_threads(threads);
    }
    if (*rec_data_opt) rec.data_path = rec_data;
    if (*ubp_data_opt) ubp_opts.data_path = ubp_data;
    if (*speed_opt) ubp_opts.speed = speed;
    if (*frames_opt) ubp_opts.frames = ubp_frames;
    met.estimate_path = estimate_path;
    met.truth_path = truth_path;

    try {
        const ExperimentConfig config = cli::resolve_config(global);
        if (phantom->parsed()) cli::cmd_phantom(config, global);
        if (simulate->parsed()) cli::cmd_simulate(config, global);
        if (reconstruct->parsed()) cli::cmd_reconstruct(config, global, rec);
        if (ubp->parsed()) cli::cmd_ubp(config, global, ubp_opts);
        if (metrics->parsed()) cli::cmd_metrics(config, global, met);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return cli::kConfigInvalid;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return cli::kConfigInvalid;
    } catch (const DivergenceError& e) {
        std::cerr << "diverged: " << e.what() << '\n';
        return cli::kDiverged;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return cli::kIoFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cli::kUnexpected;
    }
    return cli::kOk;
}
