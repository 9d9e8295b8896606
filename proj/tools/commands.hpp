#pragma once

#include <dpact/config.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dpact::cli {

enum ExitCode : int {
    kOk = 0,
    kUnexpected = 1,
    kConfigInvalid = 2,
    kDiverged = 3,
    kIoFailure = 4,
};

struct GlobalOptions {
    std::optional<std::filesystem::path> config_path;
    std::optional<std::filesystem::path> output_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    bool emit_mip = false;
};

/// Loads the config (defaults when no path is given) and applies overrides.
ExperimentConfig resolve_config(const GlobalOptions& options);

void cmd_phantom(const ExperimentConfig& config, const GlobalOptions& options);
void cmd_simulate(const ExperimentConfig& config, const GlobalOptions& options);

struct ReconstructOptions {
    std::optional<std::filesystem::path> data_path;
    bool emit_volumes = false;
};
void cmd_reconstruct(const ExperimentConfig& config, const GlobalOptions& options,
                     const ReconstructOptions& local);

struct UbpOptions {
    std::optional<std::filesystem::path> data_path;
    std::optional<double> speed;
    std::optional<std::string> frames;  ///< e.g. "1-60" or "1,5,9-12"; overrides study.ubp_frames
};

/// Parses a 1-based frame list such as "1-3,7"; throws ConfigError when
/// malformed or outside 1..frame_count.
std::vector<Index> parse_frame_list(const std::string& text, Index frame_count);
void cmd_ubp(const ExperimentConfig& config, const GlobalOptions& options, const UbpOptions& local);

struct MetricsOptions {
    std::filesystem::path estimate_path;
    std::filesystem::path truth_path;
};
void cmd_metrics(const ExperimentConfig& config, const GlobalOptions& options, const MetricsOptions& local);

}  // namespace dpact::cli
