#pragma once

#include "dpact/geometry.hpp"
#include "dpact/solver.hpp"
#include "dpact/types.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dpact {

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr const char* kArtifactVersion = "0.1.0";

/// A configuration document is malformed or internally inconsistent.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class StudyKind { inverse_crime, views_sweep, noise_sweep, kappa_sweep, ubp_calibration };

std::string to_string(StudyKind kind);
StudyKind study_kind_from_string(const std::string& name);

struct PhantomSpec {
    std::string kind = "rank4";  ///< rank4 | blob | point
    std::array<Index, 3> dims{20, 20, 3};
    Index frame_count = 60;
    double spacing = 0.4e-3;  ///< reconstruction grid spacing, meters
    /// Simulate on a grid `refinement` times finer than the reconstruction
    /// grid (1 = shared grid, i.e. the inverse-crime setting).
    int refinement = 1;
    std::array<Index, 3> point_voxel{0, 0, 0};  ///< point phantom only
    std::uint64_t seed = 0;
};

struct GeometrySpec {
    int views = 1;
    Index elements_per_arc = kDefaultArcElements;
    double radius = kDefaultArcRadius;
    double polar_span = kDefaultPolarSpan;
    double angular_step_deg = 1.0;
    Index sample_count = kDefaultSampleCount;
    double sample_interval = 1.0 / kDefaultSamplingRate;
    double sound_speed = kDefaultSoundSpeed;
    double frame_period = kDefaultFramePeriod;
};

struct NoiseSpec {
    std::vector<double> levels{0.0};  ///< percent of max |G|
    std::uint64_t seed = 0;
};

struct SolverSpec {
    SolverConfig solver;
    /// Balancing constant; when set, gamma and lambda are derived from the truth.
    std::optional<double> kappa;
};

struct StudySpec {
    StudyKind kind = StudyKind::inverse_crime;
    std::vector<int> views{1, 2, 4};
    std::vector<double> sos_candidates;  ///< empty -> 1480..1520 step 5
    std::vector<std::array<Index, 3>> tac_voxels;  ///< empty -> phantom default
    std::vector<Index> ubp_frames;  ///< 1-based frames averaged by back-projection
};

struct ExperimentConfig {
    int schema_version = kConfigSchemaVersion;
    PhantomSpec phantom;
    GeometrySpec geometry;
    NoiseSpec noise;
    SolverSpec solver;
    StudySpec study;
    std::filesystem::path output_dir = "out";

    /// Throws ConfigError on any inconsistency.
    void validate() const;

    /// Reconstruction grid (centered).
    [[nodiscard]] VoxelGrid grid() const;
    /// Grid the measurements are simulated on.
    [[nodiscard]] VoxelGrid simulation_grid() const;
    [[nodiscard]] ScanGeometry scan_geometry(std::optional<int> views = std::nullopt) const;

    /// Replace every seed (noise, solver, phantom) with `seed`.
    void override_seed(std::uint64_t seed);
};

nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Lower-case hex SHA-256 of the canonical JSON serialization.
std::string config_hash(const ExperimentConfig& config);
std::string sha256_hex(const std::string& bytes);

/// Config, its hash, seeds and artifact version; enough to re-run the command.
nlohmann::json provenance(const ExperimentConfig& config, const std::string& command);
void write_provenance(const ExperimentConfig& config, const std::string& command,
                      const std::filesystem::path& dir);

}  // namespace dpact
