#pragma once

#include "dpact/baseline.hpp"
#include "dpact/config.hpp"
#include "dpact/metrics.hpp"
#include "dpact/phantoms.hpp"
#include "dpact/solver.hpp"

#include <array>
#include <optional>
#include <span>
#include <vector>

namespace dpact {

/// Phantom on the reconstruction grid (the reference for every metric).
DynamicImage build_truth(const ExperimentConfig& config);

/// Phantom on the simulation grid; identical to build_truth when refinement is 1.
DynamicImage build_simulation_phantom(const ExperimentConfig& config);

/// Noiseless measurements for the configured (or overridden) number of views.
MeasurementSet simulate_study_data(const ExperimentConfig& config, std::optional<int> views = std::nullopt);

/// Voxels whose TACs are reported: the configured list, else blob centers,
/// one voxel per rank-4 region, or the point voxel.
std::vector<std::array<Index, 3>> default_tac_voxels(const ExperimentConfig& config);

struct RunSummary {
    double kappa = 0.0;  ///< 0 when gamma/lambda were taken verbatim
    Regularization weights;
    ReconstructionResult result;
    NseResult nse;
    std::vector<double> tac_correlation;  ///< one per TAC voxel; NaN when undefined
};

/// One reconstruction. With `kappa`, gamma and lambda come from the balancing principle.
RunSummary run_reconstruction(const ExperimentConfig& config, const MeasurementSet& data,
                              const DynamicImage& truth, std::optional<double> kappa = std::nullopt,
                              const IterationObserver& observer = {});

struct KappaSweep {
    std::vector<RunSummary> runs;
    std::size_t best = 0;  ///< argmin of the average nSE; the smallest kappa wins ties
};

/// Reconstruct for each kappa in kappa_grid(data).
KappaSweep kappa_sweep(const ExperimentConfig& config, const MeasurementSet& data, const DynamicImage& truth);

struct SweepPoint {
    double setting = 0.0;  ///< views per frame or noise percent
    RunSummary run;
};

/// Either the configured kappa, or the best run of a kappa sweep.
RunSummary tuned_reconstruction(const ExperimentConfig& config, const MeasurementSet& data,
                                const DynamicImage& truth);

/// Views per frame over config.study.views at the first noise level.
std::vector<SweepPoint> views_sweep(const ExperimentConfig& config);

/// Noise level over config.noise.levels at the configured views.
std::vector<SweepPoint> noise_sweep(const ExperimentConfig& config);

/// UBP speed-of-sound sweep over the given 1-based frames, using
/// study.sos_candidates or the default 1480..1520 m/s grid.
SosSweepReport ubp_calibration(const ExperimentConfig& config, const MeasurementSet& data,
                               std::span<const Index> frames);

/// Pearson correlation per TAC voxel (NaN where a curve is constant).
std::vector<double> tac_correlations(const FactoredImage& estimate, const DynamicImage& truth,
                                     const std::vector<std::array<Index, 3>>& voxels);

}  // namespace dpact
