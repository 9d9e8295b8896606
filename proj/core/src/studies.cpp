#include "dpact/studies.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace dpact {

DynamicImage build_truth(const ExperimentConfig& config) {
    const auto& p = config.phantom;
    const VoxelGrid grid = config.grid();
    if (p.kind == "rank4") return make_rank4_phantom({p.dims[0], p.dims[1], p.dims[2], p.frame_count, p.spacing});
    if (p.kind == "point") return make_point_phantom(grid, p.frame_count, p.point_voxel);
    BlobPhantomParams params;
    params.extent = grid.extent();
    params.spacing = p.spacing;
    params.frame_count = p.frame_count;
    return make_blob_phantom(params);
}

DynamicImage build_simulation_phantom(const ExperimentConfig& config) {
    if (config.phantom.refinement == 1) return build_truth(config);
    const VoxelGrid fine = config.simulation_grid();
    BlobPhantomParams params;
    params.extent = fine.extent();
    params.spacing = fine.spacing();
    params.frame_count = config.phantom.frame_count;
    return make_blob_phantom(params);
}

MeasurementSet simulate_study_data(const ExperimentConfig& config, std::optional<int> views) {
    return simulate_measurements(build_simulation_phantom(config), config.scan_geometry(views));
}

std::vector<std::array<Index, 3>> default_tac_voxels(const ExperimentConfig& config) {
    if (!config.study.tac_voxels.empty()) return config.study.tac_voxels;
    const VoxelGrid grid = config.grid();
    if (config.phantom.kind == "blob") {
        const auto centers = blob_centers(grid);
        return {centers.begin(), centers.end()};
    }
    if (config.phantom.kind == "point") return {config.phantom.point_voxel};
    // Rank-4: the in-plane voxel of each region closest to that region's centroid, mid-slice.
    const auto labels = rank4_region_map(grid);
    const Index z = grid.nz() / 2;
    std::vector<std::array<Index, 3>> out;
    for (int r = 1; r <= 4; ++r) {
        double cx = 0.0, cy = 0.0;
        int count = 0;
        for (Index y = 0; y < grid.ny(); ++y)
            for (Index x = 0; x < grid.nx(); ++x)
                if (labels[static_cast<std::size_t>(grid.linear_index(x, y, z))] == r) {
                    cx += static_cast<double>(x);
                    cy += static_cast<double>(y);
                    ++count;
                }
        if (count == 0) continue;
        cx /= count;
        cy /= count;
        std::array<Index, 3> best{0, 0, z};
        double best_d = std::numeric_limits<double>::infinity();
        for (Index y = 0; y < grid.ny(); ++y)
            for (Index x = 0; x < grid.nx(); ++x) {
                if (labels[static_cast<std::size_t>(grid.linear_index(x, y, z))] != r) continue;
                const double d = std::hypot(static_cast<double>(x) - cx, static_cast<double>(y) - cy);
                if (d < best_d) {
                    best_d = d;
                    best = {x, y, z};
                }
            }
        out.push_back(best);
    }
    return out;
}

std::vector<double> tac_correlations(const FactoredImage& estimate, const DynamicImage& truth,
                                     const std::vector<std::array<Index, 3>>& voxels) {
    std::vector<double> out;
    for (const auto& v : voxels) {
        try {
            out.push_back(tac_similarity(extract_tac(estimate, v).values, extract_tac(truth, v).values));
        } catch (const UndefinedResultError&) {
            out.push_back(std::numeric_limits<double>::quiet_NaN());
        }
    }
    return out;
}

RunSummary run_reconstruction(const ExperimentConfig& config, const MeasurementSet& data,
                              const DynamicImage& truth, std::optional<double> kappa,
                              const IterationObserver& observer) {
    RunSummary run;
    SolverConfig solver = config.solver.solver;
    if (kappa) {
        run.kappa = *kappa;
        run.weights = balanced_regularization(*kappa, truth);
        solver.gamma = run.weights.gamma;
        solver.lambda = run.weights.lambda;
    } else {
        run.weights = {solver.gamma, solver.lambda};
    }
    run.result = reconstruct(solver, data, truth.grid, std::nullopt, observer);
    run.nse = nse_per_frame(run.result.image, truth);
    run.tac_correlation = tac_correlations(run.result.image, truth, default_tac_voxels(config));
    return run;
}

KappaSweep kappa_sweep(const ExperimentConfig& config, const MeasurementSet& data, const DynamicImage& truth) {
    KappaSweep sweep;
    for (double kappa : kappa_grid(data)) sweep.runs.push_back(run_reconstruction(config, data, truth, kappa));
    for (std::size_t i = 1; i < sweep.runs.size(); ++i)
        if (sweep.runs[i].nse.average < sweep.runs[sweep.best].nse.average) sweep.best = i;
    return sweep;
}

RunSummary tuned_reconstruction(const ExperimentConfig& config, const MeasurementSet& data,
                                const DynamicImage& truth) {
    if (config.solver.kappa) return run_reconstruction(config, data, truth, config.solver.kappa);
    auto sweep = kappa_sweep(config, data, truth);
    return std::move(sweep.runs[sweep.best]);
}

std::vector<SweepPoint> views_sweep(const ExperimentConfig& config) {
    const DynamicImage truth = build_truth(config);
    const DynamicImage source = build_simulation_phantom(config);
    std::vector<SweepPoint> out;
    for (int views : config.study.views) {
        const MeasurementSet clean = simulate_measurements(source, config.scan_geometry(views));
        const MeasurementSet data = add_noise(clean, config.noise.levels.front(), config.noise.seed);
        out.push_back({static_cast<double>(views), tuned_reconstruction(config, data, truth)});
    }
    return out;
}

std::vector<SweepPoint> noise_sweep(const ExperimentConfig& config) {
    const DynamicImage truth = build_truth(config);
    const MeasurementSet clean = simulate_study_data(config);
    std::vector<SweepPoint> out;
    for (double level : config.noise.levels) {
        const MeasurementSet data = add_noise(clean, level, config.noise.seed);
        out.push_back({level, tuned_reconstruction(config, data, truth)});
    }
    return out;
}

SosSweepReport ubp_calibration(const ExperimentConfig& config, const MeasurementSet& data,
                               std::span<const Index> frames) {
    const std::vector<double> speeds =
        config.study.sos_candidates.empty() ? default_sos_candidates() : config.study.sos_candidates;
    return sos_sweep(data, frames, config.grid(), speeds);
}

}  // namespace dpact
