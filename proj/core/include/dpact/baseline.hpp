#pragma once

#include "dpact/operator.hpp"
#include "dpact/phantoms.hpp"
#include "dpact/types.hpp"

#include <span>
#include <vector>

namespace dpact {

/// Static universal back-projection over the channels of the selected frames
/// (1-based), using sound speed `sound_speed` in place of the geometry's.
///
/// Each channel contributes b(t) = 2 p(t) - 2 t p'(t) sampled at the voxel's
/// time of flight by linear interpolation; p' uses central differences.
/// Channels carry uniform weights and the sum is divided by the channel count.
FrameImage ubp_reconstruct(const MeasurementSet& data, std::span<const Index> frames,
                           const VoxelGrid& grid, double sound_speed);

/// Mean squared spatial gradient (central differences, one-sided at faces).
double sharpness_score(const FrameImage& volume);

struct SosSweepReport {
    std::vector<double> speeds;
    std::vector<FrameImage> volumes;
    std::vector<double> scores;
    double suggested_speed = 0.0;
    Index suggested_index = 0;
};

/// UBP for each candidate speed (strictly increasing, at least two); the
/// speed with the highest sharpness score is suggested.
SosSweepReport sos_sweep(const MeasurementSet& data, std::span<const Index> frames,
                         const VoxelGrid& grid, std::span<const double> speeds);

/// 1480, 1485, ..., 1520 m/s.
std::vector<double> default_sos_candidates();

}  // namespace dpact
