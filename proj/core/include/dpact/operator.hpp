#pragma once

#include "dpact/geometry.hpp"
#include "dpact/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace dpact {

/// Expansion coefficients of one frame on a voxel grid (pascals).
struct FrameImage {
    VoxelGrid grid;
    Vector values;
};

/// Pressure traces of one frame, channel-major then time:
/// entry [q * P + p] holds channel q at fast-time p * sample_interval.
struct FrameData {
    Index channel_count = 0;
    Index sample_count = 0;
    Vector values;
};

struct ForwardStats {
    /// Fraction of (voxel, channel) pairs whose arrival falls past the recording window.
    double truncated_fraction = 0.0;
};

/// Matrix-free per-frame PACT imaging operator H_k and its transpose.
///
/// Each voxel is lumped to a point source of volume spacing^3. Its spherical
/// delay 1/|r' - r| is interpolated linearly onto the fast-time bins, the
/// resulting profile is differentiated with a central difference (one-sided
/// at both ends) and scaled by 1 / (4 pi c0^2). The adjoint applies the exact
/// transpose of every stage, so <H f, g> = <f, H^T g> to rounding.
///
/// forward() is parallel over channels and adjoint() over voxels; each output
/// entry is accumulated by a single thread in a fixed order, so results do not
/// depend on the thread count.
class FrameProjector {
public:
    FrameProjector(VoxelGrid grid, ScanGeometry geometry);

    [[nodiscard]] const VoxelGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] const ScanGeometry& geometry() const noexcept { return geometry_; }
    [[nodiscard]] Index image_size() const noexcept { return grid_.size(); }
    [[nodiscard]] Index data_size() const noexcept { return geometry_.frame_data_size(); }

    /// out = H_pose f. `out` must have data_size() entries.
    void forward(const FramePose& pose, std::span<const double> image, std::span<double> out,
                 ForwardStats* stats = nullptr) const;
    /// out = H_pose^T g. `out` must have image_size() entries.
    void adjoint(const FramePose& pose, std::span<const double> data, std::span<double> out) const;

    [[nodiscard]] Vector forward(const FramePose& pose, const Vector& image,
                                 ForwardStats* stats = nullptr) const;
    [[nodiscard]] Vector adjoint(const FramePose& pose, const Vector& data) const;

private:
    void check_pose(const FramePose& pose) const;

    VoxelGrid grid_;
    ScanGeometry geometry_;
    std::vector<double> xs_, ys_, zs_;
    double inv_bin_ = 0.0;      ///< 1 / (c0 * dT)
    double lump_weight_ = 0.0;  ///< spacing^3
    double scale_ = 0.0;        ///< 1 / (4 pi c0^2)
    double guard_radius_ = 0.0;
};

/// g = H_k f for the given pose.
FrameData forward(const FrameImage& image, const FramePose& pose, const ScanGeometry& geometry,
                  ForwardStats* stats = nullptr);

/// f = H_k^T g for the given pose, on `grid`.
FrameImage adjoint(const FrameData& data, const FramePose& pose, const ScanGeometry& geometry,
                   const VoxelGrid& grid);

/// True when c0 * dT <= spacing (no temporal aliasing gaps between voxels).
bool temporal_sampling_is_stable(const ScanGeometry& geometry, const VoxelGrid& grid);

/// Largest eigenvalue estimate of sum_k H_k^T H_k over `frames` (1-based) by
/// power iteration from a seeded Gaussian start vector.
double estimate_operator_norm(const ScanGeometry& geometry, const VoxelGrid& grid,
                              std::span<const Index> frames, int iterations, std::uint64_t seed);

}  // namespace dpact
