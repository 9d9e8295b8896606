#pragma once

#include "dpact/types.hpp"

#include <array>
#include <numbers>
#include <vector>

namespace dpact {

/// Uniform Cartesian grid of expansion-function nodes.
///
/// Nodes are ordered lexicographically with x varying fastest:
/// n = ix + nx * (iy + ny * iz).
class VoxelGrid {
public:
    VoxelGrid() = default;
    VoxelGrid(Vec3 origin, double spacing, Index nx, Index ny, Index nz);

    /// Grid whose node cloud is centered on the coordinate origin.
    static VoxelGrid centered(Index nx, Index ny, Index nz, double spacing);

    [[nodiscard]] const Vec3& origin() const noexcept { return origin_; }
    [[nodiscard]] double spacing() const noexcept { return spacing_; }
    [[nodiscard]] Index nx() const noexcept { return dims_[0]; }
    [[nodiscard]] Index ny() const noexcept { return dims_[1]; }
    [[nodiscard]] Index nz() const noexcept { return dims_[2]; }
    [[nodiscard]] std::array<Index, 3> dims() const noexcept { return dims_; }
    [[nodiscard]] Index size() const noexcept { return dims_[0] * dims_[1] * dims_[2]; }
    [[nodiscard]] double voxel_volume() const noexcept { return spacing_ * spacing_ * spacing_; }

    [[nodiscard]] Index linear_index(Index ix, Index iy, Index iz) const;
    [[nodiscard]] std::array<Index, 3> node_index(Index n) const;
    [[nodiscard]] Vec3 position(Index n) const;
    [[nodiscard]] Vec3 position(Index ix, Index iy, Index iz) const;
    [[nodiscard]] Vec3 center() const;
    /// Physical size spanned by the voxels (dims * spacing).
    [[nodiscard]] Vec3 extent() const;

    [[nodiscard]] bool contains(Index ix, Index iy, Index iz) const noexcept;

    friend bool operator==(const VoxelGrid&, const VoxelGrid&) = default;

private:
    Vec3 origin_ = Vec3::Zero();
    double spacing_ = 1.0;
    std::array<Index, 3> dims_{1, 1, 1};
};

/// One vertically oriented arc of point-like transducers.
///
/// Elements sit on a circle of `radius` in the vertical plane at azimuth
/// `azimuth_offset`; `polar_angles` are elevations above the horizontal
/// plane through the grid center.
struct TransducerArc {
    double radius = 0.065;
    std::vector<double> polar_angles;
    double azimuth_offset = 0.0;

    [[nodiscard]] Index element_count() const noexcept {
        return static_cast<Index>(polar_angles.size());
    }
    /// Element position before any gantry rotation.
    [[nodiscard]] Vec3 element_position(Index element) const;

    friend bool operator==(const TransducerArc&, const TransducerArc&) = default;
};

inline constexpr double kDefaultArcRadius = 0.065;
inline constexpr Index kDefaultArcElements = 96;
inline constexpr double kDefaultPolarSpan = std::numbers::pi / 2.0;
inline constexpr double kDefaultSoundSpeed = 1495.0;
inline constexpr double kDefaultSamplingRate = 31.25e6;
inline constexpr Index kDefaultSampleCount = 2048;
inline constexpr double kDefaultFramePeriod = 0.1;

/// Arc with `count` elements uniformly spaced in elevation over
/// [-polar_span/2, polar_span/2]. A single element sits on the horizontal plane.
TransducerArc build_arc(double radius, Index count, double polar_span = kDefaultPolarSpan,
                        double azimuth_offset = 0.0);

/// Azimuth offsets used for 1, 2 or 4 tomographic views per frame.
std::vector<double> view_offsets(int views);

/// Sequential rotating-gantry acquisition.
struct ScanGeometry {
    std::vector<TransducerArc> arcs;
    double angular_step = std::numbers::pi / 180.0;  ///< radians per imaging frame
    Index frame_count = 360;
    double sound_speed = kDefaultSoundSpeed;          ///< m/s
    Index sample_count = kDefaultSampleCount;
    double sample_interval = 1.0 / kDefaultSamplingRate;  ///< seconds
    double frame_period = kDefaultFramePeriod;        ///< seconds, metadata only

    /// Throws std::invalid_argument when any invariant is violated.
    void validate() const;

    [[nodiscard]] Index channel_count() const noexcept;
    [[nodiscard]] Index frame_data_size() const noexcept { return channel_count() * sample_count; }
    [[nodiscard]] int view_count() const noexcept { return static_cast<int>(arcs.size()); }
    /// Gantry rotation rate implied by angular_step / frame_period, degrees per second.
    [[nodiscard]] double rotation_speed_deg_per_s() const noexcept;
    [[nodiscard]] double scan_duration() const noexcept {
        return static_cast<double>(frame_count) * frame_period;
    }

    friend bool operator==(const ScanGeometry&, const ScanGeometry&) = default;
};

struct ScanParameters {
    int views = 1;
    Index frame_count = 360;
    double angular_step = std::numbers::pi / 180.0;
    double radius = kDefaultArcRadius;
    Index elements_per_arc = kDefaultArcElements;
    double polar_span = kDefaultPolarSpan;
    double sound_speed = kDefaultSoundSpeed;
    Index sample_count = kDefaultSampleCount;
    double sample_interval = 1.0 / kDefaultSamplingRate;
    double frame_period = kDefaultFramePeriod;
};

/// Virtual rotating-gantry scanner with 1, 2 or 4 arcs per frame.
ScanGeometry make_scan_geometry(const ScanParameters& params);

/// Transducer positions for one imaging frame, channel-ordered
/// arc-by-arc then element-by-element.
struct FramePose {
    Index frame_index = 1;  ///< 1-based
    std::vector<Vec3> positions;

    [[nodiscard]] Index channel_count() const noexcept {
        return static_cast<Index>(positions.size());
    }
};

/// Rotate every element about z by (k-1) * angular_step. k is 1-based.
FramePose pose_for_frame(const ScanGeometry& geometry, Index k);

/// Element positions for an arbitrary gantry angle (radians); frame_index is 0.
FramePose pose_at_rotation(const ScanGeometry& geometry, double angle);

/// Channel index of (arc, element) in the concatenated frame ordering.
Index channel_index(const ScanGeometry& geometry, Index arc, Index element);

}  // namespace dpact
