#pragma once

#include "dpact/geometry.hpp"
#include "dpact/lowrank.hpp"
#include "dpact/types.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dpact {

/// Dense spatiotemporal object: column k of `frames` is frame k+1.
struct DynamicImage {
    VoxelGrid grid;
    Matrix frames;  ///< N x K

    [[nodiscard]] Index frame_count() const noexcept { return frames.cols(); }
    [[nodiscard]] Index voxel_count() const noexcept { return frames.rows(); }
};

struct NoiseDescription {
    double percent = 0.0;
    std::uint64_t seed = 0;
    double reference_max_abs = 0.0;  ///< max |G| of the noiseless data
    double sigma = 0.0;
};

/// Data matrix G: column k holds the Q*P traces of frame k+1.
struct MeasurementSet {
    ScanGeometry geometry;
    Matrix frames;  ///< (Q*P) x K
    std::optional<NoiseDescription> noise;

    [[nodiscard]] Index frame_count() const noexcept { return frames.cols(); }
};

struct TimeActivityCurve {
    std::string label;
    Vector values;
};

struct Rank4PhantomParams {
    Index nx = 40, ny = 40, nz = 3;
    Index frame_count = 360;
    double spacing = 0.4e-3;
};

/// Four disjoint regions, constant along z: a static background ring and
/// three interior discs with ramp, raised-cosine and delayed-sigmoid
/// activity. The N x K matrix has rank exactly 4.
DynamicImage make_rank4_phantom(const Rank4PhantomParams& params = {});

/// Generator curve of region r (1..4) of the rank-4 phantom.
Vector rank4_region_tac(int region, Index frame_count);

/// Region label (0 = empty, 1..4) of every voxel of the rank-4 phantom.
std::vector<int> rank4_region_map(const VoxelGrid& grid);

struct BlobPhantomParams {
    Vec3 extent{0.040, 0.040, 0.030};  ///< meters
    double spacing = 0.4e-3;
    Index frame_count = 360;
    double peak = 1.0;
    double background = 0.1;
    /// Bound on |a[k+1] - a[k]| of any voxel curve, as a fraction of `peak`.
    double slope_bound = 0.25;
};

/// Low static ellipsoid holding four inner ellipsoidal blobs and two curved
/// tubes (blob 1 -> 2 and blob 3 -> 4) carrying a traveling contrast front.
/// Blobs 1 and 3 wash out, blobs 2 and 4 wash in; blob 4 rises only in the
/// last sixth of the scan.
DynamicImage make_blob_phantom(const BlobPhantomParams& params = {});

/// Grid for the blob phantom (centered, extent / spacing voxels per axis).
VoxelGrid blob_phantom_grid(const BlobPhantomParams& params);

/// Nearest voxel to the center of each blob on `grid`.
std::array<std::array<Index, 3>, 4> blob_centers(const VoxelGrid& grid);

/// Activity curve of blob b (1..4) sampled on frame_count frames, scaled by peak.
Vector blob_tac(int blob, Index frame_count, double peak = 1.0);

/// Static point absorber: a single nonzero voxel of value `amplitude` in every frame.
DynamicImage make_point_phantom(const VoxelGrid& grid, Index frame_count, std::array<Index, 3> voxel,
                                double amplitude = 1.0);

/// Forward-simulate every frame: g_k = H_k f_k with pose_for_frame(k).
MeasurementSet simulate_measurements(const DynamicImage& phantom, const ScanGeometry& geometry);

/// Add i.i.d. N(0, (percent/100 * max|G|)^2) noise, reproducible from `seed`.
MeasurementSet add_noise(const MeasurementSet& data, double percent, std::uint64_t seed);

TimeActivityCurve extract_tac(const DynamicImage& image, std::array<Index, 3> voxel);
TimeActivityCurve extract_tac(const FactoredImage& image, std::array<Index, 3> voxel);

}  // namespace dpact
