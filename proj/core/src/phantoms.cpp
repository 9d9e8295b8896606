#include "dpact/phantoms.hpp"

#include "dpact/operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace dpact {
namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double frame_time(Index k, Index frame_count) {
    return frame_count > 1 ? static_cast<double>(k) / static_cast<double>(frame_count - 1) : 0.0;
}

// Voxel position in units of the grid half-extent, relative to the grid center.
Vec3 normalized_position(const VoxelGrid& grid, Index n) {
    const Vec3 half = 0.5 * grid.extent();
    return (grid.position(n) - grid.center()).cwiseQuotient(half);
}

struct Ellipsoid {
    Vec3 center;
    Vec3 semi_axes;
    [[nodiscard]] bool contains(const Vec3& u) const {
        return (u - center).cwiseQuotient(semi_axes).squaredNorm() <= 1.0;
    }
};

const std::array<Ellipsoid, 4>& blob_shapes() {
    static const std::array<Ellipsoid, 4> blobs{{
        {Vec3(-0.45, 0.42, 0.20), Vec3(0.27, 0.20, 0.30)},
        {Vec3(0.45, 0.42, -0.20), Vec3(0.24, 0.24, 0.30)},
        {Vec3(-0.45, -0.42, -0.20), Vec3(0.24, 0.24, 0.30)},
        {Vec3(0.45, -0.42, 0.20), Vec3(0.27, 0.20, 0.30)},
    }};
    return blobs;
}

const Ellipsoid kOuterEllipsoid{Vec3::Zero(), Vec3(0.95, 0.95, 0.90)};
constexpr double kTubeRadius = 0.10;
constexpr double kTubeFrontWidth = 0.10;
constexpr double kTubeLevel = 0.8;
constexpr int kTubeSamples = 256;

struct Tube {
    Vec3 start, control, end;
    double t_begin, t_end;  ///< front travels start -> end over [t_begin, t_end]
    [[nodiscard]] Vec3 point(double s) const {
        return (1 - s) * (1 - s) * start + 2 * (1 - s) * s * control + s * s * end;
    }
};

std::array<Tube, 2> tubes() {
    const auto& b = blob_shapes();
    return {{
        {b[0].center, Vec3(0.0, 0.85, 0.0), b[1].center, 0.05, 0.45},
        {b[2].center, Vec3(0.0, -0.85, 0.0), b[3].center, 0.45, 0.85},
    }};
}

double tube_level(const Tube& tube, double s, double t) {
    const double front = (t - tube.t_begin) / (tube.t_end - tube.t_begin);
    return kTubeLevel * logistic((front - s) / kTubeFrontWidth);
}

}  // namespace

Vector rank4_region_tac(int region, Index frame_count) {
    Vector a(frame_count);
    for (Index k = 0; k < frame_count; ++k) {
        const double t = frame_time(k, frame_count);
        switch (region) {
            case 1: a[k] = 0.5; break;
            case 2: a[k] = 0.2 + 0.8 * t; break;
            case 3: a[k] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * t)); break;
            case 4: a[k] = logistic((t - 0.6) / 0.05); break;
            default: throw std::invalid_argument("rank4_region_tac: region must be 1..4");
        }
    }
    return a;
}

std::vector<int> rank4_region_map(const VoxelGrid& grid) {
    struct Disc {
        double cx, cy, radius;
    };
    constexpr std::array<Disc, 3> discs{{{-0.35, -0.25, 0.22}, {0.35, -0.25, 0.22}, {0.0, 0.35, 0.22}}};
    std::vector<int> labels(static_cast<std::size_t>(grid.size()), 0);
    for (Index n = 0; n < grid.size(); ++n) {
        const Vec3 u = normalized_position(grid, n);
        const double rho = std::hypot(u.x(), u.y());
        int label = 0;
        if (rho >= 0.70 && rho <= 0.92) label = 1;
        for (std::size_t d = 0; d < discs.size(); ++d)
            if (std::hypot(u.x() - discs[d].cx, u.y() - discs[d].cy) <= discs[d].radius)
                label = static_cast<int>(d) + 2;
        labels[static_cast<std::size_t>(n)] = label;
    }
    return labels;
}

DynamicImage make_rank4_phantom(const Rank4PhantomParams& params) {
    if (params.frame_count < 4)
        throw std::invalid_argument("make_rank4_phantom: at least 4 frames are needed for rank 4");
    DynamicImage image;
    image.grid = VoxelGrid::centered(params.nx, params.ny, params.nz, params.spacing);
    const auto labels = rank4_region_map(image.grid);
    for (int r = 1; r <= 4; ++r)
        if (std::find(labels.begin(), labels.end(), r) == labels.end())
            throw std::invalid_argument("make_rank4_phantom: grid too coarse to resolve every region");

    std::array<Vector, 4> tacs;
    for (int r = 1; r <= 4; ++r) tacs[static_cast<std::size_t>(r - 1)] = rank4_region_tac(r, params.frame_count);
    image.frames = Matrix::Zero(image.grid.size(), params.frame_count);
    for (Index n = 0; n < image.grid.size(); ++n) {
        const int label = labels[static_cast<std::size_t>(n)];
        if (label > 0) image.frames.row(n) = tacs[static_cast<std::size_t>(label - 1)].transpose();
    }
    return image;
}

Vector blob_tac(int blob, Index frame_count, double peak) {
    struct Shape {
        double center, width, sign;
    };
    constexpr std::array<Shape, 4> shapes{{
        {0.30, 0.06, -1.0},   // wash-out
        {0.45, 0.06, +1.0},   // wash-in
        {0.60, 0.06, -1.0},   // wash-out
        {0.90, 0.025, +1.0},  // late wash-in
    }};
    if (blob < 1 || blob > 4) throw std::invalid_argument("blob_tac: blob must be 1..4");
    const auto& s = shapes[static_cast<std::size_t>(blob - 1)];
    Vector a(frame_count);
    for (Index k = 0; k < frame_count; ++k) {
        const double t = frame_time(k, frame_count);
        a[k] = peak * (0.25 + 0.75 * logistic(s.sign * (t - s.center) / s.width));
    }
    return a;
}

VoxelGrid blob_phantom_grid(const BlobPhantomParams& params) {
    if (!(params.spacing > 0.0)) throw std::invalid_argument("make_blob_phantom: spacing must be positive");
    std::array<Index, 3> dims{};
    for (int axis = 0; axis < 3; ++axis) {
        const double ratio = params.extent[axis] / params.spacing;
        const double rounded = std::round(ratio);
        if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-6 * std::max(1.0, ratio))
            throw std::invalid_argument("make_blob_phantom: extent must be a multiple of spacing");
        dims[static_cast<std::size_t>(axis)] = static_cast<Index>(rounded);
    }
    return VoxelGrid::centered(dims[0], dims[1], dims[2], params.spacing);
}

std::array<std::array<Index, 3>, 4> blob_centers(const VoxelGrid& grid) {
    std::array<std::array<Index, 3>, 4> out{};
    const Vec3 half = 0.5 * grid.extent();
    for (std::size_t b = 0; b < 4; ++b) {
        const Vec3 r = grid.center() + blob_shapes()[b].center.cwiseProduct(half);
        const Vec3 idx = (r - grid.origin()) / grid.spacing();
        const auto dims = grid.dims();
        for (std::size_t a = 0; a < 3; ++a)
            out[b][a] = std::clamp<Index>(static_cast<Index>(std::lround(idx[static_cast<Index>(a)])), 0,
                                          dims[a] - 1);
    }
    return out;
}

DynamicImage make_blob_phantom(const BlobPhantomParams& params) {
    if (params.frame_count < 1) throw std::invalid_argument("make_blob_phantom: frame_count must be >= 1");
    if (!(params.peak > 0.0) || params.background < 0.0 || params.background > params.peak)
        throw std::invalid_argument("make_blob_phantom: need 0 <= background <= peak, peak > 0");
    DynamicImage image;
    image.grid = blob_phantom_grid(params);
    const Index N = image.grid.size();
    const Index K = params.frame_count;

    std::array<Vector, 4> blob_curves;
    for (int b = 1; b <= 4; ++b) blob_curves[static_cast<std::size_t>(b - 1)] = blob_tac(b, K, params.peak);

    const auto tube_set = tubes();
    std::array<std::vector<Vec3>, 2> tube_points;
    for (std::size_t t = 0; t < 2; ++t)
        for (int i = 0; i <= kTubeSamples; ++i)
            tube_points[t].push_back(tube_set[t].point(static_cast<double>(i) / kTubeSamples));

    image.frames = Matrix::Zero(N, K);
    // Structures are exclusive; blobs take priority over tubes over the outer ellipsoid.
    auto fill_voxel = [&](Index n) {
        const Vec3 u = normalized_position(image.grid, n);
        for (std::size_t b = 0; b < 4; ++b) {
            if (blob_shapes()[b].contains(u)) {
                image.frames.row(n) = blob_curves[b].transpose();
                return;
            }
        }
        for (std::size_t t = 0; t < 2; ++t) {
            double best = std::numeric_limits<double>::infinity();
            int best_i = 0;
            for (int i = 0; i <= kTubeSamples; ++i) {
                const double d = (tube_points[t][static_cast<std::size_t>(i)] - u).squaredNorm();
                if (d < best) {
                    best = d;
                    best_i = i;
                }
            }
            if (best <= kTubeRadius * kTubeRadius) {
                const double s = static_cast<double>(best_i) / kTubeSamples;
                for (Index k = 0; k < K; ++k)
                    image.frames(n, k) = params.peak * tube_level(tube_set[t], s, frame_time(k, K));
                return;
            }
        }
        if (kOuterEllipsoid.contains(u)) image.frames.row(n).setConstant(params.background);
    };
#pragma omp parallel for schedule(static)
    for (Index n = 0; n < N; ++n) fill_voxel(n);
    return image;
}

DynamicImage make_point_phantom(const VoxelGrid& grid, Index frame_count, std::array<Index, 3> voxel,
                                double amplitude) {
    if (frame_count < 1) throw std::invalid_argument("make_point_phantom: need at least one frame");
    if (!grid.contains(voxel[0], voxel[1], voxel[2]))
        throw std::invalid_argument("make_point_phantom: voxel outside the grid");
    DynamicImage image{grid, Matrix::Zero(grid.size(), frame_count)};
    image.frames.row(grid.linear_index(voxel[0], voxel[1], voxel[2])).setConstant(amplitude);
    return image;
}

MeasurementSet simulate_measurements(const DynamicImage& phantom, const ScanGeometry& geometry) {
    geometry.validate();
    if (phantom.frame_count() != geometry.frame_count)
        throw std::invalid_argument("simulate_measurements: phantom and geometry frame counts differ");
    if (phantom.voxel_count() != phantom.grid.size())
        throw std::invalid_argument("simulate_measurements: phantom frames do not match its grid");
    double min_radius = std::numeric_limits<double>::infinity();
    for (const auto& arc : geometry.arcs) min_radius = std::min(min_radius, arc.radius);
    const Vec3 far_corner = phantom.grid.center().cwiseAbs() + 0.5 * phantom.grid.extent();
    if (far_corner.norm() >= min_radius)
        throw std::invalid_argument("simulate_measurements: grid extends beyond the transducer arcs");

    const FrameProjector projector(phantom.grid, geometry);
    MeasurementSet out;
    out.geometry = geometry;
    out.frames = Matrix(projector.data_size(), geometry.frame_count);
    for (Index k = 1; k <= geometry.frame_count; ++k) {
        const FramePose pose = pose_for_frame(geometry, k);
        projector.forward(pose,
                          std::span<const double>(phantom.frames.col(k - 1).data(),
                                                  static_cast<std::size_t>(phantom.voxel_count())),
                          std::span<double>(out.frames.col(k - 1).data(),
                                            static_cast<std::size_t>(projector.data_size())));
    }
    return out;
}

MeasurementSet add_noise(const MeasurementSet& data, double percent, std::uint64_t seed) {
    if (!(percent >= 0.0)) throw std::invalid_argument("add_noise: percent must be >= 0");
    MeasurementSet out = data;
    const double max_abs = data.frames.size() ? data.frames.cwiseAbs().maxCoeff() : 0.0;
    const double sigma = percent / 100.0 * max_abs;
    out.noise = NoiseDescription{percent, seed, max_abs, sigma};
    if (percent == 0.0) return out;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, sigma);
    double* values = out.frames.data();
    for (Index i = 0; i < out.frames.size(); ++i) values[i] += gauss(rng);
    return out;
}

TimeActivityCurve extract_tac(const DynamicImage& image, std::array<Index, 3> voxel) {
    if (!image.grid.contains(voxel[0], voxel[1], voxel[2]))
        throw std::invalid_argument("extract_tac: voxel outside grid");
    const Index n = image.grid.linear_index(voxel[0], voxel[1], voxel[2]);
    return {"voxel", image.frames.row(n).transpose()};
}

TimeActivityCurve extract_tac(const FactoredImage& image, std::array<Index, 3> voxel) {
    if (!image.grid.contains(voxel[0], voxel[1], voxel[2]))
        throw std::invalid_argument("extract_tac: voxel outside grid");
    const Index n = image.grid.linear_index(voxel[0], voxel[1], voxel[2]);
    if (image.rank() == 0) return {"voxel", Vector::Zero(image.frame_count())};
    return {"voxel", image.V * image.S.cwiseProduct(image.U.row(n).transpose())};
}

}  // namespace dpact
