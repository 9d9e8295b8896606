#include "dpact/geometry.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dpact {

VoxelGrid::VoxelGrid(Vec3 origin, double spacing, Index nx, Index ny, Index nz)
    : origin_(std::move(origin)), spacing_(spacing), dims_{nx, ny, nz} {
    if (!(spacing > 0.0) || !std::isfinite(spacing))
        throw std::invalid_argument("VoxelGrid: spacing must be positive");
    if (nx < 1 || ny < 1 || nz < 1)
        throw std::invalid_argument("VoxelGrid: all dimensions must be >= 1");
    if (!origin_.allFinite()) throw std::invalid_argument("VoxelGrid: origin must be finite");
}

VoxelGrid VoxelGrid::centered(Index nx, Index ny, Index nz, double spacing) {
    const Vec3 origin(-0.5 * static_cast<double>(nx - 1) * spacing,
                      -0.5 * static_cast<double>(ny - 1) * spacing,
                      -0.5 * static_cast<double>(nz - 1) * spacing);
    return VoxelGrid(origin, spacing, nx, ny, nz);
}

Index VoxelGrid::linear_index(Index ix, Index iy, Index iz) const {
    if (!contains(ix, iy, iz)) throw std::invalid_argument("VoxelGrid: node index out of range");
    return ix + dims_[0] * (iy + dims_[1] * iz);
}

std::array<Index, 3> VoxelGrid::node_index(Index n) const {
    if (n < 0 || n >= size()) throw std::invalid_argument("VoxelGrid: linear index out of range");
    const Index ix = n % dims_[0];
    const Index rest = n / dims_[0];
    return {ix, rest % dims_[1], rest / dims_[1]};
}

Vec3 VoxelGrid::position(Index n) const {
    const auto [ix, iy, iz] = node_index(n);
    return position(ix, iy, iz);
}

Vec3 VoxelGrid::position(Index ix, Index iy, Index iz) const {
    return origin_ + spacing_ * Vec3(static_cast<double>(ix), static_cast<double>(iy),
                                     static_cast<double>(iz));
}

Vec3 VoxelGrid::center() const {
    return origin_ + 0.5 * spacing_ *
                         Vec3(static_cast<double>(dims_[0] - 1), static_cast<double>(dims_[1] - 1),
                              static_cast<double>(dims_[2] - 1));
}

Vec3 VoxelGrid::extent() const {
    return spacing_ * Vec3(static_cast<double>(dims_[0]), static_cast<double>(dims_[1]),
                           static_cast<double>(dims_[2]));
}

bool VoxelGrid::contains(Index ix, Index iy, Index iz) const noexcept {
    return ix >= 0 && iy >= 0 && iz >= 0 && ix < dims_[0] && iy < dims_[1] && iz < dims_[2];
}

Vec3 TransducerArc::element_position(Index element) const {
    if (element < 0 || element >= element_count())
        throw std::invalid_argument("TransducerArc: element index out of range");
    const double elevation = polar_angles[static_cast<std::size_t>(element)];
    const double horizontal = radius * std::cos(elevation);
    return {horizontal * std::cos(azimuth_offset), horizontal * std::sin(azimuth_offset),
            radius * std::sin(elevation)};
}

TransducerArc build_arc(double radius, Index count, double polar_span, double azimuth_offset) {
    if (!(radius > 0.0)) throw std::invalid_argument("build_arc: radius must be positive");
    if (count < 1) throw std::invalid_argument("build_arc: element count must be >= 1");
    if (!(polar_span > 0.0) || polar_span > std::numbers::pi)
        throw std::invalid_argument("build_arc: polar span must lie in (0, pi]");

    TransducerArc arc;
    arc.radius = radius;
    arc.azimuth_offset = azimuth_offset;
    arc.polar_angles.resize(static_cast<std::size_t>(count));
    if (count == 1) {
        arc.polar_angles[0] = 0.0;
    } else {
        const double step = polar_span / static_cast<double>(count - 1);
        for (Index i = 0; i < count; ++i)
            arc.polar_angles[static_cast<std::size_t>(i)] =
                -0.5 * polar_span + step * static_cast<double>(i);
        // Symmetric about the horizontal plane; pin the middle element for odd counts.
        if (count % 2 == 1) arc.polar_angles[static_cast<std::size_t>(count / 2)] = 0.0;
    }
    return arc;
}

std::vector<double> view_offsets(int views) {
    constexpr double pi = std::numbers::pi;
    switch (views) {
        case 1: return {0.0};
        case 2: return {0.0, pi / 2.0};
        case 4: return {0.0, pi / 4.0, pi / 2.0, 3.0 * pi / 4.0};
        default: throw std::invalid_argument("view count must be 1, 2 or 4");
    }
}

void ScanGeometry::validate() const {
    std::ostringstream err;
    if (arcs.empty()) err << "at least one arc is required; ";
    for (const auto& arc : arcs) {
        if (!(arc.radius > 0.0)) err << "arc radius must be positive; ";
        if (arc.polar_angles.empty()) err << "arc must have at least one element; ";
        for (std::size_t i = 1; i < arc.polar_angles.size(); ++i)
            if (!(arc.polar_angles[i] > arc.polar_angles[i - 1])) {
                err << "arc polar angles must be strictly increasing; ";
                break;
            }
    }
    if (frame_count < 1) err << "frame count must be >= 1; ";
    if (!(sound_speed > 0.0)) err << "sound speed must be positive; ";
    if (sample_count < 2) err << "sample count must be >= 2; ";
    if (!(sample_interval > 0.0)) err << "sample interval must be positive; ";
    if (!std::isfinite(angular_step)) err << "angular step must be finite; ";
    const auto msg = err.str();
    if (!msg.empty()) throw std::invalid_argument("ScanGeometry: " + msg);
}

Index ScanGeometry::channel_count() const noexcept {
    Index total = 0;
    for (const auto& arc : arcs) total += arc.element_count();
    return total;
}

double ScanGeometry::rotation_speed_deg_per_s() const noexcept {
    return angular_step * 180.0 / std::numbers::pi / frame_period;
}

ScanGeometry make_scan_geometry(const ScanParameters& params) {
    ScanGeometry geometry;
    for (double offset : view_offsets(params.views))
        geometry.arcs.push_back(
            build_arc(params.radius, params.elements_per_arc, params.polar_span, offset));
    geometry.angular_step = params.angular_step;
    geometry.frame_count = params.frame_count;
    geometry.sound_speed = params.sound_speed;
    geometry.sample_count = params.sample_count;
    geometry.sample_interval = params.sample_interval;
    geometry.frame_period = params.frame_period;
    geometry.validate();
    return geometry;
}

FramePose pose_at_rotation(const ScanGeometry& geometry, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    FramePose pose;
    pose.frame_index = 0;
    pose.positions.reserve(static_cast<std::size_t>(geometry.channel_count()));
    for (const auto& arc : geometry.arcs) {
        for (Index e = 0; e < arc.element_count(); ++e) {
            const Vec3 p = arc.element_position(e);
            pose.positions.emplace_back(c * p.x() - s * p.y(), s * p.x() + c * p.y(), p.z());
        }
    }
    return pose;
}

FramePose pose_for_frame(const ScanGeometry& geometry, Index k) {
    if (k < 1 || k > geometry.frame_count)
        throw std::invalid_argument("pose_for_frame: frame index out of range");
    FramePose pose = pose_at_rotation(geometry, static_cast<double>(k - 1) * geometry.angular_step);
    pose.frame_index = k;
    return pose;
}

Index channel_index(const ScanGeometry& geometry, Index arc, Index element) {
    if (arc < 0 || arc >= static_cast<Index>(geometry.arcs.size()))
        throw std::invalid_argument("channel_index: arc out of range");
    const auto& a = geometry.arcs[static_cast<std::size_t>(arc)];
    if (element < 0 || element >= a.element_count())
        throw std::invalid_argument("channel_index: element out of range");
    Index offset = 0;
    for (Index i = 0; i < arc; ++i) offset += geometry.arcs[static_cast<std::size_t>(i)].element_count();
    return offset + element;
}

}  // namespace dpact
