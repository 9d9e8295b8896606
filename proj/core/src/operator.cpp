#include "dpact/operator.hpp"

#include "dpact/log.hpp"
#include "dpact/power_iteration.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dpact {
namespace {

// Fast-time difference y = D s: central in the interior, one-sided at the ends.
void difference(std::span<const double> s, std::span<double> y, double dt) {
    const std::size_t P = s.size();
    const double inv = 1.0 / dt;
    const double half = 0.5 * inv;
    y[0] = (s[1] - s[0]) * inv;
    for (std::size_t p = 1; p + 1 < P; ++p) y[p] = (s[p + 1] - s[p - 1]) * half;
    y[P - 1] = (s[P - 1] - s[P - 2]) * inv;
}

// h = D^T y.
void difference_transpose(std::span<const double> y, std::span<double> h, double dt) {
    const std::size_t P = y.size();
    const double inv = 1.0 / dt;
    const double half = 0.5 * inv;
    for (std::size_t p = 0; p < P; ++p) h[p] = 0.0;
    h[0] -= y[0] * inv;
    h[1] += y[0] * inv;
    for (std::size_t p = 1; p + 1 < P; ++p) {
        h[p + 1] += y[p] * half;
        h[p - 1] -= y[p] * half;
    }
    h[P - 1] += y[P - 1] * inv;
    h[P - 2] -= y[P - 1] * inv;
}

}  // namespace

FrameProjector::FrameProjector(VoxelGrid grid, ScanGeometry geometry)
    : grid_(std::move(grid)), geometry_(std::move(geometry)) {
    geometry_.validate();
    const Index n = grid_.size();
    xs_.resize(static_cast<std::size_t>(n));
    ys_.resize(static_cast<std::size_t>(n));
    zs_.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        const Vec3 r = grid_.position(i);
        xs_[static_cast<std::size_t>(i)] = r.x();
        ys_[static_cast<std::size_t>(i)] = r.y();
        zs_[static_cast<std::size_t>(i)] = r.z();
    }
    const double c0 = geometry_.sound_speed;
    inv_bin_ = 1.0 / (c0 * geometry_.sample_interval);
    lump_weight_ = grid_.voxel_volume();
    scale_ = 1.0 / (4.0 * std::numbers::pi * c0 * c0);
    guard_radius_ = grid_.spacing() / 10.0;
    if (!temporal_sampling_is_stable(geometry_, grid_)) {
        std::ostringstream msg;
        msg << "c0*dT = " << c0 * geometry_.sample_interval << " m exceeds grid spacing "
            << grid_.spacing() << " m; fast-time sampling leaves gaps between voxels";
        warn(msg.str());
    }
}

void FrameProjector::check_pose(const FramePose& pose) const {
    if (pose.channel_count() != geometry_.channel_count())
        throw std::invalid_argument("FrameProjector: pose channel count does not match geometry");
}

void FrameProjector::forward(const FramePose& pose, std::span<const double> image,
                             std::span<double> out, ForwardStats* stats) const {
    check_pose(pose);
    const Index N = image_size();
    const Index Q = geometry_.channel_count();
    const Index P = geometry_.sample_count;
    if (static_cast<Index>(image.size()) != N)
        throw std::invalid_argument("forward: image length does not match grid");
    if (static_cast<Index>(out.size()) != Q * P)
        throw std::invalid_argument("forward: output length does not match Q*P");

    const double* xs = xs_.data();
    const double* ys = ys_.data();
    const double* zs = zs_.data();
    const double* f = image.data();
    const double guard2 = guard_radius_ * guard_radius_;
    const double last_bin = static_cast<double>(P - 1);
    const auto last_pair = static_cast<std::size_t>(P - 2);
    long long truncated = 0;
    bool singular = false;

#pragma omp parallel reduction(+ : truncated) reduction(|| : singular)
    {
        std::vector<double> profile(static_cast<std::size_t>(P));
#pragma omp for schedule(static)
        for (Index q = 0; q < Q; ++q) {
            std::fill(profile.begin(), profile.end(), 0.0);
            const Vec3& rq = pose.positions[static_cast<std::size_t>(q)];
            const double px = rq.x(), py = rq.y(), pz = rq.z();
            for (Index n = 0; n < N; ++n) {
                const double dx = xs[n] - px, dy = ys[n] - py, dz = zs[n] - pz;
                const double d2 = dx * dx + dy * dy + dz * dz;
                if (d2 < guard2) {
                    singular = true;
                    continue;
                }
                const double d = std::sqrt(d2);
                const double tau = d * inv_bin_;
                if (tau > last_bin) {
                    ++truncated;
                    continue;
                }
                const auto bin = std::min(static_cast<std::size_t>(tau), last_pair);
                const double frac = tau - static_cast<double>(bin);
                const double a = f[n] * lump_weight_ / d;
                profile[bin] += a * (1.0 - frac);
                profile[bin + 1] += a * frac;
            }
            std::span<double> trace = out.subspan(static_cast<std::size_t>(q * P),
                                                  static_cast<std::size_t>(P));
            difference(profile, trace, geometry_.sample_interval);
            for (double& v : trace) v *= scale_;
        }
    }
    if (singular)
        throw SingularGeometryError("forward: a voxel lies within spacing/10 of a transducer");
    if (stats)
        stats->truncated_fraction =
            static_cast<double>(truncated) / static_cast<double>(std::max<Index>(1, N * Q));
}

void FrameProjector::adjoint(const FramePose& pose, std::span<const double> data,
                             std::span<double> out) const {
    check_pose(pose);
    const Index N = image_size();
    const Index Q = geometry_.channel_count();
    const Index P = geometry_.sample_count;
    if (static_cast<Index>(data.size()) != Q * P)
        throw std::invalid_argument("adjoint: data length does not match Q*P");
    if (static_cast<Index>(out.size()) != N)
        throw std::invalid_argument("adjoint: output length does not match grid");

    // Transposed difference per channel, scaled once.
    std::vector<double> profiles(static_cast<std::size_t>(Q * P));
#pragma omp parallel for schedule(static)
    for (Index q = 0; q < Q; ++q) {
        const auto off = static_cast<std::size_t>(q * P);
        std::span<double> h(profiles.data() + off, static_cast<std::size_t>(P));
        difference_transpose(data.subspan(off, static_cast<std::size_t>(P)), h,
                             geometry_.sample_interval);
        for (double& v : h) v *= scale_;
    }

    const double guard2 = guard_radius_ * guard_radius_;
    const double last_bin = static_cast<double>(P - 1);
    const double* h = profiles.data();
    bool singular = false;

    // Each thread owns a contiguous voxel block and sweeps channels in order, so
    // every voxel sums its channel contributions in the same order regardless of
    // the thread count, while the channel's profile stays cache resident.
#pragma omp parallel reduction(|| : singular)
    {
#ifdef _OPENMP
        const Index threads = omp_get_num_threads();
        const Index tid = omp_get_thread_num();
#else
        const Index threads = 1;
        const Index tid = 0;
#endif
        const Index chunk = (N + threads - 1) / threads;
        const Index begin = std::min(N, tid * chunk);
        const Index end = std::min(N, begin + chunk);
        for (Index n = begin; n < end; ++n) out[static_cast<std::size_t>(n)] = 0.0;
        for (Index q = 0; q < Q; ++q) {
            const Vec3& rq = pose.positions[static_cast<std::size_t>(q)];
            const double px = rq.x(), py = rq.y(), pz = rq.z();
            const double* hq = h + q * P;
            for (Index n = begin; n < end; ++n) {
                const auto i = static_cast<std::size_t>(n);
                const double dx = xs_[i] - px, dy = ys_[i] - py, dz = zs_[i] - pz;
                const double d2 = dx * dx + dy * dy + dz * dz;
                if (d2 < guard2) {
                    singular = true;
                    continue;
                }
                const double d = std::sqrt(d2);
                const double tau = d * inv_bin_;
                if (tau > last_bin) continue;
                const auto bin = std::min(static_cast<Index>(tau), P - 2);
                const double frac = tau - static_cast<double>(bin);
                out[i] += (hq[bin] * (1.0 - frac) + hq[bin + 1] * frac) * (lump_weight_ / d);
            }
        }
    }
    if (singular)
        throw SingularGeometryError("adjoint: a voxel lies within spacing/10 of a transducer");
}

Vector FrameProjector::forward(const FramePose& pose, const Vector& image,
                               ForwardStats* stats) const {
    Vector out(data_size());
    forward(pose, std::span<const double>(image.data(), static_cast<std::size_t>(image.size())),
            std::span<double>(out.data(), static_cast<std::size_t>(out.size())), stats);
    return out;
}

Vector FrameProjector::adjoint(const FramePose& pose, const Vector& data) const {
    Vector out(image_size());
    adjoint(pose, std::span<const double>(data.data(), static_cast<std::size_t>(data.size())),
            std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
    return out;
}

FrameData forward(const FrameImage& image, const FramePose& pose, const ScanGeometry& geometry,
                  ForwardStats* stats) {
    const FrameProjector projector(image.grid, geometry);
    FrameData data;
    data.channel_count = geometry.channel_count();
    data.sample_count = geometry.sample_count;
    data.values = projector.forward(pose, image.values, stats);
    return data;
}

FrameImage adjoint(const FrameData& data, const FramePose& pose, const ScanGeometry& geometry,
                   const VoxelGrid& grid) {
    const FrameProjector projector(grid, geometry);
    return FrameImage{grid, projector.adjoint(pose, data.values)};
}

bool temporal_sampling_is_stable(const ScanGeometry& geometry, const VoxelGrid& grid) {
    return geometry.sound_speed * geometry.sample_interval <= grid.spacing();
}

double estimate_operator_norm(const ScanGeometry& geometry, const VoxelGrid& grid,
                              std::span<const Index> frames, int iterations, std::uint64_t seed) {
    if (frames.empty()) throw std::invalid_argument("estimate_operator_norm: empty frame list");
    if (iterations < 1) throw std::invalid_argument("estimate_operator_norm: iterations must be >= 1");
    const FrameProjector projector(grid, geometry);
    std::vector<FramePose> poses;
    poses.reserve(frames.size());
    for (Index k : frames) poses.push_back(pose_for_frame(geometry, k));

    Vector data(projector.data_size());
    Vector back(projector.image_size());
    auto normal = [&](const Vector& x, Vector& y) {
        y.setZero(projector.image_size());
        for (const auto& pose : poses) {
            projector.forward(pose, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
                              std::span<double>(data.data(), static_cast<std::size_t>(data.size())));
            projector.adjoint(pose, std::span<const double>(data.data(), static_cast<std::size_t>(data.size())),
                              std::span<double>(back.data(), static_cast<std::size_t>(back.size())));
            y += back;
        }
    };
    return power_iteration(normal, projector.image_size(), iterations, seed);
}

}  // namespace dpact
