#include "dpact/baseline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace dpact {
namespace {

// b_j = 2 p_j - 2 t_j p'_j on the sample grid t_j = j dT.
void filtered_trace(const double* p, Index P, double dt, double* b) {
    for (Index j = 0; j < P; ++j) {
        double dp;
        if (j == 0)
            dp = (p[1] - p[0]) / dt;
        else if (j == P - 1)
            dp = (p[P - 1] - p[P - 2]) / dt;
        else
            dp = (p[j + 1] - p[j - 1]) / (2.0 * dt);
        const double t = static_cast<double>(j) * dt;
        b[j] = 2.0 * p[j] - 2.0 * t * dp;
    }
}

}  // namespace

FrameImage ubp_reconstruct(const MeasurementSet& data, std::span<const Index> frames,
                           const VoxelGrid& grid, double sound_speed) {
    if (frames.empty()) throw std::invalid_argument("ubp_reconstruct: empty frame list");
    if (!(sound_speed > 0.0)) throw std::invalid_argument("ubp_reconstruct: sound speed must be positive");
    const ScanGeometry& geometry = data.geometry;
    const Index Q = geometry.channel_count();
    const Index P = geometry.sample_count;
    if (data.frames.rows() != Q * P) throw std::invalid_argument("ubp_reconstruct: data shape mismatch");
    for (Index k : frames)
        if (k < 1 || k > data.frame_count()) throw std::invalid_argument("ubp_reconstruct: frame out of range");

    const double dt = geometry.sample_interval;
    const auto F = static_cast<Index>(frames.size());
    Matrix filtered(Q * P, F);
    std::vector<Vec3> positions;
    positions.reserve(static_cast<std::size_t>(Q * F));
    for (Index i = 0; i < F; ++i) {
        const Index k = frames[static_cast<std::size_t>(i)];
        for (Index q = 0; q < Q; ++q)
            filtered_trace(data.frames.col(k - 1).data() + q * P, P, dt, filtered.col(i).data() + q * P);
        const FramePose pose = pose_for_frame(geometry, k);
        positions.insert(positions.end(), pose.positions.begin(), pose.positions.end());
    }

    const Index N = grid.size();
    const Index channels = Q * F;
    const double inv_bin = 1.0 / (sound_speed * dt);
    const double last_bin = static_cast<double>(P - 1);
    const double* b = filtered.data();
    FrameImage out{grid, Vector::Zero(N)};
#pragma omp parallel for schedule(static)
    for (Index n = 0; n < N; ++n) {
        const Vec3 r = grid.position(n);
        double acc = 0.0;
        for (Index c = 0; c < channels; ++c) {
            const double tau = (positions[static_cast<std::size_t>(c)] - r).norm() * inv_bin;
            if (tau > last_bin) continue;
            const Index bin = std::min(static_cast<Index>(tau), P - 2);
            const double frac = tau - static_cast<double>(bin);
            const double* bc = b + c * P;
            acc += bc[bin] * (1.0 - frac) + bc[bin + 1] * frac;
        }
        out.values[n] = acc / static_cast<double>(channels);
    }
    return out;
}

double sharpness_score(const FrameImage& volume) {
    const VoxelGrid& g = volume.grid;
    const auto dims = g.dims();
    const double h = g.spacing();
    auto at = [&](Index x, Index y, Index z) { return volume.values[g.linear_index(x, y, z)]; };
    double grad_sq = 0.0;
    for (Index z = 0; z < dims[2]; ++z)
        for (Index y = 0; y < dims[1]; ++y)
            for (Index x = 0; x < dims[0]; ++x) {
                const std::array<Index, 3> i{x, y, z};
                for (std::size_t a = 0; a < 3; ++a) {
                    if (dims[a] < 2) continue;
                    auto lo = i, hi = i;
                    double span = 2.0 * h;
                    if (i[a] == 0) {
                        hi[a] += 1;
                        span = h;
                    } else if (i[a] == dims[a] - 1) {
                        lo[a] -= 1;
                        span = h;
                    } else {
                        lo[a] -= 1;
                        hi[a] += 1;
                    }
                    const double d = (at(hi[0], hi[1], hi[2]) - at(lo[0], lo[1], lo[2])) / span;
                    grad_sq += d * d;
                }
            }
    return grad_sq / static_cast<double>(g.size());
}

SosSweepReport sos_sweep(const MeasurementSet& data, std::span<const Index> frames,
                         const VoxelGrid& grid, std::span<const double> speeds) {
    if (speeds.size() < 2) throw std::invalid_argument("sos_sweep: need at least two candidate speeds");
    for (std::size_t i = 1; i < speeds.size(); ++i)
        if (!(speeds[i] > speeds[i - 1]))
            throw std::invalid_argument("sos_sweep: speeds must be strictly increasing (no duplicates)");
    SosSweepReport report;
    report.speeds.assign(speeds.begin(), speeds.end());
    for (double c : speeds) {
        report.volumes.push_back(ubp_reconstruct(data, frames, grid, c));
        report.scores.push_back(sharpness_score(report.volumes.back()));
    }
    Index best = 0;
    for (std::size_t i = 1; i < report.scores.size(); ++i)
        if (report.scores[i] > report.scores[static_cast<std::size_t>(best)]) best = static_cast<Index>(i);
    report.suggested_index = best;
    report.suggested_speed = report.speeds[static_cast<std::size_t>(best)];
    return report;
}

std::vector<double> default_sos_candidates() {
    std::vector<double> speeds;
    for (int c = 1480; c <= 1520; c += 5) speeds.push_back(static_cast<double>(c));
    return speeds;
}

}  // namespace dpact
