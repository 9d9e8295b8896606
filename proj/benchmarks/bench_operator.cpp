#include <dpact/operator.hpp>

#include <benchmark/benchmark.h>

namespace {

using namespace dpact;

ScanGeometry bench_geometry(int views) {
    ScanParameters p;
    p.views = views;
    p.frame_count = 60;
    p.angular_step = 6.0 * std::numbers::pi / 180.0;
    return make_scan_geometry(p);
}

void BM_Forward(benchmark::State& state) {
    const auto n = static_cast<Index>(state.range(0));
    const VoxelGrid grid = VoxelGrid::centered(n, n, 3, 0.4e-3);
    const ScanGeometry geometry = bench_geometry(static_cast<int>(state.range(1)));
    const FrameProjector projector(grid, geometry);
    const FramePose pose = pose_for_frame(geometry, 1);
    const Vector f = Vector::Random(grid.size());
    Vector g(projector.data_size());
    for (auto _ : state) {
        projector.forward(pose, {f.data(), static_cast<std::size_t>(f.size())},
                          {g.data(), static_cast<std::size_t>(g.size())});
        benchmark::DoNotOptimize(g.data());
    }
    state.SetItemsProcessed(state.iterations() * grid.size() * geometry.channel_count());
}
BENCHMARK(BM_Forward)->Args({20, 1})->Args({20, 4})->Args({40, 1});

void BM_Adjoint(benchmark::State& state) {
    const auto n = static_cast<Index>(state.range(0));
    const VoxelGrid grid = VoxelGrid::centered(n, n, 3, 0.4e-3);
    const ScanGeometry geometry = bench_geometry(static_cast<int>(state.range(1)));
    const FrameProjector projector(grid, geometry);
    const FramePose pose = pose_for_frame(geometry, 1);
    const Vector g = Vector::Random(projector.data_size());
    Vector f(grid.size());
    for (auto _ : state) {
        projector.adjoint(pose, {g.data(), static_cast<std::size_t>(g.size())},
                          {f.data(), static_cast<std::size_t>(f.size())});
        benchmark::DoNotOptimize(f.data());
    }
    state.SetItemsProcessed(state.iterations() * grid.size() * geometry.channel_count());
}
BENCHMARK(BM_Adjoint)->Args({20, 1})->Args({20, 4})->Args({40, 1});

}  // namespace
