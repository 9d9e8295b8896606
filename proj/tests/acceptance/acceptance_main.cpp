// Acceptance suite: one PASS/FAIL line per criterion.
//
//   dpact_acceptance            run every criterion
//   dpact_acceptance 1 3 5      run a selection
//
// Criteria 5, 6 and 10 share the inverse-crime runs, so asking for any of
// them runs all three. Exit status is nonzero when any selected criterion fails.

#include <dpact/baseline.hpp>
#include <dpact/lowrank.hpp>
#include <dpact/metrics.hpp>
#include <dpact/operator.hpp>
#include <dpact/phantoms.hpp>
#include <dpact/solver.hpp>
#include <dpact/studies.hpp>

#include "support/oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace dpact;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(3);
    s << std::scientific << v;
    return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void report(int id, const std::string& name, const Outcome& o, double seconds, double budget) {
    const bool in_time = seconds <= budget;
    std::printf("[%s] criterion %d: %s: %s (%.1f s of %.0f s)%s\n", o.pass && in_time ? "PASS" : "FAIL", id,
                name.c_str(), o.detail.c_str(), seconds, budget, in_time ? "" : " over time budget");
    std::fflush(stdout);
}

Vector random_vector(Index n, std::mt19937_64& rng) { return oracle::gaussian(n, 1, rng).col(0); }

// ---------------------------------------------------------------- 1
Outcome adjoint_exactness() {
    std::mt19937_64 rng(20240601);
    std::uniform_int_distribution<Index> side(2, 10), depth(1, 3), channels(1, 8);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const double h = 0.2e-3 + 0.4e-3 * unit(rng);
        const VoxelGrid grid = VoxelGrid::centered(side(rng), side(rng), depth(rng), h);
        const double reach = 0.5 * grid.extent().norm();
        ScanGeometry g;
        const double radius = reach * (1.5 + 3.0 * unit(rng));
        g.arcs.push_back(build_arc(radius, channels(rng), (0.3 + 0.7 * unit(rng)) * std::numbers::pi,
                                   2.0 * std::numbers::pi * unit(rng)));
        g.frame_count = 1 + static_cast<Index>(unit(rng) * 30.0);
        g.angular_step = 0.2 * unit(rng);
        g.sample_interval = (0.2 + 0.7 * unit(rng)) * h / kDefaultSoundSpeed;
        g.sample_count = static_cast<Index>((radius + reach) / (kDefaultSoundSpeed * g.sample_interval)) + 8;
        g.validate();
        const FrameProjector H(grid, g);
        const FramePose pose = pose_for_frame(g, 1 + static_cast<Index>(unit(rng) * g.frame_count) % g.frame_count);
        const Vector f = random_vector(grid.size(), rng);
        const Vector y = random_vector(H.data_size(), rng);
        Vector Hf(H.data_size()), Hty(grid.size());
        H.forward(pose, std::span<const double>(f.data(), f.size()), std::span<double>(Hf.data(), Hf.size()));
        H.adjoint(pose, std::span<const double>(y.data(), y.size()), std::span<double>(Hty.data(), Hty.size()));
        const double gap = std::abs(Hf.dot(y) - f.dot(Hty)) / (Hf.norm() * y.norm());
        worst = std::max(worst, gap);
    }
    return {worst <= 1e-10, "max |<Hf,g> - <f,H^T g>| / (|Hf||g|) = " + fmt(worst) + " over 100 trials (<= 1e-10)"};
}

// ---------------------------------------------------------------- 2
Outcome operator_oracle() {
    const VoxelGrid grid = VoxelGrid::centered(10, 10, 3, 0.4e-3);
    ScanParameters p;
    p.views = 2;
    p.elements_per_arc = 4;
    p.frame_count = 12;
    p.angular_step = 7.0 * std::numbers::pi / 180.0;
    const ScanGeometry g = make_scan_geometry(p);
    const FrameProjector H(grid, g);
    std::mt19937_64 rng(7);
    double worst_fwd = 0.0, worst_adj = 0.0;
    for (Index k : {1, 5, 12}) {
        const FramePose pose = pose_for_frame(g, k);
        const Matrix dense = oracle::dense_operator(grid, g, pose);
        const Vector f = random_vector(grid.size(), rng);
        const Vector y = random_vector(H.data_size(), rng);
        Vector Hf(H.data_size()), Hty(grid.size());
        H.forward(pose, std::span<const double>(f.data(), f.size()), std::span<double>(Hf.data(), Hf.size()));
        H.adjoint(pose, std::span<const double>(y.data(), y.size()), std::span<double>(Hty.data(), Hty.size()));
        const Vector ref_f = dense * f, ref_a = dense.transpose() * y;
        worst_fwd = std::max(worst_fwd, (Hf - ref_f).cwiseAbs().maxCoeff() / ref_f.cwiseAbs().maxCoeff());
        worst_adj = std::max(worst_adj, (Hty - ref_a).cwiseAbs().maxCoeff() / ref_a.cwiseAbs().maxCoeff());
    }
    return {worst_fwd <= 1e-12 && worst_adj <= 1e-12,
            "forward " + fmt(worst_fwd) + ", adjoint " + fmt(worst_adj) + " max elementwise relative (<= 1e-12)"};
}

// ---------------------------------------------------------------- 3
Outcome prox_oracle() {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<Index> rows(1, 60), cols(1, 40);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const Index n = rows(rng), k = cols(rng);
        const Matrix X = oracle::gaussian(n, k, rng) * std::exp(4.0 * (unit(rng) - 0.5));
        const double s1 = Eigen::JacobiSVD<Matrix>(X).singularValues()[0];
        const double t = unit(rng) * s1;
        const Index r = std::min(n, k);
        LowRankUpdate x(n, k);
        x.append_block(X, Matrix::Identity(k, k));
        SvdOptions o;
        o.max_rank = r;
        o.seed = static_cast<std::uint64_t>(trial);
        const Matrix got = prox_nuclear(x, t, o).to_dense();
        const Matrix want = oracle::svd_shrink(X, t, r);
        const Matrix diff = got.size() == 0 ? want : Matrix(got - want);
        worst = std::max(worst, diff.norm());
    }
    return {worst <= 1e-8, "max Frobenius gap to dense SVD shrinkage " + fmt(worst) + " over 200 matrices (<= 1e-8)"};
}

// ---------------------------------------------------------------- 4
Outcome gradient_check() {
    const VoxelGrid grid = VoxelGrid::centered(6, 6, 1, 0.4e-3);
    ScanGeometry g;
    g.arcs.push_back(build_arc(3e-3, 4));
    g.frame_count = 8;
    g.sample_count = 96;
    g.sample_interval = 1e-7;
    g.angular_step = 0.1;
    std::vector<Matrix> H;
    for (Index k = 1; k <= 8; ++k) H.push_back(oracle::dense_operator(grid, g, pose_for_frame(g, k)));
    std::mt19937_64 rng(4);
    MeasurementSet data;
    data.geometry = g;
    data.frames = Matrix(H[0].rows(), 8);
    for (Index k = 0; k < 8; ++k) data.frames.col(k) = H[static_cast<std::size_t>(k)] * random_vector(36, rng);
    double L = 0.0;
    for (const auto& h : H) L = std::max(L, Eigen::JacobiSVD<Matrix>(h).singularValues()[0]);
    L *= L;
    const double gamma = 0.3 * L;

    // L(F) + gamma/2 ||F D||^2 on the dense matrices.
    auto objective = [&](const Matrix& F) {
        double s = 0.0;
        for (Index k = 0; k < 8; ++k)
            s += 0.5 * (H[static_cast<std::size_t>(k)] * F.col(k) - data.frames.col(k)).squaredNorm();
        return s + gamma * oracle::temporal(F);
    };
    const FrameProjector projector(grid, g);
    std::vector<Index> all(8);
    std::iota(all.begin(), all.end(), Index{1});
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix F = oracle::gaussian(36, 8, rng), E = oracle::gaussian(36, 8, rng);
        LowRankUpdate x(36, 8);
        x.append_block(F, Matrix::Identity(8, 8));
        const double eta = 1.0 / L;
        const Matrix grad = (F - gradient_step(x, all, data, projector, eta, gamma, 1).to_dense()) / eta;
        const double step = 1e-3;
        const double fd = (objective(F + step * E) - objective(F - step * E)) / (2.0 * step);
        const double dir = (grad.array() * E.array()).sum();
        worst = std::max(worst, std::abs(fd - dir) / std::abs(dir));
    }
    return {worst <= 1e-6, "max relative gap of directional derivatives " + fmt(worst) + " over 10 directions (<= 1e-6)"};
}

// ---------------------------------------------------------------- 5, 6, 10
struct InverseCrime {
    DynamicImage truth;
    MeasurementSet data;
    VoxelGrid grid;
};

InverseCrime inverse_crime_problem() {
    InverseCrime p;
    p.truth = make_rank4_phantom({20, 20, 3, 60, 0.4e-3});
    p.grid = p.truth.grid;
    ScanParameters s;
    s.views = 4;
    s.frame_count = 60;
    s.elements_per_arc = 32;
    s.angular_step = 6.0 * std::numbers::pi / 180.0;
    p.data = simulate_measurements(p.truth, make_scan_geometry(s));
    return p;
}

SolverConfig inverse_crime_solver(const InverseCrime& p, Index subsets) {
    SolverConfig c;
    c.max_rank = 4;
    c.subsets = subsets;
    c.epsilon = 1e-13;
    c.max_iterations = 1500;
    c.seed = 2024;
    // Six subsets diverge at the automatic step; half of it converges.
    if (subsets == 6) c.step_size = 0.5 * automatic_step_size(c, FrameProjector(p.grid, p.data.geometry));
    return c;
}

bool same_trace(const ConvergenceTrace& a, const ConvergenceTrace& b) {
    if (a.records.size() != b.records.size() || a.step_size != b.step_size) return false;
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        const auto& x = a.records[i];
        const auto& y = b.records[i];
        const bool fid = (std::isnan(x.fidelity) && std::isnan(y.fidelity)) || x.fidelity == y.fidelity;
        if (x.iteration != y.iteration || x.ratio != y.ratio || x.update_norm_sq != y.update_norm_sq || !fid ||
            x.nuclear_norm != y.nuclear_norm || x.temporal_penalty != y.temporal_penalty || x.rank != y.rank)
            return false;
    }
    return a.converged == b.converged && a.ranks.violations == b.ranks.violations &&
           a.ranks.max_pre_prox_terms == b.ranks.max_pre_prox_terms;
}

void inverse_crime_suite(const std::set<int>& want, bool& all_pass) {
    const auto start = std::chrono::steady_clock::now();
    const InverseCrime p = inverse_crime_problem();
    const double nse0 = nse_per_frame(FactoredImage::zero(p.grid, 60), p.truth).average;
    const double fid0 = 0.5 * p.data.frames.squaredNorm();

    std::map<Index, ReconstructionResult> runs;
    std::ostringstream d5;
    bool pass5 = true;
    for (Index M : {Index{1}, Index{2}, Index{6}}) {
        const auto t0 = std::chrono::steady_clock::now();
        runs[M] = reconstruct(inverse_crime_solver(p, M), p.data, p.grid);
        const auto& r = runs[M];
        const double fid = data_fidelity(r.image, p.data);
        const double nse = nse_per_frame(r.image, p.truth).average;
        const double fid_drop = std::log10(fid0 / fid), nse_drop = std::log10(nse0 / nse);
        pass5 = pass5 && fid_drop >= 6.0 && nse_drop >= 6.0;
        d5 << "M=" << M << ": " << r.trace.records.size() << " it, fidelity -" << std::fixed << std::setprecision(1)
           << fid_drop << " / nSE -" << nse_drop << " orders (" << seconds_since(t0) << " s); ";
        std::cout << "  inverse crime M=" << M << " done: " << r.trace.records.size() << " iterations, final ratio "
                  << fmt(r.trace.records.back().ratio) << ", average nSE " << fmt(nse) << std::endl;
    }
    double worst_gap = 0.0;
    for (Index a : {1, 2, 6})
        for (Index b : {1, 2, 6}) {
            if (a >= b) continue;
            const double gap = std::sqrt(squared_distance(runs[a].image, runs[b].image) /
                                         runs[a].image.S.squaredNorm());
            worst_gap = std::max(worst_gap, gap);
        }
    pass5 = pass5 && worst_gap <= 1e-6;
    d5 << "max pairwise relative gap " << fmt(worst_gap) << " (<= 1e-6)";
    const double t5 = seconds_since(start);
    if (want.contains(5)) {
        report(5, "inverse-crime replication", {pass5, d5.str()}, t5, 1800.0);
        all_pass = all_pass && pass5 && t5 <= 1800.0;
    }

    if (want.contains(6)) {
        Index violations = 0, steps = 0, post = 0, extra = 0, pre = 0;
        for (const auto& [M, r] : runs) {
            violations += r.trace.ranks.violations;
            steps += r.trace.ranks.steps;
            post = std::max(post, r.trace.ranks.max_post_prox_rank);
            extra = std::max(extra, r.trace.ranks.max_extrapolated_terms);
            pre = std::max(pre, r.trace.ranks.max_pre_prox_terms);
        }
        const Outcome o{violations == 0 && steps > 0,
                        std::to_string(steps) + " steps, " + std::to_string(violations) +
                            " violations; max post-prox rank " + std::to_string(post) +
                            ", max extrapolated terms " + std::to_string(extra) + ", max pre-prox terms " +
                            std::to_string(pre)};
        report(6, "rank invariants", o, 0.0, 1.0);
        all_pass = all_pass && o.pass;
    }

    if (want.contains(10)) {
        const auto t0 = std::chrono::steady_clock::now();
        const ReconstructionResult again = reconstruct(inverse_crime_solver(p, 2), p.data, p.grid);
        const auto& first = runs[2];
        const bool trace_same = same_trace(first.trace, again.trace);
        const bool factors_same =
            first.image.U == again.image.U && first.image.S == again.image.S && first.image.V == again.image.V;
        const Outcome o{trace_same && factors_same, std::string("M=2 rerun: trace ") +
                                                        (trace_same ? "bit-identical" : "differs") + ", factors " +
                                                        (factors_same ? "bit-identical" : "differ")};
        const double t = seconds_since(t0);
        report(10, "determinism", o, t, 1800.0);
        all_pass = all_pass && o.pass && t <= 1800.0;
    }
}

// ---------------------------------------------------------------- 7, 8
ExperimentConfig blob_study() {
    ExperimentConfig c;
    c.phantom.kind = "blob";
    c.phantom.dims = {20, 20, 15};
    c.phantom.spacing = 2e-3;
    c.phantom.frame_count = 60;
    c.phantom.refinement = 2;
    c.geometry.elements_per_arc = 32;
    c.geometry.angular_step_deg = 6.0;
    // One sample per voxel of travel. Much finer sampling lets each lumped
    // voxel ring at a single delay, which the refined simulation never matches.
    c.geometry.sample_interval = c.phantom.spacing / c.geometry.sound_speed;
    c.geometry.sample_count = 64;
    c.noise.seed = 17;
    c.solver.solver.max_rank = 10;
    c.solver.solver.subsets = 3;
    c.solver.solver.epsilon = 1e-3;
    c.solver.solver.max_iterations = 60;
    c.solver.solver.seed = 5;
    c.validate();
    return c;
}

double min_finite(const std::vector<double>& v) {
    double m = std::numeric_limits<double>::infinity();
    for (double x : v)
        if (std::isfinite(x)) m = std::min(m, x);
    return m;
}

Outcome views_trend() {
    ExperimentConfig c = blob_study();
    c.study.views = {1, 2, 4};
    c.noise.levels = {1.0};
    const auto points = views_sweep(c);
    std::ostringstream d;
    bool decreasing = true;
    for (std::size_t i = 0; i < points.size(); ++i) {
        d << points[i].setting << " views: nSE " << fmt(points[i].run.nse.average) << " (kappa "
          << fmt(points[i].run.kappa) << ", min TAC corr " << std::setprecision(4)
          << min_finite(points[i].run.tac_correlation) << "); ";
        if (i > 0) decreasing = decreasing && points[i].run.nse.average < points[i - 1].run.nse.average;
    }
    const double corr4 = min_finite(points.back().run.tac_correlation);
    d << "strictly decreasing: " << (decreasing ? "yes" : "no") << ", 4-view min TAC corr >= 0.95";
    return {decreasing && corr4 >= 0.95, d.str()};
}

Outcome noise_trend() {
    ExperimentConfig c = blob_study();
    c.geometry.views = 2;
    c.noise.levels = {1.0, 3.0, 5.0};
    const auto points = noise_sweep(c);
    std::ostringstream d;
    bool nondecreasing = true;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    std::size_t voxels = points.front().run.tac_correlation.size();
    double spread = 0.0;
    for (std::size_t v = 0; v < voxels; ++v) {
        double a = std::numeric_limits<double>::infinity(), b = -a;
        for (const auto& pt : points) {
            const double x = pt.run.tac_correlation[v];
            if (!std::isfinite(x)) continue;
            a = std::min(a, x);
            b = std::max(b, x);
        }
        if (std::isfinite(a)) spread = std::max(spread, b - a);
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
        d << points[i].setting << "%: nSE " << fmt(points[i].run.nse.average) << " (kappa " << fmt(points[i].run.kappa)
          << ", min TAC corr " << std::setprecision(4) << min_finite(points[i].run.tac_correlation) << "); ";
        lo = std::min(lo, points[i].run.nse.average);
        hi = std::max(hi, points[i].run.nse.average);
        if (i > 0) nondecreasing = nondecreasing && points[i].run.nse.average >= points[i - 1].run.nse.average;
    }
    d << "nondecreasing: " << (nondecreasing ? "yes" : "no") << ", max per-voxel TAC corr spread " << fmt(spread)
      << " (<= 0.05)";
    return {nondecreasing && spread <= 0.05, d.str()};
}

// ---------------------------------------------------------------- 9
Outcome ubp_localization() {
    const VoxelGrid grid = VoxelGrid::centered(20, 20, 3, 0.4e-3);
    const std::array<Index, 3> source{13, 6, 1};
    ScanParameters s;
    s.frame_count = 360;
    const ScanGeometry g = make_scan_geometry(s);
    const MeasurementSet data = simulate_measurements(make_point_phantom(grid, 360, source), g);
    std::vector<Index> frames(360);
    std::iota(frames.begin(), frames.end(), Index{1});
    const SosSweepReport sweep = sos_sweep(data, frames, grid, default_sos_candidates());
    const FrameImage& at_true = sweep.volumes[static_cast<std::size_t>(
        std::find(sweep.speeds.begin(), sweep.speeds.end(), g.sound_speed) - sweep.speeds.begin())];
    Index arg = 0;
    at_true.values.maxCoeff(&arg);
    const auto peak = grid.node_index(arg);
    Index off = 0;
    for (std::size_t a = 0; a < 3; ++a) off = std::max(off, std::abs(peak[a] - source[a]));
    std::ostringstream d;
    d << "peak at (" << peak[0] << "," << peak[1] << "," << peak[2] << ") vs source (" << source[0] << ","
      << source[1] << "," << source[2] << "), off by " << off << " voxel(s); suggested c0 " << sweep.suggested_speed
      << " m/s vs " << g.sound_speed;
    return {off <= 1 && sweep.suggested_speed == g.sound_speed, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> want;
    for (int i = 1; i < argc; ++i) want.insert(std::stoi(argv[i]));
    if (want.empty())
        for (int i = 1; i <= 10; ++i) want.insert(i);

    bool all_pass = true;
    auto run = [&](int id, const char* name, double budget, const std::function<Outcome()>& body) {
        if (!want.contains(id)) return;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = body();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double t = seconds_since(start);
        report(id, name, o, t, budget);
        all_pass = all_pass && o.pass && t <= budget;
    };

    run(1, "adjoint exactness", 10.0, adjoint_exactness);
    run(2, "operator oracle equivalence", 30.0, operator_oracle);
    run(3, "prox oracle", 30.0, prox_oracle);
    run(4, "gradient check", 30.0, gradient_check);
    if (want.contains(5) || want.contains(6) || want.contains(10)) {
        try {
            inverse_crime_suite(want, all_pass);
        } catch (const std::exception& e) {
            for (int id : {5, 6, 10})
                if (want.contains(id)) report(id, "inverse-crime suite", {false, std::string("threw: ") + e.what()}, 0.0, 1.0);
            all_pass = false;
        }
    }
    run(7, "views-sweep trend", 7200.0, views_trend);
    run(8, "noise-sweep trend", 7200.0, noise_trend);
    run(9, "UBP localization", 300.0, ubp_localization);
    return all_pass ? 0 : 1;
}
