#include "dpact/solver.hpp"

#include "dpact/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace dpact {

std::string to_string(FistaVariant variant) {
    return variant == FistaVariant::standard ? "standard" : "paper-literal";
}

FistaVariant fista_variant_from_string(const std::string& name) {
    if (name == "standard") return FistaVariant::standard;
    if (name == "paper-literal" || name == "paper_literal") return FistaVariant::paper_literal;
    throw std::invalid_argument("unknown FISTA variant '" + name + "'");
}

void SolverConfig::validate(Index frame_count) const {
    std::ostringstream err;
    if (max_rank < 1) err << "max_rank must be >= 1; ";
    if (subsets < 1 || subsets > frame_count) err << "subset count must lie in [1, K]; ";
    if (!(gamma >= 0.0)) err << "gamma must be >= 0; ";
    if (!(lambda >= 0.0)) err << "lambda must be >= 0; ";
    if (step_size && !(*step_size > 0.0)) err << "step size must be positive; ";
    if (!(epsilon >= 0.0)) err << "epsilon must be >= 0; ";
    if (max_iterations < 1) err << "max_iterations must be >= 1; ";
    if (oversample < 0 || power_iterations < 0) err << "randomized SVD parameters must be >= 0; ";
    if (norm_iterations < 1 || norm_sample_frames < 1) err << "norm estimation needs >= 1 iteration and frame; ";
    const auto msg = err.str();
    if (!msg.empty()) throw std::invalid_argument("SolverConfig: " + msg);
}

SubsetSchedule::SubsetSchedule(Index frame_count, Index subsets)
    : frame_count_(frame_count), subsets_(subsets) {
    if (frame_count < 1 || subsets < 1 || subsets > frame_count)
        throw std::invalid_argument("SubsetSchedule: need 1 <= M <= K");
    block_size_ = (frame_count + subsets - 1) / subsets;
    order_.resize(static_cast<std::size_t>(frame_count));
    std::iota(order_.begin(), order_.end(), Index{1});
}

void SubsetSchedule::reshuffle(std::mt19937_64& rng) {
    std::iota(order_.begin(), order_.end(), Index{1});
    std::shuffle(order_.begin(), order_.end(), rng);
}

std::span<const Index> SubsetSchedule::block(Index j) const {
    if (j < 0 || j >= subsets_) throw std::invalid_argument("SubsetSchedule::block: out of range");
    const Index begin = std::min(j * block_size_, frame_count_);
    const Index end = std::min((j + 1) * block_size_, frame_count_);
    return {order_.data() + begin, static_cast<std::size_t>(end - begin)};
}

LowRankUpdate temporal_gradient_term(const LowRankUpdate& image, std::span<const Index> subset) {
    const Index K = image.cols();
    LowRankUpdate out(image.rows(), K);
    for (Index k : subset) {
        if (k < 1 || k > K) throw std::invalid_argument("temporal_gradient_term: frame out of range");
        if (k == K) continue;  // d_K = 0
        Vector d = Vector::Zero(K);
        d[k - 1] = -1.0;
        d[k] = 1.0;
        out.append(image.column(k) - image.column(k - 1), d);
    }
    return out;
}

LowRankUpdate temporal_gradient_term(const FactoredImage& image, std::span<const Index> subset) {
    return temporal_gradient_term(LowRankUpdate::from_factored(image), subset);
}

LowRankUpdate gradient_step(const LowRankUpdate& extrapolated, std::span<const Index> subset,
                            const MeasurementSet& data, const FrameProjector& projector,
                            double step_size, double gamma, Index subsets) {
    if (!(step_size > 0.0)) throw std::invalid_argument("gradient_step: step size must be positive");
    const Index N = extrapolated.rows();
    const Index K = extrapolated.cols();
    if (N != projector.image_size() || K != data.frame_count() ||
        data.frames.rows() != projector.data_size())
        throw std::invalid_argument("gradient_step: inconsistent image, data and operator shapes");

    const double scale = step_size * static_cast<double>(subsets);
    const auto b = static_cast<Index>(subset.size());
    Matrix xs(N, b);
    Matrix ys = Matrix::Zero(K, b);
    Vector residual(projector.data_size());
    for (Index i = 0; i < b; ++i) {
        const Index k = subset[static_cast<std::size_t>(i)];
        if (k < 1 || k > K) throw std::invalid_argument("gradient_step: frame out of range");
        const FramePose pose = pose_for_frame(data.geometry, k);
        const Vector f = extrapolated.column(k - 1);
        projector.forward(pose, std::span<const double>(f.data(), static_cast<std::size_t>(N)),
                          std::span<double>(residual.data(), static_cast<std::size_t>(residual.size())));
        residual -= data.frames.col(k - 1);
        projector.adjoint(pose,
                          std::span<const double>(residual.data(), static_cast<std::size_t>(residual.size())),
                          std::span<double>(xs.col(i).data(), static_cast<std::size_t>(N)));
        xs.col(i) *= -scale;
        ys(k - 1, i) = 1.0;
    }

    LowRankUpdate out = extrapolated;
    out.append_block(xs, ys);
    if (gamma > 0.0) out.append(temporal_gradient_term(extrapolated, subset), -scale * gamma);
    return out;
}

double next_momentum(double t) { return 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t)); }

MomentumResult fista_momentum(double t, const FactoredImage& current, const FactoredImage& previous,
                              FistaVariant variant) {
    if (!(t >= 1.0)) throw std::invalid_argument("fista_momentum: t must be >= 1");
    MomentumResult out;
    out.t_next = next_momentum(t);
    const double weight = variant == FistaVariant::standard ? (t - 1.0) / out.t_next : (t - 1.0) / t;
    out.extrapolated = LowRankUpdate::from_factored(current, 1.0 + weight);
    if (weight != 0.0 && previous.rank() > 0)
        out.extrapolated.append(LowRankUpdate::from_factored(previous), -weight);
    return out;
}

double automatic_step_size(const SolverConfig& config, const FrameProjector& projector) {
    const ScanGeometry& geometry = projector.geometry();
    const Index K = geometry.frame_count;
    const Index probes = std::min(K, config.norm_sample_frames);
    double lipschitz = 0.0;
    for (Index p = 0; p < probes; ++p) {
        const Index k = 1 + (p * K) / probes;
        const std::array<Index, 1> frame{k};
        lipschitz = std::max(lipschitz, estimate_operator_norm(geometry, projector.grid(), frame,
                                                               config.norm_iterations,
                                                               config.seed + static_cast<std::uint64_t>(k)));
    }
    const double denom = static_cast<double>(config.subsets) * (lipschitz + 4.0 * config.gamma);
    if (!(denom > 0.0)) throw std::invalid_argument("automatic_step_size: operator norm estimate is zero");
    return 0.9 / denom;
}

ReconstructionResult reconstruct(const SolverConfig& config, const MeasurementSet& data,
                                 const VoxelGrid& grid, const std::optional<FactoredImage>& init,
                                 const IterationObserver& observer) {
    const Index K = data.frame_count();
    config.validate(K);
    if (data.geometry.frame_count != K)
        throw std::invalid_argument("reconstruct: data and geometry frame counts differ");
    const FrameProjector projector(grid, data.geometry);
    if (data.frames.rows() != projector.data_size())
        throw std::invalid_argument("reconstruct: data rows do not match the geometry");

    ReconstructionResult result;
    ConvergenceTrace& trace = result.trace;
    trace.step_size = config.step_size ? *config.step_size : automatic_step_size(config, projector);
    trace.initial_fidelity = 0.5 * data.frames.squaredNorm();
    const double eta = trace.step_size;
    const double shrink = eta * config.lambda;

    FactoredImage current = FactoredImage::zero(grid, K);
    if (init) {
        if (init->voxel_count() != grid.size() || init->frame_count() != K)
            throw std::invalid_argument("reconstruct: initial image shape mismatch");
        current = *init;
        current.grid = grid;
    }
    LowRankUpdate extrapolated = LowRankUpdate::from_factored(current);
    double t = 1.0;

    SubsetSchedule schedule(K, config.subsets);
    std::mt19937_64 rng(config.seed);
    SvdOptions svd;
    svd.max_rank = std::min(config.max_rank, std::min(grid.size(), K));
    svd.oversample = config.oversample;
    svd.power_iterations = config.power_iterations;

    const Index pre_prox_bound = 2 * config.max_rank + 2 * schedule.block_size();
    const Index extrapolated_bound = 2 * config.max_rank;
    RankAudit& audit = trace.ranks;

    double max_update = 0.0;
    const auto clock_start = std::chrono::steady_clock::now();
    for (int iteration = 1; iteration <= config.max_iterations; ++iteration) {
        const FactoredImage outer_start = current;
        schedule.reshuffle(rng);
        for (Index j = 0; j < schedule.subset_count(); ++j) {
            const auto subset = schedule.block(j);
            if (subset.empty()) continue;
            const LowRankUpdate pre_prox =
                gradient_step(extrapolated, subset, data, projector, eta, config.gamma, config.subsets);
            svd.seed = rng();
            FactoredImage next = prox_nuclear(pre_prox, shrink, svd, grid);
            if (!next.S.allFinite() || !next.U.allFinite() || !next.V.allFinite())
                throw DivergenceError("reconstruct: non-finite iterate; reduce the step size");
            MomentumResult momentum = fista_momentum(t, next, current, config.fista_variant);

            ++audit.steps;
            audit.max_pre_prox_terms = std::max(audit.max_pre_prox_terms, pre_prox.term_count());
            audit.max_post_prox_rank = std::max(audit.max_post_prox_rank, next.rank());
            audit.max_extrapolated_terms =
                std::max(audit.max_extrapolated_terms, momentum.extrapolated.term_count());
            if (pre_prox.term_count() > pre_prox_bound) ++audit.violations;
            if (next.rank() > config.max_rank) ++audit.violations;
            if (momentum.extrapolated.term_count() > extrapolated_bound) ++audit.violations;

            t = momentum.t_next;
            extrapolated = std::move(momentum.extrapolated);
            current = std::move(next);
        }

        IterationRecord record;
        record.iteration = iteration;
        record.update_norm_sq = squared_distance(current, outer_start);
        if (!std::isfinite(record.update_norm_sq))
            throw DivergenceError("reconstruct: non-finite update; reduce the step size");
        if (iteration > 1 && max_update > 0.0 &&
            record.update_norm_sq > config.divergence_ratio * max_update) {
            std::ostringstream msg;
            msg << "reconstruct: update norm grew by " << record.update_norm_sq / max_update
                << "x at iteration " << iteration << " (step size " << eta
                << "); reduce the step size";
            throw DivergenceError(msg.str());
        }
        max_update = std::max(max_update, record.update_norm_sq);
        record.ratio = max_update > 0.0 ? record.update_norm_sq / max_update : 0.0;
        record.nuclear_norm = current.nuclear_norm();
        record.temporal_penalty = temporal_penalty(current);
        record.rank = current.rank();
        record.fidelity = config.track_full_fidelity ? data_fidelity(current, data)
                                                     : std::numeric_limits<double>::quiet_NaN();
        record.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
        trace.records.push_back(record);
        if (observer) observer(record, current);

        if (iteration >= 2 && record.ratio <= config.epsilon) {
            trace.converged = true;
            break;
        }
    }
    result.image = std::move(current);
    return result;
}

Regularization balanced_regularization(double kappa, const DynamicImage& truth) {
    if (!(kappa >= 0.0)) throw std::invalid_argument("balanced_regularization: kappa must be >= 0");
    const double temporal = temporal_penalty(truth.frames);
    if (!(temporal > 0.0))
        throw std::invalid_argument("balanced_regularization: true object is static in time");
    const double nuclear = singular_spectrum(truth).sum();
    if (!(nuclear > 0.0)) throw std::invalid_argument("balanced_regularization: true object is zero");
    return {kappa / temporal, kappa / nuclear};
}

std::array<double, 4> kappa_grid(const MeasurementSet& data) {
    const double g2 = data.frames.squaredNorm();
    return {1e-4 * g2, 5e-4 * g2, 2.5e-3 * g2, 1.25e-2 * g2};
}

}  // namespace dpact
