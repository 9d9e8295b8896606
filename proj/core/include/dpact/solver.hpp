#pragma once

#include "dpact/lowrank.hpp"
#include "dpact/operator.hpp"
#include "dpact/phantoms.hpp"
#include "dpact/types.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace dpact {

enum class FistaVariant {
    standard,       ///< extrapolation weight (t_j - 1) / t_{j+1}
    paper_literal,  ///< extrapolation weight (t_j - 1) / t_j
};

std::string to_string(FistaVariant variant);
FistaVariant fista_variant_from_string(const std::string& name);

struct SolverConfig {
    Index max_rank = 4;
    double epsilon = 0.25;  ///< stop when the normalized update ratio drops to this
    double gamma = 0.0;     ///< temporal penalty weight
    double lambda = 0.0;    ///< nuclear-norm weight
    std::optional<double> step_size;  ///< empty -> 0.9 / (M (L + 4 gamma))
    Index subsets = 1;
    int max_iterations = 100;
    std::uint64_t seed = 0;
    FistaVariant fista_variant = FistaVariant::standard;
    bool track_full_fidelity = false;

    Index oversample = 10;
    int power_iterations = 2;
    int norm_iterations = 30;       ///< power iterations for the automatic step size
    Index norm_sample_frames = 8;   ///< frames probed for the automatic step size
    double divergence_ratio = 1e3;

    /// Throws std::invalid_argument when inconsistent with K frames.
    void validate(Index frame_count) const;
};

/// Shuffled frame order partitioned into M contiguous blocks of size ceil(K/M).
class SubsetSchedule {
public:
    SubsetSchedule(Index frame_count, Index subsets);

    /// Draws a fresh permutation of 1..K.
    void reshuffle(std::mt19937_64& rng);

    [[nodiscard]] Index block_size() const noexcept { return block_size_; }
    [[nodiscard]] Index subset_count() const noexcept { return subsets_; }
    [[nodiscard]] const std::vector<Index>& order() const noexcept { return order_; }
    /// Frames (1-based) of block j in 0..M-1; the last block may be short or empty.
    [[nodiscard]] std::span<const Index> block(Index j) const;

private:
    Index frame_count_;
    Index subsets_;
    Index block_size_;
    std::vector<Index> order_;
};

struct IterationRecord {
    int iteration = 0;
    double ratio = 0.0;
    double update_norm_sq = 0.0;  ///< ||F(i) - F(i-1)||_F^2
    double fidelity = 0.0;        ///< L(F(i)); NaN unless tracked
    double nuclear_norm = 0.0;
    double temporal_penalty = 0.0;
    Index rank = 0;
    double seconds = 0.0;
};

struct RankAudit {
    Index max_post_prox_rank = 0;
    Index max_extrapolated_terms = 0;
    Index max_pre_prox_terms = 0;
    Index violations = 0;
    Index steps = 0;
};

struct ConvergenceTrace {
    std::vector<IterationRecord> records;
    double step_size = 0.0;
    double initial_fidelity = 0.0;  ///< L(0) = 1/2 ||G||_F^2
    bool converged = false;
    RankAudit ranks;
};

/// Rank-1 terms gamma-free (F d_k) (x) d_k for k in `subset` with k < K.
LowRankUpdate temporal_gradient_term(const LowRankUpdate& image, std::span<const Index> subset);
LowRankUpdate temporal_gradient_term(const FactoredImage& image, std::span<const Index> subset);

/// F_bar - eta M sum_{k in subset} [ H_k^T (H_k f_k - g_k) (x) e_k + gamma (F_bar d_k) (x) d_k ].
LowRankUpdate gradient_step(const LowRankUpdate& extrapolated, std::span<const Index> subset,
                            const MeasurementSet& data, const FrameProjector& projector,
                            double step_size, double gamma, Index subsets);

struct MomentumResult {
    double t_next = 1.0;
    LowRankUpdate extrapolated;
};

/// FISTA momentum update; F_bar = F_new + w (F_new - F_old) kept factored.
MomentumResult fista_momentum(double t, const FactoredImage& current, const FactoredImage& previous,
                              FistaVariant variant = FistaVariant::standard);

/// Next momentum scalar (1 + sqrt(1 + 4 t^2)) / 2.
double next_momentum(double t);

struct ReconstructionResult {
    FactoredImage image;
    ConvergenceTrace trace;
};

using IterationObserver = std::function<void(const IterationRecord&, const FactoredImage&)>;

/// Automatic step size 0.9 / (M (L + 4 gamma)), L the largest per-frame norm estimate.
double automatic_step_size(const SolverConfig& config, const FrameProjector& projector);

/// Ordered-subsets FISTA proximal gradient with maximum-rank constraint.
ReconstructionResult reconstruct(const SolverConfig& config, const MeasurementSet& data,
                                 const VoxelGrid& grid,
                                 const std::optional<FactoredImage>& init = std::nullopt,
                                 const IterationObserver& observer = {});

struct Regularization {
    double gamma = 0.0;
    double lambda = 0.0;
};

/// Balancing-principle weights: gamma = kappa / R^t(F_true), lambda = kappa / ||F_true||_*.
Regularization balanced_regularization(double kappa, const DynamicImage& truth);

/// {1e-4, 5e-4, 2.5e-3, 1.25e-2} * ||G||_F^2.
std::array<double, 4> kappa_grid(const MeasurementSet& data);

}  // namespace dpact
