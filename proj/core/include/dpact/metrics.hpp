#pragma once

#include "dpact/lowrank.hpp"
#include "dpact/phantoms.hpp"
#include "dpact/types.hpp"

#include <span>
#include <string>
#include <vector>

namespace dpact {

struct MetricSeries {
    std::string name;
    std::string index_name;  ///< "frame", "rank" or "iteration"
    std::vector<double> index;
    std::vector<double> values;
};

struct NseResult {
    MetricSeries per_frame;
    double average = 0.0;
};

/// nSE_k = ||f_k^true - f_k||^2 / max_k ||f_k^true||^2 and its frame average.
NseResult nse_per_frame(const DynamicImage& estimate, const DynamicImage& truth);
NseResult nse_per_frame(const FactoredImage& estimate, const DynamicImage& truth);

/// Mean squared error of the best rank-R approximation of `truth`, per R.
MetricSeries mse_vs_rank(const DynamicImage& truth, std::span<const Index> ranks);

/// Singular values of the dense N x K matrix of `truth`.
Vector singular_spectrum(const DynamicImage& truth);

struct ObjectiveComponents {
    double fidelity = 0.0;         ///< L(F) = 1/2 sum_k ||H_k f_k - g_k||^2
    double temporal = 0.0;         ///< R^t(F) = 1/2 ||F D||_F^2 (unweighted)
    double nuclear = 0.0;          ///< R^nn(F) = ||F||_* (unweighted)
    double total = 0.0;            ///< L + gamma R^t + lambda R^nn
};

ObjectiveComponents objective_components(const FactoredImage& image, const MeasurementSet& data,
                                         double gamma, double lambda);

/// Full data fidelity L(F) only.
double data_fidelity(const FactoredImage& image, const MeasurementSet& data);

/// 1/2 ||F D||_F^2 for a factored image without densifying.
double temporal_penalty(const FactoredImage& image);
double temporal_penalty(const Matrix& frames);

/// Pearson correlation of two equal-length curves.
double tac_similarity(const Vector& estimate, const Vector& truth);

}  // namespace dpact
