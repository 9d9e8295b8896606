#include "dpact/metrics.hpp"

#include "dpact/operator.hpp"

#include <Eigen/SVD>

#include <stdexcept>

namespace dpact {
namespace {

template <class ColumnFn>
NseResult nse_impl(ColumnFn&& estimate_column, const DynamicImage& truth) {
    const Index K = truth.frame_count();
    const Vector energy = truth.frames.colwise().squaredNorm().transpose();
    const double denom = K > 0 ? energy.maxCoeff() : 0.0;
    if (!(denom > 0.0)) throw std::invalid_argument("nse_per_frame: truth is identically zero");
    NseResult out;
    out.per_frame.name = "nSE";
    out.per_frame.index_name = "frame";
    out.per_frame.index.resize(static_cast<std::size_t>(K));
    out.per_frame.values.resize(static_cast<std::size_t>(K));
    double sum = 0.0;
    for (Index k = 0; k < K; ++k) {
        const double e = (truth.frames.col(k) - estimate_column(k)).squaredNorm() / denom;
        out.per_frame.index[static_cast<std::size_t>(k)] = static_cast<double>(k + 1);
        out.per_frame.values[static_cast<std::size_t>(k)] = e;
        sum += e;
    }
    out.average = sum / static_cast<double>(K);
    return out;
}

}  // namespace

NseResult nse_per_frame(const DynamicImage& estimate, const DynamicImage& truth) {
    if (estimate.frames.rows() != truth.frames.rows() || estimate.frames.cols() != truth.frames.cols())
        throw std::invalid_argument("nse_per_frame: estimate and truth shapes differ");
    return nse_impl([&](Index k) { return Vector(estimate.frames.col(k)); }, truth);
}

NseResult nse_per_frame(const FactoredImage& estimate, const DynamicImage& truth) {
    if (estimate.voxel_count() != truth.voxel_count() || estimate.frame_count() != truth.frame_count())
        throw std::invalid_argument("nse_per_frame: estimate and truth shapes differ");
    return nse_impl([&](Index k) { return frame_column(estimate, k + 1); }, truth);
}

Vector singular_spectrum(const DynamicImage& truth) {
    const Eigen::BDCSVD<Matrix> svd(truth.frames);
    return svd.singularValues();
}

MetricSeries mse_vs_rank(const DynamicImage& truth, std::span<const Index> ranks) {
    const Index N = truth.voxel_count();
    const Index K = truth.frame_count();
    const Index full = std::min(N, K);
    const Vector sigma = singular_spectrum(truth);
    // Tail energies: tail[r] = sum_{i >= r} sigma_i^2.
    Vector tail = Vector::Zero(full + 1);
    for (Index i = full - 1; i >= 0; --i) tail[i] = tail[i + 1] + sigma[i] * sigma[i];
    MetricSeries out;
    out.name = "mse";
    out.index_name = "rank";
    for (Index r : ranks) {
        if (r < 0 || r > full) throw std::invalid_argument("mse_vs_rank: rank exceeds min(N, K)");
        out.index.push_back(static_cast<double>(r));
        out.values.push_back(tail[r] / static_cast<double>(N * K));
    }
    return out;
}

double data_fidelity(const FactoredImage& image, const MeasurementSet& data) {
    const ScanGeometry& geometry = data.geometry;
    if (image.frame_count() != data.frame_count())
        throw std::invalid_argument("data_fidelity: frame counts differ");
    const FrameProjector projector(image.grid, geometry);
    if (data.frames.rows() != projector.data_size())
        throw std::invalid_argument("data_fidelity: data rows do not match geometry");
    double total = 0.0;
    Vector trace(projector.data_size());
    for (Index k = 1; k <= image.frame_count(); ++k) {
        const Vector f = frame_column(image, k);
        projector.forward(pose_for_frame(geometry, k),
                          std::span<const double>(f.data(), static_cast<std::size_t>(f.size())),
                          std::span<double>(trace.data(), static_cast<std::size_t>(trace.size())));
        total += (trace - data.frames.col(k - 1)).squaredNorm();
    }
    return 0.5 * total;
}

double temporal_penalty(const FactoredImage& image) {
    if (image.rank() == 0 || image.frame_count() < 2) return 0.0;
    // F D = U S (D^T V)^T; D^T V holds successive row differences of V.
    const Index K = image.frame_count();
    const Matrix dv = image.V.bottomRows(K - 1) - image.V.topRows(K - 1);
    const Matrix left = image.U * image.S.asDiagonal();
    return 0.5 * (left * dv.transpose()).squaredNorm();
}

double temporal_penalty(const Matrix& frames) {
    if (frames.cols() < 2) return 0.0;
    const Index K = frames.cols();
    return 0.5 * (frames.rightCols(K - 1) - frames.leftCols(K - 1)).squaredNorm();
}

ObjectiveComponents objective_components(const FactoredImage& image, const MeasurementSet& data,
                                         double gamma, double lambda) {
    ObjectiveComponents c;
    c.fidelity = data_fidelity(image, data);
    c.temporal = temporal_penalty(image);
    c.nuclear = image.nuclear_norm();
    c.total = c.fidelity + gamma * c.temporal + lambda * c.nuclear;
    return c;
}

double tac_similarity(const Vector& estimate, const Vector& truth) {
    if (estimate.size() != truth.size())
        throw std::invalid_argument("tac_similarity: curves have different lengths");
    if (estimate.size() < 2) throw UndefinedResultError("tac_similarity: need at least two samples");
    const Vector a = estimate.array() - estimate.mean();
    const Vector b = truth.array() - truth.mean();
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) throw UndefinedResultError("tac_similarity: zero-variance curve");
    return a.dot(b) / (na * nb);
}

}  // namespace dpact
