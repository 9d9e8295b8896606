#include "dpact/lowrank.hpp"

#include "dpact/log.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <random>
#include <sstream>
#include <stdexcept>

namespace dpact {
namespace {

Matrix orthonormal_basis(const Matrix& y) {
    const Eigen::HouseholderQR<Matrix> qr(y);
    return qr.householderQ() * Matrix::Identity(y.rows(), y.cols());
}

Matrix gaussian_matrix(Index rows, Index cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix omega(rows, cols);
    // Column-major fill keeps the draw order independent of Eigen internals.
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) omega(i, j) = gauss(rng);
    return omega;
}

// R factor of a thin QR; ||L R^T||_F = ||R_L R_R^T||_F without cancellation.
Matrix triangular_factor(const Matrix& a) {
    const Eigen::HouseholderQR<Matrix> qr(a);
    const Index k = std::min(a.rows(), a.cols());
    return qr.matrixQR().topRows(k).template triangularView<Eigen::Upper>();
}

double stacked_squared_norm(const Matrix& left, const Matrix& right) {
    if (left.cols() == 0) return 0.0;
    const Matrix rl = triangular_factor(left);
    const Matrix rr = triangular_factor(right);
    return (rl * rr.transpose()).squaredNorm();
}

Index clamp_rank(Index requested, Index rows, Index cols) {
    if (requested < 1) throw std::invalid_argument("truncated_svd: max_rank must be >= 1");
    const Index limit = std::min(rows, cols);
    if (requested > limit) {
        std::ostringstream msg;
        msg << "truncated_svd: max_rank " << requested << " exceeds min(N, K) = " << limit
            << "; clamped";
        warn(msg.str());
        return limit;
    }
    return requested;
}

// Shared randomized range finder; `mul` computes X * W, `tmul` computes X^T * W.
template <class Mul, class TMul>
FactoredImage randomized_svd(Index rows, Index cols, Mul&& mul, TMul&& tmul,
                             const SvdOptions& options, const VoxelGrid& grid) {
    if (options.oversample < 0) throw std::invalid_argument("truncated_svd: negative oversample");
    if (options.power_iterations < 0)
        throw std::invalid_argument("truncated_svd: negative power_iterations");
    const Index rank = clamp_rank(options.max_rank, rows, cols);
    const Index width = std::min(rank + options.oversample, std::min(rows, cols));

    Matrix q = orthonormal_basis(mul(gaussian_matrix(cols, width, options.seed)));
    for (int it = 0; it < options.power_iterations; ++it) {
        const Matrix z = orthonormal_basis(tmul(q));
        q = orthonormal_basis(mul(z));
    }
    // B = Q^T X, handled through its transpose (cols x width).
    const Matrix bt = tmul(q);
    const Eigen::JacobiSVD<Matrix> svd(bt, Eigen::ComputeThinU | Eigen::ComputeThinV);

    FactoredImage out;
    out.grid = grid;
    out.S = svd.singularValues().head(rank);
    out.U = q * svd.matrixV().leftCols(rank);
    out.V = svd.matrixU().leftCols(rank);
    canonicalize_signs(out);
    return out;
}

}  // namespace

FactoredImage FactoredImage::zero(const VoxelGrid& grid, Index frame_count) {
    FactoredImage image;
    image.grid = grid;
    image.U = Matrix(grid.size(), 0);
    image.S = Vector(0);
    image.V = Matrix(frame_count, 0);
    return image;
}

Matrix FactoredImage::to_dense() const {
    return U * S.asDiagonal() * V.transpose();
}

LowRankUpdate::LowRankUpdate(Index rows, Index cols)
    : rows_(rows), cols_(cols), left_(rows, 0), right_(cols, 0) {}

LowRankUpdate LowRankUpdate::from_factored(const FactoredImage& image, double weight) {
    LowRankUpdate x(image.voxel_count(), image.frame_count());
    x.left_ = image.U * (weight * image.S).asDiagonal();
    x.right_ = image.V;
    return x;
}

void LowRankUpdate::append(const Vector& x, const Vector& y) {
    if (x.size() != rows_ || y.size() != cols_)
        throw std::invalid_argument("LowRankUpdate::append: term shape mismatch");
    left_.conservativeResize(Eigen::NoChange, left_.cols() + 1);
    right_.conservativeResize(Eigen::NoChange, right_.cols() + 1);
    left_.rightCols(1) = x;
    right_.rightCols(1) = y;
}

void LowRankUpdate::append(const LowRankUpdate& other, double weight) {
    if (other.rows_ != rows_ || other.cols_ != cols_)
        throw std::invalid_argument("LowRankUpdate::append: shape mismatch");
    append_block(weight * other.left_, other.right_);
}

void LowRankUpdate::append_block(const Matrix& xs, const Matrix& ys) {
    if (xs.rows() != rows_ || ys.rows() != cols_ || xs.cols() != ys.cols())
        throw std::invalid_argument("LowRankUpdate::append_block: shape mismatch");
    const Index m = left_.cols();
    left_.conservativeResize(Eigen::NoChange, m + xs.cols());
    right_.conservativeResize(Eigen::NoChange, m + ys.cols());
    left_.rightCols(xs.cols()) = xs;
    right_.rightCols(ys.cols()) = ys;
}

Matrix LowRankUpdate::multiply(const Matrix& omega) const {
    if (omega.rows() != cols_) throw std::invalid_argument("LowRankUpdate::multiply: shape mismatch");
    return left_ * (right_.transpose() * omega);
}

Matrix LowRankUpdate::multiply_transpose(const Matrix& omega) const {
    if (omega.rows() != rows_)
        throw std::invalid_argument("LowRankUpdate::multiply_transpose: shape mismatch");
    return right_ * (left_.transpose() * omega);
}

Vector LowRankUpdate::column(Index k) const {
    if (k < 0 || k >= cols_) throw std::invalid_argument("LowRankUpdate::column: out of range");
    return left_ * right_.row(k).transpose();
}

Vector LowRankUpdate::apply(const Vector& d) const {
    if (d.size() != cols_) throw std::invalid_argument("LowRankUpdate::apply: shape mismatch");
    return left_ * (right_.transpose() * d);
}

double LowRankUpdate::squared_norm() const { return stacked_squared_norm(left_, right_); }

Matrix LowRankUpdate::to_dense() const { return left_ * right_.transpose(); }

double squared_distance(const FactoredImage& a, const FactoredImage& b) {
    if (a.voxel_count() != b.voxel_count() || a.frame_count() != b.frame_count())
        throw std::invalid_argument("squared_distance: shape mismatch");
    const Index ra = a.rank();
    const Index rb = b.rank();
    Matrix left(a.voxel_count(), ra + rb);
    Matrix right(a.frame_count(), ra + rb);
    left.leftCols(ra) = a.U * a.S.asDiagonal();
    left.rightCols(rb) = -(b.U * b.S.asDiagonal());
    right.leftCols(ra) = a.V;
    right.rightCols(rb) = b.V;
    return stacked_squared_norm(left, right);
}

FactoredImage truncated_svd(const LowRankUpdate& x, const SvdOptions& options,
                            const VoxelGrid& grid) {
    return randomized_svd(
        x.rows(), x.cols(), [&](const Matrix& w) { return x.multiply(w); },
        [&](const Matrix& w) { return x.multiply_transpose(w); }, options, grid);
}

FactoredImage truncated_svd(const Matrix& x, const SvdOptions& options, const VoxelGrid& grid) {
    return randomized_svd(
        x.rows(), x.cols(), [&](const Matrix& w) -> Matrix { return x * w; },
        [&](const Matrix& w) -> Matrix { return x.transpose() * w; }, options, grid);
}

Vector soft_threshold(const Vector& singular_values, double t) {
    if (t < 0.0) throw std::invalid_argument("soft_threshold: threshold must be >= 0");
    return (singular_values.array() - t).max(0.0).matrix();
}

FactoredImage prox_nuclear(const LowRankUpdate& x, double t, const SvdOptions& options,
                           const VoxelGrid& grid) {
    if (t < 0.0) throw std::invalid_argument("prox_nuclear: threshold must be >= 0");
    FactoredImage out = truncated_svd(x, options, grid);
    out.S = soft_threshold(out.S, t);
    const double eps = std::numeric_limits<double>::epsilon();
    drop_zero_singular_values(out, static_cast<double>(std::max(x.rows(), x.cols())) * eps);
    return out;
}

Vector frame_column(const FactoredImage& image, Index k) {
    if (k < 1 || k > image.frame_count())
        throw std::invalid_argument("frame_column: frame index out of range");
    if (image.rank() == 0) return Vector::Zero(image.voxel_count());
    return image.U * image.S.cwiseProduct(image.V.row(k - 1).transpose());
}

void drop_zero_singular_values(FactoredImage& image, double relative_tolerance) {
    if (image.rank() == 0) return;
    const double cut = relative_tolerance * image.S[0];
    Index keep = 0;
    while (keep < image.rank() && image.S[keep] > cut && image.S[keep] > 0.0) ++keep;
    if (keep == image.rank()) return;
    image.S.conservativeResize(keep);
    image.U.conservativeResize(Eigen::NoChange, keep);
    image.V.conservativeResize(Eigen::NoChange, keep);
}

void canonicalize_signs(FactoredImage& image) {
    for (Index r = 0; r < image.rank(); ++r) {
        Index arg = 0;
        image.U.col(r).cwiseAbs().maxCoeff(&arg);
        if (image.U(arg, r) < 0.0) {
            image.U.col(r) *= -1.0;
            image.V.col(r) *= -1.0;
        }
    }
}

}  // namespace dpact
