#pragma once

#include "dpact/geometry.hpp"
#include "dpact/types.hpp"

#include <cstdint>

namespace dpact {

/// Rank-R spatiotemporal estimate F = U diag(S) V^T.
///
/// U is N x R and V is K x R, both with orthonormal columns; S is
/// nonnegative and nonincreasing. The largest-magnitude entry of each U
/// column is positive.
struct FactoredImage {
    VoxelGrid grid;
    Matrix U;
    Vector S;
    Matrix V;

    [[nodiscard]] Index rank() const noexcept { return S.size(); }
    [[nodiscard]] Index voxel_count() const noexcept { return U.rows(); }
    [[nodiscard]] Index frame_count() const noexcept { return V.rows(); }

    /// Rank-0 image with N voxels and K frames.
    static FactoredImage zero(const VoxelGrid& grid, Index frame_count);

    /// Dense N x K expansion; only for small problems and tests.
    [[nodiscard]] Matrix to_dense() const;
    [[nodiscard]] double nuclear_norm() const { return S.sum(); }
};

/// Matrix kept as a sum of outer products: X = left * right^T.
///
/// Column i of `left` (length N) paired with column i of `right` (length K)
/// is one rank-1 term. Used for gradient-step results and FISTA
/// extrapolations so that no N x K array is ever formed.
class LowRankUpdate {
public:
    LowRankUpdate() = default;
    LowRankUpdate(Index rows, Index cols);
    /// Wraps U diag(S) V^T as R terms, scaled by `weight`.
    static LowRankUpdate from_factored(const FactoredImage& image, double weight = 1.0);

    [[nodiscard]] Index rows() const noexcept { return rows_; }
    [[nodiscard]] Index cols() const noexcept { return cols_; }
    [[nodiscard]] Index term_count() const noexcept { return left_.cols(); }
    [[nodiscard]] const Matrix& left() const noexcept { return left_; }
    [[nodiscard]] const Matrix& right() const noexcept { return right_; }

    /// Adds the rank-1 term x (x) y.
    void append(const Vector& x, const Vector& y);
    /// Adds every term of `other` scaled by `weight`.
    void append(const LowRankUpdate& other, double weight = 1.0);
    /// Adds columns of `xs` paired with columns of `ys`.
    void append_block(const Matrix& xs, const Matrix& ys);

    /// X * omega (omega is cols x m).
    [[nodiscard]] Matrix multiply(const Matrix& omega) const;
    /// X^T * omega (omega is rows x m).
    [[nodiscard]] Matrix multiply_transpose(const Matrix& omega) const;
    /// Column k (0-based) of X.
    [[nodiscard]] Vector column(Index k) const;
    /// X d for a length-cols vector.
    [[nodiscard]] Vector apply(const Vector& d) const;
    /// ||X||_F^2 from the small Gram matrices.
    [[nodiscard]] double squared_norm() const;
    /// Dense N x K expansion; only for small problems and tests.
    [[nodiscard]] Matrix to_dense() const;

private:
    Index rows_ = 0;
    Index cols_ = 0;
    Matrix left_;
    Matrix right_;
};

/// ||A - B||_F^2 for two factored images without densifying.
double squared_distance(const FactoredImage& a, const FactoredImage& b);

struct SvdOptions {
    Index max_rank = 1;
    Index oversample = 10;
    int power_iterations = 2;
    std::uint64_t seed = 0;
};

/// Randomized truncated SVD of a matrix exposed only through products.
///
/// A seeded Gaussian test matrix with max_rank + oversample columns is pushed
/// through the operator, refined by `power_iterations` rounds of
/// re-orthonormalized power iteration, and the small projected problem is
/// solved densely. max_rank above min(N, K) is clamped with a warning.
FactoredImage truncated_svd(const LowRankUpdate& x, const SvdOptions& options,
                            const VoxelGrid& grid = {});
FactoredImage truncated_svd(const Matrix& x, const SvdOptions& options,
                            const VoxelGrid& grid = {});

/// sigma -> max(sigma - t, 0), elementwise.
Vector soft_threshold(const Vector& singular_values, double t);

/// Singular-value shrinkage restricted to rank <= options.max_rank. Zero
/// singular values (and their vectors) are dropped from the result.
FactoredImage prox_nuclear(const LowRankUpdate& x, double t, const SvdOptions& options,
                           const VoxelGrid& grid = {});

/// f_k = U diag(S) (row k of V)^T, k is 1-based.
Vector frame_column(const FactoredImage& image, Index k);

/// Drop trailing singular triplets whose value is not strictly positive
/// after the numerical-zero cut relative_tolerance * sigma_1.
void drop_zero_singular_values(FactoredImage& image, double relative_tolerance = 0.0);

/// Flip signs so the largest-magnitude entry of each U column is positive.
void canonicalize_signs(FactoredImage& image);

}  // namespace dpact
