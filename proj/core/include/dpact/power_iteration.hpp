#pragma once

#include "dpact/types.hpp"

#include <cstdint>
#include <random>

namespace dpact {

/// Power iteration for the largest eigenvalue of a symmetric positive
/// semidefinite operator given as `apply(x, y)` computing y = A x.
///
/// Returns the Rayleigh quotient of the last iterate. For PSD operators the
/// sequence of returned values is nondecreasing in `iterations`.
template <class Apply>
double power_iteration(Apply&& apply, Index n, int iterations, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector x(n);
    for (Index i = 0; i < n; ++i) x[i] = gauss(rng);
    x /= x.norm();
    Vector y(n);
    double estimate = 0.0;
    for (int it = 0; it < iterations; ++it) {
        apply(x, y);
        estimate = x.dot(y);
        const double norm = y.norm();
        if (norm == 0.0) return 0.0;
        x = y / norm;
    }
    return estimate;
}

}  // namespace dpact
