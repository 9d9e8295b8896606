#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dpact {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Vec3 = Eigen::Vector3d;

/// Raised when a transducer sits (numerically) on top of a voxel node.
class SingularGeometryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised by the reconstruction loop when the iterate difference blows up.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A quantity is undefined for the given input (e.g. zero variance).
class UndefinedResultError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Filesystem or container-format failure.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace dpact
