// Basic dense types shared across the library.
#pragma once

#include <Eigen/Core>

namespace lgflow {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

// Points in the domain; at most two spatial dimensions are used.
template <typename Scalar>
using PointX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

} // namespace lgflow
