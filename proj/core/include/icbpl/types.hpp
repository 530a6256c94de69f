#ifndef ICBPL_TYPES_HPP
#define ICBPL_TYPES_HPP

#include <Eigen/Dense>

namespace icbpl {

// Row-major so that one sample is one contiguous row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using FloatMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

enum class Metric { kCosine, kEuclidean };

}  // namespace icbpl

#endif  // ICBPL_TYPES_HPP
