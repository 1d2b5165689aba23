#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <span>

namespace bayesgam {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;
using Permutation = Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int>;

/// A list of input points, one point per row (row-major so each point is contiguous).
using Points = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline std::span<const double> point_of(const Points& points, Index row) {
  return {points.data() + row * points.cols(), static_cast<std::size_t>(points.cols())};
}

}  // namespace bayesgam
