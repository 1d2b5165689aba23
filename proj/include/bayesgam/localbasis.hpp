#pragma once

#include "bayesgam/types.hpp"

#include <functional>
#include <variant>
#include <vector>

namespace bayesgam {

/// Tensor lattice of knots. Flattened with the last axis varying fastest, so a 2-D grid of
/// shape (n0, n1) stores point (i, j) at i * n1 + j; this matches the Kronecker ordering
/// K0 (x) K1 used by the GP bases.
class Grid {
 public:
  Grid() = default;
  explicit Grid(std::vector<std::vector<double>> axes);

  /// count equispaced knots covering [lo, hi].
  static Grid uniform(double lo, double hi, Index count);

  Index dims() const { return static_cast<Index>(axes_.size()); }
  Index size() const { return size_; }
  const std::vector<double>& axis(Index d) const { return axes_[static_cast<std::size_t>(d)]; }
  const std::vector<std::vector<double>>& axes() const { return axes_; }
  Index axis_length(Index d) const { return static_cast<Index>(axis(d).size()); }
  Index stride(Index d) const { return strides_[static_cast<std::size_t>(d)]; }

  /// Coordinate index along axis d of the flattened knot `flat`.
  Index coordinate(Index flat, Index d) const { return (flat / stride(d)) % axis_length(d); }
  /// All knots in flattening order, one per row.
  Points knots() const;

  bool operator==(const Grid& other) const { return axes_ == other.axes_; }

 private:
  std::vector<std::vector<double>> axes_;
  std::vector<Index> strides_;
  Index size_ = 0;
};

/// Rows of B, with per-row prior mean and variance, contributed by one term.
struct PriorBlock {
  SparseMatrix transform;
  Vector mean;
  Vector var;

  Index rows() const { return transform.rows(); }
  Index cols() const { return transform.cols(); }
  void validate() const;
};

struct DifferenceOperator {
  int order = 1;
  Index axis = 0;
  SparseMatrix rows;
  Vector prior_std;

  PriorBlock prior_block() const;
};

/// Multilinear interpolation from grid values to `inputs` (one point per row). Each row has
/// at most 2^dims non-negative weights summing to one. Throws OutOfGrid.
SparseMatrix interpolation_matrix(const Grid& grid, const Points& inputs);

/// Order-d differences along `axis` for every 1-D line of the grid, without boundary rows.
/// prior_std is either a single value or one value per row. Throws OrderTooHigh and
/// NonPositiveStd.
DifferenceOperator difference_operator(const Grid& grid, Index axis, int order, const Vector& prior_std);
DifferenceOperator difference_operator(const Grid& grid, Index axis, int order, double prior_std);

/// Number of rows difference_operator(grid, axis, order, ...) produces.
Index difference_row_count(const Grid& grid, Index axis, int order);

using PointFunction = std::function<double(std::span<const double>)>;

/// Per-row standard deviations for difference_operator(grid, axis, order, ...): std_fn is
/// evaluated at each stencil's centre (the middle knot for even order, the midpoint of the
/// two middle knots for odd order), other coordinates taken from the row's line.
Vector spatial_std_profile(const Grid& grid, Index axis, int order, const PointFunction& std_fn);

/// Equates the first and last value (and with match_derivatives = 1 also the first
/// differences across the seam) of a 1-D knot vector.
PriorBlock periodic_rows(const std::vector<double>& knots, int match_derivatives, const Vector& prior_std);

/// One row per knot pair mirrored about `axis_of_symmetry`, innermost pairs first. Throws
/// NoMirrorPairs.
PriorBlock symmetry_rows(const std::vector<double>& knots, double axis_of_symmetry, const Vector& prior_std);

/// Replicates a block written for one line of knots (cols == axis length) onto every line
/// of `grid` along `axis`.
PriorBlock lift_to_grid(const PriorBlock& line_block, const Grid& grid, Index axis);

/// theta_i ~ N(mean, var) for every value of the term.
struct PerTermMean {
  double mean = 0.0;
  double var = 1.0;
};
/// theta_i - theta_bar ~ N(0, var) with theta_bar an extra parameter appended to the term.
struct SharedMean {
  double var = 1.0;
};
using Identifiability = std::variant<PerTermMean, SharedMean>;

PriorBlock identifiability_prior(Index term_size, const Identifiability& mode);

}  // namespace bayesgam
