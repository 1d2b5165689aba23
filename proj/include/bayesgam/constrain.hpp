#pragma once

#include "bayesgam/linsys.hpp"
#include "bayesgam/localbasis.hpp"

#include <vector>

namespace bayesgam {

/// Rows C theta >= c, or C theta = c where equality[i] is set.
struct ConstraintSet {
  SparseMatrix matrix;
  Vector bound;
  std::vector<bool> equality;

  Index rows() const { return matrix.rows(); }
  Index cols() const { return matrix.cols(); }
  /// Throws InvalidArgument on shape mismatch or an all-zero row.
  void validate() const;
  /// Same rows acting on columns [offset, offset + cols()) of a `total`-wide parameter vector.
  ConstraintSet embedded(Index offset, Index total) const;
  /// Rows of *this followed by rows of other.
  ConstraintSet stacked(const ConstraintSet& other) const;
};

enum class Direction { Increasing, Decreasing };

ConstraintSet monotone_constraint(const Grid& grid, Index axis, Direction direction);
/// Second differences >= 0 along `axis`.
ConstraintSet convex_constraint(const Grid& grid, Index axis);

/// min 1/2 theta^T G theta - a^T theta subject to the constraints.
struct QpProblem {
  Matrix hessian;
  Vector linear;
  ConstraintSet constraints;

  static QpProblem from_system(const LinearGaussianSystem& system, ConstraintSet constraints);
};

struct QpSolution {
  Vector theta;
  Vector multipliers;           // one per constraint row, zero when inactive
  std::vector<Index> active_set; // diagnostic only
  double objective = 0.0;
};

/// Dual active-set (Goldfarb-Idnani) solve. Throws Infeasible and NotPositiveDefinite.
QpSolution solve_qp(const QpProblem& problem);

/// MAP estimate of a linear-Gaussian system under linear constraints.
QpSolution solve_constrained(const LinearGaussianSystem& system, const ConstraintSet& constraints);

struct KktResiduals {
  double primal = 0.0;          // max violation of C theta >= c (|.| for equalities)
  double stationarity = 0.0;    // ||G theta - a - C^T lambda||
  double dual = 0.0;            // most negative inequality multiplier, as a non-negative number
  double complementarity = 0.0; // max |lambda_i (C_i theta - c_i)|
};

KktResiduals kkt_residuals(const QpProblem& problem, const QpSolution& solution);

}  // namespace bayesgam
