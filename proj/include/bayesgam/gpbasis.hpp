#pragma once

#include "bayesgam/localbasis.hpp"
#include "bayesgam/types.hpp"

#include <memory>
#include <variant>
#include <vector>

namespace bayesgam {

/// sigma2 * exp(-d^2 / (2 L^2)).
struct SquaredExponential {
  double sigma2 = 1.0;
  double length = 1.0;
};

/// sigma2 * exp(-2 sin^2(pi d / period) / L^2).
struct Periodic {
  double sigma2 = 1.0;
  double length = 1.0;
  double period = 1.0;
};

class Kernel;

/// k(x, x') + k(-x, x') for a 1-D inner kernel; symmetric about x = 0.
struct Symmetric {
  std::shared_ptr<const Kernel> inner;
};

/// Product of 1-D kernels, one per input dimension.
struct Separable {
  std::vector<Kernel> factors;
};

class Kernel {
 public:
  using Variant = std::variant<SquaredExponential, Periodic, Symmetric, Separable>;

  Kernel(SquaredExponential k);
  Kernel(Periodic k);
  Kernel(Symmetric k);
  Kernel(Separable k);

  static Kernel symmetric(Kernel inner);
  static Kernel separable(std::vector<Kernel> factors);

  /// Input dimensionality.
  Index arity() const;
  const Variant& variant() const { return v_; }
  Variant& variant() { return v_; }

 private:
  void validate() const;
  Variant v_;
};

double kernel_eval(const Kernel& kernel, std::span<const double> x, std::span<const double> x2);

/// K_ij = k(g_i, g_j) over the grid knots in flattening order. A multi-axis grid requires a
/// Separable kernel with one factor per axis.
Matrix covariance_matrix(const Kernel& kernel, const Grid& grid);

/// Truncated eigenbasis f = mean + basis * theta, theta ~ N(0, I).
struct GpBasis {
  Grid grid;
  Vector mean;         // translation evaluated at the knots
  Matrix basis;        // n_grid x k, column i = sqrt(lambda_i) q_i
  Vector eigenvalues;  // retained, descending
  double energy = 0.0; // retained fraction of the trace

  Index size() const { return basis.cols(); }
};

using MeanFunction = PointFunction;
MeanFunction zero_mean();
MeanFunction constant_mean(double value);

/// Dense eigendecomposition of the grid covariance, keeping the smallest k whose retained
/// trace fraction reaches energy_threshold. Throws IndefiniteCovariance.
GpBasis eigenbasis(const Kernel& kernel, const Grid& grid, const MeanFunction& mean_fn, double energy_threshold);

struct KernelFactor {
  Kernel kernel;               // 1-D
  std::vector<double> knots;
};

/// Joint basis of a separable kernel from per-factor eigendecompositions; the joint
/// covariance is never formed.
GpBasis kron_eigenbasis(const std::vector<KernelFactor>& factors, double energy_threshold,
                        const MeanFunction& mean_fn = zero_mean());

struct DesignBlock {
  SparseMatrix design;  // interpolation * basis
  Vector translation;   // interpolation * mean
};

/// Maps the basis to observation inputs by multilinear interpolation. Throws OutOfGrid.
DesignBlock gp_design_block(const GpBasis& basis, const Points& inputs);

/// Standard-normal prior on the basis weights.
PriorBlock gp_prior_block(const GpBasis& basis);

}  // namespace bayesgam
