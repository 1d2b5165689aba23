#pragma once

#include "bayesgam/types.hpp"

#include <cstdint>

namespace bayesgam {

/// y = A theta + eps, eps ~ N(0, diag(obs_var)); B theta ~ N(prior_mean, diag(prior_var)).
///
/// B may be rank deficient (or have no rows at all) as long as the combined precision
/// A^T W A + B^T V B is positive definite.
struct LinearGaussianSystem {
  SparseMatrix design;           // A, N_obs x N_par
  Vector obs;                    // y
  Vector obs_var;                // diagonal of Gamma_obs
  SparseMatrix prior_transform;  // B, N_pr x N_par
  Vector prior_mean;
  Vector prior_var;              // diagonal of Gamma_pr

  Index parameter_count() const { return design.cols(); }
  Index observation_count() const { return design.rows(); }
  Index prior_count() const { return prior_transform.rows(); }

  /// Throws InvalidArgument when shapes disagree or a variance is not strictly positive.
  void validate() const;
};

/// A^T W A + B^T V B.
SparseMatrix precision_matrix(const LinearGaussianSystem& system);
/// A^T W y + B^T V mu_pr.
Vector information_vector(const LinearGaussianSystem& system);

/// Sparse Cholesky factor of a symmetric positive definite matrix H with a fill-reducing
/// permutation P:  P H P^T = L L^T.
class CholeskyFactor {
 public:
  CholeskyFactor() = default;
  /// Adopts an existing factor (e.g. read back from an archive). Validates shapes.
  CholeskyFactor(SparseMatrix lower, Permutation perm);

  /// Factorizes H + jitter*I. Throws SingularPosterior with the failing parameter index.
  static CholeskyFactor factorize(const SparseMatrix& h, double jitter = 0.0);

  Index size() const { return lower_.rows(); }
  const SparseMatrix& lower() const { return lower_; }
  const Permutation& permutation() const { return perm_; }

  /// H^{-1} b.
  Vector solve(const Vector& b) const;
  /// log det H.
  double log_det() const;
  /// P^T L L^T P, for reconstruction checks.
  SparseMatrix reconstruct() const;
  /// L^{-1} P M column by column; squared column norms are the quadratic forms m^T H^{-1} m.
  Matrix whiten(const SparseMatrix& columns) const;
  /// Dense H^{-1}. Only sensible for small systems.
  Matrix inverse() const;

 private:
  SparseMatrix lower_;
  Permutation perm_;
};

struct Posterior {
  Vector mean;
  CholeskyFactor precision_factor;

  Index size() const { return mean.size(); }
  double log_det_precision() const { return precision_factor.log_det(); }
  /// Dense posterior covariance.
  Matrix covariance() const { return precision_factor.inverse(); }
};

/// Posterior of a linear-Gaussian system. jitter adds jitter*I to the precision before
/// factorizing (default off: an improper posterior is an error, never silently repaired).
Posterior solve(const LinearGaussianSystem& system, double jitter = 0.0);

/// count x N_par matrix of posterior draws mu + P^T L^{-T} z, z ~ N(0, I), reproducible for
/// a fixed seed regardless of thread count.
Matrix sample(const Posterior& posterior, Index count, std::uint64_t seed);

struct Predictive {
  Vector mean;
  Matrix covariance;
};

struct PredictiveMarginals {
  Vector mean;
  Vector variance;
};

/// N(A* mu, A* Gamma_pos A*^T + diag(obs_var_new)) for new rows A*.
Predictive posterior_predictive(const Posterior& posterior, const SparseMatrix& design_new,
                                const Vector& obs_var_new);

/// Mean and marginal variances only; never forms the dense covariance.
PredictiveMarginals predictive_marginals(const Posterior& posterior, const SparseMatrix& design_new,
                                         const Vector& obs_var_new);

/// Multivariate normal log density. Throws NotPositiveDefinite.
double log_density(const Vector& mean, const Matrix& covariance, const Vector& point);

}  // namespace bayesgam
