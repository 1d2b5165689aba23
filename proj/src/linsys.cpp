#include "bayesgam/linsys.hpp"

#include "bayesgam/errors.hpp"
#include "bayesgam/kernels.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace bayesgam {

namespace {

// Pivots below this fraction of the largest diagonal entry are treated as breakdown.
constexpr double kPivotTolerance = 1e-13;

void require(bool ok, const std::string& message) {
  if (!ok) throw InvalidArgument(message);
}

}  // namespace

void LinearGaussianSystem::validate() const {
  require(obs.size() == design.rows(), "observation vector length does not match design rows");
  require(obs_var.size() == design.rows(), "obs_var length does not match design rows");
  require(prior_transform.cols() == design.cols(),
          "prior transform and design have different column counts");
  require(prior_mean.size() == prior_transform.rows(), "prior_mean length does not match prior rows");
  require(prior_var.size() == prior_transform.rows(), "prior_var length does not match prior rows");
  require((obs_var.array() > 0.0).all(), "obs_var must be strictly positive");
  require((prior_var.array() > 0.0).all(), "prior_var must be strictly positive");
}

SparseMatrix precision_matrix(const LinearGaussianSystem& system) {
  const Vector w = system.obs_var.cwiseInverse();
  const Vector v = system.prior_var.cwiseInverse();
  SparseMatrix h = SparseMatrix(system.design.transpose()) * w.asDiagonal() * system.design;
  if (system.prior_count() > 0)
    h += SparseMatrix(system.prior_transform.transpose()) * v.asDiagonal() * system.prior_transform;
  h.makeCompressed();
  return h;
}

Vector information_vector(const LinearGaussianSystem& system) {
  Vector rhs = system.design.transpose() * system.obs.cwiseQuotient(system.obs_var);
  if (system.prior_count() > 0)
    rhs += system.prior_transform.transpose() * system.prior_mean.cwiseQuotient(system.prior_var);
  return rhs;
}

CholeskyFactor::CholeskyFactor(SparseMatrix lower, Permutation perm)
    : lower_(std::move(lower)), perm_(std::move(perm)) {
  require(lower_.rows() == lower_.cols(), "Cholesky factor must be square");
  require(perm_.size() == lower_.rows(), "permutation size does not match factor");
  lower_.makeCompressed();
}

CholeskyFactor CholeskyFactor::factorize(const SparseMatrix& h, double jitter) {
  require(h.rows() == h.cols(), "precision matrix must be square");
  require(jitter >= 0.0, "jitter must be non-negative");
  const Index n = h.rows();
  SparseMatrix work = h;
  if (jitter > 0.0) {
    SparseMatrix eye(n, n);
    eye.setIdentity();
    work += jitter * eye;
  }
  work.makeCompressed();

  double max_diag = 0.0;
  for (Index i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(work.coeff(i, i)));

  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
  ldlt.analyzePattern(work);
  ldlt.factorize(work);
  const Permutation perm = ldlt.permutationP();
  const Vector d = ldlt.vectorD();
  const Permutation inverse = perm.inverse();
  const Eigen::VectorXi original = inverse.indices();

  const double tol = kPivotTolerance * max_diag;
  for (Index k = 0; k < n; ++k) {
    if (!(d(k) > tol)) {
      std::ostringstream detail;
      detail << "pivot " << d(k) << ", largest diagonal " << max_diag;
      throw SingularPosterior(original(k), detail.str());
    }
  }
  if (ldlt.info() != Eigen::Success) throw SingularPosterior(-1, "sparse LDL^T breakdown");

  // Scale the unit-lower factor to L * sqrt(D).
  const SparseMatrix& unit = ldlt.matrixL().nestedExpression();
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(unit.nonZeros() + n));
  const Vector sqrt_d = d.cwiseSqrt();
  for (Index c = 0; c < unit.outerSize(); ++c) {
    trips.emplace_back(c, c, sqrt_d(c));
    for (SparseMatrix::InnerIterator it(unit, c); it; ++it)
      if (it.row() > c) trips.emplace_back(it.row(), c, it.value() * sqrt_d(c));
  }
  SparseMatrix lower(n, n);
  lower.setFromTriplets(trips.begin(), trips.end());
  return CholeskyFactor(std::move(lower), perm);
}

Vector CholeskyFactor::solve(const Vector& b) const {
  require(b.size() == size(), "right-hand side has the wrong length");
  Vector v = perm_ * b;
  lower_.triangularView<Eigen::Lower>().solveInPlace(v);
  lower_.transpose().triangularView<Eigen::Upper>().solveInPlace(v);
  return perm_.transpose() * v;
}

double CholeskyFactor::log_det() const {
  double acc = 0.0;
  for (Index i = 0; i < size(); ++i) acc += std::log(lower_.coeff(i, i));
  return 2.0 * acc;
}

SparseMatrix CholeskyFactor::reconstruct() const {
  const SparseMatrix llt = lower_ * SparseMatrix(lower_.transpose());
  const SparseMatrix left = perm_.transpose() * llt;
  return left * perm_;
}

Matrix CholeskyFactor::whiten(const SparseMatrix& columns) const {
  require(columns.rows() == size(), "whiten: column length does not match factor");
  return kernels::whiten_columns(lower_, perm_, columns);
}

Matrix CholeskyFactor::inverse() const {
  SparseMatrix eye(size(), size());
  eye.setIdentity();
  const Matrix w = whiten(eye);
  return w.transpose() * w;
}

Posterior solve(const LinearGaussianSystem& system, double jitter) {
  system.validate();
  Posterior post;
  post.precision_factor = CholeskyFactor::factorize(precision_matrix(system), jitter);
  post.mean = post.precision_factor.solve(information_vector(system));
  return post;
}

Matrix sample(const Posterior& posterior, Index count, std::uint64_t seed) {
  require(count >= 1, "sample count must be at least 1");
  const Index n = posterior.size();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(n, count);
  for (Index c = 0; c < count; ++c)
    for (Index i = 0; i < n; ++i) z(i, c) = normal(rng);
  const auto& f = posterior.precision_factor;
  Matrix draws = kernels::color_columns(f.lower(), f.permutation(), z);
  draws.colwise() += posterior.mean;
  return draws.transpose();
}

Predictive posterior_predictive(const Posterior& posterior, const SparseMatrix& design_new,
                                const Vector& obs_var_new) {
  require(design_new.cols() == posterior.size(), "predictive design has the wrong column count");
  require(obs_var_new.size() == design_new.rows(), "obs_var_new length does not match design rows");
  const Matrix w = posterior.precision_factor.whiten(SparseMatrix(design_new.transpose()));
  Predictive out;
  out.mean = design_new * posterior.mean;
  out.covariance = w.transpose() * w;
  out.covariance.diagonal() += obs_var_new;
  return out;
}

PredictiveMarginals predictive_marginals(const Posterior& posterior, const SparseMatrix& design_new,
                                         const Vector& obs_var_new) {
  require(design_new.cols() == posterior.size(), "predictive design has the wrong column count");
  require(obs_var_new.size() == design_new.rows(), "obs_var_new length does not match design rows");
  const Matrix w = posterior.precision_factor.whiten(SparseMatrix(design_new.transpose()));
  PredictiveMarginals out;
  out.mean = design_new * posterior.mean;
  out.variance = w.colwise().squaredNorm().transpose() + obs_var_new;
  return out;
}

double log_density(const Vector& mean, const Matrix& covariance, const Vector& point) {
  require(covariance.rows() == covariance.cols(), "covariance must be square");
  require(mean.size() == covariance.rows() && point.size() == mean.size(),
          "log_density: dimension mismatch");
  Eigen::LLT<Matrix> llt(covariance);
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite("log_density: covariance is not positive definite");
  const Vector r = llt.matrixL().solve(point - mean);
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double n = static_cast<double>(mean.size());
  return -0.5 * (n * std::log(2.0 * std::numbers::pi) + log_det + r.squaredNorm());
}

}  // namespace bayesgam
