#pragma once

// Test-only oracles and data generators. Nothing here calls into the sparse solver: the
// dense paths use explicit inverses so they stay independent of the code under test.

#include "bayesgam/linsys.hpp"
#include "bayesgam/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>

namespace bayesgam::testing {

struct DensePosterior {
  Vector mean;
  Matrix covariance;
};

inline DensePosterior dense_posterior(const LinearGaussianSystem& s) {
  const Matrix a = Matrix(s.design);
  const Matrix b = Matrix(s.prior_transform);
  const Vector w = s.obs_var.cwiseInverse();
  const Vector v = s.prior_var.cwiseInverse();
  Matrix h = a.transpose() * w.asDiagonal() * a;
  if (b.rows() > 0) h += b.transpose() * v.asDiagonal() * b;
  Vector rhs = a.transpose() * w.cwiseProduct(s.obs);
  if (b.rows() > 0) rhs += b.transpose() * v.cwiseProduct(s.prior_mean);
  DensePosterior out;
  out.covariance = h.inverse();
  out.mean = out.covariance * rhs;
  return out;
}

// Textbook density with an explicit inverse and determinant.
inline double dense_log_density(const Vector& mean, const Matrix& cov, const Vector& x) {
  const Vector r = x - mean;
  const double quad = r.dot(cov.inverse() * r);
  return -0.5 * (static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi) + std::log(cov.determinant()) + quad);
}

inline SparseMatrix random_sparse(std::mt19937_64& rng, Index rows, Index cols, double density) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<Triplet> trips;
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c)
      if (u(rng) < density) trips.emplace_back(r, c, n(rng));
  SparseMatrix m(rows, cols);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

// Random sparse system with an identity prior block so the posterior is proper, plus a few
// random prior rows on top.
inline LinearGaussianSystem random_system(std::mt19937_64& rng, Index nobs, Index npar, double density = 0.2) {
  std::uniform_real_distribution<double> pos(0.2, 2.0);
  std::normal_distribution<double> n(0.0, 1.0);
  LinearGaussianSystem s;
  s.design = random_sparse(rng, nobs, npar, density);
  s.obs = Vector::NullaryExpr(nobs, [&] { return n(rng); });
  s.obs_var = Vector::NullaryExpr(nobs, [&] { return pos(rng); });
  const Index extra = npar / 3;
  SparseMatrix b_extra = random_sparse(rng, extra, npar, 0.3);
  std::vector<Triplet> trips;
  for (Index i = 0; i < npar; ++i) trips.emplace_back(i, i, 1.0);
  for (Index c = 0; c < b_extra.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(b_extra, c); it; ++it) trips.emplace_back(npar + it.row(), c, it.value());
  s.prior_transform = SparseMatrix(npar + extra, npar);
  s.prior_transform.setFromTriplets(trips.begin(), trips.end());
  s.prior_mean = Vector::NullaryExpr(npar + extra, [&] { return n(rng); });
  s.prior_var = Vector::NullaryExpr(npar + extra, [&] { return pos(rng); });
  return s;
}

// The quartic test problem of the extrapolation experiment: 50 noisy samples of
// 3x^4 - 6x^2 + 2 on [-1.5, 1.5]; the model grid runs to +-2.
inline double quartic(double x) { return 3.0 * x * x * x * x - 6.0 * x * x + 2.0; }

inline DataTable quartic_data(std::uint64_t seed, Index n = 50, double noise_sd = 0.5) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  std::normal_distribution<double> e(0.0, noise_sd);
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (auto& x : xs) x = u(rng);
  std::sort(xs.begin(), xs.end());
  Vector x(n), y(n);
  for (Index i = 0; i < n; ++i) {
    x(i) = xs[static_cast<std::size_t>(i)];
    y(i) = quartic(x(i)) + e(rng);
  }
  DataTable t;
  t.add("x", x);
  t.add("y", y);
  return t;
}

inline GamModel quartic_model(int order, double prior_var, Index knots = 15, double obs_var = 0.25) {
  const Grid grid = Grid::uniform(-2.0, 2.0, knots);
  LocalTerm local{grid, {difference_operator(grid, 0, order, std::sqrt(prior_var)).prior_block()}, {"x"}};
  GamModel m;
  m.response = "y";
  m.obs_var = obs_var;
  m.terms.push_back(GamTerm{"f", local, std::nullopt});
  return m;
}

inline double rel_frobenius(const Matrix& a, const Matrix& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

}  // namespace bayesgam::testing
