#pragma once

// Data-parallel inner loops. Every kernel here has a serial twin in `kernels::serial` that
// computes the same result with a plain loop; tests pin the two together and bench/
// compares their throughput.

#include "bayesgam/types.hpp"

#include <functional>
#include <vector>

namespace bayesgam::kernels {

using PairFunction = std::function<double(std::span<const double>, std::span<const double>)>;

/// Symmetric Gram matrix G_ij = f(p_i, p_j) over the rows of `points`.
Matrix gram_matrix(const Points& points, const PairFunction& f);

/// W = L^{-1} P M for a lower-triangular sparse L and fill-reducing permutation P, one
/// dense column of W per column of M.
Matrix whiten_columns(const SparseMatrix& lower, const Permutation& perm, const SparseMatrix& columns);

/// X = P^T L^{-T} Z, column by column.
Matrix color_columns(const SparseMatrix& lower, const Permutation& perm, const Matrix& z);

/// Evaluates fn(i) for i in [0, n) across the OpenMP team. fn must not throw.
template <class T, class Fn>
std::vector<T> map_indices(Index n, Fn&& fn) {
  std::vector<T> out(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic)
  for (Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = fn(i);
  return out;
}

namespace serial {

Matrix gram_matrix(const Points& points, const PairFunction& f);
Matrix whiten_columns(const SparseMatrix& lower, const Permutation& perm, const SparseMatrix& columns);
Matrix color_columns(const SparseMatrix& lower, const Permutation& perm, const Matrix& z);

template <class T, class Fn>
std::vector<T> map_indices(Index n, Fn&& fn) {
  std::vector<T> out;
  out.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) out.push_back(fn(i));
  return out;
}

}  // namespace serial
}  // namespace bayesgam::kernels
