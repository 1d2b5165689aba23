#include "bayesgam/kernels.hpp"

namespace bayesgam::kernels {

namespace {

void gram_row(const Points& points, const PairFunction& f, Index i, Matrix& g) {
  const auto pi = point_of(points, i);
  for (Index j = i; j < points.rows(); ++j) {
    const double v = f(pi, point_of(points, j));
    g(i, j) = v;
    g(j, i) = v;
  }
}

void whiten_column(const SparseMatrix& lower, const Permutation& perm, const SparseMatrix& columns,
                   Index c, Matrix& out) {
  Vector v = perm * Vector(columns.col(c));
  lower.triangularView<Eigen::Lower>().solveInPlace(v);
  out.col(c) = v;
}

void color_column(const SparseMatrix& lower, const Permutation& perm, const Matrix& z, Index c,
                  Matrix& out) {
  Vector v = z.col(c);
  lower.transpose().triangularView<Eigen::Upper>().solveInPlace(v);
  out.col(c) = perm.transpose() * v;
}

}  // namespace

Matrix gram_matrix(const Points& points, const PairFunction& f) {
  const Index n = points.rows();
  Matrix g(n, n);
#pragma omp parallel for schedule(dynamic)
  for (Index i = 0; i < n; ++i) gram_row(points, f, i, g);
  return g;
}

Matrix whiten_columns(const SparseMatrix& lower, const Permutation& perm, const SparseMatrix& columns) {
  Matrix out(lower.rows(), columns.cols());
#pragma omp parallel for schedule(dynamic)
  for (Index c = 0; c < columns.cols(); ++c) whiten_column(lower, perm, columns, c, out);
  return out;
}

Matrix color_columns(const SparseMatrix& lower, const Permutation& perm, const Matrix& z) {
  Matrix out(lower.rows(), z.cols());
#pragma omp parallel for schedule(dynamic)
  for (Index c = 0; c < z.cols(); ++c) color_column(lower, perm, z, c, out);
  return out;
}

namespace serial {

Matrix gram_matrix(const Points& points, const PairFunction& f) {
  const Index n = points.rows();
  Matrix g(n, n);
  for (Index i = 0; i < n; ++i) gram_row(points, f, i, g);
  return g;
}

Matrix whiten_columns(const SparseMatrix& lower, const Permutation& perm, const SparseMatrix& columns) {
  Matrix out(lower.rows(), columns.cols());
  for (Index c = 0; c < columns.cols(); ++c) whiten_column(lower, perm, columns, c, out);
  return out;
}

Matrix color_columns(const SparseMatrix& lower, const Permutation& perm, const Matrix& z) {
  Matrix out(lower.rows(), z.cols());
  for (Index c = 0; c < z.cols(); ++c) color_column(lower, perm, z, c, out);
  return out;
}

}  // namespace serial
}  // namespace bayesgam::kernels
