#include "bayesgam/constrain.hpp"

#include "bayesgam/errors.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>

namespace bayesgam {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ConstraintSet from_rows(SparseMatrix rows) {
  ConstraintSet out{std::move(rows), Vector(), {}};
  out.bound = Vector::Zero(out.matrix.rows());
  out.equality.assign(static_cast<std::size_t>(out.matrix.rows()), false);
  return out;
}

struct Rotation {
  double c = 1.0;
  double s = 0.0;
  double h = 0.0;
};

// Zeroes b in (a, b).
Rotation givens(double a, double b) {
  const double h = std::hypot(a, b);
  if (h == 0.0) return {1.0, 0.0, 0.0};
  return {a / h, b / h, h};
}

void rotate_columns(Matrix& m, Index i, Index j, const Rotation& g) {
  for (Index r = 0; r < m.rows(); ++r) {
    const double x = m(r, i);
    const double y = m(r, j);
    m(r, i) = g.c * x + g.s * y;
    m(r, j) = -g.s * x + g.c * y;
  }
}

// Goldfarb-Idnani working state: J = L^{-T} Q, J^T N = [R; 0] for active normals N.
class ActiveSetState {
 public:
  explicit ActiveSetState(Matrix j) : j_(std::move(j)), r_(Matrix::Zero(j_.rows(), j_.rows())) {}

  Index size() const { return q_; }

  // d = J^T n.
  Vector project(const Vector& n) const { return j_.transpose() * n; }

  Vector primal_direction(const Vector& d) const {
    return j_.rightCols(j_.cols() - q_) * d.tail(d.size() - q_);
  }

  Vector dual_direction(const Vector& d) const {
    if (q_ == 0) return Vector();
    return r_.topLeftCorner(q_, q_).triangularView<Eigen::Upper>().solve(d.head(q_));
  }

  // Returns false when the new normal is linearly dependent on the active ones.
  bool add(Vector d) {
    const Index n = j_.rows();
    for (Index k = n - 1; k > q_; --k) {
      const Rotation g = givens(d(k - 1), d(k));
      if (g.h == 0.0) continue;
      d(k - 1) = g.h;
      d(k) = 0.0;
      rotate_columns(j_, k - 1, k, g);
    }
    if (std::abs(d(q_)) <= std::numeric_limits<double>::epsilon() * d.norm()) return false;
    r_.col(q_).head(q_ + 1) = d.head(q_ + 1);
    ++q_;
    return true;
  }

  void drop(Index k) {
    for (Index c = k; c + 1 < q_; ++c) r_.col(c) = r_.col(c + 1);
    r_.col(q_ - 1).setZero();
    for (Index i = k; i + 1 < q_; ++i) {
      const Rotation g = givens(r_(i, i), r_(i + 1, i));
      if (g.h == 0.0) continue;
      for (Index c = i; c + 1 < q_; ++c) {
        const double x = r_(i, c);
        const double y = r_(i + 1, c);
        r_(i, c) = g.c * x + g.s * y;
        r_(i + 1, c) = -g.s * x + g.c * y;
      }
      r_(i + 1, i) = 0.0;
      rotate_columns(j_, i, i + 1, g);
    }
    r_.row(q_ - 1).setZero();
    --q_;
  }

 private:
  Matrix j_;
  Matrix r_;
  Index q_ = 0;
};

}  // namespace

void ConstraintSet::validate() const {
  if (bound.size() != matrix.rows() || static_cast<Index>(equality.size()) != matrix.rows())
    throw InvalidArgument("constraint bound/equality length does not match the row count");
  const SparseMatrix by_row = matrix.transpose();
  for (Index r = 0; r < by_row.outerSize(); ++r) {
    bool nonzero = false;
    for (SparseMatrix::InnerIterator it(by_row, r); it; ++it)
      if (it.value() != 0.0) nonzero = true;
    if (!nonzero) throw InvalidArgument("constraint row " + std::to_string(r) + " is all zero");
  }
}

ConstraintSet ConstraintSet::embedded(Index offset, Index total) const {
  if (offset < 0 || offset + cols() > total) throw InvalidArgument("constraint embedding out of range");
  std::vector<Triplet> trips;
  for (Index c = 0; c < matrix.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(matrix, c); it; ++it) trips.emplace_back(it.row(), offset + c, it.value());
  ConstraintSet out{SparseMatrix(rows(), total), bound, equality};
  out.matrix.setFromTriplets(trips.begin(), trips.end());
  return out;
}

ConstraintSet ConstraintSet::stacked(const ConstraintSet& other) const {
  if (rows() > 0 && other.rows() > 0 && cols() != other.cols())
    throw InvalidArgument("stacked constraints have different widths");
  const Index width = rows() > 0 ? cols() : other.cols();
  std::vector<Triplet> trips;
  for (Index c = 0; c < matrix.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(matrix, c); it; ++it) trips.emplace_back(it.row(), c, it.value());
  for (Index c = 0; c < other.matrix.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(other.matrix, c); it; ++it)
      trips.emplace_back(rows() + it.row(), c, it.value());
  ConstraintSet out{SparseMatrix(rows() + other.rows(), width), Vector(rows() + other.rows()), equality};
  out.matrix.setFromTriplets(trips.begin(), trips.end());
  out.bound << bound, other.bound;
  out.equality.insert(out.equality.end(), other.equality.begin(), other.equality.end());
  return out;
}

ConstraintSet monotone_constraint(const Grid& grid, Index axis, Direction direction) {
  if (axis < 0 || axis >= grid.dims()) throw InvalidArgument("monotone constraint axis out of range");
  if (grid.axis_length(axis) < 2) throw InvalidArgument("monotone constraint needs at least 2 knots");
  SparseMatrix rows = difference_operator(grid, axis, 1, 1.0).rows;
  if (direction == Direction::Decreasing) rows = -rows;
  return from_rows(std::move(rows));
}

ConstraintSet convex_constraint(const Grid& grid, Index axis) {
  if (axis < 0 || axis >= grid.dims()) throw InvalidArgument("convex constraint axis out of range");
  if (grid.axis_length(axis) < 3) throw InvalidArgument("convex constraint needs at least 3 knots");
  // The order-2 stencil is (-1, 2, -1); flip it so rows are second differences.
  return from_rows(-difference_operator(grid, axis, 2, 1.0).rows);
}

QpProblem QpProblem::from_system(const LinearGaussianSystem& system, ConstraintSet constraints) {
  system.validate();
  QpProblem p;
  p.hessian = Matrix(precision_matrix(system));
  p.linear = information_vector(system);
  p.constraints = std::move(constraints);
  return p;
}

QpSolution solve_qp(const QpProblem& problem) {
  const Index n = problem.hessian.rows();
  const ConstraintSet& cs = problem.constraints;
  if (problem.hessian.cols() != n || problem.linear.size() != n)
    throw InvalidArgument("QP hessian/linear shapes disagree");
  cs.validate();
  if (cs.rows() > 0 && cs.cols() != n) throw InvalidArgument("constraint width does not match the QP size");

  Eigen::LLT<Matrix> llt(problem.hessian);
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite("NotPositiveDefinite: QP hessian is not positive definite");
  Matrix linv_t = llt.matrixU().solve(Matrix::Identity(n, n));  // L^{-T}
  ActiveSetState state(std::move(linv_t));

  const Matrix c_dense = Matrix(cs.matrix);
  const Index m = cs.rows();
  Vector theta = llt.solve(problem.linear);

  // Equalities whose residual is positive are entered with flipped sign.
  std::vector<double> sign(static_cast<std::size_t>(m), 1.0);
  std::vector<Index> active;  // constraint indices, in the order of R's columns
  Vector u;                   // multipliers of `active`
  std::vector<bool> in_active(static_cast<std::size_t>(m), false);

  auto normal = [&](Index i) -> Vector { return sign[static_cast<std::size_t>(i)] * c_dense.row(i).transpose(); };
  auto slack = [&](Index i) {
    return sign[static_cast<std::size_t>(i)] * (c_dense.row(i).dot(theta) - cs.bound(i));
  };
  auto tolerance = [&](Index i) {
    return 1e-12 * std::max({1.0, std::abs(cs.bound(i)), c_dense.row(i).norm() * theta.norm()});
  };

  const Index max_iter = 50 * (n + m) + 100;
  Index iter = 0;
  while (true) {
    // Pick the next constraint: pending equalities first, then the most violated inequality.
    Index p = -1;
    for (Index i = 0; i < m && p < 0; ++i)
      if (cs.equality[static_cast<std::size_t>(i)] && !in_active[static_cast<std::size_t>(i)]) p = i;
    if (p >= 0) {
      sign[static_cast<std::size_t>(p)] = 1.0;
      if (slack(p) > 0.0) sign[static_cast<std::size_t>(p)] = -1.0;
    } else {
      double worst = 0.0;
      for (Index i = 0; i < m; ++i) {
        if (in_active[static_cast<std::size_t>(i)]) continue;
        const double s = slack(i);
        if (s < -tolerance(i) && s < worst) {
          worst = s;
          p = i;
        }
      }
    }
    if (p < 0) break;

    const Vector np = normal(p);
    double u_new = 0.0;
    while (true) {
      if (++iter > max_iter) throw Error("QP solver exceeded its iteration limit");
      const Vector d = state.project(np);
      const Index q = state.size();
      const Vector z = state.primal_direction(d);
      const Vector r = state.dual_direction(d);
      const bool zero_step = d.tail(n - q).squaredNorm() <= 1e-14 * d.squaredNorm();

      double t1 = kInf;
      Index drop_pos = -1;
      for (Index k = 0; k < q; ++k) {
        const Index ci = active[static_cast<std::size_t>(k)];
        if (cs.equality[static_cast<std::size_t>(ci)]) continue;
        if (r(k) > 0.0) {
          const double ratio = u(k) / r(k);
          if (ratio < t1) {
            t1 = ratio;
            drop_pos = k;
          }
        }
      }
      const double sp = np.dot(theta) - sign[static_cast<std::size_t>(p)] * cs.bound(p);
      const double t2 = zero_step ? kInf : -sp / z.dot(np);
      const double t = std::min(t1, t2);
      if (t == kInf) throw Infeasible("Infeasible: constraint " + std::to_string(p) + " cannot be satisfied together with the active set");

      if (q > 0) u -= t * r;
      u_new += t;
      if (!zero_step) theta += t * z;

      if (!zero_step && t == t2) {
        if (!state.add(d)) throw Infeasible("Infeasible: constraint " + std::to_string(p) + " is linearly dependent on the active set");
        active.push_back(p);
        in_active[static_cast<std::size_t>(p)] = true;
        u.conservativeResize(q + 1);
        u(q) = u_new;
        break;
      }
      // Partial step: release the blocking constraint and retry.
      in_active[static_cast<std::size_t>(active[static_cast<std::size_t>(drop_pos)])] = false;
      state.drop(drop_pos);
      active.erase(active.begin() + drop_pos);
      Vector kept(q - 1);
      for (Index k = 0, w = 0; k < q; ++k)
        if (k != drop_pos) kept(w++) = u(k);
      u = std::move(kept);
    }
  }

  QpSolution out;
  out.theta = theta;
  out.multipliers = Vector::Zero(m);
  for (std::size_t k = 0; k < active.size(); ++k) {
    const Index ci = active[k];
    out.multipliers(ci) = sign[static_cast<std::size_t>(ci)] * u(static_cast<Index>(k));
  }
  out.active_set = active;
  std::sort(out.active_set.begin(), out.active_set.end());
  out.objective = 0.5 * theta.dot(problem.hessian * theta) - problem.linear.dot(theta);
  return out;
}

QpSolution solve_constrained(const LinearGaussianSystem& system, const ConstraintSet& constraints) {
  return solve_qp(QpProblem::from_system(system, constraints));
}

KktResiduals kkt_residuals(const QpProblem& problem, const QpSolution& solution) {
  const ConstraintSet& cs = problem.constraints;
  KktResiduals out;
  Vector grad = problem.hessian * solution.theta - problem.linear;
  if (cs.rows() > 0) {
    const Vector slack = cs.matrix * solution.theta - cs.bound;
    grad -= cs.matrix.transpose() * solution.multipliers;
    for (Index i = 0; i < cs.rows(); ++i) {
      const bool eq = cs.equality[static_cast<std::size_t>(i)];
      out.primal = std::max(out.primal, eq ? std::abs(slack(i)) : -slack(i));
      if (!eq) {
        out.dual = std::max(out.dual, -solution.multipliers(i));
        out.complementarity = std::max(out.complementarity, std::abs(solution.multipliers(i) * slack(i)));
      }
    }
  }
  out.stationarity = grad.norm();
  return out;
}

}  // namespace bayesgam
