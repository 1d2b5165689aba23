#include "bayesgam/constrain.hpp"
#include "bayesgam/errors.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace bayesgam;

namespace {

QpProblem random_qp(std::mt19937_64& rng, Index n, Index m) {
  std::normal_distribution<double> nd(0.0, 1.0);
  const Matrix g0 = Matrix::NullaryExpr(n, n, [&] { return nd(rng); });
  QpProblem p;
  p.hessian = g0 * g0.transpose() + 0.5 * Matrix::Identity(n, n);
  p.linear = Vector::NullaryExpr(n, [&] { return 3.0 * nd(rng); });
  // feasible by construction: x0 satisfies all rows with slack
  const Vector x0 = Vector::NullaryExpr(n, [&] { return nd(rng); });
  const SparseMatrix c = testing::random_sparse(rng, m, n, 0.4);
  Matrix cd = Matrix(c);
  for (Index r = 0; r < m; ++r)
    if (cd.row(r).isZero()) cd(r, r % n) = 1.0;
  p.constraints.matrix = cd.sparseView();
  p.constraints.bound = cd * x0 - Vector::Constant(m, 0.1);
  p.constraints.equality.assign(static_cast<std::size_t>(m), false);
  return p;
}

void check_kkt(const QpProblem& p, const QpSolution& s) {
  const KktResiduals r = kkt_residuals(p, s);
  CHECK(r.primal <= 1e-8);
  CHECK(r.stationarity <= 1e-8 * std::max(1.0, p.linear.norm()));
  CHECK(r.dual <= 1e-10);
  CHECK(r.complementarity <= 1e-8);
}

}  // namespace

TEST_CASE("constraint construction") {
  const Grid g = Grid::uniform(0.0, 1.0, 4);
  const ConstraintSet inc = monotone_constraint(g, 0, Direction::Increasing);
  Matrix d1(3, 4);
  d1 << -1, 1, 0, 0, 0, -1, 1, 0, 0, 0, -1, 1;
  CHECK(Matrix(inc.matrix) == d1);
  CHECK(inc.bound.isZero());
  CHECK(Matrix(monotone_constraint(g, 0, Direction::Decreasing).matrix) == -d1);
  const Grid g2({{0.0, 1.0, 2.0}, {0.0, 1.0, 2.0}});
  CHECK(monotone_constraint(g2, 0, Direction::Increasing).rows() == 6);

  const Grid g5 = Grid::uniform(0.0, 1.0, 5);
  const ConstraintSet cvx = convex_constraint(g5, 0);
  Matrix d2(3, 5);
  d2 << -1, 2, -1, 0, 0, 0, -1, 2, -1, 0, 0, 0, -1, 2, -1;
  CHECK(Matrix(cvx.matrix) == -d2);
  Vector quad(5), concave(5);
  for (Index i = 0; i < 5; ++i) {
    quad(i) = (i - 1.5) * (i - 1.5);
    concave(i) = -quad(i);
  }
  CHECK(((cvx.matrix * quad).array() >= 0.0).all());
  CHECK(((cvx.matrix * concave).array() < 0.0).any());
  CHECK_THROWS_AS(convex_constraint(Grid::uniform(0, 1, 2), 0), InvalidArgument);
}

TEST_CASE("inactive constraints leave the unconstrained solution") {
  std::mt19937_64 rng(1);
  const LinearGaussianSystem s = testing::random_system(rng, 30, 6);
  const Vector mean = solve(s).mean;
  ConstraintSet cs{SparseMatrix(6, 6), mean - Vector::Constant(6, 1.0), std::vector<bool>(6, false)};
  cs.matrix.setIdentity();
  const QpSolution q = solve_constrained(s, cs);
  CHECK((q.theta - mean).norm() <= 1e-8 * std::max(1.0, mean.norm()));
  CHECK(q.active_set.empty());
}

TEST_CASE("equality constrained scalar") {
  QpProblem p;
  p.hessian = Matrix::Constant(1, 1, 2.0);  // (theta - 2)^2 up to a constant
  p.linear = Vector::Constant(1, 4.0);
  p.constraints = ConstraintSet{Matrix::Ones(1, 1).sparseView(), Vector::Ones(1), {true}};
  const QpSolution s = solve_qp(p);
  CHECK(s.theta(0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(s.multipliers(0) == doctest::Approx(-2.0));  // free sign on equalities
  check_kkt(p, s);
}

TEST_CASE("randomized feasible problems satisfy KKT") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    CAPTURE(trial);
    std::uniform_int_distribution<Index> dim(2, 50);
    const Index n = dim(rng);
    const Index m = dim(rng);
    QpProblem p = random_qp(rng, n, m);
    if (trial % 4 == 0) {
      // a couple of equality rows through the same feasible point
      p.constraints.equality[0] = true;
      p.constraints.bound(0) += 0.1;
    }
    check_kkt(p, solve_qp(p));
  }
}

TEST_CASE("brute-force projected grid search on 2 parameters") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 5; ++trial) {
    QpProblem p = random_qp(rng, 2, 3);
    const QpSolution s = solve_qp(p);
    const Matrix c = Matrix(p.constraints.matrix);
    double best = std::numeric_limits<double>::infinity();
    Vector arg(2);
    const double h = 2e-3;
    for (double a = s.theta(0) - 1; a <= s.theta(0) + 1; a += h)
      for (double b = s.theta(1) - 1; b <= s.theta(1) + 1; b += h) {
        Vector t(2);
        t << a, b;
        if (((c * t - p.constraints.bound).array() < 0).any()) continue;
        const double f = 0.5 * t.dot(p.hessian * t) - p.linear.dot(t);
        if (f < best) {
          best = f;
          arg = t;
        }
      }
    CHECK((arg - s.theta).norm() <= 1e-3 * 3);
    CHECK(s.objective <= best + 1e-12);
  }
}

TEST_CASE("infeasible and indefinite problems") {
  QpProblem p;
  p.hessian = Matrix::Identity(1, 1);
  p.linear = Vector::Zero(1);
  Matrix c(2, 1);
  c << 1, -1;
  Vector b(2);
  b << 1, 0;  // theta >= 1 and theta <= 0
  p.constraints = ConstraintSet{c.sparseView(), b, {false, false}};
  CHECK_THROWS_AS(solve_qp(p), Infeasible);
  p.hessian(0, 0) = -1.0;
  CHECK_THROWS_AS(solve_qp(p), NotPositiveDefinite);
}

TEST_CASE("monotone fit costs objective only when active") {
  // decreasing data, increasing constraint
  const Grid g = Grid::uniform(0.0, 1.0, 8);
  LinearGaussianSystem s;
  s.design = interpolation_matrix(g, g.knots());
  s.obs = Vector::LinSpaced(8, 1.0, 0.0);
  s.obs_var = Vector::Constant(8, 0.01);
  const PriorBlock pb = difference_operator(g, 0, 2, 1.0).prior_block();
  s.prior_transform = pb.transform;
  s.prior_mean = pb.mean;
  s.prior_var = pb.var;
  const QpProblem p = QpProblem::from_system(s, monotone_constraint(g, 0, Direction::Increasing));
  const QpSolution q = solve_qp(p);
  const Vector free = solve(s).mean;
  const double f_free = 0.5 * free.dot(p.hessian * free) - p.linear.dot(free);
  CHECK(q.objective > f_free);
  CHECK(((monotone_constraint(g, 0, Direction::Increasing).matrix * q.theta).array() >= -1e-10).all());
  check_kkt(p, q);
}

TEST_CASE("embedding and stacking") {
  const Grid g = Grid::uniform(0.0, 1.0, 3);
  const ConstraintSet a = monotone_constraint(g, 0, Direction::Increasing).embedded(2, 6);
  CHECK(a.cols() == 6);
  CHECK(Matrix(a.matrix)(0, 2) == -1.0);
  const ConstraintSet both = a.stacked(convex_constraint(g, 0).embedded(3, 6));
  CHECK(both.rows() == 3);
  CHECK_THROWS_AS(a.embedded(5, 6), InvalidArgument);
}
