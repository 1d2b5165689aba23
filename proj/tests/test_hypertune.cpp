#include "bayesgam/errors.hpp"
#include "bayesgam/hypertune.hpp"
#include "support.hpp"

#include <doctest.h>

#include <numbers>

using namespace bayesgam;

namespace {

GamModel scalar_model(double obs_var, double prior_var) {
  GamModel m;
  m.obs_var = obs_var;
  m.terms = {GamTerm{"a", LinearTerm{"x", {identifiability_prior(1, PerTermMean{0.0, prior_var})}}, std::nullopt}};
  return m;
}

DataTable scalar_data() {
  DataTable d;
  d.add("x", Vector::Ones(1));
  d.add("y", Vector::Constant(1, 2.0));
  return d;
}

HyperSpec prior_spec(double lo = 1e-3, double hi = 1e3) {
  return HyperSpec{{HyperEntry{"v", PriorVarTarget{"f", std::nullopt}, lo, hi, std::nullopt}}};
}

TuneProblem quartic_problem(Objective obj = Objective::Map, int order = 2) {
  return TuneProblem{testing::quartic_model(order, 1.0), testing::quartic_data(1), prior_spec(), obj, {}};
}

}  // namespace

TEST_CASE("map objective on the scalar conjugate system") {
  const double so = 0.7, sp = 2.0, y = 2.0;
  const double theta = (y / so) / (1.0 / so + 1.0 / sp);
  const double expect = 0.5 * (y - theta) * (y - theta) / so + 0.5 * theta * theta / sp + 0.5 * std::log(so) + 0.5 * std::log(sp);
  CHECK(map_objective(scalar_model(so, sp), scalar_data()) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("map objective diverges as the prior variance goes to zero") {
  const DataTable d = testing::quartic_data(1);
  const double a = map_objective(testing::quartic_model(2, 1e-4), d);
  const double b = map_objective(testing::quartic_model(2, 1e-8), d);
  const double c = map_objective(testing::quartic_model(2, 1e-12), d);
  CHECK(b < a);
  CHECK(c < b);
  CHECK(c < a - 50.0);
}

TEST_CASE("evidence") {
  SUBCASE("scalar closed form") {
    const double so = 0.7, sp = 2.0;
    const double expect = -(-0.5 * std::log(2 * std::numbers::pi * (so + sp)) - 0.5 * 4.0 / (so + sp));
    CHECK(evidence_objective(scalar_model(so, sp), scalar_data()) == doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("difference-prior-only model is improper") {
    const DataTable d = testing::quartic_data(1);
    try {
      evidence_objective(testing::quartic_model(2, 1.0), d);
      FAIL("expected ImproperPrior");
    } catch (const ImproperPrior& e) {
      CHECK(std::string(e.what()).find("weak") != std::string::npos);
    }
  }
  SUBCASE("Laplace identity on random full-rank systems") {
    std::mt19937_64 rng(21);
    for (int t = 0; t < 5; ++t) {
      LinearGaussianSystem s = testing::random_system(rng, 10, 10, 0.5);
      // square B
      const Matrix b = Matrix(s.prior_transform).topRows(10) + 0.3 * Matrix(testing::random_sparse(rng, 10, 10, 0.2));
      s.prior_transform = b.sparseView();
      s.prior_mean = s.prior_mean.head(10).eval();
      s.prior_var = s.prior_var.head(10).eval();
      const Posterior post = solve(s);
      const Matrix bvb = b.transpose() * s.prior_var.cwiseInverse().asDiagonal() * b;
      const double identity = neg_log_joint(s, post.mean) - 0.5 * s.prior_var.array().log().sum() -
                              0.5 * std::log(bvb.determinant()) + 0.5 * post.log_det_precision() +
                              0.5 * 10 * std::log(2 * std::numbers::pi);
      CHECK(evidence_objective(s) == doctest::Approx(identity).epsilon(1e-6));
    }
  }
  SUBCASE("Monte-Carlo marginal likelihood") {
    std::mt19937_64 rng(5);
    LinearGaussianSystem s = testing::random_system(rng, 10, 4, 0.6);
    s.prior_transform = SparseMatrix(s.prior_transform.topRows(4));
    s.prior_mean = s.prior_mean.head(4).eval();
    s.prior_var = Vector::Constant(4, 0.2);
    s.obs_var = Vector::Constant(10, 1.0);
    const double ev = evidence_objective(s);
    const Matrix binv = Matrix(s.prior_transform).inverse();
    const Matrix a = Matrix(s.design);
    std::normal_distribution<double> n(0, 1);
    const Index draws = 200000;
    double sum = 0, sumsq = 0;
    for (Index i = 0; i < draws; ++i) {
      const Vector z = Vector::NullaryExpr(4, [&] { return n(rng); });
      const Vector theta = binv * (s.prior_mean + s.prior_var.cwiseSqrt().cwiseProduct(z));
      const double l = std::exp(testing::dense_log_density(a * theta, Matrix(s.obs_var.asDiagonal()), s.obs) + ev);
      sum += l;
      sumsq += l * l;
    }
    const double mean = sum / draws;
    const double se = std::sqrt((sumsq / draws - mean * mean) / draws);
    CHECK(std::abs(mean - 1.0) <= 3.0 * se);  // likelihoods scaled by the exact evidence
  }
}

TEST_CASE("cross validation") {
  const TuneProblem p = quartic_problem();
  CHECK_THROWS_AS(cv_objective(p.base, p.data, {{}}), InvalidArgument);
  CHECK_THROWS_AS(cv_objective(p.base, p.data, {}), InvalidArgument);

  SUBCASE("held-out score equals the direct density") {
    const std::vector<Index> held{10, 11, 12};
    std::vector<Index> train;
    for (Index i = 0; i < p.data.rows(); ++i)
      if (i < 10 || i > 12) train.push_back(i);
    const FitResult f = fit(p.base, p.data.select(train));
    const DataTable test = p.data.select(held);
    Vector shift;
    const Predictive pr = posterior_predictive(f.posterior, model_design(p.base, test, &shift), Vector::Constant(3, 0.25));
    const double expect = -testing::dense_log_density(pr.mean, pr.covariance, test.column("y"));
    CHECK(cv_objective(p.base, p.data, {held}) == doctest::Approx(expect).epsilon(1e-10));
  }
  SUBCASE("folds helpers") {
    const auto folds = contiguous_folds(10, 3);
    CHECK(folds.size() == 3);
    CHECK(folds[0].size() + folds[1].size() + folds[2].size() == 10);
    CHECK(holdout_block(50, 20, 10)[0].front() == 20);
    CHECK_THROWS_AS(holdout_block(10, 0, 10), InvalidArgument);
  }
}

TEST_CASE("objectives are invariant under observation reordering") {
  TuneProblem p = quartic_problem();
  std::vector<Index> rev(static_cast<std::size_t>(p.data.rows()));
  for (Index i = 0; i < p.data.rows(); ++i) rev[static_cast<std::size_t>(i)] = p.data.rows() - 1 - i;
  const DataTable r = p.data.select(rev);
  CHECK(map_objective(p.base, r) == doctest::Approx(map_objective(p.base, p.data)).epsilon(1e-12));
  std::vector<Index> fold_rev;
  for (Index i = 0; i < 5; ++i) fold_rev.push_back(p.data.rows() - 1 - i);
  CHECK(cv_objective(p.base, r, {fold_rev}) ==
        doctest::Approx(cv_objective(p.base, p.data, {{0, 1, 2, 3, 4}})).epsilon(1e-12));
}

TEST_CASE("apply_hyper") {
  const Grid g = Grid::uniform(0, 1, 5);
  const Vector profile = (Vector(4) << 1.0, 2.0, 4.0, 2.0).finished();
  GamModel m;
  m.terms = {GamTerm{"f", LocalTerm{g, {difference_operator(g, 0, 1, profile).prior_block()}, {"x"}}, std::nullopt}};
  const HyperSpec spec = prior_spec();
  const GamModel out = apply_hyper(m, spec, {{"v", 8.0}});
  // relative profile kept, peak set to the value
  CHECK(std::get<LocalTerm>(out.terms[0].kind).priors[0].var.isApprox((Vector(4) << 0.5, 2.0, 8.0, 2.0).finished()));
  CHECK_THROWS_AS(apply_hyper(m, spec, {{"v", 1e4}}), InvalidArgument);
  CHECK_THROWS_AS(apply_hyper(m, spec, {}), InvalidArgument);
  HyperSpec bad{{HyperEntry{"v", PriorVarTarget{"nope", std::nullopt}, 1, 2, std::nullopt}}};
  CHECK_THROWS_AS(apply_hyper(m, bad, {{"v", 1.5}}), UnknownTerm);

  SUBCASE("kernel target rebuilds the basis") {
    GamModel gm;
    gm.terms = {GamTerm{"g", GpTerm::build(Kernel(SquaredExponential{1.0, 0.5}), Grid::uniform(0, 1, 30), 0.9999, 0.0, {"x"}), std::nullopt}};
    HyperSpec ks{{HyperEntry{"len", KernelTarget{"g", std::nullopt, KernelParam::Length}, 0.01, 10, std::nullopt}}};
    const GamModel shorter = apply_hyper(gm, ks, {{"len", 0.05}});
    CHECK(shorter.terms[0].parameter_count() > gm.terms[0].parameter_count());
  }
  SUBCASE("obs var target") {
    HyperSpec os{{HyperEntry{"ov", ObsVarTarget{}, 0.01, 10, std::nullopt}}};
    CHECK(std::get<double>(apply_hyper(m, os, {{"ov", 0.3}}).obs_var) == 0.3);
  }
}

TEST_CASE("grid scan") {
  TuneProblem p = quartic_problem();
  SUBCASE("single point") {
    const TuneResult r = grid_scan(p, {{"v", {2.0}}});
    CHECK(r.best.at("v") == 2.0);
    CHECK(r.trace.size() == 1);
  }
  SUBCASE("monotone objective picks an endpoint") {
    // the divergence below 1e-3 makes the objective increasing over this grid
    p.spec = prior_spec(1e-12, 1e-6);
    const TuneResult r = grid_scan(p, {{"v", {1e-12, 1e-10, 1e-8, 1e-6}}});
    CHECK(r.best.at("v") == 1e-12);
    CHECK(r.trace.size() == 4);
  }
  SUBCASE("ties go to the lexicographically smallest vector") {
    // the second entry overwrites the first, so the first never changes the objective
    p.spec.entries.insert(p.spec.entries.begin(), HyperEntry{"a", PriorVarTarget{"f", std::nullopt}, 1e-3, 1e3, std::nullopt});
    const TuneResult r = grid_scan(p, {{"a", {5.0, 0.5, 50.0}}, {"v", {0.1, 1.0, 10.0}}});
    CHECK(r.trace.size() == 9);
    CHECK(r.best.at("a") == 0.5);
  }
  SUBCASE("failed points are recorded; all failing rethrows") {
    p.objective = Objective::Evidence;
    CHECK_THROWS_AS(grid_scan(p, {{"v", {0.1, 1.0}}}), ImproperPrior);
  }
}

TEST_CASE("optimize") {
  TuneProblem p = quartic_problem();
  SUBCASE("agrees with a fine grid scan") {
    std::vector<double> fine;
    for (int i = 0; i <= 600; ++i) fine.push_back(std::pow(10.0, -3.0 + 0.01 * i));
    const TuneResult g = grid_scan(p, {{"v", fine}});
    const TuneResult o = optimize(p, 100, 1);
    CHECK(std::abs(std::log10(o.best.at("v")) - std::log10(g.best.at("v"))) <= 1e-2);
    CHECK(o.objective_value <= g.objective_value + 1e-9);
    CHECK(o.trace.size() <= 100);
  }
  SUBCASE("deterministic under a seed") {
    const TuneResult a = optimize(p, 100, 3);
    const TuneResult b = optimize(p, 100, 3);
    CHECK(a.best == b.best);
    CHECK(a.trace.size() == b.trace.size());
  }
  SUBCASE("never worse than the initial simplex") {
    const TuneResult o = optimize(p, 100, 4);
    CHECK(o.objective_value <= o.trace[0].objective);
    CHECK(o.objective_value <= o.trace[1].objective);
  }
  SUBCASE("start outside the bounds is rejected") {
    p.spec.entries[0].initial = 1e5;
    CHECK_THROWS_AS(optimize(p, 100, 0), InvalidArgument);
  }
  SUBCASE("budget") {
    CHECK_THROWS_AS(optimize(p, 1, 0), InvalidArgument);
    try {
      optimize(p, 4, 0);
      FAIL("expected BudgetExhausted");
    } catch (const BudgetExhausted& e) {
      CHECK(e.result().trace.size() == 4);
      CHECK(e.result().best.count("v") == 1);
    }
  }
}
