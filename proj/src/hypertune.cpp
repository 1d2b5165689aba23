#include "bayesgam/hypertune.hpp"

#include "bayesgam/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <set>

namespace bayesgam {

namespace {

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

void rescale(PriorBlock& block, double value) {
  const double peak = block.var.maxCoeff();
  block.var *= value / peak;
}

double& kernel_slot(Kernel& kernel, KernelParam param) {
  auto pick = [param](auto& k) -> double& {
    if (param == KernelParam::Sigma2) return k.sigma2;
    return k.length;
  };
  auto& v = kernel.variant();
  if (auto* se = std::get_if<SquaredExponential>(&v)) {
    if (param == KernelParam::Period) throw InvalidArgument("squared exponential kernel has no period");
    return pick(*se);
  }
  if (auto* per = std::get_if<Periodic>(&v)) {
    if (param == KernelParam::Period) return per->period;
    return pick(*per);
  }
  throw InvalidArgument("kernel hyperparameter target must be a squared exponential or periodic kernel");
}

void set_kernel_param(Kernel& kernel, const KernelTarget& target, double value) {
  auto& v = kernel.variant();
  if (auto* sep = std::get_if<Separable>(&v)) {
    if (!target.factor || *target.factor >= sep->factors.size())
      throw InvalidArgument("kernel target on a separable kernel needs a valid factor index");
    set_kernel_param(sep->factors[*target.factor], KernelTarget{target.term, std::nullopt, target.param}, value);
    return;
  }
  if (auto* sym = std::get_if<Symmetric>(&v)) {
    Kernel inner = *sym->inner;
    set_kernel_param(inner, target, value);
    sym->inner = std::make_shared<const Kernel>(std::move(inner));
    return;
  }
  kernel_slot(kernel, target.param) = value;
}

void check_folds(Index n, const std::vector<std::vector<Index>>& folds) {
  if (folds.empty()) throw InvalidArgument("cross validation needs at least one fold");
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto& fold = folds[f];
    if (fold.empty()) throw InvalidArgument("fold " + std::to_string(f) + " holds out nothing");
    std::set<Index> unique(fold.begin(), fold.end());
    if (unique.size() != fold.size()) throw InvalidArgument("fold " + std::to_string(f) + " repeats a row");
    if (*unique.begin() < 0 || *unique.rbegin() >= n) throw InvalidArgument("fold " + std::to_string(f) + " indexes past the data");
    if (static_cast<Index>(fold.size()) >= n) throw InvalidArgument("fold " + std::to_string(f) + " leaves no training data");
  }
}

bool lexicographic_less(const std::vector<double>& a, const std::vector<double>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

double HyperEntry::start() const { return initial ? *initial : std::sqrt(lower * upper); }

void HyperSpec::validate() const {
  std::set<std::string> seen;
  for (const auto& e : entries) {
    if (!seen.insert(e.name).second) throw InvalidArgument("duplicate hyperparameter '" + e.name + "'");
    if (!(e.lower > 0.0 && e.lower <= e.upper && std::isfinite(e.upper)))
      throw InvalidArgument("hyperparameter '" + e.name + "' needs finite bounds 0 < lower <= upper");
    if (e.initial && !(*e.initial >= e.lower && *e.initial <= e.upper))
      throw InvalidArgument("hyperparameter '" + e.name + "' starts outside its bounds");
  }
}

const HyperEntry& HyperSpec::entry(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return e;
  throw InvalidArgument("unknown hyperparameter '" + name + "'");
}

std::vector<std::string> HyperSpec::names() const {
  std::vector<std::string> out;
  for (const auto& e : entries) out.push_back(e.name);
  return out;
}

GamModel apply_hyper(const GamModel& base, const HyperSpec& spec, const HyperValues& values) {
  spec.validate();
  GamModel model = base;
  for (const auto& e : spec.entries) {
    auto it = values.find(e.name);
    if (it == values.end()) throw InvalidArgument("no value given for hyperparameter '" + e.name + "'");
    const double v = it->second;
    if (!(v >= e.lower && v <= e.upper))
      throw InvalidArgument("hyperparameter '" + e.name + "' = " + std::to_string(v) + " is outside its bounds");
    std::visit(overloaded{
                   [&](const PriorVarTarget& t) {
                     GamTerm& term = model.term(t.term);
                     std::vector<PriorBlock>* priors = nullptr;
                     if (auto* lin = std::get_if<LinearTerm>(&term.kind)) priors = &lin->priors;
                     if (auto* loc = std::get_if<LocalTerm>(&term.kind)) priors = &loc->priors;
                     if (!priors) throw InvalidArgument("term '" + t.term + "' has no prior blocks; target its kernel instead");
                     if (t.block) {
                       if (*t.block >= priors->size()) throw InvalidArgument("prior block index out of range for term '" + t.term + "'");
                       rescale((*priors)[*t.block], v);
                     } else {
                       for (auto& b : *priors) rescale(b, v);
                     }
                   },
                   [&](const ObsVarTarget&) {
                     if (!std::holds_alternative<double>(base.obs_var))
                       throw InvalidArgument("obs_var is a data column and cannot be tuned");
                     model.obs_var = v;
                   },
                   [&](const KernelTarget& t) {
                     GamTerm& term = model.term(t.term);
                     auto* gp = std::get_if<GpTerm>(&term.kind);
                     if (!gp) throw InvalidArgument("term '" + t.term + "' is not a GP term");
                     set_kernel_param(gp->kernel, t, v);
                     gp->kernel = std::visit([](auto k) { return Kernel(std::move(k)); }, gp->kernel.variant());  // revalidate
                   },
               },
               e.target);
  }
  // Rebuild bases whose kernels changed.
  for (const auto& e : spec.entries)
    if (const auto* t = std::get_if<KernelTarget>(&e.target)) std::get<GpTerm>(model.term(t->term).kind).rebuild();
  return model;
}

double neg_log_joint(const LinearGaussianSystem& s, const Vector& theta) {
  const Vector r = s.obs - s.design * theta;
  const Vector e = s.prior_transform * theta - s.prior_mean;
  return 0.5 * (r.array().square() / s.obs_var.array()).sum() +
         0.5 * (e.array().square() / s.prior_var.array()).sum() + 0.5 * s.obs_var.array().log().sum() +
         0.5 * s.prior_var.array().log().sum();
}

double map_objective(const GamModel& model, const DataTable& data) {
  const Assembly a = assemble(model, data);
  return neg_log_joint(a.system, solve(a.system).mean);
}

double evidence_objective(const GamModel& model, const DataTable& data) {
  return evidence_objective(assemble(model, data).system);
}

double evidence_objective(const LinearGaussianSystem& s) {
  s.validate();
  const Vector w = s.prior_var.cwiseInverse();
  const SparseMatrix bt = s.prior_transform.transpose();
  const SparseMatrix prior_precision = bt * w.asDiagonal() * s.prior_transform;
  CholeskyFactor factor;
  try {
    factor = CholeskyFactor::factorize(prior_precision);
  } catch (const SingularPosterior& e) {
    throw ImproperPrior(
        "ImproperPrior: the prior system B^T V B is rank deficient (parameter " + std::to_string(e.pivot()) +
        "); add weak identity priors (e.g. variance 1e6) to make the evidence defined, or use the cv objective");
  }
  const Vector prior_mean = factor.solve(bt * w.cwiseProduct(s.prior_mean));
  const Vector mean = s.design * prior_mean;
  const SparseMatrix at = s.design.transpose();
  const Matrix white = factor.whiten(at);
  Matrix cov = white.transpose() * white;
  cov.diagonal() += s.obs_var;
  return -log_density(mean, cov, s.obs);
}

double cv_objective(const GamModel& model, const DataTable& data, const std::vector<std::vector<Index>>& folds) {
  check_folds(data.rows(), folds);
  double total = 0.0;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto& held = folds[f];
    std::vector<bool> out(static_cast<std::size_t>(data.rows()), false);
    for (Index i : held) out[static_cast<std::size_t>(i)] = true;
    std::vector<Index> train;
    for (Index i = 0; i < data.rows(); ++i)
      if (!out[static_cast<std::size_t>(i)]) train.push_back(i);
    FitResult fitted = [&] {
      try {
        return fit(model, data.select(train));
      } catch (const SingularPosterior& e) {
        throw SingularPosterior(e.pivot(), "fold " + std::to_string(f) + ": " + e.what());
      }
    }();
    const DataTable test = data.select(held);
    Vector shift;
    const SparseMatrix design = model_design(model, test, &shift);
    const Predictive pred = posterior_predictive(fitted.posterior, design, observation_variance(model, test));
    total -= log_density(pred.mean + shift, pred.covariance, test.column(model.response));
  }
  return total;
}

std::vector<std::vector<Index>> contiguous_folds(Index n, Index k) {
  if (k < 2 || k > n) throw InvalidArgument("contiguous_folds needs 2 <= k <= n");
  std::vector<std::vector<Index>> folds(static_cast<std::size_t>(k));
  for (Index f = 0; f < k; ++f) {
    const Index lo = f * n / k;
    const Index hi = (f + 1) * n / k;
    for (Index i = lo; i < hi; ++i) folds[static_cast<std::size_t>(f)].push_back(i);
  }
  return folds;
}

std::vector<std::vector<Index>> holdout_block(Index n, Index start, Index size) {
  if (size < 1 || start < 0 || start + size > n || size >= n)
    throw InvalidArgument("hold-out block must be nonempty, inside the data, and leave training rows");
  std::vector<Index> fold(static_cast<std::size_t>(size));
  std::iota(fold.begin(), fold.end(), start);
  return {fold};
}

double TuneProblem::evaluate(const HyperValues& values) const {
  const GamModel model = apply_hyper(base, spec, values);
  switch (objective) {
    case Objective::Map:
      return map_objective(model, data);
    case Objective::Evidence:
      return evidence_objective(model, data);
    case Objective::Cv:
      return cv_objective(model, data, folds);
  }
  throw Error("unknown objective");
}

BudgetExhausted::BudgetExhausted(TuneResult best_so_far)
    : Error("BudgetExhausted: evaluation budget used up before the simplex converged"),
      result_(std::move(best_so_far)) {}

TuneResult grid_scan(const TuneProblem& problem,
                     const std::vector<std::pair<std::string, std::vector<double>>>& grids) {
  problem.spec.validate();
  TuneResult result;
  result.names = problem.spec.names();
  const std::size_t dims = result.names.size();
  std::vector<std::vector<double>> axes(dims);
  for (std::size_t d = 0; d < dims; ++d) axes[d] = {problem.spec.entries[d].start()};
  for (const auto& [name, values] : grids) {
    auto it = std::find(result.names.begin(), result.names.end(), name);
    if (it == result.names.end()) throw InvalidArgument("grid given for unknown hyperparameter '" + name + "'");
    if (values.empty()) throw InvalidArgument("grid for '" + name + "' is empty");
    axes[static_cast<std::size_t>(it - result.names.begin())] = values;
  }
  Index total = 1;
  for (const auto& a : axes) total *= static_cast<Index>(a.size());

  struct Outcome {
    TracePoint point;
    std::exception_ptr error;
  };
  auto outcomes = kernels::map_indices<Outcome>(total, [&](Index flat) {
    Outcome o;
    o.point.values.resize(dims);
    Index rest = flat;
    for (std::size_t d = dims; d-- > 0;) {
      const Index len = static_cast<Index>(axes[d].size());
      o.point.values[d] = axes[d][static_cast<std::size_t>(rest % len)];
      rest /= len;
    }
    HyperValues values;
    for (std::size_t d = 0; d < dims; ++d) values[result.names[d]] = o.point.values[d];
    try {
      o.point.objective = problem.evaluate(values);
    } catch (const std::exception& e) {
      o.point.ok = false;
      o.point.objective = std::numeric_limits<double>::quiet_NaN();
      o.point.message = e.what();
      o.error = std::current_exception();
    }
    return o;
  });

  const TracePoint* best = nullptr;
  for (const auto& o : outcomes) {
    result.trace.push_back(o.point);
    const TracePoint& p = o.point;
    if (!p.ok) continue;
    if (!best || p.objective < best->objective ||
        (p.objective == best->objective && lexicographic_less(p.values, best->values)))
      best = &p;
  }
  if (!best) std::rethrow_exception(outcomes.front().error);
  for (std::size_t d = 0; d < dims; ++d) result.best[result.names[d]] = best->values[d];
  result.objective_value = best->objective;
  return result;
}

TuneResult optimize(const TuneProblem& problem, Index budget, std::uint64_t seed) {
  problem.spec.validate();
  const auto& entries = problem.spec.entries;
  const Index n = static_cast<Index>(entries.size());
  if (n == 0) throw InvalidArgument("optimize needs at least one hyperparameter");
  if (budget < n + 1) throw InvalidArgument("budget must be at least the number of hyperparameters + 1");

  Vector lo(n), hi(n), x0(n);
  for (Index i = 0; i < n; ++i) {
    const auto& e = entries[static_cast<std::size_t>(i)];
    lo(i) = std::log(e.lower);
    hi(i) = std::log(e.upper);
    x0(i) = std::log(e.start());
  }

  TuneResult result;
  result.names = problem.spec.names();
  Index used = 0;
  auto eval = [&](const Vector& x) {
    TracePoint p;
    HyperValues values;
    for (Index i = 0; i < n; ++i) {
      const auto& e = entries[static_cast<std::size_t>(i)];
      // exp(log(v)) may step a hair outside the bounds.
      const double v = std::clamp(std::exp(x(i)), e.lower, e.upper);
      p.values.push_back(v);
      values[e.name] = v;
    }
    ++used;
    try {
      p.objective = problem.evaluate(values);
    } catch (const std::exception& ex) {
      p.ok = false;
      p.objective = kInf;
      p.message = ex.what();
    }
    result.trace.push_back(p);
    if (p.ok && (result.best.empty() || p.objective < result.objective_value)) {
      result.best = values;
      result.objective_value = p.objective;
    }
    return p.objective;
  };
  auto clamp = [&](Vector x) { return Vector(x.cwiseMax(lo).cwiseMin(hi)); };
  auto exhausted = [&]() {
    if (result.best.empty()) throw Error("optimize: every evaluation failed: " + result.trace.back().message);
    throw BudgetExhausted(result);
  };

  // Initial simplex: one step per axis, the step sign drawn from the seed.
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  std::vector<Vector> simplex{x0};
  for (Index i = 0; i < n; ++i) {
    const double span = hi(i) - lo(i);
    double step = std::min(1.0, 0.25 * span);
    if (coin(rng)) step = -step;
    if (x0(i) + step > hi(i) || x0(i) + step < lo(i)) step = -step;
    Vector v = x0;
    v(i) = std::clamp(x0(i) + step, lo(i), hi(i));
    simplex.push_back(v);
  }
  std::vector<double> f;
  for (const auto& v : simplex) {
    if (used >= budget) exhausted();
    f.push_back(eval(v));
  }

  const double ftol = 1e-10;
  const double xtol = 1e-5;
  while (true) {
    std::vector<std::size_t> order(simplex.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });
    std::vector<Vector> s2;
    std::vector<double> f2;
    for (auto i : order) {
      s2.push_back(simplex[i]);
      f2.push_back(f[i]);
    }
    simplex = std::move(s2);
    f = std::move(f2);

    double diameter = 0.0;
    for (std::size_t i = 1; i < simplex.size(); ++i)
      diameter = std::max(diameter, (simplex[i] - simplex[0]).lpNorm<Eigen::Infinity>());
    const double spread = std::abs(f.back() - f.front());
    if (std::isfinite(f.back()) && spread <= ftol * (1.0 + std::abs(f.front())) && diameter <= xtol) break;
    if (diameter <= 1e-12) break;

    Vector centroid = Vector::Zero(n);
    for (std::size_t i = 0; i + 1 < simplex.size(); ++i) centroid += simplex[i];
    centroid /= static_cast<double>(n);
    const Vector& worst = simplex.back();

    if (used >= budget) exhausted();
    const Vector xr = clamp(centroid + (centroid - worst));
    const double fr = eval(xr);
    if (fr < f.front()) {
      if (used >= budget) exhausted();
      const Vector xe = clamp(centroid + 2.0 * (centroid - worst));
      const double fe = eval(xe);
      if (fe < fr) {
        simplex.back() = xe;
        f.back() = fe;
      } else {
        simplex.back() = xr;
        f.back() = fr;
      }
      continue;
    }
    if (fr < f[f.size() - 2]) {
      simplex.back() = xr;
      f.back() = fr;
      continue;
    }
    if (used >= budget) exhausted();
    const bool outside = fr < f.back();
    const Vector xc = outside ? Vector(centroid + 0.5 * (xr - centroid)) : Vector(centroid + 0.5 * (worst - centroid));
    const double fc = eval(xc);
    if (fc < (outside ? fr : f.back())) {
      simplex.back() = xc;
      f.back() = fc;
      continue;
    }
    // Shrink toward the best vertex.
    for (std::size_t i = 1; i < simplex.size(); ++i) {
      if (used >= budget) exhausted();
      simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0]);
      f[i] = eval(simplex[i]);
    }
  }
  if (result.best.empty()) throw Error("optimize: every evaluation failed: " + result.trace.back().message);
  return result;
}

}  // namespace bayesgam
