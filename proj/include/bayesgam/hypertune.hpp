#pragma once

#include "bayesgam/errors.hpp"
#include "bayesgam/model.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace bayesgam {

/// Variance of a term's prior blocks (all of them, or the one at `block`). The block's
/// relative per-row profile is kept: var_i = value * var_i / max(var).
struct PriorVarTarget {
  std::string term;
  std::optional<std::size_t> block;
};

/// Constant observation noise variance.
struct ObsVarTarget {};

enum class KernelParam { Sigma2, Length, Period };

/// A scalar parameter of a Gp term's kernel; `factor` selects a Separable factor.
struct KernelTarget {
  std::string term;
  std::optional<std::size_t> factor;
  KernelParam param = KernelParam::Length;
};

using HyperTarget = std::variant<PriorVarTarget, ObsVarTarget, KernelTarget>;

struct HyperEntry {
  std::string name;
  HyperTarget target;
  double lower = 1e-3;
  double upper = 1e3;
  std::optional<double> initial;  // defaults to the geometric midpoint of the bounds

  double start() const;
};

struct HyperSpec {
  std::vector<HyperEntry> entries;

  /// Unique names, 0 < lower <= upper < inf.
  void validate() const;
  const HyperEntry& entry(const std::string& name) const;
  std::vector<std::string> names() const;
};

using HyperValues = std::map<std::string, double>;

/// Copy of `base` with the hyperparameters set. Every entry of spec needs a value inside
/// its bounds. Throws InvalidArgument and UnknownTerm.
GamModel apply_hyper(const GamModel& base, const HyperSpec& spec, const HyperValues& values);

/// 1/2 |y - A theta|^2_W + 1/2 |B theta - mu|^2_V + 1/2 sum log obs_var + 1/2 sum log prior_var.
double neg_log_joint(const LinearGaussianSystem& system, const Vector& theta);

/// neg_log_joint at the inner MAP; no 2*pi constants.
double map_objective(const GamModel& model, const DataTable& data);
/// Negative log marginal likelihood under the prior predictive. Throws ImproperPrior.
double evidence_objective(const GamModel& model, const DataTable& data);
double evidence_objective(const LinearGaussianSystem& system);
/// Sum over folds of the negative held-out log predictive density.
double cv_objective(const GamModel& model, const DataTable& data, const std::vector<std::vector<Index>>& folds);

enum class Objective { Map, Evidence, Cv };

/// k contiguous folds covering [0, n).
std::vector<std::vector<Index>> contiguous_folds(Index n, Index k);
/// A single fold holding out rows [start, start + size).
std::vector<std::vector<Index>> holdout_block(Index n, Index start, Index size);

struct TuneProblem {
  GamModel base;
  DataTable data;
  HyperSpec spec;
  Objective objective = Objective::Map;
  std::vector<std::vector<Index>> folds;  // Cv only

  double evaluate(const HyperValues& values) const;
};

struct TracePoint {
  std::vector<double> values;  // in TuneResult::names order
  double objective = 0.0;
  bool ok = true;
  std::string message;
};

struct TuneResult {
  std::vector<std::string> names;
  HyperValues best;
  double objective_value = 0.0;
  std::vector<TracePoint> trace;
};

class BudgetExhausted : public Error {
 public:
  explicit BudgetExhausted(TuneResult best_so_far);
  const TuneResult& result() const noexcept { return result_; }

 private:
  TuneResult result_;
};

/// Exhaustive Cartesian scan; names not in `grids` stay at their start value. Ties go to
/// the lexicographically smallest value vector. If every point fails the first error is
/// rethrown.
TuneResult grid_scan(const TuneProblem& problem, const std::vector<std::pair<std::string, std::vector<double>>>& grids);

/// Nelder-Mead in log space, clamped to the bounds. `budget` counts objective
/// evaluations. Throws BudgetExhausted carrying the best point found.
TuneResult optimize(const TuneProblem& problem, Index budget, std::uint64_t seed);

}  // namespace bayesgam
