#pragma once

#include "bayesgam/constrain.hpp"
#include "bayesgam/hypertune.hpp"
#include "bayesgam/model.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace bayesgam::io {

struct TermConstraint {
  enum class Kind { Monotone, Convex };
  std::string term;
  Kind kind = Kind::Monotone;
  Index axis = 0;
  Direction direction = Direction::Increasing;
};

/// Hold-out block or k contiguous folds; the default is a single block of 10 rows taken
/// from the middle of the data.
struct CvConfig {
  std::optional<std::pair<Index, Index>> holdout;  // start, size
  std::optional<Index> folds;

  std::vector<std::vector<Index>> make(Index rows) const;
};

struct ModelSpec {
  nlohmann::json source;
  GamModel model;
  std::vector<TermConstraint> constraints;
  HyperSpec hyper;
  std::vector<std::pair<std::string, std::vector<double>>> grids;  // scan values per hyperparameter
  CvConfig cv;

  bool constrained() const { return !constraints.empty(); }
};

/// Throws SchemaError naming the offending term or key.
ModelSpec parse_model_spec(const nlohmann::json& doc);
ModelSpec load_model_spec(const std::string& path);

/// Constraint rows of `spec` embedded in the parameter vector of `model`.
ConstraintSet build_constraints(const std::vector<TermConstraint>& constraints, const GamModel& model);

/// n values log-spaced over [lo, hi].
std::vector<double> log_space(double lo, double hi, Index n);

}  // namespace bayesgam::io
