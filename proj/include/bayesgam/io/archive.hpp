#pragma once

#include "bayesgam/hypertune.hpp"
#include "bayesgam/io/spec.hpp"
#include "bayesgam/model.hpp"

#include <json.hpp>

#include <map>
#include <string>
#include <utility>

namespace bayesgam::io {

inline constexpr int kArchiveVersion = 1;

/// A fitted model on disk: the spec it came from, tuned hyperparameters, the posterior
/// (mean plus the sparse precision factor) and the GP bases as built at fit time.
struct ModelArchive {
  nlohmann::json spec;
  HyperValues hyper;
  FitResult fit;
  bool constrained = false;  // mean is the constrained MAP; the factor is the unconstrained one
  std::map<std::string, std::pair<double, double>> input_ranges;
  Index observations = 0;
  double neg_log_posterior = 0.0;
};

nlohmann::json archive_to_json(const ModelArchive& archive);
/// Throws SchemaError.
ModelArchive archive_from_json(const nlohmann::json& doc);

void save_archive(const std::string& path, const ModelArchive& archive);
ModelArchive load_archive(const std::string& path);

}  // namespace bayesgam::io
