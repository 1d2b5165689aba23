#pragma once

#include "bayesgam/gpbasis.hpp"
#include "bayesgam/linsys.hpp"
#include "bayesgam/localbasis.hpp"

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace bayesgam {

/// Named numeric columns of equal length.
class DataTable {
 public:
  void add(const std::string& name, Vector values);
  bool has(const std::string& name) const { return columns_.count(name) > 0; }
  /// Throws MissingColumn.
  const Vector& column(const std::string& name) const;
  Index rows() const { return rows_; }
  const std::vector<std::string>& names() const { return order_; }
  /// Table restricted to `rows`, in the given order.
  DataTable select(const std::vector<Index>& rows) const;

 private:
  std::map<std::string, Vector> columns_;
  std::vector<std::string> order_;
  Index rows_ = 0;
};

/// theta * x.
struct LinearTerm {
  std::string input;
  std::vector<PriorBlock> priors;  // 1 column each
};

/// f = mean + basis * theta with a discretized GP prior; the kernel and grid are kept so
/// the basis can be rebuilt when a kernel hyperparameter changes.
struct GpTerm {
  Kernel kernel;
  double energy_threshold = 0.9999;
  double mean_value = 0.0;  // constant translation m(x)
  GpBasis basis;
  std::vector<std::string> inputs;

  /// Builds the basis on `grid` (kron_eigenbasis when the kernel is separable over several
  /// axes, eigenbasis otherwise).
  static GpTerm build(Kernel kernel, const Grid& grid, double energy_threshold, double mean_value,
                      std::vector<std::string> inputs);
  void rebuild();
};

/// Function values at the knots of `grid`, linearly interpolated.
struct LocalTerm {
  Grid grid;
  std::vector<PriorBlock> priors;  // grid.size() columns, or grid.size() + 1 for a shared mean
  std::vector<std::string> inputs;

  bool has_shared_mean() const;
};

struct GamTerm {
  std::string name;
  std::variant<LinearTerm, GpTerm, LocalTerm> kind;
  std::optional<std::string> multiplier;

  Index parameter_count() const;
  /// Input columns the term reads (excluding the multiplier).
  std::vector<std::string> inputs() const;
};

struct GamModel {
  std::string response = "y";
  std::vector<GamTerm> terms;
  std::variant<double, std::string> obs_var = 1.0;  // constant or column name

  Index parameter_count() const;
  const GamTerm& term(const std::string& name) const;
  GamTerm& term(const std::string& name);
  /// Unique names, valid prior widths, positive constant obs_var.
  void validate() const;
};

struct TermRange {
  std::string name;
  Index offset = 0;
  Index size = 0;
};

struct Assembly {
  LinearGaussianSystem system;  // obs already has the translations subtracted
  Vector translation;
  std::vector<TermRange> offsets;
};

/// Stacked design and block-diagonal prior. Throws MissingColumn, EmptyData, OutOfGrid.
Assembly assemble(const GamModel& model, const DataTable& data);

struct FitResult {
  GamModel model;
  Posterior posterior;
  std::vector<TermRange> term_offsets;
  Vector translation;

  const TermRange& range(const std::string& name) const;
};

/// Throws SingularPosterior (typically: an additive component without an identifiability prior).
FitResult fit(const GamModel& model, const DataTable& data, double jitter = 0.0);

/// Stacked design of the model on `data` with multipliers applied, plus translations.
SparseMatrix model_design(const GamModel& model, const DataTable& data, Vector* translation);

/// Per-observation noise variances of `model` on `data`.
Vector observation_variance(const GamModel& model, const DataTable& data);

/// Posterior predictive mean and variance; variance includes obs_var when include_noise.
PredictiveMarginals predict(const FitResult& fit, const DataTable& data, bool include_noise);

struct TermValues {
  Vector mean;
  Vector std;
};

/// One term evaluated at query points (one point per row, one column per term input),
/// without its multiplier. Throws UnknownTerm.
TermValues term_values(const FitResult& fit, const std::string& name, const Points& query);

}  // namespace bayesgam
