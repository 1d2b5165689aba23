#include "bayesgam/io/spec.hpp"

#include "bayesgam/errors.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace bayesgam::io {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw SchemaError("SchemaError: " + where + ": " + what);
}

void allow_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) fail(where, "expected an object");
  std::set<std::string> ok(keys.begin(), keys.end());
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!ok.count(it.key())) fail(where, "unknown key '" + it.key() + "'");
}

const json& need(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) fail(where, std::string("missing key '") + key + "'");
  return obj.at(key);
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) fail(where, "expected a number");
  return v.get<double>();
}

double number_or(const json& obj, const char* key, double fallback, const std::string& where) {
  return obj.contains(key) ? number(obj.at(key), where + "." + key) : fallback;
}

Index integer(const json& v, const std::string& where) {
  if (!v.is_number_integer()) fail(where, "expected an integer");
  return v.get<Index>();
}

std::string text(const json& v, const std::string& where) {
  if (!v.is_string()) fail(where, "expected a string");
  return v.get<std::string>();
}

std::vector<double> number_list(const json& v, const std::string& where) {
  if (!v.is_array()) fail(where, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

// Knot array, or {from, to, count}.
std::vector<double> parse_axis(const json& v, const std::string& where) {
  if (v.is_array()) return number_list(v, where);
  allow_keys(v, where, {"from", "to", "count"});
  const double lo = number(need(v, "from", where), where + ".from");
  const double hi = number(need(v, "to", where), where + ".to");
  const Index n = integer(need(v, "count", where), where + ".count");
  if (n < 2) fail(where, "count must be at least 2");
  std::vector<double> out(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] = (i == n - 1) ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

Grid parse_grid(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) fail(where, "expected a list of axes");
  std::vector<std::vector<double>> axes;
  for (std::size_t d = 0; d < v.size(); ++d) axes.push_back(parse_axis(v[d], where + "[" + std::to_string(d) + "]"));
  try {
    return Grid(axes);
  } catch (const InvalidArgument& e) {
    fail(where, e.what());
  }
}

// Scalar broadcast or {profile: [...]}.
Vector parse_std(const json& v, const std::string& where) {
  if (v.is_number()) return Vector::Constant(1, v.get<double>());
  allow_keys(v, where, {"profile"});
  const auto values = number_list(need(v, "profile", where), where + ".profile");
  return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

Kernel parse_kernel(const json& v, const std::string& where) {
  const std::string type = text(need(v, "type", where), where + ".type");
  Kernel k = [&]() -> Kernel {
    if (type == "sqexp") {
      allow_keys(v, where, {"type", "sigma2", "length", "symmetric"});
      return Kernel(SquaredExponential{number_or(v, "sigma2", 1.0, where), number_or(v, "length", 1.0, where)});
    }
    if (type == "periodic") {
      allow_keys(v, where, {"type", "sigma2", "length", "period", "symmetric"});
      return Kernel(Periodic{number_or(v, "sigma2", 1.0, where), number_or(v, "length", 1.0, where),
                             number(need(v, "period", where), where + ".period")});
    }
    if (type == "separable") {
      allow_keys(v, where, {"type", "factors"});
      const json& fs = need(v, "factors", where);
      if (!fs.is_array()) fail(where + ".factors", "expected an array");
      std::vector<Kernel> factors;
      for (std::size_t i = 0; i < fs.size(); ++i)
        factors.push_back(parse_kernel(fs[i], where + ".factors[" + std::to_string(i) + "]"));
      return Kernel::separable(std::move(factors));
    }
    fail(where + ".type", "unknown kernel type '" + type + "'");
  }();
  if (v.contains("symmetric") && v.at("symmetric").is_boolean() && v.at("symmetric").get<bool>())
    k = Kernel::symmetric(std::move(k));
  return k;
}

Index axis_of(const json& p, const Grid& grid, const std::string& where) {
  const Index axis = p.contains("axis") ? integer(p.at("axis"), where + ".axis") : 0;
  if (axis < 0 || axis >= grid.dims()) fail(where + ".axis", "out of range for a " + std::to_string(grid.dims()) + "-D grid");
  return axis;
}

PriorBlock parse_local_prior(const json& p, const Grid& grid, const std::string& where) {
  const std::string type = text(need(p, "type", where), where + ".type");
  if (type == "diff") {
    allow_keys(p, where, {"type", "order", "axis", "std"});
    const int order = static_cast<int>(integer(need(p, "order", where), where + ".order"));
    const Index axis = axis_of(p, grid, where);
    return difference_operator(grid, axis, order, parse_std(need(p, "std", where), where + ".std")).prior_block();
  }
  if (type == "periodic") {
    if (p.contains("period")) fail(where, "periodic priors tie the first and last knots; a custom 'period' is not supported");
    allow_keys(p, where, {"type", "axis", "match_derivatives", "std"});
    const Index axis = axis_of(p, grid, where);
    const int match = static_cast<int>(p.contains("match_derivatives") ? integer(p.at("match_derivatives"), where) : 1);
    const PriorBlock line = periodic_rows(grid.axis(axis), match, parse_std(need(p, "std", where), where + ".std"));
    return lift_to_grid(line, grid, axis);
  }
  if (type == "symmetric") {
    allow_keys(p, where, {"type", "axis", "center", "std"});
    const Index axis = axis_of(p, grid, where);
    const double center = number(need(p, "center", where), where + ".center");
    const PriorBlock line = symmetry_rows(grid.axis(axis), center, parse_std(need(p, "std", where), where + ".std"));
    return lift_to_grid(line, grid, axis);
  }
  if (type == "identifiability") {
    allow_keys(p, where, {"type", "mode", "mean", "var"});
    const std::string mode = p.contains("mode") ? text(p.at("mode"), where + ".mode") : "mean";
    if (mode == "mean")
      return identifiability_prior(grid.size(), PerTermMean{number_or(p, "mean", 0.0, where), number_or(p, "var", 1.0, where)});
    if (mode == "shared") {
      if (p.contains("mean")) fail(where, "a shared-mean prior has no 'mean'");
      return identifiability_prior(grid.size(), SharedMean{number_or(p, "var", 1.0, where)});
    }
    fail(where + ".mode", "expected 'mean' or 'shared'");
  }
  fail(where + ".type", "unknown prior type '" + type + "'");
}

std::vector<std::string> parse_inputs(const json& t, const std::string& where) {
  const json& v = need(t, "inputs", where);
  if (v.is_string()) return {v.get<std::string>()};
  if (!v.is_array() || v.empty()) fail(where + ".inputs", "expected a column name or a list of names");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(text(v[i], where + ".inputs"));
  return out;
}

void parse_constraints(const json& c, const std::string& term, const Grid& grid, const std::string& where,
                       std::vector<TermConstraint>& out) {
  allow_keys(c, where, {"monotone", "convex"});
  if (c.contains("monotone")) {
    const json& m = c.at("monotone");
    allow_keys(m, where + ".monotone", {"axis", "direction"});
    TermConstraint tc{term, TermConstraint::Kind::Monotone, axis_of(m, grid, where + ".monotone"), Direction::Increasing};
    const std::string dir = m.contains("direction") ? text(m.at("direction"), where + ".monotone.direction") : "increasing";
    if (dir == "decreasing") tc.direction = Direction::Decreasing;
    else if (dir != "increasing") fail(where + ".monotone.direction", "expected 'increasing' or 'decreasing'");
    out.push_back(tc);
  }
  if (c.contains("convex")) {
    const json& m = c.at("convex");
    allow_keys(m, where + ".convex", {"axis"});
    out.push_back({term, TermConstraint::Kind::Convex, axis_of(m, grid, where + ".convex"), Direction::Increasing});
  }
}

GamTerm parse_term(const json& t, std::size_t index, std::vector<TermConstraint>& constraints) {
  std::string where = "terms[" + std::to_string(index) + "]";
  const std::string name = text(need(t, "name", where), where + ".name");
  where = "term '" + name + "'";
  const std::string kind = text(need(t, "kind", where), where + ".kind");
  GamTerm term{name, LinearTerm{}, std::nullopt};
  if (t.contains("multiplier") && !t.at("multiplier").is_null()) term.multiplier = text(t.at("multiplier"), where + ".multiplier");
  const auto inputs = parse_inputs(t, where);

  if (kind == "linear") {
    allow_keys(t, where, {"name", "kind", "inputs", "multiplier", "priors"});
    if (inputs.size() != 1) fail(where, "a linear term takes exactly one input");
    LinearTerm lin{inputs[0], {}};
    if (t.contains("priors")) {
      for (const auto& p : t.at("priors")) {
        allow_keys(p, where + ".priors", {"type", "mean", "var"});
        if (text(need(p, "type", where), where) != "identifiability") fail(where, "linear terms accept identifiability priors only");
        lin.priors.push_back(identifiability_prior(1, PerTermMean{number_or(p, "mean", 0.0, where), number_or(p, "var", 1.0, where)}));
      }
    }
    term.kind = std::move(lin);
  } else if (kind == "gp") {
    allow_keys(t, where, {"name", "kind", "inputs", "multiplier", "grid", "kernel", "energy_threshold", "mean"});
    const Grid grid = parse_grid(need(t, "grid", where), where + ".grid");
    if (static_cast<Index>(inputs.size()) != grid.dims()) fail(where, "number of inputs must match the grid dimensions");
    const Kernel kernel = parse_kernel(need(t, "kernel", where), where + ".kernel");
    term.kind = GpTerm::build(kernel, grid, number_or(t, "energy_threshold", 0.9999, where), number_or(t, "mean", 0.0, where), inputs);
  } else if (kind == "local") {
    allow_keys(t, where, {"name", "kind", "inputs", "multiplier", "grid", "priors", "constraints"});
    const Grid grid = parse_grid(need(t, "grid", where), where + ".grid");
    if (static_cast<Index>(inputs.size()) != grid.dims()) fail(where, "number of inputs must match the grid dimensions");
    LocalTerm local{grid, {}, inputs};
    if (t.contains("priors")) {
      const json& ps = t.at("priors");
      if (!ps.is_array()) fail(where + ".priors", "expected an array");
      for (std::size_t i = 0; i < ps.size(); ++i) {
        const std::string pw = where + ".priors[" + std::to_string(i) + "]";
        try {
          local.priors.push_back(parse_local_prior(ps[i], grid, pw));
        } catch (const SchemaError&) {
          throw;
        } catch (const Error& e) {
          fail(pw, e.what());
        }
      }
    }
    int shared = 0;
    for (const auto& b : local.priors) shared += b.cols() == grid.size() + 1;
    if (shared > 1) fail(where, "at most one shared-mean prior per term");
    if (t.contains("constraints")) parse_constraints(t.at("constraints"), name, grid, where + ".constraints", constraints);
    term.kind = std::move(local);
  } else {
    fail(where + ".kind", "expected linear, gp or local");
  }
  return term;
}

KernelParam parse_param(const std::string& s, const std::string& where) {
  if (s == "sigma2") return KernelParam::Sigma2;
  if (s == "length") return KernelParam::Length;
  if (s == "period") return KernelParam::Period;
  fail(where, "kernel parameter must be sigma2, length or period");
}

HyperEntry parse_hyper(const json& h, std::size_t index, std::vector<double>* grid_values) {
  std::string where = "hyper[" + std::to_string(index) + "]";
  allow_keys(h, where, {"name", "target", "bounds", "initial", "grid"});
  HyperEntry e;
  e.name = text(need(h, "name", where), where + ".name");
  where = "hyperparameter '" + e.name + "'";
  const json& t = need(h, "target", where);
  if (t.is_string() && t.get<std::string>() == "obs_var") {
    e.target = ObsVarTarget{};
  } else if (t.is_object() && t.contains("prior_var")) {
    allow_keys(t, where + ".target", {"prior_var"});
    const json& p = t.at("prior_var");
    allow_keys(p, where + ".target.prior_var", {"term", "block"});
    PriorVarTarget pv{text(need(p, "term", where), where + ".target.prior_var.term"), std::nullopt};
    if (p.contains("block")) pv.block = static_cast<std::size_t>(integer(p.at("block"), where + ".target.prior_var.block"));
    e.target = pv;
  } else if (t.is_object() && t.contains("kernel")) {
    allow_keys(t, where + ".target", {"kernel"});
    const json& k = t.at("kernel");
    allow_keys(k, where + ".target.kernel", {"term", "param", "factor"});
    KernelTarget kt{text(need(k, "term", where), where + ".target.kernel.term"), std::nullopt,
                    parse_param(text(need(k, "param", where), where), where + ".target.kernel.param")};
    if (k.contains("factor")) kt.factor = static_cast<std::size_t>(integer(k.at("factor"), where + ".target.kernel.factor"));
    e.target = kt;
  } else {
    fail(where + ".target", "expected \"obs_var\", {prior_var: ...} or {kernel: ...}");
  }
  const auto bounds = number_list(need(h, "bounds", where), where + ".bounds");
  if (bounds.size() != 2) fail(where + ".bounds", "expected [lower, upper]");
  e.lower = bounds[0];
  e.upper = bounds[1];
  if (!(e.lower > 0.0 && e.lower <= e.upper && std::isfinite(e.upper)))
    fail(where + ".bounds", "need finite 0 < lower <= upper");
  if (h.contains("initial")) e.initial = number(h.at("initial"), where + ".initial");
  if (h.contains("grid")) {
    const json& g = h.at("grid");
    if (g.is_array()) {
      *grid_values = number_list(g, where + ".grid");
    } else {
      allow_keys(g, where + ".grid", {"count"});
      *grid_values = log_space(e.lower, e.upper, integer(need(g, "count", where), where + ".grid.count"));
    }
    if (grid_values->empty()) fail(where + ".grid", "empty grid");
  } else {
    *grid_values = log_space(e.lower, e.upper, 20);
  }
  return e;
}

}  // namespace

std::vector<std::vector<Index>> CvConfig::make(Index rows) const {
  if (folds) return contiguous_folds(rows, *folds);
  if (holdout) return holdout_block(rows, holdout->first, holdout->second);
  const Index size = std::min<Index>(10, rows - 1);
  return holdout_block(rows, (rows - size) / 2, size);
}

std::vector<double> log_space(double lo, double hi, Index n) {
  if (n < 1 || !(lo > 0.0 && hi >= lo)) throw InvalidArgument("log_space needs n >= 1 and 0 < lo <= hi");
  std::vector<double> out(static_cast<std::size_t>(n));
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (Index i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

ModelSpec parse_model_spec(const json& doc) {
  allow_keys(doc, "model spec", {"response", "obs_var", "terms", "hyper", "cv", "description"});
  ModelSpec spec;
  spec.source = doc;
  spec.model.response = doc.contains("response") ? text(doc.at("response"), "response") : "y";
  if (doc.contains("obs_var")) {
    const json& ov = doc.at("obs_var");
    if (ov.is_number()) spec.model.obs_var = ov.get<double>();
    else if (ov.is_string()) spec.model.obs_var = ov.get<std::string>();
    else fail("obs_var", "expected a number or a column name");
  }
  const json& terms = need(doc, "terms", "model spec");
  if (!terms.is_array() || terms.empty()) fail("terms", "expected a non-empty array");
  for (std::size_t i = 0; i < terms.size(); ++i) {
    try {
      spec.model.terms.push_back(parse_term(terms[i], i, spec.constraints));
    } catch (const SchemaError&) {
      throw;
    } catch (const Error& e) {
      fail("terms[" + std::to_string(i) + "]", e.what());
    }
  }
  try {
    spec.model.validate();
  } catch (const Error& e) {
    fail("model", e.what());
  }
  if (doc.contains("hyper")) {
    const json& hs = doc.at("hyper");
    if (!hs.is_array()) fail("hyper", "expected an array");
    for (std::size_t i = 0; i < hs.size(); ++i) {
      std::vector<double> grid;
      spec.hyper.entries.push_back(parse_hyper(hs[i], i, &grid));
      spec.grids.emplace_back(spec.hyper.entries.back().name, std::move(grid));
    }
    try {
      spec.hyper.validate();
      HyperValues start;
      for (const auto& e : spec.hyper.entries) start[e.name] = e.start();
      apply_hyper(spec.model, spec.hyper, start);  // resolves term names and targets
    } catch (const Error& e) {
      fail("hyper", e.what());
    }
  }
  if (doc.contains("cv")) {
    const json& cv = doc.at("cv");
    allow_keys(cv, "cv", {"holdout", "folds"});
    if (cv.contains("holdout")) {
      const json& h = cv.at("holdout");
      allow_keys(h, "cv.holdout", {"start", "size"});
      spec.cv.holdout = std::make_pair(integer(need(h, "start", "cv.holdout"), "cv.holdout.start"),
                                       integer(need(h, "size", "cv.holdout"), "cv.holdout.size"));
    }
    if (cv.contains("folds")) spec.cv.folds = integer(cv.at("folds"), "cv.folds");
    if (spec.cv.holdout && spec.cv.folds) fail("cv", "give either holdout or folds, not both");
  }
  return spec;
}

ModelSpec load_model_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("SchemaError: ") + path + ": " + e.what());
  }
  return parse_model_spec(doc);
}

ConstraintSet build_constraints(const std::vector<TermConstraint>& constraints, const GamModel& model) {
  const Index total = model.parameter_count();
  ConstraintSet out{SparseMatrix(0, total), Vector(0), {}};
  Index offset = 0;
  for (const auto& t : model.terms) {
    for (const auto& c : constraints) {
      if (c.term != t.name) continue;
      const auto* local = std::get_if<LocalTerm>(&t.kind);
      if (!local) throw SchemaError("SchemaError: term '" + t.name + "': constraints apply to local terms only");
      const ConstraintSet rows = c.kind == TermConstraint::Kind::Monotone ? monotone_constraint(local->grid, c.axis, c.direction)
                                                                          : convex_constraint(local->grid, c.axis);
      out = out.stacked(rows.embedded(offset, total));
    }
    offset += t.parameter_count();
  }
  for (const auto& c : constraints) model.term(c.term);
  return out;
}

}  // namespace bayesgam::io
