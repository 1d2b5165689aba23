#include "bayesgam/cli.hpp"

#include "bayesgam/constrain.hpp"
#include "bayesgam/errors.hpp"
#include "bayesgam/hypertune.hpp"
#include "bayesgam/io/archive.hpp"
#include "bayesgam/io/csv.hpp"
#include "bayesgam/io/spec.hpp"
#include "bayesgam/parallel.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <optional>
#include <set>
#include <sstream>

namespace bayesgam::cli {

namespace {

struct Globals {
  std::uint64_t seed = 0;
  std::optional<int> threads;
  bool quiet = false;
};

// Input and multiplier columns in order of first use.
std::vector<std::string> model_columns(const GamModel& model) {
  std::vector<std::string> out;
  auto add = [&](const std::string& c) {
    if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
  };
  for (const auto& t : model.terms) {
    for (const auto& c : t.inputs()) add(c);
    if (t.multiplier) add(*t.multiplier);
  }
  return out;
}

io::ModelArchive fit_archive(const io::ModelSpec& spec, const GamModel& model, const DataTable& data,
                             const HyperValues& hyper) {
  const Assembly a = assemble(model, data);
  Posterior post = solve(a.system);
  if (spec.constrained()) {
    const ConstraintSet cs = io::build_constraints(spec.constraints, model);
    post.mean = solve_constrained(a.system, cs).theta;
  }
  io::ModelArchive archive;
  archive.spec = spec.source;
  archive.hyper = hyper;
  archive.constrained = spec.constrained();
  archive.observations = data.rows();
  archive.neg_log_posterior = neg_log_joint(a.system, post.mean);
  for (const auto& c : model_columns(model)) {
    const Vector& v = data.column(c);
    archive.input_ranges[c] = {v.minCoeff(), v.maxCoeff()};
  }
  archive.fit = FitResult{model, std::move(post), a.offsets, a.translation};
  return archive;
}

void summary(std::ostream& out, const io::ModelArchive& a) {
  out << "observations " << a.observations << "\n"
      << "parameters " << a.fit.posterior.size() << "\n"
      << "neg_log_posterior " << io::format_double(a.neg_log_posterior) << "\n";
  if (a.constrained) out << "constrained MAP (posterior std from the unconstrained fit)\n";
}

int cmd_fit(const Globals& g, const std::string& model_path, const std::string& data_path, const std::string& out_path,
            std::ostream& out) {
  const io::ModelSpec spec = io::load_model_spec(model_path);
  const DataTable data = io::read_csv(data_path);
  HyperValues hyper;
  GamModel model = spec.model;
  if (!spec.hyper.entries.empty()) {
    for (const auto& e : spec.hyper.entries) hyper[e.name] = e.start();
    model = apply_hyper(spec.model, spec.hyper, hyper);
  }
  const io::ModelArchive archive = fit_archive(spec, model, data, hyper);
  io::save_archive(out_path, archive);
  if (!g.quiet) summary(out, archive);
  return 0;
}

int cmd_predict(const Globals& g, const std::string& archive_path, const std::string& data_path,
                const std::string& out_path, bool noise, std::ostream& out) {
  const io::ModelArchive archive = io::load_archive(archive_path);
  const DataTable data = io::read_csv(data_path);
  const PredictiveMarginals pm = predict(archive.fit, data, noise);
  std::vector<std::string> header = model_columns(archive.fit.model);
  std::vector<Vector> cols;
  for (const auto& c : header) cols.push_back(data.column(c));
  header.insert(header.end(), {"mean", "std"});
  cols.push_back(pm.mean);
  cols.push_back(pm.variance.cwiseMax(0.0).cwiseSqrt());
  io::write_atomic(out_path, io::format_table(header, cols));
  if (!g.quiet) out << "predicted " << data.rows() << " rows\n";
  return 0;
}

std::string trace_csv(const TuneResult& r) {
  std::string text;
  for (const auto& n : r.names) text += n + ",";
  text += "objective,status\n";
  for (const auto& p : r.trace) {
    for (double v : p.values) text += io::format_double(v) + ",";
    text += (p.ok ? io::format_double(p.objective) : std::string("nan")) + "," + (p.ok ? "ok" : "failed") + "\n";
  }
  return text;
}

int cmd_tune(const Globals& g, const std::string& model_path, const std::string& data_path, const std::string& out_path,
             const std::string& method, bool use_grid, bool use_optimize, Index budget, std::string trace_path,
             std::ostream& out, std::ostream& err) {
  const io::ModelSpec spec = io::load_model_spec(model_path);
  const DataTable data = io::read_csv(data_path);
  if (spec.hyper.entries.empty()) throw InvalidArgument("the model spec declares no hyperparameters to tune");
  if (use_grid == use_optimize) throw InvalidArgument("choose exactly one of --grid and --optimize");

  TuneProblem problem{spec.model, data, spec.hyper, Objective::Map, {}};
  if (method == "evidence") problem.objective = Objective::Evidence;
  else if (method == "cv") {
    problem.objective = Objective::Cv;
    problem.folds = spec.cv.make(data.rows());
  } else if (method != "map") throw InvalidArgument("--method must be map, evidence or cv");

  TuneResult result;
  bool partial = false;
  if (use_grid) {
    result = grid_scan(problem, spec.grids);
  } else {
    try {
      result = optimize(problem, budget, g.seed);
    } catch (const BudgetExhausted& e) {
      result = e.result();
      partial = true;
      err << "warning: evaluation budget exhausted; writing the best point found so far\n";
    }
  }
  if (trace_path.empty()) trace_path = out_path + ".trace.csv";
  io::write_atomic(trace_path, trace_csv(result));

  const GamModel model = apply_hyper(spec.model, spec.hyper, result.best);
  const io::ModelArchive archive = fit_archive(spec, model, data, result.best);
  io::save_archive(out_path, archive);
  if (!g.quiet) {
    out << "method " << method << (partial ? " (budget exhausted)" : "") << "\n";
    for (const auto& [name, v] : result.best) out << name << " " << io::format_double(v) << "\n";
    out << "objective " << io::format_double(result.objective_value) << "\n"
        << "evaluations " << result.trace.size() << "\n";
    summary(out, archive);
  }
  return 0;
}

std::vector<double> linspace(double lo, double hi, Index n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i)
    v[static_cast<std::size_t>(i)] = n == 1 ? lo : (i == n - 1 ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
  return v;
}

int cmd_termdump(const Globals& g, const std::string& archive_path, const std::string& term_name,
                 const std::string& out_path, Index resolution, bool at_knots, std::ostream& out) {
  const io::ModelArchive archive = io::load_archive(archive_path);
  const GamTerm& term = archive.fit.model.term(term_name);
  if (resolution < 1) throw InvalidArgument("--resolution must be at least 1");

  std::vector<std::vector<double>> axes;
  if (const auto* lin = std::get_if<LinearTerm>(&term.kind)) {
    if (at_knots) throw InvalidArgument("linear terms have no knots; use --resolution");
    auto it = archive.input_ranges.find(lin->input);
    const auto range = it == archive.input_ranges.end() ? std::make_pair(0.0, 1.0) : it->second;
    axes.push_back(linspace(range.first, range.second, resolution));
  } else {
    const Grid& grid = std::holds_alternative<GpTerm>(term.kind) ? std::get<GpTerm>(term.kind).basis.grid
                                                                 : std::get<LocalTerm>(term.kind).grid;
    for (Index d = 0; d < grid.dims(); ++d)
      axes.push_back(at_knots ? grid.axis(d) : linspace(grid.axis(d).front(), grid.axis(d).back(), resolution));
  }
  // Tensor product of the axes, last axis fastest.
  Index total = 1;
  for (const auto& a : axes) total *= static_cast<Index>(a.size());
  Points query(total, static_cast<Index>(axes.size()));
  for (Index r = 0; r < total; ++r) {
    Index rest = r;
    for (std::size_t d = axes.size(); d-- > 0;) {
      const Index len = static_cast<Index>(axes[d].size());
      query(r, static_cast<Index>(d)) = axes[d][static_cast<std::size_t>(rest % len)];
      rest /= len;
    }
  }
  const TermValues tv = term_values(archive.fit, term_name, query);
  std::vector<std::string> header = term.inputs();
  std::vector<Vector> cols;
  for (Index d = 0; d < query.cols(); ++d) cols.push_back(query.col(d));
  header.insert(header.end(), {"mean", "std"});
  cols.push_back(tv.mean);
  cols.push_back(tv.std);
  io::write_atomic(out_path, io::format_table(header, cols));
  if (!g.quiet) out << "term " << term_name << ": " << query.rows() << " points\n";
  return 0;
}

int cmd_sample(const Globals& g, const std::string& archive_path, const std::string& out_path, Index count,
               std::ostream& out) {
  const io::ModelArchive archive = io::load_archive(archive_path);
  if (archive.constrained)
    throw InvalidArgument("sampling is not available for constrained fits (only the MAP is computed)");
  const Matrix draws = sample(archive.fit.posterior, count, g.seed);
  std::vector<std::string> header;
  for (const auto& r : archive.fit.term_offsets)
    for (Index i = 0; i < r.size; ++i) header.push_back(r.name + "[" + std::to_string(i) + "]");
  std::vector<Vector> cols;
  for (Index c = 0; c < draws.cols(); ++c) cols.push_back(draws.col(c));
  io::write_atomic(out_path, io::format_table(header, cols));
  if (!g.quiet) out << "wrote " << count << " draws of " << draws.cols() << " parameters\n";
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian generalized additive models on sparse linear-Gaussian systems", "bayesgam"};
  app.require_subcommand(1);
  Globals g;
  int threads = 0;
  app.add_option("--seed", g.seed, "Random seed")->default_val(0);
  auto* threads_opt = app.add_option("--threads", threads, "OpenMP thread count (default: BAYESGAM_THREADS or all cores)");
  app.add_flag("--quiet", g.quiet, "Suppress the summary on standard output");

  std::string model_path, data_path, out_path, archive_path, term_name, method = "map", trace_path;
  bool noise = false, use_grid = false, use_optimize = false, at_knots = false;
  Index budget = 100, resolution = 100, count = 1;

  auto* fit = app.add_subcommand("fit", "Fit a model spec to a CSV file and write an archive");
  fit->add_option("model", model_path, "Model spec (JSON)")->required();
  fit->add_option("data", data_path, "Data (CSV)")->required();
  fit->add_option("out", out_path, "Output archive")->required();

  auto* pred = app.add_subcommand("predict", "Posterior predictive mean and std at new inputs");
  pred->add_option("archive", archive_path)->required();
  pred->add_option("data", data_path)->required();
  pred->add_option("out", out_path)->required();
  pred->add_flag("--noise", noise, "Include observation noise in std");

  auto* tune = app.add_subcommand("tune", "Tune hyperparameters, then fit");
  tune->add_option("model", model_path)->required();
  tune->add_option("data", data_path)->required();
  tune->add_option("out", out_path)->required();
  tune->add_option("--method", method, "map, evidence or cv")->check(CLI::IsMember({"map", "evidence", "cv"}));
  tune->add_flag("--grid", use_grid, "Exhaustive scan over the spec's grids");
  tune->add_flag("--optimize", use_optimize, "Nelder-Mead in log space");
  tune->add_option("--budget", budget, "Objective evaluations for --optimize");
  tune->add_option("--trace", trace_path, "Trace CSV (default: <out>.trace.csv)");

  auto* dump = app.add_subcommand("termdump", "Evaluate one term on a regular lattice");
  dump->add_option("archive", archive_path)->required();
  dump->add_option("term", term_name)->required();
  dump->add_option("out", out_path)->required();
  dump->add_option("--resolution", resolution, "Points per axis");
  dump->add_flag("--knots", at_knots, "Evaluate at the term's own knots");

  auto* samp = app.add_subcommand("sample", "Posterior draws of all parameters");
  samp->add_option("archive", archive_path)->required();
  samp->add_option("out", out_path)->required();
  samp->add_option("--count", count, "Number of draws");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  if (*threads_opt) g.threads = threads;

  try {
    set_thread_count(resolve_thread_count(g.threads));
    if (*fit) return cmd_fit(g, model_path, data_path, out_path, out);
    if (*pred) return cmd_predict(g, archive_path, data_path, out_path, noise, out);
    if (*tune) return cmd_tune(g, model_path, data_path, out_path, method, use_grid, use_optimize, budget, trace_path, out, err);
    if (*dump) return cmd_termdump(g, archive_path, term_name, out_path, resolution, at_knots, out);
    if (*samp) return cmd_sample(g, archive_path, out_path, count, out);
  } catch (const bayesgam::Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace bayesgam::cli
