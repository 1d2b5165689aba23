#include "bayesgam/model.hpp"

#include "bayesgam/errors.hpp"

#include <set>

namespace bayesgam {

namespace {

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

Points gather(const DataTable& data, const std::vector<std::string>& inputs) {
  Points pts(data.rows(), static_cast<Index>(inputs.size()));
  for (std::size_t d = 0; d < inputs.size(); ++d) pts.col(static_cast<Index>(d)) = data.column(inputs[d]);
  return pts;
}

SparseMatrix pad_columns(const SparseMatrix& m, Index cols) {
  SparseMatrix out = m;
  out.conservativeResize(m.rows(), cols);
  return out;
}

// Design of one term at `query` points without multiplier; translation through `shift`.
SparseMatrix raw_term_design(const GamTerm& term, const Points& query, Vector& shift) {
  shift = Vector::Zero(query.rows());
  try {
    return std::visit(overloaded{
                          [&](const LinearTerm&) -> SparseMatrix {
                            SparseMatrix a(query.rows(), 1);
                            std::vector<Triplet> trips;
                            for (Index i = 0; i < query.rows(); ++i)
                              if (query(i, 0) != 0.0) trips.emplace_back(i, 0, query(i, 0));
                            a.setFromTriplets(trips.begin(), trips.end());
                            return a;
                          },
                          [&](const GpTerm& gp) -> SparseMatrix {
                            DesignBlock block = gp_design_block(gp.basis, query);
                            shift = std::move(block.translation);
                            return block.design;
                          },
                          [&](const LocalTerm& local) -> SparseMatrix {
                            return pad_columns(interpolation_matrix(local.grid, query), term.parameter_count());
                          },
                      },
                      term.kind);
  } catch (const OutOfGrid& e) {
    throw OutOfGrid(e.input_index(), "term '" + term.name + "': " + e.what());
  }
}

SparseMatrix term_design(const GamTerm& term, const DataTable& data, Vector& shift) {
  SparseMatrix a = raw_term_design(term, gather(data, term.inputs()), shift);
  if (term.multiplier) {
    const Vector& m = data.column(*term.multiplier);
    a = m.asDiagonal() * a;
    shift = shift.cwiseProduct(m);
  }
  return a;
}

std::vector<PriorBlock> term_priors(const GamTerm& term) {
  const Index p = term.parameter_count();
  std::vector<PriorBlock> out;
  auto add = [&](const PriorBlock& b) {
    b.validate();
    if (b.cols() != p && !(std::holds_alternative<LocalTerm>(term.kind) && b.cols() == p - 1))
      throw InvalidArgument("prior block of term '" + term.name + "' has the wrong number of columns");
    out.push_back(PriorBlock{pad_columns(b.transform, p), b.mean, b.var});
  };
  std::visit(overloaded{
                 [&](const LinearTerm& t) { for (const auto& b : t.priors) add(b); },
                 [&](const GpTerm& t) { add(gp_prior_block(t.basis)); },
                 [&](const LocalTerm& t) { for (const auto& b : t.priors) add(b); },
             },
             term.kind);
  return out;
}

SparseMatrix hstack(const std::vector<SparseMatrix>& blocks, Index rows, Index cols) {
  std::vector<Triplet> trips;
  Index offset = 0;
  for (const auto& b : blocks) {
    for (Index c = 0; c < b.outerSize(); ++c)
      for (SparseMatrix::InnerIterator it(b, c); it; ++it) trips.emplace_back(it.row(), offset + c, it.value());
    offset += b.cols();
  }
  SparseMatrix out(rows, cols);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

std::vector<TermRange> offsets_of(const GamModel& model) {
  std::vector<TermRange> out;
  Index offset = 0;
  for (const auto& t : model.terms) {
    out.push_back({t.name, offset, t.parameter_count()});
    offset += t.parameter_count();
  }
  return out;
}

}  // namespace

void DataTable::add(const std::string& name, Vector values) {
  if (columns_.empty()) rows_ = values.size();
  if (values.size() != rows_) throw InvalidArgument("column '" + name + "' has a different length");
  if (!columns_.count(name)) order_.push_back(name);
  columns_[name] = std::move(values);
}

const Vector& DataTable::column(const std::string& name) const {
  auto it = columns_.find(name);
  if (it == columns_.end()) throw MissingColumn(name);
  return it->second;
}

DataTable DataTable::select(const std::vector<Index>& rows) const {
  DataTable out;
  for (const auto& name : order_) {
    const Vector& src = columns_.at(name);
    Vector v(static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) v(static_cast<Index>(i)) = src(rows[i]);
    out.add(name, std::move(v));
  }
  if (order_.empty()) out.rows_ = static_cast<Index>(rows.size());
  return out;
}

GpTerm GpTerm::build(Kernel kernel, const Grid& grid, double energy_threshold, double mean_value,
                     std::vector<std::string> inputs) {
  GpTerm t{std::move(kernel), energy_threshold, mean_value, GpBasis{}, std::move(inputs)};
  t.basis.grid = grid;
  t.rebuild();
  return t;
}

void GpTerm::rebuild() {
  const Grid grid = basis.grid;
  const auto* sep = std::get_if<Separable>(&kernel.variant());
  if (sep && sep->factors.size() >= 2) {
    if (static_cast<Index>(sep->factors.size()) != grid.dims())
      throw InvalidArgument("separable GP kernel needs one factor per grid axis");
    std::vector<KernelFactor> factors;
    for (std::size_t d = 0; d < sep->factors.size(); ++d)
      factors.push_back({sep->factors[d], grid.axis(static_cast<Index>(d))});
    basis = kron_eigenbasis(factors, energy_threshold, constant_mean(mean_value));
  } else {
    basis = eigenbasis(kernel, grid, constant_mean(mean_value), energy_threshold);
  }
}

bool LocalTerm::has_shared_mean() const {
  for (const auto& b : priors)
    if (b.cols() == grid.size() + 1) return true;
  return false;
}

Index GamTerm::parameter_count() const {
  return std::visit(overloaded{
                        [](const LinearTerm&) -> Index { return 1; },
                        [](const GpTerm& t) -> Index { return t.basis.size(); },
                        [](const LocalTerm& t) -> Index { return t.grid.size() + (t.has_shared_mean() ? 1 : 0); },
                    },
                    kind);
}

std::vector<std::string> GamTerm::inputs() const {
  return std::visit(overloaded{
                        [](const LinearTerm& t) { return std::vector<std::string>{t.input}; },
                        [](const GpTerm& t) { return t.inputs; },
                        [](const LocalTerm& t) { return t.inputs; },
                    },
                    kind);
}

Index GamModel::parameter_count() const {
  Index n = 0;
  for (const auto& t : terms) n += t.parameter_count();
  return n;
}

const GamTerm& GamModel::term(const std::string& name) const {
  for (const auto& t : terms)
    if (t.name == name) return t;
  throw UnknownTerm(name);
}

GamTerm& GamModel::term(const std::string& name) {
  for (auto& t : terms)
    if (t.name == name) return t;
  throw UnknownTerm(name);
}

void GamModel::validate() const {
  if (terms.empty()) throw InvalidArgument("model has no terms");
  std::set<std::string> seen;
  for (const auto& t : terms) {
    if (!seen.insert(t.name).second) throw InvalidArgument("duplicate term name '" + t.name + "'");
    if (const auto* local = std::get_if<LocalTerm>(&t.kind)) {
      if (static_cast<Index>(local->inputs.size()) != local->grid.dims())
        throw InvalidArgument("term '" + t.name + "': inputs do not match grid dimensions");
    }
    if (const auto* gp = std::get_if<GpTerm>(&t.kind)) {
      if (static_cast<Index>(gp->inputs.size()) != gp->basis.grid.dims())
        throw InvalidArgument("term '" + t.name + "': inputs do not match grid dimensions");
    }
  }
  if (const auto* c = std::get_if<double>(&obs_var); c && !(*c > 0.0))
    throw InvalidArgument("obs_var must be positive");
}

SparseMatrix model_design(const GamModel& model, const DataTable& data, Vector* translation) {
  std::vector<SparseMatrix> blocks;
  Vector shift_total = Vector::Zero(data.rows());
  for (const auto& t : model.terms) {
    Vector shift;
    blocks.push_back(term_design(t, data, shift));
    shift_total += shift;
  }
  if (translation) *translation = std::move(shift_total);
  return hstack(blocks, data.rows(), model.parameter_count());
}

Vector observation_variance(const GamModel& model, const DataTable& data) {
  if (const auto* c = std::get_if<double>(&model.obs_var)) return Vector::Constant(data.rows(), *c);
  return data.column(std::get<std::string>(model.obs_var));
}

Assembly assemble(const GamModel& model, const DataTable& data) {
  model.validate();
  if (data.rows() == 0) throw EmptyData("EmptyData: the data table has no rows");
  Assembly out;
  out.offsets = offsets_of(model);
  auto& sys = out.system;
  sys.design = model_design(model, data, &out.translation);
  sys.obs = data.column(model.response) - out.translation;
  sys.obs_var = observation_variance(model, data);

  std::vector<Triplet> trips;
  std::vector<double> mean;
  std::vector<double> var;
  Index row = 0;
  for (std::size_t ti = 0; ti < model.terms.size(); ++ti) {
    const Index offset = out.offsets[ti].offset;
    for (const auto& b : term_priors(model.terms[ti])) {
      for (Index c = 0; c < b.transform.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(b.transform, c); it; ++it)
          trips.emplace_back(row + it.row(), offset + c, it.value());
      mean.insert(mean.end(), b.mean.data(), b.mean.data() + b.mean.size());
      var.insert(var.end(), b.var.data(), b.var.data() + b.var.size());
      row += b.rows();
    }
  }
  sys.prior_transform = SparseMatrix(row, model.parameter_count());
  sys.prior_transform.setFromTriplets(trips.begin(), trips.end());
  sys.prior_mean = Eigen::Map<const Vector>(mean.data(), row);
  sys.prior_var = Eigen::Map<const Vector>(var.data(), row);
  return out;
}

const TermRange& FitResult::range(const std::string& name) const {
  for (const auto& r : term_offsets)
    if (r.name == name) return r;
  throw UnknownTerm(name);
}

FitResult fit(const GamModel& model, const DataTable& data, double jitter) {
  Assembly a = assemble(model, data);
  FitResult out{model, solve(a.system, jitter), std::move(a.offsets), std::move(a.translation)};
  return out;
}

PredictiveMarginals predict(const FitResult& fit, const DataTable& data, bool include_noise) {
  Vector shift;
  const SparseMatrix a = model_design(fit.model, data, &shift);
  const Vector noise = include_noise ? observation_variance(fit.model, data) : Vector::Zero(data.rows());
  PredictiveMarginals out = predictive_marginals(fit.posterior, a, noise);
  out.mean += shift;
  return out;
}

TermValues term_values(const FitResult& fit, const std::string& name, const Points& query) {
  const GamTerm& term = fit.model.term(name);
  const TermRange& range = fit.range(name);
  if (query.cols() != static_cast<Index>(term.inputs().size()))
    throw InvalidArgument("term '" + name + "': query dimension does not match the term inputs");
  Vector shift;
  const SparseMatrix local = raw_term_design(term, query, shift);
  std::vector<Triplet> trips;
  for (Index c = 0; c < local.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(local, c); it; ++it) trips.emplace_back(it.row(), range.offset + c, it.value());
  SparseMatrix embedded(query.rows(), fit.posterior.size());
  embedded.setFromTriplets(trips.begin(), trips.end());
  const PredictiveMarginals m = predictive_marginals(fit.posterior, embedded, Vector::Zero(query.rows()));
  return TermValues{m.mean + shift, m.variance.cwiseMax(0.0).cwiseSqrt()};
}

}  // namespace bayesgam
