#include "bayesgam/io/archive.hpp"

#include "bayesgam/errors.hpp"
#include "bayesgam/io/csv.hpp"

#include <fstream>

namespace bayesgam::io {

using nlohmann::json;

namespace {

json vector_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector json_vector(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

json matrix_json(const Matrix& m) {
  json cols = json::array();
  for (Index c = 0; c < m.cols(); ++c) cols.push_back(vector_json(m.col(c)));
  return json{{"rows", m.rows()}, {"columns", cols}};
}

Matrix json_matrix(const json& j) {
  const Index rows = j.at("rows").get<Index>();
  const json& cols = j.at("columns");
  Matrix m(rows, static_cast<Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const Vector v = json_vector(cols[c]);
    if (v.size() != rows) throw SchemaError("SchemaError: archive matrix column has the wrong length");
    m.col(static_cast<Index>(c)) = v;
  }
  return m;
}

json basis_json(const GpBasis& b) {
  return json{{"axes", b.grid.axes()},
              {"mean", vector_json(b.mean)},
              {"eigenvalues", vector_json(b.eigenvalues)},
              {"energy", b.energy},
              {"basis", matrix_json(b.basis)}};
}

GpBasis json_basis(const json& j) {
  GpBasis b;
  b.grid = Grid(j.at("axes").get<std::vector<std::vector<double>>>());
  b.mean = json_vector(j.at("mean"));
  b.eigenvalues = json_vector(j.at("eigenvalues"));
  b.energy = j.at("energy").get<double>();
  b.basis = json_matrix(j.at("basis"));
  return b;
}

}  // namespace

json archive_to_json(const ModelArchive& a) {
  const SparseMatrix& lower = a.fit.posterior.precision_factor.lower();
  std::vector<Index> rows, cols;
  std::vector<double> values;
  for (Index c = 0; c < lower.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(lower, c); it; ++it) {
      rows.push_back(it.row());
      cols.push_back(it.col());
      values.push_back(it.value());
    }
  const auto& perm = a.fit.posterior.precision_factor.permutation().indices();
  json offsets = json::array();
  for (const auto& r : a.fit.term_offsets) offsets.push_back({{"name", r.name}, {"offset", r.offset}, {"size", r.size}});
  json bases = json::object();
  for (const auto& t : a.fit.model.terms)
    if (const auto* gp = std::get_if<GpTerm>(&t.kind)) bases[t.name] = basis_json(gp->basis);
  json ranges = json::object();
  for (const auto& [name, r] : a.input_ranges) ranges[name] = {r.first, r.second};

  return json{{"format", "bayesgam-archive"},
              {"version", kArchiveVersion},
              {"spec", a.spec},
              {"hyper", a.hyper},
              {"constrained", a.constrained},
              {"observations", a.observations},
              {"neg_log_posterior", a.neg_log_posterior},
              {"offsets", offsets},
              {"mean", vector_json(a.fit.posterior.mean)},
              {"translation", vector_json(a.fit.translation)},
              {"factor", {{"size", lower.rows()}, {"rows", rows}, {"cols", cols}, {"values", values}}},
              {"permutation", std::vector<int>(perm.data(), perm.data() + perm.size())},
              {"gp_bases", bases},
              {"input_ranges", ranges}};
}

ModelArchive archive_from_json(const json& doc) {
  try {
    if (doc.value("format", "") != "bayesgam-archive") throw SchemaError("SchemaError: not a bayesgam archive");
    if (doc.at("version").get<int>() != kArchiveVersion)
      throw SchemaError("SchemaError: unsupported archive version " + doc.at("version").dump());
    ModelArchive a;
    a.spec = doc.at("spec");
    a.hyper = doc.at("hyper").get<HyperValues>();
    a.constrained = doc.at("constrained").get<bool>();
    a.observations = doc.at("observations").get<Index>();
    a.neg_log_posterior = doc.at("neg_log_posterior").get<double>();
    for (auto it = doc.at("input_ranges").begin(); it != doc.at("input_ranges").end(); ++it)
      a.input_ranges[it.key()] = {it.value().at(0).get<double>(), it.value().at(1).get<double>()};

    ModelSpec spec = parse_model_spec(a.spec);
    GamModel model = spec.hyper.entries.empty() ? spec.model : apply_hyper(spec.model, spec.hyper, a.hyper);
    const json& bases = doc.at("gp_bases");
    for (auto& t : model.terms)
      if (auto* gp = std::get_if<GpTerm>(&t.kind)) gp->basis = json_basis(bases.at(t.name));

    const json& f = doc.at("factor");
    const Index n = f.at("size").get<Index>();
    const auto rows = f.at("rows").get<std::vector<Index>>();
    const auto cols = f.at("cols").get<std::vector<Index>>();
    const auto values = f.at("values").get<std::vector<double>>();
    if (rows.size() != cols.size() || rows.size() != values.size()) throw SchemaError("SchemaError: ragged factor triplets");
    std::vector<Triplet> trips;
    for (std::size_t i = 0; i < rows.size(); ++i)
      trips.emplace_back(static_cast<int>(rows[i]), static_cast<int>(cols[i]), values[i]);
    SparseMatrix lower(n, n);
    lower.setFromTriplets(trips.begin(), trips.end());
    const auto perm_idx = doc.at("permutation").get<std::vector<int>>();
    Permutation perm(static_cast<Index>(perm_idx.size()));
    for (std::size_t i = 0; i < perm_idx.size(); ++i) perm.indices()(static_cast<Index>(i)) = perm_idx[i];

    std::vector<TermRange> offsets;
    for (const auto& o : doc.at("offsets"))
      offsets.push_back({o.at("name").get<std::string>(), o.at("offset").get<Index>(), o.at("size").get<Index>()});
    Posterior post{json_vector(doc.at("mean")), CholeskyFactor(std::move(lower), std::move(perm))};
    if (post.mean.size() != n || model.parameter_count() != n)
      throw SchemaError("SchemaError: archive parameter count does not match its model");
    a.fit = FitResult{std::move(model), std::move(post), std::move(offsets), json_vector(doc.at("translation"))};
    return a;
  } catch (const SchemaError&) {
    throw;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("SchemaError: malformed archive: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw SchemaError(std::string("SchemaError: malformed archive: ") + e.what());
  }
}

void save_archive(const std::string& path, const ModelArchive& archive) {
  write_atomic(path, archive_to_json(archive).dump(1) + "\n");
}

ModelArchive load_archive(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("SchemaError: ") + path + ": " + e.what());
  }
  return archive_from_json(doc);
}

}  // namespace bayesgam::io
