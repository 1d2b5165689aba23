#include "support.hpp"

#include "bayesgam/errors.hpp"
#include "bayesgam/io/archive.hpp"
#include "bayesgam/io/csv.hpp"
#include "bayesgam/io/spec.hpp"

#include <doctest.h>

#include <clocale>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

using namespace bayesgam;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kSource = BAYESGAM_SOURCE_DIR;

DataTable csv(const std::string& text) {
  std::istringstream in(text);
  return io::parse_csv(in);
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "bayesgam_test_io";
  fs::create_directories(dir);
  return dir / name;
}

json quartic_spec() {
  return json::parse(R"({
    "response": "y", "obs_var": 0.25,
    "terms": [{"name": "f", "kind": "local", "inputs": "x",
               "grid": [{"from": -2, "to": 2, "count": 15}],
               "priors": [{"type": "diff", "order": 2, "std": 1.0}]}]
  })");
}

io::ModelArchive archive_of(const std::string& spec_file, const std::string& data_file) {
  const io::ModelSpec spec = io::load_model_spec(kSource + "/docs/specs/" + spec_file);
  const DataTable data = io::read_csv(kSource + "/data/" + data_file);
  HyperValues hyper;
  for (const auto& e : spec.hyper.entries) hyper[e.name] = e.start();
  io::ModelArchive a{spec.source, hyper, fit(apply_hyper(spec.model, spec.hyper, hyper), data), false, {}, data.rows(), 1.5};
  for (const auto& name : data.names()) a.input_ranges[name] = {data.column(name).minCoeff(), data.column(name).maxCoeff()};
  return a;
}

}  // namespace

TEST_CASE("csv parsing") {
  const DataTable t = csv("x, y\n1,2\n\n 3.5 ,-4e-3\n");
  CHECK(t.rows() == 2);
  CHECK(t.names() == std::vector<std::string>{"x", "y"});
  CHECK(t.column("y")(1) == -4e-3);

  CHECK_THROWS_AS(csv(""), EmptyData);
  CHECK_THROWS_AS(csv("\n\n"), EmptyData);
  CHECK(csv("x,y\n").rows() == 0);
  CHECK_THROWS_AS(csv("x,y\n1\n"), SchemaError);
  CHECK_THROWS_AS(csv("x,y\n1,2,3\n"), SchemaError);
  CHECK_THROWS_AS(csv("x,y\n1,abc\n"), SchemaError);
  CHECK_THROWS_AS(csv("x,y\n1,\n"), SchemaError);
  CHECK_THROWS_AS(csv("x,x\n1,2\n"), SchemaError);
  CHECK_THROWS_AS(io::read_csv("/nonexistent/file.csv"), InvalidArgument);
}

TEST_CASE("number formatting round-trips") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, static_cast<double>(i % 40) - 20.0);
    CHECK(csv("v\n" + io::format_double(v) + "\n").column("v")(0) == v);
  }
  CHECK(io::format_double(0.1) == "0.10000000000000001");
  CHECK(io::format_double(std::numeric_limits<double>::denorm_min()) != "0");

  // the C locale of the process must not leak a decimal comma into the output
  const char* old = std::setlocale(LC_NUMERIC, nullptr);
  const std::string saved = old ? old : "C";
  if (std::setlocale(LC_NUMERIC, "de_DE.UTF-8")) CHECK(io::format_double(1.5) == "1.5");
  std::setlocale(LC_NUMERIC, saved.c_str());

  const std::string table = io::format_table({"a", "b"}, {Vector::LinSpaced(2, 0, 1), Vector::Constant(2, 0.5)});
  CHECK(table == "a,b\n0,0.5\n1,0.5\n");
  CHECK_THROWS_AS(io::format_table({"a"}, {}), InvalidArgument);
}

TEST_CASE("atomic writes") {
  const fs::path p = scratch("atomic.txt");
  io::write_atomic(p.string(), "first");
  io::write_atomic(p.string(), "second");
  std::ifstream in(p);
  std::string s;
  std::getline(in, s);
  CHECK(s == "second");
  CHECK_FALSE(fs::exists(p.string() + ".tmp"));
  CHECK_THROWS(io::write_atomic("/nonexistent/dir/out.txt", "x"));
  CHECK_FALSE(fs::exists("/nonexistent/dir/out.txt"));
}

TEST_CASE("model spec parsing") {
  const io::ModelSpec spec = io::parse_model_spec(quartic_spec());
  CHECK(spec.model.parameter_count() == 15);
  CHECK(std::get<double>(spec.model.obs_var) == 0.25);
  CHECK_FALSE(spec.constrained());

  auto with = [](auto edit) {
    json doc = quartic_spec();
    edit(doc);
    return doc;
  };
  CHECK_THROWS_AS(io::parse_model_spec(with([](json& d) { d["unknown"] = 1; })), SchemaError);
  CHECK_THROWS_AS(io::parse_model_spec(with([](json& d) { d["terms"][0]["kind"] = "spline"; })), SchemaError);
  CHECK_THROWS_AS(io::parse_model_spec(with([](json& d) { d["terms"][0]["priors"][0]["order"] = 20; })), SchemaError);
  CHECK_THROWS_AS(io::parse_model_spec(with([](json& d) { d["terms"][0]["priors"][0]["std"] = -1; })), SchemaError);
  CHECK_THROWS_AS(io::parse_model_spec(with([](json& d) { d.erase("terms"); })), SchemaError);
  CHECK_THROWS_AS(io::parse_model_spec(with([](json& d) {
                    d["terms"][0]["priors"].push_back({{"type", "periodic"}, {"std", 1e-3}, {"period", 2.0}});
                  })),
                  SchemaError);
  CHECK_THROWS_AS(io::parse_model_spec(with([](json& d) { d["terms"].push_back(d["terms"][0]); })), SchemaError);

  SUBCASE("error names the term") {
    try {
      io::parse_model_spec(with([](json& d) { d["terms"][0]["priors"][0]["bogus"] = 1; }));
      FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
      CHECK(std::string(e.what()).find("'f'") != std::string::npos);
    }
  }
  SUBCASE("hyper and cv sections") {
    json doc = quartic_spec();
    doc["hyper"] = json::parse(R"([{"name": "v", "target": {"prior_var": {"term": "f"}}, "bounds": [0.01, 100], "grid": {"count": 5}}])");
    doc["cv"] = json::parse(R"({"holdout": {"start": 3, "size": 4}})");
    const io::ModelSpec s = io::parse_model_spec(doc);
    REQUIRE(s.grids.size() == 1);
    CHECK(s.grids[0].second.size() == 5);
    CHECK(s.grids[0].second.front() == doctest::Approx(0.01));
    CHECK(s.cv.make(20) == std::vector<std::vector<Index>>{{3, 4, 5, 6}});
    doc["cv"] = json::parse(R"({"holdout": {"start": 3, "size": 4}, "folds": 2})");
    CHECK_THROWS_AS(io::parse_model_spec(doc), SchemaError);
  }
  SUBCASE("constraints") {
    json doc = quartic_spec();
    doc["terms"][0]["constraints"] = json::parse(R"({"monotone": {"direction": "decreasing"}})");
    const io::ModelSpec s = io::parse_model_spec(doc);
    REQUIRE(s.constrained());
    const ConstraintSet c = io::build_constraints(s.constraints, s.model);
    CHECK(c.rows() == 14);
    CHECK(c.cols() == 15);
  }
}

TEST_CASE("every shipped example spec parses") {
  int count = 0;
  for (const auto& entry : fs::directory_iterator(kSource + "/docs/specs")) {
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(io::load_model_spec(entry.path().string()));
    ++count;
  }
  CHECK(count >= 10);
}

TEST_CASE("log_space") {
  const auto v = io::log_space(1e-3, 1e3, 7);
  REQUIRE(v.size() == 7);
  CHECK(v.front() == doctest::Approx(1e-3));
  CHECK(v[3] == doctest::Approx(1.0));
  CHECK(v.back() == doctest::Approx(1e3));
}

TEST_CASE("archive round trip is bit exact") {
  for (const auto& [spec, data] : std::vector<std::pair<std::string, std::string>>{
           {"quartic_extrapolation.json", "quartic.csv"},
           {"surface_kronecker.json", "surface.csv"},
           {"gp_periodic.json", "trig.csv"},
           {"mauna_loa.json", "mauna_loa_monthly.csv"}}) {
    CAPTURE(spec);
    const io::ModelArchive a = archive_of(spec, data);
    const fs::path p = scratch("archive.json");
    io::save_archive(p.string(), a);
    const io::ModelArchive b = io::load_archive(p.string());

    CHECK(b.fit.posterior.mean == a.fit.posterior.mean);
    CHECK(Matrix(b.fit.posterior.precision_factor.lower()) == Matrix(a.fit.posterior.precision_factor.lower()));
    CHECK(b.fit.posterior.precision_factor.permutation().indices() ==
          a.fit.posterior.precision_factor.permutation().indices());
    CHECK(b.observations == a.observations);
    CHECK(b.neg_log_posterior == a.neg_log_posterior);
    CHECK(b.input_ranges == a.input_ranges);

    const DataTable table = io::read_csv(kSource + "/data/" + data);
    const PredictiveMarginals pa = predict(a.fit, table, true);
    const PredictiveMarginals pb = predict(b.fit, table, true);
    CHECK(pa.mean == pb.mean);
    CHECK(pa.variance == pb.variance);

    // saving the reloaded archive reproduces the file
    io::save_archive(scratch("archive2.json").string(), b);
    std::ifstream f1(p), f2(scratch("archive2.json"));
    std::stringstream s1, s2;
    s1 << f1.rdbuf();
    s2 << f2.rdbuf();
    CHECK(s1.str() == s2.str());
  }
}

TEST_CASE("malformed archives") {
  const io::ModelArchive a = archive_of("quartic_extrapolation.json", "quartic.csv");
  json doc = io::archive_to_json(a);
  CHECK_NOTHROW(io::archive_from_json(doc));
  json bad = doc;
  bad["format"] = "something-else";
  CHECK_THROWS_AS(io::archive_from_json(bad), SchemaError);
  bad = doc;
  bad["version"] = io::kArchiveVersion + 1;
  CHECK_THROWS_AS(io::archive_from_json(bad), SchemaError);
  bad = doc;
  bad.erase("mean");
  CHECK_THROWS_AS(io::archive_from_json(bad), SchemaError);

  const fs::path p = scratch("garbage.json");
  io::write_atomic(p.string(), "{ not json");
  CHECK_THROWS_AS(io::load_archive(p.string()), SchemaError);
}
