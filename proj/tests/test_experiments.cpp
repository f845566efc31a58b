#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>

#include "mfu/artifacts.hpp"
#include "mfu/errors.hpp"
#include "mfu/experiments.hpp"
#include "mfu/io.hpp"
#include "mfu/kernels.hpp"
#include "small_configs.hpp"

using namespace mfu;
using namespace mfu::experiments;
namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kKinds = {"poly_inadequate",      "poly_hierarchical", "transport_forward",
                                         "transport_calibrate", "transport_robustness", "dci",
                                         "gsa_generic"};

std::string minimal(const std::string& kind, const std::string& settings = "") {
  std::string s = R"({"schema_version": 1, "experiment": ")" + kind + R"(", "seed": 3)";
  if (!settings.empty()) s += R"(, "settings": )" + settings;
  return s + "}";
}

// Field named by the ConfigError raised when parsing `text`, or "" if none.
std::string error_field(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.field;
  }
  return "";
}

std::map<std::string, std::string> files_of(const Result& r) {
  std::map<std::string, std::string> m;
  for (const auto& f : r.files) m[f.name] = f.content;
  m["summary.json"] = r.summary.dump(2);
  return m;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("mfu_test_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::vector<std::string> csv_column(const std::string& csv, std::size_t col) {
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  std::vector<std::string> out;
  while (std::getline(in, line)) {
    std::istringstream cells(line);
    std::string cell;
    for (std::size_t c = 0; c <= col; ++c) std::getline(cells, cell, ',');
    out.push_back(cell);
  }
  return out;
}

}  // namespace

TEST_CASE("resolved defaults round-trip for every experiment") {
  for (const auto& k : kKinds) {
    CAPTURE(k);
    const auto cfg = parse_config(minimal(k));
    CHECK(to_string(cfg.kind) == k);
    const auto j = to_json(cfg);
    const auto again = parse_config(j.dump());
    CHECK(to_json(again) == j);
    CHECK_NOTHROW(validate(cfg));
  }
}

TEST_CASE("shipped example configs parse and match the defaults") {
  for (const auto& k : kKinds) {
    CAPTURE(k);
    const auto text = io::read_text(std::string(MFU_CONFIG_DIR) + "/" + k + ".json");
    const auto cfg = parse_config(text);
    CHECK(cfg.seed == 12345);
    auto defaults = parse_config(minimal(k));
    defaults.seed = cfg.seed;
    defaults.output = cfg.output;
    CHECK(to_json(cfg) == to_json(defaults));
  }
}

TEST_CASE("output directory is carried in the resolved config") {
  auto cfg = parse_config(R"({"schema_version": 1, "experiment": "gsa_generic", "seed": 1, "output": "runs/a"})");
  CHECK(cfg.output == "runs/a");
  CHECK(to_json(cfg)["output"] == "runs/a");
}

TEST_CASE("config errors name the offending field") {
  CHECK(error_field("{not json") == "<document>");
  CHECK(error_field(R"({"experiment": "dci", "seed": 1})") == "schema_version");
  CHECK(error_field(R"({"schema_version": 2, "experiment": "dci", "seed": 1})") == "schema_version");
  CHECK(error_field(R"({"schema_version": 1, "experiment": "nope", "seed": 1})") == "experiment");
  CHECK(error_field(R"({"schema_version": 1, "experiment": "dci"})") == "seed");
  CHECK(error_field(R"({"schema_version": 1, "experiment": "dci", "seed": -4})") == "seed");
  CHECK(error_field(R"({"schema_version": 1, "experiment": "dci", "seed": 1, "colour": 3})") == "colour");
  CHECK(error_field(minimal("dci", R"({"bogus": 1})")) == "settings.bogus");
  CHECK(error_field(minimal("transport_forward", R"({"inputs": {"alpha": {"type": "triangular", "lo": 1, "hi": 2, "mode": "x"}}})")) ==
        "settings.inputs.alpha.mode");
  CHECK(error_field(minimal("transport_forward", R"({"inputs": {"alpha": {"type": "triangular", "lo": 1, "hi": 2, "mode": 3}}})")) ==
        "settings.inputs.alpha.mode");
  CHECK(error_field(minimal("transport_forward", R"({"inputs": {"u": {"type": "cauchy"}}})")) ==
        "settings.inputs.u.type");
  CHECK(error_field(minimal("transport_forward", R"({"n_samples": 1.5})")) == "settings.n_samples");
  CHECK(error_field(minimal("transport_forward", R"({"transport": {"nx": 100}})")) == "settings.transport");
  CHECK(error_field(minimal("poly_inadequate", R"({"steps": 10})")) == "settings.steps");
  CHECK(error_field(minimal("dci", R"({"dci": {"fit_n": 10}})")) == "settings.dci.fit_n");
  CHECK(error_field(minimal("gsa_generic", R"({"replicates": 1})")) == "settings.replicates");
  CHECK(error_field(minimal("gsa_generic", R"({"groups": [{"name": "g", "members": ["x1", "x9"]}]})")).rfind("settings.groups", 0) == 0);
}

TEST_CASE("densities round-trip through JSON") {
  Eigen::VectorXd mean(2);
  mean << 1.0, -2.0;
  Eigen::MatrixXd cov(2, 2);
  cov << 2.0, 0.5, 0.5, 1.0;
  Matrix emp(3, 2);
  emp << 1, 2, 3, 4, 5, 6;
  const std::vector<sampling::Density> ds = {
      sampling::Uniform{-1.0, 2.5},
      sampling::Normal{0.25, 3.0},
      sampling::LogNormal{-1.0, 0.5},
      sampling::TriangularUnitRange{1.0, 2.0, 1.25},
      sampling::MultivariateNormal{mean, cov},
      sampling::Hierarchical{sampling::Family::LogNormal, {sampling::Normal{0.0, 1.0}, sampling::Uniform{0.0, 0.5}}, 0.0, 1.0, 1.0},
      sampling::Empirical{emp},
      sampling::Kde{{0.1, 0.2, 0.4}, 0.05},
  };
  for (const auto& d : ds) {
    const auto j = density_to_json(d);
    CAPTURE(j.dump());
    const auto back = density_from_json(j, "d");
    CHECK(back.index() == d.index());
    CHECK(density_to_json(back) == j);
  }
  CHECK_THROWS_AS(density_from_json(Json{{"type", "uniform"}, {"lo", 0.0}}, "d"), ConfigError);
}

TEST_CASE("small runs are deterministic and every plot has its data") {
  for (const auto& [kind, doc] : testing::small_configs()) {
    CAPTURE(kind);
    const auto cfg = parse_config(doc);
    const auto a = run(cfg);
    const auto b = run(cfg);
    CHECK(files_of(a) == files_of(b));

    // Summary leads with the run identity and verdicts.
    std::vector<std::string> keys;
    for (const auto& [k, v] : a.summary.items()) keys.push_back(k);
    REQUIRE(keys.size() >= 4);
    CHECK(keys[0] == "experiment");
    CHECK(keys[1] == "seed");
    CHECK(keys[2] == "passed");
    CHECK(keys[3] == "verdicts");
    CHECK(a.summary["passed"] == a.passed());
    CHECK(a.summary["verdicts"].size() == a.verdicts.size());
    CHECK_FALSE(a.verdicts.empty());

    for (const auto& f : a.files) {
      if (f.name.ends_with(".svg")) {
        const auto stem = f.name.substr(0, f.name.size() - 4);
        CHECK_MESSAGE(a.find(stem + ".csv") != nullptr, f.name);
        CHECK(f.content.rfind("<svg", 0) == 0);
      }
    }
  }
}

TEST_CASE("outputs do not depend on the thread count") {
  const int before = kernels::max_threads();
  for (const auto& [kind, doc] : testing::small_configs()) {
    if (kind != "transport_forward" && kind != "gsa_generic" && kind != "dci") continue;
    CAPTURE(kind);
    const auto cfg = parse_config(doc);
    kernels::set_threads(1);
    const auto one = files_of(run(cfg));
    kernels::set_threads(3);
    const auto three = files_of(run(cfg));
    CHECK(one == three);
  }
  kernels::set_threads(before);
}

TEST_CASE("generic GSA recovers the analytic grouped indices") {
  // f = x1 + x2 + x1 x3, iid N(0, 1): Var f = 3, V_{g1} = 1, V_{g23} = 1,
  // interaction x1 x3 contributes 1 to both totals.
  const auto cfg = parse_config(minimal("gsa_generic", R"({"n": 40000, "replicates": 2})"));
  const auto r = run(cfg);
  const auto& idx = r.summary["indices"];
  REQUIRE(idx.size() == 2);
  for (const auto& e : idx) {
    CHECK(std::abs(e["S_main"].get<double>() - 1.0 / 3.0) < 0.03);
    CHECK(std::abs(e["T_total"].get<double>() - 2.0 / 3.0) < 0.03);
  }
  CHECK(r.passed());
}

TEST_CASE("histogram CSV holds the plotted counts") {
  const auto cfg = parse_config(testing::small_configs()[2].second);
  const auto r = run(cfg);
  const auto* hist = r.find("qoi_histogram.csv");
  REQUIRE(hist != nullptr);
  const auto counts = csv_column(hist->content, 2);
  const auto lo = csv_column(hist->content, 0), hi = csv_column(hist->content, 1);
  double total = 0.0;
  for (const auto& c : counts) total += std::stod(c);
  CHECK(total == doctest::Approx(60.0));
  for (std::size_t i = 1; i < lo.size(); ++i) CHECK(lo[i] == hi[i - 1]);
  // Each count appears in the SVG as a bar.
  const auto* svg = r.find("qoi_histogram.svg");
  REQUIRE(svg != nullptr);
  CHECK(svg->content.find("</svg>") != std::string::npos);
}

TEST_CASE("artifact directories: manifest, overwrite rules and atomic writes") {
  TempDir tmp("artifacts");
  const auto cfg = parse_config(minimal("gsa_generic", R"({"n": 500, "replicates": 2})"));
  const auto r = run(cfg);
  const auto out = (tmp.path / "run").string();
  artifacts::write(cfg, r, out, 1);

  const auto man = Json::parse(io::read_text(out + "/manifest.json"));
  CHECK(man["experiment"] == "gsa_generic");
  CHECK(man["seed"] == 3);
  CHECK(man["passed"] == r.passed());
  REQUIRE(man["files"].size() == r.files.size());
  for (const auto& f : man["files"]) {
    const auto content = io::read_text(out + "/" + f["name"].get<std::string>());
    CHECK(f["bytes"] == content.size());
    CHECK(f["fnv1a"] == artifacts::content_hash(content));
  }
  CHECK(parse_config(man["config"].dump()).seed == cfg.seed);

  // The hash pins the experiment, not where it was written or how many threads ran it.
  auto moved = cfg;
  moved.output = "elsewhere";
  CHECK(artifacts::manifest(moved, r, 4)["config_hash"] == man["config_hash"]);
  auto reseeded = cfg;
  reseeded.seed = 4;
  CHECK(artifacts::manifest(reseeded, r, 1)["config_hash"] != man["config_hash"]);

  // A previous run may be replaced.
  CHECK_NOTHROW(artifacts::write(cfg, r, out, 1));

  // Foreign content is never overwritten.
  const auto foreign = tmp.path / "foreign";
  fs::create_directories(foreign);
  io::write_text((foreign / "notes.txt").string(), "keep");
  CHECK_THROWS_AS(artifacts::write(cfg, r, foreign.string(), 1), ArgumentError);
  CHECK(io::read_text((foreign / "notes.txt").string()) == "keep");

  // A failing write leaves neither the target nor the staging directory behind.
  Result bad = r;
  bad.add("no_such_dir/x.csv", "1\n");
  const auto failed = tmp.path / "failed";
  CHECK_THROWS(artifacts::write(cfg, bad, failed.string(), 1));
  CHECK_FALSE(fs::exists(failed));
  CHECK_FALSE(fs::exists(tmp.path / ".failed.partial"));
}

TEST_CASE("reports rank groups and are reproducible") {
  TempDir tmp("report");
  CHECK_THROWS_AS(artifacts::report(tmp.path.string()), ArgumentError);

  const auto cfg = parse_config(minimal(
      "gsa_generic",
      R"({"model": [{"coef": 3, "powers": {"x2": 1}}, {"coef": 1, "powers": {"x1": 1}}], "n": 4000, "replicates": 2})"));
  const auto a = (tmp.path / "a").string(), b = (tmp.path / "b").string();
  artifacts::write(cfg, run(cfg), a, 1);
  artifacts::write(cfg, run(cfg), b, 2);
  const auto ra = artifacts::report(a), rb = artifacts::report(b);
  CHECK(ra.text == rb.text);
  CHECK(ra.json.dump() == rb.json.dump());

  const auto& ranking = ra.json["rankings"]["indices"];
  REQUIRE(ranking.size() == 2);
  CHECK(ranking[0]["group"] == "g23");
  CHECK(ranking[1]["group"] == "g1");
  CHECK(ranking[0]["T_total"].get<double>() >= ranking[1]["T_total"].get<double>());
  CHECK(ra.text.find("groups by T_total") != std::string::npos);
}

TEST_CASE("robustness reports list every bound with its slack") {
  TempDir tmp("robust");
  const auto configs = testing::small_configs();
  const auto it = std::find_if(configs.begin(), configs.end(), [](const auto& p) { return p.first == "transport_robustness"; });
  const auto cfg = parse_config(it->second);
  const auto r = run(cfg);
  const auto dir = (tmp.path / "r").string();
  artifacts::write(cfg, r, dir, 1);
  const auto rep = artifacts::report(dir);
  REQUIRE(rep.json.contains("bounds"));
  const auto& groups = r.summary["robustness"]["groups"];
  CHECK(rep.json["bounds"].size() == 2 * groups.size());
  for (const auto& b : rep.json["bounds"])
    CHECK(b["passed"].get<bool>() == (b["min_slack"].get<double>() >= 0.0));
  CHECK(rep.text.find("robustness bounds") != std::string::npos);
}
