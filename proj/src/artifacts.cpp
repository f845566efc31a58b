#include "mfu/artifacts.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "mfu/errors.hpp"
#include "mfu/io.hpp"
#include "mfu/rng.hpp"

namespace mfu::artifacts {

namespace fs = std::filesystem;
using experiments::Json;

std::string content_hash(const std::string& s) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(s)));
  return buf;
}

Json manifest(const experiments::ExperimentConfig& cfg, const experiments::Result& r, int threads) {
  const auto resolved = experiments::to_json(cfg);
  Json m;
  m["tool"] = "mfu";
  m["version"] = kVersion;
  m["schema_version"] = experiments::kSchemaVersion;
  m["experiment"] = experiments::to_string(cfg.kind);
  m["seed"] = cfg.seed;
  auto hashed = resolved;
  hashed.erase("output");
  m["config_hash"] = content_hash(hashed.dump());
  m["threads"] = threads;
  m["passed"] = r.passed();
  auto& files = m["files"] = Json::array();
  for (const auto& f : r.files)
    files.push_back({{"name", f.name}, {"bytes", f.content.size()}, {"fnv1a", content_hash(f.content)}});
  m["config"] = resolved;
  return m;
}

void write(const experiments::ExperimentConfig& cfg, const experiments::Result& r, const std::string& dir,
           int threads) {
  const fs::path out = fs::absolute(dir).lexically_normal();
  if (fs::exists(out)) {
    if (!fs::is_directory(out)) throw ArgumentError(out.string() + " exists and is not a directory");
    if (!fs::is_empty(out) && !fs::exists(out / "manifest.json"))
      throw ArgumentError(out.string() + " is not empty and holds no previous run; refusing to overwrite");
  }
  const fs::path tmp = out.parent_path() / ("." + out.filename().string() + ".partial");
  fs::remove_all(tmp);
  try {
    fs::create_directories(tmp);
    for (const auto& f : r.files) io::write_text((tmp / f.name).string(), f.content);
    io::write_text((tmp / "summary.json").string(), r.summary.dump(2) + "\n");
    io::write_text((tmp / "manifest.json").string(), manifest(cfg, r, threads).dump(2) + "\n");
    fs::remove_all(out);
    fs::rename(tmp, out);
  } catch (...) {
    std::error_code ec;
    fs::remove_all(tmp, ec);
    throw;
  }
}

namespace {

Json rank(const Json& indices) {
  std::vector<std::pair<std::string, double>> v;
  for (const auto& e : indices) v.emplace_back(e["group"].get<std::string>(), e["T_total"].get<double>());
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  Json a = Json::array();
  for (const auto& [g, t] : v) a.push_back({{"group", g}, {"T_total", t}});
  return a;
}

bool is_index_table(const Json& v) {
  return v.is_array() && !v.empty() && v[0].is_object() && v[0].contains("group") && v[0].contains("S_main") && v[0].contains("T_total");
}

}  // namespace

Report report(const std::string& dir) {
  const fs::path d(dir);
  if (!fs::exists(d / "manifest.json")) throw ArgumentError("no manifest.json in " + dir);
  const auto man = Json::parse(io::read_text((d / "manifest.json").string()));
  const auto sum = Json::parse(io::read_text((d / "summary.json").string()));

  Report rep;
  Json& j = rep.json;
  j["experiment"] = man["experiment"];
  j["seed"] = man["seed"];
  j["config_hash"] = man["config_hash"];
  j["version"] = man["version"];
  j["passed"] = sum["passed"];
  j["verdicts"] = sum["verdicts"];
  Json rankings = Json::object();
  std::function<void(const Json&, const std::string&)> scan = [&](const Json& v, const std::string& key) {
    if (is_index_table(v)) {
      rankings[key] = rank(v);
    } else if (v.is_object()) {
      for (const auto& [k, x] : v.items()) scan(x, key.empty() ? k : key + "." + k);
    }
  };
  scan(sum, "");
  j["rankings"] = rankings;
  if (sum.contains("robustness")) {
    const auto& rb = sum["robustness"];
    Json bounds = Json::array();
    for (const auto& g : rb["groups"]) {
      bounds.push_back({{"group", g["group"]},
                        {"bound", "main"},
                        {"passed", g["min_main_slack"].get<double>() >= 0.0},
                        {"min_slack", g["min_main_slack"]}});
      bounds.push_back({{"group", g["group"]},
                        {"bound", "total"},
                        {"passed", g["min_total_slack"].get<double>() >= 0.0},
                        {"min_slack", g["min_total_slack"]}});
    }
    j["bounds"] = bounds;
    j["eps1_mean"] = rb["eps1_mean"];
    j["eps2_mean"] = rb["eps2_mean"];
    j["var_q_rescaled_mean"] = rb["var_q_rescaled_mean"];
  }

  std::ostringstream t;
  t << "experiment " << j["experiment"].get<std::string>() << "  seed " << j["seed"].dump() << "  config "
    << j["config_hash"].get<std::string>() << "\n";
  t << "overall: " << (j["passed"].get<bool>() ? "PASS" : "FAIL") << "\n\nverdicts\n";
  for (const auto& v : j["verdicts"])
    t << "  " << (v["passed"].get<bool>() ? "PASS" : "FAIL") << "  " << v["name"].get<std::string>() << "  ("
      << v["detail"].get<std::string>() << ")\n";
  for (const auto& [key, r] : rankings.items()) {
    t << "\ngroups by T_total: " << key << "\n";
    std::size_t i = 1;
    for (const auto& e : r) t << "  " << i++ << ". " << e["group"].get<std::string>() << "  " << io::fmt(e["T_total"].get<double>()) << "\n";
  }
  if (j.contains("bounds")) {
    t << "\nrobustness bounds\n";
    for (const auto& b : j["bounds"])
      t << "  " << (b["passed"].get<bool>() ? "PASS" : "FAIL") << "  " << b["bound"].get<std::string>() << " "
        << b["group"].get<std::string>() << "  min slack " << io::fmt(b["min_slack"].get<double>()) << "\n";
  }
  rep.text = t.str();
  return rep;
}

}  // namespace mfu::artifacts
