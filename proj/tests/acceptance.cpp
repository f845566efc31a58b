// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. All runs use the fixed seed below; tolerances are
// pinned here and never derived from the observed values.
//
// Usage: acceptance [--out DIR] [--only N[,N...]]
//   --out   also write each experiment's artifact directory under DIR
//   --only  run a subset of criteria

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mfu/artifacts.hpp"
#include "mfu/experiments.hpp"
#include "mfu/gsa.hpp"
#include "mfu/kernels.hpp"
#include "small_configs.hpp"

using namespace mfu;
using namespace mfu::experiments;

namespace {

constexpr std::uint64_t kSeed = 12345;

// Criterion 1
constexpr std::size_t kAnovaN = 50000;
constexpr double kAnovaTol = 0.02;
constexpr double kAnovaSeconds = 10.0;
// Criterion 2
constexpr std::size_t kOracleN = 1000;
constexpr double kOracleRelTol = 0.01;
// Criterion 3
constexpr std::size_t kIdentityReplicates = 20;
constexpr double kIdentitySd = 3.0;
// Runtime limits
constexpr double kPolySeconds = 120.0;
constexpr double kForwardSeconds = 60.0;
constexpr double kRobustSeconds = 600.0;
constexpr double kCalibrateSeconds = 1800.0;

struct Line {
  int id;
  bool passed;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Timed {
  Result result;
  double seconds;
};

std::string out_dir;

Timed run_default(const std::string& kind) {
  const auto cfg = parse_config(R"({"schema_version": 1, "experiment": ")" + kind + R"(", "seed": )" +
                                std::to_string(kSeed) + "}");
  const auto t0 = std::chrono::steady_clock::now();
  Timed t{run(cfg), 0.0};
  t.seconds = seconds_since(t0);
  if (!out_dir.empty()) artifacts::write(cfg, t.result, out_dir + "/" + kind, kernels::max_threads());
  return t;
}

const Verdict& verdict(const Result& r, const std::string& name) {
  for (const auto& v : r.verdicts)
    if (v.name == name) return v;
  throw std::runtime_error("missing verdict " + name);
}

// All named verdicts pass; detail lists them.
std::pair<bool, std::string> verdicts(const Result& r, const std::vector<std::string>& names) {
  bool ok = true;
  std::string d;
  for (const auto& n : names) {
    const auto& v = verdict(r, n);
    ok = ok && v.passed;
    d += (d.empty() ? "" : "; ") + std::string(v.passed ? "" : "FAILED ") + v.detail;
  }
  return {ok, d};
}

gsa::GroupedParameterSpace anova_space() {
  std::vector<gsa::ParameterBlock> blocks;
  for (const char* nm : {"x1", "x2", "x3"}) blocks.push_back({{nm}, sampling::Normal{0.0, 1.0}});
  return gsa::make_space(blocks, {{"g1", {"x1"}}, {"g23", {"x2", "x3"}}});
}

double anova_f(std::span<const double> x) { return x[0] + x[1] + x[0] * x[2]; }

// f = x1 + x2 + x1 x3, iid N(0, 1). Var f = 3. E[f | x1] = x1 and
// E[f | x2, x3] = x2, so both main effects are 1/3. Var(f | x2, x3) = (1 + x3)^2
// and Var(f | x1) = 1 + x1^2, both with mean 2, so both totals are 2/3.
const std::map<std::string, std::pair<double, double>> kAnova = {{"g1", {1.0 / 3.0, 2.0 / 3.0}},
                                                                 {"g23", {1.0 / 3.0, 2.0 / 3.0}}};

Line criterion1() {
  const auto space = anova_space();
  const auto t0 = std::chrono::steady_clock::now();
  const auto plan = gsa::build_pick_freeze(space, kAnovaN, kSeed);
  const auto est = gsa::estimate(plan, gsa::evaluate_plan(plan, anova_f));
  const double secs = seconds_since(t0);
  double worst = 0.0;
  std::string d;
  for (const auto& e : est) {
    const auto [s, t] = kAnova.at(e.group);
    worst = std::max({worst, std::abs(e.s_main[0] - s), std::abs(e.t_total[0] - t)});
    d += e.group + " S " + fmt(e.s_main[0]) + " T " + fmt(e.t_total[0]) + ", ";
  }
  d += "max error " + fmt(worst) + " (tol " + fmt(kAnovaTol) + "), " + fmt(secs) + " s (limit " + fmt(kAnovaSeconds) + ")";
  return {1, worst <= kAnovaTol && secs < kAnovaSeconds, d};
}

// E[Var(f | x_~u)]: outer loop over complement rows, inner loop over u rows.
double double_loop_total(const kernels::RowModel& f, const SampleMatrix& outer, const SampleMatrix& inner,
                         const std::vector<std::size_t>& u) {
  double acc = 0.0;
  std::vector<double> x(outer.cols()), vals(inner.rows());
  for (std::size_t i = 0; i < outer.rows(); ++i) {
    for (std::size_t j = 0; j < inner.rows(); ++j) {
      for (std::size_t c = 0; c < x.size(); ++c) x[c] = outer.row(i)[c];
      for (auto c : u) x[c] = inner.row(j)[c];
      vals[j] = f(x);
    }
    double m = 0.0;
    for (double v : vals) m += v;
    m /= static_cast<double>(vals.size());
    double s = 0.0;
    for (double v : vals) s += (v - m) * (v - m);
    acc += s / static_cast<double>(vals.size() - 1);
  }
  return acc / static_cast<double>(outer.rows());
}

Line criterion2() {
  const kernels::RowModel f = [](std::span<const double> x) { return 1.0 + 2.0 * x[0] + x[1] * x[1] + 0.5 * x[0] * x[2]; };
  std::vector<gsa::ParameterBlock> blocks;
  for (const char* nm : {"x1", "x2", "x3"}) blocks.push_back({{nm}, sampling::Uniform{0.0, 1.0}});
  const auto space = gsa::make_space(blocks, {{"u", {"x1"}}, {"v", {"x2", "x3"}}});
  const auto plan = gsa::build_pick_freeze(space, kOracleN, kSeed);
  const auto est = gsa::estimate(plan, gsa::evaluate_plan(plan, f));
  const auto outer = gsa::sample_space(space, kOracleN, derive_seed(kSeed, 1));
  const auto inner = gsa::sample_space(space, kOracleN, derive_seed(kSeed, 2));
  const double oracle = double_loop_total(f, outer, inner, {0});
  const double pf = est[0].total_numerator[0];
  const double rel = std::abs(pf - oracle) / oracle;
  return {2, rel <= kOracleRelTol,
          "pick-freeze " + fmt(pf) + " vs double loop " + fmt(oracle) + ", relative " + fmt(rel) + " (tol " +
              fmt(kOracleRelTol) + ")"};
}

Line criterion3() {
  const auto reps = gsa::replicate_indices(anova_space(), anova_f, kAnovaN, kIdentityReplicates, kSeed);
  bool ok = true;
  std::string d;
  for (std::size_t g = 0; g < reps.size(); ++g) {
    const auto& u = reps[g];
    const auto& rest = reps[1 - g];
    const auto t = u.t_total_summary(), s = rest.s_main_summary();
    const double sd = std::max(t.sd, s.sd);
    const double gap = std::abs(t.mean - (1.0 - s.mean));
    ok = ok && gap <= kIdentitySd * sd;
    d += (d.empty() ? "" : ", ") + u.group + " |T - (1 - S_rest)| " + fmt(gap) + " vs " + fmt(kIdentitySd) + " sd " +
         fmt(kIdentitySd * sd);
  }
  return {3, ok, d + " over " + std::to_string(kIdentityReplicates) + " replicates"};
}

std::string runtime(double secs, double limit) { return ", " + fmt(secs) + " s (limit " + fmt(limit) + ")"; }

Line criterion4() {
  const auto t = run_default("poly_inadequate");
  auto [ok, d] = verdicts(t.result, {"coverage_below_max", "band_excludes_truth_at_check_x"});
  return {4, ok && t.seconds < kPolySeconds, d + runtime(t.seconds, kPolySeconds)};
}

std::vector<Line> criteria5and6() {
  const auto t = run_default("poly_hierarchical");
  auto [ok5, d5] = verdicts(t.result, {"coverage_at_least_min", "credible_c0_contains_1", "credible_c1_contains_1"});
  auto [ok6, d6] = verdicts(t.result, {"mfu_numerator_at_least_model", "predictive_variance_reduced"});
  return {{5, ok5, d5}, {6, ok6, d6}};
}

Line criterion7() {
  const auto t = run_default("transport_forward");
  auto [ok, d] = verdicts(t.result, {"all_qoi_positive"});
  const bool n_ok = t.result.summary["qoi"]["n"].get<std::size_t>() == 1000;
  return {7, ok && n_ok && t.seconds < kForwardSeconds, d + runtime(t.seconds, kForwardSeconds)};
}

Line criterion8() {
  const auto t = run_default("transport_robustness");
  auto [ok, d] = verdicts(t.result, {"rescaled_variance_near_one", "bounds_hold", "mean_differences_small"});
  return {8, ok && t.seconds < kRobustSeconds, d + runtime(t.seconds, kRobustSeconds)};
}

Line criterion9() {
  const auto t = run_default("dci");
  auto [ok, d] = verdicts(t.result, {"ks_within_max", "identity_acceptance"});
  return {9, ok, d};
}

Line criterion10() {
  const auto t = run_default("transport_calibrate");
  auto [ok, d] = verdicts(t.result, {"posterior_variance_reduced", "negative_incidence_reduced", "mfu_numerator_dominates"});
  return {10, ok && t.seconds < kCalibrateSeconds, d + runtime(t.seconds, kCalibrateSeconds)};
}

std::map<std::string, std::string> csv_files(const Result& r) {
  std::map<std::string, std::string> m;
  for (const auto& f : r.files)
    if (f.name.ends_with(".csv")) m[f.name] = f.content;
  return m;
}

// Every experiment at reduced size, plus the two cheapest at full size, run
// twice with different thread counts; every CSV must match byte for byte.
Line criterion11() {
  auto configs = testing::small_configs();
  for (const char* kind : {"poly_inadequate", "transport_forward"})
    configs.emplace_back(std::string(kind) + " (defaults)", R"({"schema_version": 1, "experiment": ")" +
                                                                std::string(kind) + R"(", "seed": )" +
                                                                std::to_string(kSeed) + "}");
  const int before = kernels::max_threads();
  bool ok = true;
  std::size_t files = 0;
  std::string bad;
  for (const auto& [name, doc] : configs) {
    const auto cfg = parse_config(doc);
    kernels::set_threads(1);
    const auto a = csv_files(run(cfg));
    kernels::set_threads(2);
    const auto b = csv_files(run(cfg));
    files += a.size();
    if (a != b || a.empty()) {
      ok = false;
      bad += " " + name;
    }
  }
  kernels::set_threads(before);
  return {11, ok,
          std::to_string(configs.size()) + " configs, " + std::to_string(files) + " CSV files compared" +
              (ok ? ", all identical" : ", mismatched:" + bad)};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--out" && i + 1 < argc) {
      out_dir = argv[++i];
    } else if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string tok;
      while (std::getline(ss, tok, ',')) only.insert(std::stoi(tok));
    } else {
      std::fprintf(stderr, "usage: acceptance [--out DIR] [--only N[,N...]]\n");
      return 2;
    }
  }
  const auto want = [&](std::initializer_list<int> ids) {
    if (only.empty()) return true;
    return std::any_of(ids.begin(), ids.end(), [&](int id) { return only.contains(id); });
  };

  std::vector<std::pair<std::vector<int>, std::function<std::vector<Line>()>>> plan = {
      {{1}, [] { return std::vector<Line>{criterion1()}; }},
      {{2}, [] { return std::vector<Line>{criterion2()}; }},
      {{3}, [] { return std::vector<Line>{criterion3()}; }},
      {{4}, [] { return std::vector<Line>{criterion4()}; }},
      {{5, 6}, [] { return criteria5and6(); }},
      {{7}, [] { return std::vector<Line>{criterion7()}; }},
      {{8}, [] { return std::vector<Line>{criterion8()}; }},
      {{9}, [] { return std::vector<Line>{criterion9()}; }},
      {{10}, [] { return std::vector<Line>{criterion10()}; }},
      {{11}, [] { return std::vector<Line>{criterion11()}; }},
  };

  std::printf("acceptance: seed %llu, %d thread(s)\n", static_cast<unsigned long long>(kSeed), kernels::max_threads());
  std::fflush(stdout);
  int failed = 0;
  for (const auto& [ids, fn] : plan) {
    bool any = false;
    for (int id : ids) any = any || want({id});
    if (!any) continue;
    std::vector<Line> lines;
    try {
      lines = fn();
    } catch (const std::exception& e) {
      for (int id : ids) lines.push_back({id, false, std::string("error: ") + e.what()});
    }
    for (const auto& l : lines) {
      if (!only.empty() && !only.contains(l.id)) continue;
      failed += !l.passed;
      std::printf("%s criterion %d: %s\n", l.passed ? "PASS" : "FAIL", l.id, l.detail.c_str());
      std::fflush(stdout);
    }
  }
  std::printf("acceptance: %d failed\n", failed);
  return failed == 0 ? 0 : 1;
}
