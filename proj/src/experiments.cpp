#include "mfu/experiments.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "experiments_detail.hpp"
#include "mfu/errors.hpp"
#include "mfu/io.hpp"

namespace mfu::experiments {

void Result::add(std::string name, std::string content) { files.push_back({std::move(name), std::move(content)}); }

void Result::add_plot(const std::string& stem, std::string csv, std::string svg) {
  add(stem + ".csv", std::move(csv));
  add(stem + ".svg", std::move(svg));
}

const File* Result::find(const std::string& name) const {
  for (const auto& f : files)
    if (f.name == name) return &f;
  return nullptr;
}

bool Result::passed() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.passed; });
}

void Result::check(std::string name, bool ok, std::string detail) {
  verdicts.push_back({std::move(name), ok, std::move(detail)});
}

Result run(const ExperimentConfig& cfg) {
  validate(cfg);
  Result r = std::visit(
      [&](const auto& s) -> Result {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, PolyInadequateConfig>) return run_poly_inadequate(s, cfg.seed);
        else if constexpr (std::is_same_v<T, PolyHierarchicalConfig>) return run_poly_hierarchical(s, cfg.seed);
        else if constexpr (std::is_same_v<T, TransportForwardConfig>) return run_transport_forward(s, cfg.seed);
        else if constexpr (std::is_same_v<T, TransportCalibrateConfig>) return run_transport_calibrate(s, cfg.seed);
        else if constexpr (std::is_same_v<T, TransportRobustnessConfig>) return run_transport_robustness(s, cfg.seed);
        else if constexpr (std::is_same_v<T, GsaGenericConfig>) return run_gsa_generic(s, cfg.seed);
        else return run_dci(s, cfg.seed);
      },
      cfg.settings);
  r.kind = cfg.kind;
  Json verdicts = Json::array();
  for (const auto& v : r.verdicts) verdicts.push_back({{"name", v.name}, {"passed", v.passed}, {"detail", v.detail}});
  Json summary;
  summary["experiment"] = to_string(cfg.kind);
  summary["seed"] = cfg.seed;
  summary["passed"] = r.passed();
  summary["verdicts"] = std::move(verdicts);
  for (auto& [k, v] : r.summary.items()) summary[k] = v;
  r.summary = std::move(summary);
  return r;
}

Result run_gsa_generic(const GsaGenericConfig& c, std::uint64_t seed) {
  std::vector<std::pair<std::string, std::vector<std::string>>> groups;
  for (const auto& g : c.groups) groups.emplace_back(g.name, g.members);
  const auto space = gsa::make_space(c.blocks, groups);
  std::vector<std::vector<std::pair<std::size_t, double>>> terms;
  for (const auto& t : c.model) {
    terms.emplace_back();
    for (const auto& [name, p] : t.powers) terms.back().emplace_back(space.column(name), p);
  }
  std::vector<double> coefs;
  for (const auto& t : c.model) coefs.push_back(t.coef);
  const kernels::RowModel model = [&](std::span<const double> x) {
    double y = 0.0;
    for (std::size_t t = 0; t < terms.size(); ++t) {
      double v = coefs[t];
      for (const auto& [col, p] : terms[t]) v *= p == 1.0 ? x[col] : std::pow(x[col], p);
      y += v;
    }
    return y;
  };
  const auto est = gsa::replicate_indices(space, model, c.n, c.replicates, detail::stream(seed, detail::kGsa));

  Result r;
  r.add("indices.csv", gsa::to_csv(est));
  detail::add_index_plot(r, "indices_plot", "Grouped Sobol' indices", {{"model", &est}});
  r.summary["n"] = c.n;
  r.summary["replicates"] = c.replicates;
  r.summary["indices"] = detail::sobol_json(est);
  r.summary["ranking"] = detail::ranking_json(est);
  bool finite = true;
  for (const auto& e : est)
    for (double v : e.total_variance) finite = finite && std::isfinite(v) && v > 0.0;
  r.check("positive_total_variance", finite, "total variance estimate positive in every replicate");
  return r;
}

namespace detail {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

sampling::ScalarDensity scalar(const sampling::Density& d) {
  return std::visit(
      [](const auto& x) -> sampling::ScalarDensity {
        if constexpr (std::is_convertible_v<decltype(x), sampling::ScalarDensity>) return x;
        else throw ConfigError("density", "expected a scalar density");
      },
      d);
}

Json sobol_json(const std::vector<gsa::SobolEstimate>& est) {
  Json a = Json::array();
  for (const auto& e : est) {
    const auto s = e.s_main_summary(), t = e.t_total_summary();
    a.push_back({{"group", e.group},
                 {"S_main", s.mean},
                 {"S_main_sd", s.sd},
                 {"T_total", t.mean},
                 {"T_total_sd", t.sd},
                 {"main_numerator", e.main_numerator_summary().mean},
                 {"total_numerator", e.total_numerator_summary().mean},
                 {"total_numerator_sd", e.total_numerator_summary().sd},
                 {"total_variance", e.total_variance_summary().mean}});
  }
  return a;
}

Json ranking_json(const std::vector<gsa::SobolEstimate>& est) {
  std::vector<std::size_t> idx(est.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return est[a].t_total_summary().mean > est[b].t_total_summary().mean;
  });
  Json a = Json::array();
  for (std::size_t i : idx) a.push_back({{"group", est[i].group}, {"T_total", est[i].t_total_summary().mean}});
  return a;
}

const gsa::SobolEstimate& group(const std::vector<gsa::SobolEstimate>& est, const std::string& name) {
  for (const auto& e : est)
    if (e.group == name) return e;
  throw ArgumentError("no group named '" + name + "'");
}

void add_index_plot(Result& r, const std::string& stem, const std::string& title,
                    const std::vector<std::pair<std::string, const std::vector<gsa::SobolEstimate>*>>& sets) {
  std::vector<std::string> categories;
  for (const auto& e : *sets.front().second) categories.push_back(e.group);
  std::ostringstream csv;
  csv << "group";
  for (const auto& [label, est] : sets)
    csv << ",S_main_" << label << ",S_main_sd_" << label << ",T_total_" << label << ",T_total_sd_" << label;
  csv << '\n';
  std::vector<svg::BarSeries> bars;
  for (const auto& [label, est] : sets) {
    svg::BarSeries s{"S " + label, {}, {}}, t{"T " + label, {}, {}};
    for (const auto& e : *est) {
      s.values.push_back(e.s_main_summary().mean);
      s.errors.push_back(e.s_main_summary().sd);
      t.values.push_back(e.t_total_summary().mean);
      t.errors.push_back(e.t_total_summary().sd);
    }
    bars.push_back(std::move(s));
    bars.push_back(std::move(t));
  }
  for (std::size_t g = 0; g < categories.size(); ++g) {
    csv << categories[g];
    for (std::size_t b = 0; b < bars.size(); ++b) csv << ',' << io::fmt(bars[b].values[g]) << ',' << io::fmt(bars[b].errors[g]);
    csv << '\n';
  }
  r.add_plot(stem, csv.str(), svg::bar_chart(title, categories, bars));
}

void add_histograms(Result& r, const std::string& stem, const std::string& title, const std::string& xlabel,
                    const std::vector<std::pair<std::string, std::span<const double>>>& samples, std::size_t bins,
                    const std::vector<svg::Marker>& markers) {
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& [name, v] : samples)
    for (double x : v)
      if (std::isfinite(x)) lo = std::min(lo, x), hi = std::max(hi, x);
  if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
  if (hi <= lo) hi = lo + (lo == 0.0 ? 1.0 : 1e-6 * std::abs(lo));
  std::vector<double> edges(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  edges.back() = hi;
  std::vector<std::pair<std::string, svg::Histogram>> hists;
  io::Table t;
  t.add("bin_lo", std::vector<double>(edges.begin(), edges.end() - 1));
  t.add("bin_hi", std::vector<double>(edges.begin() + 1, edges.end()));
  for (const auto& [name, v] : samples) {
    hists.emplace_back(name, svg::histogram(v, edges));
    t.add("count_" + name, hists.back().second.counts);
  }
  r.add_plot(stem, t.csv(), svg::histogram_plot(title, xlabel, hists, markers));
}

Json stats_json(const bayes::PushforwardStats& s) {
  return {{"n", s.values.size()}, {"mean", s.mean}, {"variance", s.variance}, {"q025", s.q025}, {"q05", s.q05},
          {"q50", s.q50},         {"q95", s.q95},   {"q975", s.q975},         {"min", s.min},   {"negative_fraction", s.negative_fraction}};
}

Json chain_json(const bayes::Chain& c) {
  Json j;
  j["steps"] = c.steps;
  j["burn_in"] = c.burn_in;
  j["thin"] = c.thin;
  j["retained"] = c.samples.rows();
  j["acceptance_rate"] = c.acceptance_rate;
  j["burn_in_acceptance_rate"] = c.burn_in_acceptance_rate;
  Json m = Json::object();
  for (std::size_t k = 0; k < c.samples.cols(); ++k) {
    const auto col = c.samples.column(k);
    m[c.samples.names[k]] = {{"mean", sampling::mean(col)},
                             {"sd", std::sqrt(sampling::variance(col))},
                             {"q025", sampling::empirical_quantile(col, 0.025)},
                             {"q975", sampling::empirical_quantile(col, 0.975)}};
  }
  j["marginals"] = std::move(m);
  return j;
}

std::pair<double, double> credible_interval(const SampleMatrix& s, const std::string& name, double lo_q, double hi_q) {
  const auto col = s.column(s.index_of(name));
  return {sampling::empirical_quantile(col, lo_q), sampling::empirical_quantile(col, hi_q)};
}

}  // namespace detail
}  // namespace mfu::experiments
