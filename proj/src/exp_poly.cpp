#include <cmath>
#include <numeric>
#include <sstream>

#include "experiments_detail.hpp"
#include "mfu/bayes.hpp"
#include "mfu/errors.hpp"
#include "mfu/io.hpp"
#include "mfu/kernels.hpp"
#include "mfu/poly.hpp"

namespace mfu::experiments {

using namespace detail;

namespace {

bayes::ParamSpec logit_spec(const std::string& name, const sampling::Density& d) {
  const auto& u = std::get<sampling::Uniform>(d);
  return {name, bayes::Transform::Logit, u.lo, u.hi};
}

std::vector<double> nodes_with(std::vector<double> x, double extra) {
  x.push_back(extra);
  return x;
}

// Predictive band plot over the data locations with the data and the truth.
void add_band_plot(Result& r, const std::string& stem, const std::string& title, const poly::Dataset& data,
                   const bayes::Bands& b) {
  std::vector<double> truth;
  for (double x : data.x) truth.push_back(poly::evaluate(poly::Model::Truth, {}, x));
  io::Table t;
  t.add("x", data.x);
  t.add("data", data.d);
  t.add("truth", truth);
  t.add("lower", std::vector<double>(b.lower.begin(), b.lower.begin() + data.x.size()));
  t.add("median", std::vector<double>(b.median.begin(), b.median.begin() + data.x.size()));
  t.add("upper", std::vector<double>(b.upper.begin(), b.upper.begin() + data.x.size()));
  const svg::Band band{"95% predictive", data.x, t.columns[3], t.columns[5]};
  r.add_plot(stem, t.csv(),
             svg::line_plot(title, "x", "y",
                            {{"data", data.x, data.d, false},
                             {"truth", data.x, truth, true},
                             {"predictive median", data.x, t.columns[4], false}},
                            {band}));
}

double band_coverage(const bayes::Bands& b, std::span<const double> d) {
  bayes::Bands head;
  head.lower.assign(b.lower.begin(), b.lower.begin() + d.size());
  head.upper.assign(b.upper.begin(), b.upper.begin() + d.size());
  return bayes::coverage(head, d);
}

}  // namespace

Result run_poly_inadequate(const PolyInadequateConfig& c, std::uint64_t seed) {
  const auto data = poly::generate_data(c.n_data, c.noise_sd, stream(seed, kData));
  const bayes::NoiseModel noise{bayes::NoiseModel::Kind::GaussianAdditive, c.noise_sd};
  const auto prior_c0 = scalar(c.c0), prior_c1 = scalar(c.c1);

  const bayes::LogPosterior lp(
      {logit_spec("c0", c.c0), logit_spec("c1", c.c1)},
      [&](std::span<const double> p) { return sampling::log_pdf(prior_c0, p[0]) + sampling::log_pdf(prior_c1, p[1]); },
      [&](std::span<const double> p) {
        const auto m = poly::evaluate(poly::Model::Linear, {p[0], p[1], {}, {}}, data.x);
        return bayes::log_likelihood(noise, data.d, m);
      });
  const auto& u0 = std::get<sampling::Uniform>(c.c0);
  const auto& u1 = std::get<sampling::Uniform>(c.c1);
  const std::vector<double> init{0.5 * (u0.lo + u0.hi), 0.5 * (u1.lo + u1.hi)};
  const auto chain = bayes::adaptive_metropolis(lp, init, c.steps, stream(seed, kChain));

  const auto grid = nodes_with(data.x, c.check_x);
  const bayes::GridModel model = [&](std::span<const double> p) {
    return poly::evaluate(poly::Model::Linear, {p[0], p[1], {}, {}}, grid);
  };
  const auto bands = bayes::predictive_bands(chain.samples.values, model, noise, stream(seed, kPredict), c.lower_q,
                                             c.upper_q);
  const double cov = band_coverage(bands, data.d);
  const double truth_x = poly::evaluate(poly::Model::Truth, {}, c.check_x);
  const double lo = bands.lower.back(), hi = bands.upper.back();

  Result r;
  r.add("data.csv", [&] {
    io::Table t;
    t.add("x", data.x);
    t.add("d", data.d);
    return t.csv();
  }());
  r.add("chain.csv", chain.to_csv());
  add_band_plot(r, "predictive", "Linear model posterior predictive", data, bands);
  for (const char* name : {"c0", "c1"}) {
    const auto col = chain.samples.column(chain.samples.index_of(name));
    add_histograms(r, std::string("posterior_") + name, std::string("Posterior of ") + name, name, {{"posterior", col}},
                   40);
  }

  r.summary["chain"] = chain_json(chain);
  r.summary["coverage"] = cov;
  r.summary["check_x"] = {{"x", c.check_x}, {"truth", truth_x}, {"lower", lo}, {"upper", hi}};
  r.summary["extrapolates"] = poly::extrapolates(std::span(&c.check_x, 1));
  r.check("coverage_below_max", cov < c.max_coverage,
          "coverage " + num(cov) + " < " + num(c.max_coverage));
  r.check("band_excludes_truth_at_check_x", truth_x < lo || truth_x > hi,
          "truth " + num(truth_x) + " vs band [" + num(lo) + ", " + num(hi) + "]");
  return r;
}

Result run_poly_hierarchical(const PolyHierarchicalConfig& c, std::uint64_t seed) {
  const auto data = poly::generate_data(c.n_data, c.noise_sd, stream(seed, kData));
  const bayes::NoiseModel noise{bayes::NoiseModel::Kind::GaussianAdditive, c.noise_sd};

  const sampling::Hierarchical h_c2{sampling::Family::LogNormal, {scalar(c.mu_c2), scalar(c.sigma_c2)}, 0, 1, 0.0};
  const sampling::Hierarchical h_alpha{sampling::Family::LogNormal, {scalar(c.mu_alpha), scalar(c.sigma_alpha)}, 0, 1,
                                       1.0};
  // Column order: c0, c1, mu_c2, sigma_c2, c2, mu_alpha, sigma_alpha, alpha.
  const std::vector<gsa::ParameterBlock> prior_blocks{{{"c0"}, c.c0},
                                                      {{"c1"}, c.c1},
                                                      {{"mu_c2", "sigma_c2", "c2"}, h_c2},
                                                      {{"mu_alpha", "sigma_alpha", "alpha"}, h_alpha}};
  constexpr std::size_t kC2 = 4, kAlpha = 7;

  const auto eval_row = [](std::span<const double> p, double x) {
    return p[0] + p[1] * x + p[kC2] * std::pow(x, p[kAlpha]);
  };
  const bayes::LogPosterior lp(
      {logit_spec("c0", c.c0),
       logit_spec("c1", c.c1),
       {"mu_c2", bayes::Transform::Identity},
       logit_spec("sigma_c2", c.sigma_c2),
       {"c2", bayes::Transform::Log, 0.0},
       {"mu_alpha", bayes::Transform::Identity},
       logit_spec("sigma_alpha", c.sigma_alpha),
       {"alpha", bayes::Transform::Log, 1.0}},
      [&](std::span<const double> p) {
        double s = 0.0;
        std::size_t off = 0;
        for (const auto& b : prior_blocks) {
          s += sampling::log_pdf(b.density, p.subspan(off, b.names.size()));
          off += b.names.size();
        }
        return s;
      },
      [&](std::span<const double> p) {
        std::vector<double> m(data.x.size());
        for (std::size_t i = 0; i < m.size(); ++i) m[i] = eval_row(p, data.x[i]);
        return bayes::log_likelihood(noise, data.d, m);
      });

  const auto m_c2 = sampling::moments(scalar(c.mu_c2)).mean, m_alpha = sampling::moments(scalar(c.mu_alpha)).mean;
  const auto mid = [](const sampling::Density& d) {
    const auto& u = std::get<sampling::Uniform>(d);
    return 0.5 * (u.lo + u.hi);
  };
  const std::vector<double> init{mid(c.c0),          mid(c.c1), m_c2, mid(c.sigma_c2), std::exp(m_c2),
                                 m_alpha, mid(c.sigma_alpha), 1.0 + std::exp(m_alpha)};
  const auto chain = bayes::adaptive_metropolis(lp, init, c.steps, stream(seed, kChain));

  // MFU parameters redrawn from their conditionals given the posterior hypers.
  Matrix post = chain.samples.values;
  const auto resample_seed = stream(seed, kResample);
  kernels::fill_rows(post, [&](std::size_t i, std::span<double> row) {
    Rng rng(derive_seed(resample_seed, i));
    row[kC2] = sampling::draw_conditional(h_c2, row.subspan(2, 2), rng);
    row[kAlpha] = sampling::draw_conditional(h_alpha, row.subspan(5, 2), rng);
  });
  const auto names = chain.samples.names;
  const auto prior = gsa::sample_space(gsa::make_space(prior_blocks, {{"all", names}}), c.prior_draws,
                                       stream(seed, kPrior));

  const auto grid = nodes_with(data.x, c.check_x);
  const bayes::GridModel model = [&](std::span<const double> p) {
    std::vector<double> y(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) y[i] = eval_row(p, grid[i]);
    return y;
  };
  const auto bands = bayes::predictive_bands(post, model, noise, stream(seed, kPredict), c.lower_q, c.upper_q);
  const auto prior_bands = bayes::predictive_bands(prior.values, model, noise, stream(seed, kPushPrior), c.lower_q,
                                                   c.upper_q);
  const double cov = band_coverage(bands, data.d);
  const double post_var = bands.variance.back(), prior_var = prior_bands.variance.back();

  // Total-effect numerators of the model and MFU groups across x.
  std::vector<std::string> mfu_names;
  for (const auto& n : names)
    if (n != "c0" && n != "c1") mfu_names.push_back(n);
  const std::vector<std::pair<std::string, std::vector<std::string>>> groups{{"model", {"c0", "c1"}},
                                                                             {"mfu", mfu_names}};
  const auto post_space = gsa::make_space({{names, sampling::Empirical{post}}}, groups);
  const auto prior_space = gsa::make_space(prior_blocks, groups);
  const auto post_plan = gsa::build_pick_freeze(post_space, static_cast<std::size_t>(post.rows()) / 2,
                                                stream(seed, kGsaPosterior));
  const auto prior_plan = gsa::build_pick_freeze(prior_space, c.prior_gsa_n, stream(seed, kGsaPrior));
  auto xs = poly::linspace(0.0, 2.0, c.x_points);
  io::Table numerators;
  std::vector<std::vector<double>> cols(4);
  std::vector<gsa::SobolEstimate> post_check, prior_check;
  const auto xs_check = nodes_with(xs, c.check_x);
  for (std::size_t i = 0; i < xs_check.size(); ++i) {
    const double x = xs_check[i];
    const kernels::RowModel f = [&](std::span<const double> p) { return eval_row(p, x); };
    const auto ep = gsa::estimate(post_plan, gsa::evaluate_plan(post_plan, f));
    const auto e0 = gsa::estimate(prior_plan, gsa::evaluate_plan(prior_plan, f));
    if (i + 1 == xs_check.size()) {
      post_check = ep;
      prior_check = e0;
      break;
    }
    cols[0].push_back(group(e0, "model").total_numerator[0]);
    cols[1].push_back(group(e0, "mfu").total_numerator[0]);
    cols[2].push_back(group(ep, "model").total_numerator[0]);
    cols[3].push_back(group(ep, "mfu").total_numerator[0]);
  }
  numerators.add("x", xs);
  numerators.add("prior_model_T_numerator", cols[0]);
  numerators.add("prior_mfu_T_numerator", cols[1]);
  numerators.add("posterior_model_T_numerator", cols[2]);
  numerators.add("posterior_mfu_T_numerator", cols[3]);

  Result r;
  r.add("data.csv", [&] {
    io::Table t;
    t.add("x", data.x);
    t.add("d", data.d);
    return t.csv();
  }());
  r.add("chain.csv", chain.to_csv());
  add_band_plot(r, "predictive", "Enriched model posterior predictive", data, bands);
  for (const char* name : {"c0", "c1", "c2", "alpha"}) {
    const std::size_t k = chain.samples.index_of(name);
    std::vector<double> col(static_cast<std::size_t>(post.rows()));
    for (std::size_t i = 0; i < col.size(); ++i) col[i] = post(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    add_histograms(r, std::string("posterior_") + name, std::string("Posterior of ") + name, name,
                   {{"posterior", col}}, 40);
  }
  {
    std::vector<std::size_t> all(names.size());
    std::iota(all.begin(), all.end(), 0);
    const auto corr = gsa::correlation_matrix(chain.samples, all, all);
    std::ostringstream csv;
    csv << "parameter";
    for (const auto& n : names) csv << ',' << n;
    csv << '\n';
    for (std::size_t i = 0; i < names.size(); ++i) {
      csv << names[i];
      for (std::size_t j = 0; j < names.size(); ++j)
        csv << ',' << num(corr(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      csv << '\n';
    }
    r.add_plot("posterior_correlation", csv.str(), svg::heatmap("Posterior correlation", names, names, corr));
  }
  r.add_plot("total_numerators", numerators.csv(),
             svg::line_plot("Total-effect numerators", "x", "numerator",
                            {{"prior model", xs, cols[0], true},
                             {"prior mfu", xs, cols[1], true},
                             {"posterior model", xs, cols[2], false},
                             {"posterior mfu", xs, cols[3], false}}));
  r.add("indices_posterior_check_x.csv", gsa::to_csv(post_check));
  r.add("indices_prior_check_x.csv", gsa::to_csv(prior_check));
  {
    io::Table t;
    t.add("x", grid);
    t.add("prior_variance", prior_bands.variance);
    t.add("posterior_variance", bands.variance);
    t.add("prior_lower", prior_bands.lower);
    t.add("prior_upper", prior_bands.upper);
    t.add("posterior_lower", bands.lower);
    t.add("posterior_upper", bands.upper);
    r.add("predictive_prior_posterior.csv", t.csv());
  }

  const auto ci0 = credible_interval(chain.samples, "c0", c.lower_q, c.upper_q);
  const auto ci1 = credible_interval(chain.samples, "c1", c.lower_q, c.upper_q);
  const double num_mfu = group(post_check, "mfu").total_numerator[0];
  const double num_model = group(post_check, "model").total_numerator[0];
  r.summary["chain"] = chain_json(chain);
  r.summary["coverage"] = cov;
  r.summary["credible_c0"] = {ci0.first, ci0.second};
  r.summary["credible_c1"] = {ci1.first, ci1.second};
  r.summary["check_x"] = {{"x", c.check_x},
                          {"posterior_predictive_variance", post_var},
                          {"prior_predictive_variance", prior_var},
                          {"posterior_indices", sobol_json(post_check)},
                          {"prior_indices", sobol_json(prior_check)}};
  r.check("coverage_at_least_min", cov >= c.min_coverage,
          "coverage " + num(cov) + " >= " + num(c.min_coverage));
  r.check("credible_c0_contains_1", ci0.first <= 1.0 && 1.0 <= ci0.second,
          "[" + num(ci0.first) + ", " + num(ci0.second) + "]");
  r.check("credible_c1_contains_1", ci1.first <= 1.0 && 1.0 <= ci1.second,
          "[" + num(ci1.first) + ", " + num(ci1.second) + "]");
  r.check("mfu_numerator_at_least_model", num_mfu >= num_model,
          "mfu " + num(num_mfu) + " vs model " + num(num_model));
  r.check("predictive_variance_reduced", post_var < prior_var,
          "posterior " + num(post_var) + " < prior " + num(prior_var));
  return r;
}

}  // namespace mfu::experiments
