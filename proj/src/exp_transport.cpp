#include <algorithm>
#include <cmath>
#include <limits>

#include "experiments_detail.hpp"
#include "mfu/bayes.hpp"
#include "mfu/errors.hpp"
#include "mfu/io.hpp"
#include "mfu/kernels.hpp"
#include "mfu/transport.hpp"

namespace mfu::experiments {

using namespace detail;

namespace {

std::vector<gsa::ParameterBlock> concat(std::vector<gsa::ParameterBlock> a, const std::vector<gsa::ParameterBlock>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

std::vector<double> column(const Matrix& m, std::size_t k) {
  std::vector<double> v(static_cast<std::size_t>(m.rows()));
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
  return v;
}

double incidence(const Matrix& rows, const std::function<bool(std::span<const double>)>& positive) {
  const auto flags = kernels::evaluate_rows(rows, [&](std::span<const double> r) { return positive(r) ? 0.0 : 1.0; });
  return sampling::mean(flags);
}

}  // namespace

Result run_transport_forward(const TransportForwardConfig& c, std::uint64_t seed) {
  const auto& cfg = c.transport;
  const auto space = gsa::make_space(concat(c.inputs.shared_blocks(), c.inputs.mfu_blocks()),
                                     {{"model", {"u", "nu_p", "s"}}, {"mfu", {"nu_m", "alpha"}}});
  const kernels::RowModel qoi = [&](std::span<const double> r) {
    return transport::qoi(cfg, {r[0], r[1], r[2]}, transport::Fractional{r[3], r[4]});
  };
  const auto samples = gsa::sample_space(space, c.n_samples, stream(seed, kSamples));
  const auto values = kernels::evaluate_rows(samples.values, qoi);
  const auto stats = bayes::summarize_pushforward(values);
  const double max_qoi = *std::max_element(values.begin(), values.end());
  const double neg = incidence(samples.values, [&](std::span<const double> r) {
    return transport::positivity_check(cfg, {r[0], r[1], r[2]}, transport::Fractional{r[3], r[4]});
  });

  const auto plan = gsa::build_pick_freeze(space, c.gsa_n, stream(seed, kGsa));
  const auto est = gsa::estimate(plan, gsa::evaluate_plan(plan, qoi));

  Result r;
  {
    io::Table t;
    for (std::size_t k = 0; k < samples.cols(); ++k) t.add(samples.names[k], samples.column(k));
    t.add("qoi", values);
    r.add("qoi_samples.csv", t.csv());
  }
  add_histograms(r, "qoi_histogram", "QoI samples, fractional representation", "mean outflow concentration",
                 {{"qoi", values}}, c.bins,
                 {{"lower bound", stats.min}, {"mean", stats.mean}, {"95th percentile", stats.q95}, {"upper bound", max_qoi}});
  r.add("indices.csv", gsa::to_csv(est));
  add_index_plot(r, "indices_plot", "Grouped Sobol' indices of the QoI", {{"fractional", &est}});

  {
    const auto draws = gsa::sample_space(space, c.snapshots, stream(seed, kSnapshots));
    io::Table t;
    std::vector<double> x(cfg.nx);
    for (std::size_t j = 0; j < cfg.nx; ++j) x[j] = static_cast<double>(j) * cfg.dx();
    t.add("x", x);
    std::vector<svg::Series> series;
    for (std::size_t i = 0; i < draws.rows(); ++i) {
      const auto p = draws.row(i);
      auto g = transport::grid_values(
          transport::solve_at(cfg, {p[0], p[1], p[2]}, transport::Fractional{p[3], p[4]}, c.snapshot_time), cfg);
      series.push_back({"sample " + std::to_string(i), x, g, false});
      t.add("sample_" + std::to_string(i), std::move(g));
    }
    r.add_plot("snapshots", t.csv(),
               svg::line_plot("Concentration samples at t = " + num(c.snapshot_time), "x", "c", series));
  }

  r.summary["qoi"] = stats_json(stats);
  r.summary["negative_concentration_incidence"] = neg;
  r.summary["indices"] = sobol_json(est);
  r.summary["ranking"] = ranking_json(est);
  r.check("all_qoi_positive", stats.min > 0.0, "min QoI " + num(stats.min));
  return r;
}

Result run_transport_calibrate(const TransportCalibrateConfig& c, std::uint64_t seed) {
  const auto& cfg = c.transport;

  const auto model_prior = [&](double nominal) {
    const auto p = sampling::elicit_lognormal_from_mode(nominal, c.nominal_upper_p, c.nominal_upper_ratio * nominal);
    return sampling::LogNormal{p.mu, p.sigma};
  };
  const auto scaling = sampling::elicit_lognormal_from_quantiles(c.scaling_lo_p, c.scaling_lo, c.scaling_hi_p,
                                                                 c.scaling_hi);
  const auto sig = sampling::elicit_lognormal_from_mode(scaling.sigma, c.sigma_upper_p,
                                                        c.sigma_upper_ratio * scaling.sigma);
  const sampling::Hierarchical h_nu{sampling::Family::LogNormal,
                                    {sampling::Normal{scaling.mu, c.mu_sd_factor * std::abs(scaling.mu)},
                                     sampling::LogNormal{sig.mu, sig.sigma}},
                                    0.0,
                                    1.0,
                                    0.0};
  const sampling::Hierarchical h_alpha{sampling::Family::Triangular, {sampling::Uniform{1.0, 2.0}}, 1.0, 2.0, 0.0};
  // Columns: u nu_p s | mu_r sigma_r nu_r | mode_r alpha_r | mu_i sigma_i nu_i | mode_i alpha_i
  const std::vector<gsa::ParameterBlock> blocks{{{"u"}, model_prior(c.nominal.u_mean)},
                                                {{"nu_p"}, model_prior(c.nominal.nu_p)},
                                                {{"s"}, model_prior(c.nominal.s)},
                                                {{"mu_r", "sigma_r", "nu_r"}, h_nu},
                                                {{"mode_r", "alpha_r"}, h_alpha},
                                                {{"mu_i", "sigma_i", "nu_i"}, h_nu},
                                                {{"mode_i", "alpha_i"}, h_alpha}};
  const auto params = [](std::span<const double> r) { return transport::PhysicalParams{r[0], r[1], r[2]}; };
  const auto op = [](std::span<const double> r) { return transport::ComplexFractional{r[5], r[7], r[10], r[12]}; };
  const auto resample = [&](std::span<double> r, Rng& rng) {
    r[5] = sampling::draw_conditional(h_nu, r.subspan(3, 2), rng);
    r[7] = sampling::draw_conditional(h_alpha, r.subspan(6, 1), rng);
    r[10] = sampling::draw_conditional(h_nu, r.subspan(8, 2), rng);
    r[12] = sampling::draw_conditional(h_alpha, r.subspan(11, 1), rng);
  };

  // Synthetic observations from the perturbed complex-fractional operator.
  const auto truth_op = transport::synthetic_truth(std::get<transport::ComplexFractional>(c.truth_operator),
                                                   c.truth_amplitude, c.truth_period, cfg);
  const auto truth = transport::probe(cfg, c.truth, truth_op, c.obs_x, c.obs_times);
  const bayes::NoiseModel noise{bayes::NoiseModel::Kind::LognormalMultiplicative, c.noise_sd};
  std::vector<double> data(truth.size());
  {
    Rng rng(stream(seed, kData));
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = noise.perturb(truth[i], rng);
  }

  using bayes::Transform;
  const auto logit12 = [](const char* n) { return bayes::ParamSpec{n, Transform::Logit, 1.0, 2.0}; };
  const auto logp = [](const char* n) { return bayes::ParamSpec{n, Transform::Log, 0.0}; };
  const bayes::LogPosterior lp(
      {logp("u"), logp("nu_p"), logp("s"), {"mu_r", Transform::Identity}, logp("sigma_r"), logp("nu_r"),
       logit12("mode_r"), logit12("alpha_r"), {"mu_i", Transform::Identity}, logp("sigma_i"), logp("nu_i"),
       logit12("mode_i"), logit12("alpha_i")},
      [&](std::span<const double> p) {
        double s = 0.0;
        std::size_t off = 0;
        for (const auto& b : blocks) {
          s += sampling::log_pdf(b.density, p.subspan(off, b.names.size()));
          off += b.names.size();
        }
        return s;
      },
      [&](std::span<const double> p) {
        const auto m = transport::probe(cfg, params(p), op(p), c.obs_x, c.obs_times);
        const double ll = bayes::log_likelihood(noise, data, m);
        if (std::isfinite(ll) && !transport::positivity_check(cfg, params(p), op(p)))
          return -std::numeric_limits<double>::infinity();
        return ll;
      });

  const auto space = gsa::make_space(blocks, {{"model", {"u", "nu_p", "s"}},
                                              {"mfu",
                                               {"mu_r", "sigma_r", "nu_r", "mode_r", "alpha_r", "mu_i", "sigma_i",
                                                "nu_i", "mode_i", "alpha_i"}}});
  std::vector<double> init{c.nominal.u_mean, c.nominal.nu_p, c.nominal.s, scaling.mu, scaling.sigma,
                           std::exp(scaling.mu), 1.5, 1.5, scaling.mu, scaling.sigma, std::exp(scaling.mu), 1.5, 1.5};
  bool from_prior = false;
  for (std::size_t k = 0; !std::isfinite(lp(init)); ++k) {
    if (k == 1000) throw NumericalError("no starting point with finite posterior density in 1000 prior draws");
    const auto d = gsa::sample_space(space, 1, derive_seed(stream(seed, kStart), k));
    init.assign(d.values.data(), d.values.data() + d.values.size());
    from_prior = true;
  }
  bayes::MetropolisOptions opt;
  opt.initial_sd = {0.002, 0.02, 0.005, 0.05, 0.05, 0.05, 0.1, 0.05, 0.05, 0.05, 0.05, 0.1, 0.05};
  const auto chain = bayes::adaptive_metropolis(lp, init, c.steps, stream(seed, kChain), opt);

  Matrix post = chain.samples.values;
  kernels::fill_rows(post, [&](std::size_t i, std::span<double> r) {
    Rng rng(derive_seed(stream(seed, kResample), i));
    resample(r, rng);
  });

  // Pushforwards of the QoI and negative-concentration incidence.
  const std::size_t rows = static_cast<std::size_t>(post.rows());
  const std::size_t pn = std::min(c.pushforward_n, rows);
  Matrix post_push(static_cast<Eigen::Index>(pn), post.cols());
  for (std::size_t i = 0; i < pn; ++i) post_push.row(static_cast<Eigen::Index>(i)) = post.row(static_cast<Eigen::Index>(i * rows / pn));
  const auto prior_push = gsa::sample_space(space, c.pushforward_n, stream(seed, kPushPrior));
  const kernels::RowModel qoi = [&](std::span<const double> r) { return transport::qoi(cfg, params(r), op(r)); };
  const auto positive = [&](std::span<const double> r) { return transport::positivity_check(cfg, params(r), op(r)); };
  const auto post_stats = bayes::pushforward(post_push, qoi);
  const auto prior_stats = bayes::pushforward(prior_push.values, qoi);
  const double post_neg = incidence(post_push, positive);
  const double prior_neg = incidence(prior_push.values, positive);

  // Grouped indices before and after calibration.
  const std::vector<std::pair<std::string, std::vector<std::string>>> groups{
      {"model", {"u", "nu_p", "s"}},
      {"mfu", {"mu_r", "sigma_r", "nu_r", "mode_r", "alpha_r", "mu_i", "sigma_i", "nu_i", "mode_i", "alpha_i"}}};
  const auto post_space = gsa::make_space({{chain.samples.names, sampling::Empirical{post}}}, groups);
  const auto post_plan = gsa::build_pick_freeze(post_space, rows / 2, stream(seed, kGsaPosterior));
  const auto post_est = gsa::estimate(post_plan, gsa::evaluate_plan(post_plan, qoi));
  const auto prior_plan = gsa::build_pick_freeze(space, c.prior_gsa_n, stream(seed, kGsaPrior));
  const auto prior_est = gsa::estimate(prior_plan, gsa::evaluate_plan(prior_plan, qoi));

  const bayes::GridModel probe_model = [&](std::span<const double> p) {
    return transport::probe(cfg, params(p), op(p), c.obs_x, c.obs_times);
  };
  const auto bands = bayes::predictive_bands(post_push, probe_model, noise, stream(seed, kPredict));

  Result r;
  {
    io::Table t;
    t.add("t", c.obs_times);
    t.add("data", data);
    t.add("truth", truth);
    t.add("lower", bands.lower);
    t.add("median", bands.median);
    t.add("upper", bands.upper);
    r.add_plot("predictive", t.csv(),
               svg::line_plot("Posterior predictive at the probe", "t", "c",
                              {{"data", c.obs_times, data, false},
                               {"truth", c.obs_times, truth, true},
                               {"predictive median", c.obs_times, bands.median, false}},
                              {{"95% predictive", c.obs_times, bands.lower, bands.upper}}));
  }
  r.add("chain.csv", chain.to_csv());
  {
    io::Table t;
    t.add("qoi", prior_stats.values);
    r.add("pushforward_prior.csv", t.csv());
    io::Table u;
    u.add("qoi", post_stats.values);
    r.add("pushforward_posterior.csv", u.csv());
  }
  add_histograms(r, "qoi_pushforward", "QoI pushforward", "mean outflow concentration",
                 {{"prior", prior_stats.values}, {"posterior", post_stats.values}}, 40);
  r.add("indices_prior.csv", gsa::to_csv(prior_est));
  r.add("indices_posterior.csv", gsa::to_csv(post_est));
  add_index_plot(r, "indices_plot", "Grouped indices before and after calibration",
                 {{"prior", &prior_est}, {"posterior", &post_est}});
  for (const char* name : {"u", "nu_p", "s"}) {
    const auto col = column(post, chain.samples.index_of(name));
    add_histograms(r, std::string("posterior_") + name, std::string("Posterior of ") + name, name,
                   {{"posterior", col}}, 40);
  }

  const double ratio = post_stats.variance / prior_stats.variance;
  const double num_mfu = group(post_est, "mfu").total_numerator[0];
  const double num_model = group(post_est, "model").total_numerator[0];
  r.summary["start_from_prior"] = from_prior;
  r.summary["chain"] = chain_json(chain);
  r.summary["rejected_evaluations"] = lp.diagnostics().rejected.load();
  r.summary["prior_hyper"] = {{"mu_nominal", scaling.mu}, {"sigma_nominal", scaling.sigma}};
  r.summary["qoi_prior"] = stats_json(prior_stats);
  r.summary["qoi_posterior"] = stats_json(post_stats);
  r.summary["variance_ratio"] = ratio;
  r.summary["negative_incidence_prior"] = prior_neg;
  r.summary["negative_incidence_posterior"] = post_neg;
  r.summary["indices_prior"] = sobol_json(prior_est);
  r.summary["indices_posterior"] = sobol_json(post_est);
  r.check("posterior_variance_reduced", ratio <= c.max_variance_ratio,
          "posterior/prior QoI variance " + num(ratio) + " <= " + num(c.max_variance_ratio));
  r.check("negative_incidence_reduced", post_neg < prior_neg,
          "posterior " + num(post_neg) + " < prior " + num(prior_neg));
  r.check("mfu_numerator_dominates", num_mfu > num_model,
          "mfu " + num(num_mfu) + " > model " + num(num_model));
  return r;
}

}  // namespace mfu::experiments
