#include <algorithm>
#include <cmath>
#include <sstream>

#include "experiments_detail.hpp"
#include "mfu/dci.hpp"
#include "mfu/errors.hpp"
#include "mfu/io.hpp"
#include "mfu/kernels.hpp"
#include "mfu/robustness.hpp"
#include "mfu/transport.hpp"

namespace mfu::experiments {

using namespace detail;

namespace {

struct DciRun {
  std::vector<double> target;
  dci::InitialFit fit;
  SampleMatrix proposals;
  std::vector<double> proposal_qoi;
  dci::DciUpdate update;
};

// Fractional QoIs at the mean shared inputs.
std::vector<double> fractional_qoi(const transport::TransportConfig& cfg, const TransportInputs& in, std::size_t n,
                                   std::uint64_t seed) {
  const auto space = gsa::make_space(in.mfu_blocks(), {{"mfu", {"nu_m", "alpha"}}});
  const auto draws = gsa::sample_space(space, n, seed);
  const auto means = in.means();
  return kernels::evaluate_rows(draws.values, [&](std::span<const double> r) {
    return transport::qoi(cfg, means, transport::Fractional{r[0], r[1]});
  });
}

DciRun dci_pipeline(const transport::TransportConfig& cfg, const TransportInputs& in, const DciSettings& s,
                    std::uint64_t seed) {
  DciRun run;
  const std::size_t nk = cfg.modes();
  run.target = fractional_qoi(cfg, in, s.target_n, derive_seed(seed, 1));

  const auto space = gsa::make_space(in.mfu_blocks(), {{"mfu", {"nu_m", "alpha"}}});
  const auto fit_draws = gsa::sample_space(space, s.fit_n, derive_seed(seed, 2));
  run.fit = dci::fit_initial_mvn(dci::fractional_eigenvalues(fit_draws.values, nk, cfg.lx));

  std::vector<std::string> names;
  for (std::size_t k = 1; k <= nk; ++k) names.push_back("R" + std::to_string(k));
  for (std::size_t k = 1; k <= nk; ++k) names.push_back("I" + std::to_string(k));
  run.proposals = sampling::sample(run.fit.mvn, s.proposals_n, derive_seed(seed, 3), names);
  const auto means = in.means();
  run.proposal_qoi = kernels::evaluate_rows(run.proposals.values, [&](std::span<const double> z) {
    return transport::qoi(cfg, means, transport::GeneralLinear{dci::ravel(z)});
  });
  const std::span<const double> predict(run.proposal_qoi.data(), s.predict_n);
  dci::DciOptions opt;
  opt.safety = s.safety;
  const double tb = s.target_bandwidth > 0.0 ? s.target_bandwidth : sampling::silverman_bandwidth(run.target);
  opt.target_bandwidth = tb;
  if (s.predict_bandwidth > 0.0) opt.predict_bandwidth = s.predict_bandwidth;
  else if (s.shared_bandwidth) opt.predict_bandwidth = tb;
  run.update = dci::dci_update(run.target, predict, run.proposals, run.proposal_qoi, derive_seed(seed, 4), opt);
  return run;
}

// Mean real parts of the eigenvalues of a set of unravelled rows.
std::vector<double> mean_real_part(const Matrix& z, std::size_t nk) {
  std::vector<double> m(nk, 0.0);
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    for (std::size_t k = 0; k < nk; ++k) m[k] -= std::exp(z(i, static_cast<Eigen::Index>(k)));
  for (double& v : m) v /= static_cast<double>(std::max<Eigen::Index>(z.rows(), 1));
  return m;
}

Json parse_object(const std::string& s) { return Json::parse(s); }

}  // namespace

Result run_dci(const DciConfig& c, std::uint64_t seed) {
  const auto& cfg = c.transport;
  const auto run = dci_pipeline(cfg, c.inputs, c.dci, stream(seed, kDci));
  const auto& up = run.update;
  const auto heldout = fractional_qoi(cfg, c.inputs, c.heldout_n, stream(seed, kHeldout));
  const double ks = sampling::ks_statistic(up.accepted_qoi, heldout);

  // Identity check: target and predict are the same sample.
  const std::size_t ni = std::min(c.identity_n, run.proposals.rows());
  SampleMatrix ident_props{run.proposals.values.topRows(static_cast<Eigen::Index>(ni)), run.proposals.names,
                           run.proposals.seed};
  const std::span<const double> ident_q(run.proposal_qoi.data(), ni);
  const auto ident = dci::dci_update(ident_q, ident_q, ident_props, ident_q, stream(seed, kIdentity));

  Result r;
  r.add("dci_diagnostics.json", up.diagnostics_json());
  add_histograms(r, "qoi_distributions", "QoI: target, predicted and updated", "mean outflow concentration",
                 {{"target", run.target},
                  {"predict", std::span<const double>(run.proposal_qoi.data(), c.dci.predict_n)},
                  {"updated", up.accepted_qoi},
                  {"heldout", heldout}},
                 c.bins);
  {
    const std::size_t nk = cfg.modes();
    std::vector<double> k(nk);
    for (std::size_t i = 0; i < nk; ++i) k[i] = static_cast<double>(i + 1);
    io::Table t;
    t.add("k", k);
    t.add("re_lambda_initial", mean_real_part(run.proposals.values, nk));
    t.add("re_lambda_updated", mean_real_part(up.accepted.values, nk));
    r.add_plot("eigenvalues", t.csv(),
               svg::line_plot("Mean Re(lambda_k)", "k", "Re lambda",
                              {{"initial", k, t.columns[1], true}, {"updated", k, t.columns[2], false}}));
  }
  {
    io::Table t;
    t.add("qoi", up.accepted_qoi);
    r.add("accepted_qoi.csv", t.csv());
  }
  if (c.write_accepted) {
    io::Table t;
    for (std::size_t k = 0; k < up.accepted.cols(); ++k) t.add(up.accepted.names[k], up.accepted.column(k));
    r.add("accepted.csv", t.csv());
  }

  r.summary["fit"] = {{"regularized", run.fit.regularized}, {"jitter", run.fit.jitter}};
  r.summary["update"] = parse_object(up.diagnostics_json());
  r.summary["ks_statistic"] = ks;
  r.summary["identity_acceptance_rate"] = ident.acceptance_rate;
  r.summary["target"] = {{"mean", sampling::mean(run.target)}, {"variance", sampling::variance(run.target)}};
  r.summary["updated"] = {{"mean", sampling::mean(up.accepted_qoi)},
                          {"variance", up.accepted_qoi.size() > 1 ? sampling::variance(up.accepted_qoi) : 0.0}};
  r.check("ks_within_max", ks <= c.max_ks, "KS " + num(ks) + " <= " + num(c.max_ks));
  r.check("identity_acceptance", ident.acceptance_rate >= 0.88 && ident.acceptance_rate <= 0.95,
          "rate " + num(ident.acceptance_rate) + " in [0.88, 0.95]");
  return r;
}

Result run_transport_robustness(const TransportRobustnessConfig& c, std::uint64_t seed) {
  const auto& cfg = c.transport;
  const auto run = dci_pipeline(cfg, c.inputs, c.dci, stream(seed, kDci));
  const auto& acc = run.update.accepted;
  if (acc.rows() == 0) throw NumericalError("data-consistent update accepted no proposals");

  std::vector<transport::DispersionOperator> ops;
  for (std::size_t i = 0; i < acc.rows(); ++i) ops.push_back(transport::GeneralLinear{dci::ravel(acc.row(i))});
  Matrix index(static_cast<Eigen::Index>(ops.size()), 1);
  for (std::size_t i = 0; i < ops.size(); ++i) index(static_cast<Eigen::Index>(i), 0) = static_cast<double>(i);

  const auto shared = c.inputs.shared_blocks();
  const robustness::Representation f{
      [&](std::span<const double> v, std::span<const double> u) {
        return transport::qoi(cfg, {v[0], v[1], v[2]}, transport::Fractional{u[0], u[1]});
      },
      c.inputs.mfu_blocks()};
  const robustness::Representation q{
      [&](std::span<const double> v, std::span<const double> u) {
        return transport::qoi(cfg, {v[0], v[1], v[2]}, ops[static_cast<std::size_t>(u[0])]);
      },
      {{{"lambda_index"}, sampling::Empirical{index}}}};
  const auto with = [&](const std::vector<gsa::ParameterBlock>& mfu) {
    auto b = shared;
    b.insert(b.end(), mfu.begin(), mfu.end());
    std::vector<std::string> names;
    for (const auto& blk : mfu) names.insert(names.end(), blk.names.begin(), blk.names.end());
    return gsa::make_space(b, {{"model", {"u", "nu_p", "s"}}, {"mfu", names}});
  };
  const auto fspace = with(f.mfu), qspace = with(q.mfu);
  const kernels::RowModel fm = [&](std::span<const double> x) { return f.model(x.first(3), x.subspan(3)); };
  const kernels::RowModel qm = [&](std::span<const double> x) { return q.model(x.first(3), x.subspan(3)); };

  std::vector<gsa::SobolEstimate> fe, qe;
  std::vector<robustness::EpsEstimate> eps;
  std::vector<double> var_q;
  const robustness::EpsOptions eopt{c.outer_n, c.inner_n, c.order};
  for (std::size_t rep = 0; rep < c.replicates; ++rep) {
    const auto s = derive_seed(stream(seed, kReplicates), rep);
    const auto pf = gsa::build_pick_freeze(fspace, c.gsa_n, s);
    const auto pq = gsa::build_pick_freeze(qspace, c.gsa_n, s);
    const auto of = gsa::evaluate_plan(pf, fm), oq = gsa::evaluate_plan(pq, qm);
    const double k = robustness::unit_scale(gsa::estimate_total_variance(of.a, of.b));
    const auto ef = gsa::estimate(pf, gsa::scaled(of, k)), eq = gsa::estimate(pq, gsa::scaled(oq, k));
    if (rep == 0) {
      fe = ef;
      qe = eq;
    } else {
      gsa::append_replicate(fe, ef);
      gsa::append_replicate(qe, eq);
    }
    var_q.push_back(gsa::estimate_total_variance(oq.a, oq.b) * k * k);
    eps.push_back(robustness::estimate_eps(f, q, shared, eopt, derive_seed(s, 1)).scaled(k));
  }
  const auto report = robustness::verify_bounds(fe, qe, eps, var_q, c.sd_multiplier);

  double max_diff = 0.0;
  Json diffs = Json::array();
  for (std::size_t g = 0; g < fe.size(); ++g) {
    const double ds = std::abs(fe[g].s_main_summary().mean - qe[g].s_main_summary().mean);
    const double dt = std::abs(fe[g].t_total_summary().mean - qe[g].t_total_summary().mean);
    max_diff = std::max({max_diff, ds, dt});
    diffs.push_back({{"group", fe[g].group}, {"abs_delta_S_main", ds}, {"abs_delta_T_total", dt}});
  }

  Result r;
  r.add("dci_diagnostics.json", run.update.diagnostics_json());
  r.add("robustness.json", report.to_json());
  r.add("bounds.csv", report.to_csv());
  r.add("indices_fractional.csv", gsa::to_csv(fe));
  r.add("indices_general_linear.csv", gsa::to_csv(qe));
  add_index_plot(r, "indices_plot", "Indices under two MFU representations",
                 {{"fractional", &fe}, {"general_linear", &qe}});
  {
    io::Table t;
    std::vector<double> reps(c.replicates);
    for (std::size_t i = 0; i < reps.size(); ++i) reps[i] = static_cast<double>(i);
    t.add("replicate", reps);
    std::vector<svg::Series> series;
    for (const auto& g : fe) {
      std::vector<double> d, b;
      for (const auto& chk : report.checks)
        if (chk.group == g.group) d.push_back(chk.delta_main), b.push_back(chk.main_bound + chk.main_tolerance);
      series.push_back({"|dS| " + g.group, reps, d, false});
      series.push_back({"bound " + g.group, reps, b, true});
      t.add("abs_delta_main_" + g.group, d);
      t.add("main_bound_with_tolerance_" + g.group, b);
    }
    r.add_plot("main_bounds", t.csv(), svg::line_plot("Main-index differences and bounds", "replicate", "value", series));
  }

  r.summary["accepted_operators"] = ops.size();
  r.summary["update"] = parse_object(run.update.diagnostics_json());
  r.summary["robustness"] = parse_object(report.to_json());
  r.summary["mean_differences"] = std::move(diffs);
  r.summary["indices_fractional"] = sobol_json(fe);
  r.summary["indices_general_linear"] = sobol_json(qe);
  const double vdev = std::abs(report.var_q_rescaled_mean - 1.0);
  std::string failures;
  for (const auto& line : report.failures) failures += (failures.empty() ? "" : "; ") + line;
  r.check("rescaled_variance_near_one", vdev <= c.variance_tolerance,
          "mean Var(q rescaled) " + num(report.var_q_rescaled_mean));
  r.check("bounds_hold", report.passed, failures.empty() ? "all replicates within bounds" : failures);
  r.check("mean_differences_small", max_diff <= c.max_mean_difference,
          "max |dS|, |dT| of means " + num(max_diff) + " <= " + num(c.max_mean_difference));
  return r;
}

}  // namespace mfu::experiments
