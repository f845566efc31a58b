#include "mfu/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "mfu/errors.hpp"
#include "mfu/io.hpp"
#include "mfu/kernels.hpp"

namespace mfu::robustness {

namespace {

constexpr std::size_t kMaxQuadratureDim = 2;
constexpr double kDegenerateRelative = 1e-14;

// Golub-Welsch: nodes are eigenvalues of the Jacobi matrix, weights mu0 * v0^2.
std::pair<std::vector<double>, std::vector<double>> golub_welsch(std::size_t n, const std::vector<double>& offdiag,
                                                                 double mu0) {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const auto a = static_cast<Eigen::Index>(k);
    j(a, a + 1) = j(a + 1, a) = offdiag[k];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  if (es.info() != Eigen::Success) throw NumericalError("Jacobi matrix eigen-decomposition failed");
  std::vector<double> x(n), w(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    x[i] = es.eigenvalues()(c);
    w[i] = mu0 * es.eigenvectors()(0, c) * es.eigenvectors()(0, c);
  }
  return {x, w};
}

QuadratureRule interval_rule(double lo, double hi, std::size_t n, const std::function<double(double)>& pdf) {
  const auto [x, w] = gauss_legendre(n);
  QuadratureRule r{Matrix(static_cast<Eigen::Index>(n), 1), std::vector<double>(n)};
  const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = mid + half * x[i];
    r.nodes(static_cast<Eigen::Index>(i), 0) = t;
    r.weights[i] = half * w[i] * pdf(t);
  }
  return r;
}

QuadratureRule concat(const QuadratureRule& a, const QuadratureRule& b) {
  QuadratureRule r{Matrix(a.nodes.rows() + b.nodes.rows(), 1), a.weights};
  r.nodes << a.nodes, b.nodes;
  r.weights.insert(r.weights.end(), b.weights.begin(), b.weights.end());
  return r;
}

std::size_t mfu_dim(const Representation& r) {
  std::size_t d = 0;
  for (const auto& b : r.mfu) d += b.names.size();
  return d;
}

std::optional<sampling::ScalarDensity> as_scalar(const sampling::Density& d) {
  if (const auto* u = std::get_if<sampling::Uniform>(&d)) return *u;
  if (const auto* n = std::get_if<sampling::Normal>(&d)) return *n;
  if (const auto* l = std::get_if<sampling::LogNormal>(&d)) return *l;
  if (const auto* t = std::get_if<sampling::TriangularUnitRange>(&d)) return *t;
  return std::nullopt;
}

QuadratureRule rule_for(const Representation& r, std::size_t order) {
  std::vector<QuadratureRule> rules;
  for (const auto& b : r.mfu) rules.push_back(quadrature(*as_scalar(b.density), order));
  return tensor(rules);
}

struct Moments2 {
  double mean;
  double var;
};

Moments2 weighted_moments(std::span<const double> y, std::span<const double> w) {
  double m = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) m += w[i] * y[i];
  double v = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) v += w[i] * (y[i] - m) * (y[i] - m);
  return {m, v};
}

class Inner {
 public:
  Inner(const Representation& r, const EpsOptions& opt) : r_(r), quad_(uses_quadrature(r)), n_(opt.inner_n) {
    if (quad_) rule_ = rule_for(r, opt.order);
    space_.blocks = r.mfu;
  }
  bool quadrature() const { return quad_; }

  Moments2 operator()(std::span<const double> xv, std::uint64_t seed) const {
    if (quad_) {
      std::vector<double> y(rule_.size());
      for (std::size_t k = 0; k < y.size(); ++k)
        y[k] = r_.model(xv, {rule_.nodes.data() + k * rule_.nodes.cols(), static_cast<std::size_t>(rule_.nodes.cols())});
      return weighted_moments(y, rule_.weights);
    }
    const SampleMatrix u = gsa::sample_space(space_, n_, seed);
    std::vector<double> y(n_);
    for (std::size_t k = 0; k < n_; ++k) y[k] = r_.model(xv, u.row(k));
    return {sampling::mean(y), sampling::variance(y)};
  }

 private:
  const Representation& r_;
  bool quad_;
  std::size_t n_;
  QuadratureRule rule_;
  gsa::GroupedParameterSpace space_;
};

double total_variance(std::span<const double> cond_mean, std::span<const double> cond_var) {
  return sampling::mean(cond_var) + sampling::variance(cond_mean);
}

}  // namespace

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(std::size_t n) {
  if (n == 0) throw ArgumentError("quadrature order must be positive");
  std::vector<double> b(n);
  for (std::size_t k = 1; k < n; ++k) {
    const double kk = static_cast<double>(k);
    b[k - 1] = kk / std::sqrt(4.0 * kk * kk - 1.0);
  }
  return golub_welsch(n, b, 2.0);
}

std::pair<std::vector<double>, std::vector<double>> gauss_hermite(std::size_t n) {
  if (n == 0) throw ArgumentError("quadrature order must be positive");
  std::vector<double> b(n);
  for (std::size_t k = 1; k < n; ++k) b[k - 1] = std::sqrt(static_cast<double>(k));
  return golub_welsch(n, b, 1.0);
}

QuadratureRule quadrature(const sampling::ScalarDensity& d, std::size_t order) {
  if (order == 0) throw ArgumentError("quadrature order must be positive");
  sampling::validate(d);
  if (const auto* u = std::get_if<sampling::Uniform>(&d)) {
    const double p = 1.0 / (u->hi - u->lo);
    return interval_rule(u->lo, u->hi, order, [p](double) { return p; });
  }
  if (const auto* t = std::get_if<sampling::TriangularUnitRange>(&d)) {
    const auto pdf = [t](double x) { return std::exp(sampling::log_pdf(*t, x)); };
    if (t->mode <= t->lo) return interval_rule(t->lo, t->hi, order, pdf);
    if (t->mode >= t->hi) return interval_rule(t->lo, t->hi, order, pdf);
    const std::size_t left = std::max<std::size_t>(1, order / 2);
    const std::size_t right = std::max<std::size_t>(1, order - left);
    return concat(interval_rule(t->lo, t->mode, left, pdf), interval_rule(t->mode, t->hi, right, pdf));
  }
  const auto [x, w] = gauss_hermite(order);
  QuadratureRule r{Matrix(static_cast<Eigen::Index>(order), 1), w};
  for (std::size_t i = 0; i < order; ++i) {
    double v;
    if (const auto* n = std::get_if<sampling::Normal>(&d))
      v = n->mean + n->sd * x[i];
    else {
      const auto& l = std::get<sampling::LogNormal>(d);
      v = std::exp(l.mu + l.sigma * x[i]);
    }
    r.nodes(static_cast<Eigen::Index>(i), 0) = v;
  }
  return r;
}

QuadratureRule tensor(std::span<const QuadratureRule> rules) {
  QuadratureRule out{Matrix(1, 0), {1.0}};
  for (const auto& r : rules) {
    const auto n = static_cast<Eigen::Index>(out.size());
    const auto m = static_cast<Eigen::Index>(r.size());
    const auto d = out.nodes.cols(), e = r.nodes.cols();
    QuadratureRule next{Matrix(n * m, d + e), std::vector<double>(static_cast<std::size_t>(n * m))};
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < m; ++j) {
        const Eigen::Index k = i * m + j;
        next.nodes.row(k).head(d) = out.nodes.row(i);
        next.nodes.row(k).tail(e) = r.nodes.row(j);
        next.weights[static_cast<std::size_t>(k)] =
            out.weights[static_cast<std::size_t>(i)] * r.weights[static_cast<std::size_t>(j)];
      }
    out = std::move(next);
  }
  return out;
}

bool uses_quadrature(const Representation& r) {
  if (mfu_dim(r) > kMaxQuadratureDim) return false;
  return std::all_of(r.mfu.begin(), r.mfu.end(),
                     [](const gsa::ParameterBlock& b) { return b.names.size() == 1 && as_scalar(b.density); });
}

EpsEstimate EpsEstimate::scaled(double c) const {
  EpsEstimate e = *this;
  const double c2 = c * c;
  e.eps1 *= c2;
  e.eps2 *= c2;
  e.var_f *= c2;
  e.var_q *= c2;
  for (auto& v : e.cond_var_f) v *= c2;
  for (auto& v : e.cond_var_q) v *= c2;
  for (auto& v : e.cond_mean_f) v *= c;
  for (auto& v : e.cond_mean_q) v *= c;
  return e;
}

EpsEstimate estimate_eps(const Representation& f, const Representation& q,
                         const std::vector<gsa::ParameterBlock>& shared, const EpsOptions& opt, std::uint64_t seed) {
  if (opt.outer_n < 2) throw ArgumentError("outer_n must be >= 2");
  if (opt.inner_n < 2) throw ArgumentError("inner_n must be >= 2");
  if (!f.model || !q.model) throw ArgumentError("both models are required");
  const gsa::GroupedParameterSpace vspace{shared, {}};
  const SampleMatrix xv = gsa::sample_space(vspace, opt.outer_n, derive_seed(seed, 0));
  const Inner inner_f(f, opt), inner_q(q, opt);

  Matrix stats(static_cast<Eigen::Index>(opt.outer_n), 4);
  kernels::fill_rows(stats, [&](std::size_t i, std::span<double> out) {
    const auto v = xv.row(i);
    const std::uint64_t s = derive_seed(seed, 1 + i);
    const auto mf = inner_f(v, derive_seed(s, 0xF));
    const auto mq = inner_q(v, derive_seed(s, 0xA));
    out[0] = mf.mean;
    out[1] = mf.var;
    out[2] = mq.mean;
    out[3] = mq.var;
  });

  EpsEstimate e;
  e.quadrature_f = inner_f.quadrature();
  e.quadrature_q = inner_q.quadrature();
  for (Eigen::Index i = 0; i < stats.rows(); ++i) {
    e.cond_mean_f.push_back(stats(i, 0));
    e.cond_var_f.push_back(stats(i, 1));
    e.cond_mean_q.push_back(stats(i, 2));
    e.cond_var_q.push_back(stats(i, 3));
  }
  std::vector<double> diff(opt.outer_n);
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = std::abs(e.cond_var_f[i] - e.cond_var_q[i]);
  e.eps1 = sampling::mean(diff);
  e.var_f = total_variance(e.cond_mean_f, e.cond_var_f);
  e.var_q = total_variance(e.cond_mean_q, e.cond_var_q);
  e.eps2 = std::abs(e.var_f - e.var_q);
  return e;
}

double unit_scale(double variance, double scale) {
  if (!(variance > kDegenerateRelative * scale) || !std::isfinite(variance))
    throw DegenerateError("variance of f is too small to rescale to unit variance");
  return 1.0 / std::sqrt(variance);
}

RobustnessReport verify_bounds(const std::vector<gsa::SobolEstimate>& f, const std::vector<gsa::SobolEstimate>& q,
                               std::span<const EpsEstimate> eps, std::span<const double> var_q_rescaled,
                               double sd_multiplier) {
  if (f.size() != q.size() || f.empty()) throw ArgumentError("both models need the same groups");
  const std::size_t reps = eps.size();
  if (var_q_rescaled.size() != reps) throw ArgumentError("one rescaled variance per replicate is required");
  for (std::size_t g = 0; g < f.size(); ++g) {
    if (f[g].group != q[g].group) throw ArgumentError("group order differs between models");
    if (f[g].s_main.size() != reps || q[g].s_main.size() != reps)
      throw ArgumentError("one epsilon estimate per replicate is required");
  }
  RobustnessReport rep;
  for (const auto& e : eps) {
    if (!(e.eps1 >= 0.0) || !(e.eps2 >= 0.0)) throw NumericalError("epsilon estimates must be non-negative");
    rep.eps1.push_back(e.eps1);
    rep.eps2.push_back(e.eps2);
  }
  rep.eps1_mean = sampling::mean(rep.eps1);
  rep.eps1_sd = reps > 1 ? std::sqrt(sampling::variance(rep.eps1)) : 0.0;
  rep.eps2_mean = sampling::mean(rep.eps2);
  rep.main_bound = rep.eps1_mean + 2.0 * rep.eps2_mean;
  rep.total_bound = rep.eps1_mean + rep.eps2_mean;
  rep.var_q_rescaled_mean = sampling::mean(var_q_rescaled);

  for (std::size_t g = 0; g < f.size(); ++g) {
    GroupSummary gs{f[g].group};
    const double sf = f[g].s_main_summary().sd, sq = q[g].s_main_summary().sd;
    const double tf = f[g].t_total_summary().sd, tq = q[g].t_total_summary().sd;
    gs.main_sd = std::hypot(sf, sq);
    gs.total_sd = std::hypot(tf, tq);
    std::vector<double> dm, dt;
    for (std::size_t r = 0; r < reps; ++r) {
      ReplicateCheck c;
      c.replicate = r;
      c.group = f[g].group;
      c.eps1 = eps[r].eps1;
      c.eps2 = eps[r].eps2;
      c.delta_main = std::abs(f[g].s_main[r] - q[g].s_main[r]);
      c.delta_total = std::abs(f[g].t_total[r] - q[g].t_total[r]);
      c.main_bound = c.eps1 + 2.0 * c.eps2;
      c.total_bound = c.eps1 + c.eps2;
      c.main_tolerance = sd_multiplier * gs.main_sd;
      c.total_tolerance = sd_multiplier * gs.total_sd;
      c.var_q_rescaled = var_q_rescaled[r];
      c.main_ok = c.delta_main < c.main_bound + c.main_tolerance;
      c.total_ok = c.delta_total < c.total_bound + c.total_tolerance;
      if (!c.main_ok || !c.total_ok) {
        std::ostringstream os;
        os << "replicate " << r << " group " << c.group << ":";
        if (!c.main_ok) os << " |dS| = " << c.delta_main << " exceeds " << c.main_bound + c.main_tolerance;
        if (!c.total_ok) os << " |dT| = " << c.delta_total << " exceeds " << c.total_bound + c.total_tolerance;
        rep.failures.push_back(os.str());
      }
      dm.push_back(c.delta_main);
      dt.push_back(c.delta_total);
      rep.checks.push_back(c);
    }
    gs.mean_delta_main = sampling::mean(dm);
    gs.mean_delta_total = sampling::mean(dt);
    rep.groups.push_back(gs);
  }
  rep.passed = rep.failures.empty();
  return rep;
}

std::string RobustnessReport::to_json() const {
  nlohmann::ordered_json j;
  j["passed"] = passed;
  j["eps1_mean"] = eps1_mean;
  j["eps1_sd"] = eps1_sd;
  j["eps2_mean"] = eps2_mean;
  j["main_bound"] = main_bound;
  j["total_bound"] = total_bound;
  j["var_q_rescaled_mean"] = var_q_rescaled_mean;
  j["eps1"] = eps1;
  j["eps2"] = eps2;
  auto& gj = j["groups"] = nlohmann::ordered_json::array();
  for (const auto& g : groups) {
    nlohmann::ordered_json e;
    e["group"] = g.group;
    e["mean_abs_delta_main"] = g.mean_delta_main;
    e["mean_abs_delta_total"] = g.mean_delta_total;
    e["main_sd"] = g.main_sd;
    e["total_sd"] = g.total_sd;
    double main_slack = INFINITY, total_slack = INFINITY;
    for (const auto& c : checks)
      if (c.group == g.group) {
        main_slack = std::min(main_slack, c.main_slack());
        total_slack = std::min(total_slack, c.total_slack());
      }
    e["min_main_slack"] = main_slack;
    e["min_total_slack"] = total_slack;
    gj.push_back(e);
  }
  j["failures"] = failures;
  return j.dump(2) + "\n";
}

std::string RobustnessReport::to_csv() const {
  std::ostringstream os;
  os << "replicate,group,eps1,eps2,abs_delta_main,main_bound,main_tolerance,main_ok,"
        "abs_delta_total,total_bound,total_tolerance,total_ok,var_q_rescaled\n";
  for (const auto& c : checks)
    os << c.replicate << ',' << c.group << ',' << io::fmt(c.eps1) << ',' << io::fmt(c.eps2) << ','
       << io::fmt(c.delta_main) << ',' << io::fmt(c.main_bound) << ',' << io::fmt(c.main_tolerance) << ','
       << (c.main_ok ? 1 : 0) << ',' << io::fmt(c.delta_total) << ',' << io::fmt(c.total_bound) << ','
       << io::fmt(c.total_tolerance) << ',' << (c.total_ok ? 1 : 0) << ',' << io::fmt(c.var_q_rescaled) << '\n';
  return os.str();
}

}  // namespace mfu::robustness
