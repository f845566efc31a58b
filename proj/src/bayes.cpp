#include "mfu/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mfu/errors.hpp"
#include "mfu/io.hpp"

namespace mfu::bayes {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sigmoid(double z) { return z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z)); }

}  // namespace

double to_unconstrained(const ParamSpec& p, double x) {
  switch (p.transform) {
    case Transform::Identity:
      return x;
    case Transform::Log:
      if (!(x > p.lo)) throw DomainError("parameter '" + p.name + "' must exceed its lower bound");
      return std::log(x - p.lo);
    case Transform::Logit:
      if (!(x > p.lo && x < p.hi)) throw DomainError("parameter '" + p.name + "' must lie strictly inside its bounds");
      return std::log(x - p.lo) - std::log(p.hi - x);
  }
  return x;
}

double from_unconstrained(const ParamSpec& p, double z) {
  switch (p.transform) {
    case Transform::Identity:
      return z;
    case Transform::Log:
      return p.lo + std::exp(z);
    case Transform::Logit:
      return p.lo + (p.hi - p.lo) * std::exp(log_sigmoid(z));
  }
  return z;
}

double log_jacobian(const ParamSpec& p, double z) {
  switch (p.transform) {
    case Transform::Identity:
      return 0.0;
    case Transform::Log:
      return z;
    case Transform::Logit:
      return std::log(p.hi - p.lo) + log_sigmoid(z) + log_sigmoid(-z);
  }
  return 0.0;
}

double NoiseModel::perturb(double m, Rng& rng) const {
  const double e = sd * rng.normal();
  return kind == Kind::GaussianAdditive ? m + e : m * std::exp(e);
}

double log_likelihood(const NoiseModel& noise, std::span<const double> data, std::span<const double> model) {
  if (data.size() != model.size() || data.empty()) throw ArgumentError("data and model outputs must match and be nonempty");
  if (!(noise.sd > 0.0)) throw ArgumentError("noise sd must be positive");
  const double c = -std::log(noise.sd) - 0.5 * std::log(2.0 * std::numbers::pi);
  const double inv2 = 0.5 / (noise.sd * noise.sd);
  double acc = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    double r;
    if (noise.kind == NoiseModel::Kind::GaussianAdditive) {
      r = data[i] - model[i];
    } else {
      if (!(model[i] > 0.0)) return kNegInf;
      r = std::log(data[i]) - std::log(model[i]);
    }
    acc += c - r * r * inv2;
  }
  return std::isfinite(acc) ? acc : kNegInf;
}

LogPosterior::LogPosterior(std::vector<ParamSpec> params, Term log_prior, Term log_likelihood)
    : params_(std::move(params)),
      prior_(std::move(log_prior)),
      likelihood_(std::move(log_likelihood)),
      diag_(std::make_shared<Diagnostics>()) {
  if (params_.empty()) throw ArgumentError("posterior needs at least one parameter");
  for (const auto& p : params_)
    if (p.transform == Transform::Logit && !(p.lo < p.hi)) throw ParameterError("logit bounds for '" + p.name + "'");
}

double LogPosterior::operator()(std::span<const double> x) const {
  if (x.size() != params_.size()) throw ArgumentError("posterior: dimension mismatch");
  diag_->evaluations.fetch_add(1, std::memory_order_relaxed);
  for (double v : x) {
    if (!std::isfinite(v)) {
      diag_->rejected.fetch_add(1, std::memory_order_relaxed);
      return kNegInf;
    }
  }
  double v = prior_(x);
  if (v != kNegInf && !std::isnan(v)) v += likelihood_(x);
  if (!std::isfinite(v)) {
    diag_->rejected.fetch_add(1, std::memory_order_relaxed);
    return kNegInf;
  }
  return v;
}

double LogPosterior::unconstrained(std::span<const double> z) const {
  const auto x = from_unconstrained(z);
  double lj = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) lj += log_jacobian(params_[i], z[i]);
  const double v = (*this)(x);
  return v == kNegInf ? kNegInf : v + lj;
}

std::vector<double> LogPosterior::to_unconstrained(std::span<const double> x) const {
  std::vector<double> z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = bayes::to_unconstrained(params_[i], x[i]);
  return z;
}

std::vector<double> LogPosterior::from_unconstrained(std::span<const double> z) const {
  if (z.size() != params_.size()) throw ArgumentError("posterior: dimension mismatch");
  std::vector<double> x(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) x[i] = bayes::from_unconstrained(params_[i], z[i]);
  return x;
}

std::vector<std::string> LogPosterior::names() const {
  std::vector<std::string> n;
  for (const auto& p : params_) n.push_back(p.name);
  return n;
}

std::string Chain::to_csv() const {
  io::Table t;
  for (std::size_t j = 0; j < samples.cols(); ++j) t.add(samples.names[j], samples.column(j));
  t.add("log_posterior", log_posterior);
  return t.csv();
}

Chain adaptive_metropolis(const LogPosterior& lp, std::span<const double> init, std::size_t steps, std::uint64_t seed,
                          const MetropolisOptions& opt) {
  const std::size_t d = lp.dim();
  if (init.size() != d) throw ArgumentError("initial point has the wrong dimension");
  if (steps < 1000) throw ArgumentError("adaptive Metropolis needs at least 1000 steps");
  if (!(opt.burn_in_fraction >= 0.0 && opt.burn_in_fraction < 1.0)) throw ArgumentError("burn-in fraction must lie in [0, 1)");
  if (opt.max_retained == 0 || opt.adapt_interval == 0) throw ArgumentError("max_retained and adapt_interval must be positive");

  std::vector<double> z = lp.to_unconstrained(init);
  double cur = lp.unconstrained(z);
  if (cur == kNegInf) throw NumericalError("invalid start: log-posterior is -inf at the initial point");

  Eigen::VectorXd sd(d);
  for (std::size_t i = 0; i < d; ++i) sd[static_cast<Eigen::Index>(i)] = opt.initial_sd.size() == 1 ? opt.initial_sd[0] : opt.initial_sd.at(i);
  if (!(sd.minCoeff() > 0.0) || !sd.allFinite()) throw NumericalError("adaptation error: proposal covariance is zero or invalid");
  Eigen::MatrixXd chol = sd.asDiagonal();

  const std::size_t burn = static_cast<std::size_t>(std::floor(opt.burn_in_fraction * static_cast<double>(steps)));
  const std::size_t post = steps - burn;
  const std::size_t thin = (post + opt.max_retained - 1) / opt.max_retained;

  Chain ch;
  ch.steps = steps;
  ch.burn_in = burn;
  ch.thin = thin;
  const std::size_t kept = (post + thin - 1) / thin;
  ch.samples = {Matrix(static_cast<Eigen::Index>(kept), static_cast<Eigen::Index>(d)), lp.names(), seed};
  ch.log_posterior.reserve(kept);

  Rng rng(seed);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd m2 = Eigen::MatrixXd::Zero(d, d);
  std::size_t count = 0, window_acc = 0, window_n = 0, burn_acc = 0, post_acc = 0, updates = 0;
  double log_scale = 0.0;
  bool adapted = false;
  const double base = 2.38 * 2.38 / static_cast<double>(d);

  std::vector<double> prop(d);
  Eigen::VectorXd xi(d), zv(d);
  std::size_t row = 0;
  for (std::size_t step = 0; step < steps; ++step) {
    for (std::size_t i = 0; i < d; ++i) xi[static_cast<Eigen::Index>(i)] = rng.normal();
    const Eigen::VectorXd delta = std::exp(log_scale) * (chol * xi);
    for (std::size_t i = 0; i < d; ++i) prop[i] = z[i] + delta[static_cast<Eigen::Index>(i)];
    const double lp_prop = lp.unconstrained(prop);
    const double u = rng.uniform();
    const bool accept = lp_prop != kNegInf && std::log(u) < lp_prop - cur;
    if (accept) {
      z = prop;
      cur = lp_prop;
    }

    if (step < burn) {
      burn_acc += accept;
      window_acc += accept;
      ++window_n;
      ++count;
      for (std::size_t i = 0; i < d; ++i) zv[static_cast<Eigen::Index>(i)] = z[i];
      const Eigen::VectorXd dx = zv - mean;
      mean += dx / static_cast<double>(count);
      m2 += dx * (zv - mean).transpose();

      if (window_n == opt.adapt_interval) {
        const double rate = static_cast<double>(window_acc) / static_cast<double>(window_n);
        ++updates;
        log_scale += (rate - opt.target_acceptance) / std::sqrt(static_cast<double>(updates));
        log_scale = std::clamp(log_scale, -20.0, 20.0);
        window_acc = window_n = 0;
        if (step + 1 >= opt.adapt_start && count > d + 1) {
          Eigen::MatrixXd cov = m2 / static_cast<double>(count - 1);
          if (cov.trace() <= 0.0) throw NumericalError("adaptation error: chain has not moved, sample covariance is zero");
          cov = base * (cov + opt.regularization * Eigen::MatrixXd::Identity(d, d));
          Eigen::LLT<Eigen::MatrixXd> llt(cov);
          if (llt.info() == Eigen::Success) {
            chol = llt.matrixL();
            if (!adapted) {
              adapted = true;
              log_scale = 0.0;
              updates = 0;
            }
          }
        }
      }
    } else {
      post_acc += accept;
      if ((step - burn) % thin == 0) {
        const auto x = lp.from_unconstrained(z);
        for (std::size_t i = 0; i < d; ++i) ch.samples.values(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(i)) = x[i];
        ch.log_posterior.push_back(cur);
        ++row;
      }
    }
  }
  ch.acceptance_rate = post ? static_cast<double>(post_acc) / static_cast<double>(post) : 0.0;
  ch.burn_in_acceptance_rate = burn ? static_cast<double>(burn_acc) / static_cast<double>(burn) : 0.0;
  return ch;
}

Bands predictive_bands(const Matrix& params, const GridModel& model, const NoiseModel& noise, std::uint64_t seed,
                       double lower_q, double upper_q) {
  if (params.rows() == 0) throw ArgumentError("predictive bands need at least one parameter draw");
  const auto probe = model({params.data(), static_cast<std::size_t>(params.cols())});
  const auto g = static_cast<Eigen::Index>(probe.size());
  Matrix draws(params.rows(), g);
  kernels::fill_rows(draws, [&](std::size_t i, std::span<double> out) {
    const auto m = model({params.data() + i * static_cast<std::size_t>(params.cols()), static_cast<std::size_t>(params.cols())});
    Rng rng(derive_seed(seed, i));
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = noise.sd > 0.0 ? noise.perturb(m[j], rng) : m[j];
  });
  Bands b;
  for (Eigen::Index j = 0; j < g; ++j) {
    std::vector<double> col(static_cast<std::size_t>(draws.rows()));
    for (Eigen::Index i = 0; i < draws.rows(); ++i) col[static_cast<std::size_t>(i)] = draws(i, j);
    b.lower.push_back(sampling::empirical_quantile(col, lower_q));
    b.median.push_back(sampling::empirical_quantile(col, 0.5));
    b.upper.push_back(sampling::empirical_quantile(col, upper_q));
    b.mean.push_back(sampling::mean(col));
    b.variance.push_back(col.size() > 1 ? sampling::variance(col) : 0.0);
  }
  return b;
}

double coverage(const Bands& b, std::span<const double> data) {
  if (data.size() != b.lower.size()) throw ArgumentError("coverage: data and band lengths differ");
  std::size_t in = 0;
  for (std::size_t i = 0; i < data.size(); ++i) in += data[i] >= b.lower[i] && data[i] <= b.upper[i];
  return static_cast<double>(in) / static_cast<double>(data.size());
}

PushforwardStats summarize_pushforward(std::vector<double> values) {
  if (values.empty()) throw ArgumentError("pushforward of an empty sample");
  PushforwardStats s;
  s.mean = sampling::mean(values);
  s.variance = values.size() > 1 ? sampling::variance(values) : 0.0;
  s.q025 = sampling::empirical_quantile(values, 0.025);
  s.q05 = sampling::empirical_quantile(values, 0.05);
  s.q50 = sampling::empirical_quantile(values, 0.5);
  s.q95 = sampling::empirical_quantile(values, 0.95);
  s.q975 = sampling::empirical_quantile(values, 0.975);
  s.min = *std::min_element(values.begin(), values.end());
  s.negative_fraction =
      static_cast<double>(std::count_if(values.begin(), values.end(), [](double v) { return v < 0.0; })) /
      static_cast<double>(values.size());
  s.values = std::move(values);
  return s;
}

PushforwardStats pushforward(const Matrix& params, const kernels::RowModel& qoi) {
  if (params.rows() == 0) throw ArgumentError("pushforward of an empty sample");
  return summarize_pushforward(kernels::evaluate_rows(params, qoi));
}

}  // namespace mfu::bayes
