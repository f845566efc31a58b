#include "mfu/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "mfu/errors.hpp"
#include "mfu/kernels.hpp"

namespace mfu {

std::vector<double> SampleMatrix::column(std::size_t j) const {
  if (j >= cols()) throw ArgumentError("column index out of range");
  std::vector<double> out(rows());
  for (std::size_t i = 0; i < rows(); ++i) out[i] = values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return out;
}

std::size_t SampleMatrix::index_of(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw ArgumentError("no column named '" + name + "'");
  return static_cast<std::size_t>(it - names.begin());
}

namespace sampling {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double triangular_inverse_cdf(double lo, double hi, double mode, double u) {
  const double fc = (mode - lo) / (hi - lo);
  if (u < fc) return lo + std::sqrt(u * (hi - lo) * (mode - lo));
  return hi - std::sqrt((1.0 - u) * (hi - lo) * (hi - mode));
}

double triangular_log_pdf(double lo, double hi, double mode, double x) {
  if (x < lo || x > hi) return -kInf;
  double p;
  if (x < mode) {
    p = 2.0 * (x - lo) / ((hi - lo) * (mode - lo));
  } else if (x > mode) {
    p = 2.0 * (hi - x) / ((hi - lo) * (hi - mode));
  } else {
    p = 2.0 / (hi - lo);
  }
  return p > 0.0 ? std::log(p) : -kInf;
}

double normal_log_pdf(double mean, double sd, double x) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - kLogSqrt2Pi;
}

void check_triangular(double lo, double hi, double mode) {
  if (!(lo < hi) || !(lo <= mode && mode <= hi)) {
    std::ostringstream os;
    os << "triangular density requires lo < hi and lo <= mode <= hi (got " << lo << ", " << hi
       << ", " << mode << ")";
    throw ParameterError(os.str());
  }
}

Eigen::MatrixXd mvn_factor(const MultivariateNormal& m) {
  const Eigen::LLT<Eigen::MatrixXd> llt(m.covariance);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  // Semidefinite covariance: symmetric square root from the eigendecomposition.
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.covariance);
  Eigen::VectorXd ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (ev.minCoeff() < -1e-10 * scale) throw ParameterError("MVN covariance is not positive semidefinite");
  ev = ev.cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal();
}

}  // namespace

std::size_t parameter_count(Family f) {
  switch (f) {
    case Family::Triangular:
      return 1;
    default:
      return 2;
  }
}

std::size_t dimension(const Density& d) {
  return std::visit(overloaded{
                        [](const MultivariateNormal& m) { return static_cast<std::size_t>(m.mean.size()); },
                        [](const Hierarchical& h) { return h.hypers.size() + 1; },
                        [](const Empirical& e) { return static_cast<std::size_t>(e.samples.cols()); },
                        [](const auto&) { return std::size_t{1}; },
                    },
                    d);
}

void validate(const ScalarDensity& d) {
  std::visit(overloaded{
                 [](const Uniform& u) {
                   if (!(u.lo < u.hi)) throw ParameterError("uniform density requires lo < hi");
                 },
                 [](const Normal& n) {
                   if (!(n.sd >= 0.0) || !std::isfinite(n.mean)) throw ParameterError("normal density requires sd >= 0");
                 },
                 [](const LogNormal& l) {
                   if (!(l.sigma > 0.0) || !std::isfinite(l.mu)) throw ParameterError("log-normal density requires sigma > 0");
                 },
                 [](const TriangularUnitRange& t) { check_triangular(t.lo, t.hi, t.mode); },
             },
             d);
}

void validate(const Density& d) {
  std::visit(overloaded{
                 [](const Uniform& u) { validate(ScalarDensity{u}); },
                 [](const Normal& n) { validate(ScalarDensity{n}); },
                 [](const LogNormal& l) { validate(ScalarDensity{l}); },
                 [](const TriangularUnitRange& t) { validate(ScalarDensity{t}); },
                 [](const MultivariateNormal& m) {
                   const auto k = m.mean.size();
                   if (k == 0 || m.covariance.rows() != k || m.covariance.cols() != k)
                     throw ParameterError("MVN mean/covariance dimension mismatch");
                   const double asym = (m.covariance - m.covariance.transpose()).cwiseAbs().maxCoeff();
                   if (asym > 1e-12 * std::max(1.0, m.covariance.cwiseAbs().maxCoeff()))
                     throw ParameterError("MVN covariance is not symmetric");
                   (void)mvn_factor(m);
                 },
                 [](const Hierarchical& h) {
                   if (h.hypers.size() != parameter_count(h.family))
                     throw ParameterError("hierarchical density has the wrong number of hyper densities");
                   for (const auto& hd : h.hypers) validate(hd);
                   if (h.family == Family::Triangular && !(h.lo < h.hi))
                     throw ParameterError("hierarchical triangular requires lo < hi");
                 },
                 [](const Empirical& e) {
                   if (e.samples.rows() < 1 || e.samples.cols() < 1)
                     throw ParameterError("empirical density needs at least one sample");
                 },
                 [](const Kde& k) {
                   if (k.samples.empty() || !(k.bandwidth > 0.0)) throw ParameterError("KDE requires samples and bandwidth > 0");
                 },
             },
             d);
}

double draw(const ScalarDensity& d, Rng& rng) {
  return std::visit(overloaded{
                        [&](const Uniform& u) { return u.lo + (u.hi - u.lo) * rng.uniform(); },
                        [&](const Normal& n) { return n.mean + n.sd * rng.normal(); },
                        [&](const LogNormal& l) { return std::exp(l.mu + l.sigma * rng.normal()); },
                        [&](const TriangularUnitRange& t) {
                          return triangular_inverse_cdf(t.lo, t.hi, t.mode, rng.uniform());
                        },
                    },
                    d);
}

double draw_conditional(const Hierarchical& h, std::span<const double> hyper, Rng& rng) {
  double v = 0.0;
  switch (h.family) {
    case Family::Normal:
      if (hyper[1] < 0.0) throw ParameterError("conditional normal sd < 0");
      v = hyper[0] + hyper[1] * rng.normal();
      break;
    case Family::LogNormal:
      if (hyper[1] < 0.0) throw ParameterError("conditional log-normal sigma < 0");
      v = std::exp(hyper[0] + hyper[1] * rng.normal());
      break;
    case Family::Uniform:
      if (!(hyper[0] < hyper[1])) throw ParameterError("conditional uniform requires lo < hi");
      v = hyper[0] + (hyper[1] - hyper[0]) * rng.uniform();
      break;
    case Family::Triangular:
      check_triangular(h.lo, h.hi, hyper[0]);
      v = triangular_inverse_cdf(h.lo, h.hi, hyper[0], rng.uniform());
      break;
  }
  return v + h.shift;
}

Sampler::Sampler(Density d) : density_(std::move(d)), dim_(dimension(density_)) {
  validate(density_);
  if (const auto* m = std::get_if<MultivariateNormal>(&density_)) factor_ = mvn_factor(*m);
}

void Sampler::draw(Rng& rng, std::span<double> out) const {
  std::visit(overloaded{
                 [&](const MultivariateNormal& m) {
                   Eigen::VectorXd z(m.mean.size());
                   for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
                   const Eigen::VectorXd x = m.mean + factor_ * z;
                   std::copy(x.data(), x.data() + x.size(), out.begin());
                 },
                 [&](const Hierarchical& h) {
                   const std::size_t m = h.hypers.size();
                   for (std::size_t i = 0; i < m; ++i) out[i] = sampling::draw(h.hypers[i], rng);
                   out[m] = draw_conditional(h, out.first(m), rng);
                 },
                 [&](const Empirical& e) {
                   const auto r = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(e.samples.rows())));
                   for (Eigen::Index j = 0; j < e.samples.cols(); ++j) out[static_cast<std::size_t>(j)] = e.samples(r, j);
                 },
                 [&](const Kde& k) {
                   const auto r = rng.below(k.samples.size());
                   out[0] = k.samples[r] + k.bandwidth * rng.normal();
                 },
                 [&](const auto& s) { out[0] = sampling::draw(ScalarDensity{s}, rng); },
             },
             density_);
}

SampleMatrix sample(const Density& d, std::size_t n, std::uint64_t seed, std::vector<std::string> names) {
  if (n == 0) throw ArgumentError("sample: n must be >= 1");
  const Sampler sampler(d);
  const std::size_t dim = sampler.dim();
  if (names.empty()) {
    for (std::size_t j = 0; j < dim; ++j) names.push_back("x" + std::to_string(j));
  } else if (names.size() != dim) {
    throw ArgumentError("sample: name count does not match density dimension");
  }
  SampleMatrix out{Matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim)), std::move(names), seed};
  kernels::fill_rows(out.values, [&](std::size_t i, std::span<double> row) {
    Rng rng(derive_seed(seed, i));
    sampler.draw(rng, row);
  });
  return out;
}

double log_pdf(const ScalarDensity& d, double x) {
  return std::visit(overloaded{
                        [&](const Uniform& u) { return (x >= u.lo && x <= u.hi) ? -std::log(u.hi - u.lo) : -kInf; },
                        [&](const Normal& n) {
                          if (n.sd == 0.0) return x == n.mean ? kInf : -kInf;
                          return normal_log_pdf(n.mean, n.sd, x);
                        },
                        [&](const LogNormal& l) {
                          if (!(x > 0.0)) return -kInf;
                          return normal_log_pdf(l.mu, l.sigma, std::log(x)) - std::log(x);
                        },
                        [&](const TriangularUnitRange& t) { return triangular_log_pdf(t.lo, t.hi, t.mode, x); },
                    },
                    d);
}

double conditional_log_pdf(const Hierarchical& h, std::span<const double> hyper, double x) {
  const double y = x - h.shift;
  switch (h.family) {
    case Family::Normal:
      if (!(hyper[1] > 0.0)) return -kInf;
      return normal_log_pdf(hyper[0], hyper[1], y);
    case Family::LogNormal:
      if (!(hyper[1] > 0.0) || !(y > 0.0)) return -kInf;
      return normal_log_pdf(hyper[0], hyper[1], std::log(y)) - std::log(y);
    case Family::Uniform:
      if (!(hyper[0] < hyper[1]) || y < hyper[0] || y > hyper[1]) return -kInf;
      return -std::log(hyper[1] - hyper[0]);
    case Family::Triangular:
      if (!(h.lo <= hyper[0] && hyper[0] <= h.hi)) return -kInf;
      return triangular_log_pdf(h.lo, h.hi, hyper[0], y);
  }
  return -kInf;
}

double log_pdf(const Density& d, std::span<const double> x) {
  if (x.size() != dimension(d)) throw ArgumentError("log_pdf: dimension mismatch");
  return std::visit(overloaded{
                        [&](const MultivariateNormal& m) {
                          const Eigen::LLT<Eigen::MatrixXd> llt(m.covariance);
                          if (llt.info() != Eigen::Success) throw NumericalError("log_pdf: singular MVN covariance");
                          const Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
                          const Eigen::VectorXd r = llt.matrixL().solve(v - m.mean);
                          const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
                          return -0.5 * r.squaredNorm() - 0.5 * logdet - static_cast<double>(x.size()) * kLogSqrt2Pi;
                        },
                        [&](const Hierarchical& h) {
                          const std::size_t m = h.hypers.size();
                          double lp = 0.0;
                          for (std::size_t i = 0; i < m; ++i) lp += log_pdf(h.hypers[i], x[i]);
                          if (!std::isfinite(lp)) return -kInf;
                          return lp + conditional_log_pdf(h, x.first(m), x[m]);
                        },
                        [&](const Empirical&) -> double {
                          throw UnsupportedConfiguration("empirical densities have no log-density");
                        },
                        [&](const Kde& k) { return std::log(kde_eval(k, x[0])); },
                        [&](const auto& s) { return log_pdf(ScalarDensity{s}, x[0]); },
                    },
                    d);
}

double quantile(const ScalarDensity& d, double p) {
  if (!(p > 0.0 && p < 1.0)) throw ArgumentError("quantile: p must lie in (0, 1)");
  return std::visit(overloaded{
                        [&](const Uniform& u) { return u.lo + p * (u.hi - u.lo); },
                        [&](const Normal& n) { return n.mean + n.sd * normal_quantile(p); },
                        [&](const LogNormal& l) { return std::exp(l.mu + l.sigma * normal_quantile(p)); },
                        [&](const TriangularUnitRange& t) { return triangular_inverse_cdf(t.lo, t.hi, t.mode, p); },
                    },
                    d);
}

Moments moments(const ScalarDensity& d) {
  return std::visit(overloaded{
                        [](const Uniform& u) { return Moments{0.5 * (u.lo + u.hi), (u.hi - u.lo) * (u.hi - u.lo) / 12.0}; },
                        [](const Normal& n) { return Moments{n.mean, n.sd * n.sd}; },
                        [](const LogNormal& l) {
                          const double s2 = l.sigma * l.sigma;
                          return Moments{std::exp(l.mu + 0.5 * s2), (std::exp(s2) - 1.0) * std::exp(2.0 * l.mu + s2)};
                        },
                        [](const TriangularUnitRange& t) {
                          const double a = t.lo, b = t.hi, c = t.mode;
                          return Moments{(a + b + c) / 3.0, (a * a + b * b + c * c - a * b - a * c - b * c) / 18.0};
                        },
                    },
                    d);
}

std::pair<double, double> support(const ScalarDensity& d) {
  return std::visit(overloaded{
                        [](const Uniform& u) { return std::pair{u.lo, u.hi}; },
                        [](const Normal&) { return std::pair{-kInf, kInf}; },
                        [](const LogNormal&) { return std::pair{0.0, kInf}; },
                        [](const TriangularUnitRange& t) { return std::pair{t.lo, t.hi}; },
                    },
                    d);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ArgumentError("normal_quantile: p must lie in (0, 1)");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Halley refinement; use the upper tail for p > 1/2 to avoid cancellation.
  const double e = (p > 0.5) ? -(0.5 * std::erfc(x / std::numbers::sqrt2) - (1.0 - p))
                             : 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

LogNormalParams elicit_lognormal_from_quantiles(double p1, double x1, double p2, double x2) {
  if (!(0.0 < p1 && p1 < p2 && p2 < 1.0)) throw ArgumentError("elicitation requires 0 < p1 < p2 < 1");
  if (!(0.0 < x1 && x1 < x2)) throw ArgumentError("elicitation requires 0 < x1 < x2");
  const double z1 = normal_quantile(p1);
  const double z2 = normal_quantile(p2);
  const double sigma = (std::log(x2) - std::log(x1)) / (z2 - z1);
  return {std::log(x1) - sigma * z1, sigma};
}

LogNormalParams elicit_lognormal_from_mode(double mode, double p, double upper) {
  if (!(p > 0.0 && p < 1.0)) throw ArgumentError("elicitation requires 0 < p < 1");
  if (!(mode > 0.0) || !(upper > mode)) throw ArgumentError("elicitation requires 0 < mode < upper");
  // log(upper / mode) = sigma^2 + sigma z; take the positive root.
  const double z = normal_quantile(p);
  const double gap = std::log(upper) - std::log(mode);
  const double sigma = 0.5 * (-z + std::sqrt(z * z + 4.0 * gap));
  if (!(sigma > 0.0)) throw ArgumentError("elicitation produced a non-positive sigma");
  return {std::log(mode) + sigma * sigma, sigma};
}

double silverman_bandwidth(std::span<const double> samples) {
  if (samples.size() < 2) throw ArgumentError("KDE needs at least two samples");
  const double sd = std::sqrt(variance(samples));
  if (!(sd > 0.0)) throw DegenerateError("KDE bandwidth is zero: samples have no spread");
  return 1.06 * sd * std::pow(static_cast<double>(samples.size()), -0.2);
}

Kde kde_fit(std::span<const double> samples, std::optional<double> bandwidth) {
  const double h = bandwidth ? *bandwidth : silverman_bandwidth(samples);
  if (samples.size() < 2) throw ArgumentError("KDE needs at least two samples");
  if (!(h > 0.0)) throw DegenerateError("KDE bandwidth must be positive");
  return Kde{{samples.begin(), samples.end()}, h};
}

double kde_eval(const Kde& kde, double x) {
  const double pt[] = {x};
  return kernels::serial::kde_eval_many(kde.samples, kde.bandwidth, pt)[0];
}

std::vector<double> kde_eval(const Kde& kde, std::span<const double> xs) {
  return kernels::kde_eval_many(kde.samples, kde.bandwidth, xs);
}

double mean(std::span<const double> x) {
  if (x.empty()) throw ArgumentError("mean of an empty sample");
  return kernels::pairwise_sum(x) / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  if (x.size() < 2) throw ArgumentError("variance needs at least two values");
  const double m = mean(x);
  std::vector<double> sq(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) sq[i] = (x[i] - m) * (x[i] - m);
  return kernels::pairwise_sum(sq) / static_cast<double>(x.size() - 1);
}

double empirical_quantile(std::span<const double> x, double p) {
  if (x.empty()) throw ArgumentError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("quantile level must lie in [0, 1]");
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  const double h = p * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ArgumentError("KS statistic needs two nonempty samples");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = static_cast<double>(x.size()), nb = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 3) throw ArgumentError("pearson needs two equal-length samples of size >= 3");
  const double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng.below(i)]);
  return p;
}

}  // namespace sampling
}  // namespace mfu
