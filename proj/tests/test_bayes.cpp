#include <doctest.h>

#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>

#include "mfu/bayes.hpp"
#include "mfu/errors.hpp"

using namespace mfu;
using namespace mfu::bayes;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double normal_logpdf(double x, double m, double s) {
  return -0.5 * std::log(2.0 * std::numbers::pi) - std::log(s) - 0.5 * (x - m) * (x - m) / (s * s);
}

}  // namespace

TEST_CASE("transforms round trip") {
  const ParamSpec id{"a"}, lg{"b", Transform::Log, 1.0}, lt{"c", Transform::Logit, -1.0, 3.0};
  for (double x : {-2.0, 0.0, 5.5}) CHECK(from_unconstrained(id, to_unconstrained(id, x)) == x);
  for (double x : {1.001, 2.0, 40.0}) CHECK(from_unconstrained(lg, to_unconstrained(lg, x)) == doctest::Approx(x).epsilon(1e-14));
  for (double x : {-0.999, 0.0, 2.9}) CHECK(from_unconstrained(lt, to_unconstrained(lt, x)) == doctest::Approx(x).epsilon(1e-13));
  CHECK_THROWS_AS(to_unconstrained(lg, 1.0), DomainError);
  CHECK_THROWS_AS(to_unconstrained(lt, 3.0), DomainError);
  CHECK_THROWS_AS(to_unconstrained(lt, -1.5), DomainError);
}

TEST_CASE("log-Jacobian matches a finite difference of the inverse transform") {
  for (const auto& p : {ParamSpec{"a"}, ParamSpec{"b", Transform::Log, 0.5}, ParamSpec{"c", Transform::Logit, 0.0, 0.1}}) {
    for (double z : {-3.0, -0.2, 0.0, 1.7}) {
      const double h = 1e-6;
      const double d = (from_unconstrained(p, z + h) - from_unconstrained(p, z - h)) / (2 * h);
      CHECK(log_jacobian(p, z) == doctest::Approx(std::log(std::abs(d))).epsilon(1e-6));
    }
  }
}

TEST_CASE("logit inverse stays inside bounds for extreme arguments") {
  const ParamSpec p{"s", Transform::Logit, 0.0, 0.1};
  CHECK(from_unconstrained(p, 800.0) <= 0.1);
  CHECK(from_unconstrained(p, -800.0) >= 0.0);
  CHECK(std::isfinite(log_jacobian(p, 800.0)));
}

TEST_CASE("Gaussian log-likelihood including constants") {
  const std::vector<double> d{1.0, 2.0, 2.5}, m{1.1, 1.9, 2.0};
  double ref = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) ref += normal_logpdf(d[i], m[i], 0.3);
  CHECK(log_likelihood({NoiseModel::Kind::GaussianAdditive, 0.3}, d, m) == doctest::Approx(ref).epsilon(1e-14));
}

TEST_CASE("log-normal multiplicative likelihood") {
  const std::vector<double> d{0.5, 0.7}, m{0.45, 0.8};
  const NoiseModel n{NoiseModel::Kind::LognormalMultiplicative, 0.01};
  double ref = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) ref += normal_logpdf(std::log(d[i]), std::log(m[i]), 0.01);
  CHECK(log_likelihood(n, d, m) == doctest::Approx(ref).epsilon(1e-14));
  const std::vector<double> bad{0.45, -1e-9};
  CHECK(log_likelihood(n, d, bad) == kNegInf);
  CHECK_THROWS_AS(log_likelihood(n, d, std::vector<double>{1.0}), ArgumentError);
  CHECK_THROWS_AS(log_likelihood({NoiseModel::Kind::GaussianAdditive, 0.0}, d, m), ArgumentError);
}

TEST_CASE("noise perturbation distributions") {
  Rng rng(3);
  const NoiseModel add{NoiseModel::Kind::GaussianAdditive, 0.5};
  const NoiseModel mul{NoiseModel::Kind::LognormalMultiplicative, 0.2};
  std::vector<double> a(20000), b(20000);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = add.perturb(2.0, rng);
    b[i] = std::log(mul.perturb(2.0, rng));
  }
  CHECK(sampling::mean(a) == doctest::Approx(2.0).epsilon(0.01));
  CHECK(std::sqrt(sampling::variance(a)) == doctest::Approx(0.5).epsilon(0.03));
  CHECK(sampling::mean(b) == doctest::Approx(std::log(2.0)).epsilon(0.01));
  CHECK(std::sqrt(sampling::variance(b)) == doctest::Approx(0.2).epsilon(0.03));
}

TEST_CASE("likelihood is skipped when the prior rejects") {
  auto calls = std::make_shared<std::atomic<int>>(0);
  LogPosterior lp({{"x"}}, [](std::span<const double> x) { return x[0] < 0.0 ? kNegInf : 0.0; },
                  [calls](std::span<const double>) {
                    ++*calls;
                    return -1.0;
                  });
  const std::vector<double> neg{-1.0}, pos{1.0};
  CHECK(lp(neg) == kNegInf);
  CHECK(*calls == 0);
  CHECK(lp(pos) == -1.0);
  CHECK(*calls == 1);
  CHECK(lp.diagnostics().evaluations == 2);
  CHECK(lp.diagnostics().rejected == 1);
}

TEST_CASE("unconstrained density adds the log-Jacobian") {
  LogPosterior lp({{"x", Transform::Log, 0.0}}, [](std::span<const double> x) { return -x[0]; },
                  [](std::span<const double>) { return 0.0; });
  const std::vector<double> z{0.3};
  CHECK(lp.unconstrained(z) == doctest::Approx(-std::exp(0.3) + 0.3));
}

TEST_CASE("Metropolis recovers a correlated Gaussian") {
  // N(m, S) with S = [[1, 0.6], [0.6, 0.5]]
  const double s11 = 1.0, s12 = 0.6, s22 = 0.5, det = s11 * s22 - s12 * s12;
  LogPosterior lp({{"a"}, {"b"}},
                  [&](std::span<const double> x) {
                    const double u = x[0] - 1.0, v = x[1] + 2.0;
                    return -0.5 * (s22 * u * u - 2 * s12 * u * v + s11 * v * v) / det;
                  },
                  [](std::span<const double>) { return 0.0; });
  const std::vector<double> init{0.0, 0.0};
  const auto ch = adaptive_metropolis(lp, init, 60000, 17);
  const auto a = ch.samples.column(0), b = ch.samples.column(1);
  CHECK(sampling::mean(a) == doctest::Approx(1.0).epsilon(0.08));
  CHECK(sampling::mean(b) == doctest::Approx(-2.0).epsilon(0.04));
  CHECK(sampling::variance(a) == doctest::Approx(s11).epsilon(0.15));
  CHECK(sampling::variance(b) == doctest::Approx(s22).epsilon(0.15));
  CHECK(sampling::pearson(a, b) == doctest::Approx(s12 / std::sqrt(s11 * s22)).epsilon(0.1));
  CHECK(ch.acceptance_rate > 0.15);
  CHECK(ch.acceptance_rate < 0.5);
}

TEST_CASE("Metropolis with a log transform samples a log-normal target") {
  // x ~ LogNormal(0.2, 0.4) written as a density in x.
  LogPosterior lp({{"x", Transform::Log, 0.0}},
                  [](std::span<const double> x) {
                    if (!(x[0] > 0.0)) return kNegInf;
                    const double l = std::log(x[0]);
                    return -l - 0.5 * (l - 0.2) * (l - 0.2) / 0.16;
                  },
                  [](std::span<const double>) { return 0.0; });
  const std::vector<double> init{1.0};
  const auto ch = adaptive_metropolis(lp, init, 40000, 5);
  auto x = ch.samples.column(0);
  for (auto& v : x) v = std::log(v);
  CHECK(sampling::mean(x) == doctest::Approx(0.2).epsilon(0.15));
  CHECK(std::sqrt(sampling::variance(x)) == doctest::Approx(0.4).epsilon(0.1));
}

TEST_CASE("Metropolis on a linear-Gaussian regression matches the closed-form posterior") {
  // y = a + b x + N(0, 0.1^2), flat prior: posterior mean = least squares.
  std::vector<double> x, y;
  Rng rng(9);
  for (int i = 0; i < 30; ++i) {
    x.push_back(i / 10.0);
    y.push_back(0.5 + 1.5 * x.back() + 0.1 * rng.normal());
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double b_ls = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double a_ls = (sy - b_ls * sx) / n;
  const double var_b = 0.01 * n / (n * sxx - sx * sx);

  const NoiseModel noise{NoiseModel::Kind::GaussianAdditive, 0.1};
  LogPosterior lp({{"a"}, {"b"}}, [](std::span<const double>) { return 0.0; },
                  [&](std::span<const double> p) {
                    std::vector<double> m(x.size());
                    for (std::size_t i = 0; i < x.size(); ++i) m[i] = p[0] + p[1] * x[i];
                    return log_likelihood(noise, y, m);
                  });
  const std::vector<double> init{0.0, 1.0};
  const auto ch = adaptive_metropolis(lp, init, 40000, 21);
  CHECK(sampling::mean(ch.samples.column(0)) == doctest::Approx(a_ls).epsilon(0.05));
  CHECK(sampling::mean(ch.samples.column(1)) == doctest::Approx(b_ls).epsilon(0.02));
  CHECK(sampling::variance(ch.samples.column(1)) == doctest::Approx(var_b).epsilon(0.2));
}

TEST_CASE("chain bookkeeping and thinning") {
  LogPosterior lp({{"x"}}, [](std::span<const double> x) { return -0.5 * x[0] * x[0]; },
                  [](std::span<const double>) { return 0.0; });
  const std::vector<double> init{0.0};
  MetropolisOptions opt;
  opt.max_retained = 100;
  const auto ch = adaptive_metropolis(lp, init, 2000, 1, opt);
  CHECK(ch.burn_in == 1000);
  CHECK(ch.thin == 10);
  CHECK(ch.samples.rows() == 100);
  CHECK(ch.log_posterior.size() == 100);
  CHECK(ch.samples.names == std::vector<std::string>{"x"});
  const auto csv = ch.to_csv();
  CHECK(csv.rfind("x,log_posterior\n", 0) == 0);
}

TEST_CASE("chains are deterministic under a seed") {
  LogPosterior lp({{"x"}, {"y"}}, [](std::span<const double> x) { return -0.5 * (x[0] * x[0] + x[1] * x[1]); },
                  [](std::span<const double>) { return 0.0; });
  const std::vector<double> init{0.1, 0.2};
  const auto a = adaptive_metropolis(lp, init, 3000, 77);
  const auto b = adaptive_metropolis(lp, init, 3000, 77);
  const auto c = adaptive_metropolis(lp, init, 3000, 78);
  CHECK(a.samples.values == b.samples.values);
  CHECK(a.samples.values != c.samples.values);
}

TEST_CASE("Metropolis argument and start errors") {
  LogPosterior lp({{"x", Transform::Log, 0.0}}, [](std::span<const double> x) { return x[0] > 5.0 ? kNegInf : 0.0; },
                  [](std::span<const double>) { return 0.0; });
  const std::vector<double> good{1.0}, bad{6.0};
  CHECK_THROWS_AS(adaptive_metropolis(lp, good, 999, 1), ArgumentError);
  CHECK_THROWS_AS(adaptive_metropolis(lp, bad, 2000, 1), NumericalError);
  MetropolisOptions zero;
  zero.initial_sd = {0.0};
  CHECK_THROWS_AS(adaptive_metropolis(lp, good, 2000, 1, zero), NumericalError);
}

TEST_CASE("predictive bands for a point-mass parameter match normal quantiles") {
  Matrix p = Matrix::Zero(20000, 1);
  const GridModel model = [](std::span<const double>) { return std::vector<double>{0.0, 10.0}; };
  const auto b = predictive_bands(p, model, {NoiseModel::Kind::GaussianAdditive, 1.0}, 4);
  CHECK(b.lower[0] == doctest::Approx(-1.959964).epsilon(0.05));
  CHECK(b.upper[1] == doctest::Approx(11.959964).epsilon(0.01));
  CHECK(b.median[1] == doctest::Approx(10.0).epsilon(0.01));
  CHECK(b.variance[0] == doctest::Approx(1.0).epsilon(0.05));
  const std::vector<double> d{0.0, 20.0};
  CHECK(coverage(b, d) == 0.5);
}

TEST_CASE("predictive bands are identical serially and in parallel") {
  Matrix p(500, 1);
  for (Eigen::Index i = 0; i < p.rows(); ++i) p(i, 0) = 0.01 * static_cast<double>(i);
  const GridModel model = [](std::span<const double> x) { return std::vector<double>{x[0], 2 * x[0]}; };
  const NoiseModel n{NoiseModel::Kind::GaussianAdditive, 0.3};
  kernels::set_threads(1);
  const auto a = predictive_bands(p, model, n, 8);
  kernels::set_threads(4);
  const auto b = predictive_bands(p, model, n, 8);
  CHECK(a.lower == b.lower);
  CHECK(a.upper == b.upper);
}

TEST_CASE("pushforward summary statistics") {
  std::vector<double> v;
  for (int i = -10; i <= 89; ++i) v.push_back(i);
  const auto s = summarize_pushforward(v);
  CHECK(s.mean == doctest::Approx(39.5));
  CHECK(s.min == -10.0);
  CHECK(s.negative_fraction == doctest::Approx(0.1));
  CHECK(s.q50 == doctest::Approx(39.5));
  CHECK(s.q95 == doctest::Approx(sampling::empirical_quantile(v, 0.95)));
  CHECK_THROWS_AS(summarize_pushforward({}), ArgumentError);
  Matrix p(3, 1);
  p << 1, 2, 3;
  const auto pf = pushforward(p, [](std::span<const double> x) { return x[0] * x[0]; });
  CHECK(pf.values == std::vector<double>{1, 4, 9});
}
