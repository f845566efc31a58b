#include <doctest.h>

#include <cmath>

#include <json.hpp>

#include "mfu/dci.hpp"
#include "mfu/errors.hpp"

using namespace mfu;
using namespace mfu::dci;

namespace {

std::vector<double> normal_draws(std::size_t n, double m, double s, std::uint64_t seed) {
  const auto x = sampling::sample(sampling::Normal{m, s}, n, seed);
  return x.column(0);
}

}  // namespace

TEST_CASE("unravel and ravel are inverse") {
  const std::vector<cplx> lam{{-0.5, -0.1}, {-2.0, -3.0}, {-1e-4, -7.0}};
  const auto z = unravel(lam);
  REQUIRE(z.size() == 6);
  CHECK(z[0] == doctest::Approx(std::log(0.5)));
  CHECK(z[3] == doctest::Approx(std::log(0.1)));
  const auto back = ravel(z);
  REQUIRE(back.size() == 4);
  CHECK(back[0] == cplx{});
  for (std::size_t k = 0; k < lam.size(); ++k) {
    CHECK(back[k + 1].real() == doctest::Approx(lam[k].real()).epsilon(1e-14));
    CHECK(back[k + 1].imag() == doctest::Approx(lam[k].imag()).epsilon(1e-14));
  }
}

TEST_CASE("unravel rejects non-negative parts") {
  const std::vector<cplx> re{{0.0, -1.0}}, im{{-1.0, 0.5}};
  CHECK_THROWS_AS(unravel(re), DomainError);
  CHECK_THROWS_AS(unravel(im), DomainError);
  const std::vector<double> odd{1.0, 2.0, 3.0};
  CHECK_THROWS_AS(ravel(odd), ArgumentError);
}

TEST_CASE("ravelled fractional eigenvalues reproduce the operator") {
  Matrix na(1, 2);
  na << 0.1, 1.4;
  const auto rows = fractional_eigenvalues(na, 8, 4.0);
  const auto lam = transport::dispersion_eigenvalues(transport::Fractional{0.1, 1.4}, 8, 4.0);
  const auto back = ravel(unravel(rows[0]));
  for (std::size_t k = 1; k <= 8; ++k) CHECK(std::abs(back[k] - lam[k]) < 1e-14 * std::abs(lam[k]));
}

TEST_CASE("initial fit of a rank-deficient family is regularized") {
  const auto nu_alpha = sampling::sample(sampling::Uniform{0.05, 0.15}, 50, 2);
  Matrix na(50, 2);
  const auto al = sampling::sample(sampling::TriangularUnitRange{1.0, 2.0, 1.5}, 50, 3);
  na.col(0) = nu_alpha.values.col(0);
  na.col(1) = al.values.col(0);
  const auto rows = fractional_eigenvalues(na, 10, 4.0);
  const auto fit = fit_initial_mvn(rows);
  CHECK(fit.mvn.mean.size() == 20);
  CHECK(fit.regularized);
  CHECK(fit.jitter == 1e-10);
  Eigen::LLT<Eigen::MatrixXd> llt(fit.mvn.covariance);
  CHECK(llt.info() == Eigen::Success);
  // Sample mean of log(-Re lambda_1) equals the mean of log(nu) + alpha log(a_1) + log|cos|.
  double ref = 0.0;
  for (Eigen::Index i = 0; i < na.rows(); ++i)
    ref += std::log(na(i, 0)) + na(i, 1) * std::log(transport::wavenumber(1, 4.0)) +
           std::log(std::abs(std::cos(0.5 * na(i, 1) * std::numbers::pi)));
  CHECK(fit.mvn.mean[0] == doctest::Approx(ref / 50.0).epsilon(1e-12));
}

TEST_CASE("initial fit needs dim + 1 rows") {
  Matrix na(5, 2);
  na.col(0).setConstant(0.1);
  na.col(1).setLinSpaced(1.1, 1.9);
  const auto rows = fractional_eigenvalues(na, 4, 4.0);
  CHECK_THROWS_AS(fit_initial_mvn(rows), ArgumentError);
  CHECK_THROWS_AS(fit_initial_mvn({}), ArgumentError);
}

TEST_CASE("target equal to predict accepts about 1/1.1 of the proposals") {
  const auto t = normal_draws(1000, 0.0, 1.0, 1);
  Matrix props(10000, 1);
  const auto qs = normal_draws(10000, 0.0, 1.0, 2);
  for (Eigen::Index i = 0; i < props.rows(); ++i) props(i, 0) = qs[static_cast<std::size_t>(i)];
  const SampleMatrix p{props, {"x"}, 2};
  const auto up = dci_update(t, t, p, qs, 5);
  CHECK(up.max_ratio == 1.0);
  CHECK(up.m == doctest::Approx(1.1));
  CHECK(up.acceptance_rate >= 0.88);
  CHECK(up.acceptance_rate <= 0.95);
  CHECK(up.warnings.empty());
}

TEST_CASE("update moves the pushforward to the target") {
  const std::size_t n = 20000;
  const auto x = sampling::sample(sampling::Normal{0.0, 1.0}, n, 3, {"x"});
  const auto q = x.column(0);
  const auto target = normal_draws(2000, 0.5, 0.5, 4);
  const std::vector<double> predict(q.begin(), q.begin() + 2000);
  const auto up = dci_update(target, predict, x, [](std::span<const double> r) { return r[0]; }, 6);
  REQUIRE(up.accepted.rows() > 1000);
  CHECK(up.accepted.rows() == up.accepted_rows.size());
  CHECK(sampling::mean(up.accepted_qoi) == doctest::Approx(0.5).epsilon(0.06));
  CHECK(std::sqrt(sampling::variance(up.accepted_qoi)) == doctest::Approx(0.5).epsilon(0.08));
  const auto held_out = normal_draws(2000, 0.5, 0.5, 99);
  CHECK(sampling::ks_statistic(up.accepted_qoi, held_out) < 0.06);
  for (std::size_t a = 0; a < up.accepted_rows.size(); ++a)
    CHECK(up.accepted.values(static_cast<Eigen::Index>(a), 0) == q[up.accepted_rows[a]]);
}

TEST_CASE("update is deterministic and reports diagnostics") {
  const auto x = sampling::sample(sampling::Normal{0.0, 1.0}, 2000, 3, {"x"});
  const auto q = x.column(0);
  const auto t = normal_draws(500, 0.2, 0.8, 4);
  const std::vector<double> pr(q.begin(), q.begin() + 500);
  const auto a = dci_update(t, pr, x, q, 10);
  const auto b = dci_update(t, pr, x, q, 10);
  CHECK(a.accepted_rows == b.accepted_rows);
  const auto j = nlohmann::json::parse(a.diagnostics_json());
  CHECK(j["accepted"] == a.accepted_rows.size());
  CHECK(j["M"].get<double>() == doctest::Approx(1.1 * a.max_ratio));
  CHECK(!a.warnings.empty());  // Silverman bandwidths of different samples differ
}

TEST_CASE("non-overlapping supports and bad arguments") {
  const auto t = normal_draws(200, 100.0, 0.1, 1);
  const auto x = sampling::sample(sampling::Normal{0.0, 1.0}, 300, 3, {"x"});
  const auto q = x.column(0);
  CHECK_THROWS_AS(dci_update(t, q, x, q, 1), NumericalError);
  const std::vector<double> small(50, 0.0);
  CHECK_THROWS_AS(dci_update(small, q, x, q, 1), ArgumentError);
  const std::vector<double> short_q(q.begin(), q.begin() + 10);
  CHECK_THROWS_AS(dci_update(q, q, x, short_q, 1), ArgumentError);
}

TEST_CASE("infinite ratio names the proposal") {
  // Predict concentrated near 0, target spread out: the predict density underflows at q = 40.
  const auto t = normal_draws(200, 0.0, 20.0, 1);
  const auto pr = normal_draws(200, 0.0, 0.01, 2);
  Matrix v(2, 1);
  v << 0.0, 40.0;
  const SampleMatrix p{v, {"x"}, 0};
  const std::vector<double> q{0.0, 40.0};
  try {
    dci_update(t, pr, p, q, 1);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("proposal 1") != std::string::npos);
  }
}
