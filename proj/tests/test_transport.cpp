#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mfu/errors.hpp"
#include "mfu/transport.hpp"

using namespace mfu;
using namespace mfu::transport;

namespace {

double pulse(const TransportConfig& cfg, double x, double s) {
  double d = std::remainder(x - s, cfg.lx);
  return std::exp(-d * d / (2.0 * cfg.ell * cfg.ell));
}

double grid_mean(const std::vector<double>& c) {
  double s = 0.0;
  for (double v : c) s += v;
  return s / static_cast<double>(c.size());
}

double l2(const std::vector<double>& c) {
  double s = 0.0;
  for (double v : c) s += v * v;
  return std::sqrt(s);
}

GeneralLinear zero_operator(const TransportConfig& cfg) { return {std::vector<cplx>(cfg.modes() + 1)}; }

// Circular center of mass on [0, Lx).
double center_of_mass(const std::vector<double>& c, const TransportConfig& cfg) {
  double re = 0.0, im = 0.0;
  for (std::size_t j = 0; j < c.size(); ++j) {
    const double th = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(c.size());
    re += c[j] * std::cos(th);
    im += c[j] * std::sin(th);
  }
  double th = std::atan2(im, re);
  if (th < 0) th += 2.0 * std::numbers::pi;
  return th * cfg.lx / (2.0 * std::numbers::pi);
}

}  // namespace

TEST_CASE("config validation") {
  TransportConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.nx = 500;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
  cfg = {};
  cfg.ell = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
  cfg = {};
  cfg.check_times.clear();
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
}

TEST_CASE("fractional eigenvalue limits") {
  const TransportConfig cfg;
  const auto two = dispersion_eigenvalues(Fractional{0.1, 2.0}, 20, cfg.lx);
  CHECK(two[0] == cplx{});
  for (std::size_t k = 1; k <= 20; ++k) {
    const double a = wavenumber(k, cfg.lx);
    CHECK(two[k].real() == doctest::Approx(-0.1 * a * a).epsilon(1e-14));
    CHECK(two[k].imag() == 0.0);
  }
  const auto near1 = dispersion_eigenvalues(Fractional{0.1, 1.0 + 1e-9}, 20, cfg.lx);
  for (std::size_t k = 1; k <= 20; ++k) {
    CHECK(std::abs(near1[k].real()) < 1e-8 * std::abs(near1[k].imag()));
    CHECK(near1[k].imag() < 0.0);
  }
  const auto mid = dispersion_eigenvalues(Fractional{0.1, 1.5}, 20, cfg.lx);
  for (std::size_t k = 1; k <= 20; ++k) {
    const double mag = 0.1 * std::pow(wavenumber(k, cfg.lx), 1.5);
    CHECK(mid[k].real() == doctest::Approx(-mag * std::abs(std::cos(0.75 * std::numbers::pi))));
    CHECK(mid[k].imag() == doctest::Approx(-mag * std::sin(0.75 * std::numbers::pi)));
  }
}

TEST_CASE("complex fractional eigenvalues") {
  const TransportConfig cfg;
  const auto lam = dispersion_eigenvalues(ComplexFractional{0.2, 1.5, 0.0, 1.3}, 30, cfg.lx);
  for (std::size_t k = 1; k <= 30; ++k) {
    CHECK(lam[k].imag() == 0.0);
    CHECK(lam[k].real() == doctest::Approx(-0.2 * std::pow(wavenumber(k, cfg.lx), 1.5)));
  }
  const auto adv = dispersion_eigenvalues(ComplexFractional{0.2, 1.5, 0.1, 1.3}, 30, cfg.lx);
  for (std::size_t k = 1; k <= 30; ++k) CHECK(adv[k].imag() < 0.0);
}

TEST_CASE("operator domain errors") {
  const TransportConfig cfg;
  CHECK_THROWS_AS(dispersion_eigenvalues(Fractional{0.1, 2.1}, 10, cfg.lx), DomainError);
  CHECK_THROWS_AS(dispersion_eigenvalues(Fractional{0.1, 1.0}, 10, cfg.lx), DomainError);
  CHECK_THROWS_AS(dispersion_eigenvalues(Fractional{-0.1, 1.5}, 10, cfg.lx), DomainError);
  CHECK_THROWS_AS(dispersion_eigenvalues(ComplexFractional{0.1, 1.5, -0.1, 1.5}, 10, cfg.lx), DomainError);
  CHECK_THROWS_AS(dispersion_eigenvalues(ComplexFractional{0.1, 0.5, 0.1, 1.5}, 10, cfg.lx), DomainError);
  std::vector<cplx> bad(11);
  bad[0] = {0.1, 0.0};
  CHECK_THROWS_AS(dispersion_eigenvalues(GeneralLinear{bad}, 10, cfg.lx), DomainError);
}

TEST_CASE("unstable operator is a numerical error") {
  const TransportConfig cfg;
  auto op = zero_operator(cfg);
  op.lambda[3] = {0.5, 0.0};
  CHECK_THROWS_AS(solve_at(cfg, {1.0, 0.01, 1.0}, op, 0.5), NumericalError);
}

TEST_CASE("t = 0 reproduces the initial pulse") {
  const TransportConfig cfg;
  const auto sol = solve_at(cfg, {1.0, 0.01, 1.3}, Fractional{0.1, 1.5}, 0.0);
  double residue = 1.0;
  const auto c = grid_values(sol, cfg, &residue);
  for (std::size_t j = 0; j < cfg.nx; ++j) CHECK(c[j] == doctest::Approx(pulse(cfg, j * cfg.dx(), 1.3)).epsilon(1e-10).scale(1.0));
  CHECK(residue < 1e-9);
}

TEST_CASE("pure advection is translation") {
  const TransportConfig cfg;
  const auto sol = solve_at(cfg, {1.0, 0.0, 1.0}, zero_operator(cfg), 1.0);
  const auto c = grid_values(sol, cfg);
  for (std::size_t j = 0; j < cfg.nx; ++j) CHECK(std::abs(c[j] - pulse(cfg, j * cfg.dx(), 2.0)) < 1e-10);
  // Wraps around the periodic boundary.
  const auto wrap = grid_values(solve_at(cfg, {1.0, 0.0, 3.5}, zero_operator(cfg), 1.0), cfg);
  for (std::size_t j = 0; j < cfg.nx; ++j) CHECK(std::abs(wrap[j] - pulse(cfg, j * cfg.dx(), 0.5)) < 1e-10);
}

TEST_CASE("mass conservation") {
  const TransportConfig cfg;
  const PhysicalParams p{1.05, 0.0095, 0.9};
  const std::vector<DispersionOperator> ops{Fractional{0.1, 1.5}, ComplexFractional{0.2, 1.6, 0.1, 1.4},
                                            synthetic_truth({0.2, 1.5, 0.15, 1.4}, 0.1, 32.0, cfg)};
  for (const auto& op : ops) {
    const auto c0 = solve_at(cfg, p, op, 0.0);
    const double m0 = grid_mean(grid_values(c0, cfg));
    for (double t : {0.1, 0.7, 2.0, 10.0}) {
      const auto s = solve_at(cfg, p, op, t);
      CHECK(s.coefficients[0] == c0.coefficients[0]);
      CHECK(grid_mean(grid_values(s, cfg)) == doctest::Approx(m0).epsilon(1e-12));
    }
  }
}

TEST_CASE("realness and monotone energy") {
  const TransportConfig cfg;
  const PhysicalParams p{1.0, 0.01, 1.0};
  const DispersionOperator op = ComplexFractional{0.1, 1.7, 0.2, 1.2};
  double prev = std::numeric_limits<double>::infinity();
  for (double t = 0.0; t <= 2.0; t += 0.1) {
    double residue = 1.0;
    const auto c = grid_values(solve_at(cfg, p, op, t), cfg, &residue);
    CHECK(residue < 1e-9);
    const double e = l2(c);
    CHECK(e <= prev * (1.0 + 1e-14));
    prev = e;
  }
}

TEST_CASE("translation equivariance") {
  const TransportConfig cfg;
  const DispersionOperator op = Fractional{0.1, 1.5};
  const double delta = 16 * cfg.dx();
  const auto a = grid_values(solve_at(cfg, {1.0, 0.01, 1.0}, op, 0.8), cfg);
  const auto b = grid_values(solve_at(cfg, {1.0, 0.01, 1.0 + delta}, op, 0.8), cfg);
  for (std::size_t j = 0; j < cfg.nx; ++j) CHECK(std::abs(b[(j + 16) % cfg.nx] - a[j]) < 1e-12);
}

TEST_CASE("fractional alpha = 2 equals increased diffusivity") {
  const TransportConfig cfg;
  const auto a = solve_at(cfg, {1.0, 0.01, 1.0}, Fractional{0.05, 2.0}, 0.9);
  const auto b = solve_at(cfg, {1.0, 0.06, 1.0}, zero_operator(cfg), 0.9);
  for (std::size_t k = 0; k < a.coefficients.size(); ++k)
    CHECK(std::abs(a.coefficients[k] - b.coefficients[k]) < 1e-15);
}

TEST_CASE("imaginary eigenvalue parts advect downstream") {
  const TransportConfig cfg;
  const PhysicalParams still{0.0, 0.01, 1.0};
  const auto c0 = grid_values(solve_at(cfg, still, zero_operator(cfg), 0.5), cfg);
  const auto c1 = grid_values(solve_at(cfg, still, ComplexFractional{0.01, 2.0, 0.3, 1.01 + 1e-12}, 0.5), cfg);
  CHECK(center_of_mass(c0, cfg) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(center_of_mass(c1, cfg) > 1.05);
}

TEST_CASE("probe and qoi") {
  const TransportConfig cfg;
  const PhysicalParams p{1.05, 0.0095, 0.9};
  const DispersionOperator op = Fractional{0.1, 1.5};
  const std::vector<double> times{0.0, 0.5, 1.5};
  const auto at0 = probe(cfg, p, op, 0.0, times);
  const auto atl = probe(cfg, p, op, cfg.lx, times);
  for (std::size_t i = 0; i < times.size(); ++i) CHECK(atl[i] == doctest::Approx(at0[i]).epsilon(1e-10));
  CHECK(qoi(cfg, p, op) == doctest::Approx(atl[2]).epsilon(1e-15));
  // Series at a grid point agrees with the inverse transform.
  const auto sol = solve_at(cfg, p, op, 0.5);
  const auto grid = grid_values(sol, cfg);
  const std::size_t j = 179;
  CHECK(evaluate_at(sol, cfg, j * cfg.dx()) == doctest::Approx(grid[j]).epsilon(1e-10));
  const double t[] = {0.5};
  CHECK(probe(cfg, p, op, j * cfg.dx(), t)[0] == doctest::Approx(grid[j]).epsilon(1e-10));
  CHECK_THROWS_AS(probe(cfg, p, op, 4.5, times), ArgumentError);
}

TEST_CASE("observation schedule") {
  const TransportConfig cfg;
  std::vector<double> times;
  for (int i = 1; i <= 20; ++i) times.push_back(0.01 * i);
  const auto obs = probe(cfg, {1.05, 0.0095, 0.9}, synthetic_truth({0.2, 1.5, 0.15, 1.4}, 0.1, 32.0, cfg), 1.4, times);
  CHECK(obs.size() == 20);
  for (double v : obs) CHECK(v > 0.0);
}

TEST_CASE("positivity") {
  const TransportConfig cfg;
  const PhysicalParams p{1.0, 0.01, 1.0};
  CHECK(positivity_check(cfg, p, zero_operator(cfg)));
  for (double alpha : {1.1, 1.5, 1.9})
    for (double nu : {0.05, 0.1, 0.15}) CHECK(positivity_check(cfg, p, Fractional{nu, alpha}));

  // Scan single-mode perturbations with a large imaginary part and tiny real part
  // until the oscillation undershoots zero.
  bool found = false;
  for (std::size_t k = 1; k < 40 && !found; ++k) {
    auto op = zero_operator(cfg);
    op.lambda[k] = {-1e-6, -200.0};
    found = !positivity_check(cfg, p, op);
  }
  CHECK(found);
}

TEST_CASE("snapshot csv") {
  TransportConfig cfg;
  cfg.nx = 16;
  const auto csv = snapshot_csv(solve_at(cfg, {}, Fractional{}, 0.1), cfg);
  CHECK(csv.rfind("x,c\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 17);
}
