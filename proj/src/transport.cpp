#include "mfu/transport.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

#include <unsupported/Eigen/FFT>

#include "mfu/errors.hpp"

namespace mfu::transport {

namespace {

constexpr double kInstability = 1e-12;
// exp(x) is exactly 0 in double precision below about -745.
constexpr double kUnderflow = -800.0;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Eigen::FFT<double>& fft() {
  thread_local Eigen::FFT<double> f;
  return f;
}

// cos and sin of alpha * pi / 2, exact at the integer endpoints.
std::pair<double, double> half_pi_trig(double alpha) {
  if (alpha == 2.0) return {-1.0, 0.0};
  if (alpha == 1.0) return {0.0, 1.0};
  const double th = 0.5 * alpha * std::numbers::pi;
  return {std::cos(th), std::sin(th)};
}

void check_power(double alpha, const char* what) {
  if (!(alpha > 1.0 && alpha <= 2.0)) throw DomainError(std::string(what) + " must lie in (1, 2]");
}

void check_scale(double nu, const char* what) {
  if (!(nu >= 0.0) || !std::isfinite(nu)) throw DomainError(std::string(what) + " must be non-negative");
}

// exp(x) relative to the retained terms is below double precision once x < -60;
// Fractional and ComplexFractional decay rates grow with k so the series can stop there.
constexpr double kNegligible = -60.0;

// lambda_k generated on demand for the parametric operators.
class Spectrum {
 public:
  Spectrum(const DispersionOperator& op, double lx) : op_(op), lx_(lx) {
    if (const auto* f = std::get_if<Fractional>(&op)) std::tie(cos_, sin_) = half_pi_trig(f->alpha);
  }
  bool monotone() const { return !std::holds_alternative<GeneralLinear>(op_); }
  cplx operator()(std::size_t k) const {
    const double a = wavenumber(k, lx_);
    if (const auto* f = std::get_if<Fractional>(&op_)) {
      const double mag = f->nu_m * std::pow(a, f->alpha);
      return {-mag * std::abs(cos_), -mag * sin_};
    }
    if (const auto* c = std::get_if<ComplexFractional>(&op_))
      return {-c->nu_r * std::pow(a, c->alpha_r), -c->nu_i * std::pow(a, c->alpha_i)};
    return std::get<GeneralLinear>(op_).lambda[k];
  }

 private:
  const DispersionOperator& op_;
  double lx_;
  double cos_ = 0.0, sin_ = 0.0;
};

cplx growth_rate(std::size_t k, const TransportConfig& cfg, const PhysicalParams& p, cplx lambda) {
  const double a = wavenumber(k, cfg.lx);
  const cplx mu = cplx{-p.nu_p * a * a, -a * p.u_mean} + lambda;
  if (mu.real() > kInstability) {
    std::ostringstream os;
    os << "unstable mode k=" << k << ": Re mu_k = " << mu.real() << " > 0";
    throw NumericalError(os.str());
  }
  return mu;
}

// Cached per thread: repeated evaluations at one source location skip the FFT.
const std::vector<cplx>& cached_initial(const TransportConfig& cfg, double s) {
  thread_local struct {
    double lx = 0.0, ell = 0.0, s = 0.0;
    std::size_t nx = 0;
    std::vector<cplx> c;
  } cache;
  if (cache.c.empty() || cache.lx != cfg.lx || cache.ell != cfg.ell || cache.nx != cfg.nx || cache.s != s) {
    cache.c = initial_coefficients(cfg, s);
    cache.lx = cfg.lx;
    cache.ell = cfg.ell;
    cache.nx = cfg.nx;
    cache.s = s;
  }
  return cache.c;
}

std::vector<cplx> evolve(std::span<const cplx> c0, std::span<const cplx> mu, double t) {
  std::vector<cplx> c(c0.size());
  for (std::size_t k = 0; k < c0.size(); ++k) {
    c[k] = (mu[k].real() * t < kUnderflow) ? cplx{} : c0[k] * std::exp(mu[k] * t);
  }
  c[0] = c0[0];
  return c;
}

}  // namespace

void TransportConfig::validate() const {
  if (!(lx > 0.0)) throw ParameterError("Lx must be positive");
  if (nx < 8 || (nx & (nx - 1)) != 0) throw ParameterError("Nx must be a power of two >= 8");
  if (!(ell > 0.0) || !(ell < 0.25 * lx)) throw ParameterError("ell must satisfy 0 < ell << Lx");
  if (check_times.empty()) throw ParameterError("positivity check times must be nonempty");
  for (double t : check_times)
    if (!(t >= 0.0)) throw ParameterError("check times must be non-negative");
  if (!(qoi_time >= 0.0)) throw ParameterError("QoI time must be non-negative");
}

double wavenumber(std::size_t k, double lx) { return 2.0 * std::numbers::pi * static_cast<double>(k) / lx; }

void validate(const DispersionOperator& op) {
  std::visit(overloaded{
                 [](const GeneralLinear& g) {
                   if (g.lambda.empty() || g.lambda[0] != cplx{})
                     throw DomainError("general linear operator needs lambda_0 = 0 (mass conservation)");
                   for (const auto& l : g.lambda)
                     if (!std::isfinite(l.real()) || !std::isfinite(l.imag()))
                       throw DomainError("general linear eigenvalues must be finite");
                 },
                 [](const Fractional& f) {
                   check_scale(f.nu_m, "nu_m");
                   check_power(f.alpha, "alpha");
                 },
                 [](const ComplexFractional& c) {
                   check_scale(c.nu_r, "nu_r");
                   check_scale(c.nu_i, "nu_i");
                   check_power(c.alpha_r, "alpha_r");
                   check_power(c.alpha_i, "alpha_i");
                 },
             },
             op);
}

std::vector<cplx> dispersion_eigenvalues(const DispersionOperator& op, std::size_t nk, double lx) {
  validate(op);
  std::vector<cplx> lam(nk + 1);
  std::visit(overloaded{
                 [&](const GeneralLinear& g) {
                   if (g.lambda.size() < nk + 1) throw DomainError("general linear operator has too few eigenvalues");
                   std::copy_n(g.lambda.begin(), nk + 1, lam.begin());
                 },
                 [&](const Fractional& f) {
                   const auto [c, s] = half_pi_trig(f.alpha);
                   for (std::size_t k = 1; k <= nk; ++k) {
                     const double mag = f.nu_m * std::pow(wavenumber(k, lx), f.alpha);
                     lam[k] = {-mag * std::abs(c), -mag * s};
                   }
                 },
                 [&](const ComplexFractional& cf) {
                   for (std::size_t k = 1; k <= nk; ++k) {
                     const double a = wavenumber(k, lx);
                     lam[k] = {-cf.nu_r * std::pow(a, cf.alpha_r), -cf.nu_i * std::pow(a, cf.alpha_i)};
                   }
                 },
             },
             op);
  return lam;
}

GeneralLinear synthetic_truth(const ComplexFractional& base, double amplitude, double period,
                              const TransportConfig& cfg) {
  if (!(std::abs(amplitude) < 1.0)) throw DomainError("perturbation amplitude must satisfy |a| < 1");
  if (!(period > 0.0)) throw DomainError("perturbation period must be positive");
  auto lam = dispersion_eigenvalues(base, cfg.modes(), cfg.lx);
  for (std::size_t k = 1; k < lam.size(); ++k)
    lam[k] *= 1.0 + amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(k) / period);
  return GeneralLinear{std::move(lam)};
}

std::vector<cplx> initial_coefficients(const TransportConfig& cfg, double s) {
  const std::size_t n = cfg.nx;
  std::vector<double> g(n);
  const double half = 0.5 * cfg.lx;
  const double inv2l2 = 1.0 / (2.0 * cfg.ell * cfg.ell);
  for (std::size_t j = 0; j < n; ++j) {
    double d = std::fmod(static_cast<double>(j) * cfg.dx() - s, cfg.lx);
    if (d < -half) d += cfg.lx;
    if (d >= half) d -= cfg.lx;
    g[j] = std::exp(-d * d * inv2l2);
  }
  std::vector<cplx> spectrum;
  fft().fwd(spectrum, g);
  std::vector<cplx> c(cfg.modes() + 1);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < c.size(); ++k) c[k] = spectrum[k] * inv_n;
  c[0] = {c[0].real(), 0.0};
  return c;
}

std::vector<cplx> growth_rates(const TransportConfig& cfg, const PhysicalParams& p, std::span<const cplx> lambda) {
  std::vector<cplx> mu(lambda.size());
  for (std::size_t k = 1; k < lambda.size(); ++k) mu[k] = growth_rate(k, cfg, p, lambda[k]);
  return mu;
}

SpectralSolution solve_at(const TransportConfig& cfg, const PhysicalParams& p, const DispersionOperator& op, double t) {
  if (!(t >= 0.0)) throw ArgumentError("solve_at: t must be >= 0");
  const auto lam = dispersion_eigenvalues(op, cfg.modes(), cfg.lx);
  const auto mu = growth_rates(cfg, p, lam);
  const auto c0 = initial_coefficients(cfg, p.s);
  return {evolve(c0, mu, t), t};
}

std::vector<double> grid_values(const SpectralSolution& sol, const TransportConfig& cfg, double* imag_residue) {
  const std::size_t n = cfg.nx;
  std::vector<cplx> spectrum(n, cplx{});
  const double scale = static_cast<double>(n);
  for (std::size_t k = 0; k < sol.coefficients.size(); ++k) {
    spectrum[k] = sol.coefficients[k] * scale;
    if (k > 0) spectrum[n - k] = std::conj(spectrum[k]);
  }
  std::vector<cplx> field;
  fft().inv(field, spectrum);
  std::vector<double> out(n);
  double max_abs = 0.0, max_imag = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    out[j] = field[j].real();
    max_abs = std::max(max_abs, std::abs(out[j]));
    max_imag = std::max(max_imag, std::abs(field[j].imag()));
  }
  if (imag_residue) *imag_residue = max_abs > 0.0 ? max_imag / max_abs : max_imag;
  return out;
}

double evaluate_at(const SpectralSolution& sol, const TransportConfig& cfg, double x) {
  double acc = 0.0;
  for (std::size_t k = 1; k < sol.coefficients.size(); ++k) {
    const double ph = wavenumber(k, cfg.lx) * x;
    acc += sol.coefficients[k].real() * std::cos(ph) - sol.coefficients[k].imag() * std::sin(ph);
  }
  return sol.coefficients[0].real() + 2.0 * acc;
}

std::vector<double> probe(const TransportConfig& cfg, const PhysicalParams& p, const DispersionOperator& op, double x,
                          std::span<const double> times) {
  if (!(x >= 0.0 && x <= cfg.lx)) throw ArgumentError("probe location outside [0, Lx]");
  validate(op);
  const std::size_t nk = cfg.modes();
  if (const auto* g = std::get_if<GeneralLinear>(&op); g && g->lambda.size() < nk + 1)
    throw DomainError("general linear operator has too few eigenvalues");
  double t_min = std::numeric_limits<double>::infinity();
  for (double t : times) {
    if (!(t >= 0.0)) throw ArgumentError("probe times must be >= 0");
    t_min = std::min(t_min, t);
  }
  const auto& c0 = cached_initial(cfg, p.s);
  const Spectrum spectrum(op, cfg.lx);
  std::vector<double> acc(times.size(), 0.0);
  for (std::size_t k = 1; k <= nk; ++k) {
    const cplx mu = growth_rate(k, cfg, p, spectrum(k));
    if (mu.real() * t_min < kNegligible) {
      if (spectrum.monotone()) break;
      continue;
    }
    const double ax = wavenumber(k, cfg.lx) * x;
    for (std::size_t i = 0; i < times.size(); ++i) {
      const double re = mu.real() * times[i];
      if (re < kNegligible) continue;
      const double ph = mu.imag() * times[i] + ax;
      acc[i] += std::exp(re) * (c0[k].real() * std::cos(ph) - c0[k].imag() * std::sin(ph));
    }
  }
  for (auto& v : acc) v = c0[0].real() + 2.0 * v;
  return acc;
}

double qoi(const TransportConfig& cfg, const PhysicalParams& p, const DispersionOperator& op) {
  const double t[] = {cfg.qoi_time};
  return probe(cfg, p, op, cfg.lx, t)[0];
}

double min_relative_concentration(const TransportConfig& cfg, const PhysicalParams& p, const DispersionOperator& op) {
  const auto lam = dispersion_eigenvalues(op, cfg.modes(), cfg.lx);
  const auto mu = growth_rates(cfg, p, lam);
  const auto& c0 = cached_initial(cfg, p.s);
  double worst = std::numeric_limits<double>::infinity();
  for (double t : cfg.check_times) {
    const auto c = grid_values({evolve(c0, mu, t), t}, cfg);
    const double mx = std::max(*std::max_element(c.begin(), c.end()), -*std::min_element(c.begin(), c.end()));
    const double mn = *std::min_element(c.begin(), c.end());
    worst = std::min(worst, mx > 0.0 ? mn / mx : 0.0);
  }
  return worst;
}

bool positivity_check(const TransportConfig& cfg, const PhysicalParams& p, const DispersionOperator& op) {
  return min_relative_concentration(cfg, p, op) >= -1e-10;
}

std::string snapshot_csv(const SpectralSolution& sol, const TransportConfig& cfg) {
  const auto c = grid_values(sol, cfg);
  std::ostringstream os;
  os << std::setprecision(17) << "x,c\n";
  for (std::size_t j = 0; j < c.size(); ++j) os << static_cast<double>(j) * cfg.dx() << ',' << c[j] << '\n';
  return os.str();
}

}  // namespace mfu::transport
