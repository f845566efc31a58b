#pragma once

// Exact Fourier solution of the periodic upscaled advection-diffusion equation
//
//   d<c>/dt + <u> d<c>/dx = nu_p d2<c>/dx2 + L<c>,   x in [0, Lx) periodic,
//   <c>(x, 0) = exp(-(x - s)^2 / (2 ell^2)),
//
// with the dispersion closure L given by its Fourier eigenvalues lambda_k.
// With a_k = 2 pi k / Lx each mode evolves as c_k(t) = c_k(0) exp(mu_k t),
//   mu_k = -i a_k <u> - nu_p a_k^2 + lambda_k.
// Modes k = 0 .. Nx/2 - 1 are kept; the Nyquist mode is dropped so that
// conjugate symmetry (and a real field) holds exactly.

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace mfu::transport {

using cplx = std::complex<double>;

struct TransportConfig {
  double lx = 4.0;
  std::size_t nx = 512;
  double ell = 0.1;
  std::vector<double> check_times{0.1, 0.5, 1.0, 1.5, 2.0};
  double qoi_time = 1.5;

  /// Highest retained wavenumber index.
  std::size_t modes() const { return nx / 2 - 1; }
  double dx() const { return lx / static_cast<double>(nx); }
  void validate() const;
};

struct PhysicalParams {
  double u_mean = 1.0;
  double nu_p = 0.01;
  double s = 1.0;
};

/// Eigenvalues for k = 0..Nk; lambda_0 must be 0 and lambda_{-k} = conj(lambda_k)
/// is implied.
struct GeneralLinear {
  std::vector<cplx> lambda;
};

/// Riesz fractional derivative; lambda_k = -nu_m |a_k|^alpha (|cos(alpha pi/2)| + i sin(alpha pi/2)).
struct Fractional {
  double nu_m = 0.1;
  double alpha = 1.5;
};

/// lambda_k = -nu_r a_k^alpha_r - i nu_i a_k^alpha_i for k > 0.
struct ComplexFractional {
  double nu_r = 0.1;
  double alpha_r = 1.5;
  double nu_i = 0.1;
  double alpha_i = 1.5;
};

using DispersionOperator = std::variant<GeneralLinear, Fractional, ComplexFractional>;

/// Throws DomainError for fractional powers outside (1, 2], negative scalings
/// or lambda_0 != 0.
void validate(const DispersionOperator& op);

double wavenumber(std::size_t k, double lx);

/// lambda_k for k = 0..nk.
std::vector<cplx> dispersion_eigenvalues(const DispersionOperator& op, std::size_t nk, double lx);

/// Complex-fractional eigenvalues multiplied by (1 + amplitude sin(2 pi k / period)).
/// Stand-in for eigenvalues of a resolved heterogeneous medium when generating data.
GeneralLinear synthetic_truth(const ComplexFractional& base, double amplitude, double period,
                              const TransportConfig& cfg);

struct SpectralSolution {
  std::vector<cplx> coefficients;  // c_k, k = 0..Nk; c(x) = c_0 + 2 Re sum_k c_k e^{i a_k x}
  double time = 0.0;
};

/// DFT (divided by Nx) of the pulse sampled on the grid with periodic distance.
std::vector<cplx> initial_coefficients(const TransportConfig& cfg, double s);

/// mu_k for k = 0..Nk; throws NumericalError if any Re mu_k > 1e-12.
std::vector<cplx> growth_rates(const TransportConfig& cfg, const PhysicalParams& p, std::span<const cplx> lambda);

SpectralSolution solve_at(const TransportConfig& cfg, const PhysicalParams& p, const DispersionOperator& op, double t);

/// Grid values c(x_j), x_j = j dx. `imag_residue` receives max |Im| / max |c| of
/// the full complex inverse transform.
std::vector<double> grid_values(const SpectralSolution& sol, const TransportConfig& cfg,
                                double* imag_residue = nullptr);

/// Series evaluation at arbitrary x (not snapped to the grid).
double evaluate_at(const SpectralSolution& sol, const TransportConfig& cfg, double x);

std::vector<double> probe(const TransportConfig& cfg, const PhysicalParams& p, const DispersionOperator& op, double x,
                          std::span<const double> times);

/// <c>(x = Lx, t = qoi_time).
double qoi(const TransportConfig& cfg, const PhysicalParams& p, const DispersionOperator& op);

/// min over grid and check times of c / max|c| (negative means undershoot).
double min_relative_concentration(const TransportConfig& cfg, const PhysicalParams& p, const DispersionOperator& op);

/// True iff c >= -1e-10 max|c| at every grid point and check time.
bool positivity_check(const TransportConfig& cfg, const PhysicalParams& p, const DispersionOperator& op);

/// "x,c" rows for a concentration snapshot.
std::string snapshot_csv(const SpectralSolution& sol, const TransportConfig& cfg);

}  // namespace mfu::transport
