#pragma once

// Data-consistent inversion on general linear operator eigenvalues:
//   pi_update(x) = pi_0(x) pi_target(q(x)) / pi_predict(q(x)),
// realized by rejection sampling of proposals drawn from pi_0.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfu/kernels.hpp"
#include "mfu/sampling.hpp"
#include "mfu/transport.hpp"

namespace mfu::dci {

using transport::cplx;

/// Eigenvalues lambda_1..lambda_Nk mapped to
///   [log(-Re lambda_1), ..., log(-Re lambda_Nk), log(-Im lambda_1), ..., log(-Im lambda_Nk)].
/// Imaginary parts are negative for k > 0 in the transport sign convention.
/// Throws DomainError when a logged value is not positive.
std::vector<double> unravel(std::span<const cplx> lambda_1_to_nk);

/// Inverse of `unravel`: lambda_k = -exp(R_k) - i exp(I_k) for k = 1..Nk, with
/// lambda_0 = 0 prepended.
std::vector<cplx> ravel(std::span<const double> z);

struct InitialFit {
  sampling::MultivariateNormal mvn;
  double jitter = 0.0;  // diagonal regularization added to the sample covariance
  bool regularized = false;
};

/// Sample mean and covariance of unravelled eigenvalue rows (each row holds
/// lambda_1..lambda_Nk). A diagonal jitter of 1e-10 is added and reported when
/// the sample covariance is not positive definite. Needs >= dim + 1 rows.
InitialFit fit_initial_mvn(const std::vector<std::vector<cplx>>& samples);

/// Fractional-operator eigenvalue rows (k = 1..Nk) for draws of (nu_m, alpha).
std::vector<std::vector<cplx>> fractional_eigenvalues(const Matrix& nu_alpha, std::size_t nk, double lx);

struct DciOptions {
  double safety = 1.1;
  double warn_rate = 0.01;
  std::optional<double> target_bandwidth;
  std::optional<double> predict_bandwidth;
};

struct DciUpdate {
  SampleMatrix accepted;
  std::vector<std::size_t> accepted_rows;  // indices into the proposals
  std::vector<double> accepted_qoi;
  double acceptance_rate = 0.0;
  double mean_ratio = 0.0;
  double max_ratio = 0.0;
  double m = 0.0;  // rejection constant safety * max ratio
  double target_bandwidth = 0.0;
  double predict_bandwidth = 0.0;
  std::vector<std::string> warnings;

  /// acceptance rate, accepted count, ratio statistics, M, bandwidths, warnings.
  std::string diagnostics_json() const;
};

/// Accept proposal i when u_i < r_i / M with r = kde_target(q) / kde_predict(q),
/// M = safety * max_i r_i and u_i drawn from stream derive_seed(seed, i).
/// Throws NumericalError naming the proposal when a ratio is not finite, or
/// when the target density vanishes at every proposal.
DciUpdate dci_update(std::span<const double> target, std::span<const double> predict, const SampleMatrix& proposals,
                     std::span<const double> proposal_qoi, std::uint64_t seed, const DciOptions& opt = {});

/// Same, evaluating q on every proposal row first.
DciUpdate dci_update(std::span<const double> target, std::span<const double> predict, const SampleMatrix& proposals,
                     const kernels::RowModel& qoi, std::uint64_t seed, const DciOptions& opt = {});

}  // namespace mfu::dci
