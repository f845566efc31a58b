#pragma once

// Posterior construction and sampling: parameter transforms, noise models,
// adaptive random-walk Metropolis, predictive bands and pushforwards.

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mfu/kernels.hpp"
#include "mfu/sampling.hpp"

namespace mfu::bayes {

/// Maps from a constrained parameter x to the unconstrained sampler coordinate z.
///   Identity: z = x
///   Log:      z = log(x - lo)            (x > lo)
///   Logit:    z = log((x - lo)/(hi - x)) (lo < x < hi)
enum class Transform { Identity, Log, Logit };

struct ParamSpec {
  std::string name;
  Transform transform = Transform::Identity;
  double lo = 0.0;
  double hi = 1.0;
};

double to_unconstrained(const ParamSpec& p, double x);
double from_unconstrained(const ParamSpec& p, double z);
/// log |dx/dz| at z.
double log_jacobian(const ParamSpec& p, double z);

struct NoiseModel {
  enum class Kind { GaussianAdditive, LognormalMultiplicative };
  Kind kind = Kind::GaussianAdditive;
  double sd = 1.0;  // additive sd, or sd of the log error

  /// Perturb a model output with one noise draw.
  double perturb(double m, Rng& rng) const;
};

/// Gaussian log-likelihood over residuals d - m (or log d - log m for the
/// multiplicative model) including normalizing constants. Returns -inf when a
/// multiplicative model output is nonpositive.
double log_likelihood(const NoiseModel& noise, std::span<const double> data, std::span<const double> model);

/// Counters shared by copies of a LogPosterior; safe under concurrent calls.
struct Diagnostics {
  std::atomic<std::size_t> evaluations{0};
  std::atomic<std::size_t> rejected{0};  // -inf returns (support, positivity, nonpositive outputs)
};

/// log pi(x | d) up to a constant, in constrained coordinates. Both terms may
/// return -inf; the prior is evaluated first and the likelihood skipped when
/// it is -inf.
class LogPosterior {
 public:
  using Term = std::function<double(std::span<const double>)>;

  LogPosterior(std::vector<ParamSpec> params, Term log_prior, Term log_likelihood);

  double operator()(std::span<const double> x) const;
  /// Density of the unconstrained coordinates (adds the log-Jacobian).
  double unconstrained(std::span<const double> z) const;

  std::vector<double> to_unconstrained(std::span<const double> x) const;
  std::vector<double> from_unconstrained(std::span<const double> z) const;

  const std::vector<ParamSpec>& params() const { return params_; }
  std::vector<std::string> names() const;
  std::size_t dim() const { return params_.size(); }
  const Diagnostics& diagnostics() const { return *diag_; }

 private:
  std::vector<ParamSpec> params_;
  Term prior_;
  Term likelihood_;
  std::shared_ptr<Diagnostics> diag_;
};

struct MetropolisOptions {
  double burn_in_fraction = 0.5;
  std::size_t max_retained = 10000;
  /// Initial proposal sd per unconstrained coordinate (one value for all, or one per parameter).
  std::vector<double> initial_sd{0.05};
  /// Steps before covariance adaptation begins.
  std::size_t adapt_start = 1000;
  std::size_t adapt_interval = 50;
  double target_acceptance = 0.3;
  double regularization = 1e-10;
};

struct Chain {
  SampleMatrix samples;             // retained, constrained coordinates
  std::vector<double> log_posterior;  // per retained sample
  double acceptance_rate = 0.0;       // after burn-in
  double burn_in_acceptance_rate = 0.0;
  std::size_t steps = 0;
  std::size_t burn_in = 0;
  std::size_t thin = 1;

  /// One row per retained sample plus a log_posterior column.
  std::string to_csv() const;
};

/// Random-walk Metropolis in unconstrained coordinates with Haario-style
/// covariance adaptation (scale 2.38^2/d, tuned towards the target acceptance
/// rate) during burn-in only; the kernel is fixed afterwards.
Chain adaptive_metropolis(const LogPosterior& lp, std::span<const double> init, std::size_t steps, std::uint64_t seed,
                          const MetropolisOptions& opt = {});

/// Model outputs over a grid for one parameter row.
using GridModel = std::function<std::vector<double>(std::span<const double> params)>;

struct Bands {
  std::vector<double> lower;
  std::vector<double> median;
  std::vector<double> upper;
  std::vector<double> mean;
  std::vector<double> variance;
};

/// Predictive draws model(row) perturbed by noise (row i uses derive_seed(seed, i));
/// bands are empirical quantiles at `lower_q`, 0.5 and `upper_q` per grid point.
Bands predictive_bands(const Matrix& params, const GridModel& model, const NoiseModel& noise, std::uint64_t seed,
                       double lower_q = 0.025, double upper_q = 0.975);

/// Fraction of data points inside [lower, upper].
double coverage(const Bands& b, std::span<const double> data);

struct PushforwardStats {
  std::vector<double> values;
  double mean = 0.0;
  double variance = 0.0;
  double q025 = 0.0;
  double q05 = 0.0;
  double q50 = 0.0;
  double q95 = 0.0;
  double q975 = 0.0;
  double min = 0.0;
  double negative_fraction = 0.0;
};

PushforwardStats summarize_pushforward(std::vector<double> values);
PushforwardStats pushforward(const Matrix& params, const kernels::RowModel& qoi);

}  // namespace mfu::bayes
