#pragma once

// Probability densities, seeded sampling, log-normal hyperparameter
// elicitation, kernel density estimation and small descriptive statistics.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "mfu/rng.hpp"

namespace mfu {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Draws stored row-wise with one named column per parameter.
struct SampleMatrix {
  Matrix values;
  std::vector<std::string> names;
  std::uint64_t seed = 0;

  std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(values.cols()); }
  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * cols(), cols()};
  }
  std::span<double> row(std::size_t i) { return {values.data() + i * cols(), cols()}; }
  std::vector<double> column(std::size_t j) const;
  std::size_t index_of(const std::string& name) const;
};

namespace sampling {

struct Uniform {
  double lo = 0.0;
  double hi = 1.0;
};

/// sd == 0 is accepted and means a point mass at `mean`.
struct Normal {
  double mean = 0.0;
  double sd = 1.0;
};

/// Parameters are those of the underlying normal (log scale).
struct LogNormal {
  double mu = 0.0;
  double sigma = 1.0;
};

struct TriangularUnitRange {
  double lo = 0.0;
  double hi = 1.0;
  double mode = 0.5;
};

struct MultivariateNormal {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

/// One-dimensional families usable as hyper densities.
using ScalarDensity = std::variant<Uniform, Normal, LogNormal, TriangularUnitRange>;

enum class Family { Normal, LogNormal, Uniform, Triangular };

/// pi(gamma, phi) = pi(gamma | phi) pi(phi).
///
/// The conditional family takes its parameters from the hyper draws in order:
/// Normal(mean, sd), LogNormal(mu, sigma), Uniform(lo, hi), Triangular(mode)
/// on the fixed range [lo, hi]. `shift` is added to the conditional draw, so
/// LogNormal with shift 1 gives log(gamma - 1) ~ N(mu, sigma^2).
/// A draw is the row [phi_1, ..., phi_m, gamma].
struct Hierarchical {
  Family family = Family::LogNormal;
  std::vector<ScalarDensity> hypers;
  double lo = 0.0;
  double hi = 1.0;
  double shift = 0.0;
};

/// Resampling (with replacement) of the rows of a joint sample.
struct Empirical {
  Matrix samples;
};

/// Gaussian-kernel density estimate.
struct Kde {
  std::vector<double> samples;
  double bandwidth = 0.0;
};

using Density = std::variant<Uniform, Normal, LogNormal, TriangularUnitRange, MultivariateNormal,
                             Hierarchical, Empirical, Kde>;

std::size_t dimension(const Density& d);
std::size_t parameter_count(Family f);

/// Throws ParameterError when the density's invariants are violated.
void validate(const Density& d);
void validate(const ScalarDensity& d);

/// Prepared sampler: factorizations are computed once so that per-row draws
/// are cheap. Thread-safe for concurrent `draw` calls with separate Rngs.
class Sampler {
 public:
  explicit Sampler(Density d);
  std::size_t dim() const { return dim_; }
  void draw(Rng& rng, std::span<double> out) const;
  const Density& density() const { return density_; }

 private:
  Density density_;
  Eigen::MatrixXd factor_;  // MVN only
  std::size_t dim_;
};

double draw(const ScalarDensity& d, Rng& rng);

/// Conditional draw of a hierarchical family given hyper values.
double draw_conditional(const Hierarchical& h, std::span<const double> hyper, Rng& rng);

/// n draws, row i generated from stream derive_seed(seed, i).
SampleMatrix sample(const Density& d, std::size_t n, std::uint64_t seed,
                    std::vector<std::string> names = {});

double log_pdf(const ScalarDensity& d, double x);
double log_pdf(const Density& d, std::span<const double> x);
double conditional_log_pdf(const Hierarchical& h, std::span<const double> hyper, double x);
double quantile(const ScalarDensity& d, double p);

struct Moments {
  double mean;
  double variance;
};
Moments moments(const ScalarDensity& d);

/// Support of a scalar family; infinite bounds for unbounded families.
std::pair<double, double> support(const ScalarDensity& d);

// Standard normal.
double normal_cdf(double x);
/// Acklam's rational approximation followed by one Halley step against erfc;
/// relative error well below 1e-12 over (0, 1).
double normal_quantile(double p);

struct LogNormalParams {
  double mu;
  double sigma;
};

/// Q(p1) = x1 and Q(p2) = x2 for Q(p) = exp(mu + sigma * Phi^{-1}(p)).
LogNormalParams elicit_lognormal_from_quantiles(double p1, double x1, double p2, double x2);

/// exp(mu - sigma^2) = mode and Q(p) = upper.
LogNormalParams elicit_lognormal_from_mode(double mode, double p, double upper);

/// 1.06 * sd * n^{-1/5}.
double silverman_bandwidth(std::span<const double> samples);
Kde kde_fit(std::span<const double> samples, std::optional<double> bandwidth = std::nullopt);
double kde_eval(const Kde& kde, double x);
std::vector<double> kde_eval(const Kde& kde, std::span<const double> xs);

// Descriptive statistics (pairwise sums, so results are order-stable).
double mean(std::span<const double> x);
/// Unbiased (n - 1) sample variance.
double variance(std::span<const double> x);
/// Linear-interpolation (type 7) empirical quantile.
double empirical_quantile(std::span<const double> x, double p);
/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_statistic(std::span<const double> a, std::span<const double> b);
double pearson(std::span<const double> a, std::span<const double> b);

/// Seeded Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed);

}  // namespace sampling
}  // namespace mfu
