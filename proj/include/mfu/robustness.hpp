#pragma once

// Robustness of grouped Sobol' indices to the choice of MFU representation.
//
// For two models f(X_v, X_u) and q(X_v, X~_u) sharing the inputs X_v:
//   eps1 = E_v | Var_u(f | X_v) - Var_u~(q | X_v) |
//   eps2 = | Var(f) - Var(q) |
// and, with Var(f) = 1, |S_f - S_q| <= eps1 + 2 eps2 and |T_f - T_q| <= eps1 + eps2.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mfu/gsa.hpp"
#include "mfu/sampling.hpp"

namespace mfu::robustness {

/// Expectation rule: sum_i weights[i] g(nodes[i]) ~ E[g(X)], weights sum to 1.
struct QuadratureRule {
  Matrix nodes;  // one row per node
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
};

/// Gauss-Legendre nodes and weights on [-1, 1] (weights sum to 2).
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(std::size_t n);
/// Gauss-Hermite for the standard normal weight (weights sum to 1).
std::pair<std::vector<double>, std::vector<double>> gauss_hermite(std::size_t n);

/// Rule for one scalar density. Triangular densities are split at the mode
/// with order/2 Legendre nodes per piece.
QuadratureRule quadrature(const sampling::ScalarDensity& d, std::size_t order);
/// Tensor product of one-dimensional rules.
QuadratureRule tensor(std::span<const QuadratureRule> rules);

/// Model split into shared inputs X_v and MFU inputs X_u.
using SplitModel = std::function<double(std::span<const double> xv, std::span<const double> xu)>;

struct Representation {
  SplitModel model;
  std::vector<gsa::ParameterBlock> mfu;
};

/// Scalar, independent MFU blocks with total dimension <= 2 are integrated by
/// tensor Gauss rules; anything else uses inner Monte Carlo.
bool uses_quadrature(const Representation& r);

struct EpsOptions {
  std::size_t outer_n = 1000;
  std::size_t inner_n = 1000;
  std::size_t order = 32;
};

struct EpsEstimate {
  double eps1 = 0.0;
  double eps2 = 0.0;
  double var_f = 0.0;  // law of total variance over the outer draws
  double var_q = 0.0;
  std::vector<double> cond_var_f;
  std::vector<double> cond_var_q;
  std::vector<double> cond_mean_f;
  std::vector<double> cond_mean_q;
  bool quadrature_f = false;
  bool quadrature_q = false;

  /// Values for outputs multiplied by c (variances scale by c^2).
  EpsEstimate scaled(double c) const;
};

/// Outer X_v draws (stream derive_seed(seed, 0)) are fed identically to both
/// models; inner MC draws for outer row i use derive_seed(seed, 1 + i).
EpsEstimate estimate_eps(const Representation& f, const Representation& q,
                         const std::vector<gsa::ParameterBlock>& shared, const EpsOptions& opt, std::uint64_t seed);

/// 1 / sd for a rescaling to unit variance; throws DegenerateError when the
/// variance is below 1e-14 * scale.
double unit_scale(double variance, double scale = 1.0);

struct ReplicateCheck {
  std::size_t replicate = 0;
  std::string group;
  double eps1 = 0.0;
  double eps2 = 0.0;
  double delta_main = 0.0;   // |S_f - S_q|
  double delta_total = 0.0;  // |T_f - T_q|
  double main_bound = 0.0;   // eps1 + 2 eps2
  double total_bound = 0.0;  // eps1 + eps2
  double main_tolerance = 0.0;
  double total_tolerance = 0.0;
  double var_q_rescaled = 0.0;
  bool main_ok = false;
  bool total_ok = false;

  double main_slack() const { return main_bound + main_tolerance - delta_main; }
  double total_slack() const { return total_bound + total_tolerance - delta_total; }
};

struct GroupSummary {
  std::string group;
  double mean_delta_main = 0.0;
  double mean_delta_total = 0.0;
  double main_sd = 0.0;   // sqrt(sd_f^2 + sd_q^2) of the main index
  double total_sd = 0.0;
};

struct RobustnessReport {
  std::vector<double> eps1;  // per replicate, rescaled units
  std::vector<double> eps2;
  double eps1_mean = 0.0;
  double eps1_sd = 0.0;
  double eps2_mean = 0.0;
  double main_bound = 0.0;   // mean over replicates
  double total_bound = 0.0;
  double var_q_rescaled_mean = 0.0;
  std::vector<GroupSummary> groups;
  std::vector<ReplicateCheck> checks;
  std::vector<std::string> failures;  // one line per violated bound
  bool passed = false;

  std::string to_json() const;
  /// One row per replicate and group.
  std::string to_csv() const;
};

/// Checks every replicate and group against the bounds with tolerance
/// `sd_multiplier` times the replicate sd of the index. `eps` are per replicate
/// and already in rescaled units; `var_q_rescaled` is Var(q) / Var(f) per replicate.
RobustnessReport verify_bounds(const std::vector<gsa::SobolEstimate>& f, const std::vector<gsa::SobolEstimate>& q,
                               std::span<const EpsEstimate> eps, std::span<const double> var_q_rescaled,
                               double sd_multiplier = 3.0);

}  // namespace mfu::robustness
