#pragma once

// Grouped variance-based sensitivity analysis with pick-freeze estimators.
//
// For a group u with complement ~u and replicate draws x, x':
//   main numerator   (1/N) sum (f(x) - mu_A) (f(x'_~u, x_u) - f(x'))
//   total numerator  (1/2N) sum (f(x) - f(x_~u, x'_u))^2
//   total variance   (1/2N) sum (f(x) - mu_A)^2 + (f(x') - mu_B)^2
// The main numerator centers f(x) by its sample mean so the estimate does not
// pick up a b * mean(f(x'_~u, x_u) - f(x')) term under output shifts f -> cf + b.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mfu/kernels.hpp"
#include "mfu/sampling.hpp"

namespace mfu::gsa {

/// Columns `names` jointly distributed according to `density`.
struct ParameterBlock {
  std::vector<std::string> names;
  sampling::Density density;
};

struct Group {
  std::string name;
  std::vector<std::size_t> columns;
};

/// Named parameters (in block order) partitioned into disjoint, exhaustive
/// groups. Blocks are independent of one another. A block whose columns span
/// more than one group makes the space dependent; that mode requires a single
/// empirical joint block and exactly two groups.
struct GroupedParameterSpace {
  std::vector<ParameterBlock> blocks;
  std::vector<Group> groups;

  std::size_t dimension() const;
  std::vector<std::string> names() const;
  std::size_t column(const std::string& name) const;
  bool dependent() const;
  /// Throws ArgumentError / UnsupportedConfiguration.
  void validate() const;
};

/// Builds a space whose groups are given by parameter names.
GroupedParameterSpace make_space(std::vector<ParameterBlock> blocks,
                                 const std::vector<std::pair<std::string, std::vector<std::string>>>& groups);

/// Rows taking the masked columns from B and the rest from A.
struct MixedMatrix {
  std::vector<bool> from_b;
  Matrix values;
};

struct PickFreezePlan {
  SampleMatrix a;
  SampleMatrix b;
  std::vector<std::string> group_names;
  std::vector<MixedMatrix> mixed;  // deduplicated by mask
  std::vector<std::size_t> freeze;  // group columns from A, rest from B: f(x'_~u, x_u)
  std::vector<std::size_t> swap;    // group columns from B, rest from A: f(x_~u, x'_u)

  std::size_t n() const { return a.rows(); }
  const Matrix& freeze_matrix(std::size_t g) const { return mixed[freeze[g]].values; }
  const Matrix& swap_matrix(std::size_t g) const { return mixed[swap[g]].values; }
};

/// Independent spaces: A and B are independent draws; every block uses its own
/// stream keyed by its first parameter name, so two spaces sharing a block
/// (same name, density and seed) share those draws. Dependent spaces: the joint
/// sample is shuffled with the seed and split into disjoint halves A and B.
PickFreezePlan build_pick_freeze(const GroupedParameterSpace& space, std::size_t n, std::uint64_t seed);

/// Draw n rows of the space under `seed` (A-stream of the plan).
SampleMatrix sample_space(const GroupedParameterSpace& space, std::size_t n, std::uint64_t seed);

struct PlanOutputs {
  std::vector<double> a;
  std::vector<double> b;
  std::vector<std::vector<double>> mixed;

  std::span<const double> freeze(const PickFreezePlan& p, std::size_t g) const { return mixed[p.freeze[g]]; }
  std::span<const double> swap(const PickFreezePlan& p, std::size_t g) const { return mixed[p.swap[g]]; }
};

PlanOutputs evaluate_plan(const PickFreezePlan& plan, const kernels::RowModel& model);
PlanOutputs scaled(const PlanOutputs& out, double c, double b = 0.0);

struct Estimate {
  double numerator;
  double index;
  double total_variance;
};

double estimate_total_variance(std::span<const double> f_a, std::span<const double> f_b);
Estimate estimate_grouped_main(std::span<const double> f_a, std::span<const double> f_b,
                               std::span<const double> f_freeze);
Estimate estimate_grouped_total(std::span<const double> f_a, std::span<const double> f_b,
                                std::span<const double> f_swap);

struct Summary {
  double mean = 0.0;
  double sd = 0.0;
};
Summary summarize(std::span<const double> reps);

struct SobolEstimate {
  std::string group;
  // Per-replicate values (size 1 for a single plan).
  std::vector<double> s_main;
  std::vector<double> t_total;
  std::vector<double> main_numerator;
  std::vector<double> total_numerator;
  std::vector<double> total_variance;

  Summary s_main_summary() const { return summarize(s_main); }
  Summary t_total_summary() const { return summarize(t_total); }
  Summary main_numerator_summary() const { return summarize(main_numerator); }
  Summary total_numerator_summary() const { return summarize(total_numerator); }
  Summary total_variance_summary() const { return summarize(total_variance); }
};

/// Indices for every group from one evaluated plan.
std::vector<SobolEstimate> estimate(const PickFreezePlan& plan, const PlanOutputs& out);

/// Appends the replicate values of `next` onto `acc` (same groups, same order).
void append_replicate(std::vector<SobolEstimate>& acc, const std::vector<SobolEstimate>& next);

/// Independent plans per replicate, replicate r seeded with derive_seed(seed, r).
std::vector<SobolEstimate> replicate_indices(const GroupedParameterSpace& space, const kernels::RowModel& model,
                                             std::size_t n, std::size_t replicates, std::uint64_t seed);

/// Pearson coefficients, rows = `row_columns`, columns = `col_columns`.
/// Zero-variance columns yield NaN entries.
Matrix correlation_matrix(const SampleMatrix& samples, std::span<const std::size_t> row_columns,
                          std::span<const std::size_t> col_columns);

/// group,S_main,S_main_sd,T_total,T_total_sd,main_numerator,total_numerator,total_variance
std::string to_csv(const std::vector<SobolEstimate>& est);

}  // namespace mfu::gsa
