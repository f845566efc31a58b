#include "mfu/gsa.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include "mfu/errors.hpp"

namespace mfu::gsa {

namespace {

constexpr double kDegenerateRelative = 1e-14;

std::uint64_t block_stream(const ParameterBlock& b) { return fnv1a(b.names.front()); }

std::size_t mixed_index(std::vector<MixedMatrix>& mixed, std::vector<bool> mask, const Matrix& a, const Matrix& b) {
  for (std::size_t i = 0; i < mixed.size(); ++i) {
    if (mixed[i].from_b == mask) return i;
  }
  Matrix m = a;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    if (mask[static_cast<std::size_t>(j)]) m.col(j) = b.col(j);
  }
  mixed.push_back({std::move(mask), std::move(m)});
  return mixed.size() - 1;
}

void check_lengths(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ArgumentError("output vectors must have equal length");
  if (a.size() < 2) throw ArgumentError("estimators need at least two rows");
}

double checked_variance(std::span<const double> f_a, std::span<const double> f_b) {
  const double v = estimate_total_variance(f_a, f_b);
  std::vector<double> sq(f_a.size() + f_b.size());
  for (std::size_t i = 0; i < f_a.size(); ++i) {
    sq[i] = f_a[i] * f_a[i];
    sq[f_a.size() + i] = f_b[i] * f_b[i];
  }
  const double m2 = kernels::pairwise_sum(sq) / static_cast<double>(sq.size());
  if (!(v > 0.0) || v < kDegenerateRelative * m2)
    throw DegenerateError("total output variance is zero to working precision");
  return v;
}

}  // namespace

std::size_t GroupedParameterSpace::dimension() const {
  std::size_t d = 0;
  for (const auto& b : blocks) d += b.names.size();
  return d;
}

std::vector<std::string> GroupedParameterSpace::names() const {
  std::vector<std::string> out;
  for (const auto& b : blocks) out.insert(out.end(), b.names.begin(), b.names.end());
  return out;
}

std::size_t GroupedParameterSpace::column(const std::string& name) const {
  const auto all = names();
  const auto it = std::find(all.begin(), all.end(), name);
  if (it == all.end()) throw ArgumentError("unknown parameter '" + name + "'");
  return static_cast<std::size_t>(it - all.begin());
}

bool GroupedParameterSpace::dependent() const {
  std::vector<std::size_t> owner(dimension(), groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g)
    for (auto c : groups[g].columns)
      if (c < owner.size()) owner[c] = g;
  std::size_t col = 0;
  for (const auto& b : blocks) {
    std::set<std::size_t> gs;
    for (std::size_t k = 0; k < b.names.size(); ++k) gs.insert(owner[col + k]);
    col += b.names.size();
    if (gs.size() > 1) return true;
  }
  return false;
}

void GroupedParameterSpace::validate() const {
  const std::size_t d = dimension();
  if (d == 0 || groups.empty()) throw ArgumentError("parameter space needs parameters and groups");
  for (const auto& b : blocks) {
    if (b.names.empty()) throw ArgumentError("parameter block without names");
    if (sampling::dimension(b.density) != b.names.size())
      throw ArgumentError("block '" + b.names.front() + "' names do not match its density dimension");
    sampling::validate(b.density);
  }
  std::vector<int> seen(d, 0);
  for (const auto& g : groups) {
    if (g.columns.empty()) throw ArgumentError("group '" + g.name + "' is empty");
    for (auto c : g.columns) {
      if (c >= d) throw ArgumentError("group '" + g.name + "' references a column out of range");
      ++seen[c];
    }
  }
  for (std::size_t c = 0; c < d; ++c)
    if (seen[c] != 1) throw ArgumentError("groups must be disjoint and cover every parameter");
  if (dependent()) {
    if (groups.size() != 2)
      throw UnsupportedConfiguration("dependent groups are only interpretable with exactly two groups");
    if (blocks.size() != 1 || !std::holds_alternative<sampling::Empirical>(blocks.front().density))
      throw UnsupportedConfiguration("dependent mode needs a single empirical joint sample");
  }
}

GroupedParameterSpace make_space(std::vector<ParameterBlock> blocks,
                                 const std::vector<std::pair<std::string, std::vector<std::string>>>& groups) {
  GroupedParameterSpace s{std::move(blocks), {}};
  for (const auto& [name, members] : groups) {
    Group g{name, {}};
    for (const auto& m : members) g.columns.push_back(s.column(m));
    s.groups.push_back(std::move(g));
  }
  s.validate();
  return s;
}

SampleMatrix sample_space(const GroupedParameterSpace& space, std::size_t n, std::uint64_t seed) {
  const std::size_t d = space.dimension();
  SampleMatrix out{Matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d)), space.names(), seed};
  Eigen::Index col = 0;
  for (const auto& block : space.blocks) {
    const auto width = static_cast<Eigen::Index>(block.names.size());
    const SampleMatrix s = sampling::sample(block.density, n, derive_seed(seed, block_stream(block)), block.names);
    out.values.middleCols(col, width) = s.values;
    col += width;
  }
  return out;
}

PickFreezePlan build_pick_freeze(const GroupedParameterSpace& space, std::size_t n, std::uint64_t seed) {
  if (n < 2) throw ArgumentError("pick-freeze needs n >= 2");
  space.validate();
  PickFreezePlan plan;
  if (space.dependent()) {
    const auto& joint = std::get<sampling::Empirical>(space.blocks.front().density).samples;
    const auto rows = static_cast<std::size_t>(joint.rows());
    if (rows < 2 * n) throw ArgumentError("dependent mode needs at least 2n joint samples");
    const auto perm = sampling::permutation(rows, derive_seed(seed, 0x5u));
    const auto d = joint.cols();
    plan.a = {Matrix(static_cast<Eigen::Index>(n), d), space.names(), seed};
    plan.b = {Matrix(static_cast<Eigen::Index>(n), d), space.names(), seed};
    for (std::size_t i = 0; i < n; ++i) {
      plan.a.values.row(static_cast<Eigen::Index>(i)) = joint.row(static_cast<Eigen::Index>(perm[i]));
      plan.b.values.row(static_cast<Eigen::Index>(i)) = joint.row(static_cast<Eigen::Index>(perm[n + i]));
    }
  } else {
    plan.a = sample_space(space, n, derive_seed(seed, 0xAu));
    plan.b = sample_space(space, n, derive_seed(seed, 0xBu));
  }
  const std::size_t d = space.dimension();
  for (const auto& g : space.groups) {
    plan.group_names.push_back(g.name);
    std::vector<bool> in_group(d, false);
    for (auto c : g.columns) in_group[c] = true;
    std::vector<bool> complement(d);
    for (std::size_t j = 0; j < d; ++j) complement[j] = !in_group[j];
    plan.freeze.push_back(mixed_index(plan.mixed, complement, plan.a.values, plan.b.values));
    plan.swap.push_back(mixed_index(plan.mixed, in_group, plan.a.values, plan.b.values));
  }
  return plan;
}

PlanOutputs evaluate_plan(const PickFreezePlan& plan, const kernels::RowModel& model) {
  PlanOutputs out;
  out.a = kernels::evaluate_rows(plan.a.values, model);
  out.b = kernels::evaluate_rows(plan.b.values, model);
  for (const auto& m : plan.mixed) {
    const bool all_b = std::all_of(m.from_b.begin(), m.from_b.end(), [](bool v) { return v; });
    const bool all_a = std::none_of(m.from_b.begin(), m.from_b.end(), [](bool v) { return v; });
    if (all_b) {
      out.mixed.push_back(out.b);
    } else if (all_a) {
      out.mixed.push_back(out.a);
    } else {
      out.mixed.push_back(kernels::evaluate_rows(m.values, model));
    }
  }
  return out;
}

PlanOutputs scaled(const PlanOutputs& out, double c, double b) {
  auto f = [&](std::vector<double> v) {
    for (auto& x : v) x = c * x + b;
    return v;
  };
  PlanOutputs s{f(out.a), f(out.b), {}};
  for (const auto& m : out.mixed) s.mixed.push_back(f(m));
  return s;
}

double estimate_total_variance(std::span<const double> f_a, std::span<const double> f_b) {
  check_lengths(f_a, f_b);
  const double n = static_cast<double>(f_a.size());
  const double mu_a = kernels::pairwise_sum(f_a) / n;
  const double mu_b = kernels::pairwise_sum(f_b) / n;
  std::vector<double> terms(f_a.size());
  for (std::size_t i = 0; i < f_a.size(); ++i) {
    const double da = f_a[i] - mu_a, db = f_b[i] - mu_b;
    terms[i] = da * da + db * db;
  }
  return kernels::pairwise_sum(terms) / (2.0 * n);
}

Estimate estimate_grouped_main(std::span<const double> f_a, std::span<const double> f_b,
                               std::span<const double> f_freeze) {
  check_lengths(f_a, f_b);
  check_lengths(f_a, f_freeze);
  const double v = checked_variance(f_a, f_b);
  const double n = static_cast<double>(f_a.size());
  const double mu_a = kernels::pairwise_sum(f_a) / n;
  std::vector<double> terms(f_a.size());
  for (std::size_t i = 0; i < f_a.size(); ++i) terms[i] = (f_a[i] - mu_a) * (f_freeze[i] - f_b[i]);
  const double num = kernels::pairwise_sum(terms) / n;
  return {num, num / v, v};
}

Estimate estimate_grouped_total(std::span<const double> f_a, std::span<const double> f_b,
                                std::span<const double> f_swap) {
  check_lengths(f_a, f_b);
  check_lengths(f_a, f_swap);
  const double v = checked_variance(f_a, f_b);
  std::vector<double> terms(f_a.size());
  for (std::size_t i = 0; i < f_a.size(); ++i) {
    const double d = f_a[i] - f_swap[i];
    terms[i] = d * d;
  }
  const double num = kernels::pairwise_sum(terms) / (2.0 * static_cast<double>(f_a.size()));
  return {num, num / v, v};
}

Summary summarize(std::span<const double> reps) {
  if (reps.empty()) return {};
  Summary s{sampling::mean(reps), 0.0};
  if (reps.size() > 1) s.sd = std::sqrt(sampling::variance(reps));
  return s;
}

std::vector<SobolEstimate> estimate(const PickFreezePlan& plan, const PlanOutputs& out) {
  std::vector<SobolEstimate> res;
  for (std::size_t g = 0; g < plan.group_names.size(); ++g) {
    const auto m = estimate_grouped_main(out.a, out.b, out.freeze(plan, g));
    const auto t = estimate_grouped_total(out.a, out.b, out.swap(plan, g));
    res.push_back({plan.group_names[g], {m.index}, {t.index}, {m.numerator}, {t.numerator}, {m.total_variance}});
  }
  return res;
}

void append_replicate(std::vector<SobolEstimate>& acc, const std::vector<SobolEstimate>& next) {
  if (acc.empty()) {
    acc = next;
    return;
  }
  if (acc.size() != next.size()) throw ArgumentError("replicate group count mismatch");
  for (std::size_t g = 0; g < acc.size(); ++g) {
    auto push = [](std::vector<double>& a, const std::vector<double>& b) { a.insert(a.end(), b.begin(), b.end()); };
    push(acc[g].s_main, next[g].s_main);
    push(acc[g].t_total, next[g].t_total);
    push(acc[g].main_numerator, next[g].main_numerator);
    push(acc[g].total_numerator, next[g].total_numerator);
    push(acc[g].total_variance, next[g].total_variance);
  }
}

std::vector<SobolEstimate> replicate_indices(const GroupedParameterSpace& space, const kernels::RowModel& model,
                                             std::size_t n, std::size_t replicates, std::uint64_t seed) {
  if (replicates < 2) throw ArgumentError("replicate_indices needs at least two replicates");
  std::vector<SobolEstimate> acc;
  for (std::size_t r = 0; r < replicates; ++r) {
    const auto plan = build_pick_freeze(space, n, derive_seed(seed, r));
    append_replicate(acc, estimate(plan, evaluate_plan(plan, model)));
  }
  return acc;
}

Matrix correlation_matrix(const SampleMatrix& samples, std::span<const std::size_t> row_columns,
                          std::span<const std::size_t> col_columns) {
  if (samples.rows() < 3) throw ArgumentError("correlation needs at least three rows");
  Matrix c(static_cast<Eigen::Index>(row_columns.size()), static_cast<Eigen::Index>(col_columns.size()));
  for (std::size_t i = 0; i < row_columns.size(); ++i) {
    const auto a = samples.column(row_columns[i]);
    for (std::size_t j = 0; j < col_columns.size(); ++j) {
      const auto b = samples.column(col_columns[j]);
      c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = sampling::pearson(a, b);
    }
  }
  return c;
}

std::string to_csv(const std::vector<SobolEstimate>& est) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "group,S_main,S_main_sd,T_total,T_total_sd,main_numerator,total_numerator,total_variance\n";
  for (const auto& e : est) {
    const auto s = e.s_main_summary(), t = e.t_total_summary();
    os << e.group << ',' << s.mean << ',' << s.sd << ',' << t.mean << ',' << t.sd << ','
       << e.main_numerator_summary().mean << ',' << e.total_numerator_summary().mean << ','
       << e.total_variance_summary().mean << '\n';
  }
  return os.str();
}

}  // namespace mfu::gsa
