#pragma once

// Data-parallel row kernels. The default implementations use OpenMP; the
// `serial` namespace keeps straightforward reference loops that the tests
// compare against bit for bit and the benchmark times.
//
// Every kernel writes results by index and never reduces across threads, so
// output is identical for any thread count.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "mfu/sampling.hpp"

namespace mfu::kernels {

using RowModel = std::function<double(std::span<const double>)>;
using RowFill = std::function<void(std::size_t, std::span<double>)>;

void set_threads(int n);
int max_threads();

/// out[i] = model(row i).
std::vector<double> evaluate_rows(const Matrix& x, const RowModel& model);
/// fill(i, row i) for every row.
void fill_rows(Matrix& x, const RowFill& fill);
/// out[i] = f(i) for i < n.
std::vector<double> generate(std::size_t n, const std::function<double(std::size_t)>& f);
/// Gaussian KDE evaluated at each point.
std::vector<double> kde_eval_many(std::span<const double> centers, double bandwidth,
                                  std::span<const double> points);

/// Pairwise summation; fixed association order regardless of threads.
double pairwise_sum(std::span<const double> x);

namespace serial {
std::vector<double> evaluate_rows(const Matrix& x, const RowModel& model);
void fill_rows(Matrix& x, const RowFill& fill);
std::vector<double> generate(std::size_t n, const std::function<double(std::size_t)>& f);
std::vector<double> kde_eval_many(std::span<const double> centers, double bandwidth,
                                  std::span<const double> points);
}  // namespace serial

}  // namespace mfu::kernels
