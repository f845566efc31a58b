#include "mfu/kernels.hpp"

#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mfu::kernels {

namespace {

double kde_point(std::span<const double> centers, double bandwidth, double x) {
  const double inv_h = 1.0 / bandwidth;
  double acc = 0.0;
  for (double c : centers) {
    const double z = (x - c) * inv_h;
    acc += std::exp(-0.5 * z * z);
  }
  return acc * inv_h / (static_cast<double>(centers.size()) * std::sqrt(2.0 * std::numbers::pi));
}

// Keeps the exception of the lowest failing index so the rethrown error does
// not depend on thread scheduling.
class FirstError {
 public:
  template <class F>
  void run(std::ptrdiff_t i, F&& f) {
    try {
      f();
    } catch (...) {
      std::lock_guard lock(mu_);
      if (!err_ || i < index_) {
        err_ = std::current_exception();
        index_ = i;
      }
    }
  }
  void rethrow() const {
    if (err_) std::rethrow_exception(err_);
  }

 private:
  std::mutex mu_;
  std::exception_ptr err_;
  std::ptrdiff_t index_ = 0;
};

}  // namespace

void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

std::vector<double> evaluate_rows(const Matrix& x, const RowModel& model) {
  const auto n = static_cast<std::ptrdiff_t>(x.rows());
  const auto d = static_cast<std::size_t>(x.cols());
  std::vector<double> out(static_cast<std::size_t>(n));
  FirstError err;
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    err.run(i, [&] { out[static_cast<std::size_t>(i)] = model({x.data() + i * x.cols(), d}); });
  }
  err.rethrow();
  return out;
}

void fill_rows(Matrix& x, const RowFill& fill) {
  const auto n = static_cast<std::ptrdiff_t>(x.rows());
  const auto d = static_cast<std::size_t>(x.cols());
  FirstError err;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    err.run(i, [&] { fill(static_cast<std::size_t>(i), {x.data() + i * x.cols(), d}); });
  }
  err.rethrow();
}

std::vector<double> generate(std::size_t n, const std::function<double(std::size_t)>& f) {
  std::vector<double> out(n);
  const auto m = static_cast<std::ptrdiff_t>(n);
  FirstError err;
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < m; ++i) {
    err.run(i, [&] { out[static_cast<std::size_t>(i)] = f(static_cast<std::size_t>(i)); });
  }
  err.rethrow();
  return out;
}

std::vector<double> kde_eval_many(std::span<const double> centers, double bandwidth,
                                  std::span<const double> points) {
  std::vector<double> out(points.size());
  const auto m = static_cast<std::ptrdiff_t>(points.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < m; ++i) {
    out[static_cast<std::size_t>(i)] = kde_point(centers, bandwidth, points[static_cast<std::size_t>(i)]);
  }
  return out;
}

double pairwise_sum(std::span<const double> x) {
  if (x.size() <= 64) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  }
  const std::size_t half = x.size() / 2;
  return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

namespace serial {

std::vector<double> evaluate_rows(const Matrix& x, const RowModel& model) {
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  const auto d = static_cast<std::size_t>(x.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = model({x.data() + i * d, d});
  return out;
}

void fill_rows(Matrix& x, const RowFill& fill) {
  const auto d = static_cast<std::size_t>(x.cols());
  for (std::size_t i = 0; i < static_cast<std::size_t>(x.rows()); ++i) fill(i, {x.data() + i * d, d});
}

std::vector<double> generate(std::size_t n, const std::function<double(std::size_t)>& f) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
  return out;
}

std::vector<double> kde_eval_many(std::span<const double> centers, double bandwidth,
                                  std::span<const double> points) {
  std::vector<double> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) out[i] = kde_point(centers, bandwidth, points[i]);
  return out;
}

}  // namespace serial
}  // namespace mfu::kernels
