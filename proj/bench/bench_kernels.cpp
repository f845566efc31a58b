// Times the OpenMP kernels against their serial references and checks that
// both produce identical output.
//
// Usage: bench_kernels [rows] [kde_points]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "mfu/kernels.hpp"
#include "mfu/sampling.hpp"
#include "mfu/transport.hpp"

using namespace mfu;

namespace {

template <class F>
double best_of(int reps, F&& f) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void row(const char* name, double serial, double parallel, bool same) {
  std::printf("%-28s %10.4f %10.4f %8.2fx  %s\n", name, serial, parallel, serial / parallel, same ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t rows = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 2000;
  const std::size_t points = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 20000;
  std::printf("threads %d, rows %zu, kde points %zu\n", kernels::max_threads(), rows, points);
  std::printf("%-28s %10s %10s %9s\n", "kernel", "serial s", "openmp s", "speedup");
  bool all_same = true;

  // Transport QoI over sampled (u, nu_p, s, nu_m, alpha) rows.
  {
    const transport::TransportConfig cfg;
    SampleMatrix x;
    x.values.resize(static_cast<Eigen::Index>(rows), 5);
    const std::vector<sampling::Density> dens = {sampling::Uniform{0.9, 1.1}, sampling::Uniform{0.008, 0.012},
                                                       sampling::Uniform{0.2, 1.5}, sampling::Uniform{0.05, 0.15},
                                                       sampling::TriangularUnitRange{1.0, 2.0, 1.5}};
    for (std::size_t j = 0; j < dens.size(); ++j) {
      const auto col = sampling::sample(dens[j], rows, 100 + j);
      for (std::size_t i = 0; i < rows; ++i) x.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col.values(static_cast<Eigen::Index>(i), 0);
    }
    const kernels::RowModel model = [&](std::span<const double> r) {
      return transport::qoi(cfg, {r[0], r[1], r[2]}, transport::Fractional{r[3], r[4]});
    };
    std::vector<double> a, b;
    const double ts = best_of(3, [&] { a = kernels::serial::evaluate_rows(x.values, model); });
    const double tp = best_of(3, [&] { b = kernels::evaluate_rows(x.values, model); });
    all_same = all_same && a == b;
    row("evaluate_rows (transport)", ts, tp, a == b);
  }

  // Gaussian KDE at many points.
  {
    const auto centers = sampling::sample(sampling::Normal{0.0, 1.0}, points, 7).column(0);
    const auto at = sampling::sample(sampling::Normal{0.0, 1.5}, points, 8).column(0);
    std::vector<double> a, b;
    const double ts = best_of(3, [&] { a = kernels::serial::kde_eval_many(centers, 0.1, at); });
    const double tp = best_of(3, [&] { b = kernels::kde_eval_many(centers, 0.1, at); });
    all_same = all_same && a == b;
    row("kde_eval_many", ts, tp, a == b);
  }
  return all_same ? 0 : 1;
}
