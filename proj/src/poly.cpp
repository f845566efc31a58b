#include "mfu/poly.hpp"

#include <cmath>

#include "mfu/errors.hpp"
#include "mfu/rng.hpp"

namespace mfu::poly {

double evaluate(Model m, const PolyParams& p, double x) {
  switch (m) {
    case Model::Truth:
      return p.c0 + p.c1 * x + 0.1 * (x * x + x * x * x);
    case Model::Linear:
      return p.c0 + p.c1 * x;
    case Model::Enriched:
      if (!p.mfu) throw ConfigError("mfu", "enriched model needs c2 and alpha");
      return p.c0 + p.c1 * x + p.mfu->c2 * std::pow(x, p.mfu->alpha);
  }
  return 0.0;
}

std::vector<double> evaluate(Model m, const PolyParams& p, std::span<const double> x) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = evaluate(m, p, x[i]);
  return out;
}

bool extrapolates(std::span<const double> x) {
  for (double v : x)
    if (v < 0.0 || v > 2.0) return true;
  return false;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  if (n < 2) throw ArgumentError("linspace needs at least two points");
  std::vector<double> x(n);
  const double h = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) x[i] = lo + h * static_cast<double>(i);
  x.back() = hi;
  return x;
}

Dataset generate_data(std::size_t n, double noise_sd, std::uint64_t seed) {
  if (n < 2) throw ArgumentError("generate_data needs n >= 2");
  if (!(noise_sd > 0.0)) throw ArgumentError("noise sd must be positive");
  Dataset ds{linspace(0.0, 2.0, n), {}};
  const PolyParams truth;
  Rng rng(seed);
  ds.d.resize(n);
  for (std::size_t i = 0; i < n; ++i) ds.d[i] = evaluate(Model::Truth, truth, ds.x[i]) + noise_sd * rng.normal();
  return ds;
}

}  // namespace mfu::poly
