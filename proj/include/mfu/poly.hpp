#pragma once

// Polynomial illustration: a weakly nonlinear truth, an inadequate linear
// model and a model enriched with the MFU term c2 x^alpha.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace mfu::poly {

enum class Model { Truth, Linear, Enriched };

struct MfuBlock {
  double c2 = 0.0;
  double alpha = 2.0;
};

struct Hypers {
  double mu_c2 = -1.0;
  double sigma_c2 = 0.05;
  double mu_alpha = 0.0;
  double sigma_alpha = 0.05;
};

struct PolyParams {
  double c0 = 1.0;
  double c1 = 1.0;
  std::optional<MfuBlock> mfu;
  std::optional<Hypers> hypers;
};

/// truth = c0 + c1 x + 0.1 (x^2 + x^3); linear = c0 + c1 x;
/// enriched = c0 + c1 x + c2 x^alpha (throws ConfigError without an MFU block).
double evaluate(Model m, const PolyParams& p, double x);
std::vector<double> evaluate(Model m, const PolyParams& p, std::span<const double> x);

/// True when any x lies outside the study interval [0, 2].
bool extrapolates(std::span<const double> x);

struct Dataset {
  std::vector<double> x;
  std::vector<double> d;
};

/// n equally spaced points on [0, 2], d_i = truth(x_i) + N(0, noise_sd^2),
/// truth with c0 = c1 = 1.
Dataset generate_data(std::size_t n, double noise_sd, std::uint64_t seed);

/// Equally spaced grid on [lo, hi] with n points.
std::vector<double> linspace(double lo, double hi, std::size_t n);

}  // namespace mfu::poly
