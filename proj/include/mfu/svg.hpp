#pragma once

// Standalone SVG charts. Output depends only on the inputs, so plots are
// byte-reproducible alongside their CSV data.

#include <span>
#include <string>
#include <vector>

#include "mfu/sampling.hpp"

namespace mfu::svg {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
};

/// Shaded region between lower and upper over x.
struct Band {
  std::string name;
  std::vector<double> x;
  std::vector<double> lower;
  std::vector<double> upper;
};

struct Marker {
  std::string label;
  double x = 0.0;
};

struct Histogram {
  std::vector<double> edges;  // bins + 1
  std::vector<double> counts;

  /// "bin_lo,bin_hi,count"
  std::string csv() const;
};

Histogram histogram(std::span<const double> values, std::size_t bins);
/// Shared edges, so two samples can be overlaid.
Histogram histogram(std::span<const double> values, std::span<const double> edges);

std::string line_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                      const std::vector<Series>& series, const std::vector<Band>& bands = {},
                      const std::vector<Marker>& markers = {});

std::string histogram_plot(const std::string& title, const std::string& xlabel,
                           const std::vector<std::pair<std::string, Histogram>>& hists,
                           const std::vector<Marker>& markers = {});

/// Grouped bars with optional +- error whiskers (errors may be empty).
struct BarSeries {
  std::string name;
  std::vector<double> values;
  std::vector<double> errors;
};
std::string bar_chart(const std::string& title, const std::vector<std::string>& categories,
                      const std::vector<BarSeries>& series);

/// Values in [-1, 1] on a blue-white-red scale; NaN cells are grey.
std::string heatmap(const std::string& title, const std::vector<std::string>& rows,
                    const std::vector<std::string>& cols, const Matrix& values);

}  // namespace mfu::svg
