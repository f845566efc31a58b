#pragma once

#include <string>
#include <vector>

namespace mfu::io {

/// Round-trip decimal ("%.17g"); non-finite values print as nan, inf, -inf.
std::string fmt(double v);

/// Column-oriented table written as CSV with a header row.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  void add(std::string name, std::vector<double> values);
  std::string csv() const;
};

void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

}  // namespace mfu::io
