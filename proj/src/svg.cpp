#include "mfu/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "mfu/errors.hpp"
#include "mfu/io.hpp"

namespace mfu::svg {

namespace {

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 50;
constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* color(std::size_t i) { return kPalette[i % std::size(kPalette)]; }

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo <= 0.0) {
      const double pad = lo == 0.0 ? 1.0 : 0.05 * std::abs(lo);
      lo -= pad;
      hi += pad;
    }
  }
};

class Canvas {
 public:
  Canvas(const std::string& title, Range x, Range y) : x_(x), y_(y) {
    os_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth) << "\" height=\"" << num(kHeight)
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os_ << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os_ << "<text x=\"" << num(kWidth / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
        << "</text>\n";
  }

  double px(double x) const { return kLeft + (x - x_.lo) / (x_.hi - x_.lo) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - y_.lo) / (y_.hi - y_.lo) * (kHeight - kTop - kBottom); }

  void axes(const std::string& xlabel, const std::string& ylabel) {
    const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
    os_ << "<path d=\"M" << num(x0) << ' ' << num(y1) << " L" << num(x0) << ' ' << num(y0) << " L" << num(x1) << ' '
        << num(y0) << "\" stroke=\"black\" fill=\"none\"/>\n";
    for (int i = 0; i <= 4; ++i) {
      const double xv = x_.lo + (x_.hi - x_.lo) * i / 4.0, yv = y_.lo + (y_.hi - y_.lo) * i / 4.0;
      os_ << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(y0 + 16) << "\" text-anchor=\"middle\">" << num(xv)
          << "</text>\n";
      os_ << "<text x=\"" << num(x0 - 6) << "\" y=\"" << num(py(yv) + 4) << "\" text-anchor=\"end\">" << num(yv)
          << "</text>\n";
    }
    os_ << "<text x=\"" << num((x0 + x1) / 2) << "\" y=\"" << num(kHeight - 10) << "\" text-anchor=\"middle\">"
        << escape(xlabel) << "</text>\n";
    os_ << "<text x=\"16\" y=\"" << num((y0 + y1) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
        << num((y0 + y1) / 2) << ")\">" << escape(ylabel) << "</text>\n";
  }

  void legend(std::size_t i, const std::string& name, const char* fill, bool dashed = false) {
    const double y = kTop + 16.0 * static_cast<double>(i);
    const double x = kWidth - kRight + 10;
    os_ << "<line x1=\"" << num(x) << "\" y1=\"" << num(y) << "\" x2=\"" << num(x + 18) << "\" y2=\"" << num(y)
        << "\" stroke=\"" << fill << "\" stroke-width=\"3\"" << (dashed ? " stroke-dasharray=\"5,3\"" : "") << "/>\n";
    os_ << "<text x=\"" << num(x + 24) << "\" y=\"" << num(y + 4) << "\">" << escape(name) << "</text>\n";
  }

  void marker(const Marker& m) {
    const double x = px(m.x);
    os_ << "<line x1=\"" << num(x) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(x) << "\" y2=\""
        << num(kHeight - kBottom) << "\" stroke=\"black\" stroke-dasharray=\"2,2\"/>\n";
    os_ << "<text x=\"" << num(x + 3) << "\" y=\"" << num(kTop + 10) << "\" font-size=\"10\">" << escape(m.label)
        << "</text>\n";
  }

  std::ostringstream& out() { return os_; }
  std::string finish() {
    os_ << "</svg>\n";
    return os_.str();
  }

 private:
  Range x_, y_;
  std::ostringstream os_;
};

}  // namespace

std::string Histogram::csv() const {
  std::ostringstream os;
  os << "bin_lo,bin_hi,count\n";
  for (std::size_t i = 0; i < counts.size(); ++i)
    os << io::fmt(edges[i]) << ',' << io::fmt(edges[i + 1]) << ',' << io::fmt(counts[i]) << '\n';
  return os.str();
}

Histogram histogram(std::span<const double> values, std::span<const double> edges) {
  if (edges.size() < 2) throw ArgumentError("histogram needs at least one bin");
  Histogram h{{edges.begin(), edges.end()}, std::vector<double>(edges.size() - 1, 0.0)};
  for (double v : values) {
    if (!std::isfinite(v) || v < edges.front() || v > edges.back()) continue;
    auto it = std::upper_bound(edges.begin(), edges.end(), v);
    std::size_t b = static_cast<std::size_t>(it - edges.begin());
    b = b == 0 ? 0 : std::min(b - 1, h.counts.size() - 1);
    h.counts[b] += 1.0;
  }
  return h;
}

Histogram histogram(std::span<const double> values, std::size_t bins) {
  if (bins == 0) throw ArgumentError("histogram needs at least one bin");
  Range r;
  for (double v : values) r.add(v);
  r.finish();
  std::vector<double> edges(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) edges[i] = r.lo + (r.hi - r.lo) * static_cast<double>(i) / static_cast<double>(bins);
  edges.back() = r.hi;
  return histogram(values, edges);
}

std::string line_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                      const std::vector<Series>& series, const std::vector<Band>& bands,
                      const std::vector<Marker>& markers) {
  Range xr, yr;
  for (const auto& s : series) {
    for (double v : s.x) xr.add(v);
    for (double v : s.y) yr.add(v);
  }
  for (const auto& b : bands) {
    for (double v : b.x) xr.add(v);
    for (double v : b.lower) yr.add(v);
    for (double v : b.upper) yr.add(v);
  }
  for (const auto& m : markers) xr.add(m.x);
  xr.finish();
  yr.finish();
  Canvas c(title, xr, yr);
  c.axes(xlabel, ylabel);
  std::size_t k = 0;
  for (const auto& b : bands) {
    auto& os = c.out();
    os << "<path d=\"";
    for (std::size_t i = 0; i < b.x.size(); ++i) os << (i ? " L" : "M") << num(c.px(b.x[i])) << ' ' << num(c.py(b.upper[i]));
    for (std::size_t i = b.x.size(); i-- > 0;) os << " L" << num(c.px(b.x[i])) << ' ' << num(c.py(b.lower[i]));
    os << " Z\" fill=\"" << color(k) << "\" fill-opacity=\"0.25\" stroke=\"none\"/>\n";
    c.legend(k, b.name, color(k));
    ++k;
  }
  for (const auto& s : series) {
    auto& os = c.out();
    if (s.x.size() == 1 || s.name.rfind("data", 0) == 0) {
      for (std::size_t i = 0; i < s.x.size(); ++i)
        os << "<circle cx=\"" << num(c.px(s.x[i])) << "\" cy=\"" << num(c.py(s.y[i])) << "\" r=\"2\" fill=\"" << color(k)
           << "\"/>\n";
    } else {
      os << "<path d=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) os << (i ? " L" : "M") << num(c.px(s.x[i])) << ' ' << num(c.py(s.y[i]));
      os << "\" fill=\"none\" stroke=\"" << color(k) << "\" stroke-width=\"1.5\""
         << (s.dashed ? " stroke-dasharray=\"5,3\"" : "") << "/>\n";
    }
    c.legend(k, s.name, color(k), s.dashed);
    ++k;
  }
  for (const auto& m : markers) c.marker(m);
  return c.finish();
}

std::string histogram_plot(const std::string& title, const std::string& xlabel,
                           const std::vector<std::pair<std::string, Histogram>>& hists,
                           const std::vector<Marker>& markers) {
  Range xr, yr;
  yr.add(0.0);
  for (const auto& [name, h] : hists) {
    for (double e : h.edges) xr.add(e);
    for (double v : h.counts) yr.add(v);
  }
  for (const auto& m : markers) xr.add(m.x);
  xr.finish();
  yr.finish();
  Canvas c(title, xr, yr);
  c.axes(xlabel, "count");
  for (std::size_t k = 0; k < hists.size(); ++k) {
    const auto& h = hists[k].second;
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
      const double x0 = c.px(h.edges[i]), x1 = c.px(h.edges[i + 1]), y = c.py(h.counts[i]), y0 = c.py(0.0);
      c.out() << "<rect x=\"" << num(x0) << "\" y=\"" << num(y) << "\" width=\"" << num(std::max(0.0, x1 - x0))
              << "\" height=\"" << num(std::max(0.0, y0 - y)) << "\" fill=\"" << color(k)
              << "\" fill-opacity=\"0.5\"/>\n";
    }
    c.legend(k, hists[k].first, color(k));
  }
  for (const auto& m : markers) c.marker(m);
  return c.finish();
}

std::string bar_chart(const std::string& title, const std::vector<std::string>& categories,
                      const std::vector<BarSeries>& series) {
  Range yr;
  yr.add(0.0);
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      const double e = i < s.errors.size() ? s.errors[i] : 0.0;
      yr.add(s.values[i] + e);
      yr.add(s.values[i] - e);
    }
  yr.finish();
  Range xr;
  xr.add(0.0);
  xr.add(static_cast<double>(categories.size()));
  Canvas c(title, xr, yr);
  auto& os = c.out();
  const double y0 = c.py(std::max(0.0, yr.lo));
  os << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(kWidth - kRight) << "\" y2=\""
     << num(y0) << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double yv = yr.lo + (yr.hi - yr.lo) * i / 4.0;
    os << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(c.py(yv) + 4) << "\" text-anchor=\"end\">" << num(yv)
       << "</text>\n";
  }
  const double slot = 1.0 / static_cast<double>(series.size() + 1);
  for (std::size_t g = 0; g < categories.size(); ++g) {
    os << "<text x=\"" << num(c.px(g + 0.5)) << "\" y=\"" << num(kHeight - kBottom + 16)
       << "\" text-anchor=\"middle\">" << escape(categories[g]) << "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
      const double v = series[k].values[g];
      const double xa = c.px(static_cast<double>(g) + slot * (static_cast<double>(k) + 0.5));
      const double xb = c.px(static_cast<double>(g) + slot * (static_cast<double>(k) + 1.5));
      const double yv = c.py(v);
      os << "<rect x=\"" << num(xa) << "\" y=\"" << num(std::min(yv, y0)) << "\" width=\"" << num(xb - xa)
         << "\" height=\"" << num(std::abs(y0 - yv)) << "\" fill=\"" << color(k) << "\"/>\n";
      if (g < series[k].errors.size()) {
        const double e = series[k].errors[g], xm = 0.5 * (xa + xb);
        os << "<line x1=\"" << num(xm) << "\" y1=\"" << num(c.py(v - e)) << "\" x2=\"" << num(xm) << "\" y2=\""
           << num(c.py(v + e)) << "\" stroke=\"black\"/>\n";
      }
    }
  }
  for (std::size_t k = 0; k < series.size(); ++k) c.legend(k, series[k].name, color(k));
  return c.finish();
}

std::string heatmap(const std::string& title, const std::vector<std::string>& rows,
                    const std::vector<std::string>& cols, const Matrix& values) {
  Range xr, yr;
  xr.add(0.0);
  xr.add(static_cast<double>(cols.size()));
  yr.add(0.0);
  yr.add(static_cast<double>(rows.size()));
  Canvas c(title, xr, yr);
  auto& os = c.out();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double yt = c.py(static_cast<double>(rows.size() - i)), yb = c.py(static_cast<double>(rows.size() - i - 1));
    os << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(0.5 * (yt + yb) + 4) << "\" text-anchor=\"end\">"
       << escape(rows[i]) << "</text>\n";
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const double v = values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      std::string fill = "#bbbbbb";
      if (std::isfinite(v)) {
        const double a = std::clamp(v, -1.0, 1.0);
        const int r = a < 0 ? static_cast<int>(255 * (1 + a)) : 255;
        const int b = a > 0 ? static_cast<int>(255 * (1 - a)) : 255;
        const int g = static_cast<int>(255 * (1 - std::abs(a)));
        char buf[8];
        std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
        fill = buf;
      }
      const double xl = c.px(static_cast<double>(j)), xr2 = c.px(static_cast<double>(j + 1));
      os << "<rect x=\"" << num(xl) << "\" y=\"" << num(yt) << "\" width=\"" << num(xr2 - xl) << "\" height=\""
         << num(yb - yt) << "\" fill=\"" << fill << "\" stroke=\"white\"/>\n";
      os << "<text x=\"" << num(0.5 * (xl + xr2)) << "\" y=\"" << num(0.5 * (yt + yb) + 4)
         << "\" text-anchor=\"middle\" font-size=\"10\">" << num(std::round(v * 100) / 100) << "</text>\n";
    }
  }
  for (std::size_t j = 0; j < cols.size(); ++j)
    os << "<text x=\"" << num(c.px(j + 0.5)) << "\" y=\"" << num(kHeight - kBottom + 16)
       << "\" text-anchor=\"middle\">" << escape(cols[j]) << "</text>\n";
  return c.finish();
}

}  // namespace mfu::svg
