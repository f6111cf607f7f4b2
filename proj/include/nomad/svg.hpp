#pragma once

#include "nomad/linalg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nomad::svg {

struct Rgb {
  int r = 0;
  int g = 0;
  int b = 0;
};

/// Step k of the 256-step diverging ramp: 0 is (33, 102, 172), 127/128 meet
/// at white, 255 is (178, 24, 43). Each half interpolates linearly.
inline Rgb diverging_ramp(int k) {
  k = std::clamp(k, 0, 255);
  constexpr Rgb lo{33, 102, 172};
  constexpr Rgb mid{255, 255, 255};
  constexpr Rgb hi{178, 24, 43};
  auto lerp = [](const Rgb& a, const Rgb& b, double t) {
    return Rgb{static_cast<int>(std::lround(a.r + (b.r - a.r) * t)),
               static_cast<int>(std::lround(a.g + (b.g - a.g) * t)),
               static_cast<int>(std::lround(a.b + (b.b - a.b) * t))};
  };
  if (k < 128) return lerp(lo, mid, static_cast<double>(k) / 127.0);
  return lerp(mid, hi, static_cast<double>(k - 128) / 127.0);
}

/// Ramp index for v on the symmetric range [-vmax, vmax].
inline int ramp_index(double v, double vmax) {
  if (!(vmax > 0.0)) return 128;
  const double t = std::clamp((v / vmax + 1.0) * 0.5, 0.0, 1.0);
  return std::min(255, static_cast<int>(t * 256.0));
}

inline std::string hex(const Rgb& c) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

inline void write_text(const std::string& text, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
}

/// One rect per entry, colored on the symmetric range [-max|M|, max|M|].
inline std::string heatmap(const Matrix& m, int cell = 4, const std::string& title = "") {
  const Index rows = m.rows();
  const Index cols = m.cols();
  const double vmax = m.cwiseAbs().maxCoeff();
  const int top = title.empty() ? 0 : 20;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << cols * cell << "\" height=\""
     << rows * cell + top << "\" shape-rendering=\"crispEdges\">\n";
  if (!title.empty()) {
    os << "<text x=\"2\" y=\"14\" font-family=\"sans-serif\" font-size=\"12\">" << title
       << "</text>\n";
  }
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      os << "<rect x=\"" << j * cell << "\" y=\"" << i * cell + top << "\" width=\"" << cell
         << "\" height=\"" << cell << "\" fill=\"" << hex(diverging_ramp(ramp_index(m(i, j), vmax)))
         << "\"/>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

/// Scatter of the first two columns; points colored by label when given.
inline std::string scatter(const Matrix& coords, const std::optional<std::vector<int>>& labels,
                           int size = 400, const std::string& title = "") {
  if (coords.cols() < 1) throw std::invalid_argument("scatter: need at least one coordinate");
  static constexpr std::array<const char*, 8> palette = {
      "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666"};
  const Index n = coords.rows();
  const Vector x = coords.col(0);
  const Vector y = coords.cols() > 1 ? Vector(coords.col(1)) : Vector::Zero(n);
  auto span = [](const Vector& v) {
    const double lo = v.minCoeff();
    const double hi = v.maxCoeff();
    return std::make_pair(lo, hi > lo ? hi - lo : 1.0);
  };
  const auto [x0, xs] = span(x);
  const auto [y0, ys] = span(y);
  const double pad = 10.0;
  const double inner = size - 2.0 * pad;
  const int top = title.empty() ? 0 : 20;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\""
     << size + top << "\">\n";
  if (!title.empty()) {
    os << "<text x=\"2\" y=\"14\" font-family=\"sans-serif\" font-size=\"12\">" << title
       << "</text>\n";
  }
  char buf[160];
  for (Index i = 0; i < n; ++i) {
    const double px = pad + (x(i) - x0) / xs * inner;
    const double py = top + pad + (1.0 - (y(i) - y0) / ys) * inner;
    const int lab = labels ? (*labels)[static_cast<std::size_t>(i)] : 0;
    const char* color = palette[static_cast<std::size_t>(std::abs(lab)) % palette.size()];
    std::snprintf(buf, sizeof(buf), "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"2.5\" fill=\"%s\"/>\n", px,
                  py, color);
    os << buf;
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace nomad::svg
