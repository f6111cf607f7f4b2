#pragma once

#include "nomad/linalg.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nomad {

/// n points in d dimensions, one point per row, with optional ground-truth
/// manifold labels.
struct Dataset {
  Matrix points;
  std::optional<std::vector<int>> labels;
  std::string name;
  std::uint64_t seed = 0;

  Index n() const { return points.rows(); }
  Index dim() const { return points.cols(); }
};

namespace detail {

inline void check_size(Index n, const char* what) {
  if (n < 3) {
    throw std::invalid_argument(std::string(what) + ": need at least 3 points, got " +
                                std::to_string(n));
  }
}

inline std::vector<int> two_labels(Index n_each) {
  std::vector<int> labels(static_cast<std::size_t>(2 * n_each), 0);
  for (Index i = n_each; i < 2 * n_each; ++i) labels[static_cast<std::size_t>(i)] = 1;
  return labels;
}

constexpr double kPi = 3.14159265358979323846;

}  // namespace detail

/// n points equally spaced on a circle of the given radius, angles 2 pi i / n.
inline Dataset ring(Index n, double radius = 1.0) {
  detail::check_size(n, "ring");
  Dataset ds{Matrix(n, 2), std::vector<int>(static_cast<std::size_t>(n), 0), "ring", 0};
  for (Index i = 0; i < n; ++i) {
    const double a = 2.0 * detail::kPi * static_cast<double>(i) / static_cast<double>(n);
    ds.points(i, 0) = radius * std::cos(a);
    ds.points(i, 1) = radius * std::sin(a);
  }
  return ds;
}

/// Two concentric equally-spaced rings; label 0 for the first n_each points.
inline Dataset two_rings(Index n_each, double r1 = 1.0, double r2 = 3.0) {
  detail::check_size(2 * n_each, "two_rings");
  Dataset ds{Matrix(2 * n_each, 2), detail::two_labels(n_each), "two_rings", 0};
  for (Index i = 0; i < n_each; ++i) {
    const double a = 2.0 * detail::kPi * static_cast<double>(i) / static_cast<double>(n_each);
    ds.points(i, 0) = r1 * std::cos(a);
    ds.points(i, 1) = r1 * std::sin(a);
    ds.points(n_each + i, 0) = r2 * std::cos(a);
    ds.points(n_each + i, 1) = r2 * std::sin(a);
  }
  return ds;
}

/// Two interleaved half circles with isotropic Gaussian noise.
inline Dataset moons(Index n_each, double noise_std = 0.05, std::uint64_t seed = 0) {
  detail::check_size(2 * n_each, "moons");
  Dataset ds{Matrix(2 * n_each, 2), detail::two_labels(n_each), "moons", seed};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (Index i = 0; i < n_each; ++i) {
    const double t =
        detail::kPi * static_cast<double>(i) / static_cast<double>(std::max<Index>(n_each - 1, 1));
    ds.points(i, 0) = std::cos(t);
    ds.points(i, 1) = std::sin(t);
    ds.points(n_each + i, 0) = 1.0 - std::cos(t);
    ds.points(n_each + i, 1) = 0.5 - std::sin(t);
  }
  for (Index i = 0; i < ds.points.rows(); ++i) {
    for (Index j = 0; j < 2; ++j) ds.points(i, j) += noise_std * noise(rng);
  }
  return ds;
}

/// Two interleaved swiss rolls (t cos t, h, t sin t), t in [1.5 pi, 4.5 pi];
/// the second roll has its radius offset by `gap`.
inline Dataset double_swiss_roll(Index n_each, double gap = detail::kPi, double height = 10.0,
                                 std::uint64_t seed = 0) {
  detail::check_size(2 * n_each, "double_swiss_roll");
  Dataset ds{Matrix(2 * n_each, 3), detail::two_labels(n_each), "double_swiss_roll", seed};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (Index roll = 0; roll < 2; ++roll) {
    for (Index i = 0; i < n_each; ++i) {
      const double t = 1.5 * detail::kPi + 3.0 * detail::kPi * unit(rng);
      const double h = height * unit(rng);
      const double r = t + (roll == 1 ? gap : 0.0);
      const Index row = roll * n_each + i;
      ds.points(row, 0) = r * std::cos(t);
      ds.points(row, 1) = h;
      ds.points(row, 2) = r * std::sin(t);
    }
  }
  return ds;
}

/// Trefoil knot (sin t + 2 sin 2t, cos t - 2 cos 2t, -sin 3t), t equally spaced.
inline Dataset trefoil_knot(Index n) {
  detail::check_size(n, "trefoil_knot");
  Dataset ds{Matrix(n, 3), std::vector<int>(static_cast<std::size_t>(n), 0), "trefoil_knot", 0};
  for (Index i = 0; i < n; ++i) {
    const double t = 2.0 * detail::kPi * static_cast<double>(i) / static_cast<double>(n);
    ds.points(i, 0) = std::sin(t) + 2.0 * std::sin(2.0 * t);
    ds.points(i, 1) = std::cos(t) - 2.0 * std::cos(2.0 * t);
    ds.points(i, 2) = -std::sin(3.0 * t);
  }
  return ds;
}

/// side x side regular grid on [0, 1]^2 in the first two of ten dimensions;
/// dimensions 3..10 hold Gaussian noise.
inline Dataset grid2d_in_10d(Index side, double noise_std = 0.05, std::uint64_t seed = 0) {
  if (side < 2) throw std::invalid_argument("grid2d_in_10d: side must be >= 2");
  const Index n = side * side;
  Dataset ds{Matrix::Zero(n, 10), std::vector<int>(static_cast<std::size_t>(n), 0),
             "grid2d_in_10d", seed};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (Index a = 0; a < side; ++a) {
    for (Index b = 0; b < side; ++b) {
      const Index i = a * side + b;
      ds.points(i, 0) = static_cast<double>(a) / static_cast<double>(side - 1);
      ds.points(i, 1) = static_cast<double>(b) / static_cast<double>(side - 1);
      for (Index j = 2; j < 10; ++j) ds.points(i, j) = noise_std * noise(rng);
    }
  }
  return ds;
}

/// Isotropic Gaussian blobs; `centers` holds one center per row.
inline Dataset gaussian_blobs(Index n_each, const Matrix& centers, double std_dev = 1.0,
                              std::uint64_t seed = 0) {
  if (centers.rows() < 1 || centers.cols() < 1) {
    throw std::invalid_argument("gaussian_blobs: need at least one center");
  }
  const Index k = centers.rows();
  detail::check_size(n_each * k, "gaussian_blobs");
  Dataset ds{Matrix(n_each * k, centers.cols()), std::vector<int>(), "gaussian_blobs", seed};
  ds.labels->resize(static_cast<std::size_t>(n_each * k));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (Index c = 0; c < k; ++c) {
    for (Index i = 0; i < n_each; ++i) {
      const Index row = c * n_each + i;
      for (Index j = 0; j < centers.cols(); ++j) {
        ds.points(row, j) = centers(c, j) + std_dev * noise(rng);
      }
      (*ds.labels)[static_cast<std::size_t>(row)] = static_cast<int>(c);
    }
  }
  return ds;
}

/// Appends multiplier * d columns of N(0, noise_std^2) noise.
inline Dataset add_noise_dims(const Dataset& data, int multiplier, double noise_std,
                              std::uint64_t seed) {
  if (data.dim() < 1) throw std::invalid_argument("add_noise_dims: dataset has no dimensions");
  if (multiplier < 0) throw std::invalid_argument("add_noise_dims: multiplier must be >= 0");
  const Index d = data.dim();
  const Index extra = static_cast<Index>(multiplier) * d;
  Dataset out = data;
  out.points.conservativeResize(data.n(), d + extra);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (Index i = 0; i < data.n(); ++i) {
    for (Index j = d; j < d + extra; ++j) out.points(i, j) = noise_std * noise(rng);
  }
  out.seed = seed;
  return out;
}

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline double parse_cell(const std::string& raw, std::size_t row, std::size_t col) {
  std::size_t b = raw.find_first_not_of(" \t\r");
  std::size_t e = raw.find_last_not_of(" \t\r");
  const std::string cell = b == std::string::npos ? std::string() : raw.substr(b, e - b + 1);
  std::istringstream is(cell);
  is.imbue(std::locale::classic());
  double v = 0.0;
  if (cell.empty() || !(is >> v) || !is.eof() || !std::isfinite(v)) {
    throw std::invalid_argument("row " + std::to_string(row) + ", column " +
                                std::to_string(col + 1) + ": not a finite number: '" + cell + "'");
  }
  return v;
}

}  // namespace detail

/// Reads a rectangular numeric CSV (comma separated, '.' decimal). Lines
/// starting with '#' are headers and skipped. With `has_labels`, the final
/// column is read as integer labels. Errors name the offending row (1-based,
/// counting every line of the file).
inline Dataset load_csv(const std::filesystem::path& path, bool has_labels) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto cells = detail::split_commas(line);
    if (width == 0) {
      width = cells.size();
      if (width < (has_labels ? 2u : 1u)) {
        throw std::invalid_argument("load_csv: row " + std::to_string(line_no) +
                                    ": too few columns");
      }
    } else if (cells.size() != width) {
      throw std::invalid_argument("load_csv: row " + std::to_string(line_no) + ": expected " +
                                  std::to_string(width) + " columns, found " +
                                  std::to_string(cells.size()));
    }
    std::vector<double> values;
    const std::size_t n_coords = has_labels ? width - 1 : width;
    for (std::size_t c = 0; c < n_coords; ++c) {
      values.push_back(detail::parse_cell(cells[c], line_no, c));
    }
    if (has_labels) {
      const double lv = detail::parse_cell(cells[width - 1], line_no, width - 1);
      if (lv != std::floor(lv)) {
        throw std::invalid_argument("load_csv: row " + std::to_string(line_no) +
                                    ": label is not an integer");
      }
      labels.push_back(static_cast<int>(lv));
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw std::invalid_argument("load_csv: no data rows in " + path.string());
  Dataset ds;
  const Index d = static_cast<Index>(rows[0].size());
  ds.points.resize(static_cast<Index>(rows.size()), d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Index j = 0; j < d; ++j) ds.points(static_cast<Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
  }
  if (has_labels) ds.labels = std::move(labels);
  ds.name = path.stem().string();
  return ds;
}

/// Writes the dataset as CSV with a '#' header line; labels, when present,
/// form the last column. Values use 17 significant digits.
inline void save_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_csv: cannot open " + path.string());
  out << "# " << ds.name << " n=" << ds.n() << " d=" << ds.dim()
      << (ds.labels ? " labels=last" : "") << '\n';
  for (Index i = 0; i < ds.n(); ++i) {
    for (Index j = 0; j < ds.dim(); ++j) {
      if (j > 0) out << ',';
      out << detail::format_double(ds.points(i, j));
    }
    if (ds.labels) out << ',' << (*ds.labels)[static_cast<std::size_t>(i)];
    out << '\n';
  }
}

}  // namespace nomad
