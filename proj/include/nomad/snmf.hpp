#pragma once

#include "nomad/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace nomad {

struct SnmfConfig {
  int r = 1;
  double eta = 1.0;
  double sigma = 1.0;
  int max_iter = 2000;
  double tol = 1e-6;
  std::uint64_t seed = 0;

  void validate(Index n) const {
    if (r < 1 || r > n) {
      throw std::invalid_argument("SnmfConfig: r = " + std::to_string(r) + " outside [1, " +
                                  std::to_string(n) + "]");
    }
    if (!(eta > 0.0) || !(sigma > 0.0) || !(tol > 0.0) || max_iter < 1) {
      throw std::invalid_argument("SnmfConfig: eta, sigma, tol and max_iter must be positive");
    }
  }
};

struct SnmfResult {
  /// n x r, entrywise >= 0.
  Matrix Y;
  /// ||A - Y Y^T||_F / ||A||_F.
  double rel_error = 0.0;
  int iterations = 0;
  bool diverged = false;
};

/// ||A - Y Y^T||_F / ||A||_F (absolute error when A = 0).
inline double snmf_rel_error(const Matrix& a, const Matrix& y) {
  const double an = a.norm();
  const double err = (a - y * y.transpose()).norm();
  return an > 0.0 ? err / an : err;
}

/// Symmetric NMF A ~ Y Y^T, Y >= 0, by ADMM on the split Y = X:
///   L(X, Y, G) = 1/2 ||A - Y X^T||^2 + sigma/2 ||Y - X||^2 - <G, Y - X>.
/// Each block is solved unconstrained, then projected onto the orthant.
inline SnmfResult snmf(const SymMatrix& a_sym, const SnmfConfig& config) {
  const Matrix& a = a_sym.mat();
  const Index n = a.rows();
  config.validate(n);
  const Index r = config.r;
  const double sigma = config.sigma;

  std::mt19937_64 rng(config.seed);
  const double hi = std::sqrt(a.norm() / static_cast<double>(n * r));
  std::uniform_real_distribution<double> unif(0.0, hi > 0.0 ? hi : 1.0);
  Matrix x(n, r);
  for (Index j = 0; j < r; ++j) {
    for (Index i = 0; i < n; ++i) x(i, j) = unif(rng);
  }
  Matrix y = x;
  Matrix gam = Matrix::Zero(n, r);
  const Matrix sigma_eye = sigma * Matrix::Identity(r, r);

  SnmfResult out;
  out.Y = y;
  out.rel_error = snmf_rel_error(a, y);
  double best = out.rel_error;
  double prev = out.rel_error;
  for (int it = 1; it <= config.max_iter; ++it) {
    // X-step with Y fixed: X (Y^T Y + sigma I) = A Y + sigma Y - G
    {
      const Matrix lhs = y.transpose() * y + sigma_eye;
      const Matrix rhs = a * y + sigma * y - gam;
      x = lhs.llt().solve(rhs.transpose()).transpose();
      x = x.cwiseMax(0.0);
    }
    // Y-step with X fixed: Y (X^T X + sigma I) = A X + sigma X + G
    {
      const Matrix lhs = x.transpose() * x + sigma_eye;
      const Matrix rhs = a * x + sigma * x + gam;
      y = lhs.llt().solve(rhs.transpose()).transpose();
      y = y.cwiseMax(0.0);
    }
    gam -= config.eta * sigma * (y - x);

    const double err = snmf_rel_error(a, y);
    out.iterations = it;
    if (!std::isfinite(err) || err > 10.0 * std::max(best, 1e-300)) {
      out.diverged = true;
      warn("snmf: error grew tenfold over its minimum; returning best iterate");
      break;
    }
    if (err < best) {
      best = err;
      out.Y = y;
      out.rel_error = err;
    }
    if (std::abs(prev - err) <= config.tol * std::max(err, 1e-300)) break;
    prev = err;
  }
  return out;
}

struct CpRankRow {
  int r = 0;
  double mean = 0.0;
  double std = 0.0;
  double median = 0.0;
  std::vector<double> errors;
};

/// n_seeds SNMF runs per rank with seeds base_seed, base_seed + 1, ...
/// std is the population standard deviation.
inline std::vector<CpRankRow> cp_rank_sweep(const SymMatrix& q, const std::vector<int>& r_values,
                                            int n_seeds, SnmfConfig base = {}) {
  if (n_seeds < 1) throw std::invalid_argument("cp_rank_sweep: n_seeds must be >= 1");
  std::vector<CpRankRow> table;
  for (int r : r_values) {
    CpRankRow row;
    row.r = r;
    for (int s = 0; s < n_seeds; ++s) {
      SnmfConfig cfg = base;
      cfg.r = r;
      cfg.seed = base.seed + static_cast<std::uint64_t>(s);
      row.errors.push_back(snmf(q, cfg).rel_error);
    }
    double sum = 0.0;
    for (double e : row.errors) sum += e;
    row.mean = sum / static_cast<double>(n_seeds);
    double var = 0.0;
    for (double e : row.errors) var += (e - row.mean) * (e - row.mean);
    row.std = std::sqrt(var / static_cast<double>(n_seeds));
    std::vector<double> sorted = row.errors;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    row.median = m % 2 == 1 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    table.push_back(std::move(row));
  }
  return table;
}

}  // namespace nomad
