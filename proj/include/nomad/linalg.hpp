#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <iostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace nomad {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Receives non-fatal diagnostics (asymmetric input, eigensolver trouble).
/// Defaults to stderr; tests and the CLI may redirect it.
inline std::function<void(std::string_view)>& warning_sink() {
  static std::function<void(std::string_view)> sink = [](std::string_view msg) {
    std::cerr << "nomad: warning: " << msg << '\n';
  };
  return sink;
}

inline void warn(const std::string& msg) {
  if (warning_sink()) warning_sink()(msg);
}

/// Dense real symmetric matrix. Symmetry is exact: the constructor stores
/// (M + M^T) / 2 and warns when the input was visibly asymmetric.
class SymMatrix {
 public:
  explicit SymMatrix(Matrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) {
      throw std::invalid_argument("SymMatrix: matrix is " + std::to_string(m_.rows()) + "x" +
                                  std::to_string(m_.cols()) + ", expected square");
    }
    if (m_.rows() < 1) throw std::invalid_argument("SymMatrix: dimension must be >= 1");
    for (Index j = 0; j < m_.cols(); ++j) {
      for (Index i = 0; i < m_.rows(); ++i) {
        if (!std::isfinite(m_(i, j))) {
          throw std::invalid_argument("SymMatrix: non-finite entry at (" + std::to_string(i) +
                                      "," + std::to_string(j) + ")");
        }
      }
    }
    const double scale = m_.norm();
    double asym = 0.0;
    for (Index j = 0; j < m_.cols(); ++j) {
      for (Index i = j + 1; i < m_.rows(); ++i) {
        asym = std::max(asym, std::abs(m_(i, j) - m_(j, i)));
        const double avg = 0.5 * (m_(i, j) + m_(j, i));
        m_(i, j) = avg;
        m_(j, i) = avg;
      }
    }
    if (asym > 1e-8 * std::max(scale, 1e-300)) {
      std::ostringstream os;
      os << "SymMatrix: input asymmetry " << asym << " exceeds 1e-8 relative; symmetrized";
      warn(os.str());
    }
  }

  static SymMatrix identity(Index n) { return SymMatrix(Matrix::Identity(n, n)); }
  /// E_n = (1/n) 1 1^T.
  static SymMatrix ones_over_n(Index n) {
    return SymMatrix(Matrix::Constant(n, n, 1.0 / static_cast<double>(n)));
  }
  static SymMatrix zeros(Index n) { return SymMatrix(Matrix::Zero(n, n)); }

  Index n() const { return m_.rows(); }
  const Matrix& mat() const { return m_; }
  double operator()(Index i, Index j) const { return m_(i, j); }

 private:
  Matrix m_;
};

struct EigPair {
  double value = 0.0;
  Vector vector;
  /// Measured ||A v - value v||_2.
  double residual = 0.0;
  bool converged = false;
  int iterations = 0;
};

enum class Extreme { largest, smallest };

struct LanczosOptions {
  /// Residual target relative to `norm_scale`, or to the largest Ritz value
  /// magnitude when `norm_scale` is zero.
  double tol = 1e-8;
  int max_iter = 300;
  int min_iter = 1;
  std::uint64_t seed = 0;
  double norm_scale = 0.0;
  /// Optional unit vector; every Krylov vector is kept orthogonal to it, so
  /// the returned eigenvector satisfies v^T b = 0.
  const Vector* deflate = nullptr;
};

namespace detail {

inline void check_finite_points(const Matrix& points) {
  if (points.rows() < 1 || points.cols() < 1) {
    throw std::invalid_argument("points must be a non-empty n x d array");
  }
  for (Index i = 0; i < points.rows(); ++i) {
    for (Index j = 0; j < points.cols(); ++j) {
      if (!std::isfinite(points(i, j))) {
        throw std::invalid_argument("non-finite coordinate at point " + std::to_string(i) +
                                    ", dimension " + std::to_string(j));
      }
    }
  }
}

inline void orthogonalize(Vector& w, const Vector* b) {
  if (b != nullptr) w -= b->dot(w) * (*b);
}

}  // namespace detail

/// Gramian of the rows of `points` (one point per row): D_ij = x_i^T x_j.
inline SymMatrix gramian(const Matrix& points) {
  detail::check_finite_points(points);
  Matrix d = points * points.transpose();
  return SymMatrix(std::move(d));
}

/// M_ij = -1/2 ||x_i - x_j||^2, assembled from the Gramian.
inline SymMatrix neg_half_sqdist(const Matrix& points) {
  detail::check_finite_points(points);
  Matrix d = points * points.transpose();
  const Vector sq = d.diagonal();
  const Index n = d.rows();
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) d(i, j) -= 0.5 * (sq(i) + sq(j));
  }
  return SymMatrix(std::move(d));
}

/// In-place (I - E_n) M (I - E_n) via row/column means.
inline void project_out_ones_inplace(Matrix& m) {
  const Index n = m.rows();
  const Vector col_mean = m.colwise().mean().transpose();
  const Vector row_mean = m.rowwise().mean();
  const double total = col_mean.mean();
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) m(i, j) += total - row_mean(i) - col_mean(j);
  }
}

inline SymMatrix project_out_ones(const SymMatrix& m) {
  Matrix out = m.mat();
  project_out_ones_inplace(out);
  return SymMatrix(std::move(out));
}

/// Extreme algebraic eigenpair of a symmetric operator by Lanczos with full
/// reorthogonalization. `op` maps a Vector to a Vector. The smallest end is
/// obtained by running on -op. One restart from the best Ritz vector is made
/// when the subspace budget is exhausted.
template <class Op>
EigPair lanczos_extreme(const Op& op, Index n, Extreme which, const LanczosOptions& opt) {
  if (n < 1) throw std::invalid_argument("lanczos_extreme: n must be >= 1");
  if (!(opt.tol > 0.0)) throw std::invalid_argument("lanczos_extreme: tol must be > 0");
  const Vector* b = opt.deflate;
  const Index n_eff = n - (b != nullptr ? 1 : 0);
  if (n_eff < 1) throw std::invalid_argument("lanczos_extreme: deflated space is empty");
  const double sign = which == Extreme::largest ? 1.0 : -1.0;
  auto apply = [&](const Vector& x) -> Vector {
    Vector y = op(x);
    y *= sign;
    detail::orthogonalize(y, b);
    return y;
  };

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector start(n);
  for (Index i = 0; i < n; ++i) start(i) = normal(rng);
  detail::orthogonalize(start, b);
  if (start.norm() == 0.0) {
    start.setOnes();
    start(0) = 2.0;
    detail::orthogonalize(start, b);
  }
  start.normalize();

  const Index max_dim = std::min<Index>(n_eff, std::max(opt.max_iter, 1));
  EigPair best;
  best.residual = std::numeric_limits<double>::infinity();
  int total_iters = 0;

  for (int attempt = 0; attempt < 2; ++attempt) {
    Matrix basis(n, max_dim);
    std::vector<double> alpha;
    std::vector<double> beta;
    basis.col(0) = start;
    Vector ritz_vec;
    double ritz_val = 0.0;
    bool have_ritz = false;
    double anorm = 0.0;
    for (Index j = 0; j < max_dim; ++j) {
      ++total_iters;
      Vector w = apply(basis.col(j));
      const double a = basis.col(j).dot(w);
      alpha.push_back(a);
      // two passes of classical Gram-Schmidt against the whole basis
      for (int pass = 0; pass < 2; ++pass) {
        w -= basis.leftCols(j + 1) * (basis.leftCols(j + 1).transpose() * w);
        detail::orthogonalize(w, b);
      }
      const double bn = w.norm();
      anorm = std::max(anorm, std::abs(a) + bn);
      const bool breakdown = bn <= 1e-13 * anorm;
      const bool last = breakdown || j + 1 == max_dim;
      // the Ritz check is O(m^2); sample it once the subspace grows
      if (!last && j + 1 > 24 && (j + 1) % 8 != 0) {
        beta.push_back(bn);
        basis.col(j + 1) = w / bn;
        continue;
      }

      const Index m = static_cast<Index>(alpha.size());
      Eigen::SelfAdjointEigenSolver<Matrix> tri;
      Vector diag = Eigen::Map<const Vector>(alpha.data(), m);
      Vector sub = m > 1 ? Vector(Eigen::Map<const Vector>(beta.data(), m - 1)) : Vector();
      tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
      const double theta = tri.eigenvalues()(m - 1);
      const Vector s = tri.eigenvectors().col(m - 1);
      const double est = bn * std::abs(s(m - 1));
      const double scale =
          opt.norm_scale > 0.0 ? opt.norm_scale : std::max(tri.eigenvalues().cwiseAbs().maxCoeff(), 1e-300);
      const double target = opt.tol * scale;

      if ((est <= target && j + 1 >= opt.min_iter) || last) {
        ritz_vec = basis.leftCols(m) * s;
        ritz_vec.normalize();
        ritz_val = theta;
        have_ritz = true;
        const Vector r = apply(ritz_vec) - ritz_val * ritz_vec;
        const double res = r.norm();
        if (res < best.residual) {
          best.value = sign * ritz_val;
          best.vector = ritz_vec;
          best.residual = res;
        }
        if (res <= target) {
          best.converged = true;
          best.iterations = total_iters;
          return best;
        }
        if (last) break;
      }
      if (j + 1 < max_dim) {
        beta.push_back(bn);
        basis.col(j + 1) = w / bn;
      }
    }
    if (!have_ritz) break;
    start = best.vector;
  }
  best.iterations = total_iters;
  return best;
}

/// Dense-matrix convenience overload.
inline EigPair lanczos_extreme(const Matrix& a, Extreme which, const LanczosOptions& opt) {
  return lanczos_extreme([&a](const Vector& x) -> Vector { return a * x; }, a.rows(), which, opt);
}

/// Smallest algebraic eigenvalue, used for PSD diagnostics. Runs Lanczos to the
/// full dimension if needed, so it is exact up to rounding for small n.
inline double min_eigenvalue(const SymMatrix& m, double tol = 1e-10) {
  LanczosOptions opt;
  opt.tol = tol;
  opt.max_iter = static_cast<int>(std::min<Index>(m.n(), 600));
  opt.seed = 7;
  const EigPair p = lanczos_extreme(m.mat(), Extreme::smallest, opt);
  if (!p.converged) {
    warn("min_eigenvalue: Lanczos did not reach the residual target (residual " +
         std::to_string(p.residual) + ")");
  }
  return p.value;
}

/// tr(A B) for symmetric A, B.
inline double trace_product(const Matrix& a, const Matrix& b) { return a.cwiseProduct(b).sum(); }

}  // namespace nomad
