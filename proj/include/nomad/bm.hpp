#pragma once

#include "nomad/cgm.hpp"
#include "nomad/linalg.hpp"
#include "nomad/snmf.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace nomad {

struct BmConfig {
  int r = 1;
  double eta = 1.0;
  double sigma = 1.0;
  double varphi = 1.0;
  int max_outer = 200;
  int inner_max_iter = 500;
  /// Inner stop: infinity norm of the projected-gradient step.
  double inner_tol = 1e-7;
  /// Outer stop: max(||Y^T Y 1 - 1||_inf, |tr(Y^T Y) - K|).
  double feas_tol = 1e-5;
  std::uint64_t seed = 0;
  double box_upper = 1.0;
  int lbfgs_memory = 10;

  void validate(Index n) const {
    if (r < 1 || r > n) {
      throw std::invalid_argument("BmConfig: r = " + std::to_string(r) + " outside [1, " +
                                  std::to_string(n) + "]");
    }
    if (!(eta > 0.0) || !(sigma > 0.0) || !(varphi > 0.0) || !(box_upper > 0.0)) {
      throw std::invalid_argument("BmConfig: eta, sigma, varphi and box_upper must be > 0");
    }
    if (max_outer < 1 || inner_max_iter < 1 || lbfgs_memory < 1) {
      throw std::invalid_argument("BmConfig: iteration counts must be >= 1");
    }
    if (!(inner_tol > 0.0) || !(feas_tol > 0.0)) {
      throw std::invalid_argument("BmConfig: tolerances must be > 0");
    }
  }
};

struct BmState {
  /// r x n, entries in [0, box_upper].
  Matrix Y;
  Vector mu;
  double lambda = 0.0;
};

struct BmValue {
  double value = 0.0;
  Matrix grad;
};

/// Augmented Lagrangian in the factor Y (r x n), with Q = Y^T Y,
///   u = Q 1 - 1, s = tr Q - K:
///   L = -tr(D Q) + sigma/2 |u|^2 - mu^T u + varphi/2 s^2 - lambda s.
/// Gradient: -2 Y D + w c^T + (Y c) 1^T + 2 (varphi s - lambda) Y,
/// where w = Y 1 and c = sigma u - mu.
inline BmValue bm_lagrangian(const Matrix& y, const Vector& mu, double lambda, const Matrix& d,
                             double sigma, double varphi, double k) {
  const Index n = d.rows();
  if (d.cols() != n || y.cols() != n || mu.size() != n) {
    throw std::invalid_argument("bm_lagrangian: shape mismatch");
  }
  const Matrix yd = y * d;
  const Vector w = y.rowwise().sum();
  const Vector u = y.transpose() * w - Vector::Ones(n);
  const double s = y.squaredNorm() - k;
  const Vector c = sigma * u - mu;
  BmValue out;
  out.value = -yd.cwiseProduct(y).sum() + 0.5 * sigma * u.squaredNorm() - mu.dot(u) +
              0.5 * varphi * s * s - lambda * s;
  out.grad = -2.0 * yd + w * c.transpose();
  out.grad.colwise() += y * c;
  out.grad += 2.0 * (varphi * s - lambda) * y;
  return out;
}

struct BmReport {
  Matrix Y;
  SymMatrix Q;
  /// tr(D Q) with the caller's (unnormalized) D.
  double objective = 0.0;
  double row_residual = 0.0;
  double trace_residual = 0.0;
  std::vector<double> lagrangian_trace;
  std::vector<double> residual_trace;
  int outer_iters = 0;
  bool converged = false;
  bool stagnated = false;
  double seconds = 0.0;
};

namespace detail {

inline Matrix box_project(Matrix y, double hi) { return y.cwiseMax(0.0).cwiseMin(hi); }

/// Projected L-BFGS on a box. Directions come from the two-loop recursion
/// restricted to the free variables (not pinned at a bound by the gradient);
/// every line-search trial is projected. Falls back to the projected gradient
/// when the quasi-Newton direction is not a descent direction.
template <class F>
int projected_lbfgs(Matrix& y, F&& f, double hi, int max_iter, double tol, int memory) {
  BmValue cur = f(y);
  std::deque<Matrix> s_hist;
  std::deque<Matrix> y_hist;
  std::deque<double> rho_hist;
  int it = 0;
  for (; it < max_iter; ++it) {
    const Matrix pg = box_project(y - cur.grad, hi) - y;
    if (pg.cwiseAbs().maxCoeff() <= tol) break;

    Matrix free = Matrix::Ones(y.rows(), y.cols());
    for (Index j = 0; j < y.cols(); ++j) {
      for (Index i = 0; i < y.rows(); ++i) {
        if ((y(i, j) <= 0.0 && cur.grad(i, j) > 0.0) || (y(i, j) >= hi && cur.grad(i, j) < 0.0)) {
          free(i, j) = 0.0;
        }
      }
    }
    Matrix q = cur.grad.cwiseProduct(free);
    const std::size_t m = s_hist.size();
    std::vector<double> alpha(m);
    for (std::size_t k = m; k-- > 0;) {
      alpha[k] = rho_hist[k] * s_hist[k].cwiseProduct(q).sum();
      q -= alpha[k] * y_hist[k].cwiseProduct(free);
    }
    if (m > 0) {
      const double gamma_k = s_hist.back().cwiseProduct(y_hist.back()).sum() /
                             y_hist.back().squaredNorm();
      q *= gamma_k;
    }
    for (std::size_t k = 0; k < m; ++k) {
      const double beta = rho_hist[k] * y_hist[k].cwiseProduct(q).sum();
      q += (alpha[k] - beta) * s_hist[k].cwiseProduct(free);
    }
    Matrix dir = -q.cwiseProduct(free);
    double slope = cur.grad.cwiseProduct(dir).sum();
    bool quasi_newton = m > 0;
    if (!(slope < 0.0)) {
      dir = pg;
      slope = cur.grad.cwiseProduct(dir).sum();
      quasi_newton = false;
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }
    if (!quasi_newton && m == 0) {
      // first step: scale the projected gradient to a unit-ish move
      const double gn = dir.cwiseAbs().maxCoeff();
      if (gn > 1.0) dir /= gn;
      slope = cur.grad.cwiseProduct(dir).sum();
    }

    double step = 1.0;
    Matrix y_new;
    BmValue next;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      y_new = box_project(y + step * dir, hi);
      next = f(y_new);
      const double decrease = cur.grad.cwiseProduct(y_new - y).sum();
      if (next.value <= cur.value + 1e-4 * std::min(decrease, 0.0) && next.value <= cur.value) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (quasi_newton) {
        s_hist.clear();
        y_hist.clear();
        rho_hist.clear();
        continue;
      }
      break;
    }
    const Matrix sk = y_new - y;
    const Matrix yk = next.grad - cur.grad;
    const double sy = sk.cwiseProduct(yk).sum();
    if (sy > 1e-12 * sk.norm() * yk.norm()) {
      s_hist.push_back(sk);
      y_hist.push_back(yk);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    y = std::move(y_new);
    cur = std::move(next);
  }
  return it;
}

}  // namespace detail

/// SNMF of [D]_+ / ||[D]_+||_F at rank r, transposed to r x n, balanced so
/// that Y^T Y 1 = 1 and clipped to the box.
inline Matrix bm_initial_factor(const SymMatrix& d, const BmConfig& config) {
  Matrix dp = d.mat().cwiseMax(0.0);
  const double nrm = dp.norm();
  const Index n = d.n();
  Matrix y;
  if (nrm > 0.0) {
    dp /= nrm;
    SnmfConfig sc;
    sc.r = config.r;
    sc.seed = config.seed;
    sc.max_iter = 500;
    sc.tol = 1e-5;
    y = snmf(SymMatrix(std::move(dp)), sc).Y.transpose();
  } else {
    y = Matrix::Constant(config.r, n, 1.0);
  }
  // symmetric Sinkhorn balancing: scale column i of Y by c_i so that
  // Y^T Y has unit row sums; an unbalanced start lets the first inner solve
  // fall to the stationary point Y = 0
  const double floor = 1e-12 * std::max(1.0, y.cwiseAbs().maxCoeff());
  for (Index i = 0; i < n; ++i) {
    if (y.col(i).sum() <= floor) y.col(i).setConstant(std::sqrt(1.0 / static_cast<double>(n * config.r)));
  }
  Vector c = Vector::Ones(n);
  for (int it = 0; it < 100; ++it) {
    const Vector qc = y.transpose() * (y * c);
    const Vector next = (c.array() / qc.array()).sqrt();
    const double change = (next - c).cwiseAbs().maxCoeff() / next.cwiseAbs().maxCoeff();
    c = next;
    if (change < 1e-10) break;
  }
  y = y * c.asDiagonal();
  return detail::box_project(std::move(y), config.box_upper);
}

/// Burer-Monteiro heuristic for NOMAD: Q = Y^T Y with Y >= 0 of rank r,
/// alternating box-constrained minimization of the augmented Lagrangian
/// with multiplier steps mu <- mu - eta sigma u, lambda <- lambda - eta varphi s.
inline BmReport solve_nomad_bm(const SdpProblem& problem, const BmConfig& config,
                               const Matrix* y_init = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  const Index n = problem.n();
  config.validate(n);
  const double k = problem.K;
  const double dn = problem.D.mat().norm();
  const Matrix d = dn > 0.0 ? Matrix(problem.D.mat() / dn) : problem.D.mat();

  BmState st;
  if (y_init != nullptr) {
    if (y_init->rows() != config.r || y_init->cols() != n) {
      throw std::invalid_argument("solve_nomad_bm: initial factor must be r x n");
    }
    st.Y = detail::box_project(*y_init, config.box_upper);
  } else {
    st.Y = bm_initial_factor(problem.D, config);
  }
  st.mu = Vector::Zero(n);
  st.lambda = 0.0;

  BmReport rep{Matrix(), SymMatrix::zeros(n), 0.0, 0.0, 0.0, {}, {}, 0, false, false, 0.0};
  auto residuals = [&](const Matrix& y, Vector& u, double& s) {
    u = y.transpose() * y.rowwise().sum() - Vector::Ones(n);
    s = y.squaredNorm() - k;
  };

  double best_l = std::numeric_limits<double>::infinity();
  int no_improve = 0;
  Matrix best_y = st.Y;
  double best_res = std::numeric_limits<double>::infinity();
  for (int outer = 0; outer < config.max_outer; ++outer) {
    auto f = [&](const Matrix& y) {
      return bm_lagrangian(y, st.mu, st.lambda, d, config.sigma, config.varphi, k);
    };
    detail::projected_lbfgs(st.Y, f, config.box_upper, config.inner_max_iter, config.inner_tol,
                            config.lbfgs_memory);
    Vector u;
    double s = 0.0;
    residuals(st.Y, u, s);
    const double lval = f(st.Y).value;
    const double res = std::max(u.cwiseAbs().maxCoeff(), std::abs(s));
    rep.lagrangian_trace.push_back(lval);
    rep.residual_trace.push_back(res);
    rep.outer_iters = outer + 1;
    const bool res_improved = res < 0.99 * best_res;
    const bool l_decreased = lval < best_l - 1e-12 * std::max(1.0, std::abs(best_l));
    if (res <= best_res) {
      best_res = res;
      best_y = st.Y;
    }
    best_l = std::min(best_l, lval);
    if (res <= config.feas_tol) {
      rep.converged = true;
      best_y = st.Y;
      break;
    }
    // the multiplier steps raise L at the inner minimizer as the method
    // works, so stagnation also requires the residual to have stalled
    if (res_improved || l_decreased) {
      no_improve = 0;
    } else if (++no_improve >= 3) {
      rep.stagnated = true;
      break;
    }
    st.mu -= config.eta * config.sigma * u;
    st.lambda -= config.eta * config.varphi * s;
  }

  rep.Y = best_y;
  Vector u;
  double s = 0.0;
  residuals(rep.Y, u, s);
  rep.row_residual = u.cwiseAbs().maxCoeff();
  rep.trace_residual = std::abs(s);
  rep.Q = SymMatrix(rep.Y.transpose() * rep.Y);
  rep.objective = trace_product(problem.D.mat(), rep.Q.mat());
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace nomad
