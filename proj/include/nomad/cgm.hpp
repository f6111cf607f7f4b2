#pragma once

#include "nomad/linalg.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace nomad {

/// max tr(D Q) s.t. Q 1 = 1, tr Q = K, Q psd, Q >= 0.
struct SdpProblem {
  SymMatrix D;
  double K;

  SdpProblem(SymMatrix d, double k) : D(std::move(d)), K(k) {
    const auto n = static_cast<double>(D.n());
    if (!(K >= 1.0) || !(K <= n)) {
      throw std::invalid_argument("SdpProblem: K = " + std::to_string(K) +
                                  " outside [1, n] with n = " + std::to_string(D.n()));
    }
  }

  Index n() const { return D.n(); }
};

/// How the inner step size counter advances.
///  listing: alpha = 2 / (t + t_inner + 2), t the outer index, t_inner the
///           inner index, both zero-based.
///  global:  alpha = 2 / (k + 2), k counting every inner step of the solve.
enum class StepRule { listing, global };

struct CgmConfig {
  double gamma = 1.0;
  double tau = 1.0;
  int n_inner = 10;
  int max_outer = 5000;
  double tol_neg = 1e-4;
  double tol_obj = 1e-6;
  /// Inner-problem duality gap threshold, relative to |g|.
  double tol_gap = 1e-3;
  std::uint64_t eig_seed = 0;
  StepRule step_rule = StepRule::listing;
  int eig_max_iter = 200;
  /// Outer iterations between duality-gap evaluations (each costs one
  /// eigensolve). The gap trace repeats the last value in between.
  int gap_every = 1;
  /// Rescale D internally to ||D||_F = d_scale * n. The maximizer is
  /// unchanged; the scale fixes how strongly gamma and tau act relative to
  /// the objective. Reported objectives and gaps use the caller's D.
  bool normalize_d = true;
  double d_scale = 0.25;

  void validate() const {
    if (!(gamma > 0.0)) throw std::invalid_argument("CgmConfig: gamma must be > 0");
    if (!(tau > 0.0)) throw std::invalid_argument("CgmConfig: tau must be > 0");
    if (n_inner < 1) throw std::invalid_argument("CgmConfig: n_inner must be >= 1");
    if (max_outer < 1) throw std::invalid_argument("CgmConfig: max_outer must be >= 1");
    if (!(tol_neg > 0.0) || !(tol_obj > 0.0) || !(tol_gap > 0.0)) {
      throw std::invalid_argument("CgmConfig: tolerances must be > 0");
    }
    if (eig_max_iter < 1) throw std::invalid_argument("CgmConfig: eig_max_iter must be >= 1");
    if (gap_every < 1) throw std::invalid_argument("CgmConfig: gap_every must be >= 1");
    if (!(d_scale > 0.0)) throw std::invalid_argument("CgmConfig: d_scale must be > 0");
  }
};

/// Shifted variable P = Q - E_n and the multiplier of Q >= 0.
struct CgmState {
  Matrix P;
  Matrix Gamma;
  long t = 0;
  long steps = 0;
};

struct SolveReport {
  SymMatrix Q;
  std::vector<double> objective_trace;
  std::vector<double> neg_rmse_trace;
  std::vector<double> gap_trace;
  int outer_iters = 0;
  bool converged = false;
  int eig_unconverged = 0;
  double seconds = 0.0;
};

enum class Sense { maximize, minimize };

/// [x]_- = min(x, 0) entrywise.
inline Matrix negative_part(const Matrix& m) { return m.cwiseMin(0.0); }

/// Root mean square of the strictly negative entries of Q (0 when none).
inline double negative_rmse(const Matrix& q) {
  double sum = 0.0;
  long count = 0;
  for (Index j = 0; j < q.cols(); ++j) {
    for (Index i = 0; i < q.rows(); ++i) {
      if (q(i, j) < 0.0) {
        sum += q(i, j) * q(i, j);
        ++count;
      }
    }
  }
  return count == 0 ? 0.0 : std::sqrt(sum / static_cast<double>(count));
}

namespace detail {

inline void grad_g_into(const Matrix& p, const Matrix& gamma_mult, const Matrix& d, double gamma,
                        Matrix& out) {
  const Index n = p.rows();
  const double e = 1.0 / static_cast<double>(n);
  out.resize(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      out(i, j) = -d(i, j) + gamma_mult(i, j) + gamma * std::min(p(i, j) + e, 0.0);
    }
  }
}

/// Z <- (1 - alpha) Z + alpha s v v^T, keeping Z exactly symmetric.
inline void convex_rank_one_update(Matrix& z, double alpha, double s, const Vector& v) {
  const Index n = z.rows();
  const double keep = 1.0 - alpha;
  const double w = alpha * s;
  for (Index j = 0; j < n; ++j) {
    const double vj = v(j);
    for (Index i = 0; i < n; ++i) z(i, j) = keep * z(i, j) + w * (v(i) * vj);
  }
}

/// Eigenpair of (I - b b^T) G (I - b b^T) restricted to b-orthogonal vectors.
inline EigPair deflated_extreme(const Matrix& g, const Vector& b_unit, Extreme which,
                                LanczosOptions opt) {
  opt.deflate = &b_unit;
  auto op = [&](const Vector& x) -> Vector {
    Vector xp = x - b_unit.dot(x) * b_unit;
    Vector y = g * xp;
    y -= b_unit.dot(y) * b_unit;
    return y;
  };
  return lanczos_extreme(op, g.rows(), which, opt);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t k) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (k + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Gradient of the augmented Lagrangian
///   g(P, Gamma) = -tr(D P) + tr(Gamma (P + E_n)) + gamma/2 ||[P + E_n]_-||_F^2
/// with respect to P: -D + Gamma + gamma [P + E_n]_-.
inline SymMatrix grad_g(const SymMatrix& p, const SymMatrix& gamma_mult, const SymMatrix& d,
                        double gamma) {
  if (p.n() != d.n() || gamma_mult.n() != d.n()) {
    throw std::invalid_argument("grad_g: shape mismatch");
  }
  Matrix out;
  detail::grad_g_into(p.mat(), gamma_mult.mat(), d.mat(), gamma, out);
  return SymMatrix(std::move(out));
}

/// Value of the augmented Lagrangian g(P, Gamma).
inline double augmented_lagrangian(const Matrix& p, const Matrix& gamma_mult, const Matrix& d,
                                   double gamma) {
  const Index n = p.rows();
  const double e = 1.0 / static_cast<double>(n);
  double val = 0.0;
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      const double q = p(i, j) + e;
      const double qm = std::min(q, 0.0);
      val += -d(i, j) * p(i, j) + gamma_mult(i, j) * q + 0.5 * gamma * qm * qm;
    }
  }
  return val;
}

/// Conditional-gradient state for max/min f(Z) over {Z psd, tr Z = s, Z b = 0}.
struct ConditionalGradientState {
  Matrix Z;
  long t = 0;
};

struct GenericStepInfo {
  EigPair atom;
  double alpha = 0.0;
};

/// One step of the conditional-gradient method with an orthogonality
/// constraint: pick the extreme algebraic eigenvector v of the b-deflated
/// gradient (largest when maximizing, smallest when minimizing), then
/// Z <- (1 - alpha) Z + alpha s v v^T with alpha = 2 / (t + 2).
template <class GradOracle>
GenericStepInfo cgm_generic_step(ConditionalGradientState& state, GradOracle&& grad, double s,
                                 const Vector& b, Sense sense, LanczosOptions eig = {}) {
  const double bn = b.norm();
  if (!(bn > 0.0)) throw std::invalid_argument("cgm_generic_step: b must be nonzero");
  if (!(s >= 0.0)) throw std::invalid_argument("cgm_generic_step: s must be >= 0");
  const Vector b_unit = b / bn;
  const Index n = b.size();
  if (state.Z.size() == 0) state.Z = Matrix::Zero(n, n);
  const Matrix g = grad(static_cast<const Matrix&>(state.Z));
  eig.seed = detail::mix_seed(eig.seed, static_cast<std::uint64_t>(state.t));
  GenericStepInfo info;
  info.atom = detail::deflated_extreme(
      g, b_unit, sense == Sense::maximize ? Extreme::largest : Extreme::smallest, eig);
  info.alpha = 2.0 / (static_cast<double>(state.t) + 2.0);
  detail::convex_rank_one_update(state.Z, info.alpha, s, info.atom.vector);
  ++state.t;
  return info;
}

struct DualityGap {
  /// w(Z) - f(Z); nonnegative up to `uncertainty`.
  double gap = 0.0;
  /// w(Z), an upper bound on the optimum when maximizing (lower bound when
  /// minimizing).
  double dual_value = 0.0;
  /// s * eigen-residual: bound on the error of the Rayleigh quotient used.
  double uncertainty = 0.0;
  bool eig_converged = true;
};

/// Duality gap of the conditional-gradient subproblem. For maximization,
///   w(Z) = s phi(Z) + f(Z) - tr(Z grad f(Z)),
///   phi(Z) = max_{|v| = 1, v^T b = 0} v^T grad f(Z) v.
/// Minimization is handled as maximization of -f.
inline DualityGap duality_gap(const Matrix& z, double f_value, const Matrix& grad, double s,
                              const Vector& b, Sense sense, std::uint64_t eig_seed,
                              double eig_tol = 1e-8, int eig_max_iter = 300) {
  const Vector b_unit = b / b.norm();
  LanczosOptions opt;
  opt.tol = eig_tol;
  opt.max_iter = eig_max_iter;
  opt.seed = eig_seed;
  opt.norm_scale = grad.norm();
  if (opt.norm_scale == 0.0) opt.norm_scale = 1.0;
  DualityGap out;
  const double tr_zg = trace_product(z, grad);
  if (s == 0.0) {
    out.gap = sense == Sense::maximize ? -tr_zg : tr_zg;
    out.dual_value = f_value + (sense == Sense::maximize ? out.gap : -out.gap);
    return out;
  }
  const EigPair p = detail::deflated_extreme(
      grad, b_unit, sense == Sense::maximize ? Extreme::largest : Extreme::smallest, opt);
  out.eig_converged = p.converged;
  out.uncertainty = s * p.residual;
  if (sense == Sense::maximize) {
    out.dual_value = s * p.value + f_value - tr_zg;
    out.gap = out.dual_value - f_value;
  } else {
    // max of -f: w = s (-lambda_min) - f + tr(Z grad f)
    out.gap = tr_zg - s * p.value;
    out.dual_value = f_value - out.gap;
  }
  return out;
}

/// Method-of-multipliers NOMAD solver with conditional-gradient inner steps.
/// Works on P = Q - E_n, which stays psd with P 1 = 0 and tr P = K - 1 after
/// the first inner step; Q >= 0 is handled by the multiplier Gamma <= 0.
class CgmSolver {
 public:
  CgmSolver(const SdpProblem& problem, CgmConfig config)
      : problem_(problem), config_(config) {
    config_.validate();
    const Index n = problem_.n();
    state_.P = Matrix::Zero(n, n);
    state_.Gamma = Matrix::Zero(n, n);
    ones_unit_ = Vector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
    const double dn = problem_.D.mat().norm();
    if (config_.normalize_d && dn > 0.0) {
      scale_ = config_.d_scale * static_cast<double>(n) / dn;
    }
    d_ = problem_.D.mat() * scale_;
  }

  const CgmState& state() const { return state_; }
  const SdpProblem& problem() const { return problem_; }
  int eig_unconverged() const { return eig_unconverged_; }
  /// Factor applied to D inside the solver.
  double d_scale_factor() const { return scale_; }

  /// Residual target for the eigensolver after k conditional-gradient steps,
  /// relative to the gradient Frobenius norm.
  static double eig_tolerance(long k) {
    return std::max(std::min(0.1, 1.0 / static_cast<double>(k + 1)), 1e-10);
  }

  /// One inner conditional-gradient step on g(., Gamma) at inner index t_inner.
  void inner_step(int t_inner) {
    const Matrix& d = d_;
    const double s = problem_.K - 1.0;
    double alpha = 0.0;
    if (config_.step_rule == StepRule::global) {
      alpha = 2.0 / (static_cast<double>(state_.steps) + 2.0);
    } else {
      alpha = 2.0 / (static_cast<double>(state_.t + t_inner) + 2.0);
    }
    if (s == 0.0) {
      state_.P *= (1.0 - alpha);
      ++state_.steps;
      return;
    }
    detail::grad_g_into(state_.P, state_.Gamma, d, config_.gamma, grad_);
    LanczosOptions opt;
    opt.tol = eig_tolerance(state_.steps);
    opt.max_iter = config_.eig_max_iter;
    opt.seed = detail::mix_seed(config_.eig_seed, static_cast<std::uint64_t>(state_.steps));
    opt.norm_scale = std::max(grad_.norm(), 1e-300);
    const EigPair v = detail::deflated_extreme(grad_, ones_unit_, Extreme::smallest, opt);
    if (!v.converged) ++eig_unconverged_;
    detail::convex_rank_one_update(state_.P, alpha, s, v.vector);
    ++state_.steps;
  }

  /// Duality gap of the current inner problem min_P g(P, Gamma), in the
  /// solver's internal scaling of D.
  DualityGap inner_gap() const {
    const double s = problem_.K - 1.0;
    Matrix g;
    detail::grad_g_into(state_.P, state_.Gamma, d_, config_.gamma, g);
    const double f = augmented_lagrangian(state_.P, state_.Gamma, d_, config_.gamma);
    return duality_gap(state_.P, f, g, s, ones_unit_, Sense::minimize,
                       detail::mix_seed(config_.eig_seed ^ 0xA5A5A5A5ULL,
                                        static_cast<std::uint64_t>(state_.t)),
                       1e-6, config_.eig_max_iter);
  }

  /// Gamma <- [Gamma + tau (P + E_n)]_-
  void update_multiplier() {
    const Index n = problem_.n();
    const double e = 1.0 / static_cast<double>(n);
    for (Index j = 0; j < n; ++j) {
      for (Index i = 0; i < n; ++i) {
        state_.Gamma(i, j) = std::min(state_.Gamma(i, j) + config_.tau * (state_.P(i, j) + e), 0.0);
      }
    }
  }

  /// One outer iteration: n_inner conditional-gradient steps then the
  /// multiplier update.
  void outer_step() {
    for (int ti = 0; ti < config_.n_inner; ++ti) inner_step(ti);
    update_multiplier();
    ++state_.t;
  }

  Matrix current_q() const {
    const double e = 1.0 / static_cast<double>(problem_.n());
    return state_.P.array() + e;
  }

  SolveReport solve() {
    const auto t0 = std::chrono::steady_clock::now();
    SolveReport report{SymMatrix::ones_over_n(problem_.n()), {}, {}, {}, 0, false, 0, 0.0};
    const Matrix& d = d_;
    double last_gap = std::numeric_limits<double>::infinity();
    for (int outer = 0; outer < config_.max_outer; ++outer) {
      for (int ti = 0; ti < config_.n_inner; ++ti) inner_step(ti);
      const bool gap_due = outer % config_.gap_every == 0 || outer + 1 == config_.max_outer;
      double g_value = 0.0;
      if (gap_due) {
        last_gap = inner_gap().gap;
      }
      g_value = augmented_lagrangian(state_.P, state_.Gamma, d, config_.gamma);
      update_multiplier();
      ++state_.t;

      const double obj = trace_product(d, state_.P) / scale_;
      const Matrix q = current_q();
      const double rmse = negative_rmse(q);
      report.objective_trace.push_back(obj);
      report.neg_rmse_trace.push_back(rmse);
      report.gap_trace.push_back(last_gap / scale_);
      report.outer_iters = outer + 1;

      if (outer >= 1 && gap_due) {
        const double prev = report.objective_trace[report.objective_trace.size() - 2];
        const double rel_change = std::abs(obj - prev) / std::max(std::abs(obj), 1e-12);
        const bool gap_ok = last_gap <= config_.tol_gap * std::max(std::abs(g_value), 1e-12);
        if (rmse <= config_.tol_neg && rel_change <= config_.tol_obj && gap_ok) {
          report.converged = true;
          break;
        }
      }
    }
    report.Q = SymMatrix(current_q());
    report.eig_unconverged = eig_unconverged_;
    report.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
  }

 private:
  SdpProblem problem_;
  CgmConfig config_;
  CgmState state_;
  Vector ones_unit_;
  double scale_ = 1.0;
  Matrix d_;
  Matrix grad_;
  int eig_unconverged_ = 0;
};

inline SolveReport solve_nomad_cgm(const SdpProblem& problem, const CgmConfig& config = {}) {
  CgmSolver solver(problem, config);
  return solver.solve();
}

/// tr(D Q).
inline double nomad_objective(const SymMatrix& d, const SymMatrix& q) {
  return trace_product(d.mat(), q.mat());
}

}  // namespace nomad
