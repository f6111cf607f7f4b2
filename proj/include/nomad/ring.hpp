#pragma once

#include "nomad/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

namespace nomad {

/// Circulant view of a (near-)circulant Q.
struct FourierProfile {
  /// Eigenvalues in the DFT basis: q_p = sum_h a_h cos(2 pi p h / n).
  Vector q;
  /// a_h: mean of the wrapped diagonal {(i, i + h mod n)}.
  Vector diag_values;
  /// max over h of the standard deviation along the h-diagonal.
  double circulant_residual = 0.0;
  /// max_p |sum_h a_h sin(2 pi p h / n)|; zero for a symmetric profile.
  double imag_residual = 0.0;

  Index n() const { return q.size(); }
};

inline FourierProfile fourier_profile(const SymMatrix& qm) {
  const Matrix& m = qm.mat();
  const Index n = qm.n();
  FourierProfile out;
  out.diag_values = Vector::Zero(n);
  for (Index h = 0; h < n; ++h) {
    double sum = 0.0;
    for (Index i = 0; i < n; ++i) sum += m(i, (i + h) % n);
    const double mean = sum / static_cast<double>(n);
    double var = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double dv = m(i, (i + h) % n) - mean;
      var += dv * dv;
    }
    out.diag_values(h) = mean;
    out.circulant_residual =
        std::max(out.circulant_residual, std::sqrt(var / static_cast<double>(n)));
  }
  out.q = Vector::Zero(n);
  const double w = 2.0 * std::numbers::pi / static_cast<double>(n);
  for (Index p = 0; p < n; ++p) {
    double re = 0.0;
    double im = 0.0;
    for (Index h = 0; h < n; ++h) {
      const double ang = w * static_cast<double>((p * h) % n);
      re += out.diag_values(h) * std::cos(ang);
      im += out.diag_values(h) * std::sin(ang);
    }
    out.q(p) = re;
    out.imag_residual = std::max(out.imag_residual, std::abs(im));
  }
  return out;
}

/// Circulant matrix whose first row is a_h = (1/n) sum_p q_p cos(2 pi p h / n).
inline SymMatrix circulant_from_profile(const Vector& q) {
  const Index n = q.size();
  const double w = 2.0 * std::numbers::pi / static_cast<double>(n);
  Vector a = Vector::Zero(n);
  for (Index h = 0; h < n; ++h) {
    for (Index p = 0; p < n; ++p) a(h) += q(p) * std::cos(w * static_cast<double>((p * h) % n));
    a(h) /= static_cast<double>(n);
  }
  Matrix m(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) m(i, j) = a((j - i + n) % n);
  }
  return SymMatrix(std::move(m));
}

/// Number of Fourier modes above `threshold`.
inline int active_modes(const FourierProfile& profile, double threshold = 1e-3) {
  return static_cast<int>((profile.q.array() > threshold).count());
}

struct LpReport {
  /// min_p q_p; must be >= -tol.
  double min_q = 0.0;
  /// |q_0 - 1|.
  double q0_error = 0.0;
  /// |sum q - K|.
  double budget_error = 0.0;
  /// min_tau c_tau^T q, the reconstructed entry at offset tau.
  double min_entry_margin = 0.0;
  Index worst_tau = 0;
  bool nonneg_ok = false;
  bool q0_ok = false;
  bool budget_ok = false;
  bool entries_ok = false;

  bool passed() const { return nonneg_ok && q0_ok && budget_ok && entries_ok; }
};

/// Constraints of the ring LP on q: q >= 0, q_0 = 1, sum q = K and
/// c_tau^T q >= 0 for every offset tau, with c_tau = cos(2 pi p tau / n) / n.
inline LpReport lp_feasibility_check(const Vector& q, double k, double tol) {
  const Index n = q.size();
  LpReport r;
  r.min_q = q.minCoeff();
  r.q0_error = std::abs(q(0) - 1.0);
  r.budget_error = std::abs(q.sum() - k);
  const double w = 2.0 * std::numbers::pi / static_cast<double>(n);
  r.min_entry_margin = std::numeric_limits<double>::infinity();
  for (Index tau = 0; tau < n; ++tau) {
    double c = 0.0;
    for (Index p = 0; p < n; ++p) c += q(p) * std::cos(w * static_cast<double>((p * tau) % n));
    c /= static_cast<double>(n);
    if (c < r.min_entry_margin) {
      r.min_entry_margin = c;
      r.worst_tau = tau;
    }
  }
  r.nonneg_ok = r.min_q >= -tol;
  r.q0_ok = r.q0_error <= tol;
  r.budget_ok = r.budget_error <= tol;
  r.entries_ok = r.min_entry_margin >= -tol;
  return r;
}

inline LpReport lp_feasibility_check(const FourierProfile& profile, double k, double tol) {
  return lp_feasibility_check(profile.q, k, tol);
}

struct ConeReport {
  /// <Y_i / |Y_i|, axis> for every column of the factor.
  Vector cosines;
  double mean = 0.0;
  double std = 0.0;
  bool passed = false;
};

/// Factors Q = Y^T Y through its eigendecomposition (negative eigenvalues
/// clipped) and measures the angle between each normalized column Y_i and the
/// image Y 1 of the all-ones direction.
inline ConeReport cone_geometry_check(const SymMatrix& qm, double tol) {
  const Index n = qm.n();
  Eigen::SelfAdjointEigenSolver<Matrix> es(qm.mat());
  const Vector lam = es.eigenvalues().cwiseMax(0.0);
  const Matrix y = lam.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
  Vector axis = y.rowwise().sum();
  ConeReport r;
  r.cosines = Vector::Zero(n);
  const double an = axis.norm();
  if (an > 0.0) axis /= an;
  for (Index i = 0; i < n; ++i) {
    const double cn = y.col(i).norm();
    r.cosines(i) = cn > 0.0 && an > 0.0 ? y.col(i).dot(axis) / cn : 0.0;
  }
  r.mean = r.cosines.mean();
  r.std = std::sqrt((r.cosines.array() - r.mean).square().mean());
  r.passed = r.std <= tol;
  return r;
}

struct WidthReport {
  std::vector<int> per_row;
  double mean = 0.0;
};

/// Entries >= threshold_fraction * (row maximum), counted per row.
inline WidthReport neighborhood_width(const SymMatrix& qm, double threshold_fraction = 0.1) {
  const Matrix& m = qm.mat();
  WidthReport r;
  double total = 0.0;
  for (Index i = 0; i < m.rows(); ++i) {
    const double cut = threshold_fraction * m.row(i).maxCoeff();
    const int c = static_cast<int>((m.row(i).array() >= cut).count());
    r.per_row.push_back(c);
    total += c;
  }
  r.mean = total / static_cast<double>(m.rows());
  return r;
}

/// K-range in which circulant solutions are known to be completely positive.
enum class CpRegime { small_k, large_k, uncovered };

inline const char* to_string(CpRegime r) {
  switch (r) {
    case CpRegime::small_k: return "small-K";
    case CpRegime::large_k: return "large-K";
    default: return "uncovered";
  }
}

struct CpDiagnostics {
  bool diag_dominant = false;
  bool diag_value_check = false;
  /// max_i (sum_{j != i} |Q_ij| - |Q_ii|); <= 0 when diagonally dominant.
  double dominance_margin = 0.0;
  /// max_i |Q_ii - K/n|.
  double diag_value_error = 0.0;
  CpRegime regime = CpRegime::uncovered;
};

inline CpDiagnostics cp_diagnostics(const SymMatrix& qm, double k, double tol = 1e-3) {
  const Matrix& m = qm.mat();
  const Index n = qm.n();
  CpDiagnostics d;
  d.dominance_margin = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < n; ++i) {
    const double off = m.row(i).cwiseAbs().sum() - std::abs(m(i, i));
    d.dominance_margin = std::max(d.dominance_margin, off - std::abs(m(i, i)));
    d.diag_value_error = std::max(d.diag_value_error, std::abs(m(i, i) - k / static_cast<double>(n)));
  }
  d.diag_dominant = d.dominance_margin <= tol;
  d.diag_value_check = d.diag_value_error <= tol;
  if (k <= 1.5) {
    d.regime = CpRegime::small_k;
  } else if (k >= 0.5 * static_cast<double>(n)) {
    d.regime = CpRegime::large_k;
  }
  return d;
}

}  // namespace nomad
