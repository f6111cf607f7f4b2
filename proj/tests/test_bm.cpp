#include "nomad/bm.hpp"
#include "nomad/cgm.hpp"
#include "nomad/datasets.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace nomad;

namespace {

Dataset two_blobs(Index n_each, double sep, std::uint64_t seed) {
  Matrix centers(2, 2);
  centers << 0, 0, sep, 0;
  return gaussian_blobs(n_each, centers, 1.0, seed);
}

// Hard-clustering factor: row k is |C_k|^{-1/2} times the indicator of C_k.
Matrix hard_factor(const std::vector<int>& labels, int k) {
  const Index n = static_cast<Index>(labels.size());
  Matrix y = Matrix::Zero(k, n);
  std::vector<double> size(static_cast<std::size_t>(k), 0.0);
  for (int l : labels) size[static_cast<std::size_t>(l)] += 1.0;
  for (Index i = 0; i < n; ++i) {
    const int l = labels[static_cast<std::size_t>(i)];
    y(l, i) = 1.0 / std::sqrt(size[static_cast<std::size_t>(l)]);
  }
  return y;
}

}  // namespace

TEST(BmLagrangian, ZeroFactor) {
  const Index n = 6;
  const double k = 3.0, sigma = 2.0, varphi = 0.7;
  const Matrix d = oracle::random_symmetric(n, 1);
  const auto v = bm_lagrangian(Matrix::Zero(2, n), Vector::Zero(n), 0.0, d, sigma, varphi, k);
  EXPECT_NEAR(v.value, sigma * n / 2.0 + varphi * k * k / 2.0, 1e-12);
}

TEST(BmLagrangian, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Index n = 6, r = 3;
    const Matrix d = oracle::random_symmetric(n, seed);
    const Matrix y = oracle::random_matrix(r, n, seed + 100).cwiseAbs() * 0.4;
    const Vector mu = oracle::random_matrix(n, 1, seed + 200).col(0);
    const double lambda = 0.3, sigma = 1.5, varphi = 0.8, k = 2.0;
    auto f = [&](const Matrix& x) { return bm_lagrangian(x, mu, lambda, d, sigma, varphi, k).value; };
    const Matrix fd = oracle::fd_gradient(f, y);
    const Matrix an = bm_lagrangian(y, mu, lambda, d, sigma, varphi, k).grad;
    EXPECT_LE((fd - an).norm() / an.norm(), 1e-5) << "seed " << seed;
  }
}

TEST(BmLagrangian, HardClusteringFactorHasNoConstraintTerms) {
  const std::vector<int> labels{0, 0, 1, 1, 1, 2};
  const Matrix y = hard_factor(labels, 3);
  const Matrix d = oracle::random_symmetric(6, 7);
  const Vector mu = Vector::LinSpaced(6, -1.0, 1.0);
  const auto v = bm_lagrangian(y, mu, 0.9, d, 3.0, 2.0, 3.0);
  EXPECT_NEAR(v.value, -trace_product(d, y.transpose() * y), 1e-12);
}

TEST(BmLagrangian, RejectsShapeMismatch) {
  EXPECT_THROW(bm_lagrangian(Matrix::Zero(2, 5), Vector::Zero(4), 0.0, Matrix::Zero(4, 4), 1, 1, 1),
               std::invalid_argument);
}

TEST(BmConfig, ValidateRejectsBadRank) {
  BmConfig c;
  c.r = 0;
  EXPECT_THROW(c.validate(5), std::invalid_argument);
  c.r = 6;
  EXPECT_THROW(c.validate(5), std::invalid_argument);
}

TEST(ProjectedLbfgs, BoxConstrainedQuadratic) {
  // min |y - c|^2 over [0, 1]: solution is the clipped target
  Matrix c(2, 3);
  c << -0.5, 0.3, 1.7, 0.9, -2.0, 0.4;
  Matrix y = Matrix::Constant(2, 3, 0.5);
  auto f = [&](const Matrix& x) { return BmValue{(x - c).squaredNorm(), 2.0 * (x - c)}; };
  detail::projected_lbfgs(y, f, 1.0, 200, 1e-12, 5);
  EXPECT_LT((y - c.cwiseMax(0.0).cwiseMin(1.0)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(BmSolve, SeparatedBlobsGiveHardClustering) {
  const Dataset ds = two_blobs(20, 12.0, 3);
  BmConfig c;
  c.r = 2;
  const auto r = solve_nomad_bm(SdpProblem(gramian(ds.points), 2.0), c);
  const Matrix want = oracle::hard_clustering_q(*ds.labels);
  EXPECT_LE(r.row_residual, 1e-3);
  EXPECT_LE(r.trace_residual, 1e-3);
  EXPECT_LE((r.Q.mat() - want).norm() / want.norm(), 1e-2);
}

TEST(BmSolve, FactorStaysInBoxAndQIsPsdNonnegative) {
  const Dataset ds = ring(24);
  BmConfig c;
  c.r = 8;
  c.max_outer = 30;
  const auto r = solve_nomad_bm(SdpProblem(gramian(ds.points), 4.0), c);
  EXPECT_GE(r.Y.minCoeff(), 0.0);
  EXPECT_LE(r.Y.maxCoeff(), c.box_upper);
  EXPECT_GE(r.Q.mat().minCoeff(), 0.0);
  EXPECT_GE(oracle::jacobi_eigen(r.Q.mat()).first(0), -1e-10);
  EXPECT_NEAR(r.objective, nomad_objective(gramian(ds.points), r.Q), 1e-9 * std::abs(r.objective));
  EXPECT_EQ(r.lagrangian_trace.size(), static_cast<std::size_t>(r.outer_iters));
}

TEST(BmSolve, CannotBeatConvexOptimum) {
  int compared = 0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Dataset ds = gaussian_blobs(15, oracle::random_matrix(3, 2, seed + 40) * 3.0, 1.0, seed);
    const SdpProblem prob(gramian(ds.points), 3.0);
    CgmConfig cc;
    cc.max_outer = 2000;
    const auto cgm = solve_nomad_cgm(prob, cc);
    const double f_cgm = nomad_objective(prob.D, cgm.Q);
    BmConfig bc;
    bc.r = static_cast<int>(prob.n());
    bc.seed = seed;
    const auto bm = solve_nomad_bm(prob, bc);
    if (bm.row_residual <= 1e-4 && bm.trace_residual <= 1e-4) {
      EXPECT_LE(bm.objective, f_cgm + 0.01 * std::abs(f_cgm)) << "seed " << seed;
      ++compared;
    }
  }
  EXPECT_GT(compared, 0);
}

TEST(BmSolve, SofterSolutionsAsRankGrows) {
  const Dataset ds = two_rings(40);
  const SdpProblem prob(gramian(ds.points), 6.0);
  CgmConfig cc;
  cc.max_outer = 2000;
  const Matrix q_cgm = solve_nomad_cgm(prob, cc).Q.mat();
  std::vector<double> errs;
  for (int r : {6, 24, 80}) {
    BmConfig bc;
    bc.r = r;
    const auto bm = solve_nomad_bm(prob, bc);
    errs.push_back((q_cgm - bm.Q.mat()).norm() / q_cgm.norm());
  }
  EXPECT_GT(errs[0], errs[2]);
}

TEST(BmSolve, WarmStartIsUsed) {
  const Dataset ds = two_blobs(10, 12.0, 5);
  const SdpProblem prob(gramian(ds.points), 2.0);
  BmConfig c;
  c.r = 2;
  const Matrix y0 = hard_factor(*ds.labels, 2);
  const auto r = solve_nomad_bm(prob, c, &y0);
  EXPECT_LE(r.outer_iters, 3);
  EXPECT_LE((r.Q.mat() - y0.transpose() * y0).norm(), 1e-3);
}

TEST(BmSolve, BalancedStartAvoidsZeroFactor) {
  // an unbalanced start on this instance used to fall to Y = 0
  const Dataset ds = gaussian_blobs(16, oracle::random_matrix(4, 2, 107) * 3.0, 1.0, 1107);
  const SdpProblem prob(gramian(ds.points), 4.0);
  BmConfig c;
  c.r = static_cast<int>(prob.n());
  c.seed = 7;
  const Matrix y0 = bm_initial_factor(prob.D, c);
  EXPECT_LE((y0.transpose() * (y0 * Vector::Ones(64)) - Vector::Ones(64)).cwiseAbs().maxCoeff(), 1e-6);
  const auto r = solve_nomad_bm(prob, c);
  EXPECT_GT(r.Y.norm(), 0.1);
  EXPECT_LE(r.row_residual, 1e-3);
  EXPECT_LE(r.trace_residual, 1e-3);
}
