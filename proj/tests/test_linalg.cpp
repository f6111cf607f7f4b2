#include "nomad/linalg.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <string>

using namespace nomad;

namespace {

Matrix ring_points(int n) {
  Matrix x(n, 2);
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * M_PI * i / n;
    x(i, 0) = std::cos(a);
    x(i, 1) = std::sin(a);
  }
  return x;
}

}  // namespace

TEST(SymMatrix, RejectsNonSquareAndEmpty) {
  EXPECT_THROW(SymMatrix(Matrix::Zero(2, 3)), std::invalid_argument);
  EXPECT_THROW(SymMatrix(Matrix::Zero(0, 0)), std::invalid_argument);
}

TEST(SymMatrix, RejectsNonFinite) {
  Matrix m = Matrix::Identity(3, 3);
  m(1, 2) = std::nan("");
  EXPECT_THROW(SymMatrix{m}, std::invalid_argument);
}

TEST(SymMatrix, SymmetrizesAndWarnsOnVisibleAsymmetry) {
  std::string captured;
  auto saved = warning_sink();
  warning_sink() = [&](std::string_view s) { captured = s; };
  Matrix m(2, 2);
  m << 1, 2, 4, 1;
  const SymMatrix s(m);
  warning_sink() = saved;
  EXPECT_EQ(s(0, 1), 3.0);
  EXPECT_EQ(s(1, 0), 3.0);
  EXPECT_FALSE(captured.empty());
}

TEST(SymMatrix, ExactSymmetryOnRandomInput) {
  auto saved = warning_sink();
  warning_sink() = nullptr;
  const SymMatrix s(oracle::random_matrix(7, 7, 3));
  warning_sink() = saved;
  for (Index i = 0; i < 7; ++i)
    for (Index j = 0; j < 7; ++j) EXPECT_EQ(s(i, j), s(j, i));
}

TEST(Gramian, TwoPoints) {
  Matrix x(2, 1);
  x << 1, -1;
  Matrix want(2, 2);
  want << 1, -1, -1, 1;
  EXPECT_EQ(gramian(x).mat(), want);
}

TEST(Gramian, IdentityPoints) {
  EXPECT_EQ(gramian(Matrix::Identity(3, 3)).mat(), Matrix::Identity(3, 3));
}

TEST(Gramian, FourPointRingIsCirculant) {
  const SymMatrix d = gramian(ring_points(4));
  const double row[4] = {1, 0, -1, 0};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(d(i, j), std::cos(M_PI / 2 * (i - j)), 1e-15) << i << j;
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(d(0, j), row[j], 1e-15);
}

TEST(Gramian, RejectsNonFinitePoints) {
  Matrix x = Matrix::Ones(3, 2);
  x(2, 1) = INFINITY;
  EXPECT_THROW(gramian(x), std::invalid_argument);
}

TEST(Gramian, MinEigenvalueNonNegative) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const SymMatrix d = gramian(oracle::random_matrix(12, 3, seed));
    EXPECT_GE(oracle::jacobi_eigen(d.mat()).first(0), -1e-10 * d.mat().norm());
  }
}

TEST(NegHalfSqdist, Examples) {
  Matrix same(2, 1);
  same << 2, 2;
  EXPECT_TRUE(neg_half_sqdist(same).mat().isZero(0.0));
  Matrix x(2, 1);
  x << 1, -1;
  Matrix want(2, 2);
  want << 0, -2, -2, 0;
  EXPECT_EQ(neg_half_sqdist(x).mat(), want);
}

TEST(NegHalfSqdist, TraceIdentityOnRowStochasticQ) {
  const Matrix x = oracle::random_matrix(6, 2, 11);
  const SymMatrix d = gramian(x);
  const SymMatrix m = neg_half_sqdist(x);
  Matrix a = oracle::random_matrix(6, 6, 12).cwiseAbs();
  // symmetric Sinkhorn balancing gives a feasible Q with Q 1 = 1
  a = a + a.transpose().eval();
  for (int it = 0; it < 500; ++it) {
    const Vector r = a.rowwise().sum();
    a = r.cwiseInverse().cwiseSqrt().asDiagonal() * a * r.cwiseInverse().cwiseSqrt().asDiagonal();
  }
  ASSERT_LT((a.rowwise().sum() - Vector::Ones(6)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(trace_product(m.mat(), a), trace_product(d.mat(), a) - d.mat().trace(), 1e-10);
}

TEST(ProjectOutOnes, Examples) {
  EXPECT_LT(project_out_ones(SymMatrix::ones_over_n(5)).mat().cwiseAbs().maxCoeff(), 1e-15);
  const Matrix want = Matrix::Identity(4, 4) - Matrix::Constant(4, 4, 0.25);
  EXPECT_LT((project_out_ones(SymMatrix::identity(4)).mat() - want).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ProjectOutOnes, RowSumsVanishAndIdempotent) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SymMatrix m(oracle::random_symmetric(5, seed));
    const SymMatrix p = project_out_ones(m);
    EXPECT_LE(p.mat().rowwise().sum().cwiseAbs().maxCoeff(), 1e-12 * m.mat().norm());
    const SymMatrix pp = project_out_ones(p);
    EXPECT_LE((pp.mat() - p.mat()).norm(), 1e-12 * std::max(1.0, p.mat().norm()));
  }
}

TEST(Lanczos, DiagonalExamples) {
  const Matrix d = Vector(Eigen::Vector3d(1, 2, 3)).asDiagonal();
  LanczosOptions opt;
  const EigPair top = lanczos_extreme(d, Extreme::largest, opt);
  EXPECT_NEAR(top.value, 3.0, 1e-10);
  EXPECT_NEAR(std::abs(top.vector(2)), 1.0, 1e-8);
  EXPECT_NEAR(top.vector.norm(), 1.0, 1e-12);
  EXPECT_NEAR(lanczos_extreme(d, Extreme::smallest, opt).value, 1.0, 1e-10);
}

TEST(Lanczos, DeflatedRingOperator) {
  const SymMatrix d = gramian(ring_points(4));
  const Matrix m = project_out_ones(SymMatrix(-d.mat())).mat();
  const Vector ones = Vector::Ones(4) / 2.0;
  LanczosOptions opt;
  opt.deflate = &ones;
  const EigPair e = lanczos_extreme(m, Extreme::smallest, opt);
  const auto [w, v] = oracle::jacobi_eigen(m);
  EXPECT_NEAR(w(0), -2.0, 1e-12);
  EXPECT_NEAR(e.value, -2.0, 1e-8);
  EXPECT_NEAR(e.vector.sum(), 0.0, 1e-10);
}

TEST(Lanczos, AgreesWithJacobiOracle) {
  for (Index n = 2; n <= 12; ++n) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const Matrix a = oracle::random_symmetric(n, 100 * n + seed);
      const auto [w, v] = oracle::jacobi_eigen(a);
      LanczosOptions opt;
      opt.tol = 1e-10;
      opt.seed = seed;
      const EigPair hi = lanczos_extreme(a, Extreme::largest, opt);
      const EigPair lo = lanczos_extreme(a, Extreme::smallest, opt);
      EXPECT_NEAR(hi.value, w(n - 1), 1e-8) << "n=" << n;
      EXPECT_NEAR(lo.value, w(0), 1e-8) << "n=" << n;
      EXPECT_NEAR(hi.vector.norm(), 1.0, 1e-12);
      // the reported residual is the measured one
      EXPECT_NEAR(hi.residual, (a * hi.vector - hi.value * hi.vector).norm(), 1e-12);
    }
  }
}

TEST(Lanczos, DeterministicForSeed) {
  const Matrix a = oracle::random_symmetric(30, 5);
  LanczosOptions opt;
  opt.seed = 9;
  const EigPair x = lanczos_extreme(a, Extreme::largest, opt);
  const EigPair y = lanczos_extreme(a, Extreme::largest, opt);
  EXPECT_EQ(x.value, y.value);
  EXPECT_EQ(x.vector, y.vector);
}

TEST(Lanczos, RejectsBadArguments) {
  LanczosOptions opt;
  opt.tol = 0.0;
  EXPECT_THROW(lanczos_extreme(Matrix::Identity(3, 3), Extreme::largest, opt), std::invalid_argument);
  LanczosOptions d1;
  const Vector one = Vector::Ones(1);
  d1.deflate = &one;
  EXPECT_THROW(lanczos_extreme(Matrix::Identity(1, 1), Extreme::largest, d1), std::invalid_argument);
}

TEST(MinEigenvalue, Examples) {
  EXPECT_NEAR(min_eigenvalue(SymMatrix::identity(5)), 1.0, 1e-10);
  EXPECT_NEAR(min_eigenvalue(SymMatrix::ones_over_n(4)), 0.0, 1e-10);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix y = oracle::random_matrix(3, 8, seed);
    EXPECT_GE(min_eigenvalue(SymMatrix(y.transpose() * y)), -1e-10);
  }
}
