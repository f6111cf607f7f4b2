#include "nomad/datasets.hpp"
#include "nomad/linalg.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

using namespace nomad;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name, const std::string& body) {
  const fs::path dir = fs::temp_directory_path() / "nomad_test_datasets";
  fs::create_directories(dir);
  const fs::path p = dir / name;
  std::ofstream(p) << body;
  return p;
}

bool bit_identical(const Dataset& a, const Dataset& b) {
  return a.points.rows() == b.points.rows() && a.points.cols() == b.points.cols() &&
         std::memcmp(a.points.data(), b.points.data(), sizeof(double) * a.points.size()) == 0 &&
         a.labels == b.labels;
}

}  // namespace

TEST(Ring, FourPointAnglesAndGramian) {
  const Dataset ds = ring(4, 1.0);
  const double want[4][2] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(ds.points(i, 0), want[i][0], 1e-15);
    EXPECT_NEAR(ds.points(i, 1), want[i][1], 1e-15);
  }
  const SymMatrix d = gramian(ds.points);
  const double row[4] = {1, 0, -1, 0};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(d(i, j), row[(j - i + 4) % 4], 1e-15);
}

TEST(Ring, GramianIsCirculantCosine) {
  const Index n = 37;
  const SymMatrix d = gramian(ring(n, 1.0).points);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      EXPECT_NEAR(d(i, j), std::cos(2.0 * M_PI * static_cast<double>((j - i + n) % n) / n), 1e-12);
}

TEST(Generators, RejectTooFewPoints) {
  EXPECT_THROW(ring(2), std::invalid_argument);
  EXPECT_THROW(two_rings(1), std::invalid_argument);
  EXPECT_THROW(moons(1), std::invalid_argument);
  EXPECT_THROW(double_swiss_roll(1), std::invalid_argument);
  EXPECT_THROW(trefoil_knot(2), std::invalid_argument);
  EXPECT_THROW(grid2d_in_10d(1), std::invalid_argument);
  EXPECT_THROW(gaussian_blobs(1, Matrix::Zero(2, 2)), std::invalid_argument);
}

TEST(Generators, TwoManifoldLabels) {
  for (const Dataset& ds : {two_rings(10), moons(10), double_swiss_roll(10)}) {
    ASSERT_TRUE(ds.labels.has_value()) << ds.name;
    ASSERT_EQ(ds.labels->size(), 20u);
    for (int i = 0; i < 20; ++i) EXPECT_EQ((*ds.labels)[static_cast<std::size_t>(i)], i < 10 ? 0 : 1);
  }
}

TEST(Generators, TwoRingsRadii) {
  const Dataset ds = two_rings(12, 1.0, 3.0);
  for (Index i = 0; i < 24; ++i) EXPECT_NEAR(ds.points.row(i).norm(), i < 12 ? 1.0 : 3.0, 1e-12);
}

TEST(Generators, SwissRollParameterization) {
  const double gap = 2.0;
  const Dataset ds = double_swiss_roll(50, gap, 4.0, 3);
  for (Index i = 0; i < 100; ++i) {
    const double x = ds.points(i, 0), h = ds.points(i, 1), z = ds.points(i, 2);
    const double radius = std::hypot(x, z);
    const double t = radius - (i < 50 ? 0.0 : gap);
    EXPECT_GE(t, 1.5 * M_PI - 1e-9);
    EXPECT_LE(t, 4.5 * M_PI + 1e-9);
    // the angle of the point matches its roll parameter modulo 2 pi
    EXPECT_NEAR(std::remainder(std::atan2(z, x) - t, 2.0 * M_PI), 0.0, 1e-9);
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, 4.0);
  }
}

TEST(Generators, TrefoilOnCurve) {
  const Dataset ds = trefoil_knot(30);
  for (Index i = 0; i < 30; ++i) {
    const double t = 2.0 * M_PI * static_cast<double>(i) / 30.0;
    EXPECT_NEAR(ds.points(i, 0), std::sin(t) + 2 * std::sin(2 * t), 1e-12);
    EXPECT_NEAR(ds.points(i, 1), std::cos(t) - 2 * std::cos(2 * t), 1e-12);
    EXPECT_NEAR(ds.points(i, 2), -std::sin(3 * t), 1e-12);
  }
}

TEST(Generators, MoonsWithoutNoiseLieOnArcs) {
  const Dataset ds = moons(20, 0.0, 1);
  for (Index i = 0; i < 20; ++i) {
    EXPECT_NEAR(ds.points.row(i).norm(), 1.0, 1e-12);
    const double dx = ds.points(20 + i, 0) - 1.0, dy = ds.points(20 + i, 1) - 0.5;
    EXPECT_NEAR(std::hypot(dx, dy), 1.0, 1e-12);
  }
}

TEST(Generators, GridNoiseDimensions) {
  const Dataset clean = grid2d_in_10d(10, 0.0);
  ASSERT_EQ(clean.dim(), 10);
  EXPECT_EQ(clean.n(), 100);
  EXPECT_TRUE(clean.points.rightCols(8).isZero(0.0));
  const Dataset noisy = grid2d_in_10d(10, 0.1, 4);
  EXPECT_GT(noisy.points.rightCols(8).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(noisy.points.leftCols(2), clean.points.leftCols(2));
}

TEST(Generators, BlobsCentersAndLabels) {
  Matrix centers(3, 2);
  centers << 0, 0, 50, 0, 0, 50;
  const Dataset ds = gaussian_blobs(200, centers, 1.0, 2);
  for (int c = 0; c < 3; ++c) {
    const Eigen::RowVectorXd mean = ds.points.middleRows(200 * c, 200).colwise().mean();
    EXPECT_LT((mean - centers.row(c)).norm(), 0.3);
    EXPECT_EQ((*ds.labels)[static_cast<std::size_t>(200 * c + 5)], c);
  }
}

TEST(Generators, DeterministicForSeed) {
  EXPECT_TRUE(bit_identical(moons(30, 0.1, 5), moons(30, 0.1, 5)));
  EXPECT_TRUE(bit_identical(double_swiss_roll(30, M_PI, 10, 5), double_swiss_roll(30, M_PI, 10, 5)));
  EXPECT_TRUE(bit_identical(grid2d_in_10d(5, 0.1, 5), grid2d_in_10d(5, 0.1, 5)));
  EXPECT_TRUE(bit_identical(gaussian_blobs(5, Matrix::Ones(2, 3), 1.0, 5),
                            gaussian_blobs(5, Matrix::Ones(2, 3), 1.0, 5)));
  EXPECT_FALSE(bit_identical(moons(30, 0.1, 5), moons(30, 0.1, 6)));
}

TEST(AddNoiseDims, ShapeAndPreservation) {
  const Dataset base = moons(20, 0.05, 1);
  const Dataset out = add_noise_dims(base, 5, 0.05, 2);
  ASSERT_EQ(out.dim(), 12);
  EXPECT_EQ(out.points.leftCols(2), base.points);
  EXPECT_EQ(out.labels, base.labels);
  EXPECT_TRUE(add_noise_dims(base, 5, 0.0, 2).points.rightCols(10).isZero(0.0));
}

TEST(AddNoiseDims, ColumnStdMatchesRequest) {
  const Dataset base = ring(1000);
  for (double s : {0.05, 0.10}) {
    const Dataset out = add_noise_dims(base, 5, s, 9);
    for (Index j = 2; j < 12; ++j) {
      const Vector col = out.points.col(j);
      const double mean = col.mean();
      const double sd = std::sqrt((col.array() - mean).square().sum() / (col.size() - 1));
      EXPECT_NEAR(sd, s, 0.2 * s) << "column " << j;
    }
  }
}

TEST(Csv, SimpleFile) {
  const auto p = temp_file("simple.csv", "1,2\n3,4\n5,6\n");
  const Dataset ds = load_csv(p, false);
  EXPECT_EQ(ds.n(), 3);
  EXPECT_EQ(ds.dim(), 2);
  EXPECT_FALSE(ds.labels.has_value());
  EXPECT_EQ(ds.name, "simple");
  EXPECT_EQ(ds.points(2, 1), 6.0);
}

TEST(Csv, HeaderAndLabels) {
  const auto p = temp_file("labelled.csv", "# x,y,label\n0.5,1.5,0\n2.5,3.5,1\n-1,2,1\n");
  const Dataset ds = load_csv(p, true);
  EXPECT_EQ(ds.dim(), 2);
  ASSERT_TRUE(ds.labels.has_value());
  EXPECT_EQ(*ds.labels, (std::vector<int>{0, 1, 1}));
}

TEST(Csv, RaggedRowNamesRow) {
  const auto p = temp_file("ragged.csv", "1,2\n3,4\n5\n");
  try {
    load_csv(p, false);
    FAIL() << "expected an error";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos) << e.what();
  }
}

TEST(Csv, NonNumericCellNamesRow) {
  const auto p = temp_file("bad.csv", "# header\n1,2\n3,abc\n");
  try {
    load_csv(p, false);
    FAIL() << "expected an error";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos) << e.what();
  }
}

TEST(Csv, RejectsNonIntegerLabelAndMissingFile) {
  EXPECT_THROW(load_csv(temp_file("badlab.csv", "1,2,0.5\n"), true), std::invalid_argument);
  EXPECT_THROW(load_csv("/nonexistent/definitely/missing.csv", false), std::runtime_error);
}

TEST(Csv, RoundTripPreservesValues) {
  Dataset ds = add_noise_dims(moons(25, 0.1, 3), 1, 0.3, 4);
  ds.points(0, 0) = 1e-300;
  ds.points(1, 1) = -123456.789012345678;
  const fs::path p = fs::temp_directory_path() / "nomad_test_datasets" / "roundtrip.csv";
  save_csv(ds, p);
  const Dataset back = load_csv(p, true);
  ASSERT_EQ(back.n(), ds.n());
  ASSERT_EQ(back.dim(), ds.dim());
  EXPECT_LE((back.points - ds.points).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(back.labels, ds.labels);
}
