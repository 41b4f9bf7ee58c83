#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <cstring>
#include <numbers>

#include "gemflow/datasets.hpp"
#include "gemflow/errors.hpp"

using namespace gemflow;

namespace {

constexpr Eigen::Index kBig = 100000;

PointBatch draw(DatasetId id, Eigen::Index n = kBig, std::uint64_t seed = 1) { return sample(DatasetSpec{id, {}, seed}, n); }

double mean_sq_norm(const PointBatch& b) { return b.rowwise().squaredNorm().mean(); }

/// Monte-Carlo tolerance: `k` standard errors of the mean of `values`.
double se_tol(const Vector& values, double k = 4.0) {
  const double m = values.mean();
  const double var = (values.array() - m).square().sum() / static_cast<double>(values.size() - 1);
  return k * std::sqrt(var / static_cast<double>(values.size()));
}

}  // namespace

TEST(Datasets, NamesRoundTrip) {
  EXPECT_EQ(dataset_names().size(), 12u);
  for (const auto& name : dataset_names()) EXPECT_EQ(to_string(parse_dataset(name)), name);
}

TEST(Datasets, UnknownIdNamesTheId) {
  try {
    parse_dataset("spiral_galaxy");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("spiral_galaxy"), std::string::npos);
  }
}

TEST(Datasets, DeterministicAndSeedSensitive) {
  for (const auto& name : dataset_names()) {
    const DatasetId id = parse_dataset(name);
    const PointBatch a = draw(id, 500, 3);
    const PointBatch b = draw(id, 500, 3);
    ASSERT_EQ(a.rows(), 500);
    ASSERT_EQ(a.cols(), 2);
    EXPECT_EQ(std::memcmp(a.data(), b.data(), sizeof(double) * a.size()), 0) << name;
    EXPECT_FALSE(a == draw(id, 500, 4)) << name;
    EXPECT_TRUE(a.allFinite()) << name;
  }
}

TEST(Datasets, RejectsBadSizeAndParameters) {
  EXPECT_THROW(sample(DatasetSpec{DatasetId::moons, {}, 0}, 0), InvalidArgument);
  EXPECT_THROW(sample(DatasetSpec{DatasetId::moons, {{"radius", 1.0}}, 0}, 10), ConfigError);
  EXPECT_THROW(sample(DatasetSpec{DatasetId::gaussian_ref, {{"sigma", -1.0}}, 0}, 10), ConfigError);
  EXPECT_THROW(sample(DatasetSpec{DatasetId::pinwheel, {{"blades", 2.5}}, 0}, 10), ConfigError);
}

TEST(Datasets, ParameterOverridesApply) {
  const PointBatch wide = sample(DatasetSpec{DatasetId::gaussian_ref, {{"sigma", 3.0}}, 2}, kBig);
  EXPECT_NEAR(mean_sq_norm(wide), 18.0, 0.3);
}

TEST(GaussianRef, StandardNormalMoments) {
  const PointBatch b = draw(DatasetId::gaussian_ref);
  const double n = static_cast<double>(b.rows());
  const Eigen::RowVector2d mean = b.colwise().mean();
  EXPECT_LT(std::abs(mean(0)), 3.0 / std::sqrt(n));
  EXPECT_LT(std::abs(mean(1)), 3.0 / std::sqrt(n));
  const PointBatch centred = b.rowwise() - mean;
  const Eigen::Matrix2d cov = centred.transpose() * centred / (n - 1);
  EXPECT_NEAR(cov(0, 0), 1.0, 0.05);
  EXPECT_NEAR(cov(1, 1), 1.0, 0.05);
  EXPECT_NEAR(cov(0, 1), 0.0, 0.05);
}

TEST(EightGaussians, WithinFourSigmaOfAMode) {
  const PointBatch b = draw(DatasetId::eight_gaussians);
  for (Eigen::Index i = 0; i < b.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 8; ++k) {
      const double a = 2 * std::numbers::pi * k / 8;
      best = std::min(best, std::hypot(b(i, 0) - 2 * std::cos(a), b(i, 1) - 2 * std::sin(a)));
    }
    // Radial distance of an isotropic 2D Gaussian; 4 sigma per axis bounds each coordinate.
    ASSERT_LT(best, 4 * 0.2 * std::sqrt(2.0)) << "row " << i;
  }
  const Vector sq = b.rowwise().squaredNorm();
  EXPECT_NEAR(sq.mean(), 4.0 + 2 * 0.04, se_tol(sq));
}

TEST(Circles, WithinNoiseBandOfARing) {
  const PointBatch b = draw(DatasetId::circles);
  for (Eigen::Index i = 0; i < b.rows(); ++i) {
    const double r = b.row(i).norm();
    // Rings at 1 and 0.5 after scaling; radial noise 0.08 * 0.5 with a 6-sigma band.
    ASSERT_LT(std::min(std::abs(r - 1.0), std::abs(r - 0.5)), 6 * 0.04) << "row " << i;
  }
  const Vector sq = b.rowwise().squaredNorm();
  EXPECT_NEAR(sq.mean(), 0.25 * (2.5 + 0.08 * 0.08), se_tol(sq));
}

TEST(Moons, NearTheTwoArcsWithKnownMean) {
  const PointBatch b = draw(DatasetId::moons);
  for (Eigen::Index i = 0; i < b.rows(); ++i) {
    const double d1 = std::abs(b.row(i).norm() - 1.0);
    const double d2 = std::abs(std::hypot(b(i, 0) - 1.0, b(i, 1) - 0.5) - 1.0);
    ASSERT_LT(std::min(d1, d2), 6 * 0.08 * std::sqrt(2.0));
  }
  EXPECT_NEAR(b.col(0).mean(), 0.5, se_tol(b.col(0)));
  EXPECT_NEAR(b.col(1).mean(), 0.25, se_tol(b.col(1)));
}

TEST(Checkerboard, OccupiedCellsOnly) {
  const PointBatch b = draw(DatasetId::checkerboard);
  std::array<int, 16> counts{};
  for (Eigen::Index i = 0; i < b.rows(); ++i) {
    ASSERT_GE(b(i, 0), -2.0);
    ASSERT_LT(b(i, 0), 2.0);
    ASSERT_GE(b(i, 1), -2.0);
    ASSERT_LT(b(i, 1), 2.0);
    const int cx = static_cast<int>(std::floor(b(i, 0)));
    const int cy = static_cast<int>(std::floor(b(i, 1)));
    ASSERT_EQ(((cx + cy) % 2 + 2) % 2, 0) << b.row(i);
    ++counts[static_cast<std::size_t>((cx + 2) * 4 + (cy + 2))];
  }
  // Eight occupied cells, equally likely.
  for (int cx = -2; cx < 2; ++cx) {
    for (int cy = -2; cy < 2; ++cy) {
      const int c = counts[static_cast<std::size_t>((cx + 2) * 4 + (cy + 2))];
      if ((cx + cy) % 2 == 0) EXPECT_NEAR(c, kBig / 8.0, 0.05 * kBig / 8.0);
      else EXPECT_EQ(c, 0);
    }
  }
  const Vector x2 = b.col(0).cwiseAbs2();
  const Vector y2 = b.col(1).cwiseAbs2();
  EXPECT_NEAR(x2.mean(), 4.0 / 3.0, se_tol(x2));
  EXPECT_NEAR(y2.mean(), 4.0 / 3.0, se_tol(y2));
}

TEST(Pinwheel, BladeGeometryAndMoment) {
  const PointBatch b = draw(DatasetId::pinwheel);
  const Vector sq = b.rowwise().squaredNorm();
  // E r^2 = 1 + 0.25^2, E t^2 = 0.05^2
  EXPECT_NEAR(sq.mean(), 1.0 + 0.0625 + 0.0025, se_tol(sq));
  // The twisted blade axis evaluated at radius ||x|| lies within the tangential jitter of x.
  for (Eigen::Index i = 0; i < b.rows(); ++i) {
    const double r = b.row(i).norm();
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 5; ++k) {
      const double ang = 2 * std::numbers::pi * k / 5 + 0.4 * r;
      best = std::min(best, std::hypot(b(i, 0) - r * std::cos(ang), b(i, 1) - r * std::sin(ang)));
    }
    ASSERT_LT(best, 1.5 * 6 * 0.05) << "row " << i;
  }
}

TEST(TwoSpirals, PointSymmetricAroundOrigin) {
  const PointBatch b = draw(DatasetId::two_spirals);
  EXPECT_NEAR(b.col(0).mean(), 0.0, se_tol(b.col(0)));
  EXPECT_NEAR(b.col(1).mean(), 0.0, se_tol(b.col(1)));
  for (Eigen::Index i = 0; i < b.rows(); ++i) ASSERT_LT(b.row(i).norm(), 2.0 + 6 * 0.05 * std::sqrt(2.0));
  // Radius grows as 2 theta / (3 pi); E r^2 = 4/3 for theta ~ U(0, 3 pi).
  const Vector sq = b.rowwise().squaredNorm();
  EXPECT_NEAR(sq.mean(), 4.0 / 3.0 + 2 * 0.0025, se_tol(sq));
}

TEST(Squares, FourAndFive) {
  for (DatasetId id : {DatasetId::four_squares, DatasetId::five_squares}) {
    const PointBatch b = draw(id);
    int centre = 0;
    for (Eigen::Index i = 0; i < b.rows(); ++i) {
      const bool in_centre = std::abs(b(i, 0)) <= 0.25 && std::abs(b(i, 1)) <= 0.25;
      const bool in_corner = std::abs(std::abs(b(i, 0)) - 1.0) <= 0.25 && std::abs(std::abs(b(i, 1)) - 1.0) <= 0.25;
      ASSERT_TRUE(in_centre || in_corner) << b.row(i);
      centre += in_centre;
    }
    if (id == DatasetId::four_squares) EXPECT_EQ(centre, 0);
    else EXPECT_NEAR(centre, kBig / 5.0, 0.05 * kBig / 5.0);
    EXPECT_NEAR(b.col(0).mean(), 0.0, se_tol(b.col(0)));
  }
}

TEST(FourGaussians, SmallAndLarge) {
  for (auto [id, offset] : {std::pair{DatasetId::small_four_gaussians, 0.5}, std::pair{DatasetId::large_four_gaussians, 1.5}}) {
    const PointBatch b = draw(id);
    for (Eigen::Index i = 0; i < b.rows(); ++i) {
      ASSERT_LT(std::abs(std::abs(b(i, 0)) - offset), 6 * 0.1);
      ASSERT_LT(std::abs(std::abs(b(i, 1)) - offset), 6 * 0.1);
    }
    const Vector x2 = b.col(0).cwiseAbs2();
    EXPECT_NEAR(x2.mean(), offset * offset + 0.01, se_tol(x2));
  }
}

TEST(UniformRef, BoxAndMoments) {
  const PointBatch b = draw(DatasetId::uniform_ref);
  EXPECT_LE(b.cwiseAbs().maxCoeff(), 1.0);
  const Vector x2 = b.col(0).cwiseAbs2();
  EXPECT_NEAR(x2.mean(), 1.0 / 3.0, se_tol(x2));
}

TEST(AnalyticRatio, ClosedForm) {
  const auto same = analytic_ratio_1d(0.3, 0.3, 2.0);
  for (double x : {-5.0, 0.0, 1.7}) EXPECT_EQ(same(x), 1.0);
  const auto r = analytic_ratio_1d(1.0, 0.0, 1.0);
  EXPECT_EQ(r(0.5), 1.0);
  EXPECT_NEAR(r(1.0), 1.6487212707001282, 1e-15);
  // Agrees with the ratio of normal densities.
  auto pdf = [](double x, double mu) { return std::exp(-0.5 * (x - mu) * (x - mu)); };
  for (double x : {-2.0, 0.3, 3.1}) EXPECT_NEAR(r(x), pdf(x, 1.0) / pdf(x, 0.0), 1e-12 * r(x));
  EXPECT_THROW(analytic_ratio_1d(0, 1, 0.0), InvalidArgument);
}
