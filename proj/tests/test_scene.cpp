// Copyright 2026 The CoopSight Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Geometry>

#include "coopsight/scene.hpp"
#include "support.hpp"

namespace coopsight {
namespace {

using testing::box;
constexpr double kPi = std::numbers::pi;

/// Independent binning: walk the eight half-open sectors [c - 22.5, c + 22.5).
CardinalSector oracle_sector(double x, double y) {
  double deg = std::atan2(-y, x) * 180.0 / kPi;
  while (deg < 0) deg += 360.0;
  for (int s = 0; s < 8; ++s) {
    double lo = s * 45.0 - 22.5;
    double hi = s * 45.0 + 22.5;
    double d = deg;
    if (s == 0 && d >= 337.5) d -= 360.0;
    if (d >= lo && d < hi) return static_cast<CardinalSector>(s);
  }
  return CardinalSector::kN;
}

TEST(Range, SampleDistance) {
  const auto b = box("a", ObjectClass::kCar, 25.04, -27.33, 4, 2);
  EXPECT_NEAR(range_to(b), 37.06, 0.01);
}

TEST(Range, OriginAndTriangle) {
  auto b = box("a", ObjectClass::kCar, 0, 0, 4, 2);
  b.center.z() = 1.5;
  EXPECT_EQ(range_to(b), 0.0);
  b.center = {3, 4, 0};
  EXPECT_DOUBLE_EQ(range_to(b), 5.0);
}

TEST(Range, RotationInvariant) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-60, 60);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  for (int i = 0; i < 1000; ++i) {
    const auto b = box("a", ObjectClass::kCar, u(gen), u(gen), 4, 2);
    const Eigen::Rotation2Dd rot(ang(gen));
    const Eigen::Vector2d p = rot * b.center.head<2>();
    auto r = b;
    r.center.head<2>() = p;
    EXPECT_NEAR(range_to(r), range_to(b), 1e-9);
  }
}

TEST(Sector, OnAxisAndSample) {
  EXPECT_EQ(sector_of_point(10, 0), CardinalSector::kN);
  EXPECT_EQ(sector_of_point(0, -10), CardinalSector::kE);
  EXPECT_EQ(sector_of_point(-10, 0), CardinalSector::kS);
  EXPECT_EQ(sector_of_point(0, 10), CardinalSector::kW);
  // Ego facing north: the sample point lies to the front right.
  EXPECT_EQ(sector_of_point(25.04, -27.33), CardinalSector::kNE);
  // Map frame (x east, y north) via a quarter-turn heading offset.
  EXPECT_EQ(sector_of_point(25.04, -27.33, kPi / 2), CardinalSector::kSE);
  EXPECT_EQ(direction_word(CardinalSector::kSE), "southeast");
}

TEST(Sector, OriginIsUndefined) {
  EXPECT_THROW(sector_of_point(0, 0), Error);
  try {
    sector_of_point(0.0, 0.0);
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "undefined bearing");
  }
}

TEST(Sector, BoundaryTiesGoClockwise) {
  // Bearing 22.5 degrees sits between N and NE.
  const double a = 22.5 * kPi / 180.0;
  const double x = std::cos(a);
  const double y = -std::sin(a);
  const double deg = compass_bearing(x, y) * 180.0 / kPi;
  const auto expected = deg >= 22.5 ? CardinalSector::kNE : CardinalSector::kN;
  EXPECT_EQ(sector_of_point(x, y), expected);
  EXPECT_EQ(sector_of_point(1.0, -1.0), CardinalSector::kNE);
}

TEST(Sector, MatchesBinningOracle) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-100, 100);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(gen);
    const double y = u(gen);
    EXPECT_EQ(sector_of_point(x, y), oracle_sector(x, y)) << x << "," << y;
  }
}

TEST(Sector, RotationByFortyFiveStepsOnce) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> r(1, 80);
  std::uniform_int_distribution<int> s(0, 7);
  std::uniform_real_distribution<double> off(-20, 20);
  for (int i = 0; i < 1000; ++i) {
    // Stay clear of boundaries so rounding cannot straddle one.
    const double deg = s(gen) * 45.0 + off(gen);
    const double a = deg * kPi / 180.0;
    const double rad = r(gen);
    const double x = rad * std::cos(a);
    const double y = -rad * std::sin(a);
    const double b = a + kPi / 4;
    const int s0 = static_cast<int>(sector_of_point(x, y));
    const int s1 = static_cast<int>(sector_of_point(rad * std::cos(b), -rad * std::sin(b)));
    EXPECT_EQ((s0 + 1) % 8, s1);
  }
}

TEST(Footprint, AxisAligned) {
  const auto fp = footprint_corners(box("a", ObjectClass::kCar, 10, 0, 4, 2));
  std::vector<std::pair<double, double>> got;
  for (const auto& p : fp) got.emplace_back(p.x(), p.y());
  std::sort(got.begin(), got.end());
  const std::vector<std::pair<double, double>> want = {{8, -1}, {8, 1}, {12, -1}, {12, 1}};
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    EXPECT_NEAR(got[i].first, want[i].first, 1e-12);
    EXPECT_NEAR(got[i].second, want[i].second, 1e-12);
  }
}

TEST(Footprint, QuarterTurnSwapsExtents) {
  const auto fp = footprint_corners(box("a", ObjectClass::kCar, 10, 0, 4, 2, kPi / 2));
  double xmin = 1e9, xmax = -1e9, ymin = 1e9, ymax = -1e9;
  for (const auto& p : fp) {
    xmin = std::min(xmin, p.x());
    xmax = std::max(xmax, p.x());
    ymin = std::min(ymin, p.y());
    ymax = std::max(ymax, p.y());
  }
  EXPECT_NEAR(xmax - xmin, 2.0, 1e-12);
  EXPECT_NEAR(ymax - ymin, 4.0, 1e-12);
}

TEST(Footprint, CentroidAreaAndOrientation) {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(-50, 50);
  std::uniform_real_distribution<double> d(0.3, 15);
  std::uniform_real_distribution<double> yaw(-kPi, kPi);
  for (int i = 0; i < 1000; ++i) {
    const auto b = box("a", ObjectClass::kCar, u(gen), u(gen), d(gen), d(gen), yaw(gen));
    const auto fp = footprint_corners(b);
    Eigen::Vector2d c = Eigen::Vector2d::Zero();
    for (const auto& p : fp) c += p / 4.0;
    EXPECT_NEAR(c.x(), b.center.x(), 1e-9);
    EXPECT_NEAR(c.y(), b.center.y(), 1e-9);
    const double area = polygon_area({fp.begin(), fp.end()});
    EXPECT_GT(area, 0.0);
    EXPECT_NEAR(area, b.dims.x() * b.dims.y(), 1e-9);
  }
}

TEST(Footprint, BoxCornersBitLayout) {
  const auto b = box("a", ObjectClass::kCar, 10, 5, 4, 2, 0, 2);
  const auto corners = box_corners(b);
  for (int k = 0; k < 8; ++k) {
    EXPECT_NEAR(corners[k].x(), 10 + ((k & 1) ? 2 : -2), 1e-12);
    EXPECT_NEAR(corners[k].y(), 5 + ((k & 2) ? 1 : -1), 1e-12);
    EXPECT_NEAR(corners[k].z(), (k & 4) ? 2 : 0, 1e-12);
  }
}

TEST(Footprint, OverlapMatchesSampling) {
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> u(-6, 6);
  std::uniform_real_distribution<double> d(0.5, 5);
  std::uniform_real_distribution<double> yaw(-kPi, kPi);
  std::uniform_real_distribution<double> s(-1, 1);
  int misses = 0;
  for (int i = 0; i < 300; ++i) {
    const auto a = footprint_corners(box("a", ObjectClass::kCar, 0, 0, d(gen), d(gen), yaw(gen)));
    const auto b = footprint_corners(box("b", ObjectClass::kCar, u(gen), u(gen), d(gen), d(gen), yaw(gen)));
    // Sample points of b's interior and test containment in a.
    bool sampled = false;
    for (int k = 0; k < 4000 && !sampled; ++k) {
      const double p = 0.5 * (s(gen) + 1);
      const double q = 0.5 * (s(gen) + 1);
      const Eigen::Vector2d pt = b[0] + p * (b[1] - b[0]) + q * (b[3] - b[0]);
      sampled = convex_contains_strict(a, pt);
    }
    const bool sat = footprints_overlap(a, b);
    if (sampled) EXPECT_TRUE(sat);
    if (sat && !sampled) ++misses;
  }
  // Sampling can miss thin slivers of overlap.
  EXPECT_LE(misses, 6);
}

TEST(Validation, RejectsBadBoxesAndCameras) {
  auto b = box("a", ObjectClass::kCar, 1, 1, 4, 2);
  EXPECT_NO_THROW(b.validate());
  b.dims.x() = 0;
  EXPECT_THROW(b.validate(), ConfigError);
  auto cam = testing::cameras().front();
  EXPECT_NO_THROW(cam.validate());
  cam.rotation(0, 0) += 1e-3;
  EXPECT_THROW(cam.validate(), ConfigError);
}

TEST(Strings, RoundTrip) {
  for (const auto c : kAllClasses) EXPECT_EQ(class_from_string(to_string(c)), c);
  for (int s = 0; s < 8; ++s) {
    const auto sec = static_cast<CardinalSector>(s);
    EXPECT_EQ(sector_from_string(to_string(sec)), sec);
  }
  EXPECT_FALSE(class_from_string("tram"));
}

}  // namespace
}  // namespace coopsight
