// SPDX-License-Identifier: Apache-2.0
#include "layerpano/selector.hpp"

#include "selector_cases.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace layerpano;

namespace {

GaussianScene frozen_at(const Eigen::Vector3d& mean) {
  GaussianScene scene;
  Gaussian g;
  g.mean = mean;
  g.frozen = true;
  scene.append({g});
  return scene;
}

PointCloud point_at(const Eigen::Vector3d& p) {
  PointCloud pc;
  pc.resize(1);
  pc.positions.col(0) = p;
  pc.colors.col(0).setZero();
  pc.layer_ids[0] = 1;
  pc.source_pixels.col(0).setConstant(-1);
  return pc;
}

}  // namespace

TEST(Selector, CollinearInFrontIsActivated) {
  EXPECT_EQ(gaussian_selector(frozen_at({1, 0, 0}), point_at({2, 0, 0})), std::vector<Eigen::Index>{0});
}

TEST(Selector, CollinearBehindIsNotActivated) {
  EXPECT_TRUE(gaussian_selector(frozen_at({3, 0, 0}), point_at({2, 0, 0})).empty());
}

TEST(Selector, OffRayIsNotActivated) {
  EXPECT_TRUE(gaussian_selector(frozen_at({0, 1, 0}), point_at({2, 0, 0})).empty());
}

TEST(Selector, ActiveGaussiansAndOriginIgnored) {
  GaussianScene scene = frozen_at({1, 0, 0});
  scene.set_frozen(0, false);
  EXPECT_TRUE(gaussian_selector(scene, point_at({2, 0, 0})).empty());
  EXPECT_TRUE(gaussian_selector(frozen_at({0, 0, 0}), point_at({2, 0, 0})).empty());
  EXPECT_TRUE(gaussian_selector(frozen_at({1, 0, 0}), point_at({0, 0, 0})).empty());
  EXPECT_TRUE(gaussian_selector(frozen_at({1, 0, 0}), PointCloud{}).empty());
}

TEST(Selector, ToleranceBoundary) {
  std::mt19937_64 rng(1);
  const double tol = 0.5 * std::numbers::pi / 180.0;
  for (int k = 0; k < 200; ++k) {
    const Eigen::Vector3d d = oracle::random_direction(rng);
    const GaussianScene scene = frozen_at(d);
    EXPECT_EQ(gaussian_selector(scene, point_at(2 * oracle::tilt(rng, d, 0.9 * tol))).size(), 1u);
    EXPECT_TRUE(gaussian_selector(scene, point_at(2 * oracle::tilt(rng, d, 1.1 * tol))).empty());
  }
}

TEST(Selector, BadParametersRejected) {
  EXPECT_THROW(gaussian_selector(frozen_at({1, 0, 0}), point_at({2, 0, 0}), {}, -1.0), DomainError);
  EXPECT_THROW(gaussian_selector(frozen_at({1, 0, 0}), point_at({2, 0, 0}), {10.0, false}), DomainError);
}

TEST(Selector, MatchesBruteForce) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 12; ++trial) {
    const double tol = trial % 4 == 0 ? 0.0 : oracle::uniform(rng, 0.05, 5.0);
    const GridHashParams hash{oracle::uniform(rng, 1.0, 40.0), true};
    const auto c = oracle::random_selector_case(rng, 1 + static_cast<int>(rng() % 800),
                                                static_cast<int>(rng() % 800), tol);
    const auto fast = gaussian_selector(c.scene, c.points, hash, tol);
    ASSERT_EQ(fast, oracle::brute_force_selector(c.scene, c.points.positions, tol)) << "trial " << trial;
    ASSERT_EQ(fast, gaussian_selector_exhaustive(c.scene, c.points, tol));
  }
}

TEST(Selector, ExactCollinearWithZeroTolerance) {
  EXPECT_EQ(gaussian_selector(frozen_at({0, 0, 1.5}), point_at({0, 0, 3}), {}, 0.0).size(), 1u);
  EXPECT_EQ(gaussian_selector(frozen_at({0, -0.5, 0}), point_at({0, -4, 0}), {}, 0.0).size(), 1u);
}
