/*
 * Copyright 2026 The dpofl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "dpofl/privacy.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <numbers>
#include <set>

#include "dpofl/errors.hpp"
#include "dpofl/random.hpp"

namespace dpofl {
namespace {

// Closed forms re-evaluated in extended precision.
long double CorrelatedReference(long double eps, long double delta,
                                long double clip, long double gamma) {
  const long double l = std::log(1.0L / delta);
  return 4.0L * gamma * gamma * clip * clip * (2.0L * l + eps) / (eps * eps);
}

long double ZcdpRhoReference(long double eps, long double delta) {
  const long double l = std::log(1.0L / delta);
  const long double diff = std::sqrt(eps + l) - std::sqrt(l);
  return diff * diff;
}

TEST(CalibrationTest, CorrelatedGolden) {
  const auto calib = CalibrateCorrelated({5.0, 1e-3}, 1.0, 1.0);
  EXPECT_NEAR(calib.variance, 3.010482, 1e-5);
  EXPECT_NEAR(calib.variance,
              static_cast<double>(CorrelatedReference(5, 1e-3L, 1, 1)),
              1e-13);
  EXPECT_NEAR(calib.stddev * calib.stddev, calib.variance, 1e-14);
  EXPECT_EQ(calib.mechanism, Mechanism::kCorrelatedMf);
}

TEST(CalibrationTest, CorrelatedScalesWithClipSquared) {
  const double base = CalibrateCorrelated({5.0, 1e-3}, 1.0, 1.0).variance;
  const double doubled = CalibrateCorrelated({5.0, 1e-3}, 2.0, 1.0).variance;
  EXPECT_NEAR(doubled, 12.041928, 1e-5);
  EXPECT_NEAR(doubled, 4.0 * base, 1e-12);
}

TEST(CalibrationTest, CorrelatedWeakPrivacyLimit) {
  const double v = CalibrateCorrelated({1000.0, 1e-3}, 1.0, 1.0).variance;
  EXPECT_NEAR(v, 0.004055, 1e-6);
  EXPECT_LT(v, CalibrateCorrelated({5.0, 1e-3}, 1.0, 1.0).variance);
}

TEST(CalibrationTest, ZcdpAgainstExtendedPrecision) {
  for (double eps : {5.0, 1.0}) {
    const long double rho = ZcdpRhoReference(eps, 1e-3L);
    const auto calib = CalibrateIndependentZcdp({eps, 1e-3}, 1.0);
    EXPECT_NEAR(calib.rho, static_cast<double>(rho), 1e-14);
    EXPECT_NEAR(calib.variance, static_cast<double>(2.0L / rho),
                1e-12 * calib.variance);
  }
}

TEST(CalibrationTest, ZcdpStrictBudget) {
  const auto calib = CalibrateIndependentZcdp({1.0, 1e-3}, 1.0);
  EXPECT_NEAR(calib.rho, 0.033787, 1e-6);
  EXPECT_NEAR(calib.variance, 59.194, 0.01);
}

TEST(CalibrationTest, ZcdpQuadraticInClip) {
  const double one = CalibrateIndependentZcdp({3.0, 1e-5}, 1.0).variance;
  const double two = CalibrateIndependentZcdp({3.0, 1e-5}, 2.0).variance;
  EXPECT_DOUBLE_EQ(two, 4.0 * one);
}

TEST(CalibrationTest, RejectsBadBudgets) {
  EXPECT_THROW(CalibrateCorrelated({0.0, 1e-3}, 1.0, 1.0), InvalidArgument);
  EXPECT_THROW(CalibrateCorrelated({1.0, 1.0}, 1.0, 1.0), InvalidArgument);
  EXPECT_THROW(CalibrateIndependentZcdp({1.0, 0.0}, 1.0), InvalidArgument);
  EXPECT_THROW(CalibrateIndependentZcdp({1.0, 1e-3}, -1.0), InvalidArgument);
}

TEST(MechanismTagTest, RoundTrip) {
  for (auto m : {Mechanism::kCorrelatedMf, Mechanism::kIndependentZcdp,
                 Mechanism::kNone}) {
    EXPECT_EQ(ParseMechanism(ToString(m)), m);
  }
  EXPECT_THROW(ParseMechanism("laplace"), InvalidArgument);
}

TEST(NoiseMatrixTest, ZeroVariance) {
  const auto xi = SampleNoiseMatrix(7, 3, NoNoise(1.0), 42);
  EXPECT_TRUE(xi.isZero(0.0));
}

TEST(NoiseMatrixTest, MomentsWithinBounds) {
  NoiseCalibration calib;
  calib.variance = 4.0;
  calib.stddev = 2.0;
  calib.mechanism = Mechanism::kCorrelatedMf;
  const auto xi = SampleNoiseMatrix(2000, 5, calib, 123);
  const double n = static_cast<double>(xi.size());
  const double mean = xi.sum() / n;
  const double var = (xi.array() - mean).square().sum() / (n - 1.0);
  EXPECT_LT(std::abs(mean), 0.08);
  EXPECT_NEAR(var, 4.0, 0.4);
}

TEST(NoiseMatrixTest, SameSeedSameMatrix) {
  const auto calib = CalibrateCorrelated({5.0, 1e-3}, 1.0, 1.0);
  EXPECT_EQ(SampleNoiseMatrix(10, 4, calib, 9),
            SampleNoiseMatrix(10, 4, calib, 9));
  EXPECT_NE(SampleNoiseMatrix(10, 4, calib, 9),
            SampleNoiseMatrix(10, 4, calib, 10));
}

TEST(NoiseMatrixTest, RowMajorFillOrder) {
  NoiseCalibration calib;
  calib.variance = 1.0;
  calib.stddev = 1.0;
  const auto xi = SampleNoiseMatrix(3, 2, calib, 77);
  GaussianStream stream(77);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 2; ++c) EXPECT_EQ(xi(r, c), stream.StandardNormal());
  }
}

TEST(SensitivityTest, IdenticalStacks) {
  const Eigen::MatrixXd g = Eigen::MatrixXd::Random(5, 3);
  const auto check =
      CheckSensitivity(Eigen::MatrixXd::Identity(5, 5), g, g, 1.0, 1.0);
  EXPECT_EQ(check.lhs, 0.0);
  EXPECT_TRUE(check.ok);
  EXPECT_EQ(check.rows_changed, 0);
  EXPECT_EQ(check.changed_row, -1);
}

TEST(SensitivityTest, ExtremalSingleRow) {
  const double clip = 1.5;
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(4, 2);
  Eigen::MatrixXd g_prime = g;
  g(2, 0) = clip;
  g_prime(2, 0) = -clip;
  const auto check =
      CheckSensitivity(Eigen::MatrixXd::Identity(4, 4), g, g_prime, clip, 1.0);
  EXPECT_DOUBLE_EQ(check.lhs, 2.0 * clip);
  EXPECT_DOUBLE_EQ(check.bound, 2.0 * clip);
  EXPECT_TRUE(check.ok);
  EXPECT_EQ(check.rows_changed, 1);
  EXPECT_EQ(check.changed_row, 2);
}

TEST(SensitivityTest, ViolationReported) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(3, 1);
  Eigen::MatrixXd g_prime = g;
  g(0, 0) = 3.0;
  const auto check =
      CheckSensitivity(Eigen::MatrixXd::Identity(3, 3), g, g_prime, 1.0, 1.0);
  EXPECT_FALSE(check.ok);
}

TEST(GaussianStreamTest, UniformInOpenInterval) {
  GaussianStream stream(5);
  for (int k = 0; k < 10000; ++k) {
    const double u = stream.Uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(GaussianStreamTest, BoxMullerPairOrder) {
  std::mt19937_64 engine(31);
  auto uniform = [&] {
    return (static_cast<double>(engine() >> 11) + 0.5) * 0x1.0p-53;
  };
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  GaussianStream stream(31);
  EXPECT_DOUBLE_EQ(stream.StandardNormal(), radius * std::cos(angle));
  EXPECT_DOUBLE_EQ(stream.StandardNormal(), radius * std::sin(angle));
}

TEST(SeedDerivationTest, DistinctChildren) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(DeriveSeed(99, i));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_NE(DeriveSeed(1, 0), DeriveSeed(2, 0));
  EXPECT_EQ(DeriveSeed(1, 5), DeriveSeed(1, 5));
}

}  // namespace
}  // namespace dpofl
