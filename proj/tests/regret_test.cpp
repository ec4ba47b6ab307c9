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
#include "dpofl/regret.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "dpofl/errors.hpp"
#include "dpofl/random.hpp"

namespace dpofl {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

VectorXd RandomModel(GaussianStream& s, int d, double scale = 1.0) {
  VectorXd x(d);
  for (int j = 0; j < d; ++j) x[j] = scale * s.StandardNormal();
  return x;
}

TEST(OfflineOracleTest, SingleDatumPointsAlongFeature) {
  VectorXd a(3);
  a << 0.3, -0.2, 0.5;
  const MatrixXd features = a.transpose();
  const VectorXd labels = VectorXd::Ones(1);
  OracleOptions options;
  options.ridge = 1e-6;
  const OracleSolution sol = SolveOffline(features, labels, options);
  ASSERT_TRUE(sol.converged);
  const double cosine = sol.minimizer.dot(a) / (sol.minimizer.norm() * a.norm());
  EXPECT_NEAR(cosine, 1.0, 1e-10);
  EXPECT_LT(sol.min_value, std::log(2.0));

  // 1-D oracle: x = s a with sigmoid(-s q) = ridge s, q = ||a||^2.
  const double q = a.squaredNorm();
  double lo = 0.0, hi = 1e7;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    const double slope = -q / (1.0 + std::exp(mid * q)) + 1e-6 * mid * q;
    (slope < 0.0 ? lo : hi) = mid;
  }
  // ||grad|| <= tol with curvature about ridge along a bounds the error.
  EXPECT_NEAR(sol.minimizer.norm() / a.norm(), lo,
              kOracleTol / (options.ridge * a.norm()));
}

TEST(OfflineOracleTest, SymmetricPairStaysAtOrigin) {
  VectorXd a(2);
  a << 0.4, 0.1;
  MatrixXd features(2, 2);
  features << a.transpose(), a.transpose();
  VectorXd labels(2);
  labels << 1.0, -1.0;
  const OracleSolution sol = SolveOffline(features, labels);
  EXPECT_TRUE(sol.converged);
  EXPECT_NEAR(sol.minimizer.dot(a), 0.0, 1e-12);
  EXPECT_NEAR(sol.min_value, std::log(2.0), 1e-15);
  EXPECT_EQ(sol.ridge, 0.0);
}

TEST(OfflineOracleTest, NeverAboveStartAndConverges) {
  for (int k = 0; k < 5; ++k) {
    const StreamDataset data =
        GenerateSynthetic(4, 3, 5, 5, 0.1, 0.1, DeriveSeed(40, k));
    const OracleSolution sol = SolveGlobalOracle(data);
    EXPECT_LE(sol.min_value, std::log(2.0));
    EXPECT_TRUE(sol.converged);
    EXPECT_LE(sol.grad_norm_at_min, kOracleTol);
  }
}

TEST(OfflineOracleTest, SeparableDataFallsBackToRidge) {
  MatrixXd features(2, 1);
  features << 1.0, -1.0;
  VectorXd labels(2);
  labels << 1.0, -1.0;
  // The unregularized loss has no minimizer but its gradient still decays
  // below the tolerance, so the plain run converges.
  const OracleSolution plain = SolveOffline(features, labels);
  EXPECT_TRUE(plain.converged);
  EXPECT_EQ(plain.ridge, 0.0);
  // An iteration cap that stops the plain run triggers the ridge retry.
  OracleOptions options;
  options.max_iters = 2;
  const OracleSolution capped = SolveOffline(features, labels, options);
  EXPECT_EQ(capped.ridge, kRidgeFallback);
  EXPECT_FALSE(capped.converged);
}

TEST(OfflineOracleTest, RejectsEmptySet) {
  EXPECT_THROW(SolveOffline(MatrixXd(0, 2), VectorXd(0)), InvalidArgument);
}

MatrixXd OracleModels(const std::vector<OracleSolution>& oracles) {
  MatrixXd models(oracles.size() + 1, oracles[0].minimizer.size());
  for (std::size_t r = 0; r < oracles.size(); ++r) {
    models.row(r) = oracles[r].minimizer.transpose();
  }
  models.row(oracles.size()) = oracles.back().minimizer.transpose();
  return models;
}

TEST(DynamicRegretTest, OracleModelsHaveTinyRegret) {
  const StreamDataset data = GenerateSynthetic(3, 6, 2, 4, 0.1, 0.1, 41);
  const auto oracles = SolvePerRoundOracles(data);
  const auto regret = ComputeDynamicRegret(OracleModels(oracles), data, oracles);
  EXPECT_LE(regret.total, 3 * 2 * 6 * 1e-6);
  EXPECT_NEAR(regret.total, regret.per_round.sum(), 1e-15);
}

TEST(DynamicRegretTest, SingleLoss) {
  const StreamDataset data = GenerateSynthetic(1, 1, 1, 3, 0.1, 0.1, 42);
  OracleOptions options;
  options.ridge = 1e-6;
  const auto oracles = SolvePerRoundOracles(data, options);
  MatrixXd models = MatrixXd::Zero(2, 3);
  models(0, 1) = 0.5;
  const auto regret = ComputeDynamicRegret(models, data, oracles);
  const double expected =
      LogisticLoss(models.row(0).transpose(), data.Datum(0, 0, 0)) -
      oracles[0].min_value;
  EXPECT_NEAR(regret.total, expected, 1e-15);
}

TEST(DynamicRegretTest, MatchesDoubleLoop) {
  const int n = 2, rounds = 3, tau = 2, d = 2;
  const StreamDataset data = GenerateSynthetic(n, rounds, tau, d, 0.1, 0.1, 43);
  const auto oracles = SolvePerRoundOracles(data);
  GaussianStream s(44);
  MatrixXd models(rounds + 1, d);
  for (int r = 0; r <= rounds; ++r) models.row(r) = RandomModel(s, d).transpose();
  double expected = 0.0;
  for (int r = 0; r < rounds; ++r) {
    for (int t = 0; t < tau; ++t) {
      double inner = 0.0;
      for (int i = 0; i < n; ++i) {
        inner += LogisticLoss(models.row(r).transpose(), data.Datum(i, r, t)) -
                 oracles[r].min_value;
      }
      expected += inner / n;
    }
  }
  EXPECT_NEAR(ComputeDynamicRegret(models, data, oracles).total, expected,
              1e-10);
}

TEST(DynamicRegretTest, ClampsOracleImprecision) {
  const StreamDataset data = GenerateSynthetic(2, 2, 2, 3, 0.1, 0.1, 45);
  auto oracles = SolvePerRoundOracles(data);
  oracles[1].min_value += 1.0;  // a comparator that is far too high
  const auto regret =
      ComputeDynamicRegret(OracleModels(oracles), data, oracles);
  EXPECT_EQ(regret.clamped, 1);
  EXPECT_DOUBLE_EQ(regret.per_round[1], -2 * 2 * kRegretSlack);
  EXPECT_EQ(regret.warnings.size(), 1u);
}

TEST(DynamicRegretTest, MissingOracle) {
  const StreamDataset data = GenerateSynthetic(2, 3, 1, 2, 0.1, 0.1, 46);
  auto oracles = SolvePerRoundOracles(data);
  oracles.pop_back();
  EXPECT_THROW(ComputeDynamicRegret(MatrixXd::Zero(4, 2), data, oracles),
               InvalidArgument);
}

TEST(StaticRegretTest, GlobalMinimizerGivesZero) {
  const StreamDataset data = GenerateSynthetic(3, 4, 2, 3, 0.1, 0.1, 47);
  const OracleSolution global = SolveGlobalOracle(data);
  const MatrixXd models = global.minimizer.transpose().replicate(5, 1);
  EXPECT_LE(std::abs(ComputeStaticRegret(models, data, global)),
            4 * 2 * 1e-6);
}

TEST(StaticRegretTest, DynamicDominatesStaticUpToSlack) {
  for (int k = 0; k < 10; ++k) {
    const StreamDataset data =
        GenerateSynthetic(2, 4, 3, 3, 0.1, 0.1, DeriveSeed(48, k));
    GaussianStream s(DeriveSeed(49, k));
    MatrixXd models(5, 3);
    for (int r = 0; r < 5; ++r) models.row(r) = RandomModel(s, 3).transpose();
    const double dynamic =
        ComputeDynamicRegret(models, data, SolvePerRoundOracles(data)).total;
    const double stat = ComputeStaticRegret(models, data, SolveGlobalOracle(data));
    EXPECT_GE(dynamic, stat - 4 * 3 * 1e-6);
  }
}

TEST(StaticRegretTest, StationaryStreamRegretsCoincide) {
  const StreamDataset base = GenerateSynthetic(3, 1, 2, 4, 0.1, 0.1, 50);
  const StreamDataset data = TileFirstRound(base, 6);
  GaussianStream s(51);
  MatrixXd models(7, 4);
  for (int r = 0; r < 7; ++r) models.row(r) = RandomModel(s, 4).transpose();
  const double dynamic =
      ComputeDynamicRegret(models, data, SolvePerRoundOracles(data)).total;
  const double stat = ComputeStaticRegret(models, data, SolveGlobalOracle(data));
  EXPECT_LE(std::abs(dynamic - stat), 6 * 2 * 2e-6);
}

TEST(LossErrorTest, ValuesAtReferencePoints) {
  const StreamDataset data = GenerateSynthetic(3, 4, 2, 5, 0.1, 0.1, 52);
  const OracleSolution global = SolveGlobalOracle(data);
  EXPECT_NEAR(LossError(global.minimizer, data, global), 0.0, 1e-8);
  const double at_zero = LossError(VectorXd::Zero(5), data, global);
  EXPECT_NEAR(at_zero, std::log(2.0) - global.min_value, 1e-15);
  EXPECT_GE(at_zero, 0.0);
  GaussianStream s(53);
  for (int k = 0; k < 50; ++k) {
    EXPECT_GE(LossError(RandomModel(s, 5, 3.0), data, global), -1e-6);
  }
}

TEST(LossErrorTest, SeriesMatchesPointwise) {
  const StreamDataset data = GenerateSynthetic(2, 5, 3, 4, 0.1, 0.1, 54);
  const OracleSolution global = SolveGlobalOracle(data);
  GaussianStream s(55);
  MatrixXd models(70, 4);
  for (int r = 0; r < 70; ++r) models.row(r) = RandomModel(s, 4).transpose();
  const VectorXd series = LossErrorSeries(models, data, global);
  ASSERT_EQ(series.size(), 70);
  for (int r = 0; r < 70; ++r) {
    EXPECT_NEAR(series[r], LossError(models.row(r).transpose(), data, global),
                1e-13);
  }
}

TEST(RegretReportTest, Consistency) {
  const StreamDataset data = GenerateSynthetic(2, 5, 2, 3, 0.1, 0.1, 56);
  GaussianStream s(57);
  MatrixXd models(6, 3);
  for (int r = 0; r < 6; ++r) models.row(r) = RandomModel(s, 3, 0.3).transpose();
  const RegretReport report = BuildRegretReport(models, data);
  EXPECT_EQ(report.loss_error_series.size(), 5);
  EXPECT_EQ(report.per_round_dynamic.size(), 5);
  EXPECT_NEAR(report.dynamic_regret, report.per_round_dynamic.sum(), 1e-15);
  EXPECT_NEAR(report.loss_error_series[4],
              LossError(models.row(5).transpose(), data, report.oracle_global),
              1e-13);
}

TEST(GradientNormDiagnosticTest, CountsPoints) {
  const StreamDataset data = GenerateSynthetic(3, 2, 3, 4, 0.1, 0.1, 58);
  const auto oracles = SolvePerRoundOracles(data);
  const auto diag = CheckGradientNormIdentity(data, 1, oracles[1],
                                              SmoothnessEstimate(data), 25, 59);
  EXPECT_EQ(diag.points, 25);
  EXPECT_GE(diag.violations, 0);
  EXPECT_GE(diag.max_ratio, 0.0);
}

}  // namespace
}  // namespace dpofl
