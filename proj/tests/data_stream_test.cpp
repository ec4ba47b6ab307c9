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
#include "dpofl/data_stream.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "dpofl/errors.hpp"
#include "dpofl/random.hpp"

namespace dpofl {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST(GeneratorTest, ShapeAndNormalization) {
  const StreamDataset data = GenerateSynthetic(4, 6, 3, 5, 0.1, 0.1, 1);
  EXPECT_EQ(data.size(), 4 * 6 * 3);
  EXPECT_EQ(data.dim(), 5);
  EXPECT_LE(data.MaxFeatureNorm(), 1.0 + 1e-15);
  for (Eigen::Index k = 0; k < data.size(); ++k) {
    EXPECT_TRUE(data.labels()[k] == 1.0 || data.labels()[k] == -1.0);
  }
}

TEST(GeneratorTest, SameSeedSameData) {
  const StreamDataset a = GenerateSynthetic(3, 4, 2, 5, 0.1, 0.1, 17);
  const StreamDataset b = GenerateSynthetic(3, 4, 2, 5, 0.1, 0.1, 17);
  EXPECT_EQ(a.features(), b.features());
  EXPECT_EQ(a.labels(), b.labels());
  const StreamDataset c = GenerateSynthetic(3, 4, 2, 5, 0.1, 0.1, 18);
  EXPECT_NE(a.features(), c.features());
}

// Replays the documented per-learner draw order with a fresh stream.
TEST(GeneratorTest, MatchesDocumentedDrawOrder) {
  const int n = 2, rounds = 3, tau = 2, d = 3;
  const double alpha = 0.5, beta = 0.25;
  const std::uint64_t seed = 99;
  const StreamDataset data =
      GenerateSynthetic(n, rounds, tau, d, alpha, beta, seed, false);
  for (int i = 0; i < n; ++i) {
    GaussianStream s(DeriveSeed(seed, i));
    const double u = std::sqrt(alpha) * s.StandardNormal();
    const double c = std::sqrt(beta) * s.StandardNormal();
    VectorXd w(d), v(d);
    for (int j = 0; j < d; ++j) w[j] = u + s.StandardNormal();
    for (int j = 0; j < d; ++j) v[j] = c + s.StandardNormal();
    for (int r = 0; r < rounds; ++r) {
      for (int t = 0; t < tau; ++t) {
        VectorXd a(d);
        for (int j = 0; j < d; ++j) {
          a[j] = v[j] + std::pow(j + 1.0, -0.6) * s.StandardNormal();
        }
        const double p = 1.0 / (1.0 + std::exp(-a.dot(w)));
        const double label = s.Uniform() < p ? 1.0 : -1.0;
        const ClientDatum datum = data.Datum(i, r, t);
        EXPECT_TRUE(datum.features.isApprox(a, 1e-14));
        EXPECT_EQ(datum.label, label);
      }
    }
  }
}

TEST(GeneratorTest, HomogeneousWhenAlphaBetaZero) {
  // With zero heterogeneity every learner draws w and v around the origin;
  // the per-learner offsets u and c vanish, so the seed-coupled draws differ
  // from the heterogeneous ones by exactly the offsets.
  const StreamDataset zero = GenerateSynthetic(3, 1, 1, 4, 0.0, 0.0, 5, false);
  const StreamDataset het = GenerateSynthetic(3, 1, 1, 4, 0.0, 0.1, 5, false);
  for (int i = 0; i < 3; ++i) {
    GaussianStream s(DeriveSeed(5, i));
    s.StandardNormal();
    const double c = std::sqrt(0.1) * s.StandardNormal();
    const VectorXd shift = het.Datum(i, 0, 0).features -
                           zero.Datum(i, 0, 0).features;
    EXPECT_TRUE(shift.isApprox(VectorXd::Constant(4, c), 1e-12));
  }
}

double MeanPairwiseCenterDistance(double alpha, double beta,
                                  std::uint64_t seed) {
  const int n = 10, rounds = 200, d = 5;
  const StreamDataset data =
      GenerateSynthetic(n, rounds, 1, d, alpha, beta, seed, false);
  MatrixXd centers = MatrixXd::Zero(n, d);
  for (int i = 0; i < n; ++i) {
    for (int r = 0; r < rounds; ++r) {
      centers.row(i) += data.Datum(i, r, 0).features.transpose();
    }
  }
  centers /= rounds;
  double total = 0.0;
  int pairs = 0;
  for (int i = 0; i < n; ++i) {
    for (int k = i + 1; k < n; ++k, ++pairs) {
      total += (centers.row(i) - centers.row(k)).norm();
    }
  }
  return total / pairs;
}

TEST(GeneratorTest, HeterogeneitySpreadsLearners) {
  double het = 0.0, hom = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    het += MeanPairwiseCenterDistance(0.1, 0.1, DeriveSeed(1234, s));
    hom += MeanPairwiseCenterDistance(0.0, 0.0, DeriveSeed(1234, s));
  }
  EXPECT_GT(het, hom);
}

TEST(GeneratorTest, RejectsBadArguments) {
  EXPECT_THROW(GenerateSynthetic(0, 1, 1, 1, 0, 0, 1), InvalidArgument);
  EXPECT_THROW(GenerateSynthetic(1, 1, 1, 1, -0.1, 0, 1), InvalidArgument);
}

TEST(StreamDatasetTest, IndexLayout) {
  const StreamDataset data = GenerateSynthetic(3, 4, 2, 2, 0.1, 0.1, 3);
  EXPECT_EQ(data.Index(0, 0, 0), 0);
  EXPECT_EQ(data.Index(1, 0, 1), 3);
  EXPECT_EQ(data.Index(2, 3, 1), (3 * 3 + 2) * 2 + 1);
  EXPECT_THROW(data.Index(3, 0, 0), InvalidArgument);
  EXPECT_THROW(data.RoundFeatures(4), InvalidArgument);
  EXPECT_EQ(data.RoundFeatures(1).rows(), 6);
  EXPECT_EQ(data.LearnerFeatures(2, 1).row(0), data.features().row(10));
}

TEST(StreamDatasetTest, ReplaceDatumTouchesOneRow) {
  const StreamDataset data = GenerateSynthetic(2, 3, 2, 3, 0.1, 0.1, 4);
  ClientDatum datum{VectorXd::Constant(3, 0.1), -1};
  const StreamDataset other = data.WithReplacedDatum(1, 2, 0, datum);
  const Eigen::Index k = data.Index(1, 2, 0);
  for (Eigen::Index row = 0; row < data.size(); ++row) {
    if (row == k) continue;
    EXPECT_EQ(data.features().row(row), other.features().row(row));
    EXPECT_EQ(data.labels()[row], other.labels()[row]);
  }
  EXPECT_EQ(other.Datum(1, 2, 0).features, datum.features);
  EXPECT_EQ(other.Datum(1, 2, 0).label, -1);
}

TEST(StreamDatasetTest, TileFirstRound) {
  const StreamDataset base = GenerateSynthetic(2, 3, 2, 3, 0.1, 0.1, 5);
  const StreamDataset tiled = TileFirstRound(base, 4);
  EXPECT_EQ(tiled.rounds(), 4);
  for (int r = 0; r < 4; ++r) {
    EXPECT_EQ(tiled.RoundFeatures(r), base.RoundFeatures(0));
    EXPECT_EQ(tiled.RoundLabels(r), base.RoundLabels(0));
  }
}

TEST(StreamDatasetTest, CsvRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() /
                    "dpofl_data_stream_test" / "data.csv";
  const StreamDataset data = GenerateSynthetic(3, 2, 2, 4, 0.1, 0.2, 6);
  SaveDatasetCsv(path, data);
  const StreamDataset back = LoadDatasetCsv(path);
  EXPECT_EQ(back.features(), data.features());
  EXPECT_EQ(back.labels(), data.labels());
  EXPECT_EQ(back.learners(), 3);
  EXPECT_EQ(back.rounds(), 2);
  EXPECT_EQ(back.local_steps(), 2);
  EXPECT_EQ(back.params().beta, 0.2);
  EXPECT_EQ(back.params().feature_scale, data.params().feature_scale);
  std::filesystem::remove_all(path.parent_path());
}

TEST(LogisticLossTest, ZeroModel) {
  const VectorXd x = VectorXd::Zero(3);
  const VectorXd a = VectorXd::Random(3);
  EXPECT_DOUBLE_EQ(LogisticLoss(x, a, 1.0), std::log(2.0));
  EXPECT_DOUBLE_EQ(LogisticLoss(x, a, -1.0), std::log(2.0));
}

TEST(LogisticLossTest, StableAtLargeMargins) {
  const double tail = std::log1p(std::exp(-20.0));
  EXPECT_NEAR(LogisticLossFromMargin(20.0), 2.06e-9, 1e-11);
  EXPECT_NEAR(LogisticLossFromMargin(20.0), tail, 1e-24);
  EXPECT_NEAR(LogisticLossFromMargin(-20.0), 20.0000000021, 1e-10);
  EXPECT_NEAR(LogisticLossFromMargin(-20.0), 20.0 + tail, 1e-14);
  for (double m : {-1e4, -700.0, 700.0, 1e4}) {
    const double loss = LogisticLossFromMargin(m);
    EXPECT_TRUE(std::isfinite(loss));
    EXPECT_GE(loss, 0.0);
  }
  EXPECT_NEAR(LogisticLossFromMargin(-1e4), 1e4, 1e-9);
}

TEST(LogisticLossTest, MarginUsesLabel) {
  VectorXd x(2), a(2);
  x << 2.0, 0.0;
  a << 10.0, 3.0;
  EXPECT_NEAR(LogisticLoss(x, a, 1.0), LogisticLossFromMargin(20.0), 1e-24);
  EXPECT_NEAR(LogisticLoss(x, a, -1.0), LogisticLossFromMargin(-20.0), 1e-12);
}

TEST(LogisticGradientTest, ZeroModel) {
  VectorXd a(3);
  a << 0.2, -0.4, 0.1;
  const VectorXd g = LogisticGradient(VectorXd::Zero(3), a, 1.0);
  EXPECT_TRUE(g.isApprox(-0.5 * a));
  const VectorXd g_neg = LogisticGradient(VectorXd::Zero(3), a, -1.0);
  EXPECT_TRUE(g_neg.isApprox(0.5 * a));
}

TEST(LogisticGradientTest, ClippingScalesToBound) {
  // At x = 0 the raw gradient is -0.5 b a; ||a|| = 4 gives norm 2.
  VectorXd a(2);
  a << 0.0, 4.0;
  const VectorXd raw = LogisticGradient(VectorXd::Zero(2), a, 1.0);
  ASSERT_NEAR(raw.norm(), 2.0, 1e-15);
  const VectorXd clipped =
      LogisticGradientClipped(VectorXd::Zero(2), a, 1.0, 1.0);
  EXPECT_NEAR(clipped.norm(), 1.0, 1e-15);
  EXPECT_TRUE(clipped.isApprox(raw / 2.0));
}

TEST(LogisticGradientTest, ClippingInactiveForSmallFeatures) {
  GaussianStream s(8);
  for (int k = 0; k < 100; ++k) {
    VectorXd x(4), a(4);
    for (int j = 0; j < 4; ++j) x[j] = 5.0 * s.StandardNormal();
    for (int j = 0; j < 4; ++j) a[j] = s.StandardNormal();
    a *= s.Uniform() / a.norm();
    const double label = s.Uniform() < 0.5 ? -1.0 : 1.0;
    EXPECT_EQ(LogisticGradientClipped(x, a, label, 1.0),
              LogisticGradient(x, a, label));
  }
}

TEST(LogisticGradientTest, MatchesCentralDifferences) {
  GaussianStream s(21);
  const double h = 1e-5;
  for (int k = 0; k < 50; ++k) {
    VectorXd x(5), a(5);
    for (int j = 0; j < 5; ++j) x[j] = s.StandardNormal();
    for (int j = 0; j < 5; ++j) a[j] = s.StandardNormal();
    a /= 2.0 * a.norm();
    const double label = s.Uniform() < 0.5 ? -1.0 : 1.0;
    VectorXd fd(5);
    for (int j = 0; j < 5; ++j) {
      VectorXd up = x, down = x;
      up[j] += h;
      down[j] -= h;
      fd[j] = (LogisticLoss(up, a, label) - LogisticLoss(down, a, label)) /
              (2.0 * h);
    }
    const VectorXd g = LogisticGradientClipped(x, a, label, 1.0);
    EXPECT_LE((g - fd).norm(), 1e-6 * std::max(1.0, g.norm()));
  }
}

TEST(RoundLossTest, ZeroModelIsLogTwo) {
  const StreamDataset data = GenerateSynthetic(3, 2, 2, 4, 0.1, 0.1, 9);
  EXPECT_DOUBLE_EQ(RoundLossesAt(VectorXd::Zero(4), data, 1).mean,
                   std::log(2.0));
}

TEST(RoundLossTest, SingleDatum) {
  const StreamDataset data = GenerateSynthetic(1, 2, 1, 3, 0.1, 0.1, 10);
  const VectorXd x = VectorXd::Constant(3, 0.3);
  EXPECT_EQ(RoundLossesAt(x, data, 1).mean,
            LogisticLoss(x, data.Datum(0, 1, 0)));
}

TEST(RoundLossTest, MatchesBruteForce) {
  const StreamDataset data = GenerateSynthetic(3, 3, 4, 5, 0.1, 0.1, 11);
  GaussianStream s(12);
  VectorXd x(5);
  for (int j = 0; j < 5; ++j) x[j] = s.StandardNormal();
  for (int r = 0; r < 3; ++r) {
    double total = 0.0;
    for (int t = 3; t >= 0; --t) {
      for (int i = 2; i >= 0; --i) total += LogisticLoss(x, data.Datum(i, r, t));
    }
    const RoundLosses losses = RoundLossesAt(x, data, r);
    EXPECT_NEAR(losses.mean, total / 12.0, 1e-12);
    EXPECT_EQ(losses.losses.size(), 12);
  }
}

TEST(SmoothnessTest, QuarterOfMaxSquaredNorm) {
  const StreamDataset data = GenerateSynthetic(2, 2, 2, 3, 0.1, 0.1, 13);
  const double max_sq = data.features().rowwise().squaredNorm().maxCoeff();
  EXPECT_DOUBLE_EQ(SmoothnessEstimate(data), max_sq / 4.0);
}

}  // namespace
}  // namespace dpofl
