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
#ifndef DPOFL_DATA_STREAM_HPP_
#define DPOFL_DATA_STREAM_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>

namespace dpofl {

struct ClientDatum {
  Eigen::VectorXd features;
  int label = 1;  // -1 or +1
};

struct GeneratorParams {
  double alpha = 0.0;
  double beta = 0.0;
  std::uint64_t seed = 0;
  bool normalize = true;  // rescale so every ||a|| <= 1
  double feature_scale = 1.0;  // divisor applied when normalizing
};

// n learners x R rounds x tau local steps, one datum per (i, r, t) slot.
// Samples are stored row-wise in (r, i, t) order so a round, and a learner's
// slice of a round, are contiguous blocks.
class StreamDataset {
 public:
  StreamDataset(int learners, int rounds, int local_steps,
                Eigen::MatrixXd features, Eigen::VectorXd labels,
                GeneratorParams params = {});

  int learners() const { return learners_; }
  int rounds() const { return rounds_; }
  int local_steps() const { return local_steps_; }
  int dim() const { return static_cast<int>(features_.cols()); }
  Eigen::Index size() const { return features_.rows(); }
  const GeneratorParams& params() const { return params_; }

  Eigen::Index Index(int learner, int round, int step) const;
  ClientDatum Datum(int learner, int round, int step) const;

  const Eigen::MatrixXd& features() const { return features_; }
  const Eigen::VectorXd& labels() const { return labels_; }

  // tau x d block for learner i in round r.
  auto LearnerFeatures(int learner, int round) const {
    return features_.middleRows(Index(learner, round, 0), local_steps_);
  }
  auto LearnerLabels(int learner, int round) const {
    return labels_.segment(Index(learner, round, 0), local_steps_);
  }
  // (n tau) x d block for round r.
  auto RoundFeatures(int round) const {
    CheckRound(round);
    return features_.middleRows(RoundOffset(round), SamplesPerRound());
  }
  auto RoundLabels(int round) const {
    CheckRound(round);
    return labels_.segment(RoundOffset(round), SamplesPerRound());
  }

  StreamDataset WithReplacedDatum(int learner, int round, int step,
                                  const ClientDatum& datum) const;

  double MaxFeatureNorm() const;

 private:
  void CheckRound(int round) const;
  Eigen::Index SamplesPerRound() const {
    return static_cast<Eigen::Index>(learners_) * local_steps_;
  }
  Eigen::Index RoundOffset(int round) const {
    return static_cast<Eigen::Index>(round) * SamplesPerRound();
  }

  int learners_;
  int rounds_;
  int local_steps_;
  Eigen::MatrixXd features_;
  Eigen::VectorXd labels_;
  GeneratorParams params_;
};

// Heterogeneous logistic-regression stream. Per learner i, on its own
// Gaussian substream DeriveSeed(seed, i):
//   u_i ~ N(0, alpha), c_i ~ N(0, beta)            (alpha, beta are variances)
//   w_i[j] ~ N(u_i, 1), v_i[j] ~ N(c_i, 1)
//   a ~ N(v_i, diag(j^-1.2)),  j = 1..d
//   b = +1 with probability sigmoid(<a, w_i>), else -1
// Features are then divided by the dataset-wide max norm (when it exceeds 1)
// so that ||a|| <= 1.
StreamDataset GenerateSynthetic(int learners, int rounds, int local_steps,
                                int dim, double alpha, double beta,
                                std::uint64_t seed, bool normalize = true);

// Repeats round 0 of `base` for every round (a stationary stream).
StreamDataset TileFirstRound(const StreamDataset& base, int rounds);

double Sigmoid(double z);

// log(1 + exp(-<x, a> b)), stable for large |<x, a>|.
double LogisticLoss(const Eigen::Ref<const Eigen::VectorXd>& x,
                    const Eigen::Ref<const Eigen::VectorXd>& features,
                    double label);
inline double LogisticLoss(const Eigen::Ref<const Eigen::VectorXd>& x,
                           const ClientDatum& datum) {
  return LogisticLoss(x, datum.features, datum.label);
}
// log(1 + exp(-m)) for a margin m.
double LogisticLossFromMargin(double margin);

Eigen::VectorXd LogisticGradient(
    const Eigen::Ref<const Eigen::VectorXd>& x,
    const Eigen::Ref<const Eigen::VectorXd>& features, double label);

// g * min(1, B_g / ||g||); a zero gradient stays zero.
Eigen::VectorXd LogisticGradientClipped(
    const Eigen::Ref<const Eigen::VectorXd>& x,
    const Eigen::Ref<const Eigen::VectorXd>& features, double label,
    double clip_bound);
inline Eigen::VectorXd LogisticGradientClipped(
    const Eigen::Ref<const Eigen::VectorXd>& x, const ClientDatum& datum,
    double clip_bound) {
  return LogisticGradientClipped(x, datum.features, datum.label, clip_bound);
}

// Mean logistic loss over the rows of `features`.
double MeanLogisticLoss(const Eigen::Ref<const Eigen::VectorXd>& x,
                        const Eigen::Ref<const Eigen::MatrixXd>& features,
                        const Eigen::Ref<const Eigen::VectorXd>& labels);

struct RoundLosses {
  Eigen::VectorXd losses;  // n tau entries in (i, t) order
  double mean = 0.0;       // f^r(x)
};

RoundLosses RoundLossesAt(const Eigen::Ref<const Eigen::VectorXd>& x,
                          const StreamDataset& dataset, int round);

// Plug-in smoothness estimate max ||a||^2 / 4 of the logistic losses.
double SmoothnessEstimate(const StreamDataset& dataset);

// Columns: learner,round,step,label,f_1..f_d; generator parameters in
// comment lines so a reload keeps them.
void SaveDatasetCsv(const std::filesystem::path& path,
                    const StreamDataset& dataset);
StreamDataset LoadDatasetCsv(const std::filesystem::path& path);

}  // namespace dpofl

#endif  // DPOFL_DATA_STREAM_HPP_
