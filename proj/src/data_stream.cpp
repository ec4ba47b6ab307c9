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

#include <cmath>
#include <map>
#include <sstream>
#include <string>

#include "dpofl/csv.hpp"
#include "dpofl/errors.hpp"
#include "dpofl/random.hpp"

namespace dpofl {

StreamDataset::StreamDataset(int learners, int rounds, int local_steps,
                             Eigen::MatrixXd features, Eigen::VectorXd labels,
                             GeneratorParams params)
    : learners_(learners),
      rounds_(rounds),
      local_steps_(local_steps),
      features_(std::move(features)),
      labels_(std::move(labels)),
      params_(params) {
  if (learners_ < 1 || rounds_ < 1 || local_steps_ < 1) {
    throw InvalidArgument("dataset dimensions must be positive");
  }
  const Eigen::Index expected =
      static_cast<Eigen::Index>(learners_) * rounds_ * local_steps_;
  if (features_.rows() != expected || labels_.size() != expected) {
    throw InvalidArgument("dataset needs exactly n * R * tau samples");
  }
  if (features_.cols() < 1) throw InvalidArgument("feature dimension is 0");
  if (!features_.allFinite()) throw InvalidArgument("non-finite features");
  for (Eigen::Index k = 0; k < labels_.size(); ++k) {
    if (labels_[k] != 1.0 && labels_[k] != -1.0) {
      throw InvalidArgument("labels must be -1 or +1");
    }
  }
}

Eigen::Index StreamDataset::Index(int learner, int round, int step) const {
  if (learner < 0 || learner >= learners_ || step < 0 ||
      step >= local_steps_) {
    throw InvalidArgument("datum index out of range");
  }
  CheckRound(round);
  return (static_cast<Eigen::Index>(round) * learners_ + learner) *
             local_steps_ +
         step;
}

ClientDatum StreamDataset::Datum(int learner, int round, int step) const {
  const Eigen::Index k = Index(learner, round, step);
  return {features_.row(k).transpose(), static_cast<int>(labels_[k])};
}

void StreamDataset::CheckRound(int round) const {
  if (round < 0 || round >= rounds_) {
    throw InvalidArgument("round index " + std::to_string(round) +
                          " out of range");
  }
}

StreamDataset StreamDataset::WithReplacedDatum(int learner, int round,
                                               int step,
                                               const ClientDatum& datum) const {
  if (datum.features.size() != dim()) {
    throw InvalidArgument("replacement datum has the wrong dimension");
  }
  StreamDataset copy = *this;
  const Eigen::Index k = Index(learner, round, step);
  copy.features_.row(k) = datum.features.transpose();
  copy.labels_[k] = datum.label;
  if (datum.label != 1 && datum.label != -1) {
    throw InvalidArgument("labels must be -1 or +1");
  }
  return copy;
}

double StreamDataset::MaxFeatureNorm() const {
  return features_.rowwise().norm().maxCoeff();
}

StreamDataset GenerateSynthetic(int learners, int rounds, int local_steps,
                                int dim, double alpha, double beta,
                                std::uint64_t seed, bool normalize) {
  if (learners < 1 || rounds < 1 || local_steps < 1 || dim < 1) {
    throw InvalidArgument("generator dimensions must be positive");
  }
  if (!(alpha >= 0.0) || !(beta >= 0.0)) {
    throw InvalidArgument("alpha and beta must be nonnegative");
  }
  const Eigen::Index total =
      static_cast<Eigen::Index>(learners) * rounds * local_steps;
  Eigen::MatrixXd features(total, dim);
  Eigen::VectorXd labels(total);

  Eigen::VectorXd feature_std(dim);
  for (int j = 0; j < dim; ++j) {
    feature_std[j] = std::sqrt(std::pow(static_cast<double>(j + 1), -1.2));
  }

  for (int i = 0; i < learners; ++i) {
    GaussianStream stream(DeriveSeed(seed, static_cast<std::uint64_t>(i)));
    const double u = stream.Normal(0.0, std::sqrt(alpha));
    const double c = stream.Normal(0.0, std::sqrt(beta));
    Eigen::VectorXd weights(dim);
    Eigen::VectorXd mean(dim);
    for (int j = 0; j < dim; ++j) weights[j] = stream.Normal(u, 1.0);
    for (int j = 0; j < dim; ++j) mean[j] = stream.Normal(c, 1.0);
    for (int r = 0; r < rounds; ++r) {
      for (int t = 0; t < local_steps; ++t) {
        const Eigen::Index k =
            (static_cast<Eigen::Index>(r) * learners + i) * local_steps + t;
        for (int j = 0; j < dim; ++j) {
          features(k, j) = stream.Normal(mean[j], feature_std[j]);
        }
        const double p = Sigmoid(features.row(k).dot(weights));
        labels[k] = stream.Uniform() < p ? 1.0 : -1.0;
      }
    }
  }

  GeneratorParams params{alpha, beta, seed, normalize, 1.0};
  if (normalize) {
    const double max_norm = features.rowwise().norm().maxCoeff();
    if (max_norm > 1.0) {
      features /= max_norm;
      params.feature_scale = max_norm;
    }
  }
  return StreamDataset(learners, rounds, local_steps, std::move(features),
                       std::move(labels), params);
}

StreamDataset TileFirstRound(const StreamDataset& base, int rounds) {
  if (rounds < 1) throw InvalidArgument("rounds must be positive");
  const Eigen::Index per_round =
      static_cast<Eigen::Index>(base.learners()) * base.local_steps();
  Eigen::MatrixXd features(per_round * rounds, base.dim());
  Eigen::VectorXd labels(per_round * rounds);
  for (int r = 0; r < rounds; ++r) {
    features.middleRows(r * per_round, per_round) = base.RoundFeatures(0);
    labels.segment(r * per_round, per_round) = base.RoundLabels(0);
  }
  return StreamDataset(base.learners(), rounds, base.local_steps(),
                       std::move(features), std::move(labels), base.params());
}

double Sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double LogisticLossFromMargin(double margin) {
  if (margin >= 0.0) return std::log1p(std::exp(-margin));
  return -margin + std::log1p(std::exp(margin));
}

double LogisticLoss(const Eigen::Ref<const Eigen::VectorXd>& x,
                    const Eigen::Ref<const Eigen::VectorXd>& features,
                    double label) {
  return LogisticLossFromMargin(label * x.dot(features));
}

Eigen::VectorXd LogisticGradient(
    const Eigen::Ref<const Eigen::VectorXd>& x,
    const Eigen::Ref<const Eigen::VectorXd>& features, double label) {
  const double margin = label * x.dot(features);
  return (-label * Sigmoid(-margin)) * features;
}

Eigen::VectorXd LogisticGradientClipped(
    const Eigen::Ref<const Eigen::VectorXd>& x,
    const Eigen::Ref<const Eigen::VectorXd>& features, double label,
    double clip_bound) {
  Eigen::VectorXd g = LogisticGradient(x, features, label);
  const double norm = g.norm();
  if (norm > clip_bound) g *= clip_bound / norm;
  return g;
}

double MeanLogisticLoss(const Eigen::Ref<const Eigen::VectorXd>& x,
                        const Eigen::Ref<const Eigen::MatrixXd>& features,
                        const Eigen::Ref<const Eigen::VectorXd>& labels) {
  const Eigen::VectorXd margins =
      (features * x).cwiseProduct(labels);
  double sum = 0.0;
  for (Eigen::Index k = 0; k < margins.size(); ++k) {
    sum += LogisticLossFromMargin(margins[k]);
  }
  return sum / static_cast<double>(margins.size());
}

RoundLosses RoundLossesAt(const Eigen::Ref<const Eigen::VectorXd>& x,
                          const StreamDataset& dataset, int round) {
  if (x.size() != dataset.dim()) {
    throw InvalidArgument("model dimension does not match dataset");
  }
  const auto features = dataset.RoundFeatures(round);
  const auto labels = dataset.RoundLabels(round);
  RoundLosses out;
  out.losses.resize(features.rows());
  double sum = 0.0;
  for (Eigen::Index k = 0; k < features.rows(); ++k) {
    out.losses[k] = LogisticLoss(x, features.row(k).transpose(), labels[k]);
    sum += out.losses[k];
  }
  out.mean = sum / static_cast<double>(features.rows());
  return out;
}

double SmoothnessEstimate(const StreamDataset& dataset) {
  const double max_norm = dataset.MaxFeatureNorm();
  return max_norm * max_norm / 4.0;
}

void SaveDatasetCsv(const std::filesystem::path& path,
                    const StreamDataset& dataset) {
  std::vector<std::string> header = {"learner", "round", "step", "label"};
  for (int j = 1; j <= dataset.dim(); ++j) {
    header.push_back("f_" + std::to_string(j));
  }
  CsvWriter csv(std::move(header));
  const auto& p = dataset.params();
  csv.AddComment("n=" + std::to_string(dataset.learners()));
  csv.AddComment("R=" + std::to_string(dataset.rounds()));
  csv.AddComment("tau=" + std::to_string(dataset.local_steps()));
  csv.AddComment("d=" + std::to_string(dataset.dim()));
  csv.AddComment("alpha=" + FormatDouble(p.alpha));
  csv.AddComment("beta=" + FormatDouble(p.beta));
  csv.AddComment("seed=" + std::to_string(p.seed));
  csv.AddComment("normalize=" + std::string(p.normalize ? "1" : "0"));
  csv.AddComment("feature_scale=" + FormatDouble(p.feature_scale));
  for (int r = 0; r < dataset.rounds(); ++r) {
    for (int i = 0; i < dataset.learners(); ++i) {
      for (int t = 0; t < dataset.local_steps(); ++t) {
        const Eigen::Index k = dataset.Index(i, r, t);
        std::vector<std::string> row = {
            std::to_string(i), std::to_string(r), std::to_string(t),
            dataset.labels()[k] > 0 ? "1" : "-1"};
        for (int j = 0; j < dataset.dim(); ++j) {
          row.push_back(FormatDouble(dataset.features()(k, j)));
        }
        csv.AddRow(row);
      }
    }
  }
  csv.Save(path);
}

StreamDataset LoadDatasetCsv(const std::filesystem::path& path) {
  std::istringstream in(ReadTextFile(path));
  std::map<std::string, std::string> meta;
  std::string line;
  bool header_seen = false;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) {
        std::string key = line.substr(1, eq - 1);
        while (!key.empty() && key.front() == ' ') key.erase(key.begin());
        meta[key] = line.substr(eq + 1);
      }
      continue;
    }
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    rows.push_back(SplitCsvLine(line));
  }
  for (const char* key : {"n", "R", "tau", "d"}) {
    if (!meta.contains(key)) {
      throw InvalidArgument(std::string("dataset CSV lacks '# ") + key +
                            "=' header");
    }
  }
  const int n = std::stoi(meta["n"]);
  const int rounds = std::stoi(meta["R"]);
  const int tau = std::stoi(meta["tau"]);
  const int d = std::stoi(meta["d"]);
  const Eigen::Index total = static_cast<Eigen::Index>(n) * rounds * tau;
  if (static_cast<Eigen::Index>(rows.size()) != total) {
    throw InvalidArgument("dataset CSV row count does not match n * R * tau");
  }
  Eigen::MatrixXd features(total, d);
  Eigen::VectorXd labels(total);
  std::vector<bool> seen(static_cast<std::size_t>(total), false);
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != 4 + d) {
      throw InvalidArgument("dataset CSV row has wrong field count");
    }
    const int i = std::stoi(row[0]);
    const int r = std::stoi(row[1]);
    const int t = std::stoi(row[2]);
    if (i < 0 || i >= n || r < 0 || r >= rounds || t < 0 || t >= tau) {
      throw InvalidArgument("dataset CSV index out of range");
    }
    const Eigen::Index k = (static_cast<Eigen::Index>(r) * n + i) * tau + t;
    if (seen[k]) throw InvalidArgument("duplicate (learner, round, step)");
    seen[k] = true;
    labels[k] = std::stod(row[3]);
    for (int j = 0; j < d; ++j) features(k, j) = std::stod(row[4 + j]);
  }
  GeneratorParams params;
  if (meta.contains("alpha")) params.alpha = std::stod(meta["alpha"]);
  if (meta.contains("beta")) params.beta = std::stod(meta["beta"]);
  if (meta.contains("seed")) params.seed = std::stoull(meta["seed"]);
  if (meta.contains("normalize")) params.normalize = meta["normalize"] == "1";
  if (meta.contains("feature_scale")) {
    params.feature_scale = std::stod(meta["feature_scale"]);
  }
  return StreamDataset(n, rounds, tau, std::move(features), std::move(labels),
                       params);
}

}  // namespace dpofl
