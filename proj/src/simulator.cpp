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
#include "dpofl/simulator.hpp"

#include <cmath>
#include <limits>

#include "dpofl/csv.hpp"
#include "dpofl/errors.hpp"
#include "dpofl/random.hpp"

namespace dpofl {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

struct RoundAggregate {
  Eigen::VectorXd direction;   // g^r
  Eigen::VectorXd mean_model;  // (1/n) sum_i z_i^{r,tau}
  double max_drift = 0.0;      // max_i ||z_i^{r,tau} - x^r||
};

// Learners are visited and summed in index order i = 0..n-1.
RoundAggregate AggregateRound(const Eigen::VectorXd& x,
                              const StreamDataset& dataset, int round,
                              double eta, double clip_bound) {
  const Eigen::Index d = x.size();
  RoundAggregate agg;
  Eigen::VectorXd grad_sum = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd model_sum = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < dataset.learners(); ++i) {
    LocalRoundResult local =
        LocalRound(x, dataset.LearnerFeatures(i, round),
                   dataset.LearnerLabels(i, round), eta, clip_bound);
    agg.max_drift = std::max(agg.max_drift, (local.final_model - x).norm());
    model_sum += local.final_model;
    grad_sum += local.gradients.colwise().sum().transpose();
  }
  const double n = dataset.learners();
  agg.direction = grad_sum / (n * dataset.local_steps());
  agg.mean_model = model_sum / n;
  return agg;
}

// (1/n) sum_i sum_t clipped grad f_i^{r,t}(x^r).
Eigen::VectorXd BatchDirection(const Eigen::Ref<const Eigen::VectorXd>& x,
                               const StreamDataset& dataset, int round,
                               double clip_bound) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(x.size());
  for (int i = 0; i < dataset.learners(); ++i) {
    const auto features = dataset.LearnerFeatures(i, round);
    const auto labels = dataset.LearnerLabels(i, round);
    for (Eigen::Index t = 0; t < features.rows(); ++t) {
      sum += LogisticGradientClipped(x, features.row(t).transpose(),
                                     labels[t], clip_bound);
    }
  }
  return sum / static_cast<double>(dataset.learners());
}

void CheckDims(const SimConfig& config, const StreamDataset& dataset) {
  if (dataset.learners() != config.learners ||
      dataset.rounds() != config.rounds ||
      dataset.local_steps() != config.local_steps ||
      dataset.dim() != config.dim) {
    throw InvalidArgument(
        "dataset dimensions (n, R, tau, d) do not match the config");
  }
}

}  // namespace

LocalRoundResult LocalRound(const Eigen::Ref<const Eigen::VectorXd>& x_r,
                            const Eigen::Ref<const Eigen::MatrixXd>& features,
                            const Eigen::Ref<const Eigen::VectorXd>& labels,
                            double eta, double clip_bound) {
  if (features.rows() < 1 || features.rows() != labels.size()) {
    throw InvalidArgument("local round needs tau >= 1 matching data rows");
  }
  LocalRoundResult out;
  out.final_model = x_r;
  out.gradients.resize(features.rows(), x_r.size());
  for (Eigen::Index t = 0; t < features.rows(); ++t) {
    Eigen::VectorXd g = LogisticGradientClipped(
        out.final_model, features.row(t).transpose(), labels[t], clip_bound);
    out.gradients.row(t) = g.transpose();
    out.final_model -= eta * g;
  }
  return out;
}

Eigen::VectorXd ServerStepCorrelated(
    const Eigen::Ref<const Eigen::VectorXd>& x_r,
    const Eigen::Ref<const Eigen::VectorXd>& mean_local_model,
    const Eigen::Ref<const Eigen::VectorXd>& noise_row, const StepSizes& steps,
    int local_steps, const Eigen::VectorXd* expected_direction) {
  const double local_span = steps.eta * local_steps;
  if (!(local_span > 0.0)) {
    throw InvalidArgument("server step needs eta * tau > 0");
  }
  const Eigen::VectorXd direction = (x_r - mean_local_model) / local_span;
  if (expected_direction != nullptr) {
    // Relative to |g^r|, with a floor for the rounding of x^r - mean z.
    const double scale =
        expected_direction->norm() +
        64.0 * kEps * (x_r.norm() + mean_local_model.norm()) / local_span;
    const double residual = (direction - *expected_direction).norm();
    if (residual > kEquivalenceTol * std::max(scale, 1e-300)) {
      throw InvariantViolation(
          "simulator.server_update_equivalence",
          "(x^r - mean z) / (eta tau) differs from g^r by " +
              FormatDouble(residual));
    }
  }
  return x_r - steps.eta_tilde * (direction + noise_row);
}

Eigen::VectorXd ServerStepIndependent(
    const Eigen::Ref<const Eigen::VectorXd>& x_r, const StreamDataset& dataset,
    int round, double eta, double clip_bound,
    const Eigen::Ref<const Eigen::VectorXd>& noise_row) {
  return x_r - eta * (BatchDirection(x_r, dataset, round, clip_bound) +
                      noise_row);
}

NoiseCalibration CalibrationFor(const SimConfig& config,
                                const Factorization<double>* factorization) {
  const double sensitivity_clip = config.sensitivity_scale * config.clip_bound;
  NoiseCalibration calib;
  switch (config.mechanism) {
    case Mechanism::kCorrelatedMf:
      if (factorization == nullptr) {
        throw InvalidArgument("correlated mechanism needs a factorization");
      }
      calib = config.noise_variance
                  ? NoiseCalibration{}
                  : CalibrateCorrelated(config.budget, sensitivity_clip,
                                        factorization->gamma);
      calib.mechanism = Mechanism::kCorrelatedMf;
      calib.gamma = factorization->gamma;
      break;
    case Mechanism::kIndependentZcdp:
      calib = config.noise_variance
                  ? NoiseCalibration{}
                  : CalibrateIndependentZcdp(config.budget, sensitivity_clip);
      calib.mechanism = Mechanism::kIndependentZcdp;
      break;
    case Mechanism::kNone:
      calib = NoNoise(config.clip_bound);
      return calib;
  }
  calib.clip_bound = config.clip_bound;
  if (config.noise_variance) {
    calib.variance = *config.noise_variance;
    calib.stddev = std::sqrt(calib.variance);
  }
  return calib;
}

SimulationTrace RunSimulation(const SimConfig& config,
                              const StreamDataset& dataset,
                              const Factorization<double>* factorization) {
  config.Validate();
  CheckDims(config, dataset);
  const int rounds = config.rounds;
  const int d = config.dim;
  const int tau = config.local_steps;
  if (factorization != nullptr && factorization->dim() != rounds) {
    throw InvalidArgument("factorization dimension must equal R");
  }

  SimulationTrace trace;
  trace.mechanism = config.mechanism;
  trace.config = config;
  trace.warnings = config.Warnings();
  trace.calibration = CalibrationFor(config, factorization);
  trace.noise = SampleNoiseMatrix(rounds, d, trace.calibration, config.seed);
  trace.models.resize(rounds + 1, d);
  trace.gradient_stack.resize(rounds, d);
  trace.noise_rows.resize(rounds, d);
  trace.round_mean_losses.resize(rounds);
  trace.virtual_residuals = Eigen::VectorXd::Zero(rounds);
  trace.equivalence_residuals = Eigen::VectorXd::Zero(rounds);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
  trace.models.row(0) = x.transpose();

  if (config.mechanism == Mechanism::kIndependentZcdp) {
    for (int r = 0; r < rounds; ++r) {
      trace.round_mean_losses[r] =
          MeanLogisticLoss(x, dataset.RoundFeatures(r), dataset.RoundLabels(r));
      const Eigen::VectorXd direction =
          BatchDirection(x, dataset, r, config.clip_bound);
      const Eigen::VectorXd zeta = trace.noise.row(r).transpose();
      trace.gradient_stack.row(r) = direction.transpose();
      trace.noise_rows.row(r) = zeta.transpose();
      x = x - config.steps.eta * (direction + zeta);
      trace.models.row(r + 1) = x.transpose();
    }
    return trace;
  }

  // Correlated mechanism (kNone runs the same algorithm with xi = 0).
  Eigen::MatrixXd b_xi = Eigen::MatrixXd::Zero(rounds, d);
  if (factorization != nullptr) b_xi = factorization->b * trace.noise;
  const StepSizes& steps = config.steps;
  const double drift_bound = steps.eta * tau * config.clip_bound;

  trace.virtual_iterates.resize(rounds + 1, d);
  trace.virtual_iterates.row(0) = x.transpose();  // b^0 = 0
  Eigen::VectorXd virtual_x = x;
  Eigen::VectorXd previous_b_xi = Eigen::VectorXd::Zero(d);

  for (int r = 0; r < rounds; ++r) {
    trace.round_mean_losses[r] =
        MeanLogisticLoss(x, dataset.RoundFeatures(r), dataset.RoundLabels(r));
    const RoundAggregate agg =
        AggregateRound(x, dataset, r, steps.eta, config.clip_bound);
    trace.max_drift_ratio =
        std::max(trace.max_drift_ratio, agg.max_drift / drift_bound);
    if (agg.max_drift > drift_bound * (1.0 + 1e-12)) {
      throw InvariantViolation(
          "simulator.drift_bound",
          "||z - x^r|| = " + FormatDouble(agg.max_drift) +
              " exceeds eta tau B_g = " + FormatDouble(drift_bound));
    }

    const Eigen::VectorXd current_b_xi = b_xi.row(r).transpose();
    const Eigen::VectorXd noise_row = current_b_xi - previous_b_xi;
    trace.noise_rows.row(r) = noise_row.transpose();
    trace.gradient_stack.row(r) = agg.direction.transpose();

    const double span = steps.eta * tau;
    const Eigen::VectorXd recovered = (x - agg.mean_model) / span;
    trace.equivalence_residuals[r] =
        (recovered - agg.direction).norm() /
        std::max(agg.direction.norm(), 1e-300);

    const Eigen::VectorXd x_next = ServerStepCorrelated(
        x, agg.mean_model, noise_row, steps, tau, &agg.direction);

    const Eigen::VectorXd virtual_next =
        x_next + steps.eta_tilde * current_b_xi;
    const double residual =
        (virtual_next - virtual_x + steps.eta_tilde * agg.direction).norm() /
        (1.0 + virtual_next.norm() + steps.eta_tilde * current_b_xi.norm());
    trace.virtual_residuals[r] = residual;
    if (residual > kVirtualResidualTol) {
      throw InvariantViolation("simulator.virtual_iterate",
                               "x_xi recursion residual " +
                                   FormatDouble(residual) + " at round " +
                                   std::to_string(r));
    }

    x = x_next;
    virtual_x = virtual_next;
    previous_b_xi = current_b_xi;
    trace.models.row(r + 1) = x.transpose();
    trace.virtual_iterates.row(r + 1) = virtual_x.transpose();
  }
  return trace;
}

double VerifyStackedForm(const SimulationTrace& trace,
                         const Eigen::MatrixXd& workload,
                         const Eigen::MatrixXd& b) {
  const Eigen::Index rounds = trace.gradient_stack.rows();
  if (workload.rows() != rounds || b.rows() != rounds ||
      b.cols() != trace.noise.rows()) {
    throw InvalidArgument("workload / B shape does not match the trace");
  }
  const Eigen::RowVectorXd x0 = trace.models.row(0);
  const Eigen::MatrixXd stacked =
      (-trace.config.steps.eta_tilde *
       (workload * trace.gradient_stack + b * trace.noise))
          .rowwise() +
      x0;
  double worst = 0.0;
  for (Eigen::Index r = 0; r < rounds; ++r) {
    const double err = (stacked.row(r) - trace.models.row(r + 1)).norm() /
                       (1.0 + trace.models.row(r + 1).norm());
    worst = std::max(worst, err);
  }
  return worst;
}

Eigen::MatrixXd RecomputeGradientStack(const SimulationTrace& trace,
                                       const StreamDataset& dataset) {
  CheckDims(trace.config, dataset);
  Eigen::MatrixXd stack(trace.config.rounds, trace.config.dim);
  for (int r = 0; r < trace.config.rounds; ++r) {
    const Eigen::VectorXd x = trace.models.row(r).transpose();
    stack.row(r) = AggregateRound(x, dataset, r, trace.config.steps.eta,
                                  trace.config.clip_bound)
                       .direction.transpose();
  }
  return stack;
}

NeighborTrialResult RunNeighborTrial(const SimConfig& config,
                                     const StreamDataset& dataset,
                                     const Factorization<double>& factorization,
                                     std::uint64_t trial_seed) {
  GaussianStream stream(trial_seed);
  auto pick = [&stream](int bound) {
    return std::min(bound - 1, static_cast<int>(stream.Uniform() * bound));
  };
  NeighborTrialResult out;
  out.learner = pick(dataset.learners());
  out.round = pick(dataset.rounds());
  out.step = pick(dataset.local_steps());

  // Replacement may have a larger norm than the data, so clipping can bind.
  ClientDatum replacement;
  replacement.features.resize(dataset.dim());
  for (int j = 0; j < dataset.dim(); ++j) {
    replacement.features[j] = stream.StandardNormal();
  }
  const double target_norm = 4.0 * stream.Uniform();
  const double norm = replacement.features.norm();
  if (norm > 0.0) replacement.features *= target_norm / norm;
  replacement.label = stream.Uniform() < 0.5 ? -1 : 1;

  const SimulationTrace trace = RunSimulation(config, dataset, &factorization);
  const StreamDataset neighbor = dataset.WithReplacedDatum(
      out.learner, out.round, out.step, replacement);
  const Eigen::MatrixXd g = RecomputeGradientStack(trace, dataset);
  out.reproduced = (g.array() == trace.gradient_stack.array()).all();
  const Eigen::MatrixXd g_prime = RecomputeGradientStack(trace, neighbor);
  out.check = CheckSensitivity(factorization.c, trace.gradient_stack, g_prime,
                               config.clip_bound, factorization.gamma);
  return out;
}

}  // namespace dpofl
