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

#include <cmath>
#include <string>

#include "dpofl/errors.hpp"
#include "dpofl/random.hpp"

namespace dpofl {

void PrivacyBudget::Validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw InvalidArgument("epsilon must be positive and finite");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw InvalidArgument("delta must lie in (0, 1)");
  }
}

std::string_view ToString(Mechanism mechanism) {
  switch (mechanism) {
    case Mechanism::kCorrelatedMf:
      return "correlated_mf";
    case Mechanism::kIndependentZcdp:
      return "independent_zcdp";
    case Mechanism::kNone:
      return "none";
  }
  return "unknown";
}

Mechanism ParseMechanism(std::string_view tag) {
  if (tag == "correlated_mf" || tag == "correlated") {
    return Mechanism::kCorrelatedMf;
  }
  if (tag == "independent_zcdp" || tag == "independent") {
    return Mechanism::kIndependentZcdp;
  }
  if (tag == "none") return Mechanism::kNone;
  throw InvalidArgument("unknown mechanism '" + std::string(tag) + "'");
}

namespace {

void CheckPositive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw InvalidArgument(std::string(name) + " must be positive and finite");
  }
}

}  // namespace

NoiseCalibration CalibrateCorrelated(const PrivacyBudget& budget,
                                     double clip_bound, double gamma) {
  budget.Validate();
  CheckPositive(clip_bound, "clip bound");
  CheckPositive(gamma, "gamma");
  const double eps = budget.epsilon;
  const double log_inv_delta = -std::log(budget.delta);
  NoiseCalibration calib;
  calib.mechanism = Mechanism::kCorrelatedMf;
  calib.clip_bound = clip_bound;
  calib.gamma = gamma;
  calib.variance = 4.0 * gamma * gamma * clip_bound * clip_bound *
                   (2.0 * log_inv_delta + eps) / (eps * eps);
  calib.stddev = std::sqrt(calib.variance);
  return calib;
}

double ZcdpRho(const PrivacyBudget& budget) {
  budget.Validate();
  const double log_inv_delta = -std::log(budget.delta);
  const double denom =
      std::sqrt(budget.epsilon + log_inv_delta) + std::sqrt(log_inv_delta);
  return budget.epsilon * budget.epsilon / (denom * denom);
}

NoiseCalibration CalibrateIndependentZcdp(const PrivacyBudget& budget,
                                          double clip_bound) {
  CheckPositive(clip_bound, "clip bound");
  NoiseCalibration calib;
  calib.mechanism = Mechanism::kIndependentZcdp;
  calib.clip_bound = clip_bound;
  calib.rho = ZcdpRho(budget);
  calib.variance = 2.0 * clip_bound * clip_bound / calib.rho;
  calib.stddev = std::sqrt(calib.variance);
  return calib;
}

NoiseCalibration NoNoise(double clip_bound) {
  CheckPositive(clip_bound, "clip bound");
  NoiseCalibration calib;
  calib.clip_bound = clip_bound;
  return calib;
}

Eigen::MatrixXd SampleNoiseMatrix(Eigen::Index rows, Eigen::Index cols,
                                  const NoiseCalibration& calib,
                                  std::uint64_t seed) {
  if (rows < 1 || cols < 1) {
    throw InvalidArgument("noise matrix needs at least one row and column");
  }
  Eigen::MatrixXd noise = Eigen::MatrixXd::Zero(rows, cols);
  if (calib.variance == 0.0) return noise;
  GaussianStream stream(seed);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      noise(i, j) = calib.stddev * stream.StandardNormal();
    }
  }
  return noise;
}

SensitivityCheck CheckSensitivity(const Eigen::MatrixXd& c,
                                  const Eigen::MatrixXd& g,
                                  const Eigen::MatrixXd& g_prime,
                                  double clip_bound, double gamma) {
  if (g.rows() != g_prime.rows() || g.cols() != g_prime.cols()) {
    throw InvalidArgument("gradient stacks differ in shape");
  }
  if (c.cols() != g.rows()) {
    throw InvalidArgument("C columns must match gradient stack rows");
  }
  const Eigen::MatrixXd diff = g - g_prime;
  SensitivityCheck out;
  for (Eigen::Index r = 0; r < diff.rows(); ++r) {
    if ((diff.row(r).array() != 0.0).any()) {
      if (out.changed_row < 0) out.changed_row = r;
      ++out.rows_changed;
    }
  }
  out.lhs = (c * diff).norm();
  out.bound = 2.0 * gamma * clip_bound;
  out.ok = out.lhs <= out.bound + 1e-9;
  return out;
}

}  // namespace dpofl
