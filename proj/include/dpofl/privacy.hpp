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
#ifndef DPOFL_PRIVACY_HPP_
#define DPOFL_PRIVACY_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <string_view>

namespace dpofl {

struct PrivacyBudget {
  double epsilon = 5.0;
  double delta = 1e-3;

  // Throws InvalidArgument unless epsilon > 0 and 0 < delta < 1.
  void Validate() const;
};

enum class Mechanism { kCorrelatedMf, kIndependentZcdp, kNone };

std::string_view ToString(Mechanism mechanism);
Mechanism ParseMechanism(std::string_view tag);

// Per-coordinate Gaussian noise variance actually used by a run.
struct NoiseCalibration {
  double variance = 0.0;
  double stddev = 0.0;
  Mechanism mechanism = Mechanism::kNone;
  double clip_bound = 1.0;
  double gamma = 1.0;
  double rho = 0.0;  // zCDP parameter; only set for kIndependentZcdp
};

// V^2 = 4 gamma^2 B_g^2 (2 ln(1/delta) + epsilon) / epsilon^2.
NoiseCalibration CalibrateCorrelated(const PrivacyBudget& budget,
                                     double clip_bound, double gamma);

// rho = (sqrt(eps + ln(1/delta)) - sqrt(ln(1/delta)))^2, V^2 = 2 B_g^2 / rho.
NoiseCalibration CalibrateIndependentZcdp(const PrivacyBudget& budget,
                                          double clip_bound);

NoiseCalibration NoNoise(double clip_bound);

// Evaluated as eps^2 / (sqrt(eps + L) + sqrt(L))^2 to avoid cancellation.
double ZcdpRho(const PrivacyBudget& budget);

// rows x cols iid N(0, calib.variance) entries, filled row-major from one
// GaussianStream(seed). Bit-identical for identical inputs.
Eigen::MatrixXd SampleNoiseMatrix(Eigen::Index rows, Eigen::Index cols,
                                  const NoiseCalibration& calib,
                                  std::uint64_t seed);

struct SensitivityCheck {
  double lhs = 0.0;    // ||C (G - G')||_F
  double bound = 0.0;  // 2 gamma B_g
  bool ok = false;     // lhs <= bound + 1e-9
  int rows_changed = 0;
  Eigen::Index changed_row = -1;  // first differing row, -1 if none
};

SensitivityCheck CheckSensitivity(const Eigen::MatrixXd& c,
                                  const Eigen::MatrixXd& g,
                                  const Eigen::MatrixXd& g_prime,
                                  double clip_bound, double gamma);

}  // namespace dpofl

#endif  // DPOFL_PRIVACY_HPP_
