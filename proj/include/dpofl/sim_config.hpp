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
#ifndef DPOFL_SIM_CONFIG_HPP_
#define DPOFL_SIM_CONFIG_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dpofl/privacy.hpp"
#include "dpofl/workload.hpp"

namespace dpofl {

struct StepSizes {
  double eta = 0.0;        // local step
  double eta_g = 1.0;      // global step
  double eta_tilde = 0.0;  // eta * eta_g * tau, stored as that product
};

// eta = eta_tilde / (eta_g tau); eta_tilde is then recomputed as the product
// so the stored triple satisfies the identity exactly.
StepSizes StepSizesFromEffective(double eta_tilde, double eta_g,
                                 int local_steps);
StepSizes StepSizesFromLocal(double eta, double eta_g, int local_steps);

// Default effective step 1 / (8 L_hat).
double DefaultEffectiveStep(double smoothness_estimate);

struct SimConfig {
  int learners = 10;
  int rounds = 100;
  int local_steps = 1;
  int dim = 5;
  StepSizes steps;
  double clip_bound = 1.0;
  double smoothness_estimate = 0.25;
  std::uint64_t seed = 0;  // noise seed
  PrivacyBudget budget;
  Mechanism mechanism = Mechanism::kCorrelatedMf;
  FactorizationMethod factorization = FactorizationMethod::kSqrtNormalized;
  int trials = 20;
  // Multiplies B_g inside the noise calibration only (clipping unchanged).
  double sensitivity_scale = 1.0;
  // Forces the per-coordinate noise variance, bypassing calibration.
  std::optional<double> noise_variance;

  // Throws InvalidArgument on inconsistent fields.
  void Validate() const;
  // Non-fatal findings, e.g. eta_tilde > 1 / (8 L_hat).
  std::vector<std::string> Warnings() const;
};

}  // namespace dpofl

#endif  // DPOFL_SIM_CONFIG_HPP_
