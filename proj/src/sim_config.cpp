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
#include "dpofl/sim_config.hpp"

#include <cmath>

#include "dpofl/csv.hpp"
#include "dpofl/errors.hpp"

namespace dpofl {

StepSizes StepSizesFromEffective(double eta_tilde, double eta_g,
                                 int local_steps) {
  if (!(eta_tilde >= 0.0) || !(eta_g > 0.0) || local_steps < 1) {
    throw InvalidArgument("step sizes need eta_tilde >= 0, eta_g > 0, tau >= 1");
  }
  return StepSizesFromLocal(eta_tilde / (eta_g * local_steps), eta_g,
                            local_steps);
}

StepSizes StepSizesFromLocal(double eta, double eta_g, int local_steps) {
  if (!(eta >= 0.0) || !(eta_g > 0.0) || local_steps < 1) {
    throw InvalidArgument("step sizes need eta >= 0, eta_g > 0, tau >= 1");
  }
  return {eta, eta_g, eta * eta_g * local_steps};
}

double DefaultEffectiveStep(double smoothness_estimate) {
  if (!(smoothness_estimate > 0.0)) {
    throw InvalidArgument("smoothness estimate must be positive");
  }
  return 1.0 / (8.0 * smoothness_estimate);
}

void SimConfig::Validate() const {
  if (learners < 1 || rounds < 1 || local_steps < 1 || dim < 1) {
    throw InvalidArgument("n, R, tau and d must be positive");
  }
  if (!(steps.eta > 0.0) || !(steps.eta_g > 0.0)) {
    throw InvalidArgument("eta and eta_g must be positive");
  }
  if (steps.eta_tilde != steps.eta * steps.eta_g * local_steps) {
    throw InvalidArgument("eta_tilde must equal eta * eta_g * tau");
  }
  if (!(clip_bound > 0.0)) throw InvalidArgument("clip bound must be positive");
  if (!(smoothness_estimate > 0.0)) {
    throw InvalidArgument("smoothness estimate must be positive");
  }
  if (trials < 1) throw InvalidArgument("trials must be >= 1");
  if (!(sensitivity_scale > 0.0)) {
    throw InvalidArgument("sensitivity scale must be positive");
  }
  if (noise_variance && !(*noise_variance >= 0.0)) {
    throw InvalidArgument("noise variance override must be nonnegative");
  }
  if (!noise_variance && mechanism != Mechanism::kNone) budget.Validate();
}

std::vector<std::string> SimConfig::Warnings() const {
  std::vector<std::string> out;
  const double limit = 1.0 / (8.0 * smoothness_estimate);
  if (steps.eta_tilde > limit) {
    out.push_back("eta_tilde = " + FormatDouble(steps.eta_tilde) +
                  " exceeds 1/(8 L_hat) = " + FormatDouble(limit));
  }
  return out;
}

}  // namespace dpofl
