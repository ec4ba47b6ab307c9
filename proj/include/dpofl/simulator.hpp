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
#ifndef DPOFL_SIMULATOR_HPP_
#define DPOFL_SIMULATOR_HPP_

// Online federated learning with server-side DP noise.
//
// Correlated mechanism, per round r:
//   learners: z^{r,0} = x^r, z^{r,t+1} = z^{r,t} - eta grad f_i^{r,t}(z^{r,t})
//   server:   x^{r+1} = x^r - eta_tilde ((x^r - mean_i z_i^{r,tau}) / (eta tau)
//                                        + (b^{r+1} - b^r) xi),  b^0 = 0
// where b^r is row r of B (1-based) and xi ~ N(0, V^2)^{R x d} is drawn once.
// The noise-free shadow x_xi^r = x^r + eta_tilde b^r xi then follows
// x_xi^{r+1} = x_xi^r - eta_tilde g^r exactly, which is checked every round.
//
// Independent baseline, per round r:
//   x^{r+1} = x^r - eta (1/n sum_i sum_t grad f_i^{r,t}(x^r) + zeta_r)

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "dpofl/data_stream.hpp"
#include "dpofl/privacy.hpp"
#include "dpofl/sim_config.hpp"
#include "dpofl/workload.hpp"

namespace dpofl {

inline constexpr double kVirtualResidualTol = 1e-9;
inline constexpr double kStackedResidualTol = 1e-9;
inline constexpr double kEquivalenceTol = 1e-10;

struct LocalRoundResult {
  Eigen::VectorXd final_model;  // z^{r,tau}
  Eigen::MatrixXd gradients;    // tau x d, clipped, along the trajectory
};

LocalRoundResult LocalRound(const Eigen::Ref<const Eigen::VectorXd>& x_r,
                            const Eigen::Ref<const Eigen::MatrixXd>& features,
                            const Eigen::Ref<const Eigen::VectorXd>& labels,
                            double eta, double clip_bound);

// Server update from the averaged local models; `noise_row` is (b^{r+1} - b^r) xi. When
// `expected_direction` (g^r) is given, the recovered direction
// (x^r - mean z) / (eta tau) must match it or InvariantViolation is thrown.
Eigen::VectorXd ServerStepCorrelated(
    const Eigen::Ref<const Eigen::VectorXd>& x_r,
    const Eigen::Ref<const Eigen::VectorXd>& mean_local_model,
    const Eigen::Ref<const Eigen::VectorXd>& noise_row, const StepSizes& steps,
    int local_steps, const Eigen::VectorXd* expected_direction = nullptr);

// Batch step at x^r summed over t (not averaged).
Eigen::VectorXd ServerStepIndependent(
    const Eigen::Ref<const Eigen::VectorXd>& x_r, const StreamDataset& dataset,
    int round, double eta, double clip_bound,
    const Eigen::Ref<const Eigen::VectorXd>& noise_row);

struct SimulationTrace {
  Mechanism mechanism = Mechanism::kNone;
  SimConfig config;
  NoiseCalibration calibration;

  Eigen::MatrixXd models;          // (R+1) x d, row r = x^r
  Eigen::MatrixXd gradient_stack;  // R x d, row r = g^r
  Eigen::MatrixXd noise;           // R x d: xi (correlated) or zeta (baseline)
  Eigen::MatrixXd noise_rows;      // R x d, noise actually applied per round
  Eigen::MatrixXd virtual_iterates;  // (R+1) x d; empty for the baseline
  Eigen::VectorXd round_mean_losses;  // f^r(x^r)
  Eigen::VectorXd virtual_residuals;  // per round, relative
  Eigen::VectorXd equivalence_residuals;  // per round, relative
  double max_drift_ratio = 0.0;  // max ||z - x^r|| / (eta tau B_g)
  std::vector<std::string> warnings;

  int rounds() const { return static_cast<int>(gradient_stack.rows()); }
};

// The noise calibration a run with this config would use.
NoiseCalibration CalibrationFor(const SimConfig& config,
                                const Factorization<double>* factorization);

// Throws InvalidArgument on dimension mismatch or a missing factorization
// for the correlated mechanism, and InvariantViolation if an online identity
// (virtual iterate, server-update equivalence, drift bound) breaks.
SimulationTrace RunSimulation(const SimConfig& config,
                              const StreamDataset& dataset,
                              const Factorization<double>* factorization);

// Streaming trajectory vs x^0 - eta_tilde (A G + B xi): returns
// max_r ||x_stacked^r - x^r|| / (1 + ||x^r||) over r = 1..R.
double VerifyStackedForm(const SimulationTrace& trace,
                         const Eigen::MatrixXd& workload,
                         const Eigen::MatrixXd& b);

// Re-evaluates the correlated-mechanism gradient stack on `dataset` along
// the released models x^0..x^{R-1} of `trace`. With the trace's own dataset
// this reproduces trace.gradient_stack bit for bit.
Eigen::MatrixXd RecomputeGradientStack(const SimulationTrace& trace,
                                       const StreamDataset& dataset);

struct NeighborTrialResult {
  int learner = 0;
  int round = 0;
  int step = 0;
  SensitivityCheck check;
  bool reproduced = false;  // recomputed G equals the trace's G exactly
};

// Runs the simulator, replaces one random datum D_i^{r,t}, and checks
// ||C (G - G')||_F against 2 gamma B_g. `trial_seed` picks the slot and
// the replacement datum.
NeighborTrialResult RunNeighborTrial(const SimConfig& config,
                                     const StreamDataset& dataset,
                                     const Factorization<double>& factorization,
                                     std::uint64_t trial_seed);

}  // namespace dpofl

#endif  // DPOFL_SIMULATOR_HPP_
