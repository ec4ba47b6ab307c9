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
#ifndef DPOFL_REGRET_HPP_
#define DPOFL_REGRET_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dpofl/data_stream.hpp"

namespace dpofl {

inline constexpr double kOracleTol = 1e-8;
inline constexpr double kRidgeFallback = 1e-6;
inline constexpr double kRegretSlack = 1e-6;

struct OracleOptions {
  double tol = kOracleTol;
  int max_iters = 100000;
  double ridge = 0.0;
  bool ridge_fallback = true;
};

struct OracleSolution {
  Eigen::VectorXd minimizer;
  double min_value = 0.0;         // mean logistic loss at the minimizer
  double grad_norm_at_min = 0.0;  // of the (ridge-adjusted) objective
  int iterations = 0;
  bool converged = false;
  double ridge = 0.0;
};

// Minimizes mean logistic loss (+ ridge/2 ||x||^2) from x = 0 by a
// backtracking (Armijo) line-search descent method: Newton direction while
// the Hessian factorizes, steepest descent otherwise. Stops at
// ||grad|| <= tol. If it runs out of iterations with ridge = 0, it retries
// once with ridge = 1e-6 and reports that ridge.
OracleSolution SolveOffline(const Eigen::Ref<const Eigen::MatrixXd>& features,
                            const Eigen::Ref<const Eigen::VectorXd>& labels,
                            const OracleOptions& options = {});

OracleSolution SolveGlobalOracle(const StreamDataset& dataset,
                                 const OracleOptions& options = {});
std::vector<OracleSolution> SolvePerRoundOracles(
    const StreamDataset& dataset, const OracleOptions& options = {});

struct DynamicRegret {
  Eigen::VectorXd per_round;  // tau (f^r(x^r) - f^r*)
  double total = 0.0;
  int clamped = 0;  // terms lifted to -n tau 1e-6
  std::vector<std::string> warnings;
};

// `models` is (R+1) x d with row r = x^r; rounds r = 0..R-1 are scored.
DynamicRegret ComputeDynamicRegret(const Eigen::MatrixXd& models,
                                   const StreamDataset& dataset,
                                   const std::vector<OracleSolution>& oracles);

double ComputeStaticRegret(const Eigen::MatrixXd& models,
                           const StreamDataset& dataset,
                           const OracleSolution& oracle_global);

// Mean loss of x over the whole dataset minus that of the global oracle.
double LossError(const Eigen::Ref<const Eigen::VectorXd>& x,
                 const StreamDataset& dataset,
                 const OracleSolution& oracle_global);

// Loss error of every row of `models` (rows are independent models).
Eigen::VectorXd LossErrorSeries(const Eigen::MatrixXd& models,
                                const StreamDataset& dataset,
                                const OracleSolution& oracle_global);

struct RegretReport {
  double dynamic_regret = 0.0;
  double static_regret = 0.0;
  Eigen::VectorXd per_round_dynamic;
  Eigen::VectorXd loss_error_series;  // released models x^1..x^R
  OracleSolution oracle_global;
  std::vector<OracleSolution> oracle_per_round;
  std::vector<std::string> warnings;
};

RegretReport BuildRegretReport(const Eigen::MatrixXd& models,
                               const StreamDataset& dataset,
                               const OracleOptions& options = {});

// Columns: round,per_round_dynamic,loss_error,oracle_min_value,
// oracle_converged. Row r scores x^r for regret and x^{r+1} for loss error.
void SaveRegretCsv(const std::filesystem::path& path,
                   const RegretReport& report);

struct GradientNormDiagnostic {
  int points = 0;
  int violations = 0;
  double max_ratio = 0.0;  // max ||grad f^r||^2 / (2 L (f^r - f^r*))
};

// Checks ||grad f^r(x)||^2 <= 2 L_hat (f^r(x) - f^r*) at random points.
// L_hat is a plug-in estimate, so violations are diagnostics, not errors.
GradientNormDiagnostic CheckGradientNormIdentity(
    const StreamDataset& dataset, int round, const OracleSolution& oracle,
    double smoothness_estimate, int points, std::uint64_t seed);

}  // namespace dpofl

#endif  // DPOFL_REGRET_HPP_
