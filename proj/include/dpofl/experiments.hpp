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
#ifndef DPOFL_EXPERIMENTS_HPP_
#define DPOFL_EXPERIMENTS_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dpofl/data_stream.hpp"
#include "dpofl/privacy.hpp"
#include "dpofl/regret.hpp"
#include "dpofl/sim_config.hpp"
#include "dpofl/simulator.hpp"
#include "dpofl/workload.hpp"

namespace dpofl {

enum class ExperimentKind { kBnormStudy, kImpactTau, kBudgetComparison, kCustom };

std::string_view ToString(ExperimentKind kind);
ExperimentKind ParseExperimentKind(std::string_view tag);

struct DataParams {
  double alpha = 0.1;
  double beta = 0.1;
  bool normalize = true;
};

// SimConfig before it meets a dataset: step sizes may be left to the
// default 1 / (8 L_hat), which depends on the data.
struct SimSettings {
  int learners = 10;
  int rounds = 800;
  int local_steps = 10;
  int dim = 5;
  std::optional<double> eta_tilde;
  std::optional<double> eta;  // used only when eta_tilde is absent
  double eta_g = 1.0;
  double clip_bound = 1.0;
  PrivacyBudget budget{5.0, 1e-3};
  Mechanism mechanism = Mechanism::kCorrelatedMf;
  FactorizationMethod factorization = FactorizationMethod::kSqrtNormalized;
  double sensitivity_scale = 1.0;
  std::optional<double> noise_variance;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::kCustom;
  std::uint64_t seed = 20240611;
  int trials = 20;
  int jobs = 1;
  std::filesystem::path output_dir = "out";
  DataParams data;
  SimSettings sim;
  // impact_tau: paired lists with tau_k * R_k constant.
  std::vector<int> tau_list{1, 2, 4};
  std::vector<int> rounds_list{800, 400, 200};
  // budget_comparison
  std::vector<PrivacyBudget> budget_list{{5.0, 1e-3}, {1.0, 1e-3}};
  std::vector<double> baseline_step_grid{1.0, 0.5, 0.25, 0.125};
  // bnorm_study
  std::vector<int> bnorm_rounds{16, 32, 64, 128, 256};
  std::vector<FactorizationMethod> bnorm_methods{
      FactorizationMethod::kSqrtNormalized,
      FactorizationMethod::kTrivialIdentityC};
  std::optional<std::filesystem::path> factorization_cache;
  std::optional<std::filesystem::path> data_cache;
  bool dump_models = false;

  // Throws ConfigError.
  void Validate() const;
};

// Parses the JSON config document; unknown keys are rejected. Throws
// ConfigError with the offending key.
ExperimentConfig ParseExperimentConfig(const std::string& json_text);
ExperimentConfig LoadExperimentConfig(const std::filesystem::path& path);
// Full-scale defaults for each experiment kind.
ExperimentConfig DefaultExperimentConfig(ExperimentKind kind);
std::string ExperimentConfigToJson(const ExperimentConfig& config);

SimConfig ResolveSimConfig(const SimSettings& settings,
                           const StreamDataset& dataset, std::uint64_t seed,
                           int trials);

// Loads from / stores into `config.data_cache` (a directory) when set.
StreamDataset MakeDataset(const ExperimentConfig& config, int learners,
                          int rounds, int local_steps, int dim,
                          std::uint64_t data_seed);

// Runs fn(0..count-1) on up to `jobs` threads; results stay in index order.
template <typename T>
std::vector<T> RunIndexed(int count, int jobs,
                          const std::function<T(int)>& fn);

struct AggregateResult {
  std::string label;
  Mechanism mechanism = Mechanism::kCorrelatedMf;
  int local_steps = 1;
  int rounds = 0;
  PrivacyBudget budget;
  StepSizes steps;                // eta is the baseline step for independent runs
  double step_grid_factor = 1.0;  // baseline grid choice
  NoiseCalibration calibration;
  std::string factorization_tag;
  Eigen::VectorXd mean;    // per released round x^1..x^R
  Eigen::VectorXd stddev;  // sample std (n - 1), 0 for a single trial
  Eigen::VectorXd final_values;  // loss error of x^R per trial
  double final_mean = 0.0;
  double final_std = 0.0;
  std::vector<std::uint64_t> trial_seeds;
  std::vector<std::string> warnings;
};

// One curve: `trials` noise seeds DeriveSeed(curve_seed, k) over a shared
// dataset and oracle. With final_only, only x^R is scored.
AggregateResult RunCurve(const SimConfig& sim, const StreamDataset& dataset,
                         const Factorization<double>* factorization,
                         const OracleSolution& oracle, int trials, int jobs,
                         std::uint64_t curve_seed, bool final_only = false);

// Mean and sample standard deviation of the columns of a trials x R matrix.
void SummarizeTrials(const Eigen::MatrixXd& per_trial, Eigen::VectorXd* mean,
                     Eigen::VectorXd* stddev);

std::vector<AggregateResult> RunImpactTau(const ExperimentConfig& config);
std::vector<AggregateResult> RunBudgetComparison(
    const ExperimentConfig& config);

struct BnormStudyRow {
  int rounds = 0;
  FactorizationMethod method = FactorizationMethod::kSqrtNormalized;
  double frob_sq_b = 0.0;
  double ratio = 0.0;
};
std::vector<BnormStudyRow> RunBnormStudy(
    const std::vector<int>& rounds_list,
    const std::vector<FactorizationMethod>& methods);

// CSV text builders (byte-deterministic) and writers.
std::string BnormStudyCsv(const std::vector<BnormStudyRow>& rows);
std::string CurvesCsv(const std::vector<AggregateResult>& curves);
std::string SummaryCsv(const std::vector<AggregateResult>& curves);
// Writes curves.csv, summary.csv and resolved_config.json under
// config.output_dir / `name`.
void WriteExperimentOutputs(const ExperimentConfig& config,
                            const std::string& name,
                            const std::vector<AggregateResult>& curves);

// Single-run export: trace.csv (round, mean_round_loss, grad_norm,
// noise_row_norm, virtual_residual), optional models.csv, regret.csv.
struct SimulateResult {
  SimulationTrace trace;
  RegretReport report;
  double stacked_residual = 0.0;
};
SimulateResult RunSimulateCommand(const ExperimentConfig& config);
std::string TraceCsv(const SimulationTrace& trace);
std::string ModelsCsv(const SimulationTrace& trace);

struct PropertyResult {
  std::string module;
  std::string invariant;
  bool passed = false;
  std::string detail;
};

struct PropertySuiteOptions {
  int seeds = 10;
  // "", "perturb_b": perturbs B by 1e-3 before the reconstruction check.
  std::string inject_fault;
};

std::vector<PropertyResult> RunPropertySuite(
    const PropertySuiteOptions& options = {});

}  // namespace dpofl

#include "dpofl/internal/run_indexed.hpp"

#endif  // DPOFL_EXPERIMENTS_HPP_
