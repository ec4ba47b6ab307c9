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
#include "dpofl/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "dpofl/csv.hpp"
#include "dpofl/errors.hpp"
#include "dpofl/factorization_io.hpp"
#include "dpofl/random.hpp"
#include "json.hpp"

namespace dpofl {
namespace {

// Seed-derivation tags; every curve of every experiment gets its own branch.
constexpr std::uint64_t kImpactTauData = 100;
constexpr std::uint64_t kBudgetData = 101;
constexpr std::uint64_t kSimulateData = 102;
constexpr std::uint64_t kImpactTauCurves = 200;
constexpr std::uint64_t kBudgetCorrelatedCurves = 300;
constexpr std::uint64_t kBudgetBaselineCurves = 400;
constexpr std::uint64_t kSimulateNoise = 500;

}  // namespace

SimConfig ResolveSimConfig(const SimSettings& settings,
                           const StreamDataset& dataset, std::uint64_t seed,
                           int trials) {
  SimConfig sim;
  sim.learners = dataset.learners();
  sim.rounds = dataset.rounds();
  sim.local_steps = dataset.local_steps();
  sim.dim = dataset.dim();
  sim.clip_bound = settings.clip_bound;
  sim.smoothness_estimate = SmoothnessEstimate(dataset);
  sim.seed = seed;
  sim.budget = settings.budget;
  sim.mechanism = settings.mechanism;
  sim.factorization = settings.factorization;
  sim.trials = trials;
  sim.sensitivity_scale = settings.sensitivity_scale;
  sim.noise_variance = settings.noise_variance;
  if (settings.eta_tilde) {
    sim.steps = StepSizesFromEffective(*settings.eta_tilde, settings.eta_g,
                                       sim.local_steps);
  } else if (settings.eta) {
    sim.steps = StepSizesFromLocal(*settings.eta, settings.eta_g,
                                   sim.local_steps);
  } else {
    sim.steps = StepSizesFromEffective(
        DefaultEffectiveStep(sim.smoothness_estimate), settings.eta_g,
        sim.local_steps);
  }
  return sim;
}

StreamDataset MakeDataset(const ExperimentConfig& config, int learners,
                          int rounds, int local_steps, int dim,
                          std::uint64_t data_seed) {
  std::filesystem::path cached;
  if (config.data_cache) {
    char name[160];
    std::snprintf(name, sizeof(name),
                  "data_n%d_R%d_tau%d_d%d_a%.17g_b%.17g_s%llu_%s.csv",
                  learners, rounds, local_steps, dim, config.data.alpha,
                  config.data.beta,
                  static_cast<unsigned long long>(data_seed),
                  config.data.normalize ? "norm" : "raw");
    cached = *config.data_cache / name;
    if (std::filesystem::exists(cached)) return LoadDatasetCsv(cached);
  }
  StreamDataset dataset =
      GenerateSynthetic(learners, rounds, local_steps, dim, config.data.alpha,
                        config.data.beta, data_seed, config.data.normalize);
  if (config.data_cache) SaveDatasetCsv(cached, dataset);
  return dataset;
}

void SummarizeTrials(const Eigen::MatrixXd& per_trial, Eigen::VectorXd* mean,
                     Eigen::VectorXd* stddev) {
  const Eigen::Index trials = per_trial.rows();
  *mean = per_trial.colwise().mean().transpose();
  *stddev = Eigen::VectorXd::Zero(per_trial.cols());
  if (trials < 2) return;
  for (Eigen::Index c = 0; c < per_trial.cols(); ++c) {
    const double var =
        (per_trial.col(c).array() - (*mean)[c]).square().sum() /
        static_cast<double>(trials - 1);
    (*stddev)[c] = std::sqrt(var);
  }
}

AggregateResult RunCurve(const SimConfig& sim, const StreamDataset& dataset,
                         const Factorization<double>* factorization,
                         const OracleSolution& oracle, int trials, int jobs,
                         std::uint64_t curve_seed, bool final_only) {
  AggregateResult out;
  out.mechanism = sim.mechanism;
  out.local_steps = sim.local_steps;
  out.rounds = sim.rounds;
  out.budget = sim.budget;
  out.steps = sim.steps;
  out.calibration = CalibrationFor(sim, factorization);
  out.factorization_tag =
      factorization ? std::string(ToString(factorization->method)) : "none";
  out.warnings = sim.Warnings();
  for (int k = 0; k < trials; ++k) {
    out.trial_seeds.push_back(DeriveSeed(curve_seed, k));
  }

  const std::function<Eigen::VectorXd(int)> run_trial =
      [&](int k) -> Eigen::VectorXd {
    SimConfig trial_sim = sim;
    trial_sim.seed = out.trial_seeds[k];
    const SimulationTrace trace =
        RunSimulation(trial_sim, dataset, factorization);
    if (final_only) {
      return LossErrorSeries(trace.models.bottomRows(1), dataset, oracle);
    }
    return LossErrorSeries(trace.models.bottomRows(sim.rounds), dataset,
                           oracle);
  };
  const std::vector<Eigen::VectorXd> series =
      RunIndexed<Eigen::VectorXd>(trials, jobs, run_trial);

  const Eigen::Index width = series.front().size();
  Eigen::MatrixXd per_trial(trials, width);
  for (int k = 0; k < trials; ++k) per_trial.row(k) = series[k].transpose();
  SummarizeTrials(per_trial, &out.mean, &out.stddev);
  out.final_values = per_trial.col(width - 1);
  out.final_mean = out.mean[width - 1];
  out.final_std = out.stddev[width - 1];
  return out;
}

std::vector<AggregateResult> RunImpactTau(const ExperimentConfig& config) {
  config.Validate();
  const std::uint64_t data_seed = DeriveSeed(config.seed, kImpactTauData);
  const std::uint64_t curves_seed = DeriveSeed(config.seed, kImpactTauCurves);
  std::vector<AggregateResult> out;
  for (std::size_t k = 0; k < config.tau_list.size(); ++k) {
    const int tau = config.tau_list[k];
    const int rounds = config.rounds_list[k];
    // Each learner's arrival sequence is identical across settings; only
    // its grouping into rounds of tau steps changes.
    const StreamDataset dataset = MakeDataset(
        config, config.sim.learners, rounds, tau, config.sim.dim, data_seed);
    const OracleSolution oracle = SolveGlobalOracle(dataset);
    SimSettings settings = config.sim;
    settings.mechanism = Mechanism::kCorrelatedMf;
    const SimConfig sim =
        ResolveSimConfig(settings, dataset, 0, config.trials);
    const Factorization<double> factorization = LoadOrComputeFactorization(
        config.factorization_cache, rounds, sim.factorization);
    AggregateResult curve =
        RunCurve(sim, dataset, &factorization, oracle, config.trials,
                 config.jobs, DeriveSeed(curves_seed, k));
    curve.label = "correlated_tau" + std::to_string(tau);
    out.push_back(std::move(curve));
  }
  return out;
}

std::vector<AggregateResult> RunBudgetComparison(
    const ExperimentConfig& config) {
  config.Validate();
  const StreamDataset dataset =
      MakeDataset(config, config.sim.learners, config.sim.rounds,
                  config.sim.local_steps, config.sim.dim,
                  DeriveSeed(config.seed, kBudgetData));
  const OracleSolution oracle = SolveGlobalOracle(dataset);
  const Factorization<double> factorization = LoadOrComputeFactorization(
      config.factorization_cache, config.sim.rounds, config.sim.factorization);
  const std::uint64_t corr_seed =
      DeriveSeed(config.seed, kBudgetCorrelatedCurves);
  const std::uint64_t base_seed =
      DeriveSeed(config.seed, kBudgetBaselineCurves);

  std::vector<AggregateResult> out;
  for (std::size_t b = 0; b < config.budget_list.size(); ++b) {
    SimSettings settings = config.sim;
    settings.budget = config.budget_list[b];
    settings.mechanism = Mechanism::kCorrelatedMf;
    // Same step sizes for the correlated algorithm under every budget.
    const SimConfig corr = ResolveSimConfig(settings, dataset, 0, config.trials);
    AggregateResult curve =
        RunCurve(corr, dataset, &factorization, oracle, config.trials,
                 config.jobs, DeriveSeed(corr_seed, b));
    curve.label = "correlated_eps" + FormatDouble(settings.budget.epsilon);
    out.push_back(std::move(curve));

    // Baseline: eta = eta_tilde / tau times a grid factor, tuned per budget
    // for the best final mean loss error.
    SimConfig base = corr;
    base.mechanism = Mechanism::kIndependentZcdp;
    const double matched_eta = corr.steps.eta_tilde / corr.local_steps;
    std::size_t best = 0;
    double best_value = std::numeric_limits<double>::infinity();
    std::vector<std::uint64_t> grid_seeds;
    for (std::size_t g = 0; g < config.baseline_step_grid.size(); ++g) {
      grid_seeds.push_back(DeriveSeed(base_seed, b * 64 + g));
      base.steps = StepSizesFromLocal(
          matched_eta * config.baseline_step_grid[g], 1.0, base.local_steps);
      const AggregateResult probe =
          RunCurve(base, dataset, nullptr, oracle, config.trials, config.jobs,
                   grid_seeds.back(), /*final_only=*/true);
      if (probe.final_mean < best_value) {
        best_value = probe.final_mean;
        best = g;
      }
    }
    base.steps = StepSizesFromLocal(
        matched_eta * config.baseline_step_grid[best], 1.0, base.local_steps);
    AggregateResult baseline = RunCurve(base, dataset, nullptr, oracle,
                                        config.trials, config.jobs,
                                        grid_seeds[best]);
    baseline.step_grid_factor = config.baseline_step_grid[best];
    baseline.label = "independent_eps" + FormatDouble(settings.budget.epsilon);
    out.push_back(std::move(baseline));
  }
  return out;
}

std::vector<BnormStudyRow> RunBnormStudy(
    const std::vector<int>& rounds_list,
    const std::vector<FactorizationMethod>& methods) {
  std::vector<BnormStudyRow> rows;
  for (FactorizationMethod method : methods) {
    for (const BnormRow& row : BnormStudy(rounds_list, method)) {
      rows.push_back({row.rounds, method, row.frob_sq_b, row.ratio});
    }
  }
  return rows;
}

std::string BnormStudyCsv(const std::vector<BnormStudyRow>& rows) {
  CsvWriter csv({"R", "method", "frob_sq_b", "ratio"});
  for (const auto& row : rows) {
    csv.AddRow({std::to_string(row.rounds), std::string(ToString(row.method)),
                FormatDouble(row.frob_sq_b), FormatDouble(row.ratio)});
  }
  return csv.str();
}

std::string CurvesCsv(const std::vector<AggregateResult>& curves) {
  CsvWriter csv({"curve", "mechanism", "tau", "epsilon", "delta", "round",
                 "mean_loss_error", "std_loss_error"});
  for (const auto& c : curves) {
    for (Eigen::Index r = 0; r < c.mean.size(); ++r) {
      csv.AddRow({c.label, std::string(ToString(c.mechanism)),
                  std::to_string(c.local_steps), FormatDouble(c.budget.epsilon),
                  FormatDouble(c.budget.delta), std::to_string(r + 1),
                  FormatDouble(c.mean[r]), FormatDouble(c.stddev[r])});
    }
  }
  return csv.str();
}

std::string SummaryCsv(const std::vector<AggregateResult>& curves) {
  CsvWriter csv({"curve", "mechanism", "tau", "R", "epsilon", "delta", "eta",
                 "eta_g", "eta_tilde", "step_grid_factor", "noise_variance",
                 "gamma", "factorization", "trials", "final_mean",
                 "final_std"});
  for (const auto& c : curves) {
    csv.AddRow({c.label, std::string(ToString(c.mechanism)),
                std::to_string(c.local_steps), std::to_string(c.rounds),
                FormatDouble(c.budget.epsilon), FormatDouble(c.budget.delta),
                FormatDouble(c.steps.eta), FormatDouble(c.steps.eta_g),
                FormatDouble(c.steps.eta_tilde),
                FormatDouble(c.step_grid_factor),
                FormatDouble(c.calibration.variance),
                FormatDouble(c.calibration.gamma), c.factorization_tag,
                std::to_string(c.final_values.size()),
                FormatDouble(c.final_mean), FormatDouble(c.final_std)});
  }
  return csv.str();
}

void WriteExperimentOutputs(const ExperimentConfig& config,
                            const std::string& name,
                            const std::vector<AggregateResult>& curves) {
  const std::filesystem::path dir = config.output_dir;
  WriteTextFile(dir / (name + "_curves.csv"), CurvesCsv(curves));
  WriteTextFile(dir / (name + "_summary.csv"), SummaryCsv(curves));

  nlohmann::json resolved = nlohmann::json::parse(ExperimentConfigToJson(config));
  resolved["gaussian_stream"] = kGaussianStreamVersion;
  nlohmann::json list = nlohmann::json::array();
  for (const auto& c : curves) {
    list.push_back({{"label", c.label},
                    {"mechanism", std::string(ToString(c.mechanism))},
                    {"tau", c.local_steps},
                    {"R", c.rounds},
                    {"epsilon", c.budget.epsilon},
                    {"delta", c.budget.delta},
                    {"eta", c.steps.eta},
                    {"eta_g", c.steps.eta_g},
                    {"eta_tilde", c.steps.eta_tilde},
                    {"step_grid_factor", c.step_grid_factor},
                    {"noise_variance", c.calibration.variance},
                    {"noise_std", c.calibration.stddev},
                    {"zcdp_rho", c.calibration.rho},
                    {"gamma", c.calibration.gamma},
                    {"factorization", c.factorization_tag},
                    {"trial_seeds", c.trial_seeds},
                    {"warnings", c.warnings}});
  }
  resolved["curves"] = list;
  WriteTextFile(dir / "resolved_config.json", resolved.dump(2) + "\n");
}

SimulateResult RunSimulateCommand(const ExperimentConfig& config) {
  config.Validate();
  const StreamDataset dataset =
      MakeDataset(config, config.sim.learners, config.sim.rounds,
                  config.sim.local_steps, config.sim.dim,
                  DeriveSeed(config.seed, kSimulateData));
  const SimConfig sim = ResolveSimConfig(
      config.sim, dataset, DeriveSeed(config.seed, kSimulateNoise),
      config.trials);
  std::optional<Factorization<double>> factorization;
  if (sim.mechanism != Mechanism::kIndependentZcdp) {
    factorization = LoadOrComputeFactorization(config.factorization_cache,
                                               sim.rounds, sim.factorization);
  }
  SimulateResult out;
  out.trace = RunSimulation(sim, dataset,
                            factorization ? &*factorization : nullptr);
  if (factorization) {
    out.stacked_residual = VerifyStackedForm(
        out.trace, BuildPrefixWorkload<double>(sim.rounds).entries(),
        factorization->b);
    if (out.stacked_residual > kStackedResidualTol) {
      throw InvariantViolation("simulator.stacked_form",
                               "residual " + FormatDouble(out.stacked_residual));
    }
  }
  out.report = BuildRegretReport(out.trace.models, dataset);

  const std::filesystem::path dir = config.output_dir;
  WriteTextFile(dir / "trace.csv", TraceCsv(out.trace));
  if (config.dump_models) WriteTextFile(dir / "models.csv", ModelsCsv(out.trace));
  SaveRegretCsv(dir / "regret.csv", out.report);

  nlohmann::json resolved = nlohmann::json::parse(ExperimentConfigToJson(config));
  resolved["gaussian_stream"] = kGaussianStreamVersion;
  resolved["resolved_sim"] = {
      {"eta", sim.steps.eta},
      {"eta_g", sim.steps.eta_g},
      {"eta_tilde", sim.steps.eta_tilde},
      {"smoothness_estimate", sim.smoothness_estimate},
      {"noise_seed", sim.seed},
      {"noise_variance", out.trace.calibration.variance},
      {"zcdp_rho", out.trace.calibration.rho},
      {"gamma", out.trace.calibration.gamma},
      {"stacked_residual", out.stacked_residual},
      {"max_drift_ratio", out.trace.max_drift_ratio},
      {"dynamic_regret", out.report.dynamic_regret},
      {"static_regret", out.report.static_regret},
      {"warnings", out.trace.warnings}};
  WriteTextFile(dir / "resolved_config.json", resolved.dump(2) + "\n");
  return out;
}

std::string TraceCsv(const SimulationTrace& trace) {
  CsvWriter csv({"round", "mean_round_loss", "grad_norm", "noise_row_norm",
                 "virtual_residual"});
  csv.AddComment("mechanism=" + std::string(ToString(trace.mechanism)));
  csv.AddComment("noise_variance=" + FormatDouble(trace.calibration.variance));
  for (int r = 0; r < trace.rounds(); ++r) {
    csv.AddRow({std::to_string(r), FormatDouble(trace.round_mean_losses[r]),
                FormatDouble(trace.gradient_stack.row(r).norm()),
                FormatDouble(trace.noise_rows.row(r).norm()),
                FormatDouble(trace.virtual_residuals[r])});
  }
  return csv.str();
}

std::string ModelsCsv(const SimulationTrace& trace) {
  std::vector<std::string> header{"round"};
  for (Eigen::Index j = 0; j < trace.models.cols(); ++j) {
    header.push_back("coord_" + std::to_string(j + 1));
  }
  CsvWriter csv(std::move(header));
  for (Eigen::Index r = 0; r < trace.models.rows(); ++r) {
    std::vector<std::string> row{std::to_string(r)};
    for (Eigen::Index j = 0; j < trace.models.cols(); ++j) {
      row.push_back(FormatDouble(trace.models(r, j)));
    }
    csv.AddRow(row);
  }
  return csv.str();
}

}  // namespace dpofl
