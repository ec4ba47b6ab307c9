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
// Command-line driver: dpofl <subcommand> [options].
//
// Exit codes: 0 success, 1 invariant violation, 2 configuration error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "dpofl/csv.hpp"
#include "dpofl/errors.hpp"
#include "dpofl/experiments.hpp"
#include "dpofl/factorization_io.hpp"
#include "json.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvariant = 1;
constexpr int kExitConfig = 2;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::string out;
  std::string factorization_cache;
  std::string data_cache;
  std::optional<double> sensitivity_scale;
};

void AddCommonFlags(CLI::App* app, CommonFlags* flags) {
  app->add_option("--config", flags->config, "JSON experiment config");
  app->add_option("--seed", flags->seed, "master seed (overrides config)");
  app->add_option("--jobs", flags->jobs, "concurrent trials")
      ->check(CLI::PositiveNumber);
  app->add_option("--out", flags->out, "output directory");
  app->add_option("--factorization-cache", flags->factorization_cache,
                  "directory of cached B/C bundles");
  app->add_option("--data-cache", flags->data_cache,
                  "directory of cached datasets");
  app->add_option("--sensitivity-scale", flags->sensitivity_scale,
                  "multiplier on the clip bound used for calibration");
}

dpofl::ExperimentConfig BuildConfig(dpofl::ExperimentKind kind,
                                    const CommonFlags& flags) {
  dpofl::ExperimentConfig config;
  if (flags.config.empty()) {
    config = dpofl::DefaultExperimentConfig(kind);
  } else {
    nlohmann::json root;
    try {
      root = nlohmann::json::parse(dpofl::ReadTextFile(flags.config));
    } catch (const nlohmann::json::exception& e) {
      throw dpofl::ConfigError(flags.config + ": " + e.what());
    } catch (const std::exception& e) {
      throw dpofl::ConfigError(e.what());
    }
    if (!root.is_object()) {
      throw dpofl::ConfigError(flags.config + ": top level must be an object");
    }
    if (!root.contains("experiment")) {
      root["experiment"] = std::string(dpofl::ToString(kind));
    }
    config = dpofl::ParseExperimentConfig(root.dump());
    if (config.experiment != kind) {
      throw dpofl::ConfigError(
          "config declares experiment '" +
          std::string(dpofl::ToString(config.experiment)) +
          "' but the subcommand runs '" + std::string(dpofl::ToString(kind)) +
          "'");
    }
  }
  if (flags.seed) config.seed = *flags.seed;
  if (flags.jobs) config.jobs = *flags.jobs;
  if (!flags.out.empty()) config.output_dir = flags.out;
  if (!flags.factorization_cache.empty()) {
    config.factorization_cache = flags.factorization_cache;
  }
  if (!flags.data_cache.empty()) config.data_cache = flags.data_cache;
  if (flags.sensitivity_scale) {
    config.sim.sensitivity_scale = *flags.sensitivity_scale;
  }
  config.Validate();
  return config;
}

void PrintWarnings(const std::vector<dpofl::AggregateResult>& curves) {
  for (const auto& c : curves) {
    for (const auto& w : c.warnings) {
      std::cerr << "warning [" << c.label << "]: " << w << "\n";
    }
  }
}

void PrintSummary(const std::vector<dpofl::AggregateResult>& curves) {
  for (const auto& c : curves) {
    std::cout << c.label << ": final loss error " << c.final_mean << " +- "
              << c.final_std << " (" << c.final_values.size()
              << " trials)\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private online federated learning driver"};
  app.require_subcommand(1);
  CommonFlags flags;

  CLI::App* factorize =
      app.add_subcommand("factorize", "factorize the prefix-sum workload");
  int fact_rounds = 100;
  std::string fact_method = "sqrt_normalized";
  factorize->add_option("--rounds,-R", fact_rounds, "workload size R")
      ->check(CLI::PositiveNumber);
  factorize->add_option("--method", fact_method,
                        "sqrt_normalized | optimized | trivial_identity_c | "
                        "trivial_identity_b");
  AddCommonFlags(factorize, &flags);

  CLI::App* bnorm = app.add_subcommand("bnorm-study", "||B||_F^2 versus R");
  AddCommonFlags(bnorm, &flags);
  CLI::App* simulate =
      app.add_subcommand("simulate", "single run with trace and regret");
  AddCommonFlags(simulate, &flags);
  CLI::App* impact =
      app.add_subcommand("impact-tau", "loss error across local-step counts");
  AddCommonFlags(impact, &flags);
  CLI::App* budget = app.add_subcommand(
      "budget-compare", "correlated versus independent noise per budget");
  AddCommonFlags(budget, &flags);

  CLI::App* verify = app.add_subcommand("verify", "run the property suite");
  dpofl::PropertySuiteOptions suite;
  verify->add_option("--seeds", suite.seeds, "seeds for sweep checks")
      ->check(CLI::PositiveNumber);
  verify->add_option("--inject-fault", suite.inject_fault,
                     "perturb_b: corrupt B before validation");
  AddCommonFlags(verify, &flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*factorize) {
      const auto method = dpofl::ParseFactorizationMethod(fact_method);
      const auto f = dpofl::LoadOrComputeFactorization(
          flags.factorization_cache.empty()
              ? std::nullopt
              : std::optional<std::filesystem::path>(flags.factorization_cache),
          fact_rounds, method);
      dpofl::ValidateFactorization(
          dpofl::BuildPrefixWorkload<double>(fact_rounds), f);
      const std::filesystem::path out =
          flags.out.empty() ? std::filesystem::path("out/factorization")
                            : std::filesystem::path(flags.out);
      dpofl::SaveFactorization(out, f);
      std::cout << "R=" << fact_rounds << " method=" << dpofl::ToString(method)
                << " gamma=" << dpofl::FormatDouble(f.gamma)
                << " frob_sq_b=" << dpofl::FormatDouble(f.frob_sq_b) << "\n";
    } else if (*bnorm) {
      const auto config =
          BuildConfig(dpofl::ExperimentKind::kBnormStudy, flags);
      const auto rows =
          dpofl::RunBnormStudy(config.bnorm_rounds, config.bnorm_methods);
      dpofl::WriteTextFile(config.output_dir / "bnorm_study.csv",
                           dpofl::BnormStudyCsv(rows));
      dpofl::WriteTextFile(config.output_dir / "resolved_config.json",
                           dpofl::ExperimentConfigToJson(config) + "\n");
      for (const auto& row : rows) {
        std::cout << dpofl::ToString(row.method) << " R=" << row.rounds
                  << " ||B||_F^2/R^2=" << row.ratio << "\n";
      }
    } else if (*simulate) {
      const auto config = BuildConfig(dpofl::ExperimentKind::kCustom, flags);
      const auto result = dpofl::RunSimulateCommand(config);
      for (const auto& w : result.trace.warnings) {
        std::cerr << "warning: " << w << "\n";
      }
      for (const auto& w : result.report.warnings) {
        std::cerr << "warning: " << w << "\n";
      }
      std::cout << "dynamic regret " << result.report.dynamic_regret
                << ", static regret " << result.report.static_regret
                << ", final loss error "
                << result.report.loss_error_series[
                       result.report.loss_error_series.size() - 1]
                << "\n";
    } else if (*impact) {
      const auto config = BuildConfig(dpofl::ExperimentKind::kImpactTau, flags);
      const auto curves = dpofl::RunImpactTau(config);
      dpofl::WriteExperimentOutputs(config, "impact_tau", curves);
      PrintWarnings(curves);
      PrintSummary(curves);
    } else if (*budget) {
      const auto config =
          BuildConfig(dpofl::ExperimentKind::kBudgetComparison, flags);
      const auto curves = dpofl::RunBudgetComparison(config);
      dpofl::WriteExperimentOutputs(config, "budget_compare", curves);
      PrintWarnings(curves);
      PrintSummary(curves);
    } else if (*verify) {
      const auto results = dpofl::RunPropertySuite(suite);
      int failed = 0;
      for (const auto& r : results) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.module << " "
                  << r.invariant << ": " << r.detail << "\n";
        if (!r.passed) ++failed;
      }
      std::cout << results.size() - failed << "/" << results.size()
                << " checks passed\n";
      return failed == 0 ? kExitOk : kExitInvariant;
    }
  } catch (const dpofl::InvariantViolation& e) {
    std::cerr << "invariant violated [" << e.invariant() << "]: " << e.what()
              << "\n";
    return kExitInvariant;
  } catch (const dpofl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const dpofl::InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvariant;
  }
  return kExitOk;
}
