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
#include <cmath>
#include <exception>
#include <string>

#include "dpofl/csv.hpp"
#include "dpofl/errors.hpp"
#include "dpofl/experiments.hpp"
#include "dpofl/random.hpp"

namespace dpofl {
namespace {

class Report {
 public:
  explicit Report(std::vector<PropertyResult>* out) : out_(out) {}

  void Add(const std::string& module, const std::string& invariant,
           bool passed, const std::string& detail) {
    out_->push_back({module, invariant, passed, detail});
  }

  // Runs `body`; an InvariantViolation fails the check under its own name.
  template <typename Fn>
  void Guard(const std::string& module, const std::string& invariant,
             Fn&& body) {
    try {
      body();
    } catch (const InvariantViolation& e) {
      Add(module, e.invariant(), false, e.what());
    } catch (const std::exception& e) {
      Add(module, invariant, false, e.what());
    }
  }

 private:
  std::vector<PropertyResult>* out_;
};

SimConfig SmallConfig(const StreamDataset& dataset, Mechanism mechanism,
                      std::uint64_t seed) {
  SimSettings settings;
  settings.mechanism = mechanism;
  return ResolveSimConfig(settings, dataset, seed, 1);
}

void CheckFactorizations(Report& report, const PropertySuiteOptions& options) {
  for (int rounds : {1, 2, 3, 16, 64}) {
    for (FactorizationMethod method : {FactorizationMethod::kSqrtNormalized,
                                       FactorizationMethod::kOptimized}) {
      const std::string tag =
          std::string(ToString(method)) + " R=" + std::to_string(rounds);
      report.Guard("workload_factorization", "factorization.reconstruction",
                   [&] {
                     const auto a = BuildPrefixWorkload<double>(rounds);
                     Factorization<double> f = Factorize(a, method);
                     if (options.inject_fault == "perturb_b") {
                       f.b(0, 0) += 1e-3;
                       RefreshSummaries(f);
                     }
                     ValidateFactorization(a, f);
                     report.Add("workload_factorization",
                                "factorization.reconstruction", true,
                                tag + " error " +
                                    FormatDouble(ReconstructionError(a, f)));
                   });
    }
  }
}

void CheckSimulatorIdentities(Report& report, int seeds) {
  for (int s = 0; s < seeds; ++s) {
    const std::uint64_t seed = DeriveSeed(0x5eed, s);
    const std::string tag = "seed " + std::to_string(s);
    report.Guard("ofl_simulator", "simulator.virtual_iterate", [&] {
      const StreamDataset dataset =
          GenerateSynthetic(4, 30, 3, 5, 0.1, 0.1, DeriveSeed(seed, 1));
      const SimConfig sim =
          SmallConfig(dataset, Mechanism::kCorrelatedMf, DeriveSeed(seed, 2));
      const auto a = BuildPrefixWorkload<double>(sim.rounds);
      const Factorization<double> f =
          Factorize(a, FactorizationMethod::kSqrtNormalized);
      // RunSimulation itself enforces the virtual-iterate, server-update and
      // drift identities and throws on the first violation.
      const SimulationTrace trace = RunSimulation(sim, dataset, &f);
      report.Add("ofl_simulator", "simulator.virtual_iterate",
                 trace.virtual_residuals.maxCoeff() <= kVirtualResidualTol,
                 tag + " max residual " +
                     FormatDouble(trace.virtual_residuals.maxCoeff()));
      report.Add("ofl_simulator", "simulator.drift_bound",
                 trace.max_drift_ratio <= 1.0 + 1e-12,
                 tag + " max ratio " + FormatDouble(trace.max_drift_ratio));
      const double stacked = VerifyStackedForm(trace, a.entries(), f.b);
      report.Add("ofl_simulator", "simulator.stacked_form",
                 stacked <= kStackedResidualTol,
                 tag + " residual " + FormatDouble(stacked));
      const double max_grad =
          trace.gradient_stack.rowwise().norm().maxCoeff();
      report.Add("ofl_simulator", "simulator.gradient_bound",
                 max_grad <= sim.clip_bound * (1.0 + 1e-12),
                 tag + " max ||g^r|| " + FormatDouble(max_grad));
    });
  }
}

void CheckSensitivity(Report& report, int seeds) {
  for (int s = 0; s < seeds; ++s) {
    const std::uint64_t seed = DeriveSeed(0x5e45, s);
    for (FactorizationMethod method :
         {FactorizationMethod::kTrivialIdentityC,
          FactorizationMethod::kSqrtNormalized}) {
      report.Guard("privacy_accounting", "privacy.sensitivity", [&] {
        const StreamDataset dataset =
            GenerateSynthetic(3, 12, 3, 5, 0.1, 0.1, DeriveSeed(seed, 1));
        const SimConfig sim = SmallConfig(dataset, Mechanism::kCorrelatedMf,
                                          DeriveSeed(seed, 2));
        const Factorization<double> f =
            Factorize(BuildPrefixWorkload<double>(sim.rounds), method);
        const NeighborTrialResult trial =
            RunNeighborTrial(sim, dataset, f, DeriveSeed(seed, 3));
        const bool ok = trial.check.ok && trial.reproduced &&
                        trial.check.rows_changed <= 1 &&
                        (trial.check.rows_changed == 0 ||
                         trial.check.changed_row == trial.round);
        report.Add("privacy_accounting", "privacy.sensitivity", ok,
                   std::string(ToString(method)) + " seed " +
                       std::to_string(s) + " ||C(G-G')||_F " +
                       FormatDouble(trial.check.lhs) + " <= " +
                       FormatDouble(trial.check.bound));
      });
    }
  }
}

void CheckCalibration(Report& report) {
  struct Golden {
    const char* name;
    double value;
    double expected;
    double tol;
  };
  // References evaluated at 40 significant digits.
  const Golden goldens[] = {
      {"correlated (5,1e-3)",
       CalibrateCorrelated({5.0, 1e-3}, 1.0, 1.0).variance,
       3.0104816892742838567, 1e-12},
      {"independent (5,1e-3)",
       CalibrateIndependentZcdp({5.0, 1e-3}, 1.0).variance,
       2.9563611016675289327, 1e-12},
      {"independent (1,1e-3)",
       CalibrateIndependentZcdp({1.0, 1e-3}, 1.0).variance,
       59.194468350183952381, 1e-12},
  };
  for (const Golden& g : goldens) {
    report.Add("privacy_accounting", "privacy.calibration",
               std::abs(g.value - g.expected) <= g.tol * g.expected,
               std::string(g.name) + " V^2 = " + FormatDouble(g.value));
  }
}

void CheckDeterminism(Report& report) {
  report.Guard("experiment_cli", "determinism.trace", [&] {
    const StreamDataset d1 = GenerateSynthetic(3, 20, 2, 5, 0.1, 0.1, 7);
    const StreamDataset d2 = GenerateSynthetic(3, 20, 2, 5, 0.1, 0.1, 7);
    const bool data_equal = d1.features() == d2.features() &&
                            d1.labels() == d2.labels();
    report.Add("data_stream", "determinism.dataset", data_equal,
               "two generations with seed 7");
    const Factorization<double> f = Factorize(
        BuildPrefixWorkload<double>(20), FactorizationMethod::kSqrtNormalized);
    const SimConfig sim = SmallConfig(d1, Mechanism::kCorrelatedMf, 11);
    const std::string t1 = TraceCsv(RunSimulation(sim, d1, &f));
    const std::string t2 = TraceCsv(RunSimulation(sim, d2, &f));
    report.Add("experiment_cli", "determinism.trace", t1 == t2,
               "trace CSV bytes " + std::to_string(t1.size()));
  });
}

void CheckGradientNorm(Report& report) {
  report.Guard("metrics_regret", "regret.gradient_norm_diagnostic", [&] {
    const StreamDataset dataset = GenerateSynthetic(4, 5, 4, 5, 0.1, 0.1, 3);
    const std::vector<OracleSolution> oracles = SolvePerRoundOracles(dataset);
    const double smoothness = SmoothnessEstimate(dataset);
    int violations = 0;
    double max_ratio = 0.0;
    for (int r = 0; r < dataset.rounds(); ++r) {
      const GradientNormDiagnostic diag = CheckGradientNormIdentity(
          dataset, r, oracles[r], smoothness, 20, DeriveSeed(3, r));
      violations += diag.violations;
      max_ratio = std::max(max_ratio, diag.max_ratio);
    }
    // L_hat is a plug-in estimate, so this never fails the suite.
    report.Add("metrics_regret", "regret.gradient_norm_diagnostic", true,
               std::to_string(violations) + " warnings, max ratio " +
                   FormatDouble(max_ratio));
  });
}

}  // namespace

std::vector<PropertyResult> RunPropertySuite(
    const PropertySuiteOptions& options) {
  if (!options.inject_fault.empty() && options.inject_fault != "perturb_b") {
    throw ConfigError("unknown fault '" + options.inject_fault + "'");
  }
  std::vector<PropertyResult> out;
  Report report(&out);
  CheckFactorizations(report, options);
  CheckSimulatorIdentities(report, options.seeds);
  CheckSensitivity(report, options.seeds);
  CheckCalibration(report);
  CheckDeterminism(report);
  CheckGradientNorm(report);
  return out;
}

}  // namespace dpofl
