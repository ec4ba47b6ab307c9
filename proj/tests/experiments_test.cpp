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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <set>
#include <stdexcept>

#include "dpofl/csv.hpp"
#include "dpofl/errors.hpp"

namespace dpofl {
namespace {

namespace fs = std::filesystem;

TEST(ConfigTest, DefaultsPerKind) {
  const auto impact = DefaultExperimentConfig(ExperimentKind::kImpactTau);
  EXPECT_EQ(impact.tau_list, (std::vector<int>{1, 2, 4}));
  EXPECT_EQ(impact.rounds_list, (std::vector<int>{800, 400, 200}));
  EXPECT_EQ(impact.trials, 20);
  const auto budget = DefaultExperimentConfig(ExperimentKind::kBudgetComparison);
  EXPECT_EQ(budget.sim.local_steps, 10);
  EXPECT_EQ(budget.sim.rounds, 800);
  EXPECT_EQ(budget.budget_list.size(), 2u);
  EXPECT_NO_THROW(impact.Validate());
  EXPECT_NO_THROW(budget.Validate());
}

TEST(ConfigTest, ParsesNestedKeys) {
  const auto config = ParseExperimentConfig(R"({
    "experiment": "budget_comparison",
    "seed": 7,
    "trials": 3,
    "data": {"alpha": 0.2, "beta": 0.05},
    "sim": {"rounds": 40, "eta_tilde": 0.25, "mechanism": "correlated_mf"},
    "budget_list": [[2, 1e-4], {"epsilon": 0.5, "delta": 1e-3}]
  })");
  EXPECT_EQ(config.experiment, ExperimentKind::kBudgetComparison);
  EXPECT_EQ(config.seed, 7u);
  EXPECT_EQ(config.trials, 3);
  EXPECT_EQ(config.data.alpha, 0.2);
  EXPECT_EQ(config.sim.rounds, 40);
  EXPECT_EQ(config.sim.local_steps, 10);
  ASSERT_TRUE(config.sim.eta_tilde.has_value());
  EXPECT_EQ(*config.sim.eta_tilde, 0.25);
  ASSERT_EQ(config.budget_list.size(), 2u);
  EXPECT_EQ(config.budget_list[0].delta, 1e-4);
  EXPECT_EQ(config.budget_list[1].epsilon, 0.5);
}

TEST(ConfigTest, RejectsUnknownKeys) {
  EXPECT_THROW(ParseExperimentConfig(R"({"sede": 1})"), ConfigError);
  EXPECT_THROW(ParseExperimentConfig(R"({"sim": {"lr": 1}})"), ConfigError);
}

TEST(ConfigTest, RejectsBadValues) {
  EXPECT_THROW(ParseExperimentConfig("{"), ConfigError);
  EXPECT_THROW(ParseExperimentConfig(R"({"trials": "many"})"), ConfigError);
  EXPECT_THROW(ParseExperimentConfig(R"({"sim": {"epsilon": -1}})"),
               ConfigError);
  EXPECT_THROW(ParseExperimentConfig(R"({"budget_list": [["a", 1]]})"),
               ConfigError);
  EXPECT_THROW(ParseExperimentConfig(R"({"sim": {"mechanism": "laplace"}})"),
               ConfigError);
}

TEST(ConfigTest, ImpactTauNeedsEqualTotalData) {
  EXPECT_THROW(ParseExperimentConfig(R"({"experiment": "impact_tau",
      "tau_list": [1, 2], "rounds_list": [100, 60]})"),
               ConfigError);
  EXPECT_NO_THROW(ParseExperimentConfig(R"({"experiment": "impact_tau",
      "tau_list": [1, 2], "rounds_list": [100, 50]})"));
}

TEST(ConfigTest, JsonRoundTrip) {
  auto config = DefaultExperimentConfig(ExperimentKind::kBudgetComparison);
  config.seed = 99;
  config.sim.eta_tilde = 0.125;
  config.baseline_step_grid = {1.0, 0.5};
  const auto back = ParseExperimentConfig(ExperimentConfigToJson(config));
  EXPECT_EQ(ExperimentConfigToJson(back), ExperimentConfigToJson(config));
}

TEST(RunIndexedTest, KeepsIndexOrder) {
  const std::function<int(int)> square = [](int k) { return k * k; };
  for (int jobs : {1, 3, 8}) {
    const auto out = RunIndexed<int>(20, jobs, square);
    ASSERT_EQ(out.size(), 20u);
    for (int k = 0; k < 20; ++k) EXPECT_EQ(out[k], k * k);
  }
}

TEST(RunIndexedTest, PropagatesFailure) {
  const std::function<int(int)> fail = [](int k) -> int {
    if (k == 5) throw std::runtime_error("boom");
    return k;
  };
  EXPECT_THROW(RunIndexed<int>(10, 2, fail), std::runtime_error);
}

TEST(SummarizeTrialsTest, SampleStandardDeviation) {
  Eigen::MatrixXd per_trial(3, 2);
  per_trial << 1, 10, 2, 10, 6, 10;
  Eigen::VectorXd mean, stddev;
  SummarizeTrials(per_trial, &mean, &stddev);
  EXPECT_DOUBLE_EQ(mean[0], 3.0);
  EXPECT_DOUBLE_EQ(stddev[0], std::sqrt((4.0 + 1.0 + 9.0) / 2.0));
  EXPECT_DOUBLE_EQ(stddev[1], 0.0);
  SummarizeTrials(per_trial.topRows(1), &mean, &stddev);
  EXPECT_DOUBLE_EQ(stddev[0], 0.0);
}

class ExperimentRunTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("dpofl_exp_" + std::string(::testing::UnitTest::GetInstance()
                                           ->current_test_info()
                                           ->name()));
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

TEST_F(ExperimentRunTest, ImpactTauSmoke) {
  auto config = DefaultExperimentConfig(ExperimentKind::kImpactTau);
  config.trials = 1;
  config.tau_list = {1};
  config.rounds_list = {10};
  const auto curves = RunImpactTau(config);
  ASSERT_EQ(curves.size(), 1u);
  EXPECT_EQ(curves[0].mean.size(), 10);
  EXPECT_EQ(curves[0].stddev, Eigen::VectorXd::Zero(10));
}

TEST_F(ExperimentRunTest, BudgetComparisonSmokeAndDeterminism) {
  auto config = DefaultExperimentConfig(ExperimentKind::kBudgetComparison);
  config.trials = 2;
  config.sim.rounds = 50;
  config.output_dir = dir_ / "a";
  const auto curves = RunBudgetComparison(config);
  ASSERT_EQ(curves.size(), 4u);
  EXPECT_EQ(curves[0].mechanism, Mechanism::kCorrelatedMf);
  EXPECT_EQ(curves[1].mechanism, Mechanism::kIndependentZcdp);
  for (const auto& c : curves) EXPECT_EQ(c.mean.size(), 50);
  WriteExperimentOutputs(config, "budget_compare", curves);

  auto parallel = config;
  parallel.jobs = 2;
  parallel.output_dir = dir_ / "b";
  WriteExperimentOutputs(parallel, "budget_compare",
                         RunBudgetComparison(parallel));
  for (const char* name :
       {"budget_compare_curves.csv", "budget_compare_summary.csv"}) {
    const std::string a = ReadTextFile(dir_ / "a" / name);
    EXPECT_EQ(a.rfind("# schema_version=1\n", 0), 0u);
    EXPECT_EQ(a, ReadTextFile(dir_ / "b" / name)) << name;
  }
  EXPECT_TRUE(fs::exists(dir_ / "a" / "resolved_config.json"));
}

TEST_F(ExperimentRunTest, TrialSeedsNeverRepeat) {
  auto config = DefaultExperimentConfig(ExperimentKind::kBudgetComparison);
  config.trials = 3;
  config.sim.rounds = 10;
  std::set<std::uint64_t> seen;
  std::size_t total = 0;
  for (const auto& c : RunBudgetComparison(config)) {
    for (auto s : c.trial_seeds) {
      seen.insert(s);
      ++total;
    }
  }
  EXPECT_EQ(seen.size(), total);
}

TEST_F(ExperimentRunTest, DataCacheReuse) {
  auto config = DefaultExperimentConfig(ExperimentKind::kCustom);
  config.data_cache = dir_;
  const StreamDataset first = MakeDataset(config, 3, 4, 2, 5, 77);
  ASSERT_FALSE(fs::is_empty(dir_));
  const StreamDataset second = MakeDataset(config, 3, 4, 2, 5, 77);
  EXPECT_EQ(first.features(), second.features());
  EXPECT_EQ(first.labels(), second.labels());
}

TEST_F(ExperimentRunTest, SimulateWritesTraceAndRegret) {
  auto config = DefaultExperimentConfig(ExperimentKind::kCustom);
  config.sim.rounds = 12;
  config.dump_models = true;
  config.output_dir = dir_;
  const SimulateResult result = RunSimulateCommand(config);
  EXPECT_LE(result.stacked_residual, 1e-9);
  EXPECT_EQ(result.report.loss_error_series.size(), 12);
  for (const char* name : {"trace.csv", "models.csv", "regret.csv",
                           "resolved_config.json"}) {
    EXPECT_TRUE(fs::exists(dir_ / name)) << name;
  }
}

TEST(BnormStudyCsvTest, EmptyListHasHeaderOnly) {
  EXPECT_EQ(BnormStudyCsv(RunBnormStudy({}, {FactorizationMethod::kSqrtNormalized})),
            "# schema_version=1\nR,method,frob_sq_b,ratio\n");
}

TEST(PropertySuiteTest, FreshRunPasses) {
  PropertySuiteOptions options;
  options.seeds = 2;
  for (const auto& r : RunPropertySuite(options)) {
    EXPECT_TRUE(r.passed) << r.module << " " << r.invariant << ": " << r.detail;
  }
}

TEST(PropertySuiteTest, InjectedFaultIsNamed) {
  PropertySuiteOptions options;
  options.seeds = 1;
  options.inject_fault = "perturb_b";
  int failures = 0;
  for (const auto& r : RunPropertySuite(options)) {
    if (r.passed) continue;
    ++failures;
    EXPECT_EQ(r.module, "workload_factorization");
    EXPECT_EQ(r.invariant, "factorization.reconstruction");
  }
  EXPECT_GT(failures, 0);
}

}  // namespace
}  // namespace dpofl
