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
#include <set>
#include <string>

#include "dpofl/csv.hpp"
#include "dpofl/errors.hpp"
#include "dpofl/experiments.hpp"
#include "json.hpp"

namespace dpofl {

using nlohmann::json;

std::string_view ToString(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kBnormStudy:
      return "bnorm_study";
    case ExperimentKind::kImpactTau:
      return "impact_tau";
    case ExperimentKind::kBudgetComparison:
      return "budget_comparison";
    case ExperimentKind::kCustom:
      return "custom";
  }
  return "unknown";
}

ExperimentKind ParseExperimentKind(std::string_view tag) {
  if (tag == "bnorm_study") return ExperimentKind::kBnormStudy;
  if (tag == "impact_tau") return ExperimentKind::kImpactTau;
  if (tag == "budget_comparison") return ExperimentKind::kBudgetComparison;
  if (tag == "custom") return ExperimentKind::kCustom;
  throw ConfigError("unknown experiment '" + std::string(tag) + "'");
}

void ExperimentConfig::Validate() const {
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (data.alpha < 0.0 || data.beta < 0.0) {
    throw ConfigError("data.alpha and data.beta must be nonnegative");
  }
  if (sim.learners < 1 || sim.rounds < 1 || sim.local_steps < 1 ||
      sim.dim < 1) {
    throw ConfigError("sim.learners/rounds/local_steps/dim must be positive");
  }
  if (sim.eta_tilde && !(*sim.eta_tilde > 0.0)) {
    throw ConfigError("sim.eta_tilde must be positive");
  }
  if (sim.eta && !(*sim.eta > 0.0)) throw ConfigError("sim.eta must be positive");
  if (!(sim.eta_g > 0.0)) throw ConfigError("sim.eta_g must be positive");
  if (!(sim.clip_bound > 0.0)) throw ConfigError("sim.clip_bound must be positive");
  if (!(sim.sensitivity_scale > 0.0)) {
    throw ConfigError("sim.sensitivity_scale must be positive");
  }
  try {
    sim.budget.Validate();
    for (const auto& b : budget_list) b.Validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("privacy budget: ") + e.what());
  }
  if (experiment == ExperimentKind::kImpactTau) {
    if (tau_list.empty() || tau_list.size() != rounds_list.size()) {
      throw ConfigError("tau_list and rounds_list must be nonempty and paired");
    }
    const long total = static_cast<long>(tau_list[0]) * rounds_list[0];
    for (std::size_t k = 0; k < tau_list.size(); ++k) {
      if (tau_list[k] < 1 || rounds_list[k] < 1) {
        throw ConfigError("tau_list / rounds_list entries must be positive");
      }
      if (static_cast<long>(tau_list[k]) * rounds_list[k] != total) {
        throw ConfigError("tau_k * R_k must be the same for every entry "
                          "(equal total data)");
      }
    }
  }
  if (experiment == ExperimentKind::kBudgetComparison) {
    if (budget_list.empty()) throw ConfigError("budget_list is empty");
    if (baseline_step_grid.empty()) {
      throw ConfigError("baseline_step_grid is empty");
    }
    for (double f : baseline_step_grid) {
      if (!(f > 0.0)) throw ConfigError("baseline_step_grid must be positive");
    }
  }
  for (int r : bnorm_rounds) {
    if (r < 1) throw ConfigError("bnorm rounds must be >= 1");
  }
}

namespace {

void CheckKeys(const json& j, const std::set<std::string>& allowed,
               const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& item : j.items()) {
    if (!allowed.contains(item.key())) {
      throw ConfigError("unknown key '" + where + item.key() + "'");
    }
  }
}

template <typename T>
T Get(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad value for '" + where + key + "': " + e.what());
  }
}

PrivacyBudget ParseBudget(const json& j, const std::string& where) {
  if (j.is_array() && j.size() == 2) {
    return {j[0].get<double>(), j[1].get<double>()};
  }
  if (j.is_object()) {
    CheckKeys(j, {"epsilon", "delta"}, where);
    return {Get<double>(j, "epsilon", where), Get<double>(j, "delta", where)};
  }
  throw ConfigError(where + " must be [epsilon, delta] or an object");
}

}  // namespace

ExperimentConfig ParseExperimentConfig(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  CheckKeys(root,
            {"experiment", "seed", "trials", "jobs", "output_dir", "data",
             "sim", "tau_list", "rounds_list", "budget_list",
             "baseline_step_grid", "bnorm", "factorization_cache",
             "data_cache", "dump_models", "schema_version"},
            "");
  if (root.contains("schema_version") &&
      Get<int>(root, "schema_version", "") != kCsvSchemaVersion) {
    throw ConfigError("unsupported schema_version");
  }
  ExperimentKind kind = ExperimentKind::kCustom;
  if (root.contains("experiment")) {
    kind = ParseExperimentKind(Get<std::string>(root, "experiment", ""));
  }
  ExperimentConfig config = DefaultExperimentConfig(kind);
  try {
    if (root.contains("seed")) config.seed = Get<std::uint64_t>(root, "seed", "");
    if (root.contains("trials")) config.trials = Get<int>(root, "trials", "");
    if (root.contains("jobs")) config.jobs = Get<int>(root, "jobs", "");
    if (root.contains("output_dir")) {
      config.output_dir = Get<std::string>(root, "output_dir", "");
    }
    if (root.contains("dump_models")) {
      config.dump_models = Get<bool>(root, "dump_models", "");
    }
    if (root.contains("factorization_cache")) {
      config.factorization_cache =
          Get<std::string>(root, "factorization_cache", "");
    }
    if (root.contains("data_cache")) {
      config.data_cache = Get<std::string>(root, "data_cache", "");
    }
    if (root.contains("data")) {
      const json& d = root["data"];
      CheckKeys(d, {"alpha", "beta", "normalize"}, "data.");
      if (d.contains("alpha")) config.data.alpha = Get<double>(d, "alpha", "data.");
      if (d.contains("beta")) config.data.beta = Get<double>(d, "beta", "data.");
      if (d.contains("normalize")) {
        config.data.normalize = Get<bool>(d, "normalize", "data.");
      }
    }
    if (root.contains("sim")) {
      const json& s = root["sim"];
      const std::string w = "sim.";
      CheckKeys(s,
                {"learners", "rounds", "local_steps", "dim", "eta_tilde",
                 "eta", "eta_g", "clip_bound", "epsilon", "delta", "mechanism",
                 "factorization", "sensitivity_scale", "noise_variance"},
                w);
      SimSettings& sim = config.sim;
      if (s.contains("learners")) sim.learners = Get<int>(s, "learners", w);
      if (s.contains("rounds")) sim.rounds = Get<int>(s, "rounds", w);
      if (s.contains("local_steps")) {
        sim.local_steps = Get<int>(s, "local_steps", w);
      }
      if (s.contains("dim")) sim.dim = Get<int>(s, "dim", w);
      if (s.contains("eta_tilde") && !s["eta_tilde"].is_null()) {
        sim.eta_tilde = Get<double>(s, "eta_tilde", w);
      }
      if (s.contains("eta") && !s["eta"].is_null()) {
        sim.eta = Get<double>(s, "eta", w);
      }
      if (s.contains("eta_g")) sim.eta_g = Get<double>(s, "eta_g", w);
      if (s.contains("clip_bound")) {
        sim.clip_bound = Get<double>(s, "clip_bound", w);
      }
      if (s.contains("epsilon")) sim.budget.epsilon = Get<double>(s, "epsilon", w);
      if (s.contains("delta")) sim.budget.delta = Get<double>(s, "delta", w);
      if (s.contains("mechanism")) {
        sim.mechanism = ParseMechanism(Get<std::string>(s, "mechanism", w));
      }
      if (s.contains("factorization")) {
        sim.factorization =
            ParseFactorizationMethod(Get<std::string>(s, "factorization", w));
      }
      if (s.contains("sensitivity_scale")) {
        sim.sensitivity_scale = Get<double>(s, "sensitivity_scale", w);
      }
      if (s.contains("noise_variance") && !s["noise_variance"].is_null()) {
        sim.noise_variance = Get<double>(s, "noise_variance", w);
      }
    }
    if (root.contains("tau_list")) {
      config.tau_list = Get<std::vector<int>>(root, "tau_list", "");
    }
    if (root.contains("rounds_list")) {
      config.rounds_list = Get<std::vector<int>>(root, "rounds_list", "");
    }
    if (root.contains("budget_list")) {
      config.budget_list.clear();
      for (const auto& b : root["budget_list"]) {
        config.budget_list.push_back(ParseBudget(b, "budget_list[]"));
      }
    }
    if (root.contains("baseline_step_grid")) {
      config.baseline_step_grid =
          Get<std::vector<double>>(root, "baseline_step_grid", "");
    }
    if (root.contains("bnorm")) {
      const json& b = root["bnorm"];
      CheckKeys(b, {"rounds_list", "methods"}, "bnorm.");
      if (b.contains("rounds_list")) {
        config.bnorm_rounds = Get<std::vector<int>>(b, "rounds_list", "bnorm.");
      }
      if (b.contains("methods")) {
        config.bnorm_methods.clear();
        for (const auto& m :
             Get<std::vector<std::string>>(b, "methods", "bnorm.")) {
          config.bnorm_methods.push_back(ParseFactorizationMethod(m));
        }
      }
    }
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  config.Validate();
  return config;
}

ExperimentConfig LoadExperimentConfig(const std::filesystem::path& path) {
  std::string text;
  try {
    text = ReadTextFile(path);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return ParseExperimentConfig(text);
}

ExperimentConfig DefaultExperimentConfig(ExperimentKind kind) {
  ExperimentConfig config;
  config.experiment = kind;
  switch (kind) {
    case ExperimentKind::kImpactTau:
      config.output_dir = "out/impact_tau";
      config.sim.learners = 10;
      config.sim.rounds = 800;
      config.sim.local_steps = 1;
      config.sim.budget = {5.0, 1e-3};
      break;
    case ExperimentKind::kBudgetComparison:
      config.output_dir = "out/budget_compare";
      config.sim.learners = 10;
      config.sim.rounds = 800;
      config.sim.local_steps = 10;
      break;
    case ExperimentKind::kBnormStudy:
      config.output_dir = "out/bnorm_study";
      break;
    case ExperimentKind::kCustom:
      config.output_dir = "out/simulate";
      config.trials = 1;
      config.sim.rounds = 100;
      config.sim.local_steps = 4;
      break;
  }
  return config;
}

std::string ExperimentConfigToJson(const ExperimentConfig& config) {
  json j;
  j["schema_version"] = kCsvSchemaVersion;
  j["experiment"] = std::string(ToString(config.experiment));
  j["seed"] = config.seed;
  j["trials"] = config.trials;
  j["jobs"] = config.jobs;
  j["output_dir"] = config.output_dir.string();
  j["data"] = {{"alpha", config.data.alpha},
               {"beta", config.data.beta},
               {"normalize", config.data.normalize}};
  json sim = {{"learners", config.sim.learners},
              {"rounds", config.sim.rounds},
              {"local_steps", config.sim.local_steps},
              {"dim", config.sim.dim},
              {"eta_g", config.sim.eta_g},
              {"clip_bound", config.sim.clip_bound},
              {"epsilon", config.sim.budget.epsilon},
              {"delta", config.sim.budget.delta},
              {"mechanism", std::string(ToString(config.sim.mechanism))},
              {"factorization", std::string(ToString(config.sim.factorization))},
              {"sensitivity_scale", config.sim.sensitivity_scale}};
  sim["eta_tilde"] =
      config.sim.eta_tilde ? json(*config.sim.eta_tilde) : json(nullptr);
  sim["eta"] = config.sim.eta ? json(*config.sim.eta) : json(nullptr);
  sim["noise_variance"] = config.sim.noise_variance
                              ? json(*config.sim.noise_variance)
                              : json(nullptr);
  j["sim"] = sim;
  j["tau_list"] = config.tau_list;
  j["rounds_list"] = config.rounds_list;
  json budgets = json::array();
  for (const auto& b : config.budget_list) {
    budgets.push_back({b.epsilon, b.delta});
  }
  j["budget_list"] = budgets;
  j["baseline_step_grid"] = config.baseline_step_grid;
  std::vector<std::string> methods;
  for (auto m : config.bnorm_methods) methods.emplace_back(ToString(m));
  j["bnorm"] = {{"rounds_list", config.bnorm_rounds}, {"methods", methods}};
  if (config.factorization_cache) {
    j["factorization_cache"] = config.factorization_cache->string();
  }
  if (config.data_cache) j["data_cache"] = config.data_cache->string();
  j["dump_models"] = config.dump_models;
  return j.dump(2) + "\n";
}

}  // namespace dpofl
