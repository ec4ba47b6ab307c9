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
#include "dpofl/regret.hpp"

#include <algorithm>
#include <cmath>

#include "dpofl/csv.hpp"
#include "dpofl/errors.hpp"
#include "dpofl/random.hpp"

namespace dpofl {
namespace {

struct Objective {
  Eigen::Ref<const Eigen::MatrixXd> features;
  Eigen::Ref<const Eigen::VectorXd> labels;
  double ridge;

  double Value(const Eigen::VectorXd& x) const {
    return MeanLogisticLoss(x, features, labels) + 0.5 * ridge * x.squaredNorm();
  }

  // Gradient and Hessian of the mean loss (+ ridge).
  void Derivatives(const Eigen::VectorXd& x, Eigen::VectorXd* grad,
                   Eigen::MatrixXd* hess) const {
    const Eigen::Index m = features.rows();
    const Eigen::VectorXd margins = (features * x).cwiseProduct(labels);
    Eigen::VectorXd coeff(m);   // d loss / d margin * label
    Eigen::VectorXd weight(m);  // sigma (1 - sigma)
    for (Eigen::Index k = 0; k < m; ++k) {
      const double s = Sigmoid(-margins[k]);
      coeff[k] = -labels[k] * s;
      weight[k] = s * (1.0 - s);
    }
    const double inv_m = 1.0 / static_cast<double>(m);
    *grad = inv_m * (features.transpose() * coeff) + ridge * x;
    if (hess != nullptr) {
      *hess = inv_m * (features.transpose() * weight.asDiagonal() * features);
      hess->diagonal().array() += ridge;
    }
  }
};

OracleSolution Descend(const Eigen::Ref<const Eigen::MatrixXd>& features,
                       const Eigen::Ref<const Eigen::VectorXd>& labels,
                       double ridge, double tol, int max_iters) {
  const Objective obj{features, labels, ridge};
  Eigen::VectorXd x = Eigen::VectorXd::Zero(features.cols());
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  double value = obj.Value(x);

  OracleSolution out;
  out.ridge = ridge;
  int iter = 0;
  for (; iter < max_iters; ++iter) {
    obj.Derivatives(x, &grad, &hess);
    if (grad.norm() <= tol) {
      out.converged = true;
      break;
    }
    Eigen::VectorXd direction;
    Eigen::LLT<Eigen::MatrixXd> llt(hess);
    if (llt.info() == Eigen::Success) {
      direction = -llt.solve(grad);
    }
    if (direction.size() == 0 || !direction.allFinite() ||
        direction.dot(grad) >= 0.0) {
      direction = -grad;
    }
    const double slope = direction.dot(grad);
    double step = 1.0;
    bool moved = false;
    while (step > 1e-20) {
      const Eigen::VectorXd candidate = x + step * direction;
      const double cand_value = obj.Value(candidate);
      // Rounding allowance so quadratic-rate steps near the optimum pass.
      if (cand_value <= value + 1e-4 * step * slope ||
          (step == 1.0 && cand_value <= value + 1e-15 * std::abs(value))) {
        x = candidate;
        value = std::min(value, cand_value);
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  obj.Derivatives(x, &grad, nullptr);
  out.minimizer = x;
  out.grad_norm_at_min = grad.norm();
  out.converged = out.grad_norm_at_min <= tol;
  out.iterations = iter;
  out.min_value = MeanLogisticLoss(x, features, labels);
  return out;
}

}  // namespace

OracleSolution SolveOffline(const Eigen::Ref<const Eigen::MatrixXd>& features,
                            const Eigen::Ref<const Eigen::VectorXd>& labels,
                            const OracleOptions& options) {
  if (features.rows() < 1 || features.rows() != labels.size()) {
    throw InvalidArgument("offline oracle needs a nonempty loss set");
  }
  if (!(options.tol > 0.0) || options.max_iters < 1 || options.ridge < 0.0) {
    throw InvalidArgument("invalid oracle options");
  }
  OracleSolution sol = Descend(features, labels, options.ridge, options.tol,
                               options.max_iters);
  if (!sol.converged && options.ridge == 0.0 && options.ridge_fallback) {
    OracleSolution retry = Descend(features, labels, kRidgeFallback,
                                   options.tol, options.max_iters);
    retry.iterations += sol.iterations;
    return retry;
  }
  return sol;
}

OracleSolution SolveGlobalOracle(const StreamDataset& dataset,
                                 const OracleOptions& options) {
  return SolveOffline(dataset.features(), dataset.labels(), options);
}

std::vector<OracleSolution> SolvePerRoundOracles(const StreamDataset& dataset,
                                                 const OracleOptions& options) {
  std::vector<OracleSolution> out;
  out.reserve(dataset.rounds());
  for (int r = 0; r < dataset.rounds(); ++r) {
    out.push_back(SolveOffline(dataset.RoundFeatures(r),
                               dataset.RoundLabels(r), options));
  }
  return out;
}

DynamicRegret ComputeDynamicRegret(const Eigen::MatrixXd& models,
                                   const StreamDataset& dataset,
                                   const std::vector<OracleSolution>& oracles) {
  const int rounds = dataset.rounds();
  if (static_cast<int>(oracles.size()) != rounds) {
    throw InvalidArgument("missing per-round oracle");
  }
  if (models.rows() < rounds) {
    throw InvalidArgument("need models x^0..x^{R-1}");
  }
  const double slots =
      static_cast<double>(dataset.learners()) * dataset.local_steps();
  const double inv_n = 1.0 / dataset.learners();
  DynamicRegret out;
  out.per_round.resize(rounds);
  for (int r = 0; r < rounds; ++r) {
    const RoundLosses losses =
        RoundLossesAt(models.row(r).transpose(), dataset, r);
    // sum_t (1/n) sum_i (f_i^{r,t}(x^r) - f^r*), the same scale as the
    // static regret.
    double term = inv_n * losses.losses.sum() -
                  dataset.local_steps() * oracles[r].min_value;
    const double floor = -slots * kRegretSlack;
    if (term < floor) {
      out.warnings.push_back("round " + std::to_string(r) +
                             ": dynamic regret term " + FormatDouble(term) +
                             " clamped (oracle imprecision)");
      term = floor;
      ++out.clamped;
    }
    out.per_round[r] = term;
  }
  out.total = out.per_round.sum();
  return out;
}

double ComputeStaticRegret(const Eigen::MatrixXd& models,
                           const StreamDataset& dataset,
                           const OracleSolution& oracle_global) {
  const int rounds = dataset.rounds();
  if (models.rows() < rounds) {
    throw InvalidArgument("need models x^0..x^{R-1}");
  }
  const double inv_n = 1.0 / dataset.learners();
  double total = 0.0;
  for (int r = 0; r < rounds; ++r) {
    const double at_model =
        RoundLossesAt(models.row(r).transpose(), dataset, r).losses.sum();
    const double at_star =
        RoundLossesAt(oracle_global.minimizer, dataset, r).losses.sum();
    total += inv_n * (at_model - at_star);
  }
  return total;
}

double LossError(const Eigen::Ref<const Eigen::VectorXd>& x,
                 const StreamDataset& dataset,
                 const OracleSolution& oracle_global) {
  return MeanLogisticLoss(x, dataset.features(), dataset.labels()) -
         MeanLogisticLoss(oracle_global.minimizer, dataset.features(),
                          dataset.labels());
}

Eigen::VectorXd LossErrorSeries(const Eigen::MatrixXd& models,
                                const StreamDataset& dataset,
                                const OracleSolution& oracle_global) {
  const double baseline = MeanLogisticLoss(
      oracle_global.minimizer, dataset.features(), dataset.labels());
  const Eigen::Index count = models.rows();
  const double inv_size = 1.0 / static_cast<double>(dataset.size());
  Eigen::VectorXd out(count);
  constexpr Eigen::Index kChunk = 64;
  for (Eigen::Index start = 0; start < count; start += kChunk) {
    const Eigen::Index width = std::min(kChunk, count - start);
    Eigen::MatrixXd margins =
        dataset.features() * models.middleRows(start, width).transpose();
    margins.array().colwise() *= dataset.labels().array();
    for (Eigen::Index c = 0; c < width; ++c) {
      double sum = 0.0;
      for (Eigen::Index k = 0; k < margins.rows(); ++k) {
        sum += LogisticLossFromMargin(margins(k, c));
      }
      out[start + c] = sum * inv_size - baseline;
    }
  }
  return out;
}

RegretReport BuildRegretReport(const Eigen::MatrixXd& models,
                               const StreamDataset& dataset,
                               const OracleOptions& options) {
  RegretReport report;
  report.oracle_global = SolveGlobalOracle(dataset, options);
  report.oracle_per_round = SolvePerRoundOracles(dataset, options);
  DynamicRegret dynamic =
      ComputeDynamicRegret(models, dataset, report.oracle_per_round);
  report.per_round_dynamic = std::move(dynamic.per_round);
  report.dynamic_regret = dynamic.total;
  report.warnings = std::move(dynamic.warnings);
  report.static_regret =
      ComputeStaticRegret(models, dataset, report.oracle_global);
  report.loss_error_series = LossErrorSeries(
      models.bottomRows(dataset.rounds()), dataset, report.oracle_global);
  return report;
}

void SaveRegretCsv(const std::filesystem::path& path,
                   const RegretReport& report) {
  CsvWriter csv({"round", "per_round_dynamic", "loss_error",
                 "oracle_min_value", "oracle_converged"});
  csv.AddComment("dynamic_regret=" + FormatDouble(report.dynamic_regret));
  csv.AddComment("static_regret=" + FormatDouble(report.static_regret));
  csv.AddComment("global_oracle_min_value=" +
                 FormatDouble(report.oracle_global.min_value));
  csv.AddComment("global_oracle_ridge=" +
                 FormatDouble(report.oracle_global.ridge));
  for (Eigen::Index r = 0; r < report.per_round_dynamic.size(); ++r) {
    const auto& oracle = report.oracle_per_round[r];
    csv.AddRow({std::to_string(r), FormatDouble(report.per_round_dynamic[r]),
                FormatDouble(report.loss_error_series[r]),
                FormatDouble(oracle.min_value), oracle.converged ? "1" : "0"});
  }
  csv.Save(path);
}

GradientNormDiagnostic CheckGradientNormIdentity(
    const StreamDataset& dataset, int round, const OracleSolution& oracle,
    double smoothness_estimate, int points, std::uint64_t seed) {
  GaussianStream stream(seed);
  const auto features = dataset.RoundFeatures(round);
  const auto labels = dataset.RoundLabels(round);
  const Objective obj{features, labels, 0.0};
  GradientNormDiagnostic out;
  for (int p = 0; p < points; ++p) {
    Eigen::VectorXd x(dataset.dim());
    for (Eigen::Index j = 0; j < x.size(); ++j) x[j] = stream.Normal(0.0, 2.0);
    Eigen::VectorXd grad;
    obj.Derivatives(x, &grad, nullptr);
    const double gap = MeanLogisticLoss(x, features, labels) - oracle.min_value;
    const double rhs = 2.0 * smoothness_estimate * std::max(gap, 0.0);
    const double lhs = grad.squaredNorm();
    ++out.points;
    if (rhs > 0.0) out.max_ratio = std::max(out.max_ratio, lhs / rhs);
    if (lhs > rhs * (1.0 + 1e-9) + 1e-15) ++out.violations;
  }
  return out;
}

}  // namespace dpofl
