// Copyright 2026 The hybsem Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HYBSEM_WEIGHT_RECURSION_HPP
#define HYBSEM_WEIGHT_RECURSION_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "hybsem/analytic_belief.hpp"
#include "hybsem/hypothesis.hpp"
#include "hybsem/numeric.hpp"
#include "hybsem/scenario.hpp"

namespace hybsem {

/// Per-hypothesis Kalman filter over (X^o, x_t) that scores each batch by its predictive density.
class HypothesisKalmanFilter {
 public:
  HypothesisKalmanFilter(const Scenario& scenario, Hypothesis hypothesis)
      : scenario_{&scenario}, hypothesis_{std::move(hypothesis)} {
    const int d = 2 * scenario.n_objects + 2;
    mean_ = Eigen::VectorXd::Zero(d);
    cov_ = Eigen::MatrixXd::Zero(d, d);
    for (int n = 0; n < scenario.n_objects; ++n) {
      const auto& p = scenario.object_priors[static_cast<std::size_t>(n)];
      mean_.segment<2>(2 * n) = p.mean;
      cov_.block<2, 2>(2 * n, 2 * n) = p.covariance;
    }
    mean_.tail<2>() = scenario.robot_prior.mean;
    cov_.bottomRightCorner<2, 2>() = scenario.robot_prior.covariance;
  }

  /// Predicts through `action`, returns log p(z_k | z_{1:k-1}, C), then conditions on the batch.
  double step(const Vec2& action, const ObservationBatch& batch) {
    const auto d = mean_.size();
    mean_.tail<2>() += action;
    cov_.bottomRightCorner<2, 2>() += scenario_->sigma2_x * Mat2::Identity();
    const auto m = static_cast<Eigen::Index>(4 * batch.entries.size());
    if (m == 0) {
      return 0.0;
    }
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m, d);
    Eigen::VectorXd z(m);
    Eigen::Index row = 0;
    for (const auto& e : batch.entries) {
      const double a = scenario_->alpha[static_cast<std::size_t>(hypothesis_[e.object])];
      for (const double gain : {1.0, a}) {
        h.block<2, 2>(row, 2 * e.object) = gain * Mat2::Identity();
        h.block<2, 2>(row, d - 2) = -gain * Mat2::Identity();
        row += 2;
      }
      z.segment<2>(row - 4) = e.geometric;
      z.segment<2>(row - 2) = e.semantic;
    }
    const Eigen::MatrixXd s = h * cov_ * h.transpose() + scenario_->sigma2_obs * Eigen::MatrixXd::Identity(m, m);
    const Eigen::LLT<Eigen::MatrixXd> llt(s);
    const Eigen::VectorXd innovation = z - h * mean_;
    const Eigen::VectorXd solved = llt.solve(innovation);
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      log_det += 2.0 * std::log(llt.matrixLLT()(i, i));
    }
    const double log_pred = -0.5 * (static_cast<double>(m) * kLog2Pi + log_det + innovation.dot(solved));
    const Eigen::MatrixXd gain = cov_ * h.transpose() * llt.solve(Eigen::MatrixXd::Identity(m, m));
    mean_ += gain * innovation;
    cov_ = (Eigen::MatrixXd::Identity(d, d) - gain * h) * cov_;
    cov_ = 0.5 * (cov_ + cov_.transpose());
    return log_pred;
  }

 private:
  const Scenario* scenario_;
  Hypothesis hypothesis_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
};

struct RecursionStep {
  int time{0};
  std::vector<double> recursive;  ///< b_k[C] from b_{k-1}[C] and the predictive ratio
  std::vector<double> analytic;   ///< b_k[C] from the full-evidence mixture
  double max_abs_difference{0.0};
};

/// Checks b_k[C] = (eta~_k / eta~^C_k) b_{k-1}[C] against the analytic mixture at every step.
inline std::vector<RecursionStep> hypothesis_weight_recursion_check(const Scenario& scenario, const History& history,
                                                                     std::uint64_t guard = 10000) {
  const auto codec = scenario.codec();
  require_enumerable(codec, guard, "hypothesis_weight_recursion_check");
  std::vector<HypothesisKalmanFilter> filters;
  std::vector<double> log_w;
  for (std::uint64_t i = 0; i < codec.size(); ++i) {
    const Hypothesis h = codec.decode(i);
    filters.emplace_back(scenario, h);
    double lp = 0.0;
    for (int n = 0; n < scenario.n_objects; ++n) {
      lp += std::log(scenario.class_prior[static_cast<std::size_t>(n)][static_cast<std::size_t>(h[n])]);
    }
    log_w.push_back(lp);
  }
  auto analytic = AnalyticHybridBelief::from_scenario(scenario, guard);
  std::vector<RecursionStep> out;
  for (int k = 0; k < history.steps(); ++k) {
    const auto& a = history.actions[static_cast<std::size_t>(k)];
    const auto& batch = history.batches[static_cast<std::size_t>(k)];
    const auto previous = normalize_log_weights(log_w);
    std::vector<double> log_ratio;
    for (std::size_t i = 0; i < filters.size(); ++i) {
      log_ratio.push_back(filters[i].step(a, batch));
    }
    // eta~_k / eta~^C_k = p(z_k | C) / sum_C' b_{k-1}[C'] p(z_k | C')
    std::vector<double> joint(filters.size());
    for (std::size_t i = 0; i < filters.size(); ++i) {
      joint[i] = std::log(previous[i]) + log_ratio[i];
    }
    const double log_norm = log_sum_exp(joint);
    RecursionStep step;
    step.time = batch.time;
    for (std::size_t i = 0; i < filters.size(); ++i) {
      step.recursive.push_back(std::exp(log_ratio[i] - log_norm) * previous[i]);
      log_w[i] += log_ratio[i];
    }
    analytic.apply(a, batch);
    step.analytic = analytic.weights();
    for (std::size_t i = 0; i < filters.size(); ++i) {
      step.max_abs_difference = std::max(step.max_abs_difference, std::abs(step.recursive[i] - step.analytic[i]));
    }
    out.push_back(std::move(step));
  }
  return out;
}

}  // namespace hybsem

#endif  // HYBSEM_WEIGHT_RECURSION_HPP
