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

#ifndef HYBSEM_ANALYTIC_BELIEF_HPP
#define HYBSEM_ANALYTIC_BELIEF_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "hybsem/gaussian_factor_graph.hpp"
#include "hybsem/hypothesis.hpp"
#include "hybsem/numeric.hpp"
#include "hybsem/random.hpp"
#include "hybsem/samplers.hpp"
#include "hybsem/scenario.hpp"

/**
 * \file
 * \brief Exact Gaussian-mixture belief: one linear-Gaussian posterior per hypothesis.
 *
 * Given C every model is linear-Gaussian, so b[X | C] is Gaussian and
 * b[C] is proportional to P_0(C) times the closed-form evidence of that
 * hypothesis' factor graph. The cost is exponential in the number of objects.
 */

namespace hybsem {

struct AnalyticComponent {
  Hypothesis hypothesis;
  std::uint64_t index{0};
  GaussianPosterior posterior;
  double log_evidence{0.0};
  double log_weight{0.0};  ///< log P_0(C) + log_evidence
};

inline constexpr std::uint64_t kDefaultAnalyticGuard = 1000000;

class AnalyticHybridBelief {
 public:
  /// Every hypothesis of the scenario; throws HypothesisSpaceError beyond `guard`.
  /**
   * The guard error message includes the approximate memory the components
   * would need at the prior.
   */
  static AnalyticHybridBelief from_scenario(const Scenario& scenario, std::uint64_t guard = kDefaultAnalyticGuard) {
    scenario.validate();
    const auto codec = scenario.codec();
    if (codec.size() > guard) {
      const double d = 2.0 * (scenario.n_objects + 1);
      const double mib = static_cast<double>(codec.size()) * d * d * 8.0 / (1024.0 * 1024.0);
      throw HypothesisSpaceError("analytic belief: |C| = " + std::to_string(codec.size()) +
                                 " exceeds the guard of " + std::to_string(guard) + " (about " +
                                 std::to_string(static_cast<long long>(mib)) + " MiB of precision matrices)");
    }
    AnalyticHybridBelief belief{scenario};
    belief.tracked_.resize(codec.size());
    std::iota(belief.tracked_.begin(), belief.tracked_.end(), std::uint64_t{0});
    belief.refresh();
    return belief;
  }

  [[nodiscard]] const Scenario& scenario() const { return *scenario_; }
  [[nodiscard]] int time() const { return time_; }
  [[nodiscard]] const StackedIndex& index() const { return geometric_.index(); }
  [[nodiscard]] const GaussianFactorGraph& geometric_graph() const { return geometric_; }
  [[nodiscard]] const std::vector<AnalyticComponent>& components() const { return components_; }
  [[nodiscard]] std::size_t size() const { return components_.size(); }
  [[nodiscard]] const std::vector<double>& weights() const { return weights_; }
  [[nodiscard]] bool pruned() const { return components_.size() < scenario_->codec().size(); }
  /// log p(z^g_{1:k}), the evidence of the geometric factors alone.
  [[nodiscard]] double geometric_log_evidence() const { return geometric_log_evidence_; }

  /// Folds one step into every tracked hypothesis and refreshes the weights.
  AnalyticHybridBelief& apply(const Vec2& action, const ObservationBatch& batch) {
    if (batch.time != time_ + 1) {
      throw std::invalid_argument("AnalyticHybridBelief::apply: batch time must be k + 1");
    }
    const int prev = time_;
    const int t = geometric_.add_pose();
    for (auto& g : semantic_) {
      g.add_pose();
    }
    const auto& idx = geometric_.index();
    {
      const Block blocks[] = {idx.pose(prev), idx.pose(t)};
      Eigen::MatrixXd a(2, 4);
      a << -Mat2::Identity(), Mat2::Identity();
      geometric_.add_linear_factor(blocks, a, Eigen::Vector2d::Zero(), scenario_->sigma2_x * Mat2::Identity(),
                                   action);
    }
    Eigen::MatrixXd diff(2, 4);
    diff << Mat2::Identity(), -Mat2::Identity();
    const Mat2 noise = scenario_->sigma2_obs * Mat2::Identity();
    for (const auto& e : batch.entries) {
      if (e.object < 0 || e.object >= scenario_->n_objects) {
        throw std::out_of_range("AnalyticHybridBelief::apply: object index out of range");
      }
      const Block blocks[] = {idx.object(e.object), idx.pose(t)};
      geometric_.add_linear_factor(blocks, diff, Eigen::Vector2d::Zero(), noise, e.geometric);
      // Unit-gain semantic factor; each hypothesis rescales it by its alpha.
      semantic_[static_cast<std::size_t>(e.object)].add_linear_factor(blocks, diff, Eigen::Vector2d::Zero(), noise,
                                                                       e.semantic);
    }
    time_ = t;
    refresh();
    return *this;
  }

  [[nodiscard]] AnalyticHybridBelief update(const Vec2& action, const ObservationBatch& batch) const {
    AnalyticHybridBelief next = *this;
    next.apply(action, batch);
    return next;
  }

  /// Keeps the `keep` heaviest hypotheses (ties to the lower index) and renormalizes.
  AnalyticHybridBelief& prune(int keep) {
    if (keep < 1) {
      throw std::invalid_argument("prune: keep must be >= 1");
    }
    if (static_cast<std::size_t>(keep) >= components_.size()) {
      return *this;
    }
    std::vector<std::size_t> order(components_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (weights_[a] != weights_[b]) {
        return weights_[a] > weights_[b];
      }
      return components_[a].index < components_[b].index;
    });
    order.resize(static_cast<std::size_t>(keep));
    std::sort(order.begin(), order.end());
    std::vector<AnalyticComponent> kept;
    std::vector<std::uint64_t> tracked;
    for (const auto i : order) {
      kept.push_back(components_[i]);
      tracked.push_back(components_[i].index);
    }
    components_ = std::move(kept);
    tracked_ = std::move(tracked);
    normalize();
    return *this;
  }

  /// Mixture mean sum_C b[C] E[X | C].
  [[nodiscard]] Eigen::VectorXd mean() const {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(geometric_.dimension());
    for (std::size_t i = 0; i < components_.size(); ++i) {
      m += weights_[i] * components_[i].posterior.mean();
    }
    return m;
  }

  /// Marginal b[c_n = c] summed over the tracked hypotheses.
  [[nodiscard]] Eigen::MatrixXd class_marginals() const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(scenario_->n_objects, scenario_->n_classes);
    for (std::size_t i = 0; i < components_.size(); ++i) {
      for (int n = 0; n < scenario_->n_objects; ++n) {
        out(n, components_[i].hypothesis[n]) += weights_[i];
      }
    }
    return out;
  }

  /// log of P_0(C) p(X) p(Z^g | X) p(Z^s | X, C) at state `x`.
  [[nodiscard]] double log_unnormalized_joint(std::size_t component, const Eigen::VectorXd& x) const {
    const auto& comp = components_.at(component);
    return comp.log_weight + comp.posterior.log_density(x);
  }

  /// log sum_C joint(C, X) - log p(Z^g); agrees with HybridBelief::log_unnormalized_marginal when unpruned.
  [[nodiscard]] double log_unnormalized_marginal(const Eigen::VectorXd& x) const {
    std::vector<double> terms;
    terms.reserve(components_.size());
    for (std::size_t i = 0; i < components_.size(); ++i) {
      terms.push_back(log_unnormalized_joint(i, x));
    }
    return log_sum_exp(terms) - geometric_log_evidence_;
  }

  /// Draws C ~ b[C], then X ~ b[X | C].
  [[nodiscard]] PairedSampleSet sample(Rng& rng, int count) const {
    if (count < 1) {
      throw std::invalid_argument("AnalyticHybridBelief::sample: count must be >= 1");
    }
    std::vector<Eigen::VectorXd> states;
    std::vector<Hypothesis> hypotheses;
    states.reserve(static_cast<std::size_t>(count));
    hypotheses.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
      const auto& comp = components_[static_cast<std::size_t>(sample_categorical(weights_, rng))];
      hypotheses.push_back(comp.hypothesis);
      states.push_back(comp.posterior.sample(rng));
    }
    SamplerDiagnostics diag;
    diag.sampler = "analytic";
    return {WeightedStateSet::uniform(std::move(states), diag), std::move(hypotheses)};
  }

 private:
  explicit AnalyticHybridBelief(const Scenario& scenario)
      : scenario_{std::make_shared<const Scenario>(scenario)},
        geometric_{StackedIndex{scenario.n_objects, 2}},
        semantic_(static_cast<std::size_t>(scenario.n_objects), GaussianFactorGraph{StackedIndex{scenario.n_objects, 2}}) {
    geometric_.add_pose();
    for (auto& g : semantic_) {
      g.add_pose();
    }
    const auto& idx = geometric_.index();
    geometric_.add_prior(idx.pose(0), scenario.robot_prior.mean, scenario.robot_prior.covariance);
    for (int n = 0; n < scenario.n_objects; ++n) {
      const auto& p = scenario.object_priors[static_cast<std::size_t>(n)];
      geometric_.add_prior(idx.object(n), p.mean, p.covariance);
    }
  }

  void refresh() {
    const auto codec = scenario_->codec();
    geometric_log_evidence_ = geometric_.log_evidence();
    components_.clear();
    components_.reserve(tracked_.size());
    for (const auto index : tracked_) {
      AnalyticComponent comp;
      comp.index = index;
      comp.hypothesis = codec.decode(index);
      GaussianFactorGraph graph = geometric_;
      double log_prior = 0.0;
      for (int n = 0; n < scenario_->n_objects; ++n) {
        const int c = comp.hypothesis[n];
        graph.accumulate_scaled(semantic_[static_cast<std::size_t>(n)], scenario_->alpha[static_cast<std::size_t>(c)]);
        log_prior += std::log(scenario_->class_prior[static_cast<std::size_t>(n)][static_cast<std::size_t>(c)]);
      }
      comp.posterior = graph.posterior();
      comp.log_evidence = graph.log_evidence(comp.posterior);
      comp.log_weight = log_prior + comp.log_evidence;
      components_.push_back(std::move(comp));
    }
    normalize();
  }

  void normalize() {
    std::vector<double> lw;
    lw.reserve(components_.size());
    for (const auto& c : components_) {
      lw.push_back(c.log_weight);
    }
    weights_ = normalize_log_weights(lw);
  }

  std::shared_ptr<const Scenario> scenario_;
  GaussianFactorGraph geometric_;
  std::vector<GaussianFactorGraph> semantic_;
  std::vector<std::uint64_t> tracked_;
  std::vector<AnalyticComponent> components_;
  std::vector<double> weights_;
  double geometric_log_evidence_{0.0};
  int time_{0};
};

}  // namespace hybsem

#endif  // HYBSEM_ANALYTIC_BELIEF_HPP
