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

#ifndef HYBSEM_ESTIMATORS_HPP
#define HYBSEM_ESTIMATORS_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "hybsem/gaussian_factor_graph.hpp"
#include "hybsem/hybrid_belief.hpp"
#include "hybsem/hypothesis.hpp"
#include "hybsem/random.hpp"
#include "hybsem/samplers.hpp"
#include "hybsem/scenario.hpp"

/**
 * \file
 * \brief Open-loop objective and safety estimators over sampled states.
 *
 * A structured reward has the form
 *
 *   r_t(C, X_t) = sum_j prod_{n in theta_j} r_{t,j,n}(c_n, X_t),
 *
 * so its expectation over C given X factors object by object. The structured
 * estimator exploits that and costs O(N^s N^Theta N^c); the explicit-C
 * estimator enumerates the hypothesis space and is kept as an oracle.
 */

namespace hybsem {

namespace method {
inline constexpr const char* kTheoreticalAllHyp = "theoretical-all-hyp";
inline constexpr const char* kTheoreticalPruned = "theoretical-pruned";
inline constexpr const char* kPfAllHyp = "pf-all-hyp";
inline constexpr const char* kPfPruned = "pf-pruned";
inline constexpr const char* kMcmcOurs = "mcmc-ours";
inline constexpr const char* kSnisOurs = "snis-ours";
inline constexpr const char* kGsMap = "gs-map";

inline const std::vector<std::string>& all() {
  static const std::vector<std::string> tags{kTheoreticalAllHyp, kTheoreticalPruned, kPfAllHyp, kPfPruned,
                                             kMcmcOurs,          kSnisOurs,          kGsMap};
  return tags;
}

inline bool is_known(const std::string& tag) {
  for (const auto& t : all()) {
    if (t == tag) {
      return true;
    }
  }
  return false;
}
}  // namespace method

struct OpenLoopPlan {
  std::vector<Vec2> actions;

  [[nodiscard]] int steps() const { return static_cast<int>(actions.size()); }
};

/// Future poses of every sample: x_k followed by x_{k+1} .. x_L.
struct Rollouts {
  int n_samples{0};
  int steps{0};
  std::vector<Vec2> poses;  // sample-major, (steps + 1) entries per sample

  [[nodiscard]] std::span<const Vec2> of(int sample) const {
    const auto stride = static_cast<std::size_t>(steps + 1);
    return {poses.data() + static_cast<std::size_t>(sample) * stride, stride};
  }
};

/// One sample's objects together with its current and future poses.
class TrajectoryView {
 public:
  TrajectoryView(const Eigen::VectorXd& state, const StackedIndex& index, std::span<const Vec2> poses)
      : state_{&state}, index_{&index}, poses_{poses} {}

  [[nodiscard]] Vec2 object(int n) const { return state_->segment<2>(index_->object(n).offset); }
  /// Pose at future step s; s = 0 is the current pose x_k.
  [[nodiscard]] const Vec2& pose(int s) const { return poses_[static_cast<std::size_t>(s)]; }
  /// Number of future steps L - k.
  [[nodiscard]] int steps() const { return static_cast<int>(poses_.size()) - 1; }
  [[nodiscard]] const Eigen::VectorXd& state() const { return *state_; }

 private:
  const Eigen::VectorXd* state_;
  const StackedIndex* index_;
  std::span<const Vec2> poses_;
};

namespace detail {

template <typename Step>
Rollouts rollout_with(const std::vector<Eigen::VectorXd>& states, const StackedIndex& index,
                      const OpenLoopPlan& plan, Step&& step) {
  Rollouts out;
  out.n_samples = static_cast<int>(states.size());
  out.steps = plan.steps();
  out.poses.reserve(states.size() * static_cast<std::size_t>(plan.steps() + 1));
  const Block current = index.pose(index.pose_count() - 1);
  for (const auto& x : states) {
    Vec2 pose = x.segment<2>(current.offset);
    out.poses.push_back(pose);
    for (const auto& a : plan.actions) {
      pose = step(pose, a);
      out.poses.push_back(pose);
    }
  }
  return out;
}

}  // namespace detail

/// Propagates every sample's latest pose through the plan with fresh process noise.
inline Rollouts rollout_states(const std::vector<Eigen::VectorXd>& states, const StackedIndex& index,
                               const OpenLoopPlan& plan, const Scenario& scenario, Rng& rng) {
  return detail::rollout_with(states, index, plan, [&](const Vec2& x, const Vec2& a) {
    return step_transition(x, a, scenario.sigma2_x, rng);
  });
}

inline Rollouts rollout_states(const std::vector<Eigen::VectorXd>& states, const StackedIndex& index,
                               const OpenLoopPlan& plan, NoiseFree tag) {
  return detail::rollout_with(states, index, plan,
                              [&](const Vec2& x, const Vec2& a) { return step_transition(x, a, tag); });
}

/// Value of r_{t,j,n}(c, X_t); `step` counts future steps from x_k.
using ElementFunction = std::function<double(int step, int object, int cls, const TrajectoryView& view)>;

struct RewardTerm {
  std::vector<int> objects;  ///< theta_j
  ElementFunction element;
};

enum class RewardTiming {
  kPerStep,   ///< summed over steps 0 .. L - k
  kTerminal,  ///< evaluated once, at the last step
};

struct StructuredReward {
  std::vector<RewardTerm> terms;
  RewardTiming timing{RewardTiming::kPerStep};

  /// N^Theta = sum_j |theta_j|
  [[nodiscard]] int term_size() const {
    int total = 0;
    for (const auto& t : terms) {
      total += static_cast<int>(t.objects.size());
    }
    return total;
  }

  void validate(int n_objects) const {
    for (const auto& t : terms) {
      if (!t.element) {
        throw std::invalid_argument("StructuredReward: term without an element function");
      }
      for (const int n : t.objects) {
        if (n < 0 || n >= n_objects) {
          throw std::out_of_range("StructuredReward: term object index out of range");
        }
      }
    }
  }

  [[nodiscard]] int first_step(const TrajectoryView& view) const {
    return timing == RewardTiming::kPerStep ? 0 : view.steps();
  }

  /// sum_t r_t(C, X_t) for one hypothesis.
  [[nodiscard]] double evaluate(const Hypothesis& h, const TrajectoryView& view) const {
    double total = 0.0;
    for (int s = first_step(view); s <= view.steps(); ++s) {
      for (const auto& t : terms) {
        double prod = 1.0;
        for (const int n : t.objects) {
          prod *= t.element(s, n, h[n], view);
        }
        total += prod;
      }
    }
    return total;
  }

  /// Element values flattened as [evaluation][member][class].
  [[nodiscard]] std::vector<double> element_table(const TrajectoryView& view, int n_classes) const {
    std::vector<double> table;
    for (int s = first_step(view); s <= view.steps(); ++s) {
      for (const auto& t : terms) {
        for (const int n : t.objects) {
          for (int c = 0; c < n_classes; ++c) {
            table.push_back(t.element(s, n, c, view));
          }
        }
      }
    }
    return table;
  }
};

struct EstimateReport {
  double value{0.0};
  double std_error{0.0};
  std::string method;
  int n_samples{0};
  double wall_ms{0.0};
  nlohmann::json diagnostics = nlohmann::json::object();

  [[nodiscard]] nlohmann::json to_json() const {
    return {{"value", value},         {"std_error", std_error}, {"method", method},
            {"n_samples", n_samples}, {"wall_ms", wall_ms},     {"diagnostics", diagnostics}};
  }
};

class Stopwatch {
 public:
  Stopwatch() : start_{std::chrono::steady_clock::now()} {}
  [[nodiscard]] double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

struct WeightedMean {
  double mean{0.0};
  double std_error{0.0};
};

/// Weighted mean with the self-normalized standard error sqrt(sum w_i^2 (v_i - mean)^2).
inline WeightedMean weighted_mean(std::span<const double> values, std::span<const double> weights) {
  if (values.size() != weights.size() || values.empty()) {
    throw std::invalid_argument("weighted_mean: need equally sized, non-empty inputs");
  }
  double mean = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    mean += weights[i] * values[i];
  }
  double var = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - mean;
    var += weights[i] * weights[i] * d * d;
  }
  return {mean, std::sqrt(var)};
}

/// Per-state posterior class table b[c_n | X]; rows sum to one.
using ClassPosteriorFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd& state)>;

inline ClassPosteriorFn class_posterior_of(const HybridBelief& belief) {
  return [&belief](const Eigen::VectorXd& x) { return belief.class_posterior(x); };
}

namespace detail {

inline void check_rollouts(const WeightedStateSet& set, const Rollouts& rollouts) {
  if (rollouts.n_samples != set.size()) {
    throw std::invalid_argument("estimator: rollouts do not match the state set");
  }
}

inline EstimateReport finish(const WeightedStateSet& set, const std::vector<double>& values, std::string method,
                             const Stopwatch& clock) {
  const auto wm = weighted_mean(values, set.weights);
  EstimateReport report;
  report.value = wm.mean;
  report.std_error = wm.std_error;
  report.method = std::move(method);
  report.n_samples = set.size();
  report.wall_ms = clock.elapsed_ms();
  report.diagnostics = set.diagnostics.to_json();
  return report;
}

}  // namespace detail

/// Weighted mean of the reward at sampled (X, C) pairs.
inline EstimateReport estimate_sampled_xc(const PairedSampleSet& samples, const StackedIndex& index,
                                          const Rollouts& rollouts, const StructuredReward& reward,
                                          std::string method = "sampled-xc") {
  const Stopwatch clock;
  detail::check_rollouts(samples.states, rollouts);
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(samples.size()));
  for (int i = 0; i < samples.size(); ++i) {
    const TrajectoryView view{samples.states.states[static_cast<std::size_t>(i)], index, rollouts.of(i)};
    values.push_back(reward.evaluate(samples.hypotheses[static_cast<std::size_t>(i)], view));
  }
  return detail::finish(samples.states, values, std::move(method), clock);
}

inline constexpr std::uint64_t kDefaultEnumerationGuard = 10000;

/// Conditional expectation of the reward over C by full enumeration of the hypothesis space.
inline double explicit_c_expectation(const StructuredReward& reward, const TrajectoryView& view,
                                     const Eigen::MatrixXd& posterior, const HypothesisCodec& codec) {
  const int nc = codec.n_classes();
  const std::vector<double> table = reward.element_table(view, nc);
  const int evaluations = view.steps() - reward.first_step(view) + 1;
  const std::size_t per_eval = static_cast<std::size_t>(reward.term_size()) * static_cast<std::size_t>(nc);
  Hypothesis h;
  h.classes.assign(static_cast<std::size_t>(codec.n_objects()), 0);
  double total = 0.0;
  do {
    double prob = 1.0;
    for (int n = 0; n < codec.n_objects(); ++n) {
      prob *= posterior(n, h[n]);
    }
    double r = 0.0;
    for (int e = 0; e < evaluations; ++e) {
      std::size_t offset = static_cast<std::size_t>(e) * per_eval;
      for (const auto& t : reward.terms) {
        double prod = 1.0;
        for (const int n : t.objects) {
          prod *= table[offset + static_cast<std::size_t>(h[n])];
          offset += static_cast<std::size_t>(nc);
        }
        r += prod;
      }
    }
    total += prob * r;
  } while (codec.next(h));
  return total;
}

/// Structured conditional expectation: sum_t sum_j prod_{n in theta_j} sum_c b[c | X] r_{t,j,n}(c, X_t).
inline double structured_expectation(const StructuredReward& reward, const TrajectoryView& view,
                                     const Eigen::MatrixXd& posterior) {
  double total = 0.0;
  const auto nc = posterior.cols();
  for (int s = reward.first_step(view); s <= view.steps(); ++s) {
    for (const auto& t : reward.terms) {
      double prod = 1.0;
      for (const int n : t.objects) {
        double expect = 0.0;
        for (Eigen::Index c = 0; c < nc; ++c) {
          expect += posterior(n, c) * t.element(s, n, static_cast<int>(c), view);
        }
        prod *= expect;
      }
      total += prod;
    }
  }
  return total;
}

/// Rao-Blackwellized estimate summing explicitly over every hypothesis.
inline EstimateReport estimate_explicit_c(const WeightedStateSet& set, const StackedIndex& index,
                                          const Rollouts& rollouts, const StructuredReward& reward,
                                          const HypothesisCodec& codec, const ClassPosteriorFn& posterior,
                                          std::uint64_t guard = kDefaultEnumerationGuard,
                                          std::string method = "explicit-c") {
  const Stopwatch clock;
  detail::check_rollouts(set, rollouts);
  reward.validate(codec.n_objects());
  if (codec.size() > guard) {
    throw HypothesisSpaceError("estimate_explicit_c: |C| = " + std::to_string(codec.size()) +
                               " exceeds the enumeration guard " + std::to_string(guard) +
                               "; use estimate_structured");
  }
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(set.size()));
  for (int i = 0; i < set.size(); ++i) {
    const auto& x = set.states[static_cast<std::size_t>(i)];
    const TrajectoryView view{x, index, rollouts.of(i)};
    values.push_back(explicit_c_expectation(reward, view, posterior(x), codec));
  }
  return detail::finish(set, values, std::move(method), clock);
}

inline EstimateReport estimate_explicit_c(const WeightedStateSet& set, const Rollouts& rollouts,
                                          const StructuredReward& reward, const HybridBelief& belief,
                                          std::uint64_t guard = kDefaultEnumerationGuard) {
  return estimate_explicit_c(set, belief.index(), rollouts, reward, belief.scenario().codec(),
                             class_posterior_of(belief), guard);
}

/// Rao-Blackwellized estimate with the hypothesis space handled object by object.
inline EstimateReport estimate_structured(const WeightedStateSet& set, const StackedIndex& index,
                                          const Rollouts& rollouts, const StructuredReward& reward,
                                          const ClassPosteriorFn& posterior, std::string method = "structured") {
  const Stopwatch clock;
  detail::check_rollouts(set, rollouts);
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(set.size()));
  for (int i = 0; i < set.size(); ++i) {
    const auto& x = set.states[static_cast<std::size_t>(i)];
    const TrajectoryView view{x, index, rollouts.of(i)};
    values.push_back(structured_expectation(reward, view, posterior(x)));
  }
  return detail::finish(set, values, std::move(method), clock);
}

/// Same estimate with b[c_n | X^(i)] tables computed once per sample beforehand.
inline EstimateReport estimate_structured(const WeightedStateSet& set, const StackedIndex& index,
                                          const Rollouts& rollouts, const StructuredReward& reward,
                                          std::span<const Eigen::MatrixXd> posteriors,
                                          std::string method = "structured") {
  const Stopwatch clock;
  detail::check_rollouts(set, rollouts);
  if (posteriors.size() != set.states.size()) {
    throw std::invalid_argument("estimate_structured: one class table per sample is required");
  }
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(set.size()));
  for (int i = 0; i < set.size(); ++i) {
    const TrajectoryView view{set.states[static_cast<std::size_t>(i)], index, rollouts.of(i)};
    values.push_back(structured_expectation(reward, view, posteriors[static_cast<std::size_t>(i)]));
  }
  return detail::finish(set, values, std::move(method), clock);
}

inline EstimateReport estimate_structured(const WeightedStateSet& set, const Rollouts& rollouts,
                                          const StructuredReward& reward, const HybridBelief& belief,
                                          std::string method = "structured") {
  reward.validate(belief.n_objects());
  return estimate_structured(set, belief.index(), rollouts, reward, class_posterior_of(belief), std::move(method));
}

/// 1 when the future poses x_{k+1} .. x_L stay outside object n's disk for class c.
inline double stays_clear(const TrajectoryView& view, int object, double radius) {
  const Vec2 o = view.object(object);
  const double r2 = radius * radius;
  for (int s = 1; s <= view.steps(); ++s) {
    if ((view.pose(s) - o).squaredNorm() < r2) {
      return 0.0;
    }
  }
  return 1.0;
}

/// Safety as a multiplicative structured reward over all objects.
inline StructuredReward p_safe_reward(const Scenario& scenario) {
  StructuredReward reward;
  reward.timing = RewardTiming::kTerminal;
  RewardTerm term;
  for (int n = 0; n < scenario.n_objects; ++n) {
    term.objects.push_back(n);
  }
  term.element = [radii = scenario.unsafe_radius](int /*step*/, int n, int c, const TrajectoryView& view) {
    return stays_clear(view, n, radii[static_cast<std::size_t>(c)]);
  };
  reward.terms.push_back(std::move(term));
  return reward;
}

inline EstimateReport estimate_p_safe(const WeightedStateSet& set, const Rollouts& rollouts,
                                      const Scenario& scenario, const HybridBelief& belief,
                                      std::string method = "p-safe") {
  return estimate_structured(set, rollouts, p_safe_reward(scenario), belief, std::move(method));
}

/// sum_{t=k}^{L} ||x_t - x_g|| + ||a_t|| along one rollout, with a_L = 0.
inline double trajectory_cost(std::span<const Vec2> poses, const OpenLoopPlan& plan, const Vec2& goal) {
  double total = 0.0;
  for (std::size_t s = 0; s < poses.size(); ++s) {
    total += (poses[s] - goal).norm();
    if (s < plan.actions.size()) {
      total += plan.actions[s].norm();
    }
  }
  return total;
}

/// Class-free expected cost over the horizon.
inline EstimateReport expected_cost(const WeightedStateSet& set, const Rollouts& rollouts, const OpenLoopPlan& plan,
                                    const Scenario& scenario, std::string method = "expected-cost") {
  const Stopwatch clock;
  detail::check_rollouts(set, rollouts);
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(set.size()));
  for (int i = 0; i < set.size(); ++i) {
    values.push_back(trajectory_cost(rollouts.of(i), plan, scenario.goal));
  }
  return detail::finish(set, values, std::move(method), clock);
}

/// Lower bound on the MSE of an importance sampler with hypothesis proposal q.
/**
 * With w(C) = eta_w P_0(C) / q(C) the bound is eta_w^-1 Var_w(g_bar) / N^s,
 * which equals |C| Var_w(g_bar) / N^s when q = P_0.
 */
inline double is_mse_lower_bound(std::span<const double> prior, std::span<const double> proposal,
                                 std::span<const double> conditional_means, int n_samples) {
  if (prior.size() != proposal.size() || prior.size() != conditional_means.size() || prior.empty()) {
    throw std::invalid_argument("is_mse_lower_bound: inputs must share one non-empty hypothesis space");
  }
  if (n_samples < 1) {
    throw std::invalid_argument("is_mse_lower_bound: n_samples must be >= 1");
  }
  std::vector<double> w(prior.size());
  double inv_eta = 0.0;
  for (std::size_t c = 0; c < prior.size(); ++c) {
    if (prior[c] > 0.0 && !(proposal[c] > 0.0)) {
      throw std::domain_error("is_mse_lower_bound: proposal has no mass where the prior does");
    }
    w[c] = prior[c] > 0.0 ? prior[c] / proposal[c] : 0.0;
    inv_eta += w[c];
  }
  double mean = 0.0;
  for (std::size_t c = 0; c < w.size(); ++c) {
    w[c] /= inv_eta;
    mean += w[c] * conditional_means[c];
  }
  double var = 0.0;
  for (std::size_t c = 0; c < w.size(); ++c) {
    const double d = conditional_means[c] - mean;
    var += w[c] * d * d;
  }
  return inv_eta * var / n_samples;
}

/// Bound for a proposal that draws C from b[C | X]: Var_{b[C]}(g_bar) / N^s.
inline double factorized_mse_lower_bound(std::span<const double> posterior, std::span<const double> conditional_means,
                                         int n_samples) {
  if (posterior.size() != conditional_means.size() || posterior.empty() || n_samples < 1) {
    throw std::invalid_argument("factorized_mse_lower_bound: bad inputs");
  }
  double mean = 0.0;
  for (std::size_t c = 0; c < posterior.size(); ++c) {
    mean += posterior[c] * conditional_means[c];
  }
  double var = 0.0;
  for (std::size_t c = 0; c < posterior.size(); ++c) {
    const double d = conditional_means[c] - mean;
    var += posterior[c] * d * d;
  }
  return var / n_samples;
}

}  // namespace hybsem

#endif  // HYBSEM_ESTIMATORS_HPP
