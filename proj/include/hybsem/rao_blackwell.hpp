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

#ifndef HYBSEM_RAO_BLACKWELL_HPP
#define HYBSEM_RAO_BLACKWELL_HPP

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "hybsem/analytic_belief.hpp"
#include "hybsem/estimators.hpp"
#include "hybsem/hybrid_belief.hpp"
#include "hybsem/hypothesis.hpp"
#include "hybsem/random.hpp"
#include "hybsem/scenario.hpp"

namespace hybsem {

/// Empirical MSEs of the sampled-(X, C) and explicit-C estimators and the predicted gap E[Var(g | X)] / N^s.
struct RaoBlackwellGap {
  double true_value{0.0};
  double mse_explicit{0.0};
  double mse_explicit_se{0.0};
  double mse_sampled{0.0};
  double mse_sampled_se{0.0};
  double difference{0.0};  ///< mse_sampled - mse_explicit
  double difference_se{0.0};
  double predicted_gap{0.0};
  double predicted_gap_se{0.0};
  int repetitions{0};
  int n_samples{0};

  [[nodiscard]] nlohmann::json to_json() const {
    return {{"true_value", true_value},       {"mse_explicit", mse_explicit},   {"mse_explicit_se", mse_explicit_se},
            {"mse_sampled", mse_sampled},     {"mse_sampled_se", mse_sampled_se}, {"difference", difference},
            {"difference_se", difference_se}, {"predicted_gap", predicted_gap}, {"predicted_gap_se", predicted_gap_se},
            {"repetitions", repetitions},     {"n_samples", n_samples}};
  }
};

namespace detail {

struct ConditionalMoments {
  double mean{0.0};
  double second{0.0};
};

/// E[g | X] and E[g^2 | X] by summing g over every hypothesis.
inline ConditionalMoments conditional_moments(const StructuredReward& reward, const TrajectoryView& view,
                                              const Eigen::MatrixXd& posterior, const HypothesisCodec& codec) {
  ConditionalMoments m;
  Hypothesis h;
  h.classes.assign(static_cast<std::size_t>(codec.n_objects()), 0);
  do {
    double p = 1.0;
    for (int n = 0; n < codec.n_objects(); ++n) {
      p *= posterior(n, h[n]);
    }
    const double g = reward.evaluate(h, view);
    m.mean += p * g;
    m.second += p * g * g;
  } while (codec.next(h));
  return m;
}

struct MeanAndError {
  double mean{0.0};
  double std_error{0.0};
};

inline MeanAndError mean_and_error(const std::vector<double>& v) {
  MeanAndError out;
  const auto n = static_cast<double>(v.size());
  for (const double x : v) {
    out.mean += x;
  }
  out.mean /= n;
  double ss = 0.0;
  for (const double x : v) {
    ss += (x - out.mean) * (x - out.mean);
  }
  out.std_error = v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  return out;
}

}  // namespace detail

/// Repeats both estimators on fresh exact (X, C) draws from the analytic mixture.
/**
 * Future poses are rolled out without process noise so that the reward is a
 * function of (X, C) alone. The true value and the predicted gap come from
 * `reference_samples` exact draws with the conditional moments enumerated.
 */
inline RaoBlackwellGap rao_blackwell_gap(const Scenario& scenario, const History& history,
                                         const StructuredReward& reward, const OpenLoopPlan& plan, int n_samples,
                                         int repetitions, Rng& rng, int reference_samples = 100000,
                                         std::uint64_t guard = kDefaultEnumerationGuard) {
  if (n_samples < 1 || repetitions < 2 || reference_samples < 1) {
    throw std::invalid_argument("rao_blackwell_gap: need n_samples >= 1, repetitions >= 2, reference_samples >= 1");
  }
  const auto codec = scenario.codec();
  require_enumerable(codec, guard, "rao_blackwell_gap");
  reward.validate(scenario.n_objects);
  HybridBelief belief = HybridBelief::from_scenario(scenario);
  AnalyticHybridBelief mixture = AnalyticHybridBelief::from_scenario(scenario);
  for (int k = 0; k < history.steps(); ++k) {
    belief.apply(history.actions[static_cast<std::size_t>(k)], history.batches[static_cast<std::size_t>(k)]);
    mixture.apply(history.actions[static_cast<std::size_t>(k)], history.batches[static_cast<std::size_t>(k)]);
  }
  const auto& index = belief.index();

  auto moments_of = [&](const PairedSampleSet& draws) {
    const Rollouts rollouts = rollout_states(draws.states.states, index, plan, noise_free);
    std::vector<detail::ConditionalMoments> out;
    out.reserve(static_cast<std::size_t>(draws.size()));
    for (int i = 0; i < draws.size(); ++i) {
      const auto& x = draws.states.states[static_cast<std::size_t>(i)];
      out.push_back(detail::conditional_moments(reward, TrajectoryView{x, index, rollouts.of(i)},
                                                belief.class_posterior(x), codec));
    }
    return std::pair{out, rollouts};
  };

  RaoBlackwellGap result;
  result.repetitions = repetitions;
  result.n_samples = n_samples;
  {
    const auto [moments, rollouts] = moments_of(mixture.sample(rng, reference_samples));
    std::vector<double> means;
    std::vector<double> variances;
    for (const auto& m : moments) {
      means.push_back(m.mean);
      variances.push_back(std::max(0.0, m.second - m.mean * m.mean));
    }
    result.true_value = detail::mean_and_error(means).mean;
    const auto var = detail::mean_and_error(variances);
    result.predicted_gap = var.mean / n_samples;
    result.predicted_gap_se = var.std_error / n_samples;
  }

  std::vector<double> err_explicit;
  std::vector<double> err_sampled;
  std::vector<double> diff;
  for (int r = 0; r < repetitions; ++r) {
    const PairedSampleSet draws = mixture.sample(rng, n_samples);
    const auto [moments, rollouts] = moments_of(draws);
    double j_explicit = 0.0;
    double j_sampled = 0.0;
    for (int i = 0; i < draws.size(); ++i) {
      const TrajectoryView view{draws.states.states[static_cast<std::size_t>(i)], index, rollouts.of(i)};
      j_sampled += reward.evaluate(draws.hypotheses[static_cast<std::size_t>(i)], view);
      j_explicit += moments[static_cast<std::size_t>(i)].mean;
    }
    j_explicit /= n_samples;
    j_sampled /= n_samples;
    const double e1 = (j_explicit - result.true_value) * (j_explicit - result.true_value);
    const double e2 = (j_sampled - result.true_value) * (j_sampled - result.true_value);
    err_explicit.push_back(e1);
    err_sampled.push_back(e2);
    diff.push_back(e2 - e1);
  }
  const auto a = detail::mean_and_error(err_explicit);
  const auto b = detail::mean_and_error(err_sampled);
  const auto d = detail::mean_and_error(diff);
  result.mse_explicit = a.mean;
  result.mse_explicit_se = a.std_error;
  result.mse_sampled = b.mean;
  result.mse_sampled_se = b.std_error;
  result.difference = d.mean;
  result.difference_se = d.std_error;
  return result;
}

}  // namespace hybsem

#endif  // HYBSEM_RAO_BLACKWELL_HPP
