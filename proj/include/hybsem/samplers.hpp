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

#ifndef HYBSEM_SAMPLERS_HPP
#define HYBSEM_SAMPLERS_HPP

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "hybsem/hybrid_belief.hpp"
#include "hybsem/hypothesis.hpp"
#include "hybsem/numeric.hpp"
#include "hybsem/random.hpp"

/**
 * \file
 * \brief Samplers over the continuous state of a HybridBelief.
 *
 * Both routes query only log b~[X] = log b^g[X] + log Phi[X]:
 *  - independence Metropolis-Hastings with proposal b^g, whose acceptance
 *    ratio reduces to Phi(X') / Phi(X);
 *  - self-normalized importance sampling with proposal b^g, whose weights are
 *    Phi(X).
 */

namespace hybsem {

class SamplerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SamplerDiagnostics {
  std::string sampler;
  double ess{0.0};
  double acceptance_rate{std::numeric_limits<double>::quiet_NaN()};
  int burn_in{0};
  int thinning{1};
  int chain_count{1};

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json j{{"sampler", sampler}, {"ess", ess}, {"burn_in", burn_in}, {"thinning", thinning},
                     {"chain_count", chain_count}};
    j["acceptance_rate"] = std::isnan(acceptance_rate) ? nlohmann::json(nullptr) : nlohmann::json(acceptance_rate);
    return j;
  }
};

/// Samples of the stacked state with self-normalized weights.
struct WeightedStateSet {
  std::vector<Eigen::VectorXd> states;
  std::vector<double> log_weights;
  std::vector<double> weights;
  SamplerDiagnostics diagnostics;

  [[nodiscard]] int size() const { return static_cast<int>(states.size()); }

  static WeightedStateSet uniform(std::vector<Eigen::VectorXd> states, SamplerDiagnostics diagnostics) {
    WeightedStateSet set;
    const auto n = states.size();
    set.states = std::move(states);
    set.log_weights.assign(n, -std::log(static_cast<double>(n)));
    set.weights.assign(n, 1.0 / static_cast<double>(n));
    set.diagnostics = std::move(diagnostics);
    set.diagnostics.ess = static_cast<double>(n);
    return set;
  }
};

/// States paired with one hypothesis each; weights carried by `states`.
struct PairedSampleSet {
  WeightedStateSet states;
  std::vector<Hypothesis> hypotheses;

  [[nodiscard]] int size() const { return states.size(); }
};

enum class Proposal {
  kIndependence,  ///< draws from b^g regardless of the current state
  kRandomWalk,    ///< current state plus a scaled b^g-shaped perturbation
};

struct McmcConfig {
  int burn_in{200};
  int thinning{5};
  int chain_count{4};
  Proposal proposal{Proposal::kIndependence};
  double step_scale{0.5};
  int max_consecutive_rejections{10000};

  void validate() const {
    if (burn_in < 0 || thinning < 1 || chain_count < 1) {
      throw std::invalid_argument("McmcConfig: need burn_in >= 0, thinning >= 1, chain_count >= 1");
    }
    if (proposal == Proposal::kRandomWalk && !(step_scale > 0.0)) {
      throw std::invalid_argument("McmcConfig: random-walk step_scale must be > 0");
    }
  }

  [[nodiscard]] nlohmann::json to_json() const {
    return {{"burn_in", burn_in},
            {"thinning", thinning},
            {"chain_count", chain_count},
            {"proposal", proposal == Proposal::kIndependence ? "independence" : "random-walk"},
            {"step_scale", step_scale}};
  }

  static McmcConfig from_json(const nlohmann::json& j) {
    McmcConfig c;
    c.burn_in = j.value("burn_in", c.burn_in);
    c.thinning = j.value("thinning", c.thinning);
    c.chain_count = j.value("chain_count", c.chain_count);
    c.step_scale = j.value("step_scale", c.step_scale);
    const std::string p = j.value("proposal", std::string{"independence"});
    if (p == "independence") {
      c.proposal = Proposal::kIndependence;
    } else if (p == "random-walk") {
      c.proposal = Proposal::kRandomWalk;
    } else {
      throw std::invalid_argument("McmcConfig: unknown proposal '" + p + "'");
    }
    c.validate();
    return c;
  }
};

/// Metropolis-Hastings chains targeting b[X]; returns `count` uniformly weighted states.
inline WeightedStateSet mh_sample(const HybridBelief& belief, const McmcConfig& config, Rng& rng, int count) {
  config.validate();
  if (count < 1) {
    throw std::invalid_argument("mh_sample: count must be >= 1");
  }
  const auto& proposal = belief.geometric();
  const int per_chain = (count + config.chain_count - 1) / config.chain_count;
  std::vector<Eigen::VectorXd> kept;
  kept.reserve(static_cast<std::size_t>(per_chain) * static_cast<std::size_t>(config.chain_count));
  long accepted = 0;
  long proposed = 0;

  for (int chain = 0; chain < config.chain_count; ++chain) {
    Rng chain_rng = split(rng);
    Eigen::VectorXd current = proposal.sample(chain_rng);
    // Independence proposals only need log Phi; random walks need the full target.
    auto log_target = [&](const Eigen::VectorXd& x) {
      return config.proposal == Proposal::kIndependence ? belief.log_phi(x) : belief.log_unnormalized_marginal(x);
    };
    double current_log = log_target(current);
    int rejections = 0;
    const long total_steps = static_cast<long>(config.burn_in) + static_cast<long>(per_chain) * config.thinning;
    for (long step = 1; step <= total_steps; ++step) {
      Eigen::VectorXd candidate;
      if (config.proposal == Proposal::kIndependence) {
        candidate = proposal.sample(chain_rng);
      } else {
        const Eigen::VectorXd e = standard_normal_vector(chain_rng, current.size());
        candidate = current + config.step_scale * (proposal.transform(e) - proposal.mean());
      }
      const double candidate_log = log_target(candidate);
      const double log_ratio = candidate_log - current_log;
      ++proposed;
      const bool accept =
          std::isfinite(candidate_log) && (log_ratio >= 0.0 || std::log(uniform01(chain_rng)) < log_ratio);
      if (accept) {
        current = std::move(candidate);
        current_log = candidate_log;
        ++accepted;
        rejections = 0;
      } else if (++rejections > config.max_consecutive_rejections) {
        throw SamplerError("mh_sample: chain stalled after " + std::to_string(rejections) +
                           " consecutive rejections");
      }
      if (step > config.burn_in && (step - config.burn_in) % config.thinning == 0) {
        kept.push_back(current);
      }
    }
  }
  kept.resize(static_cast<std::size_t>(count));
  SamplerDiagnostics diag;
  diag.sampler = config.proposal == Proposal::kIndependence ? "mh-independence" : "mh-random-walk";
  diag.acceptance_rate = proposed > 0 ? static_cast<double>(accepted) / static_cast<double>(proposed) : 1.0;
  diag.burn_in = config.burn_in;
  diag.thinning = config.thinning;
  diag.chain_count = config.chain_count;
  return WeightedStateSet::uniform(std::move(kept), diag);
}

/// Wraps arbitrary states and log-weights into a normalized set.
inline WeightedStateSet make_weighted_set(std::vector<Eigen::VectorXd> states, std::vector<double> log_weights,
                                          std::string sampler) {
  WeightedStateSet set;
  set.states = std::move(states);
  try {
    set.weights = normalize_log_weights(log_weights);
  } catch (const std::domain_error&) {
    throw SamplerError(sampler + ": every importance weight is zero");
  }
  set.log_weights = std::move(log_weights);
  set.diagnostics.sampler = std::move(sampler);
  set.diagnostics.ess = effective_sample_size(set.weights);
  return set;
}

/// Self-normalized importance sampling with proposal b^g and weights Phi(X).
inline WeightedStateSet snis_sample(const HybridBelief& belief, Rng& rng, int count) {
  if (count < 1) {
    throw std::invalid_argument("snis_sample: count must be >= 1");
  }
  std::vector<Eigen::VectorXd> states;
  std::vector<double> log_weights;
  states.reserve(static_cast<std::size_t>(count));
  log_weights.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    states.push_back(belief.geometric().sample(rng));
    log_weights.push_back(belief.log_phi(states.back()));
  }
  return make_weighted_set(std::move(states), std::move(log_weights), "snis");
}

/// Draws C^(i) ~ b[C | X^(i)] for every state; weights are left untouched.
inline PairedSampleSet complete_hypotheses(const HybridBelief& belief, const WeightedStateSet& set, Rng& rng) {
  PairedSampleSet out{set, {}};
  out.hypotheses.reserve(set.states.size());
  for (const auto& x : set.states) {
    out.hypotheses.push_back(belief.sample_hypothesis(x, rng));
  }
  return out;
}

/// Importance sampling with q(C) uniform over the hypothesis space and q(X) = b^g.
/**
 * The joint weight is b~[C, X] / (q(C) b^g[X]) = |C| prod_n b~[c_n | X].
 * Kept as the adversarial baseline whose error grows with |C|.
 */
inline PairedSampleSet uniform_hypothesis_is(const HybridBelief& belief, Rng& rng, int count) {
  if (count < 1) {
    throw std::invalid_argument("uniform_hypothesis_is: count must be >= 1");
  }
  const HypothesisCodec codec{belief.n_objects(), belief.n_classes()};
  const double log_size = std::log(static_cast<double>(codec.size()));
  std::uniform_int_distribution<std::uint64_t> pick{0, codec.size() - 1};
  std::vector<Eigen::VectorXd> states;
  std::vector<double> log_weights;
  std::vector<Hypothesis> hypotheses;
  for (int i = 0; i < count; ++i) {
    Eigen::VectorXd x = belief.geometric().sample(rng);
    Hypothesis h = codec.decode(pick(rng));
    double lw = log_size;
    for (int n = 0; n < belief.n_objects(); ++n) {
      lw += belief.class_log_unnormalized(n, x)[h[n]];
    }
    states.push_back(std::move(x));
    log_weights.push_back(lw);
    hypotheses.push_back(std::move(h));
  }
  return {make_weighted_set(std::move(states), std::move(log_weights), "uniform-hypothesis-is"),
          std::move(hypotheses)};
}

}  // namespace hybsem

#endif  // HYBSEM_SAMPLERS_HPP
