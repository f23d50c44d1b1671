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

#ifndef HYBSEM_METHODS_HPP
#define HYBSEM_METHODS_HPP

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "hybsem/analytic_belief.hpp"
#include "hybsem/estimators.hpp"
#include "hybsem/hybrid_belief.hpp"
#include "hybsem/particle_filter.hpp"
#include "hybsem/samplers.hpp"
#include "hybsem/scenario.hpp"

/**
 * \file
 * \brief The seven estimation methods behind one stateful interface.
 *
 * A method is fed the same actions and observation batches as the world
 * produces them, draws its sample set once per time-step in `prepare`, and
 * then scores any number of candidate plans by P_safe and expected cost.
 */

namespace hybsem {

struct MethodConfig {
  int n_samples{200};
  int particle_count{kDefaultParticleCount};
  int prune_keep{3};
  McmcConfig mcmc;
  std::uint64_t analytic_guard{kDefaultAnalyticGuard};
  std::uint64_t filter_guard{100000};

  [[nodiscard]] nlohmann::json to_json() const {
    return {{"n_samples", n_samples},
            {"particle_count", particle_count},
            {"prune_keep", prune_keep},
            {"mcmc", mcmc.to_json()},
            {"analytic_guard", analytic_guard},
            {"filter_guard", filter_guard}};
  }

  static MethodConfig from_json(const nlohmann::json& j) {
    MethodConfig c;
    c.n_samples = j.value("n_samples", c.n_samples);
    c.particle_count = j.value("particle_count", c.particle_count);
    c.prune_keep = j.value("prune_keep", c.prune_keep);
    if (j.contains("mcmc")) {
      c.mcmc = McmcConfig::from_json(j.at("mcmc"));
    }
    c.analytic_guard = j.value("analytic_guard", c.analytic_guard);
    c.filter_guard = j.value("filter_guard", c.filter_guard);
    if (c.n_samples < 1 || c.particle_count < 1 || c.prune_keep < 1) {
      throw std::invalid_argument("MethodConfig: sample, particle and keep counts must be >= 1");
    }
    return c;
  }
};

struct PlanScore {
  EstimateReport p_safe;
  EstimateReport cost;
};

class EstimationMethod {
 public:
  virtual ~EstimationMethod() = default;
  EstimationMethod(const EstimationMethod&) = delete;
  EstimationMethod& operator=(const EstimationMethod&) = delete;

  [[nodiscard]] virtual std::string tag() const = 0;
  [[nodiscard]] virtual int time() const = 0;
  virtual void apply(const Vec2& action, const ObservationBatch& batch, Rng& rng) = 0;
  /// Draws the sample set used by `score` at the current time-step.
  virtual void prepare(Rng& rng) = 0;
  [[nodiscard]] virtual PlanScore score(const OpenLoopPlan& plan, Rng& rng) const = 0;
  [[nodiscard]] virtual nlohmann::json diagnostics() const { return nlohmann::json::object(); }
  /// Point estimate of the current robot pose, for navigation.
  [[nodiscard]] virtual Vec2 pose_estimate() const = 0;

  [[nodiscard]] const MethodConfig& config() const { return config_; }
  void set_sample_count(int n) {
    if (n < 1) {
      throw std::invalid_argument("set_sample_count: need at least one sample");
    }
    config_.n_samples = n;
  }

 protected:
  explicit EstimationMethod(MethodConfig config) : config_{std::move(config)} {}

  MethodConfig config_;
};

namespace detail {

inline void require_prepared(bool prepared, const std::string& tag) {
  if (!prepared) {
    throw std::logic_error(tag + ": prepare() must run before score()");
  }
}

/// Scores a plan from paired (X, C) samples.
inline PlanScore score_paired(const PairedSampleSet& samples, const StackedIndex& index, const OpenLoopPlan& plan,
                              const Scenario& scenario, const std::string& tag, Rng& rng) {
  const Rollouts rollouts = rollout_states(samples.states.states, index, plan, scenario, rng);
  PlanScore out;
  out.p_safe = estimate_sampled_xc(samples, index, rollouts, p_safe_reward(scenario), tag);
  out.cost = expected_cost(samples.states, rollouts, plan, scenario, tag);
  return out;
}

}  // namespace detail

/// mcmc-ours and snis-ours: the factorized belief with Rao-Blackwellized scoring.
class FactorizedBeliefMethod final : public EstimationMethod {
 public:
  enum class Sampler { kMcmc, kSnis };

  FactorizedBeliefMethod(const Scenario& scenario, Sampler sampler, MethodConfig config)
      : EstimationMethod{std::move(config)}, belief_{HybridBelief::from_scenario(scenario)}, sampler_{sampler} {}

  [[nodiscard]] std::string tag() const override {
    return sampler_ == Sampler::kMcmc ? method::kMcmcOurs : method::kSnisOurs;
  }
  [[nodiscard]] int time() const override { return belief_.time(); }
  [[nodiscard]] const HybridBelief& belief() const { return belief_; }

  void apply(const Vec2& action, const ObservationBatch& batch, Rng& /*rng*/) override {
    belief_.apply(action, batch);
    samples_.reset();
  }

  void prepare(Rng& rng) override {
    samples_ = sampler_ == Sampler::kMcmc ? mh_sample(belief_, config_.mcmc, rng, config_.n_samples)
                                          : snis_sample(belief_, rng, config_.n_samples);
    posteriors_.clear();
    posteriors_.reserve(samples_->states.size());
    for (const auto& x : samples_->states) {
      posteriors_.push_back(belief_.class_posterior(x));
    }
  }

  [[nodiscard]] PlanScore score(const OpenLoopPlan& plan, Rng& rng) const override {
    detail::require_prepared(samples_.has_value(), tag());
    const auto& scenario = belief_.scenario();
    const Rollouts rollouts = rollout_states(samples_->states, belief_.index(), plan, scenario, rng);
    PlanScore out;
    out.p_safe = estimate_structured(*samples_, belief_.index(), rollouts, p_safe_reward(scenario), posteriors_, tag());
    out.cost = expected_cost(*samples_, rollouts, plan, scenario, tag());
    return out;
  }

  [[nodiscard]] nlohmann::json diagnostics() const override {
    return samples_ ? samples_->diagnostics.to_json() : nlohmann::json::object();
  }

  [[nodiscard]] Vec2 pose_estimate() const override {
    return belief_.geometric().mean().segment<2>(belief_.index().pose(belief_.time()).offset);
  }

  [[nodiscard]] const WeightedStateSet& samples() const {
    detail::require_prepared(samples_.has_value(), tag());
    return *samples_;
  }

 private:
  HybridBelief belief_;
  Sampler sampler_;
  std::optional<WeightedStateSet> samples_;
  std::vector<Eigen::MatrixXd> posteriors_;
};

/// theoretical-all-hyp and theoretical-pruned: exact Gaussian mixture per hypothesis.
class AnalyticMethod final : public EstimationMethod {
 public:
  AnalyticMethod(const Scenario& scenario, bool pruned, MethodConfig config)
      : EstimationMethod{config},
        belief_{AnalyticHybridBelief::from_scenario(scenario, config.analytic_guard)},
        pruned_{pruned} {}

  [[nodiscard]] std::string tag() const override {
    return pruned_ ? method::kTheoreticalPruned : method::kTheoreticalAllHyp;
  }
  [[nodiscard]] int time() const override { return belief_.time(); }
  [[nodiscard]] const AnalyticHybridBelief& belief() const { return belief_; }

  void apply(const Vec2& action, const ObservationBatch& batch, Rng& /*rng*/) override {
    belief_.apply(action, batch);
    if (pruned_) {
      belief_.prune(config_.prune_keep);
    }
    samples_.reset();
  }

  void prepare(Rng& rng) override { samples_ = belief_.sample(rng, config_.n_samples); }

  [[nodiscard]] PlanScore score(const OpenLoopPlan& plan, Rng& rng) const override {
    detail::require_prepared(samples_.has_value(), tag());
    return detail::score_paired(*samples_, belief_.index(), plan, belief_.scenario(), tag(), rng);
  }

  [[nodiscard]] nlohmann::json diagnostics() const override {
    return {{"tracked_hypotheses", belief_.size()}};
  }

  [[nodiscard]] Vec2 pose_estimate() const override {
    return belief_.mean().segment<2>(belief_.index().pose(belief_.time()).offset);
  }

 private:
  AnalyticHybridBelief belief_;
  bool pruned_;
  std::optional<PairedSampleSet> samples_;
};

/// pf-all-hyp and pf-pruned: a particle filter per hypothesis.
class ParticleFilterMethod final : public EstimationMethod {
 public:
  ParticleFilterMethod(const Scenario& scenario, bool pruned, MethodConfig config, Rng& rng)
      : EstimationMethod{config},
        filter_{HypothesisParticleFilter::from_scenario(scenario, config.particle_count, rng, config.filter_guard)},
        pruned_{pruned} {}

  [[nodiscard]] std::string tag() const override { return pruned_ ? method::kPfPruned : method::kPfAllHyp; }
  [[nodiscard]] int time() const override { return filter_.time(); }
  [[nodiscard]] const HypothesisParticleFilter& filter() const { return filter_; }

  void apply(const Vec2& action, const ObservationBatch& batch, Rng& rng) override {
    filter_.apply(action, batch, rng);
    if (pruned_) {
      filter_.prune(config_.prune_keep);
    }
    samples_.reset();
  }

  void prepare(Rng& rng) override { samples_ = filter_.sample(rng, config_.n_samples); }

  [[nodiscard]] PlanScore score(const OpenLoopPlan& plan, Rng& rng) const override {
    detail::require_prepared(samples_.has_value(), tag());
    return detail::score_paired(*samples_, filter_.index(), plan, filter_.scenario(), tag(), rng);
  }

  [[nodiscard]] nlohmann::json diagnostics() const override {
    return {{"tracked_hypotheses", filter_.size()}, {"particle_count", config_.particle_count}};
  }

  [[nodiscard]] Vec2 pose_estimate() const override {
    return filter_.mean().segment<2>(filter_.index().pose(0).offset);
  }

 private:
  HypothesisParticleFilter filter_;
  bool pruned_;
  std::optional<PairedSampleSet> samples_;
};

/// Per-object argmax of b[c_n | X]; ties go to the lowest class.
inline Hypothesis map_hypothesis(const Eigen::MatrixXd& posterior) {
  Hypothesis h;
  h.classes.resize(static_cast<std::size_t>(posterior.rows()));
  for (Eigen::Index n = 0; n < posterior.rows(); ++n) {
    int best = 0;
    for (Eigen::Index c = 1; c < posterior.cols(); ++c) {
      if (posterior(n, c) > posterior(n, best)) {
        best = static_cast<int>(c);
      }
    }
    h.classes[static_cast<std::size_t>(n)] = best;
  }
  return h;
}

/// gs-map: X_MAP = argmax b^g, C_MAP = argmax b[C | X_MAP], future noise rolled out from that point.
class GsMapMethod final : public EstimationMethod {
 public:
  GsMapMethod(const Scenario& scenario, MethodConfig config)
      : EstimationMethod{std::move(config)}, belief_{HybridBelief::from_scenario(scenario)} {}

  [[nodiscard]] std::string tag() const override { return method::kGsMap; }
  [[nodiscard]] int time() const override { return belief_.time(); }

  void apply(const Vec2& action, const ObservationBatch& batch, Rng& /*rng*/) override {
    belief_.apply(action, batch);
    samples_.reset();
  }

  void prepare(Rng& /*rng*/) override {
    const Eigen::VectorXd x_map = belief_.geometric().mean();
    const Hypothesis c_map = map_hypothesis(belief_.class_posterior(x_map));
    SamplerDiagnostics diag;
    diag.sampler = "map";
    samples_ = PairedSampleSet{
        WeightedStateSet::uniform(std::vector<Eigen::VectorXd>(static_cast<std::size_t>(config_.n_samples), x_map),
                                  diag),
        std::vector<Hypothesis>(static_cast<std::size_t>(config_.n_samples), c_map)};
  }

  [[nodiscard]] PlanScore score(const OpenLoopPlan& plan, Rng& rng) const override {
    detail::require_prepared(samples_.has_value(), tag());
    return detail::score_paired(*samples_, belief_.index(), plan, belief_.scenario(), tag(), rng);
  }

  [[nodiscard]] Hypothesis map_classes() const {
    detail::require_prepared(samples_.has_value(), tag());
    return samples_->hypotheses.front();
  }

  [[nodiscard]] Vec2 pose_estimate() const override {
    return belief_.geometric().mean().segment<2>(belief_.index().pose(belief_.time()).offset);
  }

 private:
  HybridBelief belief_;
  std::optional<PairedSampleSet> samples_;
};

/// Builds a method by tag; throws HypothesisSpaceError when an enumerating method cannot run.
inline std::unique_ptr<EstimationMethod> make_method(const std::string& tag, const Scenario& scenario,
                                                     const MethodConfig& config, Rng& rng) {
  if (tag == method::kMcmcOurs) {
    return std::make_unique<FactorizedBeliefMethod>(scenario, FactorizedBeliefMethod::Sampler::kMcmc, config);
  }
  if (tag == method::kSnisOurs) {
    return std::make_unique<FactorizedBeliefMethod>(scenario, FactorizedBeliefMethod::Sampler::kSnis, config);
  }
  if (tag == method::kTheoreticalAllHyp || tag == method::kTheoreticalPruned) {
    return std::make_unique<AnalyticMethod>(scenario, tag == method::kTheoreticalPruned, config);
  }
  if (tag == method::kPfAllHyp || tag == method::kPfPruned) {
    return std::make_unique<ParticleFilterMethod>(scenario, tag == method::kPfPruned, config, rng);
  }
  if (tag == method::kGsMap) {
    return std::make_unique<GsMapMethod>(scenario, config);
  }
  throw std::invalid_argument("unknown method tag '" + tag + "'");
}

}  // namespace hybsem

#endif  // HYBSEM_METHODS_HPP
