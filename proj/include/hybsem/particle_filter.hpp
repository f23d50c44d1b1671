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

#ifndef HYBSEM_PARTICLE_FILTER_HPP
#define HYBSEM_PARTICLE_FILTER_HPP

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
 * \brief Bank of bootstrap particle filters, one per tracked hypothesis.
 *
 * Each particle holds the object positions and the current robot pose,
 * laid out like a stacked state with a single pose slot. The hypothesis
 * weight follows b_k[C] proportional to b_{k-1}[C] p(z_k | z_{1:k-1}, C), with the
 * predictive likelihood estimated by the mean particle likelihood.
 */

namespace hybsem {

class FilterDegeneracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct HypothesisFilter {
  Hypothesis hypothesis;
  std::uint64_t index{0};
  std::vector<Eigen::VectorXd> particles;  ///< equally weighted after each resampling
  double log_weight{0.0};
};

inline constexpr int kDefaultParticleCount = 500;

class HypothesisParticleFilter {
 public:
  static HypothesisParticleFilter from_scenario(const Scenario& scenario, int particle_count, Rng& rng,
                                                std::uint64_t guard = 100000) {
    scenario.validate();
    if (particle_count < 1) {
      throw std::invalid_argument("HypothesisParticleFilter: particle_count must be >= 1");
    }
    const auto codec = scenario.codec();
    require_enumerable(codec, guard, "particle filter bank");
    HypothesisParticleFilter pf{scenario};
    pf.filters_.reserve(codec.size());
    for (std::uint64_t i = 0; i < codec.size(); ++i) {
      HypothesisFilter f;
      f.index = i;
      f.hypothesis = codec.decode(i);
      double lp = 0.0;
      for (int n = 0; n < scenario.n_objects; ++n) {
        lp += std::log(scenario.class_prior[static_cast<std::size_t>(n)][static_cast<std::size_t>(f.hypothesis[n])]);
      }
      f.log_weight = lp;
      f.particles.reserve(static_cast<std::size_t>(particle_count));
      for (int p = 0; p < particle_count; ++p) {
        f.particles.push_back(pf.draw_prior(rng));
      }
      pf.filters_.push_back(std::move(f));
    }
    pf.normalize();
    return pf;
  }

  [[nodiscard]] const Scenario& scenario() const { return *scenario_; }
  [[nodiscard]] int time() const { return time_; }
  /// Layout of every particle: objects followed by one pose slot.
  [[nodiscard]] const StackedIndex& index() const { return index_; }
  [[nodiscard]] const std::vector<HypothesisFilter>& filters() const { return filters_; }
  [[nodiscard]] const std::vector<double>& weights() const { return weights_; }
  [[nodiscard]] std::size_t size() const { return filters_.size(); }

  /// Propagate, weight by the joint geometric and semantic likelihood, resample.
  HypothesisParticleFilter& apply(const Vec2& action, const ObservationBatch& batch, Rng& rng) {
    if (batch.time != time_ + 1) {
      throw std::invalid_argument("HypothesisParticleFilter::apply: batch time must be k + 1");
    }
    const Block pose = index_.pose(0);
    std::vector<double> log_lik;
    for (auto& f : filters_) {
      log_lik.assign(f.particles.size(), 0.0);
      for (std::size_t p = 0; p < f.particles.size(); ++p) {
        auto& particle = f.particles[p];
        const Vec2 x = step_transition(particle.segment<2>(pose.offset), action, scenario_->sigma2_x, rng);
        particle.segment<2>(pose.offset) = x;
        double ll = 0.0;
        for (const auto& e : batch.entries) {
          const Vec2 o = particle.segment<2>(index_.object(e.object).offset);
          ll += geometric_log_likelihood(e.geometric, x, o, *scenario_);
          ll += semantic_log_likelihood(e.semantic, x, o, f.hypothesis[e.object], *scenario_);
        }
        log_lik[p] = ll;
      }
      const double total = log_sum_exp(log_lik);
      if (!std::isfinite(total)) {
        throw FilterDegeneracyError("HypothesisParticleFilter: every particle weight is zero");
      }
      f.log_weight += total - std::log(static_cast<double>(f.particles.size()));
      const auto w = normalize_log_weights(log_lik);
      const auto ancestors = systematic_resample(w, static_cast<int>(f.particles.size()), rng);
      std::vector<Eigen::VectorXd> next;
      next.reserve(f.particles.size());
      for (const int a : ancestors) {
        next.push_back(f.particles[static_cast<std::size_t>(a)]);
      }
      f.particles = std::move(next);
    }
    time_ = batch.time;
    normalize();
    return *this;
  }

  /// Keeps the `keep` heaviest filters (ties to the lower index) and renormalizes.
  HypothesisParticleFilter& prune(int keep) {
    if (keep < 1) {
      throw std::invalid_argument("prune: keep must be >= 1");
    }
    if (static_cast<std::size_t>(keep) >= filters_.size()) {
      return *this;
    }
    std::vector<std::size_t> order(filters_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (weights_[a] != weights_[b]) {
        return weights_[a] > weights_[b];
      }
      return filters_[a].index < filters_[b].index;
    });
    order.resize(static_cast<std::size_t>(keep));
    std::sort(order.begin(), order.end());
    std::vector<HypothesisFilter> kept;
    for (const auto i : order) {
      kept.push_back(std::move(filters_[i]));
    }
    filters_ = std::move(kept);
    normalize();
    return *this;
  }

  /// Draws C ~ hypothesis weights, then a particle uniformly from that filter.
  [[nodiscard]] PairedSampleSet sample(Rng& rng, int count) const {
    std::vector<Eigen::VectorXd> states;
    std::vector<Hypothesis> hypotheses;
    states.reserve(static_cast<std::size_t>(count));
    hypotheses.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
      const auto& f = filters_[static_cast<std::size_t>(sample_categorical(weights_, rng))];
      std::uniform_int_distribution<std::size_t> pick{0, f.particles.size() - 1};
      states.push_back(f.particles[pick(rng)]);
      hypotheses.push_back(f.hypothesis);
    }
    SamplerDiagnostics diag;
    diag.sampler = "particle-filter";
    return {WeightedStateSet::uniform(std::move(states), diag), std::move(hypotheses)};
  }

  /// Weighted mean particle over all filters.
  [[nodiscard]] Eigen::VectorXd mean() const {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(index_.dimension());
    for (std::size_t i = 0; i < filters_.size(); ++i) {
      Eigen::VectorXd fm = Eigen::VectorXd::Zero(index_.dimension());
      for (const auto& p : filters_[i].particles) {
        fm += p;
      }
      m += weights_[i] * fm / static_cast<double>(filters_[i].particles.size());
    }
    return m;
  }

 private:
  explicit HypothesisParticleFilter(const Scenario& scenario)
      : scenario_{std::make_shared<const Scenario>(scenario)}, index_{scenario.n_objects, 2} {
    index_.append_pose();
  }

  Eigen::VectorXd draw_prior(Rng& rng) const {
    Eigen::VectorXd x(index_.dimension());
    for (int n = 0; n < scenario_->n_objects; ++n) {
      x.segment<2>(index_.object(n).offset) = sample_gaussian2(scenario_->object_priors[static_cast<std::size_t>(n)], rng);
    }
    x.segment<2>(index_.pose(0).offset) = sample_gaussian2(scenario_->robot_prior, rng);
    return x;
  }

  void normalize() {
    std::vector<double> lw;
    lw.reserve(filters_.size());
    for (const auto& f : filters_) {
      lw.push_back(f.log_weight);
    }
    weights_ = normalize_log_weights(lw);
  }

  std::shared_ptr<const Scenario> scenario_;
  StackedIndex index_;
  std::vector<HypothesisFilter> filters_;
  std::vector<double> weights_;
  int time_{0};
};

}  // namespace hybsem

#endif  // HYBSEM_PARTICLE_FILTER_HPP
