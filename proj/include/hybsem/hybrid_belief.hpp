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

#ifndef HYBSEM_HYBRID_BELIEF_HPP
#define HYBSEM_HYBRID_BELIEF_HPP

#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "hybsem/gaussian_factor_graph.hpp"
#include "hybsem/hypothesis.hpp"
#include "hybsem/numeric.hpp"
#include "hybsem/random.hpp"
#include "hybsem/scenario.hpp"

/**
 * \file
 * \brief Factorized hybrid semantic-geometric belief.
 *
 * The joint belief over the continuous state X and the semantic mapping C
 * factors as
 *
 *   b[C, X] = eta * b^g[X] * Phi(X) * prod_n b[c_n | X],
 *   Phi(X)  = prod_n sum_c b~[c | X],
 *   b~[c_n | X] = P_0(c_n | X_0) * prod_{t in I^time[n]} P(z^s_{t,n} | x_t, x^o_n, c_n),
 *
 * where b^g is the posterior given geometric observations only. Every query
 * below costs O(k N^o + N^o N^c) and never touches the normalizer eta, so the
 * (N^c)^(N^o) hypothesis space is handled implicitly.
 */

namespace hybsem {

/// Prior class probabilities of object `n` given the initial state X_0 = (X^o, x_0).
using ClassPriorHook = std::function<Eigen::VectorXd(int object, const Eigen::VectorXd& initial_state)>;

struct SemanticRecord {
  int time{0};
  Vec2 z{Vec2::Zero()};
};

class HybridBelief {
 public:
  /// Prior belief at k = 0 with class priors taken from the scenario rows.
  static HybridBelief from_scenario(const Scenario& scenario) { return HybridBelief{scenario, nullptr}; }

  /// Prior belief whose class priors are an arbitrary function of X_0.
  static HybridBelief with_prior_hook(const Scenario& scenario, ClassPriorHook hook) {
    return HybridBelief{scenario, std::move(hook)};
  }

  [[nodiscard]] const Scenario& scenario() const { return *scenario_; }
  [[nodiscard]] int n_objects() const { return scenario_->n_objects; }
  [[nodiscard]] int n_classes() const { return scenario_->n_classes; }
  /// Planning time k (number of updates applied).
  [[nodiscard]] int time() const { return time_; }
  [[nodiscard]] int dimension() const { return graph_.dimension(); }
  [[nodiscard]] const StackedIndex& index() const { return graph_.index(); }
  [[nodiscard]] const GaussianFactorGraph& geometric_graph() const { return graph_; }
  [[nodiscard]] const GaussianPosterior& geometric() const { return geometric_; }
  [[nodiscard]] const std::vector<SemanticRecord>& records(int n) const {
    return records_.at(static_cast<std::size_t>(n));
  }

  /// I^time[n]
  [[nodiscard]] std::vector<int> time_index(int n) const {
    std::vector<int> out;
    for (const auto& r : records(n)) {
      out.push_back(r.time);
    }
    return out;
  }

  /// Folds a transition and the batch observed at time k + 1 into this belief.
  HybridBelief& apply(const Vec2& action, const ObservationBatch& batch) {
    if (batch.time != time_ + 1) {
      throw std::invalid_argument("HybridBelief::apply: batch time must be k + 1");
    }
    for (const auto& e : batch.entries) {
      if (e.object < 0 || e.object >= n_objects()) {
        throw std::out_of_range("HybridBelief::apply: object index out of range");
      }
    }
    const int prev = time_;
    const int t = graph_.add_pose();
    const auto& idx = graph_.index();
    {
      const Block blocks[] = {idx.pose(prev), idx.pose(t)};
      Eigen::MatrixXd a(2, 4);
      a << -Mat2::Identity(), Mat2::Identity();
      graph_.add_linear_factor(blocks, a, Eigen::Vector2d::Zero(), scenario_->sigma2_x * Mat2::Identity(), action);
    }
    Eigen::MatrixXd diff(2, 4);
    diff << Mat2::Identity(), -Mat2::Identity();
    const Mat2 obs_noise = scenario_->sigma2_obs * Mat2::Identity();
    for (const auto& e : batch.entries) {
      const Block blocks[] = {idx.object(e.object), idx.pose(t)};
      graph_.add_linear_factor(blocks, diff, Eigen::Vector2d::Zero(), obs_noise, e.geometric);
      records_[static_cast<std::size_t>(e.object)].push_back({t, e.semantic});
    }
    time_ = t;
    geometric_ = graph_.posterior();
    return *this;
  }

  [[nodiscard]] HybridBelief update(const Vec2& action, const ObservationBatch& batch) const {
    HybridBelief next = *this;
    next.apply(action, batch);
    return next;
  }

  /// log P_0(c | X_0) row for object n.
  [[nodiscard]] Eigen::VectorXd log_class_prior(int n, const Eigen::VectorXd& x) const {
    if (hook_) {
      const Eigen::VectorXd p = hook_(n, x.head(2 * n_objects() + 2));
      if (p.size() != n_classes()) {
        throw std::invalid_argument("HybridBelief: prior hook returned the wrong number of classes");
      }
      return p.array().log();
    }
    return log_prior_.row(n).transpose();
  }

  /// log b~[c | X] for every class of object n.
  [[nodiscard]] Eigen::VectorXd class_log_unnormalized(int n, const Eigen::VectorXd& x) const {
    check_state(x);
    const auto& idx = graph_.index();
    const Vec2 obj = x.segment<2>(idx.object(n).offset);
    double szz = 0.0;
    double szd = 0.0;
    double sdd = 0.0;
    const auto& recs = records(n);
    for (const auto& r : recs) {
      const Vec2 d = obj - x.segment<2>(idx.pose(r.time).offset);
      szz += r.z.squaredNorm();
      szd += r.z.dot(d);
      sdd += d.squaredNorm();
    }
    const double s2 = scenario_->sigma2_obs;
    const double base = -static_cast<double>(recs.size()) * (kLog2Pi + std::log(s2));
    Eigen::VectorXd out = log_class_prior(n, x);
    for (int c = 0; c < n_classes(); ++c) {
      const double a = scenario_->alpha[static_cast<std::size_t>(c)];
      out[c] += base - (szz - 2.0 * a * szd + a * a * sdd) / (2.0 * s2);
    }
    return out;
  }

  /// N^o x N^c table of log b~[c_n | X].
  [[nodiscard]] Eigen::MatrixXd class_log_table(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd table(n_objects(), n_classes());
    for (int n = 0; n < n_objects(); ++n) {
      table.row(n) = class_log_unnormalized(n, x).transpose();
    }
    return table;
  }

  /// b~[c | X] for object n, as `scaled * exp(log_scale)` with max(scaled) = 1.
  struct ScaledClassWeights {
    Eigen::VectorXd scaled;
    double log_scale{0.0};
  };

  [[nodiscard]] ScaledClassWeights class_conditional_unnormalized(int n, const Eigen::VectorXd& x) const {
    const Eigen::VectorXd lw = class_log_unnormalized(n, x);
    const double m = lw.maxCoeff();
    return {(lw.array() - m).exp().matrix(), m};
  }

  /// log Phi(X) = sum_n log sum_c b~[c | X].
  [[nodiscard]] double log_phi(const Eigen::VectorXd& x) const {
    double total = 0.0;
    for (int n = 0; n < n_objects(); ++n) {
      const Eigen::VectorXd lw = class_log_unnormalized(n, x);
      total += log_sum_exp(std::span<const double>(lw.data(), static_cast<std::size_t>(lw.size())));
    }
    return total;
  }

  /// log b~[X] = log b^g[X] + log Phi(X).
  [[nodiscard]] double log_unnormalized_marginal(const Eigen::VectorXd& x) const {
    return geometric_.log_density(x) + log_phi(x);
  }

  /// Row-stochastic N^o x N^c table of b[c_n | X].
  [[nodiscard]] Eigen::MatrixXd class_posterior(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd table(n_objects(), n_classes());
    for (int n = 0; n < n_objects(); ++n) {
      const auto w = class_conditional_unnormalized(n, x);
      table.row(n) = (w.scaled / w.scaled.sum()).transpose();
    }
    return table;
  }

  /// Independent categorical draw per object from b[c_n | X].
  [[nodiscard]] Hypothesis sample_hypothesis(const Eigen::VectorXd& x, Rng& rng) const {
    return sample_hypothesis_from_table(class_posterior(x), rng);
  }

  static Hypothesis sample_hypothesis_from_table(const Eigen::MatrixXd& posterior, Rng& rng) {
    Hypothesis h;
    h.classes.resize(static_cast<std::size_t>(posterior.rows()));
    for (Eigen::Index n = 0; n < posterior.rows(); ++n) {
      const Eigen::VectorXd row = posterior.row(n).transpose();
      h.classes[static_cast<std::size_t>(n)] = sample_categorical(row, rng);
    }
    return h;
  }

  /// Diagnostic dump: geometric moments and semantic observation records.
  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json j;
    j["time"] = time_;
    j["n_objects"] = n_objects();
    j["n_classes"] = n_classes();
    const Eigen::MatrixXd cov = geometric_.covariance();
    j["geometric"]["mean"] = std::vector<double>(geometric_.mean().data(),
                                                 geometric_.mean().data() + geometric_.mean().size());
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < cov.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index c = 0; c < cov.cols(); ++c) {
        row.push_back(cov(i, c));
      }
      rows.push_back(row);
    }
    j["geometric"]["covariance"] = rows;
    j["semantic_records"] = nlohmann::json::array();
    for (const auto& recs : records_) {
      nlohmann::json list = nlohmann::json::array();
      for (const auto& r : recs) {
        list.push_back({{"time", r.time}, {"z", {r.z.x(), r.z.y()}}});
      }
      j["semantic_records"].push_back(list);
    }
    return j;
  }

 private:
  HybridBelief(const Scenario& scenario, ClassPriorHook hook)
      : scenario_{std::make_shared<const Scenario>(scenario)},
        hook_{std::move(hook)},
        records_(static_cast<std::size_t>(scenario.n_objects)) {
    scenario.validate();
    graph_ = GaussianFactorGraph{StackedIndex{scenario.n_objects, 2}};
    graph_.add_pose();
    const auto& idx = graph_.index();
    graph_.add_prior(idx.pose(0), scenario.robot_prior.mean, scenario.robot_prior.covariance);
    for (int n = 0; n < scenario.n_objects; ++n) {
      const auto& p = scenario.object_priors[static_cast<std::size_t>(n)];
      graph_.add_prior(idx.object(n), p.mean, p.covariance);
    }
    log_prior_.resize(scenario.n_objects, scenario.n_classes);
    for (int n = 0; n < scenario.n_objects; ++n) {
      for (int c = 0; c < scenario.n_classes; ++c) {
        log_prior_(n, c) = std::log(scenario.class_prior[static_cast<std::size_t>(n)][static_cast<std::size_t>(c)]);
      }
    }
    geometric_ = graph_.posterior();
  }

  void check_state(const Eigen::VectorXd& x) const {
    if (x.size() != graph_.dimension()) {
      throw std::invalid_argument("HybridBelief: state dimension does not match the belief");
    }
  }

  std::shared_ptr<const Scenario> scenario_;
  ClassPriorHook hook_;
  GaussianFactorGraph graph_;
  GaussianPosterior geometric_;
  std::vector<std::vector<SemanticRecord>> records_;
  Eigen::MatrixXd log_prior_;
  int time_{0};
};

}  // namespace hybsem

#endif  // HYBSEM_HYBRID_BELIEF_HPP
