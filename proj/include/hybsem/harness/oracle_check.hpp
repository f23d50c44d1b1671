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

#ifndef HYBSEM_HARNESS_ORACLE_CHECK_HPP
#define HYBSEM_HARNESS_ORACLE_CHECK_HPP

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "hybsem/analytic_belief.hpp"
#include "hybsem/estimators.hpp"
#include "hybsem/harness/brute_force.hpp"
#include "hybsem/hybrid_belief.hpp"
#include "hybsem/numeric.hpp"
#include "hybsem/random.hpp"
#include "hybsem/samplers.hpp"
#include "hybsem/scenario.hpp"
#include "hybsem/weight_recursion.hpp"

namespace hybsem {

struct OracleCheckResult {
  std::string name;
  bool passed{true};
  double worst{0.0};      ///< largest observed discrepancy
  double tolerance{0.0};
  std::string detail;
};

struct OracleReport {
  std::string scenario;
  std::vector<OracleCheckResult> checks;

  [[nodiscard]] bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const OracleCheckResult& c) { return c.passed; });
  }

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json j{{"scenario", scenario}, {"passed", passed()}, {"checks", nlohmann::json::array()}};
    for (const auto& c : checks) {
      j["checks"].push_back(
          {{"name", c.name}, {"passed", c.passed}, {"worst", c.worst}, {"tolerance", c.tolerance}, {"detail", c.detail}});
    }
    return j;
  }
};

struct OracleOptions {
  int states_per_step{20};
  std::uint64_t seed{7};
  /// Mutates one class-table entry before the factored product, so the factorization check must fail.
  bool corrupt_phi{false};
};

namespace detail {

class CheckAccumulator {
 public:
  CheckAccumulator(std::string name, double tolerance) : result_{std::move(name), true, 0.0, tolerance, {}} {}

  void observe(double discrepancy) {
    if (!(discrepancy <= result_.worst)) {
      result_.worst = std::isnan(discrepancy) ? std::numeric_limits<double>::infinity() : discrepancy;
    }
  }

  OracleCheckResult finish(std::string detail = {}) {
    result_.passed = result_.worst <= result_.tolerance;
    result_.detail = std::move(detail);
    return result_;
  }

 private:
  OracleCheckResult result_;
};

}  // namespace detail

/// Runs every enumeration and analytic-oracle identity on one enumerable scenario.
inline OracleReport oracle_check(const Scenario& scenario, const OracleOptions& options = {}) {
  scenario.validate();
  OracleReport report;
  report.scenario = scenario.name;
  require_enumerable(scenario.codec(), 27, "oracle_check (N^o <= 3, N^c <= 3)");

  Rng world_rng = make_rng(options.seed, 0, Stream::kWorld);
  Rng noise_rng = make_rng(options.seed, 0, Stream::kNoise);
  Rng sample_rng = make_rng(options.seed, 0, Stream::kSampler);
  WorldTruth world = world_for(scenario, world_rng);
  const History history = simulate_history(world, scenario, scenario.actions, noise_rng);

  detail::CheckAccumulator factorization{"phi-factorization", 1e-12};
  detail::CheckAccumulator marginal{"marginal-vs-enumeration", 1e-10};
  detail::CheckAccumulator analytic{"marginal-vs-analytic-mixture", 1e-8};
  detail::CheckAccumulator rows{"class-posterior-rows", 1e-12};
  detail::CheckAccumulator reconstruction{"joint-reconstruction", 1e-10};
  detail::CheckAccumulator direct{"class-table-direct-product", 1e-12};
  detail::CheckAccumulator structured{"structured-vs-explicit-c", 1e-12};
  detail::CheckAccumulator safety{"safety-indicator-identity", 0.0};

  HybridBelief belief = HybridBelief::from_scenario(scenario);
  AnalyticHybridBelief mixture = AnalyticHybridBelief::from_scenario(scenario);
  const auto codec = scenario.codec();

  auto check_step = [&](const HybridBelief& b, const AnalyticHybridBelief& m, int remaining_from) {
    const auto states = b.geometric().sample(sample_rng, options.states_per_step);
    for (const auto& x : states) {
      Eigen::MatrixXd table = b.class_log_table(x);
      const double brute = oracle::log_sum_over_hypotheses(table);
      if (options.corrupt_phi && table.size() > 0) {
        table(0, 0) += std::log(1.5);
      }
      double factored = 0.0;
      for (Eigen::Index n = 0; n < table.rows(); ++n) {
        const Eigen::VectorXd row = table.row(n).transpose();
        factored += log_sum_exp(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
      }
      factorization.observe(log_relative_difference(factored, brute));

      const double lm = b.log_unnormalized_marginal(x);
      marginal.observe(log_relative_difference(lm, oracle::log_marginal(b, x)));
      analytic.observe(std::abs(lm - m.log_unnormalized_marginal(x)));

      const Eigen::MatrixXd post = b.class_posterior(x);
      for (Eigen::Index n = 0; n < post.rows(); ++n) {
        rows.observe(std::abs(post.row(n).sum() - 1.0));
        for (int c = 0; c < scenario.n_classes; ++c) {
          direct.observe(log_relative_difference(b.class_log_unnormalized(static_cast<int>(n), x)[c],
                                                 oracle::class_log_direct(b, static_cast<int>(n), c, x)));
        }
      }
      Hypothesis h;
      h.classes.assign(static_cast<std::size_t>(scenario.n_objects), 0);
      do {
        double rhs = lm;
        for (int n = 0; n < scenario.n_objects; ++n) {
          rhs += std::log(post(n, h[n]));
        }
        reconstruction.observe(log_relative_difference(oracle::log_joint(b, h, x), rhs));
      } while (codec.next(h));
    }

    // Remaining scripted actions form the plan scored at this step.
    OpenLoopPlan plan;
    for (std::size_t i = static_cast<std::size_t>(remaining_from); i < scenario.actions.size(); ++i) {
      plan.actions.push_back(scenario.actions[i]);
    }
    const auto set = snis_sample(b, sample_rng, options.states_per_step);
    const Rollouts rollouts = rollout_states(set.states, b.index(), plan, scenario, sample_rng);
    const auto ps_structured = estimate_p_safe(set, rollouts, scenario, b);
    const auto ps_explicit = estimate_explicit_c(set, rollouts, p_safe_reward(scenario), b);
    structured.observe(relative_difference(ps_structured.value, ps_explicit.value));

    StructuredReward additive;
    for (int n = 0; n < scenario.n_objects; ++n) {
      additive.terms.push_back({{n}, [](int s, int obj, int c, const TrajectoryView& v) {
                                  return (1.0 + c) * std::exp(-0.1 * (v.pose(s) - v.object(obj)).norm());
                                }});
    }
    const auto add_s = estimate_structured(set, rollouts, additive, b);
    const auto add_e = estimate_explicit_c(set, rollouts, additive, b);
    structured.observe(relative_difference(add_s.value, add_e.value));

    for (int i = 0; i < set.size(); ++i) {
      const TrajectoryView view{set.states[static_cast<std::size_t>(i)], b.index(), rollouts.of(i)};
      for (int c = 0; c < scenario.n_classes; ++c) {
        const double r = scenario.unsafe_radius[static_cast<std::size_t>(c)];
        bool union_clear = true;
        double product = 1.0;
        for (int n = 0; n < scenario.n_objects; ++n) {
          product *= stays_clear(view, n, r);
          for (int s = 1; s <= view.steps(); ++s) {
            if ((view.pose(s) - view.object(n)).norm() < r) {
              union_clear = false;
            }
          }
        }
        safety.observe(std::abs((union_clear ? 1.0 : 0.0) - product));
      }
    }
  };

  check_step(belief, mixture, 0);
  for (int k = 0; k < history.steps(); ++k) {
    belief.apply(history.actions[static_cast<std::size_t>(k)], history.batches[static_cast<std::size_t>(k)]);
    mixture.apply(history.actions[static_cast<std::size_t>(k)], history.batches[static_cast<std::size_t>(k)]);
    check_step(belief, mixture, k + 1);
  }

  report.checks.push_back(factorization.finish());
  report.checks.push_back(marginal.finish());
  report.checks.push_back(analytic.finish());
  report.checks.push_back(rows.finish());
  report.checks.push_back(reconstruction.finish());
  report.checks.push_back(direct.finish());
  report.checks.push_back(structured.finish());
  report.checks.push_back(safety.finish());

  detail::CheckAccumulator recursion{"hypothesis-weight-recursion", 1e-8};
  for (const auto& step : hypothesis_weight_recursion_check(scenario, history)) {
    recursion.observe(step.max_abs_difference);
  }
  report.checks.push_back(recursion.finish());

  detail::CheckAccumulator prior{"prior-reduction", 1e-12};
  {
    const HybridBelief b0 = HybridBelief::from_scenario(scenario);
    for (const auto& x : b0.geometric().sample(sample_rng, options.states_per_step)) {
      const Eigen::MatrixXd post = b0.class_posterior(x);
      for (int n = 0; n < scenario.n_objects; ++n) {
        for (int c = 0; c < scenario.n_classes; ++c) {
          prior.observe(std::abs(post(n, c) - scenario.class_prior[static_cast<std::size_t>(n)][static_cast<std::size_t>(c)]));
        }
      }
    }
  }
  report.checks.push_back(prior.finish());

  return report;
}

}  // namespace hybsem

#endif  // HYBSEM_HARNESS_ORACLE_CHECK_HPP
