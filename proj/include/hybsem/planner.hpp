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

#ifndef HYBSEM_PLANNER_HPP
#define HYBSEM_PLANNER_HPP

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hybsem/estimators.hpp"
#include "hybsem/methods.hpp"
#include "hybsem/random.hpp"
#include "hybsem/roadmap.hpp"
#include "hybsem/scenario.hpp"

namespace hybsem {

struct CandidatePlan {
  std::vector<Vec2> waypoints;
  OpenLoopPlan plan;
  double path_length{0.0};
  double p_safe{0.0};
  double expected_cost{0.0};
};

struct Selection {
  std::optional<std::size_t> chosen;  ///< empty means Stop
  std::string reason;
};

/// Cheapest candidate with P_safe >= threshold; ties to the shorter path, then the lower index.
inline Selection select_plan(const std::vector<CandidatePlan>& candidates, double threshold) {
  if (candidates.empty()) {
    return {std::nullopt, "no candidate paths"};
  }
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    if (!(c.p_safe >= threshold)) {
      continue;
    }
    if (!best) {
      best = i;
      continue;
    }
    const auto& b = candidates[*best];
    if (c.expected_cost < b.expected_cost ||
        (c.expected_cost == b.expected_cost && c.path_length < b.path_length)) {
      best = i;
    }
  }
  if (!best) {
    return {std::nullopt, "no candidate meets the safety threshold"};
  }
  return {best, "ok"};
}

enum class ReplanMode {
  kEveryStep,  ///< execute one action, then replan
  kCommit,     ///< execute the whole selected plan
};

struct PlannerConfig {
  RoadmapConfig roadmap;
  double threshold{0.95};
  ReplanMode mode{ReplanMode::kEveryStep};
  int step_cap{200};
  double goal_tolerance{1.0};
  int opening_steps{4};

  [[nodiscard]] nlohmann::json to_json() const {
    return {{"workspace_lower", vec2_json(roadmap.lower)},
            {"workspace_upper", vec2_json(roadmap.upper)},
            {"node_count", roadmap.node_count},
            {"k_nearest", roadmap.k_nearest},
            {"candidate_paths", roadmap.candidate_paths},
            {"max_step", roadmap.max_step},
            {"direct_edge", roadmap.direct_edge},
            {"threshold", threshold},
            {"mode", mode == ReplanMode::kEveryStep ? "every-step" : "commit"},
            {"step_cap", step_cap},
            {"goal_tolerance", goal_tolerance},
            {"opening_steps", opening_steps}};
  }

  static PlannerConfig from_json(const nlohmann::json& j) {
    PlannerConfig c;
    if (j.contains("workspace_lower")) {
      c.roadmap.lower = detail::vec2_from_json(j.at("workspace_lower"));
    }
    if (j.contains("workspace_upper")) {
      c.roadmap.upper = detail::vec2_from_json(j.at("workspace_upper"));
    }
    c.roadmap.node_count = j.value("node_count", c.roadmap.node_count);
    c.roadmap.k_nearest = j.value("k_nearest", c.roadmap.k_nearest);
    c.roadmap.candidate_paths = j.value("candidate_paths", c.roadmap.candidate_paths);
    c.roadmap.max_step = j.value("max_step", c.roadmap.max_step);
    c.roadmap.direct_edge = j.value("direct_edge", c.roadmap.direct_edge);
    c.threshold = j.value("threshold", c.threshold);
    const std::string mode = j.value("mode", std::string{"every-step"});
    if (mode == "every-step") {
      c.mode = ReplanMode::kEveryStep;
    } else if (mode == "commit") {
      c.mode = ReplanMode::kCommit;
    } else {
      throw std::invalid_argument("PlannerConfig: unknown mode '" + mode + "'");
    }
    c.step_cap = j.value("step_cap", c.step_cap);
    c.goal_tolerance = j.value("goal_tolerance", c.goal_tolerance);
    c.opening_steps = j.value("opening_steps", c.opening_steps);
    if (c.step_cap < 1 || !(c.goal_tolerance > 0.0) || c.opening_steps < 0) {
      throw std::invalid_argument("PlannerConfig: need step_cap >= 1, goal_tolerance > 0, opening_steps >= 0");
    }
    return c;
  }

 private:
  static nlohmann::json vec2_json(const Vec2& v) { return nlohmann::json::array({v.x(), v.y()}); }
};

struct TrialRecord {
  int trial{0};
  std::string method;
  bool safe_verdict{true};  ///< never entered a true unsafe region
  bool reached_goal{false};
  bool stopped{false};
  bool truncated{false};
  double dist_to_goal{0.0};
  double traj_len{0.0};
  double wall_ms{0.0};
  int steps{0};
};

/// Builds and scores the candidate plans from the method's current pose estimate.
inline std::vector<CandidatePlan> score_candidates(EstimationMethod& method, const Scenario& scenario,
                                                   const PlannerConfig& config, Rng& planner_rng, Rng& sampler_rng) {
  const Vec2 start = method.pose_estimate();
  const Roadmap map = build_roadmap(config.roadmap, start, scenario.goal, planner_rng);
  const auto paths = k_shortest_paths(map, config.roadmap.candidate_paths);
  std::vector<CandidatePlan> out;
  if (paths.empty()) {
    return out;
  }
  method.prepare(sampler_rng);
  for (const auto& p : paths) {
    CandidatePlan c;
    c.waypoints = waypoints(map, p);
    c.plan.actions = discretize(c.waypoints, config.roadmap.max_step);
    c.path_length = p.length;
    const auto score = method.score(c.plan, sampler_rng);
    c.p_safe = score.p_safe.value;
    c.expected_cost = score.cost.value;
    out.push_back(std::move(c));
  }
  return out;
}

/// True when `x` lies inside some object's unsafe disk under the true classes.
inline bool inside_true_unsafe_region(const Vec2& x, const WorldTruth& world, const Scenario& scenario) {
  for (int n = 0; n < scenario.n_objects; ++n) {
    const double r = scenario.unsafe_radius[static_cast<std::size_t>(world.classes[n])];
    if ((x - world.objects[static_cast<std::size_t>(n)]).squaredNorm() < r * r) {
      return true;
    }
  }
  return false;
}

/// Opening moves, then select-execute-observe until the goal, a Stop, or the step cap.
/**
 * The world and the estimator only meet through actions and observation
 * batches; the verdict is computed from the world's true classes.
 */
inline TrialRecord run_planning_trial(const Scenario& scenario, const std::string& tag, const MethodConfig& methods,
                                      const PlannerConfig& config, std::uint64_t base_seed, int trial) {
  const Stopwatch clock;
  Rng world_rng = make_rng(base_seed, static_cast<std::uint64_t>(trial), Stream::kWorld);
  Rng noise_rng = make_rng(base_seed, static_cast<std::uint64_t>(trial), Stream::kNoise);
  Rng planner_rng = make_rng(base_seed, static_cast<std::uint64_t>(trial), Stream::kPlanner);
  Rng sampler_rng = make_rng(base_seed, static_cast<std::uint64_t>(trial), Stream::kSampler);
  Rng filter_rng = make_rng(base_seed, static_cast<std::uint64_t>(trial), Stream::kFilter);

  WorldTruth world = world_for(scenario, world_rng);
  auto method = make_method(tag, scenario, methods, filter_rng);
  TrialRecord rec;
  rec.trial = trial;
  rec.method = tag;

  auto execute = [&](const Vec2& action) {
    const Vec2 before = world.trajectory.back();
    const auto batch = advance_world(world, scenario, action, noise_rng);
    method->apply(action, batch, filter_rng);
    rec.traj_len += (world.trajectory.back() - before).norm();
    if (inside_true_unsafe_region(world.trajectory.back(), world, scenario)) {
      rec.safe_verdict = false;
    }
    ++rec.steps;
  };

  if (inside_true_unsafe_region(world.trajectory.back(), world, scenario)) {
    rec.safe_verdict = false;
  }
  const int opening = std::min<int>(config.opening_steps, static_cast<int>(scenario.actions.size()));
  for (int i = 0; i < opening; ++i) {
    execute(scenario.actions[static_cast<std::size_t>(i)]);
  }
  while (true) {
    if ((method->pose_estimate() - scenario.goal).norm() <= config.goal_tolerance) {
      rec.reached_goal = true;
      break;
    }
    if (rec.steps >= config.step_cap) {
      rec.truncated = true;
      break;
    }
    const auto candidates = score_candidates(*method, scenario, config, planner_rng, sampler_rng);
    const auto selection = select_plan(candidates, config.threshold);
    if (!selection.chosen) {
      rec.stopped = true;
      break;
    }
    const auto& plan = candidates[*selection.chosen].plan;
    if (plan.actions.empty()) {
      rec.reached_goal = true;
      break;
    }
    const std::size_t count = config.mode == ReplanMode::kEveryStep ? 1 : plan.actions.size();
    for (std::size_t i = 0; i < count && rec.steps < config.step_cap; ++i) {
      execute(plan.actions[i]);
    }
  }
  rec.dist_to_goal = (world.trajectory.back() - scenario.goal).norm();
  rec.wall_ms = clock.elapsed_ms();
  return rec;
}

}  // namespace hybsem

#endif  // HYBSEM_PLANNER_HPP
