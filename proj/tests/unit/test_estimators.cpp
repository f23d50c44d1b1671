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

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "hybsem/analytic_belief.hpp"
#include "hybsem/estimators.hpp"
#include "hybsem/hybrid_belief.hpp"
#include "hybsem/numeric.hpp"
#include "hybsem/rao_blackwell.hpp"
#include "hybsem/samplers.hpp"
#include "test_support.hpp"

namespace hybsem {
namespace {

using testing::simulate;
using testing::small_scenario;

HybridBelief belief_for(const testing::SimulatedRun& run, int steps) {
  HybridBelief b = HybridBelief::from_scenario(run.scenario);
  return testing::apply_steps(b, run.history, steps);
}

OpenLoopPlan straight_plan(int steps, Vec2 action = Vec2{1.0, 1.0}) {
  OpenLoopPlan p;
  p.actions.assign(static_cast<std::size_t>(steps), action);
  return p;
}

/// Per-step constant reward through a single class-free element.
StructuredReward constant_reward(double value) {
  StructuredReward r;
  r.terms.push_back({{0}, [value](int, int, int, const TrajectoryView&) { return value; }});
  return r;
}

/// Random structured reward with class-dependent, state-dependent elements.
StructuredReward random_reward(Rng& rng, int n_objects, int n_classes, bool multiplicative_only) {
  StructuredReward r;
  std::uniform_int_distribution<int> pick_count{1, n_objects};
  const int terms = multiplicative_only ? 1 : 1 + static_cast<int>(uniform01(rng) * 3.0);
  r.timing = uniform01(rng) < 0.5 ? RewardTiming::kPerStep : RewardTiming::kTerminal;
  for (int j = 0; j < terms; ++j) {
    RewardTerm t;
    std::vector<int> all(static_cast<std::size_t>(n_objects));
    for (int n = 0; n < n_objects; ++n) {
      all[static_cast<std::size_t>(n)] = n;
    }
    std::shuffle(all.begin(), all.end(), rng);
    const int size = multiplicative_only ? n_objects : pick_count(rng);
    t.objects.assign(all.begin(), all.begin() + size);
    std::vector<double> table(static_cast<std::size_t>(n_objects * n_classes));
    for (auto& v : table) {
      v = 0.2 + uniform01(rng);
    }
    const double width = 1.0 + 4.0 * uniform01(rng);
    t.element = [table, width, n_classes](int step, int n, int c, const TrajectoryView& view) {
      const double d2 = (view.pose(step) - view.object(n)).squaredNorm();
      return table[static_cast<std::size_t>(n * n_classes + c)] * (0.5 + std::exp(-d2 / width));
    };
    r.terms.push_back(std::move(t));
  }
  return r;
}

struct Setup {
  testing::SimulatedRun run;
  HybridBelief belief;
  WeightedStateSet samples;
  OpenLoopPlan plan;
  Rollouts rollouts;
};

Setup make_setup(const Scenario& s, std::uint64_t seed, int n_samples, int plan_steps) {
  auto run = simulate(s, seed);
  HybridBelief b = belief_for(run, static_cast<int>(s.actions.size()));
  Rng rng = make_rng(seed, 0, Stream::kSampler);
  WeightedStateSet set = snis_sample(b, rng, n_samples);
  OpenLoopPlan plan = straight_plan(plan_steps);
  Rollouts rollouts = rollout_states(set.states, b.index(), plan, s, rng);
  return {std::move(run), std::move(b), std::move(set), std::move(plan), std::move(rollouts)};
}

TEST(MethodTags, SevenKnownTags) {
  EXPECT_EQ(method::all().size(), 7u);
  for (const auto& t : method::all()) {
    EXPECT_TRUE(method::is_known(t));
  }
  EXPECT_FALSE(method::is_known("mcmc"));
}

TEST(Rollouts, NoiseFreeFutureIsDeterministic) {
  const auto st = make_setup(small_scenario(1, 2, 2), 1, 20, 3);
  const Rollouts r = rollout_states(st.samples.states, st.belief.index(), st.plan, noise_free);
  for (int i = 0; i < r.n_samples; ++i) {
    const auto poses = r.of(i);
    ASSERT_EQ(poses.size(), 4u);
    for (int s = 1; s <= 3; ++s) {
      EXPECT_EQ(poses[static_cast<std::size_t>(s)], Vec2(poses[0] + s * Vec2{1.0, 1.0}));
    }
  }
}

TEST(Rollouts, EmptyPlanKeepsTheCurrentPoseOnly) {
  const auto st = make_setup(small_scenario(1, 2, 2), 2, 10, 0);
  EXPECT_EQ(st.rollouts.steps, 0);
  const Block cur = st.belief.index().pose(2);
  for (int i = 0; i < 10; ++i) {
    ASSERT_EQ(st.rollouts.of(i).size(), 1u);
    EXPECT_EQ(st.rollouts.of(i)[0], Vec2(st.samples.states[static_cast<std::size_t>(i)].segment<2>(cur.offset)));
  }
}

TEST(Rollouts, TerminalMeanAddsTheActions) {
  const Scenario s = small_scenario(1, 2, 2);
  const auto run = simulate(s, 3);
  const HybridBelief b = belief_for(run, 2);
  Rng rng = make_rng(3, 0, Stream::kSampler);
  constexpr int kN = 20000;
  const auto states = b.geometric().sample(rng, kN);
  const OpenLoopPlan plan = straight_plan(5, Vec2{0.5, -0.25});
  const Rollouts r = rollout_states(states, b.index(), plan, s, rng);
  const Block cur = b.index().pose(2);
  const Eigen::Vector2d want = b.geometric().mean().segment<2>(cur.offset) + 5.0 * Eigen::Vector2d{0.5, -0.25};
  const Eigen::MatrixXd cov = b.geometric().covariance();
  for (int axis = 0; axis < 2; ++axis) {
    double m = 0.0;
    for (int i = 0; i < kN; ++i) {
      m += r.of(i)[5](axis);
    }
    m /= kN;
    const double var = cov(cur.offset + axis, cur.offset + axis) + 5.0 * s.sigma2_x;
    EXPECT_NEAR(m, want(axis), 3.0 * std::sqrt(var / kN));
  }
}

TEST(SampledXc, ConstantRewardCountsEvaluations) {
  const auto st = make_setup(small_scenario(2, 2, 2), 4, 50, 4);
  Rng rng = make_rng(4, 1, Stream::kSampler);
  const auto paired = complete_hypotheses(st.belief, st.samples, rng);
  const auto rep = estimate_sampled_xc(paired, st.belief.index(), st.rollouts, constant_reward(2.5));
  EXPECT_NEAR(rep.value, 2.5 * 5.0, 1e-12);
  EXPECT_EQ(rep.n_samples, 50);
}

TEST(SampledXc, SingleSampleGivesItsReward) {
  const auto st = make_setup(small_scenario(2, 3, 2), 5, 1, 3);
  Rng rng = make_rng(5, 1, Stream::kSampler);
  const auto paired = complete_hypotheses(st.belief, st.samples, rng);
  Rng rr = make_rng(5, 2, Stream::kSampler);
  const StructuredReward reward = random_reward(rr, 2, 3, false);
  const TrajectoryView view{paired.states.states[0], st.belief.index(), st.rollouts.of(0)};
  const auto rep = estimate_sampled_xc(paired, st.belief.index(), st.rollouts, reward);
  EXPECT_DOUBLE_EQ(rep.value, reward.evaluate(paired.hypotheses[0], view));
}

TEST(SampledXc, ConvergesToTheEnumeratedExpectation) {
  Scenario s = small_scenario(2, 2, 3, 6);
  s.alpha = {0.6, 1.4};
  const auto run = simulate(s, 6);
  HybridBelief b = belief_for(run, 3);
  AnalyticHybridBelief exact = AnalyticHybridBelief::from_scenario(s);
  testing::apply_steps(exact, run.history, 3);
  Rng rng = make_rng(6, 0, Stream::kSampler);
  const StructuredReward reward = random_reward(rng, 2, 2, false);
  const OpenLoopPlan plan = straight_plan(3);

  // Reference: Rao-Blackwellized values on many exact draws.
  const auto ref_draws = exact.sample(rng, 200000);
  const Rollouts ref_roll = rollout_states(ref_draws.states.states, b.index(), plan, noise_free);
  const auto ref = estimate_explicit_c(ref_draws.states, ref_roll, reward, b);

  const auto draws = exact.sample(rng, 20000);
  const Rollouts roll = rollout_states(draws.states.states, b.index(), plan, noise_free);
  const auto got = estimate_sampled_xc(draws, b.index(), roll, reward);
  EXPECT_NEAR(got.value, ref.value, 3.0 * std::hypot(got.std_error, ref.std_error));
}

TEST(ExplicitC, ClassFreeRewardIsAPlainAverage) {
  const auto st = make_setup(small_scenario(2, 3, 2), 7, 100, 3);
  StructuredReward reward;
  reward.terms.push_back({{1}, [](int step, int n, int, const TrajectoryView& v) {
                            return (v.pose(step) - v.object(n)).norm();
                          }});
  const auto rep = estimate_explicit_c(st.samples, st.rollouts, reward, st.belief);
  double want = 0.0;
  for (int i = 0; i < st.samples.size(); ++i) {
    const TrajectoryView v{st.samples.states[static_cast<std::size_t>(i)], st.belief.index(), st.rollouts.of(i)};
    double g = 0.0;
    for (int s = 0; s <= 3; ++s) {
      g += (v.pose(s) - v.object(1)).norm();
    }
    want += st.samples.weights[static_cast<std::size_t>(i)] * g;
  }
  EXPECT_NEAR(rep.value, want, 1e-12 * std::abs(want));
}

TEST(ExplicitC, SingleObjectAdditiveMatchesStructuredExactly) {
  const auto st = make_setup(small_scenario(1, 4, 2), 8, 100, 3);
  Rng rng = make_rng(8, 1, Stream::kSampler);
  const StructuredReward reward = random_reward(rng, 1, 4, true);
  const auto a = estimate_explicit_c(st.samples, st.rollouts, reward, st.belief);
  const auto b = estimate_structured(st.samples, st.rollouts, reward, st.belief);
  EXPECT_NEAR(a.value, b.value, 1e-14 * std::abs(a.value));
}

TEST(ExplicitC, GuardPointsAtTheStructuredEstimator) {
  const auto st = make_setup(small_scenario(7, 4, 1), 9, 5, 1);
  Rng rng = make_rng(9, 1, Stream::kSampler);
  const StructuredReward reward = random_reward(rng, 7, 4, false);
  try {
    (void)estimate_explicit_c(st.samples, st.rollouts, reward, st.belief);
    FAIL() << "expected HypothesisSpaceError";
  } catch (const HypothesisSpaceError& e) {
    EXPECT_NE(std::string{e.what()}.find("estimate_structured"), std::string::npos);
  }
}

TEST(Structured, SingleObjectExpectation) {
  StructuredReward reward;
  reward.timing = RewardTiming::kTerminal;
  reward.terms.push_back({{0}, [](int, int, int c, const TrajectoryView&) { return c == 0 ? 2.0 : 4.0; }});
  const Eigen::VectorXd x = Eigen::VectorXd::Zero(4);
  StackedIndex idx{1};
  idx.append_pose();
  const std::vector<Vec2> poses{Vec2::Zero()};
  const TrajectoryView view{x, idx, poses};
  const Eigen::MatrixXd post = (Eigen::MatrixXd(1, 2) << 0.25, 0.75).finished();
  EXPECT_DOUBLE_EQ(structured_expectation(reward, view, post), 3.5);
  EXPECT_DOUBLE_EQ(explicit_c_expectation(reward, view, post, HypothesisCodec{1, 2}), 3.5);
}

TEST(Structured, UnreferencedObjectsAreMarginalized) {
  const auto st = make_setup(small_scenario(3, 3, 2), 10, 50, 2);
  StructuredReward reward;
  reward.terms.push_back({{0, 2}, [](int, int n, int c, const TrajectoryView&) { return 1.0 + n + c; }});
  std::vector<Eigen::MatrixXd> base;
  std::vector<Eigen::MatrixXd> altered;
  Rng rng = make_rng(10, 1, Stream::kSampler);
  for (const auto& x : st.samples.states) {
    Eigen::MatrixXd p = st.belief.class_posterior(x);
    base.push_back(p);
    Eigen::Vector3d row{uniform01(rng), uniform01(rng), uniform01(rng)};
    p.row(1) = (row / row.sum()).transpose();
    altered.push_back(p);
  }
  const auto a = estimate_structured(st.samples, st.belief.index(), st.rollouts, reward, base);
  const auto b = estimate_structured(st.samples, st.belief.index(), st.rollouts, reward, altered);
  EXPECT_DOUBLE_EQ(a.value, b.value);
}

TEST(Structured, EqualsExplicitCOnRandomRewards) {
  Rng rng = make_rng(11, 0, Stream::kReference);
  double worst = 0.0;
  for (int rep = 0; rep < 30; ++rep) {
    const int no = 1 + rep % 6;
    const int nc = 2 + rep % 3;
    const Scenario s = testing::random_scenario(rng, no, nc, 3);
    const auto st = make_setup(s, 500 + static_cast<std::uint64_t>(rep), 20, 3);
    const StructuredReward reward = random_reward(rng, no, nc, rep % 3 == 0);
    const auto a = estimate_explicit_c(st.samples, st.rollouts, reward, st.belief);
    const auto b = estimate_structured(st.samples, st.rollouts, reward, st.belief);
    worst = std::max(worst, relative_difference(a.value, b.value));
  }
  EXPECT_LT(worst, 1e-12);
}

TEST(Structured, ArgmaxIgnoresPositiveScaling) {
  const auto st = make_setup(small_scenario(2, 3, 2), 12, 100, 0);
  Rng rng = make_rng(12, 1, Stream::kSampler);
  std::vector<OpenLoopPlan> plans;
  for (int p = 0; p < 5; ++p) {
    plans.push_back(straight_plan(4, Vec2{std::cos(0.3 * p), std::sin(0.3 * p)}));
  }
  auto argmax = [&](double scale) {
    StructuredReward reward;
    reward.timing = RewardTiming::kTerminal;
    reward.terms.push_back({{0, 1}, [scale](int step, int n, int c, const TrajectoryView& v) {
                              return scale * (1.0 + c) * std::exp(-(v.pose(step) - v.object(n)).squaredNorm() / 8.0);
                            }});
    int best = 0;
    double best_value = -1.0;
    for (int p = 0; p < 5; ++p) {
      const Rollouts r = rollout_states(st.samples.states, st.belief.index(), plans[static_cast<std::size_t>(p)],
                                        noise_free);
      const double v = estimate_structured(st.samples, r, reward, st.belief).value;
      if (v > best_value) {
        best_value = v;
        best = p;
      }
    }
    return best;
  };
  EXPECT_EQ(argmax(1.0), argmax(7.3));
  EXPECT_EQ(argmax(1.0), argmax(0.01));
}

TEST(PSafe, ZeroRadiiAreAlwaysSafe) {
  Scenario s = small_scenario(3, 2, 2);
  s.unsafe_radius = {0.0, 0.0};
  const auto st = make_setup(s, 13, 100, 6);
  const auto rep = estimate_p_safe(st.samples, st.rollouts, s, st.belief);
  EXPECT_NEAR(rep.value, 1.0, 1e-12);
}

TEST(PSafe, PlanThroughAKnownObjectIsNeverSafe) {
  Scenario s = small_scenario(1, 3, 1);
  s.object_priors[0].mean = Vec2{3.0, 3.0};
  s.object_priors[0].covariance = 1e-10 * Mat2::Identity();
  s.robot_prior.covariance = 1e-10 * Mat2::Identity();
  s.sigma2_x = 1e-10;
  s.unsafe_radius = {0.5, 1.0, 1.5};
  const auto run = simulate(s, 14);
  const HybridBelief b = belief_for(run, 1);
  Rng rng = make_rng(14, 0, Stream::kSampler);
  const auto set = snis_sample(b, rng, 50);
  // From about (1, 1), four diagonal steps pass over (3, 3).
  const Rollouts r = rollout_states(set.states, b.index(), straight_plan(4), noise_free);
  EXPECT_DOUBLE_EQ(estimate_p_safe(set, r, s, b).value, 0.0);
}

TEST(PSafe, CurrentPoseDoesNotCount) {
  Scenario s = small_scenario(1, 1, 1);
  s.object_priors[0].mean = Vec2{1.0, 1.0};
  s.object_priors[0].covariance = 1e-10 * Mat2::Identity();
  s.robot_prior.covariance = 1e-10 * Mat2::Identity();
  s.sigma2_x = 1e-10;
  s.unsafe_radius = {0.5};
  const auto run = simulate(s, 15);
  const HybridBelief b = belief_for(run, 1);
  Rng rng = make_rng(15, 0, Stream::kSampler);
  const auto set = snis_sample(b, rng, 20);
  const Rollouts away = rollout_states(set.states, b.index(), straight_plan(3, Vec2{1.0, 0.0}), noise_free);
  EXPECT_DOUBLE_EQ(estimate_p_safe(set, away, s, b).value, 1.0);
}

TEST(PSafe, LargerRadiusNeverRaisesSafety) {
  const Scenario base = small_scenario(3, 3, 3);
  const auto st = make_setup(base, 16, 400, 6);
  double previous = 1.0;
  for (const double grow : {0.0, 0.3, 0.6, 1.0, 2.0}) {
    Scenario s = base;
    s.unsafe_radius[1] += grow;
    const double v = estimate_p_safe(st.samples, st.rollouts, s, st.belief).value;
    EXPECT_LE(v, previous + 1e-15);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    previous = v;
  }
}

TEST(PSafe, IndicatorFactorsOverObjectsAndSteps) {
  Rng rng = make_rng(17, 0, Stream::kReference);
  for (int rep = 0; rep < 2000; ++rep) {
    const int no = 1 + rep % 4;
    const int steps = 1 + rep % 5;
    StackedIndex idx{no};
    idx.append_pose();
    Eigen::VectorXd x(2 * no + 2);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      x(i) = 4.0 * uniform01(rng);
    }
    std::vector<Vec2> poses;
    for (int s = 0; s <= steps; ++s) {
      poses.push_back(Vec2{4.0 * uniform01(rng), 4.0 * uniform01(rng)});
    }
    std::vector<double> radius(static_cast<std::size_t>(no));
    for (auto& r : radius) {
      r = 1.5 * uniform01(rng);
    }
    const TrajectoryView view{x, idx, poses};
    bool clear = true;
    for (int s = 1; s <= steps; ++s) {
      for (int n = 0; n < no; ++n) {
        if ((poses[static_cast<std::size_t>(s)] - view.object(n)).norm() < radius[static_cast<std::size_t>(n)]) {
          clear = false;
        }
      }
    }
    double product = 1.0;
    for (int n = 0; n < no; ++n) {
      product *= stays_clear(view, n, radius[static_cast<std::size_t>(n)]);
    }
    EXPECT_EQ(clear ? 1.0 : 0.0, product);
  }
}

TEST(ExpectedCost, AtTheGoalWithNoPlanCostsNothing) {
  const std::vector<Vec2> poses{Vec2{10.0, 10.0}};
  EXPECT_DOUBLE_EQ(trajectory_cost(poses, OpenLoopPlan{}, Vec2{10.0, 10.0}), 0.0);
}

TEST(ExpectedCost, StraightLineClosedForm) {
  const Vec2 goal{10.0, 10.0};
  const OpenLoopPlan plan = straight_plan(3);
  std::vector<Vec2> poses{Vec2{4.0, 4.0}};
  for (const auto& a : plan.actions) {
    poses.push_back(poses.back() + a);
  }
  const double sqrt2 = std::sqrt(2.0);
  const double want = (6.0 + 5.0 + 4.0 + 3.0) * sqrt2 + 3.0 * sqrt2;
  EXPECT_NEAR(trajectory_cost(poses, plan, goal), want, 1e-12);
}

TEST(ExpectedCost, MatchesAHighSampleReference) {
  const Scenario s = small_scenario(2, 2, 2);
  const auto run = simulate(s, 18);
  const HybridBelief b = belief_for(run, 2);
  Rng rng = make_rng(18, 0, Stream::kSampler);
  const OpenLoopPlan plan = straight_plan(4);
  auto estimate = [&](int n) {
    const auto set = snis_sample(b, rng, n);
    const Rollouts r = rollout_states(set.states, b.index(), plan, s, rng);
    return expected_cost(set, r, plan, s);
  };
  const auto ref = estimate(400000);
  const auto got = estimate(5000);
  EXPECT_NEAR(got.value, ref.value, 3.0 * std::hypot(got.std_error, ref.std_error));
}

TEST(MseBound, ConstantConditionalMeanGivesZero) {
  const std::vector<double> p{0.1, 0.2, 0.3, 0.4};
  const std::vector<double> q{0.25, 0.25, 0.25, 0.25};
  const std::vector<double> g{0.7, 0.7, 0.7, 0.7};
  EXPECT_NEAR(is_mse_lower_bound(p, q, g, 10), 0.0, 1e-17);
}

TEST(MseBound, UniformWeights) {
  const std::vector<double> p{0.25, 0.25, 0.25, 0.25};
  const std::vector<double> g{0.0, 1.0, 0.0, 1.0};
  EXPECT_NEAR(is_mse_lower_bound(p, p, g, 100), 0.01, 1e-15);
}

TEST(MseBound, ProposalMustCoverThePrior) {
  const std::vector<double> p{0.5, 0.5};
  const std::vector<double> q{1.0, 0.0};
  const std::vector<double> g{0.0, 1.0};
  EXPECT_THROW((void)is_mse_lower_bound(p, q, g, 10), std::domain_error);
}

TEST(MseBound, FactorizedProposalBeatsUniformByTheSpaceSize) {
  // Concentrated posterior over N^o = 3 binary classes.
  Scenario s = small_scenario(3, 2, 8, 19);
  s.alpha = {0.5, 1.5};
  s.sigma2_obs = 1.0;
  const auto run = simulate(s, 19);
  AnalyticHybridBelief exact = AnalyticHybridBelief::from_scenario(s);
  testing::apply_steps(exact, run.history, 8);
  const std::vector<double>& post = exact.weights();
  EXPECT_GT(*std::max_element(post.begin(), post.end()), 0.8);

  // Conditional mean of a class-dependent reward given C, by Monte Carlo over X | C.
  const HybridBelief b = belief_for(run, 8);
  Rng rng = make_rng(19, 0, Stream::kSampler);
  const StructuredReward reward = random_reward(rng, 3, 2, false);
  const OpenLoopPlan plan = straight_plan(4, Vec2{-1.0, -1.0});
  std::vector<double> g_bar;
  for (const auto& comp : exact.components()) {
    const auto states = comp.posterior.sample(rng, 10000);
    const Rollouts r = rollout_states(states, b.index(), plan, noise_free);
    double m = 0.0;
    for (int i = 0; i < 10000; ++i) {
      m += reward.evaluate(comp.hypothesis, TrajectoryView{states[static_cast<std::size_t>(i)], b.index(), r.of(i)});
    }
    g_bar.push_back(m / 10000.0);
  }
  const std::vector<double> uniform(post.size(), 1.0 / static_cast<double>(post.size()));
  const double ours = factorized_mse_lower_bound(post, g_bar, 100);
  const double theirs = is_mse_lower_bound(post, uniform, g_bar, 100);
  EXPECT_GT(theirs, 0.0);
  EXPECT_GE(theirs, static_cast<double>(post.size()) * ours * (1.0 - 1e-12));
}

TEST(Hoeffding, StandardTwoSidedBound) {
  EXPECT_NEAR(hoeffding_two_sided(1e6, 0.003), 2.0 * std::exp(-18.0), 1e-20);
  EXPECT_NEAR(hoeffding_two_sided(1e6, 0.003), 3.05e-8, 0.01e-8);
}

TEST(RaoBlackwell, ClassFreeRewardHasNoGap) {
  const Scenario s = small_scenario(2, 2, 3);
  const auto run = simulate(s, 20);
  StructuredReward reward;
  reward.terms.push_back({{0}, [](int step, int n, int, const TrajectoryView& v) {
                            return (v.pose(step) - v.object(n)).norm();
                          }});
  Rng rng = make_rng(20, 0, Stream::kReference);
  const auto gap = rao_blackwell_gap(s, run.history, reward, straight_plan(2), 20, 50, rng, 2000);
  EXPECT_NEAR(gap.predicted_gap, 0.0, 1e-15);
  EXPECT_NEAR(gap.difference, 0.0, 1e-12);
  EXPECT_NEAR(gap.mse_sampled, gap.mse_explicit, 1e-12);
}

TEST(RaoBlackwell, KnownClassesHaveNoGap) {
  Scenario s = small_scenario(2, 2, 3);
  s.class_prior = {{1.0, 0.0}, {0.0, 1.0}};
  const auto run = simulate(s, 21);
  Rng rng = make_rng(21, 0, Stream::kReference);
  const auto gap = rao_blackwell_gap(s, run.history, p_safe_reward(s), straight_plan(4), 20, 50, rng, 2000);
  EXPECT_NEAR(gap.predicted_gap, 0.0, 1e-15);
  EXPECT_NEAR(gap.difference, 0.0, 1e-12);
}

TEST(RaoBlackwell, ExplicitEstimatorIsNoWorse) {
  Scenario s = small_scenario(2, 3, 3);
  s.alpha = {0.8, 1.0, 1.2};
  const auto run = simulate(s, 22);
  Rng rng = make_rng(22, 0, Stream::kReference);
  Rng rr = make_rng(22, 1, Stream::kReference);
  const StructuredReward reward = random_reward(rr, 2, 3, false);
  const auto gap = rao_blackwell_gap(s, run.history, reward, straight_plan(3), 10, 300, rng, 50000);
  EXPECT_GT(gap.predicted_gap, 0.0);
  EXPECT_LE(gap.mse_explicit, gap.mse_sampled + 2.0 * gap.difference_se);
  EXPECT_NEAR(gap.difference, gap.predicted_gap, 3.0 * std::hypot(gap.difference_se, gap.predicted_gap_se));
  EXPECT_THROW((void)rao_blackwell_gap(s, run.history, reward, straight_plan(3), 10, 1, rng), std::invalid_argument);
}

}  // namespace
}  // namespace hybsem
