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

#ifndef HYBSEM_SCENARIO_HPP
#define HYBSEM_SCENARIO_HPP

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "hybsem/hypothesis.hpp"
#include "hybsem/numeric.hpp"
#include "hybsem/random.hpp"

/**
 * \file
 * \brief Generative world model: priors, transition, geometric and semantic
 * observation models, and ground-truth simulation.
 *
 * Models are additive and isotropic in 2D:
 *  - transition  x_{t+1} = x_t + a_t + w,               w ~ N(0, sigma2_x I)
 *  - geometric   z^g = x^o_n - x_t + v^g,              v^g ~ N(0, sigma2_obs I)
 *  - semantic    z^s = alpha_{c_n} (x^o_n - x_t) + v^s, v^s ~ N(0, sigma2_obs I)
 */

namespace hybsem {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

class ScenarioError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct GaussianPrior2 {
  Vec2 mean{Vec2::Zero()};
  Mat2 covariance{Mat2::Identity()};
};

/// Ground truth pinned in the scenario file instead of being sampled.
struct FixedTruth {
  Hypothesis classes;
  std::vector<Vec2> objects;
  Vec2 start{Vec2::Zero()};
};

/// Full generative description of one world family.
struct Scenario {
  std::string name{"unnamed"};
  std::uint64_t seed{0};
  int n_objects{0};
  int n_classes{1};
  GaussianPrior2 robot_prior;
  std::vector<GaussianPrior2> object_priors;
  /// `class_prior[n][c]`; rows sum to one.
  std::vector<std::vector<double>> class_prior;
  double sigma2_obs{5.0};
  double sigma2_x{0.3};
  /// Per-class semantic gain, strictly increasing.
  std::vector<double> alpha;
  /// Per-class unsafe disk radius.
  std::vector<double> unsafe_radius;
  Vec2 goal{10.0, 10.0};
  /// Predefined open-loop actions (the opening moves when planning).
  std::vector<Vec2> actions;
  std::optional<FixedTruth> truth;

  /// Gains equally spaced on [low, high]; a single class gets the midpoint.
  static std::vector<double> equally_spaced(int count, double low, double high) {
    std::vector<double> out(static_cast<std::size_t>(count));
    for (int c = 0; c < count; ++c) {
      out[static_cast<std::size_t>(c)] =
          count == 1 ? 0.5 * (low + high) : low + (high - low) * c / static_cast<double>(count - 1);
    }
    return out;
  }

  [[nodiscard]] HypothesisCodec codec() const { return HypothesisCodec{n_objects, n_classes}; }

  void validate() const {
    if (n_classes < 1) {
      throw ScenarioError("scenario: n_classes must be >= 1");
    }
    if (n_objects < 0) {
      throw ScenarioError("scenario: n_objects must be >= 0");
    }
    if (static_cast<int>(object_priors.size()) != n_objects) {
      throw ScenarioError("scenario: object_priors must have n_objects entries");
    }
    if (static_cast<int>(class_prior.size()) != n_objects) {
      throw ScenarioError("scenario: class_prior must have n_objects rows");
    }
    for (const auto& row : class_prior) {
      if (static_cast<int>(row.size()) != n_classes) {
        throw ScenarioError("scenario: class_prior rows must have n_classes entries");
      }
      double sum = 0.0;
      for (const double p : row) {
        if (!(p >= 0.0)) {
          throw ScenarioError("scenario: class_prior entries must be non-negative");
        }
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-12) {
        throw ScenarioError("scenario: class_prior rows must sum to 1");
      }
    }
    if (static_cast<int>(alpha.size()) != n_classes) {
      throw ScenarioError("scenario: alpha must have n_classes entries");
    }
    for (std::size_t c = 1; c < alpha.size(); ++c) {
      if (!(alpha[c] > alpha[c - 1])) {
        throw ScenarioError("scenario: alpha must be strictly increasing");
      }
    }
    if (static_cast<int>(unsafe_radius.size()) != n_classes) {
      throw ScenarioError("scenario: unsafe_radius must have n_classes entries");
    }
    for (const double r : unsafe_radius) {
      if (!(r >= 0.0)) {
        throw ScenarioError("scenario: unsafe radii must be >= 0");
      }
    }
    if (!(sigma2_obs > 0.0) || !(sigma2_x > 0.0)) {
      throw ScenarioError("scenario: variances must be > 0");
    }
    auto check_spd = [](const Mat2& m, const char* what) {
      if (!m.isApprox(m.transpose()) || Eigen::LLT<Mat2>(m).info() != Eigen::Success) {
        throw ScenarioError(std::string{"scenario: "} + what + " covariance must be SPD");
      }
    };
    // The robot start may be a point mass (zero covariance) for world sampling.
    if (!robot_prior.covariance.isApprox(robot_prior.covariance.transpose()) ||
        Eigen::SelfAdjointEigenSolver<Mat2>(robot_prior.covariance).eigenvalues().minCoeff() < 0.0) {
      throw ScenarioError("scenario: robot_prior covariance must be symmetric positive semi-definite");
    }
    for (const auto& p : object_priors) {
      check_spd(p.covariance, "object_prior");
    }
    if (truth) {
      if (truth->classes.size() != n_objects || static_cast<int>(truth->objects.size()) != n_objects) {
        throw ScenarioError("scenario: truth must list n_objects classes and objects");
      }
      for (const int c : truth->classes.classes) {
        if (c < 0 || c >= n_classes) {
          throw ScenarioError("scenario: truth class out of range");
        }
      }
    }
  }
};

/// Ground truth of one simulated trial.
struct WorldTruth {
  Hypothesis classes;
  std::vector<Vec2> objects;
  /// x_0 .. x_k
  std::vector<Vec2> trajectory;
};

struct ObjectObservation {
  int object{0};
  Vec2 geometric{Vec2::Zero()};
  Vec2 semantic{Vec2::Zero()};
};

/// Observations received at one time-step.
struct ObservationBatch {
  int time{0};
  std::vector<ObjectObservation> entries;
};

/// Actions a_{0:k-1} and observation batches z_{1:k}.
struct History {
  std::vector<Vec2> actions;
  std::vector<ObservationBatch> batches;

  [[nodiscard]] int steps() const { return static_cast<int>(batches.size()); }

  /// Sorted time-steps at which object `n` was observed.
  [[nodiscard]] std::vector<int> time_index(int n) const {
    std::vector<int> out;
    for (const auto& batch : batches) {
      for (const auto& e : batch.entries) {
        if (e.object == n) {
          out.push_back(batch.time);
          break;
        }
      }
    }
    return out;
  }
};

/// Tag selecting the noise-free variant of a model.
struct NoiseFree {};
inline constexpr NoiseFree noise_free{};

inline Vec2 sample_gaussian2(const GaussianPrior2& prior, Rng& rng) {
  const Eigen::LLT<Mat2> llt{prior.covariance};
  const Vec2 e{standard_normal(rng), standard_normal(rng)};
  if (llt.info() == Eigen::Success) {
    return prior.mean + llt.matrixL() * e;
  }
  const Eigen::SelfAdjointEigenSolver<Mat2> eig{prior.covariance};
  const Vec2 scale = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return prior.mean + eig.eigenvectors() * scale.asDiagonal() * e;
}

/// Samples a world from the priors.
inline WorldTruth sample_world(const Scenario& scenario, Rng& rng) {
  scenario.validate();
  WorldTruth world;
  world.classes.classes.resize(static_cast<std::size_t>(scenario.n_objects));
  for (int n = 0; n < scenario.n_objects; ++n) {
    world.classes.classes[static_cast<std::size_t>(n)] =
        sample_categorical(scenario.class_prior[static_cast<std::size_t>(n)], rng);
  }
  world.objects.reserve(static_cast<std::size_t>(scenario.n_objects));
  for (const auto& prior : scenario.object_priors) {
    world.objects.push_back(sample_gaussian2(prior, rng));
  }
  world.trajectory.push_back(sample_gaussian2(scenario.robot_prior, rng));
  return world;
}

/// The pinned truth when the scenario carries one, otherwise a prior sample.
inline WorldTruth world_for(const Scenario& scenario, Rng& rng) {
  if (!scenario.truth) {
    return sample_world(scenario, rng);
  }
  scenario.validate();
  return WorldTruth{scenario.truth->classes, scenario.truth->objects, {scenario.truth->start}};
}

inline Vec2 step_transition(const Vec2& x, const Vec2& action, double sigma2_x, Rng& rng) {
  const double s = std::sqrt(sigma2_x);
  return x + action + Vec2{s * standard_normal(rng), s * standard_normal(rng)};
}

inline Vec2 step_transition(const Vec2& x, const Vec2& action, NoiseFree /*unused*/) { return x + action; }

/// Observes every object from pose `x` at time-step `time`.
inline ObservationBatch observe(const Vec2& x, const WorldTruth& world, const Scenario& scenario, int time,
                                Rng& rng) {
  const double s = std::sqrt(scenario.sigma2_obs);
  ObservationBatch batch{time, {}};
  batch.entries.reserve(world.objects.size());
  for (int n = 0; n < scenario.n_objects; ++n) {
    const Vec2 d = world.objects[static_cast<std::size_t>(n)] - x;
    const double a = scenario.alpha[static_cast<std::size_t>(world.classes[n])];
    ObjectObservation obs;
    obs.object = n;
    obs.geometric = d + Vec2{s * standard_normal(rng), s * standard_normal(rng)};
    obs.semantic = a * d + Vec2{s * standard_normal(rng), s * standard_normal(rng)};
    batch.entries.push_back(obs);
  }
  return batch;
}

inline ObservationBatch observe(const Vec2& x, const WorldTruth& world, const Scenario& scenario, int time,
                                NoiseFree /*unused*/) {
  ObservationBatch batch{time, {}};
  for (int n = 0; n < scenario.n_objects; ++n) {
    const Vec2 d = world.objects[static_cast<std::size_t>(n)] - x;
    const double a = scenario.alpha[static_cast<std::size_t>(world.classes[n])];
    batch.entries.push_back({n, d, a * d});
  }
  return batch;
}

/// log N(z; mean, sigma2 I) in 2D.
inline double isotropic_log_density(const Vec2& z, const Vec2& mean, double sigma2) {
  return -kLog2Pi - std::log(sigma2) - 0.5 * (z - mean).squaredNorm() / sigma2;
}

/// log P(z^s | x, x^o, c).
inline double semantic_log_likelihood(const Vec2& z_semantic, const Vec2& x, const Vec2& object, int cls,
                                      const Scenario& scenario) {
  if (cls < 0 || cls >= scenario.n_classes) {
    throw std::out_of_range("semantic_log_likelihood: class index out of range");
  }
  return isotropic_log_density(z_semantic, scenario.alpha[static_cast<std::size_t>(cls)] * (object - x),
                               scenario.sigma2_obs);
}

/// log P(z^g | x, x^o); independent of the class.
inline double geometric_log_likelihood(const Vec2& z_geometric, const Vec2& x, const Vec2& object,
                                       const Scenario& scenario) {
  return isotropic_log_density(z_geometric, object - x, scenario.sigma2_obs);
}

/// Applies one action to the true robot and returns the resulting observations.
inline ObservationBatch advance_world(WorldTruth& world, const Scenario& scenario, const Vec2& action, Rng& rng) {
  const Vec2 next = step_transition(world.trajectory.back(), action, scenario.sigma2_x, rng);
  world.trajectory.push_back(next);
  return observe(next, world, scenario, static_cast<int>(world.trajectory.size()) - 1, rng);
}

/// Runs `actions` from the world's current pose, recording the history.
inline History simulate_history(WorldTruth& world, const Scenario& scenario, const std::vector<Vec2>& actions,
                                Rng& rng) {
  History history;
  for (const auto& a : actions) {
    history.actions.push_back(a);
    history.batches.push_back(advance_world(world, scenario, a, rng));
  }
  return history;
}

// JSON --------------------------------------------------------------------

namespace detail {

inline Vec2 vec2_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) {
    throw ScenarioError("scenario: expected a 2-element array");
  }
  return Vec2{j[0].get<double>(), j[1].get<double>()};
}

inline nlohmann::json vec2_to_json(const Vec2& v) { return nlohmann::json::array({v.x(), v.y()}); }

inline Mat2 covariance_from_json(const nlohmann::json& j) {
  if (j.is_number()) {
    return j.get<double>() * Mat2::Identity();
  }
  if (j.is_array() && j.size() == 2 && j[0].is_array()) {
    Mat2 m;
    m << j[0][0].get<double>(), j[0][1].get<double>(), j[1][0].get<double>(), j[1][1].get<double>();
    return m;
  }
  throw ScenarioError("scenario: covariance must be a scalar variance or a 2x2 array");
}

inline GaussianPrior2 prior_from_json(const nlohmann::json& j) {
  GaussianPrior2 p;
  p.mean = vec2_from_json(j.at("mean"));
  p.covariance = covariance_from_json(j.at("covariance"));
  return p;
}

inline nlohmann::json prior_to_json(const GaussianPrior2& p) {
  return {{"mean", vec2_to_json(p.mean)},
          {"covariance", {{p.covariance(0, 0), p.covariance(0, 1)}, {p.covariance(1, 0), p.covariance(1, 1)}}}};
}

}  // namespace detail

/// Parses a scenario document; see README for the schema.
inline Scenario scenario_from_json(const nlohmann::json& j) {
  try {
    Scenario s;
    s.name = j.value("name", std::string{"unnamed"});
    s.seed = j.value("seed", std::uint64_t{0});
    s.n_classes = j.at("n_classes").get<int>();
    s.sigma2_obs = j.value("sigma2_obs", 5.0);
    s.sigma2_x = j.value("sigma2_x", 0.3);
    s.robot_prior = detail::prior_from_json(j.at("robot_prior"));
    for (const auto& p : j.at("object_priors")) {
      s.object_priors.push_back(detail::prior_from_json(p));
    }
    s.n_objects = static_cast<int>(s.object_priors.size());
    if (j.contains("n_objects") && j.at("n_objects").get<int>() != s.n_objects) {
      throw ScenarioError("scenario: n_objects disagrees with object_priors");
    }
    const std::vector<double> uniform(static_cast<std::size_t>(s.n_classes), 1.0 / s.n_classes);
    if (!j.contains("class_prior")) {
      s.class_prior.assign(static_cast<std::size_t>(s.n_objects), uniform);
    } else if (j.at("class_prior").size() > 0 && j.at("class_prior")[0].is_number()) {
      s.class_prior.assign(static_cast<std::size_t>(s.n_objects), j.at("class_prior").get<std::vector<double>>());
    } else {
      s.class_prior = j.at("class_prior").get<std::vector<std::vector<double>>>();
    }
    if (j.contains("alpha")) {
      s.alpha = j.at("alpha").get<std::vector<double>>();
    } else {
      const auto range = j.value("alpha_range", std::vector<double>{0.95, 1.05});
      if (range.size() != 2) {
        throw ScenarioError("scenario: alpha_range must be [low, high]");
      }
      s.alpha = Scenario::equally_spaced(s.n_classes, range[0], range[1]);
    }
    if (j.contains("unsafe_radius")) {
      s.unsafe_radius = j.at("unsafe_radius").get<std::vector<double>>();
    } else {
      const auto range = j.value("unsafe_radius_range", std::vector<double>{0.0, 0.0});
      s.unsafe_radius = Scenario::equally_spaced(s.n_classes, range.at(0), range.at(1));
    }
    if (j.contains("goal")) {
      s.goal = detail::vec2_from_json(j.at("goal"));
    }
    if (j.contains("actions")) {
      for (const auto& a : j.at("actions")) {
        s.actions.push_back(detail::vec2_from_json(a));
      }
    }
    if (j.contains("truth")) {
      FixedTruth t;
      t.classes.classes = j.at("truth").at("classes").get<std::vector<int>>();
      for (const auto& o : j.at("truth").at("objects")) {
        t.objects.push_back(detail::vec2_from_json(o));
      }
      t.start = j.at("truth").contains("start") ? detail::vec2_from_json(j.at("truth").at("start")) : s.robot_prior.mean;
      s.truth = t;
    }
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioError(std::string{"scenario: malformed document: "} + e.what());
  }
}

inline nlohmann::json scenario_to_json(const Scenario& s) {
  nlohmann::json j;
  j["name"] = s.name;
  j["seed"] = s.seed;
  j["n_objects"] = s.n_objects;
  j["n_classes"] = s.n_classes;
  j["sigma2_obs"] = s.sigma2_obs;
  j["sigma2_x"] = s.sigma2_x;
  j["robot_prior"] = detail::prior_to_json(s.robot_prior);
  j["object_priors"] = nlohmann::json::array();
  for (const auto& p : s.object_priors) {
    j["object_priors"].push_back(detail::prior_to_json(p));
  }
  j["class_prior"] = s.class_prior;
  j["alpha"] = s.alpha;
  j["unsafe_radius"] = s.unsafe_radius;
  j["goal"] = detail::vec2_to_json(s.goal);
  j["actions"] = nlohmann::json::array();
  for (const auto& a : s.actions) {
    j["actions"].push_back(detail::vec2_to_json(a));
  }
  if (s.truth) {
    nlohmann::json t;
    t["classes"] = s.truth->classes.classes;
    t["objects"] = nlohmann::json::array();
    for (const auto& o : s.truth->objects) {
      t["objects"].push_back(detail::vec2_to_json(o));
    }
    t["start"] = detail::vec2_to_json(s.truth->start);
    j["truth"] = t;
  }
  return j;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ScenarioError("scenario: cannot open " + path);
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioError("scenario: " + path + " is not valid JSON: " + e.what());
  }
  return scenario_from_json(j);
}

inline nlohmann::json history_to_json(const History& h) {
  nlohmann::json j;
  j["actions"] = nlohmann::json::array();
  for (const auto& a : h.actions) {
    j["actions"].push_back(detail::vec2_to_json(a));
  }
  j["batches"] = nlohmann::json::array();
  for (const auto& b : h.batches) {
    nlohmann::json jb;
    jb["time"] = b.time;
    jb["observations"] = nlohmann::json::array();
    for (const auto& e : b.entries) {
      jb["observations"].push_back({{"object", e.object},
                                    {"geometric", detail::vec2_to_json(e.geometric)},
                                    {"semantic", detail::vec2_to_json(e.semantic)}});
    }
    j["batches"].push_back(jb);
  }
  return j;
}

inline nlohmann::json world_to_json(const WorldTruth& w) {
  nlohmann::json j;
  j["classes"] = w.classes.classes;
  j["objects"] = nlohmann::json::array();
  for (const auto& o : w.objects) {
    j["objects"].push_back(detail::vec2_to_json(o));
  }
  j["trajectory"] = nlohmann::json::array();
  for (const auto& x : w.trajectory) {
    j["trajectory"].push_back(detail::vec2_to_json(x));
  }
  return j;
}

}  // namespace hybsem

#endif  // HYBSEM_SCENARIO_HPP
