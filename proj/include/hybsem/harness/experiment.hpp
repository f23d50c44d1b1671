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

#ifndef HYBSEM_HARNESS_EXPERIMENT_HPP
#define HYBSEM_HARNESS_EXPERIMENT_HPP

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "hybsem/estimators.hpp"
#include "hybsem/harness/oracle_check.hpp"
#include "hybsem/harness/results.hpp"
#include "hybsem/hypothesis.hpp"
#include "hybsem/methods.hpp"
#include "hybsem/planner.hpp"
#include "hybsem/random.hpp"
#include "hybsem/scenario.hpp"

/**
 * \file
 * \brief Experiment drivers: RMSE sweeps, the planning table and the oracle run.
 *
 * Every trial samples one world and one observation history from its own
 * substreams; all methods of that trial are fed the same batches. Errors are
 * measured against a reference method run at a large sample count, never
 * against the true world.
 */

namespace hybsem {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ExperimentKind {
  kPsafeVsTime,
  kRmseVsSamples,
  kRmseVsClasses,
  kRmseVsObjects,
  kPlanningTable,
  kOracleCheck,
};

inline std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::kPsafeVsTime: return "psafe-vs-time";
    case ExperimentKind::kRmseVsSamples: return "rmse-vs-samples";
    case ExperimentKind::kRmseVsClasses: return "rmse-vs-classes";
    case ExperimentKind::kRmseVsObjects: return "rmse-vs-objects";
    case ExperimentKind::kPlanningTable: return "planning-table";
    case ExperimentKind::kOracleCheck: return "oracle-check";
  }
  return "unknown";
}

inline ExperimentKind experiment_kind_from_string(const std::string& s) {
  for (const auto k : {ExperimentKind::kPsafeVsTime, ExperimentKind::kRmseVsSamples, ExperimentKind::kRmseVsClasses,
                       ExperimentKind::kRmseVsObjects, ExperimentKind::kPlanningTable, ExperimentKind::kOracleCheck}) {
    if (to_string(k) == s) {
      return k;
    }
  }
  throw ConfigError("experiment: unknown kind '" + s + "'");
}

struct ExperimentConfig {
  ExperimentKind kind{ExperimentKind::kPsafeVsTime};
  int trials{100};
  int n_samples{200};
  int reference_samples{100000};
  std::string reference_method{method::kTheoreticalAllHyp};
  std::vector<std::string> methods{method::all()};
  /// N^s, N^c or N^o per kind; unused by psafe-vs-time, planning-table and oracle-check.
  std::vector<double> sweep;
  /// Observations consumed before the single evaluation of the sweep kinds.
  int time_step{4};
  /// psafe-vs-time evaluates after each of the first `history_steps` actions; -1 means all but the last.
  int history_steps{-1};
  /// Every trial replays the history of trial 0; only the estimator streams change.
  bool fixed_history{false};
  /// Off writes wall_ms = 0 so reruns are byte-identical.
  bool record_timing{true};
  int workers{1};
  std::uint64_t base_seed{1};
  std::string output{"results"};
  std::vector<Scenario> scenarios;
  MethodConfig method_config;
  PlannerConfig planner;

  [[nodiscard]] const Scenario& scenario() const {
    if (scenarios.empty()) {
      throw ConfigError("experiment: no scenario");
    }
    return scenarios.front();
  }

  void validate() const {
    if (trials < 1) {
      throw ConfigError("experiment: trials must be >= 1");
    }
    if (n_samples < 1 || reference_samples < 1) {
      throw ConfigError("experiment: sample counts must be >= 1");
    }
    if (workers < 1) {
      throw ConfigError("experiment: workers must be >= 1");
    }
    if (scenarios.empty()) {
      throw ConfigError("experiment: no scenario");
    }
    if (methods.empty() && kind != ExperimentKind::kOracleCheck) {
      throw ConfigError("experiment: method list is empty");
    }
    for (const auto& m : methods) {
      if (!method::is_known(m)) {
        throw ConfigError("experiment: unknown method '" + m + "'");
      }
    }
    if (!method::is_known(reference_method)) {
      throw ConfigError("experiment: unknown reference method '" + reference_method + "'");
    }
    if (!std::is_sorted(sweep.begin(), sweep.end())) {
      throw ConfigError("experiment: sweep values must be sorted");
    }
    const bool swept = kind == ExperimentKind::kRmseVsSamples || kind == ExperimentKind::kRmseVsClasses ||
                       kind == ExperimentKind::kRmseVsObjects;
    if (swept) {
      if (sweep.empty()) {
        throw ConfigError("experiment: " + to_string(kind) + " needs sweep values");
      }
      for (const double v : sweep) {
        if (!(v >= 1.0) || v != std::floor(v)) {
          throw ConfigError("experiment: sweep values must be positive integers");
        }
      }
      if (time_step < 0 || time_step > static_cast<int>(scenario().actions.size())) {
        throw ConfigError("experiment: time_step exceeds the scripted actions");
      }
    }
    if (kind == ExperimentKind::kRmseVsObjects &&
        sweep.back() > static_cast<double>(scenario().object_priors.size())) {
      throw ConfigError("experiment: scenario lists fewer object priors than the largest sweep value");
    }
    if (kind == ExperimentKind::kPsafeVsTime && history_steps > static_cast<int>(scenario().actions.size())) {
      throw ConfigError("experiment: history_steps exceeds the scripted actions");
    }
  }

  /// Parses a config document; relative scenario paths resolve against `base_dir`.
  static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
    try {
      ExperimentConfig c;
      c.kind = experiment_kind_from_string(j.at("kind").get<std::string>());
      c.trials = j.value("trials", c.trials);
      c.n_samples = j.value("n_samples", c.n_samples);
      c.reference_samples = j.value("reference_samples", c.reference_samples);
      c.reference_method = j.value("reference_method", c.reference_method);
      if (j.contains("methods")) {
        c.methods = j.at("methods").get<std::vector<std::string>>();
      }
      c.sweep = j.value("sweep", c.sweep);
      c.time_step = j.value("time_step", c.time_step);
      c.history_steps = j.value("history_steps", c.history_steps);
      c.fixed_history = j.value("fixed_history", c.fixed_history);
      c.record_timing = j.value("record_timing", c.record_timing);
      c.workers = j.value("workers", c.workers);
      c.base_seed = j.value("base_seed", c.base_seed);
      c.output = j.value("output", c.output);
      if (j.contains("method_config")) {
        c.method_config = MethodConfig::from_json(j.at("method_config"));
      }
      c.method_config.n_samples = c.n_samples;
      if (j.contains("planner")) {
        c.planner = PlannerConfig::from_json(j.at("planner"));
      }
      auto load = [&](const nlohmann::json& ref) {
        if (ref.is_string()) {
          std::filesystem::path p{ref.get<std::string>()};
          if (p.is_relative() && !base_dir.empty()) {
            p = base_dir / p;
          }
          c.scenarios.push_back(load_scenario(p.string()));
        } else {
          c.scenarios.push_back(scenario_from_json(ref));
        }
      };
      const auto& ref = j.at("scenario");
      if (ref.is_array()) {
        for (const auto& r : ref) {
          load(r);
        }
      } else {
        load(ref);
      }
      c.validate();
      return c;
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(std::string{"experiment config: "} + e.what());
    }
  }

  static ExperimentConfig load(const std::string& path) {
    std::ifstream in{path};
    if (!in) {
      throw ConfigError("experiment config: cannot open '" + path + "'");
    }
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string{"experiment config: "} + e.what());
    }
    return from_json(j, std::filesystem::path{path}.parent_path());
  }

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json names = nlohmann::json::array();
    for (const auto& s : scenarios) {
      names.push_back(s.name);
    }
    return {{"kind", to_string(kind)},
            {"trials", trials},
            {"n_samples", n_samples},
            {"reference_samples", reference_samples},
            {"reference_method", reference_method},
            {"methods", methods},
            {"sweep", sweep},
            {"time_step", time_step},
            {"history_steps", history_steps},
            {"fixed_history", fixed_history},
            {"record_timing", record_timing},
            {"base_seed", base_seed},
            {"scenarios", names},
            {"method_config", method_config.to_json()},
            {"planner", planner.to_json()}};
  }
};

/// Same family with `n_classes` classes: uniform prior, gains and radii spread over the base ranges.
inline Scenario with_class_count(const Scenario& base, int n_classes) {
  if (n_classes < 1) {
    throw ConfigError("with_class_count: need at least one class");
  }
  Scenario s = base;
  s.name = base.name + "-c" + std::to_string(n_classes);
  s.n_classes = n_classes;
  const auto [rmin, rmax] = std::minmax_element(base.unsafe_radius.begin(), base.unsafe_radius.end());
  const double alpha_lo = base.n_classes > 1 ? base.alpha.front() : 0.95;
  const double alpha_hi = base.n_classes > 1 ? base.alpha.back() : 1.05;
  s.alpha = Scenario::equally_spaced(n_classes, alpha_lo, alpha_hi);
  s.unsafe_radius = Scenario::equally_spaced(n_classes, *rmin, *rmax);
  s.class_prior.assign(static_cast<std::size_t>(s.n_objects),
                       std::vector<double>(static_cast<std::size_t>(n_classes), 1.0 / n_classes));
  s.truth.reset();
  s.validate();
  return s;
}

/// Same family restricted to its first `n_objects` objects.
inline Scenario with_object_count(const Scenario& base, int n_objects) {
  if (n_objects < 0 || n_objects > static_cast<int>(base.object_priors.size())) {
    throw ConfigError("with_object_count: scenario lists too few object priors");
  }
  Scenario s = base;
  s.name = base.name + "-o" + std::to_string(n_objects);
  s.n_objects = n_objects;
  s.object_priors.resize(static_cast<std::size_t>(n_objects));
  s.class_prior.resize(static_cast<std::size_t>(n_objects));
  if (s.truth) {
    s.truth->classes.classes.resize(static_cast<std::size_t>(n_objects));
    s.truth->objects.resize(static_cast<std::size_t>(n_objects));
  }
  s.validate();
  return s;
}

/// FNV-1a over the raw bytes of every action and observation.
class StreamHash {
 public:
  void add(const Vec2& action, const ObservationBatch& batch) {
    bytes(&batch.time, sizeof batch.time);
    add(action);
    for (const auto& e : batch.entries) {
      bytes(&e.object, sizeof e.object);
      add(e.geometric);
      add(e.semantic);
    }
  }

  [[nodiscard]] std::uint64_t value() const { return h_; }

 private:
  void add(const Vec2& v) {
    const double xy[2] = {v.x(), v.y()};
    bytes(xy, sizeof xy);
  }
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 1099511628211ULL;
    }
  }

  std::uint64_t h_{1469598103934665603ULL};
};

inline std::uint64_t history_hash(const History& history) {
  StreamHash h;
  for (int k = 0; k < history.steps(); ++k) {
    h.add(history.actions[static_cast<std::size_t>(k)], history.batches[static_cast<std::size_t>(k)]);
  }
  return h.value();
}

using MethodFactory = std::function<std::unique_ptr<EstimationMethod>(const std::string&, const Scenario&,
                                                                      const MethodConfig&, Rng&)>;

struct ExperimentResult {
  ExperimentKind kind{ExperimentKind::kPsafeVsTime};
  std::vector<MetricRow> metrics;
  std::vector<PlanningRow> planning;
  std::vector<OracleReport> oracle;
  nlohmann::json metadata = nlohmann::json::object();

  [[nodiscard]] bool oracle_passed() const {
    return std::all_of(oracle.begin(), oracle.end(), [](const OracleReport& r) { return r.passed(); });
  }
};

namespace detail {

/// One evaluation point: the method sees `steps` actions, then scores the remaining scripted actions.
struct EvaluationPoint {
  int steps{0};
  OpenLoopPlan plan;
};

inline std::vector<EvaluationPoint> evaluation_points(const ExperimentConfig& config, const Scenario& scenario) {
  std::vector<int> steps;
  const int total = static_cast<int>(scenario.actions.size());
  if (config.kind == ExperimentKind::kPsafeVsTime) {
    const int last = config.history_steps >= 0 ? config.history_steps : std::max(0, total - 1);
    for (int k = 1; k <= last; ++k) {
      steps.push_back(k);
    }
  } else {
    steps.push_back(config.time_step);
  }
  std::vector<EvaluationPoint> out;
  for (const int k : steps) {
    EvaluationPoint p;
    p.steps = k;
    p.plan.actions.assign(scenario.actions.begin() + k, scenario.actions.end());
    out.push_back(std::move(p));
  }
  return out;
}

struct MethodRun {
  std::vector<std::optional<double>> estimates;
  std::vector<double> wall_ms;
  std::uint64_t stream_hash{0};
};

/// Feeds `history` to one method and scores every evaluation point; empty estimates when the guard trips.
inline MethodRun run_method(const MethodFactory& factory, const std::string& tag, const Scenario& scenario,
                            const MethodConfig& config, const History& history,
                            const std::vector<EvaluationPoint>& points, Rng& sampler_rng, Rng& filter_rng) {
  MethodRun run;
  run.estimates.assign(points.size(), std::nullopt);
  run.wall_ms.assign(points.size(), 0.0);
  StreamHash hash;
  std::unique_ptr<EstimationMethod> m;
  Stopwatch build_clock;
  double pending_ms = 0.0;
  try {
    m = factory(tag, scenario, config, filter_rng);
  } catch (const HypothesisSpaceError&) {
    run.stream_hash = history_hash(history);
    return run;
  }
  pending_ms += build_clock.elapsed_ms();
  int fed = 0;
  for (std::size_t p = 0; p < points.size(); ++p) {
    try {
      while (fed < points[p].steps) {
        const Stopwatch clock;
        const auto& action = history.actions[static_cast<std::size_t>(fed)];
        const auto& batch = history.batches[static_cast<std::size_t>(fed)];
        hash.add(action, batch);
        m->apply(action, batch, filter_rng);
        pending_ms += clock.elapsed_ms();
        ++fed;
      }
      const Stopwatch clock;
      m->prepare(sampler_rng);
      run.estimates[p] = m->score(points[p].plan, sampler_rng).p_safe.value;
      run.wall_ms[p] = pending_ms + clock.elapsed_ms();
      pending_ms = 0.0;
    } catch (const HypothesisSpaceError&) {
      break;
    }
  }
  for (int k = fed; k < history.steps(); ++k) {
    hash.add(history.actions[static_cast<std::size_t>(k)], history.batches[static_cast<std::size_t>(k)]);
  }
  run.stream_hash = hash.value();
  return run;
}

inline std::size_t method_salt(const std::string& tag) {
  const auto& all = method::all();
  return static_cast<std::size_t>(std::find(all.begin(), all.end(), tag) - all.begin()) + 1;
}

/// Runs `body(trial)` for every trial on `workers` threads; results land in trial order.
template <typename Row, typename Body>
std::vector<Row> run_trials(int trials, int workers, Body body) {
  std::vector<std::vector<Row>> per_trial(static_cast<std::size_t>(trials));
  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    while (true) {
      const int t = next.fetch_add(1);
      if (t >= trials) {
        return;
      }
      try {
        per_trial[static_cast<std::size_t>(t)] = body(t);
      } catch (...) {
        const std::lock_guard<std::mutex> lock{error_mutex};
        if (!error) {
          error = std::current_exception();
        }
      }
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < std::min(workers, trials); ++w) {
      pool.emplace_back(worker);
    }
    for (auto& th : pool) {
      th.join();
    }
  }
  if (error) {
    std::rethrow_exception(error);
  }
  std::vector<Row> out;
  for (auto& rows : per_trial) {
    out.insert(out.end(), std::make_move_iterator(rows.begin()), std::make_move_iterator(rows.end()));
  }
  return out;
}

struct SweepPoint {
  double value{0.0};
  Scenario scenario;
  int n_samples{0};
};

inline std::vector<SweepPoint> sweep_points(const ExperimentConfig& config) {
  std::vector<SweepPoint> out;
  const Scenario& base = config.scenario();
  switch (config.kind) {
    case ExperimentKind::kRmseVsSamples:
      for (const double v : config.sweep) {
        out.push_back({v, base, static_cast<int>(v)});
      }
      break;
    case ExperimentKind::kRmseVsClasses:
      for (const double v : config.sweep) {
        out.push_back({v, with_class_count(base, static_cast<int>(v)), config.n_samples});
      }
      break;
    case ExperimentKind::kRmseVsObjects:
      for (const double v : config.sweep) {
        out.push_back({v, with_object_count(base, static_cast<int>(v)), config.n_samples});
      }
      break;
    default:
      out.push_back({0.0, base, config.n_samples});
      break;
  }
  return out;
}

inline History trial_history(const Scenario& scenario, std::uint64_t base_seed, int history_trial, int steps) {
  Rng world_rng = make_rng(base_seed, static_cast<std::uint64_t>(history_trial), Stream::kWorld);
  Rng noise_rng = make_rng(base_seed, static_cast<std::uint64_t>(history_trial), Stream::kNoise);
  WorldTruth world = world_for(scenario, world_rng);
  const std::vector<Vec2> actions(scenario.actions.begin(), scenario.actions.begin() + steps);
  return simulate_history(world, scenario, actions, noise_rng);
}

inline std::vector<std::optional<double>> reference_values(const ExperimentConfig& config, const MethodFactory& factory,
                                                           const Scenario& scenario, const History& history,
                                                           const std::vector<EvaluationPoint>& points,
                                                           int history_trial) {
  MethodConfig ref = config.method_config;
  ref.n_samples = config.reference_samples;
  Rng sampler = make_rng(config.base_seed, static_cast<std::uint64_t>(history_trial), Stream::kReference);
  Rng filter = make_rng(config.base_seed, static_cast<std::uint64_t>(history_trial), Stream::kReference, 1);
  return run_method(factory, config.reference_method, scenario, ref, history, points, sampler, filter).estimates;
}

inline std::vector<MetricRow> run_metric_experiment(const ExperimentConfig& config, const MethodFactory& factory,
                                                    nlohmann::json& metadata) {
  const auto points_by_sweep = sweep_points(config);
  std::vector<std::vector<EvaluationPoint>> evals;
  int max_steps = 0;
  for (const auto& sp : points_by_sweep) {
    evals.push_back(evaluation_points(config, sp.scenario));
    for (const auto& e : evals.back()) {
      max_steps = std::max(max_steps, e.steps);
    }
  }
  // A fixed history shares one world, so its references are computed once per sweep point.
  std::vector<std::optional<std::vector<std::optional<double>>>> fixed_refs(points_by_sweep.size());
  std::vector<std::uint64_t> hashes(static_cast<std::size_t>(config.trials), 0);

  auto trial_body = [&](int trial) {
    std::vector<MetricRow> rows;
    const int history_trial = config.fixed_history ? 0 : trial;
    std::optional<History> shared_history;
    std::optional<std::vector<std::optional<double>>> shared_refs;
    for (std::size_t s = 0; s < points_by_sweep.size(); ++s) {
      const auto& sp = points_by_sweep[s];
      const auto& points = evals[s];
      const bool same_world = config.kind == ExperimentKind::kRmseVsSamples || points_by_sweep.size() == 1;
      if (!same_world || !shared_history) {
        shared_history = trial_history(sp.scenario, config.base_seed, history_trial, max_steps);
        shared_refs.reset();
      }
      const History& history = *shared_history;
      const std::uint64_t expected = history_hash(history);
      if (s == 0) {
        hashes[static_cast<std::size_t>(trial)] = expected;
      }
      std::vector<std::optional<double>> refs;
      if (config.fixed_history && fixed_refs[s]) {
        refs = *fixed_refs[s];
      } else if (same_world && shared_refs) {
        refs = *shared_refs;
      } else {
        refs = reference_values(config, factory, sp.scenario, history, points, history_trial);
        shared_refs = refs;
      }
      MethodConfig mc = config.method_config;
      mc.n_samples = sp.n_samples;
      for (const auto& tag : config.methods) {
        const auto salt = method_salt(tag);
        Rng sampler = make_rng(config.base_seed, static_cast<std::uint64_t>(trial), Stream::kSampler,
                               salt * 1000003ULL + s);
        Rng filter = make_rng(config.base_seed, static_cast<std::uint64_t>(trial), Stream::kFilter,
                              salt * 1000003ULL + s);
        const MethodRun run = run_method(factory, tag, sp.scenario, mc, history, points, sampler, filter);
        if (run.stream_hash != expected) {
          throw std::logic_error("experiment: method " + tag + " consumed a different observation stream");
        }
        for (std::size_t p = 0; p < points.size(); ++p) {
          MetricRow r;
          r.trial = trial;
          r.time_step = points[p].steps;
          r.method = tag;
          r.estimate = run.estimates[p];
          r.reference_value = refs[p];
          r.wall_ms = config.record_timing ? run.wall_ms[p] : 0.0;
          r.n_samples = sp.n_samples;
          r.sweep_value = config.kind == ExperimentKind::kPsafeVsTime ? points[p].steps : sp.value;
          rows.push_back(std::move(r));
        }
      }
    }
    return rows;
  };

  if (config.fixed_history) {
    for (std::size_t s = 0; s < points_by_sweep.size(); ++s) {
      const History h = trial_history(points_by_sweep[s].scenario, config.base_seed, 0, max_steps);
      fixed_refs[s] = reference_values(config, factory, points_by_sweep[s].scenario, h, evals[s], 0);
    }
  }
  auto rows = run_trials<MetricRow>(config.trials, config.workers, trial_body);
  nlohmann::json h = nlohmann::json::array();
  for (const auto v : hashes) {
    h.push_back(v);
  }
  metadata["observation_stream_hashes"] = h;
  return rows;
}

inline std::vector<PlanningRow> run_planning_experiment(const ExperimentConfig& config) {
  const Scenario& scenario = config.scenario();
  auto body = [&](int trial) {
    std::vector<PlanningRow> rows;
    for (const auto& tag : config.methods) {
      PlanningRow row;
      row.trial = trial;
      row.method = tag;
      try {
        const auto rec = run_planning_trial(scenario, tag, config.method_config, config.planner, config.base_seed, trial);
        row.safe_verdict = rec.safe_verdict;
        row.reached_goal = rec.reached_goal;
        row.dist_to_goal = rec.dist_to_goal;
        row.traj_len = rec.traj_len;
        row.wall_ms = config.record_timing ? rec.wall_ms : 0.0;
      } catch (const HypothesisSpaceError&) {
        // Not applicable at this hypothesis-space size.
      }
      rows.push_back(std::move(row));
    }
    return rows;
  };
  return run_trials<PlanningRow>(config.trials, config.workers, body);
}

}  // namespace detail

/// Runs one experiment in memory. `factory` defaults to the built-in methods.
inline ExperimentResult run_experiment(const ExperimentConfig& config, const MethodFactory& factory = make_method) {
  config.validate();
  ExperimentResult result;
  result.kind = config.kind;
  result.metadata = {{"config", config.to_json()}};
  switch (config.kind) {
    case ExperimentKind::kPlanningTable:
      result.planning = detail::run_planning_experiment(config);
      result.metadata["replan_mode"] = config.planner.mode == ReplanMode::kEveryStep ? "every-step" : "commit";
      break;
    case ExperimentKind::kOracleCheck:
      for (const auto& s : config.scenarios) {
        OracleOptions options;
        options.seed = config.base_seed;
        result.oracle.push_back(oracle_check(s, options));
      }
      break;
    default:
      result.metrics = detail::run_metric_experiment(config, factory, result.metadata);
      break;
  }
  return result;
}

/// Writes the result files into `dir`; returns their paths.
inline std::vector<std::filesystem::path> emit_plotdata(const ExperimentResult& result,
                                                        const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  auto open = [&](const std::string& name) {
    written.push_back(dir / name);
    std::ofstream out{written.back()};
    if (!out) {
      throw std::runtime_error("emit_plotdata: cannot write " + written.back().string());
    }
    return out;
  };
  nlohmann::json summary = result.metadata;
  summary["kind"] = to_string(result.kind);
  switch (result.kind) {
    case ExperimentKind::kPlanningTable: {
      auto out = open("planning.csv");
      write_planning_csv(out, result.planning);
      summary["methods"] = planning_summary(result.planning);
      break;
    }
    case ExperimentKind::kOracleCheck: {
      nlohmann::json reports = nlohmann::json::array();
      for (const auto& r : result.oracle) {
        reports.push_back(r.to_json());
      }
      summary["passed"] = result.oracle_passed();
      summary["reports"] = reports;
      break;
    }
    default: {
      const auto rows = summarize(result.metrics);
      {
        auto out = open("metrics.csv");
        write_metrics_csv(out, result.metrics);
      }
      {
        auto out = open("summary.csv");
        write_summary_csv(out, rows);
      }
      summary["summary"] = summary_to_json(rows);
      break;
    }
  }
  auto out = open("summary.json");
  out << summary.dump(2) << '\n';
  return written;
}

}  // namespace hybsem

#endif  // HYBSEM_HARNESS_EXPERIMENT_HPP
