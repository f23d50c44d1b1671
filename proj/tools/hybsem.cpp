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

// Command-line front end: simulate | benchmark | plan | oracle-check.
// Exit codes: 0 ok, 1 runtime error, 2 config error, 3 oracle failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hybsem/harness/experiment.hpp"
#include "hybsem/harness/oracle_check.hpp"
#include "hybsem/random.hpp"
#include "hybsem/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitOracle = 3;

struct CommonOptions {
  std::vector<std::string> configs;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> methods;
  std::optional<int> trials;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool many_configs) {
  if (many_configs) {
    cmd->add_option("--config", o.configs, "Experiment config or scenario JSON (repeatable)")->required();
  } else {
    cmd->add_option("--config", o.configs, "Config JSON")->required()->expected(1);
  }
  cmd->add_option("--seed", o.seed, "Base seed override");
  cmd->add_option("--out", o.out, "Output directory override");
  cmd->add_option("--methods", o.methods, "Comma-separated method tags");
  cmd->add_option("--trials", o.trials, "Trial count override");
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in{path};
  if (!in) {
    throw hybsem::ConfigError("cannot open '" + path + "'");
  }
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw hybsem::ConfigError(path + ": " + e.what());
  }
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in{s};
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) {
      out.push_back(item);
    }
  }
  return out;
}

hybsem::ExperimentConfig load_experiment(const CommonOptions& o) {
  const std::string& path = o.configs.front();
  auto j = read_json(path);
  if (o.seed) {
    j["base_seed"] = *o.seed;
  }
  if (o.out) {
    j["output"] = *o.out;
  }
  if (o.methods) {
    j["methods"] = split_csv(*o.methods);
  }
  if (o.trials) {
    j["trials"] = *o.trials;
  }
  return hybsem::ExperimentConfig::from_json(j, std::filesystem::path{path}.parent_path());
}

void print_files(const std::vector<std::filesystem::path>& files) {
  for (const auto& f : files) {
    std::cout << "wrote " << f.string() << '\n';
  }
}

int run_simulate(const CommonOptions& o) {
  const hybsem::Scenario scenario = hybsem::load_scenario(o.configs.front());
  const std::uint64_t seed = o.seed.value_or(scenario.seed);
  hybsem::Rng world_rng = hybsem::make_rng(seed, 0, hybsem::Stream::kWorld);
  hybsem::Rng noise_rng = hybsem::make_rng(seed, 0, hybsem::Stream::kNoise);
  hybsem::WorldTruth world = hybsem::world_for(scenario, world_rng);
  const hybsem::History history = hybsem::simulate_history(world, scenario, scenario.actions, noise_rng);
  nlohmann::json doc{{"scenario", scenario.name}, {"seed", seed}, {"history", hybsem::history_to_json(history)}};
  doc["truth"]["classes"] = world.classes.classes;
  for (const auto& x : world.objects) {
    doc["truth"]["objects"].push_back({x.x(), x.y()});
  }
  for (const auto& x : world.trajectory) {
    doc["truth"]["trajectory"].push_back({x.x(), x.y()});
  }
  const std::filesystem::path dir{o.out.value_or("results")};
  std::filesystem::create_directories(dir);
  const auto file = dir / "history.json";
  std::ofstream{file} << doc.dump(2) << '\n';
  print_files({file});
  return kExitOk;
}

int run_benchmark(const CommonOptions& o, bool planning) {
  const auto config = load_experiment(o);
  const bool is_planning = config.kind == hybsem::ExperimentKind::kPlanningTable;
  if (planning != is_planning || config.kind == hybsem::ExperimentKind::kOracleCheck) {
    throw hybsem::ConfigError(std::string{planning ? "plan" : "benchmark"} + ": config kind '" +
                              hybsem::to_string(config.kind) + "' does not belong to this verb");
  }
  const auto result = hybsem::run_experiment(config);
  print_files(hybsem::emit_plotdata(result, config.output));
  return kExitOk;
}

int run_oracle(const CommonOptions& o, bool corrupt_phi) {
  std::vector<hybsem::OracleReport> reports;
  for (const auto& path : o.configs) {
    const auto j = read_json(path);
    std::vector<hybsem::Scenario> scenarios;
    std::uint64_t seed = o.seed.value_or(7);
    if (j.contains("kind")) {
      CommonOptions single = o;
      single.configs = {path};
      const auto config = load_experiment(single);
      scenarios = config.scenarios;
      seed = o.seed.value_or(config.base_seed);
    } else {
      scenarios.push_back(hybsem::scenario_from_json(j));
    }
    for (const auto& s : scenarios) {
      hybsem::OracleOptions options;
      options.seed = seed;
      options.corrupt_phi = corrupt_phi;
      reports.push_back(hybsem::oracle_check(s, options));
    }
  }
  bool passed = true;
  for (const auto& r : reports) {
    for (const auto& c : r.checks) {
      std::cout << (c.passed ? "PASS " : "FAIL ") << r.scenario << ' ' << c.name << " worst=" << c.worst
                << " tol=" << c.tolerance << '\n';
    }
    passed = passed && r.passed();
  }
  if (o.out) {
    hybsem::ExperimentResult result;
    result.kind = hybsem::ExperimentKind::kOracleCheck;
    result.oracle = reports;
    print_files(hybsem::emit_plotdata(result, *o.out));
  }
  std::cout << (passed ? "oracle-check: all checks passed" : "oracle-check: FAILED") << '\n';
  return passed ? kExitOk : kExitOracle;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid semantic-geometric belief estimation and planning benchmark"};
  app.require_subcommand(1);

  CommonOptions sim_opts;
  CommonOptions bench_opts;
  CommonOptions plan_opts;
  CommonOptions oracle_opts;
  bool corrupt_phi = false;
  auto* sim = app.add_subcommand("simulate", "Sample a world and its observation history from a scenario");
  add_common(sim, sim_opts, false);
  auto* bench = app.add_subcommand("benchmark", "Run an RMSE experiment and write plot data");
  add_common(bench, bench_opts, false);
  auto* plan = app.add_subcommand("plan", "Run planning trials and write the planning table");
  add_common(plan, plan_opts, false);
  auto* oracle = app.add_subcommand("oracle-check", "Check every enumeration identity on small scenarios");
  add_common(oracle, oracle_opts, true);
  oracle->add_flag("--corrupt-phi", corrupt_phi, "Inject a fault into the factored product");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*sim) {
      return run_simulate(sim_opts);
    }
    if (*bench) {
      return run_benchmark(bench_opts, false);
    }
    if (*plan) {
      return run_benchmark(plan_opts, true);
    }
    return run_oracle(oracle_opts, corrupt_phi);
  } catch (const hybsem::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const hybsem::ScenarioError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
