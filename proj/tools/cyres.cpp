// Copyright 2026 The Cyres Authors. All rights reserved.
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

// Command-line front end. Every experiment command builds a scenario from its
// inputs and hands it to the replication runner, so a command and the
// equivalent scenario file produce the same outputs.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cyres/adversarial.hpp"
#include "cyres/error.hpp"
#include "cyres/harness.hpp"

namespace fs = std::filesystem;
using cyres::Json;
using cyres::Scenario;
using cyres::ScenarioKind;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

struct GlobalFlags {
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> reps;
  std::optional<std::string> out;
  bool quiet = false;
};

// A file holding either a full scenario ({kind, payload, ...}) or just the
// payload for `kind`.
Scenario scenario_from_file(const std::string& path, ScenarioKind kind) {
  const Json value = cyres::read_json_file(path);
  if (value.is_object() && value.contains("kind")) {
    Scenario sc = cyres::load_scenario(path);
    if (sc.kind != kind) {
      throw cyres::ValidationError(path + ": scenario kind is " + cyres::to_string(sc.kind) + ", expected " +
                                   cyres::to_string(kind));
    }
    return sc;
  }
  Scenario sc;
  sc.kind = kind;
  sc.payload = value;
  try {
    cyres::validate_payload(kind, sc.payload);
  } catch (const cyres::ValidationError& e) {
    throw cyres::ValidationError(path + ": " + e.what());
  }
  return sc;
}

Scenario scenario_from_payload(ScenarioKind kind, Json payload) {
  Scenario sc;
  sc.kind = kind;
  sc.payload = std::move(payload);
  cyres::validate_payload(kind, sc.payload);
  return sc;
}

// Runs the scenario with the global flags applied and reports to stdout.
int execute(Scenario sc, const GlobalFlags& flags, bool print_record) {
  if (flags.seed) sc.seed = *flags.seed;
  if (flags.reps) {
    if (*flags.reps < 1) throw cyres::ValidationError("--reps: must be at least 1");
    sc.replications = *flags.reps;
  }
  if (flags.out) sc.output_dir = *flags.out;
  const cyres::RunManifest manifest = cyres::run_replicated(sc);
  const Json first = cyres::read_json_file(sc.output_dir / "rep_000" / "summary.json");
  if (!flags.quiet) {
    if (print_record && sc.replications == 1) {
      std::cout << first.dump(2) << "\n";
    } else {
      std::cout << cyres::to_string(sc.kind) << ": " << manifest.seeds.size() << " replication(s), "
                << manifest.files.size() << " files in " << sc.output_dir.string() << "\n";
    }
  }
  if (sc.kind == ScenarioKind::kAttackEnvPoison && !first.at("feasible").get<bool>()) {
    std::cerr << "env-poison: no feasible point within the budget\n";
    return kExitRuntime;
  }
  return 0;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(',', start), text.size());
    const std::string item = text.substr(start, end - start);
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw cyres::ValidationError("--values: not a number: \"" + item + "\"");
    }
    start = end + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reinforcement-learning workbench for cyber-resilient mechanisms", "cyres"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(cyres::kToolName) + " " + cyres::kToolVersion);

  GlobalFlags flags;
  std::uint64_t seed = 0;
  std::int64_t reps = 1;
  std::string out;
  app.add_option("--seed", seed, "Base seed (replication i uses seed + i)");
  app.add_option("--reps", reps, "Number of replications");
  app.add_option("--out", out, "Output directory");
  app.add_flag("--quiet", flags.quiet, "Print nothing on success");

  std::function<int()> action;

  auto* spe = app.add_subcommand("spe", "Zero-sum matrix games")->require_subcommand(1);
  std::string game_file;
  auto* spe_solve = spe->add_subcommand("solve", "Saddle-point equilibrium of a game {cost: [[...]]}");
  spe_solve->add_option("--game", game_file, "Game JSON")->required()->check(CLI::ExistingFile);
  spe_solve->callback([&] {
    action = [&] {
      return execute(scenario_from_payload(ScenarioKind::kSpe, cyres::read_json_file(game_file)), flags, true);
    };
  });

  std::string scenario_file;
  auto* mtd = app.add_subcommand("mtd", "Moving-target defense")->require_subcommand(1);
  auto* mtd_run = mtd->add_subcommand("run", "Learning dynamics on one or more layers");
  mtd_run->add_option("--scenario", scenario_file, "Layer scenario JSON")->required()->check(CLI::ExistingFile);
  mtd_run->callback([&] {
    action = [&] { return execute(scenario_from_file(scenario_file, ScenarioKind::kMtd), flags, false); };
  });

  auto* honeynet = app.add_subcommand("honeynet", "Honeynet engagement SMDP")->require_subcommand(1);
  auto* honeynet_run = honeynet->add_subcommand("run", "SMDP Q-learning against the exact solution");
  honeynet_run->add_option("--scenario", scenario_file, "Honeynet scenario JSON (default instance if omitted)")
      ->check(CLI::ExistingFile);
  honeynet_run->callback([&] {
    action = [&] {
      Scenario sc = scenario_file.empty() ? scenario_from_payload(ScenarioKind::kHoneynet, Json::object())
                                          : scenario_from_file(scenario_file, ScenarioKind::kHoneynet);
      return execute(std::move(sc), flags, false);
    };
  });
  auto* study = honeynet->add_subcommand("study-kc", "Learning-rate constant sensitivity");
  std::string kc_values = "0.01,1,10,100";
  int kc_runs = 100;
  study->add_option("--scenario", scenario_file, "Honeynet scenario JSON (default instance if omitted)")
      ->check(CLI::ExistingFile);
  study->add_option("--values", kc_values, "Comma-separated k_c values")->capture_default_str();
  study->add_option("--runs", kc_runs, "Runs per k_c")->capture_default_str();
  study->callback([&] {
    action = [&] {
      Json payload = Json::object();
      std::uint64_t base = 0;
      if (!scenario_file.empty()) {
        const Scenario sc = scenario_from_file(scenario_file, ScenarioKind::kHoneynet);
        payload = sc.payload;
        base = sc.seed;
      }
      if (flags.seed) base = *flags.seed;
      const fs::path dir = flags.out.value_or("results");
      const auto manifest = cyres::run_kc_study(payload, parse_values(kc_values), kc_runs, base, dir);
      if (!flags.quiet) {
        std::cout << "honeynet study-kc: " << manifest.files.size() << " files in " << dir.string() << "\n";
      }
      return 0;
    };
  });

  auto* attention = app.add_subcommand("attention", "Attention-guidance Q-learning")->require_subcommand(1);
  auto* attention_run = attention->add_subcommand("run", "Learn an aid policy on a gaze model");
  attention_run->add_option("--scenario", scenario_file, "Attention scenario JSON")
      ->required()
      ->check(CLI::ExistingFile);
  attention_run->callback([&] {
    action = [&] { return execute(scenario_from_file(scenario_file, ScenarioKind::kAttention), flags, false); };
  });

  auto* attack = app.add_subcommand("attack", "Attacks on reinforcement learners")->require_subcommand(1);
  std::string mdp_file;
  std::string perturb_file;
  std::string target_file;
  std::string spec_file;
  std::string dataset_file;
  std::string norm = "l1";
  std::string victim = "exact-solver";
  double margin = 0.1;
  double discount = 0.9;
  int budget = 2000;

  auto* verify = attack->add_subcommand("verify-bound", "Check the Lipschitz bound for a cost perturbation");
  verify->add_option("--mdp", mdp_file, "MDP JSON")->required()->check(CLI::ExistingFile);
  verify->add_option("--perturb", perturb_file, "Perturbation JSON")->required()->check(CLI::ExistingFile);
  verify->callback([&] {
    action = [&] {
      const Json payload = {{"mdp", cyres::read_json_file(mdp_file)},
                            {"perturbation", cyres::read_json_file(perturb_file)}};
      return execute(scenario_from_payload(ScenarioKind::kAttackVerifyBound, payload), flags, true);
    };
  });

  auto* teach = attack->add_subcommand("teach", "Poison the cost signal to teach a target policy");
  teach->add_option("--mdp", mdp_file, "MDP JSON")->required()->check(CLI::ExistingFile);
  teach->add_option("--target", target_file, "Target policy JSON (array of actions)")
      ->required()
      ->check(CLI::ExistingFile);
  teach->add_option("--margin", margin, "Teaching margin")->required();
  teach->add_option("--victim", victim, "exact-solver or q-learning")->capture_default_str();
  teach->callback([&] {
    action = [&] {
      const Json payload = {{"mdp", cyres::read_json_file(mdp_file)},
                            {"target", cyres::read_json_file(target_file)},
                            {"margin", margin},
                            {"victim", victim}};
      return execute(scenario_from_payload(ScenarioKind::kAttackTeach, payload), flags, true);
    };
  });

  auto* poison = attack->add_subcommand("poison-lp", "Minimal reward poisoning of a batch dataset");
  poison->add_option("--dataset", dataset_file, "CSV with columns s,a,r,s'")->required()->check(CLI::ExistingFile);
  poison->add_option("--target", target_file, "Target policy JSON (array of actions)")
      ->required()
      ->check(CLI::ExistingFile);
  poison->add_option("--norm", norm, "l1 or sup")->capture_default_str();
  poison->add_option("--margin", margin, "Required lead of the target action")->capture_default_str();
  poison->add_option("--discount", discount, "Victim discount")->capture_default_str();
  poison->callback([&] {
    action = [&] {
      const Json payload = {{"dataset", cyres::to_json(cyres::read_dataset_csv(dataset_file))},
                            {"target", cyres::read_json_file(target_file)},
                            {"margin", margin},
                            {"discount", discount},
                            {"norm", norm}};
      return execute(scenario_from_payload(ScenarioKind::kAttackPoisonLp, payload), flags, true);
    };
  });

  auto* env = attack->add_subcommand("env-poison", "Poison transition dynamics towards a target policy");
  env->add_option("--mdp", mdp_file, "MDP JSON")->required()->check(CLI::ExistingFile);
  env->add_option("--spec", spec_file, "Spec JSON {target, margin, floor?, norm_order?}")
      ->required()
      ->check(CLI::ExistingFile);
  env->add_option("--budget", budget, "Search iterations")->capture_default_str();
  env->callback([&] {
    action = [&] {
      const Json payload = {{"mdp", cyres::read_json_file(mdp_file)},
                            {"spec", cyres::read_json_file(spec_file)},
                            {"budget", budget}};
      return execute(scenario_from_payload(ScenarioKind::kAttackEnvPoison, payload), flags, true);
    };
  });

  auto* validate = app.add_subcommand("validate", "Check a scenario file without running it");
  validate->add_option("scenario", scenario_file, "Scenario JSON")->required()->check(CLI::ExistingFile);
  validate->callback([&] {
    action = [&] {
      const Scenario sc = cyres::load_scenario(scenario_file);
      if (!flags.quiet) std::cout << "ok " << cyres::to_string(sc.kind) << " " << sc.digest() << "\n";
      return 0;
    };
  });

  auto* run = app.add_subcommand("run", "Run a scenario file of any kind");
  run->add_option("scenario", scenario_file, "Scenario JSON")->required()->check(CLI::ExistingFile);
  run->callback([&] {
    action = [&] {
      Scenario sc = cyres::load_scenario(scenario_file);
      const bool record = sc.kind != ScenarioKind::kMtd && sc.kind != ScenarioKind::kHoneynet &&
                          sc.kind != ScenarioKind::kAttention;
      if (!flags.out) flags.out = sc.output_dir.string();
      return execute(std::move(sc), flags, record);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }
  if (app.count("--seed") > 0) flags.seed = seed;
  if (app.count("--reps") > 0) flags.reps = reps;
  if (app.count("--out") > 0) flags.out = out;

  try {
    return action();
  } catch (const cyres::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
