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

#include "cyres/harness.hpp"

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <map>
#include <memory>
#include <optional>

#include "cyres/attention.hpp"
#include "cyres/honeynet.hpp"
#include "cyres/matrix_game.hpp"
#include "cyres/mdp.hpp"
#include "cyres/mtd.hpp"

namespace cyres {
namespace fs = std::filesystem;

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr std::array<std::pair<ScenarioKind, const char*>, 8> kKindNames = {{
    {ScenarioKind::kSpe, "spe"},
    {ScenarioKind::kMtd, "mtd"},
    {ScenarioKind::kHoneynet, "honeynet"},
    {ScenarioKind::kAttention, "attention"},
    {ScenarioKind::kAttackVerifyBound, "attack-verify-bound"},
    {ScenarioKind::kAttackTeach, "attack-teach"},
    {ScenarioKind::kAttackPoisonLp, "attack-poison-lp"},
    {ScenarioKind::kAttackEnvPoison, "attack-env-poison"},
}};

std::string join_path(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::uint64_t as_seed(const Json& value, const std::string& field) {
  if (value.is_number_unsigned()) return value.get<std::uint64_t>();
  if (value.is_number_integer()) {
    const auto v = value.get<std::int64_t>();
    if (v < 0) fail_field(field, "must be non-negative");
    return static_cast<std::uint64_t>(v);
  }
  fail_field(field, "expected an unsigned 64-bit integer");
  return 0;
}

std::vector<Index> all_states(Index n) {
  std::vector<Index> out(static_cast<std::size_t>(n));
  for (Index s = 0; s < n; ++s) out[static_cast<std::size_t>(s)] = s;
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  out << text;
  if (!out) throw Error(path.string() + ": write failed");
}

void write_json(const fs::path& path, const Json& value) { write_text(path, value.dump(2) + "\n"); }

// Payloads parsed into module types. Parsing is the schema check.

struct MtdPayload {
  std::vector<LayerSpec> layers;
  MtdSchedules schedules;
  std::int64_t horizon = 0;
  LayerCoupling mode = LayerCoupling::kIndependent;
};

MtdPayload parse_mtd(const Json& value, const std::string& path) {
  if (!value.is_object()) fail_field(path, "expected an object");
  Json rest = value;
  MtdPayload out;
  auto take = [&](const char* key) -> std::optional<Json> {
    auto it = rest.find(key);
    if (it == rest.end()) return std::nullopt;
    Json v = *it;
    rest.erase(it);
    return v;
  };
  if (auto s = take("schedules")) out.schedules = schedules_from_json(*s, join_path(path, "schedules"));
  const auto horizon = take("horizon");
  if (!horizon) fail_field(join_path(path, "horizon"), "required field missing");
  out.horizon = as_integer(*horizon, join_path(path, "horizon"));
  if (out.horizon < 1) fail_field(join_path(path, "horizon"), "must be positive");
  if (auto m = take("mode")) {
    if (!m->is_string()) fail_field(join_path(path, "mode"), "expected a string");
    out.mode = coupling_from_string(m->get<std::string>(), join_path(path, "mode"));
  }
  if (auto layers = take("layers")) {
    const std::string lf = join_path(path, "layers");
    if (!layers->is_array() || layers->empty()) fail_field(lf, "expected a non-empty array of layers");
    for (std::size_t l = 0; l < layers->size(); ++l) {
      out.layers.push_back(layer_from_json((*layers)[l], lf + "[" + std::to_string(l) + "]"));
    }
    if (!rest.empty()) fail_field(join_path(path, rest.begin().key()), "unknown key");
  } else {
    out.layers.push_back(layer_from_json(rest, path));
  }
  return out;
}

struct HoneynetPayload {
  Smdp smdp;
  SmdpSchedule schedule;
  Index watch_state = 0;
};

HoneynetPayload parse_honeynet(const Json& value, const std::string& path) {
  ObjectReader in(value, path);
  HoneynetPayload out;
  if (in.has("smdp") && in.has("params")) fail_field(path, "give either smdp or params, not both");
  if (const Json* s = in.find("smdp")) {
    out.smdp = smdp_from_json(*s, in.field("smdp"));
  } else if (const Json* p = in.find("params")) {
    out.smdp = build_example_honeynet(honeynet_params_from_json(*p, in.field("params")));
  } else {
    out.smdp = build_example_honeynet();
  }
  if (const Json* s = in.find("schedule")) out.schedule = smdp_schedule_from_json(*s, in.field("schedule"));
  const bool has_s12 = std::find(out.smdp.states.begin(), out.smdp.states.end(), "s12") != out.smdp.states.end();
  if (in.has("watch_state")) {
    const std::string name = in.string("watch_state");
    try {
      out.watch_state = out.smdp.state_index(name);
    } catch (const ValidationError& e) {
      fail_field(in.field("watch_state"), e.what());
    }
  } else {
    out.watch_state = has_s12 ? out.smdp.state_index("s12") : out.smdp.start_state;
  }
  in.finish();
  return out;
}

struct TeachPayload {
  Mdp mdp;
  Policy target;
  double margin = 0.0;
  std::vector<Index> attackable;
  VictimKind victim = VictimKind::kExactSolver;
  LearningSchedule schedule = default_victim_schedule();
};

TeachPayload parse_teach(const Json& value, const std::string& path) {
  ObjectReader in(value, path);
  TeachPayload out;
  out.mdp = mdp_from_json(in.at("mdp"), in.field("mdp"));
  out.target = policy_from_json(in.at("target"), in.field("target"));
  validate_policy(out.mdp, out.target);
  out.margin = in.number("margin");
  if (!(out.margin > 0.0)) fail_field(in.field("margin"), "must be positive");
  if (const Json* a = in.find("attackable")) {
    for (int s : as_indices(*a, in.field("attackable"))) {
      if (s < 0 || s >= out.mdp.num_states()) fail_field(in.field("attackable"), "state out of range");
      out.attackable.push_back(s);
    }
  } else {
    out.attackable = all_states(out.mdp.num_states());
  }
  const std::string victim = in.string_or("victim", "exact-solver");
  if (victim == "exact-solver") {
    out.victim = VictimKind::kExactSolver;
  } else if (victim == "q-learning") {
    out.victim = VictimKind::kQLearning;
  } else {
    fail_field(in.field("victim"), "expected exact-solver or q-learning");
  }
  if (const Json* s = in.find("schedule")) {
    ObjectReader sr(*s, in.field("schedule"));
    out.schedule.rate = HarmonicVisitRate{sr.number_or("k_c", 10.0)};
    out.schedule.exploration = sr.number_or("exploration", out.schedule.exploration);
    out.schedule.max_steps = sr.integer_or("steps", out.schedule.max_steps);
    sr.finish();
    try {
      out.schedule.validate();
    } catch (const ValidationError& e) {
      fail_field(in.field("schedule"), e.what());
    }
  }
  in.finish();
  return out;
}

struct PoisonLpPayload {
  PoisonDataset dataset;
  Policy target;
  double margin = 0.0;
  double discount = 0.9;
  PerturbationNorm norm = PerturbationNorm::kL1;
};

PoisonLpPayload parse_poison_lp(const Json& value, const std::string& path) {
  ObjectReader in(value, path);
  PoisonLpPayload out;
  out.dataset = dataset_from_json(in.at("dataset"), in.field("dataset"));
  out.target = policy_from_json(in.at("target"), in.field("target"));
  if (out.target.size() != out.dataset.num_states) fail_field(in.field("target"), "one action per state");
  for (Index s = 0; s < out.target.size(); ++s) {
    if (out.target[s] < 0 || out.target[s] >= out.dataset.num_actions) {
      fail_field(in.field("target"), "action out of range");
    }
  }
  out.margin = in.number("margin");
  if (!(out.margin > 0.0)) fail_field(in.field("margin"), "must be positive");
  out.discount = in.number("discount");
  if (!(out.discount > 0.0 && out.discount < 1.0)) {
    fail_field(in.field("discount"), "must lie strictly inside (0, 1)");
  }
  out.norm = norm_from_string(in.string_or("norm", "l1"), in.field("norm"));
  in.finish();
  return out;
}

struct EnvPoisonPayload {
  Mdp mdp;
  EnvPoisonSpec spec;
  int budget = 0;
};

EnvPoisonPayload parse_env_poison(const Json& value, const std::string& path) {
  ObjectReader in(value, path);
  EnvPoisonPayload out;
  out.mdp = mdp_from_json(in.at("mdp"), in.field("mdp"));
  out.spec = env_poison_spec_from_json(in.at("spec"), out.mdp, in.field("spec"));
  const std::int64_t budget = in.integer("budget");
  if (budget < 1 || budget > 1000000) fail_field(in.field("budget"), "must lie in [1, 1e6]");
  out.budget = static_cast<int>(budget);
  in.finish();
  return out;
}

struct VerifyPayload {
  Mdp mdp;
  CostPerturbation perturbation;
};

VerifyPayload parse_verify(const Json& value, const std::string& path) {
  ObjectReader in(value, path);
  VerifyPayload out;
  out.mdp = mdp_from_json(in.at("mdp"), in.field("mdp"));
  out.perturbation = perturbation_from_json(in.at("perturbation"), out.mdp, in.field("perturbation"));
  in.finish();
  return out;
}

// Single-row record series keyed by "record".
Series record_series(std::vector<std::string> names, std::vector<std::string> units, std::vector<double> values) {
  Series s;
  s.file = "record.csv";
  s.names = {"record"};
  s.units = {"index"};
  s.names.insert(s.names.end(), names.begin(), names.end());
  s.units.insert(s.units.end(), units.begin(), units.end());
  values.insert(values.begin(), 0.0);
  s.rows.push_back(std::move(values));
  return s;
}

ReplicationOutput run_spe(const Json& payload, const fs::path&) {
  const SpeSolution spe = solve_spe(game_from_json(payload, "payload"));
  ReplicationOutput out;
  out.summary = to_json(spe);
  out.series = record_series({"value", "maximin_value"}, {"cost", "cost"}, {spe.value, spe.maximin_value});
  return out;
}

ReplicationOutput run_mtd(const Json& payload, std::uint64_t seed, const fs::path& dir) {
  const MtdPayload p = parse_mtd(payload, "payload");
  const auto runs = run_mtd_multilayer(p.layers, p.schedules, p.horizon, p.mode, seed);
  ReplicationOutput out;
  {
    CsvWriter csv(dir / "trajectory.csv", {"layer", column("t", "round"), "chosen_config", "chosen_attack",
                                           column("cost", "damage"), column("exploitability", "damage")});
    for (std::size_t l = 0; l < runs.size(); ++l) {
      const auto& run = runs[l];
      const auto& layer = p.layers[l];
      std::map<std::int64_t, double> snap;
      for (const auto& s : run.snapshots) snap[s.step] = s.exploitability;
      for (std::int64_t t = 0; t < run.rounds(); ++t) {
        const auto u = static_cast<std::size_t>(t);
        csv.cell(static_cast<std::int64_t>(l)).cell(t);
        csv.cell(layer.configurations[static_cast<std::size_t>(run.configs[u])]);
        csv.cell(layer.attacks[static_cast<std::size_t>(run.attacks[u])]);
        csv.cell(run.costs[u]);
        // Exploitability is recorded after round t on snapshot rounds only.
        if (auto it = snap.find(t + 1); it != snap.end()) {
          csv.cell(it->second);
        } else {
          csv.empty();
        }
        csv.end_row();
      }
    }
  }
  out.files.emplace_back("trajectory.csv");
  Json layers = Json::array();
  out.series.file = "layers.csv";
  out.series.names = {"layer", "exploitability", "mean_cost", "spe_value"};
  out.series.units = {"index", "damage", "damage", "damage"};
  for (std::size_t l = 0; l < runs.size(); ++l) {
    const auto& run = runs[l];
    double total = 0.0;
    for (double c : run.costs) total += c;
    const double mean_cost = run.costs.empty() ? 0.0 : total / static_cast<double>(run.costs.size());
    layers.push_back({{"rounds", run.rounds()},
                      {"defender", vector_json(run.defender.strategy.probs())},
                      {"attacker", vector_json(run.attacker.strategy.probs())},
                      {"defender_risk", vector_json(run.defender.risk)},
                      {"attacker_risk", vector_json(run.attacker.risk)},
                      {"spe", to_json(run.reference)},
                      {"final_exploitability", run.final_exploitability()},
                      {"mean_cost", mean_cost}});
    out.series.rows.push_back({static_cast<double>(l), run.final_exploitability(), mean_cost, run.reference.value});
  }
  out.summary = {{"mode", to_string(p.mode)}, {"horizon", p.horizon}, {"layers", std::move(layers)}};
  return out;
}

ReplicationOutput run_honeynet(const Json& payload, std::uint64_t seed, const fs::path& dir) {
  HoneynetPayload p = parse_honeynet(payload, "payload");
  p.schedule.watch_state = p.watch_state;
  const VectorXd v = smdp_value_iteration(p.smdp, 1e-12);
  const SmdpLearning run = smdp_q_learning(p.smdp, p.schedule, seed);
  const Smdp& m = p.smdp;
  const auto name = [&](Index s) { return m.states[static_cast<std::size_t>(s)]; };
  {
    CsvWriter csv(dir / "trace.csv", {column("epoch", "epoch"), "state", "action", column("sojourn", "time"),
                                      column("reward", "reward")});
    for (std::size_t k = 0; k < run.trace.epochs.size(); ++k) {
      const auto& e = run.trace.epochs[k];
      csv.cell(static_cast<std::int64_t>(k + 1)).cell(name(e.state)).cell(m.choice(e.state, e.action).action);
      csv.cell(e.sojourn).cell(e.reward).end_row();
    }
  }
  ReplicationOutput out;
  out.files.emplace_back("trace.csv");
  const std::string w = name(p.watch_state);
  out.series.file = "convergence.csv";
  out.series.names = {"epoch"};
  out.series.units = {"epoch"};
  for (Index a = 0; a < m.num_actions(p.watch_state); ++a) {
    out.series.names.push_back("q_" + w + "_" + m.choice(p.watch_state, a).action);
    out.series.units.emplace_back("reward");
  }
  out.series.names.push_back("max_q_" + w);
  out.series.names.push_back("v_" + w);
  out.series.units.emplace_back("reward");
  out.series.units.emplace_back("reward");
  const MatrixXd& watched = run.trace.watched;
  for (Index k = 0; k < watched.rows(); ++k) {
    std::vector<double> row{static_cast<double>(k + 1)};
    for (Index a = 0; a < watched.cols(); ++a) row.push_back(watched(k, a));
    row.push_back(watched.row(k).maxCoeff());
    row.push_back(v[p.watch_state]);
    out.series.rows.push_back(std::move(row));
  }
  Json q = Json::object();
  for (Index s = 0; s < m.num_states(); ++s) {
    Json row = Json::object();
    for (Index a = 0; a < m.num_actions(s); ++a) row[m.choice(s, a).action] = run.q.values[static_cast<std::size_t>(s)][a];
    q[name(s)] = std::move(row);
  }
  out.summary = {{"watch_state", w},
                 {"epochs", p.schedule.epochs},
                 {"v_reference", v[p.watch_state]},
                 {"max_q", run.q.max_value(p.watch_state)},
                 {"greedy_action", m.choice(p.watch_state, run.q.greedy_action(p.watch_state)).action},
                 {"q", std::move(q)},
                 {"v", vector_json(v)}};
  return out;
}

ReplicationOutput run_attention(const Json& payload, std::uint64_t seed, const fs::path& dir) {
  const AttentionScenario sc = attention_scenario_from_json(payload, "payload");
  const AttentionReport report = run_attention_experiment(sc.model, sc.rewards, sc.config, seed);
  const auto aid_name = [&](Index a) { return sc.model.aids[static_cast<std::size_t>(a)]; };
  {
    CsvWriter csv(dir / "stages.csv", {column("episode", "episode"), column("stage", "stage"), "aid",
                                       column("v_k", "attention"), column("v_qu", "attention")});
    for (const auto& r : report.stages) {
      csv.cell(r.episode + 1).cell(static_cast<std::int64_t>(r.stage)).cell(aid_name(r.aid));
      csv.cell(r.attention).cell(r.quantized).end_row();
    }
  }
  Json greedy = Json::array();
  for (Index a : report.greedy_aid) greedy.push_back(aid_name(a));
  Json visits = Json::array();
  for (Index b = 0; b < report.visits.rows(); ++b) {
    Json row = Json::array();
    for (Index a = 0; a < report.visits.cols(); ++a) row.push_back(report.visits(b, a));
    visits.push_back(std::move(row));
  }
  const Json policy = {{"aids", sc.model.aids},
                       {"bins", vector_json(report.q.bins)},
                       {"q", matrix_json(report.q.values)},
                       {"visits", std::move(visits)},
                       {"greedy_aid", std::move(greedy)}};
  write_json(dir / "policy.json", policy);
  ReplicationOutput out;
  out.files = {"stages.csv", "policy.json"};
  out.summary = policy;
  out.series.file = "episodes.csv";
  out.series.names = {"episode", "mean_v_k", "mean_v_qu"};
  out.series.units = {"episode", "attention", "attention"};
  const Index k = sc.config.stages();
  for (std::size_t i = 0; i < report.stages.size(); i += static_cast<std::size_t>(k)) {
    double raw = 0.0;
    double qu = 0.0;
    for (Index j = 0; j < k; ++j) {
      raw += report.stages[i + static_cast<std::size_t>(j)].attention;
      qu += report.stages[i + static_cast<std::size_t>(j)].quantized;
    }
    out.series.rows.push_back({static_cast<double>(report.stages[i].episode + 1), raw / static_cast<double>(k),
                               qu / static_cast<double>(k)});
  }
  return out;
}

double min_finite(const VectorXd& v) {
  double m = INFINITY;
  for (Index i = 0; i < v.size(); ++i) {
    if (std::isfinite(v[i])) m = std::min(m, v[i]);
  }
  return m;
}

ReplicationOutput run_verify(const Json& payload) {
  const VerifyPayload p = parse_verify(payload, "payload");
  const LipschitzCheck c = verify_lipschitz_bound(p.mdp, p.perturbation);
  ReplicationOutput out;
  out.summary = {{"lhs", c.lhs},
                 {"rhs", c.rhs},
                 {"holds", c.holds},
                 {"perturbation_size", p.perturbation.size()},
                 {"norm", to_string(p.perturbation.norm)}};
  out.series = record_series({"lhs", "rhs", "holds"}, {"cost", "cost", "bool"}, {c.lhs, c.rhs, c.holds ? 1.0 : 0.0});
  return out;
}

ReplicationOutput run_teach(const Json& payload, std::uint64_t seed) {
  const TeachPayload p = parse_teach(payload, "payload");
  const CostPerturbation pert = synthesize_poisoned_cost(p.mdp, p.target, p.margin, p.attackable);
  const double bound = minimal_perturbation_bound(p.mdp, p.target);
  const AttackResult r =
      run_poisoned_victim(with_cost(p.mdp, pert.manipulated), p.target, pert.size(), p.victim, seed, p.schedule);
  ReplicationOutput out;
  out.summary = to_json(r);
  out.summary["manipulated"] = matrix_json(pert.manipulated);
  out.summary["minimal_perturbation_bound"] = bound;
  out.summary["condition_margin"] = cost_condition_check(p.mdp, pert.manipulated, p.target).min_margin();
  out.summary["victim"] = p.victim == VictimKind::kExactSolver ? "exact-solver" : "q-learning";
  out.series = record_series({"attack_cost", "success", "min_margin", "bound"}, {"cost", "bool", "cost", "cost"},
                             {r.attack_cost, r.success ? 1.0 : 0.0, min_finite(r.margins), bound});
  return out;
}

ReplicationOutput run_poison_lp(const Json& payload) {
  const PoisonLpPayload p = parse_poison_lp(payload, "payload");
  const RewardPoisonResult lp = solve_reward_poison_lp(p.dataset, p.target, p.margin, p.discount, p.norm);
  const AttackResult r = run_poisoned_victim(p.dataset, lp.rewards, p.discount, p.target, lp.cost);
  ReplicationOutput out;
  out.summary = to_json(r);
  out.summary["rewards"] = vector_json(lp.rewards);
  out.summary["lp_min_margin"] = lp.min_margin;
  out.summary["norm"] = to_string(p.norm);
  out.series = record_series({"attack_cost", "success", "min_margin"}, {"reward", "bool", "reward"},
                             {lp.cost, r.success ? 1.0 : 0.0, lp.min_margin});
  return out;
}

ReplicationOutput run_env_poison(const Json& payload) {
  const EnvPoisonPayload p = parse_env_poison(payload, "payload");
  const EnvPoisonResult r = env_poison_search(p.mdp, p.spec, p.budget);
  ReplicationOutput out;
  out.summary = {{"feasible", r.feasible},
                 {"attack_cost", r.cost},
                 {"min_margin", r.min_margin},
                 {"iterations", r.iterations},
                 {"norm_order", p.spec.norm_order},
                 {"poisoned", to_json(r.poisoned)}};
  out.series = record_series({"attack_cost", "feasible", "min_margin"}, {"transition", "bool", "reward"},
                             {r.cost, r.feasible ? 1.0 : 0.0, r.min_margin});
  return out;
}

template <typename F>
auto with_context(const std::string& prefix, F&& body) {
  try {
    return body();
  } catch (const ValidationError& e) {
    throw ValidationError(prefix + e.what());
  } catch (const InfeasibleError& e) {
    throw InfeasibleError(prefix + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(prefix + e.what());
  } catch (const std::exception& e) {
    throw Error(prefix + e.what());
  }
}

}  // namespace

const char* to_string(ScenarioKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

ScenarioKind scenario_kind_from_string(const std::string& name, const std::string& field) {
  for (const auto& [k, n] : kKindNames) {
    if (name == n) return k;
  }
  std::string known;
  for (const auto& entry : kKindNames) known += std::string(known.empty() ? "" : ", ") + entry.second;
  fail_field(field, "unknown kind \"" + name + "\" (expected one of " + known + ")");
  return ScenarioKind::kSpe;
}

Json Scenario::content() const {
  return {{"kind", to_string(kind)}, {"seed", seed}, {"replications", replications}, {"payload", payload}};
}

std::string Scenario::digest() const { return sha256_hex(canonical_dump(content())); }

void validate_payload(ScenarioKind kind, const Json& payload) {
  const std::string path = "payload";
  switch (kind) {
    case ScenarioKind::kSpe:
      game_from_json(payload, path);
      break;
    case ScenarioKind::kMtd:
      parse_mtd(payload, path);
      break;
    case ScenarioKind::kHoneynet:
      parse_honeynet(payload, path);
      break;
    case ScenarioKind::kAttention:
      attention_scenario_from_json(payload, path);
      break;
    case ScenarioKind::kAttackVerifyBound:
      parse_verify(payload, path);
      break;
    case ScenarioKind::kAttackTeach:
      parse_teach(payload, path);
      break;
    case ScenarioKind::kAttackPoisonLp:
      parse_poison_lp(payload, path);
      break;
    case ScenarioKind::kAttackEnvPoison:
      parse_env_poison(payload, path);
      break;
  }
}

Scenario scenario_from_json(const Json& value, const std::string& path) {
  ObjectReader in(value, path);
  Scenario sc;
  sc.kind = scenario_kind_from_string(in.string("kind"), in.field("kind"));
  if (const Json* s = in.find("seed")) sc.seed = as_seed(*s, in.field("seed"));
  sc.replications = in.integer_or("replications", 1);
  if (sc.replications < 1) fail_field(in.field("replications"), "must be at least 1");
  sc.output_dir = in.string_or("output_dir", sc.output_dir.string());
  sc.payload = in.at("payload");
  in.finish();
  try {
    validate_payload(sc.kind, sc.payload);
  } catch (const ValidationError& e) {
    throw ValidationError(path + "." + e.what());
  }
  return sc;
}

Scenario load_scenario(const fs::path& path) {
  const Json value = read_json_file(path);
  try {
    return scenario_from_json(value, "scenario");
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

Json to_json(const PoisonDataset& dataset) {
  Json samples = Json::array();
  for (const auto& x : dataset.samples) samples.push_back({x.state, x.action, x.reward, x.next_state});
  return {{"n_states", dataset.num_states}, {"n_actions", dataset.num_actions}, {"samples", std::move(samples)}};
}

PoisonDataset dataset_from_json(const Json& value, const std::string& path) {
  ObjectReader in(value, path);
  PoisonDataset d;
  const Json& samples = in.at("samples");
  const std::string sf = in.field("samples");
  if (!samples.is_array()) fail_field(sf, "expected an array of [s, a, r, s'] rows");
  Index max_state = -1;
  Index max_action = -1;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::string f = sf + "[" + std::to_string(i) + "]";
    const Json& row = samples[i];
    if (!row.is_array() || row.size() != 4) fail_field(f, "expected [s, a, r, s']");
    PoisonSample x;
    x.state = as_integer(row[0], f + "[0]");
    x.action = as_integer(row[1], f + "[1]");
    x.reward = as_number(row[2], f + "[2]");
    x.next_state = as_integer(row[3], f + "[3]");
    if (x.state < 0 || x.action < 0 || x.next_state < 0) fail_field(f, "negative index");
    max_state = std::max({max_state, x.state, x.next_state});
    max_action = std::max(max_action, x.action);
    d.samples.push_back(x);
  }
  d.num_states = in.integer_or("n_states", max_state + 1);
  d.num_actions = in.integer_or("n_actions", max_action + 1);
  in.finish();
  try {
    d.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return d;
}

std::string sha256_hex(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &length) != 1) {
    throw Error("sha256: digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xf];
  }
  return out;
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), r.ptr);
}

std::string column(std::string_view name, std::string_view unit) {
  return std::string(name) + "[" + std::string(unit) + "]";
}

CsvWriter::CsvWriter(const fs::path& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary), columns_(header.size()) {
  if (!out_) throw Error(path.string() + ": cannot open for writing");
  for (const auto& h : header) cell(std::string_view(h));
  end_row();
}

void CsvWriter::separator() {
  if (filled_ == columns_) throw Error("CsvWriter: too many cells in a row");
  if (filled_ > 0) out_ << ',';
  ++filled_;
}

CsvWriter& CsvWriter::cell(double x) {
  separator();
  out_ << format_number(x);
  return *this;
}

CsvWriter& CsvWriter::cell(std::int64_t x) {
  separator();
  out_ << x;
  return *this;
}

CsvWriter& CsvWriter::cell(std::string_view text) {
  if (text.find_first_of(",\n\r") != std::string_view::npos) {
    throw ValidationError("csv cell contains a separator: " + std::string(text));
  }
  separator();
  out_ << text;
  return *this;
}

CsvWriter& CsvWriter::empty() {
  separator();
  return *this;
}

void CsvWriter::end_row() {
  if (filled_ != columns_) throw Error("CsvWriter: row has " + std::to_string(filled_) + " cells");
  out_ << '\n';
  filled_ = 0;
  if (!out_) throw Error("CsvWriter: write failed");
}

void write_series(const fs::path& path, const Series& series) {
  std::vector<std::string> header;
  for (std::size_t c = 0; c < series.names.size(); ++c) header.push_back(column(series.names[c], series.units[c]));
  CsvWriter csv(path, header);
  for (const auto& row : series.rows) {
    for (double x : row) csv.cell(x);
    csv.end_row();
  }
}

Series aggregate_series(const std::vector<Series>& runs) {
  if (runs.empty()) throw ValidationError("aggregate: no replications");
  const Series& first = runs.front();
  for (const auto& r : runs) {
    if (r.names != first.names || r.rows.size() != first.rows.size()) {
      throw NumericalError("aggregate: replications recorded different series shapes");
    }
  }
  Series out;
  out.file = "aggregate.csv";
  out.names = {first.names.front()};
  out.units = {first.units.front()};
  for (std::size_t c = 1; c < first.names.size(); ++c) {
    out.names.push_back(first.names[c] + "_mean");
    out.units.push_back(first.units[c]);
    out.names.push_back(first.names[c] + "_popvar");
    out.units.push_back(first.units[c] == "bool" ? "bool" : first.units[c] + "^2");
  }
  const auto n = static_cast<double>(runs.size());
  for (std::size_t i = 0; i < first.rows.size(); ++i) {
    std::vector<double> row{first.rows[i].front()};
    for (const auto& r : runs) {
      if (r.rows[i].front() != row.front()) throw NumericalError("aggregate: row keys differ");
    }
    for (std::size_t c = 1; c < first.names.size(); ++c) {
      double mean = 0.0;
      for (const auto& r : runs) mean += r.rows[i][c];
      mean /= n;
      double var = 0.0;
      for (const auto& r : runs) var += (r.rows[i][c] - mean) * (r.rows[i][c] - mean);
      row.push_back(mean);
      row.push_back(var / n);
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

ReplicationOutput run_replication(const Scenario& scenario, std::uint64_t seed, const fs::path& dir) {
  fs::create_directories(dir);
  ReplicationOutput out;
  switch (scenario.kind) {
    case ScenarioKind::kSpe:
      out = run_spe(scenario.payload, dir);
      break;
    case ScenarioKind::kMtd:
      out = run_mtd(scenario.payload, seed, dir);
      break;
    case ScenarioKind::kHoneynet:
      out = run_honeynet(scenario.payload, seed, dir);
      break;
    case ScenarioKind::kAttention:
      out = run_attention(scenario.payload, seed, dir);
      break;
    case ScenarioKind::kAttackVerifyBound:
      out = run_verify(scenario.payload);
      break;
    case ScenarioKind::kAttackTeach:
      out = run_teach(scenario.payload, seed);
      break;
    case ScenarioKind::kAttackPoisonLp:
      out = run_poison_lp(scenario.payload);
      break;
    case ScenarioKind::kAttackEnvPoison:
      out = run_env_poison(scenario.payload);
      break;
  }
  write_series(dir / out.series.file, out.series);
  out.files.emplace_back(out.series.file);
  write_json(dir / "summary.json", out.summary);
  out.files.emplace_back("summary.json");
  return out;
}

Json RunManifest::to_json() const {
  return {{"tool", kToolName},
          {"tool_version", tool_version},
          {"scenario_digest", scenario_digest},
          {"base_seed", base_seed},
          {"seeds", seeds},
          {"started_at", started_at},
          {"finished_at", finished_at},
          {"files", files}};
}

void write_manifest(const fs::path& dir, const RunManifest& manifest) {
  const fs::path tmp = dir / "manifest.json.tmp";
  write_json(tmp, manifest.to_json());
  fs::rename(tmp, dir / "manifest.json");
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::array<char, 32> buf{};
  std::strftime(buf.data(), buf.size(), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf.data();
}

RunManifest run_replicated(const Scenario& scenario) {
  RunManifest manifest;
  manifest.tool_version = kToolVersion;
  manifest.scenario_digest = scenario.digest();
  manifest.base_seed = scenario.seed;
  manifest.started_at = utc_timestamp();
  const fs::path& root = scenario.output_dir;
  fs::create_directories(root);
  fs::remove(root / "manifest.json");
  std::vector<Series> series;
  for (std::int64_t i = 0; i < scenario.replications; ++i) {
    const std::uint64_t seed = scenario.seed + static_cast<std::uint64_t>(i);
    std::array<char, 32> name{};
    std::snprintf(name.data(), name.size(), "rep_%03lld", static_cast<long long>(i));
    const std::string prefix = "replication " + std::to_string(i) + ": ";
    ReplicationOutput out =
        with_context(prefix, [&] { return run_replication(scenario, seed, root / name.data()); });
    for (const auto& f : out.files) manifest.files.push_back((fs::path(name.data()) / f).generic_string());
    manifest.seeds.push_back(seed);
    series.push_back(std::move(out.series));
  }
  write_series(root / "aggregate.csv", aggregate_series(series));
  manifest.files.emplace_back("aggregate.csv");
  manifest.finished_at = utc_timestamp();
  write_manifest(root, manifest);
  return manifest;
}

RunManifest run_kc_study(const Json& honeynet_payload, const std::vector<double>& kc_values, int runs,
                         std::uint64_t seed, const fs::path& out) {
  if (kc_values.empty()) throw ValidationError("values: at least one k_c");
  if (runs < 1) throw ValidationError("runs: must be at least 1");
  const HoneynetPayload p = parse_honeynet(honeynet_payload, "payload");
  RunManifest manifest;
  manifest.tool_version = kToolVersion;
  Json values = Json::array();
  for (double k : kc_values) values.push_back(k);
  const Json content = {{"kind", "honeynet-study-kc"},
                        {"payload", honeynet_payload},
                        {"values", values},
                        {"runs", runs},
                        {"seed", seed}};
  manifest.scenario_digest = sha256_hex(canonical_dump(content));
  manifest.base_seed = seed;
  for (int r = 0; r < runs; ++r) manifest.seeds.push_back(derive_seed(seed, static_cast<std::uint64_t>(r)));
  manifest.started_at = utc_timestamp();

  const Smdp& m = p.smdp;
  const VectorXd v = smdp_value_iteration(m, 1e-12);
  const Index watch_action = smdp_q_from_values(m, v).greedy_action(p.watch_state);
  const KcStudy study = kc_sensitivity_study(m, kc_values, runs, p.schedule, p.watch_state, watch_action, seed);

  fs::create_directories(out);
  fs::remove(out / "manifest.json");
  const std::string w = m.states[static_cast<std::size_t>(p.watch_state)];
  const std::string wa = m.choice(p.watch_state, watch_action).action;
  std::vector<std::string> header{column("epoch", "epoch")};
  for (const auto& row : study.rows) {
    const std::string tag = "_kc" + format_number(row.k_c);
    header.push_back(column("max_q_" + w + "_mean" + tag, "reward"));
    header.push_back(column("max_q_" + w + "_popvar" + tag, "reward^2"));
    header.push_back(column("q_" + w + "_" + wa + "_mean" + tag, "reward"));
    header.push_back(column("q_" + w + "_" + wa + "_popvar" + tag, "reward^2"));
  }
  {
    CsvWriter csv(out / "kc_study.csv", header);
    const Index epochs = study.rows.front().mean_max_q.size();
    for (Index k = 0; k < epochs; ++k) {
      csv.cell(static_cast<std::int64_t>(k + 1));
      for (const auto& row : study.rows) {
        csv.cell(row.mean_max_q[k]).cell(row.var_max_q[k]).cell(row.mean_watched_q[k]).cell(row.var_watched_q[k]);
      }
      csv.end_row();
    }
  }
  {
    CsvWriter csv(out / "settle.csv", {column("k_c", "1"), column("run", "index"), column("settle_epoch", "epoch")});
    for (const auto& row : study.rows) {
      for (std::size_t r = 0; r < row.settle_epoch.size(); ++r) {
        csv.cell(row.k_c).cell(static_cast<std::int64_t>(r)).cell(row.settle_epoch[r]).end_row();
      }
    }
  }
  Json rows = Json::array();
  for (const auto& row : study.rows) {
    double mean = 0.0;
    for (auto e : row.settle_epoch) mean += static_cast<double>(e);
    mean /= static_cast<double>(row.settle_epoch.size());
    rows.push_back({{"k_c", row.k_c},
                    {"mean_settle_epoch", mean},
                    {"final_mean_max_q", row.mean_max_q[row.mean_max_q.size() - 1]},
                    {"final_popvar_max_q", row.var_max_q[row.var_max_q.size() - 1]}});
  }
  write_json(out / "summary.json", {{"watch_state", w},
                                    {"watch_action", wa},
                                    {"v_reference", study.reference_value},
                                    {"band", study.band},
                                    {"rows", std::move(rows)}});
  manifest.files = {"kc_study.csv", "settle.csv", "summary.json"};
  manifest.finished_at = utc_timestamp();
  write_manifest(out, manifest);
  return manifest;
}

}  // namespace cyres
