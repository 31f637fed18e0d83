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

#include "cyres/mtd.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "cyres/error.hpp"

namespace cyres {
namespace {

using Eigen::VectorXd;

void check_risk(const MixedStrategy& f, const VectorXd& risk) {
  if (risk.size() != f.size()) throw ValidationError("risk estimate and strategy sizes differ");
  if (!risk.allFinite()) throw ValidationError("risk estimate must be finite");
}

// log f_h - r_h / epsilon on the support, -inf elsewhere.
VectorXd log_weights(const MixedStrategy& f, const VectorXd& risk, double epsilon) {
  VectorXd z(f.size());
  for (Index h = 0; h < f.size(); ++h) {
    z[h] = f[h] > 0.0 ? std::log(f[h]) - risk[h] / epsilon
                      : -std::numeric_limits<double>::infinity();
  }
  return z;
}

// Both players of one layer game, learning as they play.
class LayerLearner {
 public:
  LayerLearner(const LayerSpec& layer, const MtdSchedules& schedules)
      : layer_(layer), schedules_(schedules), game_(layer_game(layer)) {
    const Index m = layer.num_configurations();
    const Index n = layer.num_attacks();
    out_.defender = {MixedStrategy::uniform(m), VectorXd::Zero(m)};
    out_.attacker = {MixedStrategy::uniform(n), VectorXd::Zero(n)};
    visits_defender_ = VectorXd::Zero(m);
    visits_attacker_ = VectorXd::Zero(n);
  }

  // Plays one round; returns the noiseless damage.
  double play(Rng& rng) {
    const auto t = static_cast<double>(out_.rounds());
    const Index h = rng.categorical(out_.defender.strategy.probs());
    const Index k = rng.categorical(out_.attacker.strategy.probs());
    const double truth = game_.cost(h, k);
    double observed = truth;
    if (layer_.noise_std > 0.0) observed += layer_.noise_std * rng.normal();

    visits_defender_[h] += 1.0;
    visits_attacker_[k] += 1.0;
    out_.defender = update_risk_estimate(std::move(out_.defender), h, observed,
                                         schedules_.payoff_defender(visits_defender_[h]));
    out_.attacker = update_risk_estimate(std::move(out_.attacker), k, -observed,
                                         schedules_.payoff_attacker(visits_attacker_[k]));
    out_.defender.strategy =
        strategy_step(out_.defender.strategy, out_.defender.risk,
                      schedules_.tradeoff_defender(t), schedules_.strategy_defender(t));
    out_.attacker.strategy =
        strategy_step(out_.attacker.strategy, out_.attacker.risk,
                      schedules_.tradeoff_attacker(t), schedules_.strategy_attacker(t));

    out_.configs.push_back(h);
    out_.attacks.push_back(k);
    out_.costs.push_back(observed);
    if (out_.rounds() % schedules_.record_every == 0) record();
    return truth;
  }

  MtdTrajectory finish() {
    if (out_.snapshots.empty() || out_.snapshots.back().step != out_.rounds()) record();
    out_.reference = solve_spe(game_);
    return std::move(out_);
  }

 private:
  void record() {
    MtdSnapshot snap;
    snap.step = out_.rounds();
    snap.defender = out_.defender.strategy.probs();
    snap.attacker = out_.attacker.strategy.probs();
    snap.defender_risk = out_.defender.risk;
    snap.attacker_risk = out_.attacker.risk;
    snap.exploitability = exploitability(game_, out_.defender.strategy, out_.attacker.strategy);
    out_.snapshots.push_back(std::move(snap));
  }

  const LayerSpec& layer_;
  const MtdSchedules& schedules_;
  MatrixGame game_;
  MtdTrajectory out_;
  VectorXd visits_defender_;
  VectorXd visits_attacker_;
};

std::map<std::string, Index> index_names(const std::vector<std::string>& names,
                                         const std::string& field) {
  std::map<std::string, Index> out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (!out.emplace(names[i], static_cast<Index>(i)).second) {
      fail_field(field, "duplicate identifier \"" + names[i] + "\"");
    }
  }
  return out;
}

Index lookup(const std::map<std::string, Index>& names, const std::string& id,
             const std::string& field) {
  auto it = names.find(id);
  if (it == names.end()) fail_field(field, "unknown identifier \"" + id + "\"");
  return it->second;
}

}  // namespace

void LayerSpec::validate() const {
  const Index m = num_configurations();
  const Index n = static_cast<Index>(vulnerabilities.size());
  if (m < 1 || n < 1) throw ValidationError("layer: needs configurations and vulnerabilities");
  if (num_attacks() != n) throw ValidationError("layer: attacks and vulnerabilities differ in count");
  if (static_cast<Index>(surface.size()) != m) throw ValidationError("layer.surface_map: one entry per configuration");
  for (const auto& s : surface) {
    for (Index v : s) {
      if (v < 0 || v >= n) throw ValidationError("layer.surface_map: unknown vulnerability");
    }
  }
  if (static_cast<Index>(exploited.size()) != n) throw ValidationError("layer.bijection: wrong size");
  std::set<Index> targets(exploited.begin(), exploited.end());
  if (static_cast<Index>(targets.size()) != n || *targets.begin() < 0 || *targets.rbegin() >= n) {
    throw ValidationError("layer.bijection: not one-to-one");
  }
  if (damage.rows() != m || damage.cols() != n) throw ValidationError("layer.damage: expected configurations x attacks");
  if (!damage.allFinite() || (damage.array() < 0.0).any()) {
    throw ValidationError("layer.damage: entries must be finite and non-negative");
  }
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) throw ValidationError("layer.noise_std: must be non-negative");
}

double damage(const LayerSpec& layer, Index attack, Index config) {
  if (attack < 0 || attack >= layer.num_attacks()) throw ValidationError("damage: unknown attack");
  if (config < 0 || config >= layer.num_configurations()) throw ValidationError("damage: unknown configuration");
  const Index v = layer.exploited[static_cast<std::size_t>(attack)];
  for (Index exposed : layer.surface[static_cast<std::size_t>(config)]) {
    if (exposed == v) return layer.damage(config, attack);
  }
  return 0.0;
}

double damage(const LayerSpec& layer, const std::string& attack, const std::string& config) {
  const Index k = lookup(index_names(layer.attacks, "attacks"), attack, "attack");
  const Index h = lookup(index_names(layer.configurations, "configurations"), config, "configuration");
  return damage(layer, k, h);
}

MatrixGame layer_game(const LayerSpec& layer) {
  layer.validate();
  MatrixGame game{Eigen::MatrixXd::Zero(layer.num_configurations(), layer.num_attacks())};
  for (Index h = 0; h < game.rows(); ++h) {
    for (Index k = 0; k < game.cols(); ++k) game.cost(h, k) = damage(layer, k, h);
  }
  return game;
}

MtdPlayerState update_risk_estimate(MtdPlayerState state, Index chosen, double observed,
                                    double rate) {
  if (!(rate > 0.0 && rate <= 1.0)) throw ValidationError("payoff rate must lie in (0, 1]");
  if (chosen < 0 || chosen >= state.risk.size()) throw ValidationError("chosen action out of range");
  state.risk[chosen] += rate * (observed - state.risk[chosen]);
  return state;
}

MixedStrategy strategy_step(const MixedStrategy& f, const VectorXd& risk, double epsilon,
                            double lambda) {
  check_risk(f, risk);
  if (!(epsilon > 0.0)) throw ValidationError("tradeoff epsilon must be positive");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ValidationError("strategy rate must lie in [0, 1]");
  if (lambda == 0.0) return f;
  const VectorXd z = log_weights(f, risk, epsilon);
  // std::exp rather than Eigen's vectorized exp, which maps -inf to a
  // denormal and would leak mass outside the support.
  const double top = z.maxCoeff();
  VectorXd w = z.unaryExpr([top](double x) { return std::exp(x - top); });
  w /= w.sum();
  VectorXd next = (1.0 - lambda) * f.probs() + lambda * w;
  next /= next.sum();
  return MixedStrategy(std::move(next));
}

double reconfigure_cost(const MixedStrategy& prev, const MixedStrategy& next) {
  if (prev.size() != next.size()) throw ValidationError("reconfigure_cost: size mismatch");
  double kl = 0.0;
  for (Index h = 0; h < prev.size(); ++h) {
    if (next[h] == 0.0) continue;
    if (prev[h] == 0.0) throw ValidationError("reconfigure_cost: next strategy leaves the support");
    kl += next[h] * std::log(next[h] / prev[h]);
  }
  return std::max(kl, 0.0);
}

double regularized_value(const MixedStrategy& f, const VectorXd& risk, double epsilon) {
  check_risk(f, risk);
  if (!(epsilon > 0.0)) throw ValidationError("tradeoff epsilon must be positive");
  if (risk.cwiseAbs().maxCoeff() <= epsilon) {
    // Near the linear regime: epsilon * log1p(sum f (e^{-r/eps} - 1)) keeps
    // the O(r) signal that a plain log-sum-exp would round away.
    double s = 0.0;
    for (Index h = 0; h < f.size(); ++h) s += f[h] * std::expm1(-risk[h] / epsilon);
    return epsilon * std::log1p(s);
  }
  const VectorXd z = log_weights(f, risk, epsilon);
  const double top = z.maxCoeff();
  return epsilon * (top + std::log(z.unaryExpr([top](double x) { return std::exp(x - top); }).sum()));
}

double PowerSchedule::operator()(double x) const {
  return power == 0.0 ? scale : scale * std::pow(offset + x / tau, -power);
}

void PowerSchedule::validate(const std::string& field, double max_value, bool allow_zero) const {
  const bool finite = std::isfinite(scale) && std::isfinite(offset) && std::isfinite(tau) &&
                      std::isfinite(power);
  if (!finite || !(offset > 0.0) || !(tau > 0.0) || !(power >= 0.0)) {
    fail_field(field, "needs offset > 0, tau > 0, power >= 0");
  }
  if (allow_zero ? !(scale >= 0.0) : !(scale > 0.0)) fail_field(field, "scale out of range");
  if ((*this)(0.0) > max_value) fail_field(field, "initial value exceeds " + std::to_string(max_value));
}

void MtdSchedules::validate() const {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  payoff_defender.validate("schedules.payoff_defender", 1.0, false);
  payoff_attacker.validate("schedules.payoff_attacker", 1.0, false);
  tradeoff_defender.validate("schedules.tradeoff_defender", kInf, false);
  tradeoff_attacker.validate("schedules.tradeoff_attacker", kInf, false);
  strategy_defender.validate("schedules.strategy_defender", 1.0, true);
  strategy_attacker.validate("schedules.strategy_attacker", 1.0, true);
  if (record_every < 1) fail_field("schedules.record_every", "must be positive");
}

double MtdTrajectory::final_exploitability() const {
  if (snapshots.empty()) throw ValidationError("trajectory has no snapshots");
  return snapshots.back().exploitability;
}

MtdTrajectory run_mtd_layer(const LayerSpec& layer, const MtdSchedules& schedules,
                            std::int64_t horizon, std::uint64_t seed) {
  layer.validate();
  schedules.validate();
  if (horizon < 0) throw ValidationError("horizon: must be non-negative");
  Rng rng(seed);
  LayerLearner learner(layer, schedules);
  for (std::int64_t t = 0; t < horizon; ++t) learner.play(rng);
  return learner.finish();
}

const char* to_string(LayerCoupling mode) {
  return mode == LayerCoupling::kIndependent ? "independent" : "sequential-penetration";
}

LayerCoupling coupling_from_string(const std::string& name, const std::string& field) {
  if (name == "independent") return LayerCoupling::kIndependent;
  if (name == "sequential-penetration") return LayerCoupling::kSequentialPenetration;
  fail_field(field, "expected \"independent\" or \"sequential-penetration\"");
}

std::vector<MtdTrajectory> run_mtd_multilayer(const std::vector<LayerSpec>& layers,
                                              const MtdSchedules& schedules,
                                              std::int64_t horizon, LayerCoupling mode,
                                              std::uint64_t seed) {
  if (layers.empty()) throw ValidationError("layers: need at least one layer");
  std::vector<MtdTrajectory> out;
  if (mode == LayerCoupling::kIndependent) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      out.push_back(run_mtd_layer(layers[l], schedules, horizon, derive_seed(seed, l)));
    }
    return out;
  }
  for (const auto& layer : layers) layer.validate();
  schedules.validate();
  if (horizon < 0) throw ValidationError("horizon: must be non-negative");
  Rng rng(seed);
  std::vector<LayerLearner> learners;
  learners.reserve(layers.size());
  for (const auto& layer : layers) learners.emplace_back(layer, schedules);
  std::size_t depth = 0;
  for (std::int64_t t = 0; t < horizon; ++t) {
    const bool breached = learners[depth].play(rng) > 0.0;
    depth = breached && depth + 1 < layers.size() ? depth + 1 : 0;
  }
  for (auto& learner : learners) out.push_back(learner.finish());
  return out;
}

LayerSpec layer_from_json(const Json& value, const std::string& path) {
  ObjectReader in(value, path);
  LayerSpec layer;
  layer.vulnerabilities = as_strings(in.at("vulnerabilities"), in.field("vulnerabilities"));
  layer.configurations = as_strings(in.at("configurations"), in.field("configurations"));
  const auto vulns = index_names(layer.vulnerabilities, in.field("vulnerabilities"));
  const auto configs = index_names(layer.configurations, in.field("configurations"));

  // Attacks are ordered like the vulnerabilities they exploit.
  const Json& bijection = in.at("bijection");
  const std::string bf = in.field("bijection");
  if (!bijection.is_object()) fail_field(bf, "expected an object vulnerability -> attack");
  if (bijection.size() != layer.vulnerabilities.size()) fail_field(bf, "must cover every vulnerability");
  for (const auto& v : layer.vulnerabilities) {
    auto it = bijection.find(v);
    if (it == bijection.end()) fail_field(bf, "missing vulnerability \"" + v + "\"");
    if (!it->is_string()) fail_field(bf + "." + v, "expected an attack identifier");
    layer.attacks.push_back(it->get<std::string>());
    layer.exploited.push_back(static_cast<Index>(layer.attacks.size()) - 1);
  }
  index_names(layer.attacks, bf);

  const Json& surface = in.at("surface_map");
  const std::string sf = in.field("surface_map");
  if (!surface.is_object()) fail_field(sf, "expected an object configuration -> vulnerabilities");
  layer.surface.resize(layer.configurations.size());
  for (auto it = surface.begin(); it != surface.end(); ++it) {
    const Index h = lookup(configs, it.key(), sf);
    for (const auto& v : as_strings(it.value(), sf + "." + it.key())) {
      layer.surface[static_cast<std::size_t>(h)].push_back(lookup(vulns, v, sf + "." + it.key()));
    }
  }
  for (const auto& c : layer.configurations) {
    if (!surface.contains(c)) fail_field(sf, "missing configuration \"" + c + "\"");
  }
  layer.damage = as_matrix(in.at("damage"), in.field("damage"));
  layer.noise_std = in.number_or("noise_std", 0.0);
  in.finish();
  try {
    layer.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return layer;
}

Json to_json(const LayerSpec& layer) {
  Json surface = Json::object();
  for (std::size_t h = 0; h < layer.configurations.size(); ++h) {
    Json list = Json::array();
    for (Index v : layer.surface[h]) list.push_back(layer.vulnerabilities[static_cast<std::size_t>(v)]);
    surface[layer.configurations[h]] = std::move(list);
  }
  Json bijection = Json::object();
  for (std::size_t k = 0; k < layer.attacks.size(); ++k) {
    bijection[layer.vulnerabilities[static_cast<std::size_t>(layer.exploited[k])]] = layer.attacks[k];
  }
  return {{"vulnerabilities", layer.vulnerabilities},
          {"configurations", layer.configurations},
          {"surface_map", std::move(surface)},
          {"bijection", std::move(bijection)},
          {"damage", matrix_json(layer.damage)},
          {"noise_std", layer.noise_std}};
}

PowerSchedule power_schedule_from_json(const Json& value, const std::string& path) {
  if (value.is_number()) return PowerSchedule::constant(as_number(value, path));
  ObjectReader in(value, path);
  PowerSchedule s;
  s.scale = in.number_or("scale", 1.0);
  s.offset = in.number_or("offset", 1.0);
  s.tau = in.number_or("tau", 1.0);
  s.power = in.number_or("power", 1.0);
  in.finish();
  return s;
}

MtdSchedules schedules_from_json(const Json& value, const std::string& path) {
  ObjectReader in(value, path);
  MtdSchedules s;
  auto read = [&](const char* key, PowerSchedule& target) {
    if (const Json* v = in.find(key)) target = power_schedule_from_json(*v, in.field(key));
  };
  read("payoff_defender", s.payoff_defender);
  read("payoff_attacker", s.payoff_attacker);
  read("tradeoff_defender", s.tradeoff_defender);
  read("tradeoff_attacker", s.tradeoff_attacker);
  read("strategy_defender", s.strategy_defender);
  read("strategy_attacker", s.strategy_attacker);
  s.record_every = in.integer_or("record_every", s.record_every);
  in.finish();
  s.validate();
  return s;
}

}  // namespace cyres
