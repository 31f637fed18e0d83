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

#include "cyres/honeynet.hpp"

#include <cmath>
#include <map>

#include "cyres/error.hpp"

namespace cyres {
namespace {

using Eigen::VectorXd;

constexpr double kRowTolerance = 1e-12;

std::string at_state(const Smdp& smdp, Index s, Index a) {
  return "smdp." + smdp.states[static_cast<std::size_t>(s)] + "[" +
         smdp.choice(s, a).action + "]";
}

double discount_factor(double gamma, double tau) { return std::exp(-gamma * tau); }

// r2 (1 - e^{-gamma tau}) / gamma, the discounted reward earned while
// sojourning for tau.
double accrued(double r2, double gamma, double tau) { return -r2 * std::expm1(-gamma * tau) / gamma; }

}  // namespace

bool Smdp::is_absorbing(Index s) const {
  if (num_actions(s) != 1) return false;
  const SmdpChoice& c = choice(s, 0);
  return c.transition[s] == 1.0 && c.r2 == 0.0 && c.r1[s] == 0.0;
}

Index Smdp::state_index(const std::string& name) const {
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i] == name) return static_cast<Index>(i);
  }
  throw ValidationError("unknown state \"" + name + "\"");
}

Index Smdp::action_index(Index s, const std::string& action) const {
  for (Index a = 0; a < num_actions(s); ++a) {
    if (choice(s, a).action == action) return a;
  }
  throw ValidationError("state " + states[static_cast<std::size_t>(s)] + " has no action \"" +
                        action + "\"");
}

void Smdp::validate() const {
  const Index n = num_states();
  if (n < 1) throw ValidationError("smdp.states: empty");
  if (static_cast<Index>(choices.size()) != n) throw ValidationError("smdp.choices: one list per state");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ValidationError("smdp.gamma: must be positive");
  if (!(reward_bound > 0.0)) throw ValidationError("smdp.reward_bound: must be positive");
  if (start_state < 0 || start_state >= n) throw ValidationError("smdp.start_state: out of range");
  for (Index s = 0; s < n; ++s) {
    if (num_actions(s) < 1) throw ValidationError("smdp." + states[static_cast<std::size_t>(s)] + ": no actions");
    for (Index a = 0; a < num_actions(s); ++a) {
      const SmdpChoice& c = choice(s, a);
      const std::string where = at_state(*this, s, a);
      if (c.transition.size() != n || c.rate.size() != n || c.r1.size() != n) {
        throw ValidationError(where + ": vectors must have one entry per state");
      }
      if (!c.transition.allFinite() || (c.transition.array() < 0.0).any() ||
          std::abs(c.transition.sum() - 1.0) > kRowTolerance) {
        throw ValidationError(where + ": transition row is not a probability vector");
      }
      if (!c.rate.allFinite() || (c.rate.array() <= 0.0).any()) {
        throw ValidationError(where + ": sojourn rates must be positive");
      }
      if (!c.r1.allFinite() || !std::isfinite(c.r2)) throw ValidationError(where + ": rewards must be finite");
      for (Index t = 0; t < n; ++t) {
        const double z = c.rate[t] / (c.rate[t] + gamma);
        const double r = c.r1[t] + c.r2 / gamma * (1.0 - z);
        if (std::abs(r) > reward_bound) {
          throw ValidationError(where + ": equivalent reward " + std::to_string(r) +
                                " exceeds the bound " + std::to_string(reward_bound));
        }
      }
    }
  }
}

SmdpChoice absorbing_noop(Index num_states, Index self) {
  SmdpChoice c;
  c.action = "noop";
  c.transition = VectorXd::Zero(num_states);
  c.transition[self] = 1.0;
  c.rate = VectorXd::Ones(num_states);
  c.r1 = VectorXd::Zero(num_states);
  return c;
}

double laplace_sojourn(const Smdp& smdp, Index s, Index a, Index next) {
  const double mu = smdp.choice(s, a).rate[next];
  return mu / (mu + smdp.gamma);
}

double equivalent_reward(const Smdp& smdp, Index s, Index a, Index next) {
  const SmdpChoice& c = smdp.choice(s, a);
  const double r = c.r1[next] + c.r2 / smdp.gamma * (1.0 - laplace_sojourn(smdp, s, a, next));
  if (std::abs(r) > smdp.reward_bound) {
    throw ValidationError(at_state(smdp, s, a) + ": equivalent reward exceeds the bound");
  }
  return r;
}

double contraction_modulus(const Smdp& smdp) {
  double worst = 0.0;
  for (Index s = 0; s < smdp.num_states(); ++s) {
    for (Index a = 0; a < smdp.num_actions(s); ++a) {
      double acc = 0.0;
      for (Index t = 0; t < smdp.num_states(); ++t) {
        acc += smdp.choice(s, a).transition[t] * laplace_sojourn(smdp, s, a, t);
      }
      worst = std::max(worst, acc);
    }
  }
  return worst;
}

Index SmdpQTable::greedy_action(Index s) const {
  const VectorXd& row = values[static_cast<std::size_t>(s)];
  Index best = 0;
  for (Index a = 1; a < row.size(); ++a) {
    if (row[a] > row[best]) best = a;
  }
  return best;
}

SmdpQTable smdp_q_from_values(const Smdp& smdp, const VectorXd& v) {
  SmdpQTable q;
  for (Index s = 0; s < smdp.num_states(); ++s) {
    VectorXd row(smdp.num_actions(s));
    for (Index a = 0; a < row.size(); ++a) {
      double acc = 0.0;
      const SmdpChoice& c = smdp.choice(s, a);
      for (Index t = 0; t < smdp.num_states(); ++t) {
        if (c.transition[t] == 0.0) continue;
        acc += c.transition[t] *
               (equivalent_reward(smdp, s, a, t) + laplace_sojourn(smdp, s, a, t) * v[t]);
      }
      row[a] = acc;
    }
    q.values.push_back(std::move(row));
  }
  return q;
}

VectorXd smdp_bellman(const Smdp& smdp, const VectorXd& v) {
  const SmdpQTable q = smdp_q_from_values(smdp, v);
  VectorXd out(smdp.num_states());
  for (Index s = 0; s < smdp.num_states(); ++s) out[s] = q.max_value(s);
  return out;
}

VectorXd smdp_value_iteration(const Smdp& smdp, double tol) {
  smdp.validate();
  if (!(tol > 0.0)) throw ValidationError("tol: must be positive");
  VectorXd v = VectorXd::Zero(smdp.num_states());
  for (long it = 0; it < 50'000'000; ++it) {
    VectorXd next = smdp_bellman(smdp, v);
    if ((next - v).cwiseAbs().maxCoeff() <= tol) return v;
    v = std::move(next);
  }
  throw NumericalError("smdp_value_iteration: no convergence");
}

void SmdpSchedule::validate() const {
  if (!(k_c > 0.0) || !std::isfinite(k_c)) throw ValidationError("schedule.k_c: must be positive");
  if (!(exploration >= 0.0 && exploration <= 1.0)) {
    throw ValidationError("schedule.exploration: must lie in [0, 1]");
  }
  if (epochs < 0) throw ValidationError("schedule.epochs: must be non-negative");
}

SmdpLearning smdp_q_learning(const Smdp& smdp, const SmdpSchedule& schedule, std::uint64_t seed) {
  smdp.validate();
  schedule.validate();
  const Index n = smdp.num_states();
  if (schedule.watch_state >= n) throw ValidationError("schedule.watch_state: out of range");
  Rng rng(seed);
  SmdpLearning out;
  std::vector<std::vector<std::int64_t>> visits;
  std::vector<bool> absorbing;
  for (Index s = 0; s < n; ++s) {
    out.q.values.push_back(VectorXd::Zero(smdp.num_actions(s)));
    visits.emplace_back(static_cast<std::size_t>(smdp.num_actions(s)), 0);
    absorbing.push_back(smdp.is_absorbing(s));
  }
  if (schedule.watch_state >= 0) {
    out.trace.watched.resize(schedule.epochs, smdp.num_actions(schedule.watch_state));
  }
  out.trace.epochs.reserve(static_cast<std::size_t>(schedule.epochs));

  Index s = smdp.start_state;
  double clock = 0.0;
  for (std::int64_t k = 0; k < schedule.epochs; ++k) {
    VectorXd& row = out.q.values[static_cast<std::size_t>(s)];
    Index a;
    if (rng.uniform() < schedule.exploration) {
      a = static_cast<Index>(rng.below(static_cast<std::uint64_t>(row.size())));
    } else {
      a = out.q.greedy_action(s);
    }
    const SmdpChoice& c = smdp.choice(s, a);
    const Index next = rng.categorical(c.transition);
    const double tau = rng.exponential(c.rate[next]);
    const double reward = c.r1[next] + accrued(c.r2, smdp.gamma, tau);
    const double alpha = schedule.rate_at(++visits[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)]);
    const double target = reward + discount_factor(smdp.gamma, tau) * out.q.max_value(next);
    row[a] = (1.0 - alpha) * row[a] + alpha * target;

    out.trace.epochs.push_back({s, a, tau, reward, next, clock});
    if (schedule.watch_state >= 0) {
      out.trace.watched.row(k) = out.q.values[static_cast<std::size_t>(schedule.watch_state)].transpose();
    }
    clock += tau;
    s = absorbing[static_cast<std::size_t>(next)] ? smdp.start_state : next;
  }
  return out;
}

void HoneynetParams::validate() const {
  auto positive = [](double x, const char* field) {
    if (!(x > 0.0) || !std::isfinite(x)) fail_field(std::string("params.") + field, "must be positive");
  };
  positive(gamma, "gamma");
  positive(reward_bound, "reward_bound");
  positive(eject_rate, "eject_rate");
  positive(attract_rate, "attract_rate");
  for (const auto* v : {&move_prob, &escape_prob, &quit_prob, &sojourn_rate, &investigation_rate,
                        &escape_penalty}) {
    if (v->size() != 3) fail_field("params", "per-level vectors need three entries (P, L, H)");
  }
  for (int l = 0; l < 3; ++l) {
    positive(sojourn_rate[l], "sojourn_rate");
    const double out = move_prob[l] + escape_prob[l] + quit_prob[l];
    if (move_prob[l] < 0 || escape_prob[l] < 0 || quit_prob[l] < 0 || out > 1.0 + 1e-12) {
      fail_field("params", "level " + std::to_string(l) + " probabilities must be non-negative and sum to at most 1");
    }
  }
  for (const auto& [i, j] : links) {
    if (i < 0 || j < 0 || i > 10 || j > 10 || i == j) fail_field("params.links", "honeypot indices are 0..10, no self links");
  }
  if (node_value.size() != 11) fail_field("params.node_value", "needs one entry per honeypot");
  for (double x : node_value) {
    if (!(x >= 0.0) || !std::isfinite(x)) fail_field("params.node_value", "must be non-negative");
  }
  if (entry.empty()) fail_field("params.entry", "needs at least one honeypot");
  for (Index e : entry) {
    if (e < 0 || e > 10) fail_field("params.entry", "honeypot indices are 0..10");
  }
}

Smdp build_example_honeynet(const HoneynetParams& p) {
  p.validate();
  constexpr Index n = 13;
  Smdp smdp;
  for (int i = 1; i <= 13; ++i) smdp.states.push_back("s" + std::to_string(i));
  smdp.gamma = p.gamma;
  smdp.reward_bound = p.reward_bound;
  smdp.start_state = kNormalZone;
  smdp.choices.resize(n);

  std::vector<std::vector<Index>> neighbors(11);
  for (const auto& [i, j] : p.links) {
    neighbors[static_cast<std::size_t>(i)].push_back(j);
    neighbors[static_cast<std::size_t>(j)].push_back(i);
  }
  auto eject = [&](double r2) {
    SmdpChoice c;
    c.action = "a_E";
    c.transition = VectorXd::Zero(n);
    c.transition[kExitState] = 1.0;
    c.rate = VectorXd::Constant(n, p.eject_rate);
    c.r1 = VectorXd::Constant(n, p.eject_reward);
    c.r2 = r2;
    return c;
  };
  const char* level_names[3] = {"a_P", "a_L", "a_H"};
  for (Index i = 0; i < 11; ++i) {
    auto& list = smdp.choices[static_cast<std::size_t>(i)];
    list.push_back(eject(0.0));
    const auto& nb = neighbors[static_cast<std::size_t>(i)];
    for (int l = 0; l < 3; ++l) {
      SmdpChoice c;
      c.action = level_names[l];
      c.transition = VectorXd::Zero(n);
      double moved = 0.0;
      for (Index j : nb) {
        c.transition[j] += p.move_prob[l] / static_cast<double>(nb.size());
        moved = p.move_prob[l];
      }
      c.transition[kNormalZone] += p.escape_prob[l];
      c.transition[kExitState] += p.quit_prob[l];
      c.transition[i] += 1.0 - moved - p.escape_prob[l] - p.quit_prob[l];
      c.transition /= c.transition.sum();
      c.rate = VectorXd::Constant(n, p.sojourn_rate[l]);
      c.r1 = VectorXd::Zero(n);
      c.r1[kNormalZone] = p.escape_penalty[l];
      c.r2 = p.investigation_rate[l] * p.node_value[static_cast<std::size_t>(i)];
      list.push_back(std::move(c));
    }
  }
  auto& zone = smdp.choices[kNormalZone];
  zone.push_back(eject(p.normal_zone_rate));
  SmdpChoice attract;
  attract.action = "a_A";
  attract.transition = VectorXd::Zero(n);
  for (Index e : p.entry) attract.transition[e] += 1.0 / static_cast<double>(p.entry.size());
  attract.rate = VectorXd::Constant(n, p.attract_rate);
  attract.r1 = VectorXd::Constant(n, p.attract_reward);
  attract.r2 = p.normal_zone_rate;
  zone.push_back(std::move(attract));
  smdp.choices[kExitState].push_back(absorbing_noop(n, kExitState));
  smdp.validate();
  return smdp;
}

std::int64_t settle_index(const VectorXd& series, double target, double band) {
  std::int64_t k = series.size();
  while (k > 0 && std::abs(series[k - 1] - target) <= band) --k;
  return k;
}

KcStudy kc_sensitivity_study(const Smdp& smdp, const std::vector<double>& kc_values, int runs,
                             const SmdpSchedule& base, Index watch_state, Index watch_action,
                             std::uint64_t seed) {
  if (runs < 1) throw ValidationError("runs: must be positive");
  if (kc_values.empty()) throw ValidationError("k_c values: empty");
  if (watch_state < 0 || watch_state >= smdp.num_states() || watch_action < 0 ||
      watch_action >= smdp.num_actions(watch_state)) {
    throw ValidationError("watch: state/action out of range");
  }
  const VectorXd v = smdp_value_iteration(smdp, 1e-12);
  KcStudy study;
  study.reference_value = v[watch_state];
  study.band = 0.05 * (v.maxCoeff() - v.minCoeff());
  const Index epochs = base.epochs;
  for (double k_c : kc_values) {
    SmdpSchedule schedule = base;
    schedule.k_c = k_c;
    schedule.watch_state = watch_state;
    KcStudyRow row;
    row.k_c = k_c;
    VectorXd sum_max = VectorXd::Zero(epochs), sq_max = VectorXd::Zero(epochs);
    VectorXd sum_w = VectorXd::Zero(epochs), sq_w = VectorXd::Zero(epochs);
    for (int r = 0; r < runs; ++r) {
      const SmdpLearning run = smdp_q_learning(smdp, schedule, derive_seed(seed, static_cast<std::uint64_t>(r)));
      const VectorXd max_q = run.trace.watched.rowwise().maxCoeff();
      const VectorXd watched = run.trace.watched.col(watch_action);
      sum_max += max_q;
      sq_max += max_q.cwiseAbs2();
      sum_w += watched;
      sq_w += watched.cwiseAbs2();
      row.settle_epoch.push_back(settle_index(max_q, study.reference_value, study.band));
    }
    const double inv = 1.0 / runs;
    row.mean_max_q = sum_max * inv;
    row.var_max_q = (sq_max * inv - row.mean_max_q.cwiseAbs2()).cwiseMax(0.0);
    row.mean_watched_q = sum_w * inv;
    row.var_watched_q = (sq_w * inv - row.mean_watched_q.cwiseAbs2()).cwiseMax(0.0);
    if (runs == 1) {
      row.var_max_q.setZero();
      row.var_watched_q.setZero();
    }
    study.rows.push_back(std::move(row));
  }
  return study;
}

namespace {

// A number applies to every next state; an object maps state names.
VectorXd per_state(const Json& value, const Smdp& smdp, double fallback, const std::string& field) {
  if (value.is_number()) return VectorXd::Constant(smdp.num_states(), as_number(value, field));
  if (!value.is_object()) fail_field(field, "expected a number or an object keyed by state");
  VectorXd out = VectorXd::Constant(smdp.num_states(), fallback);
  for (auto it = value.begin(); it != value.end(); ++it) {
    Index t;
    try {
      t = smdp.state_index(it.key());
    } catch (const ValidationError&) {
      fail_field(field, "unknown state \"" + it.key() + "\"");
    }
    out[t] = as_number(it.value(), field + "." + it.key());
  }
  return out;
}

}  // namespace

Smdp smdp_from_json(const Json& value, const std::string& path) {
  ObjectReader in(value, path);
  Smdp smdp;
  smdp.states = as_strings(in.at("states"), in.field("states"));
  if (smdp.states.empty()) fail_field(in.field("states"), "empty");
  smdp.gamma = in.number("gamma");
  smdp.reward_bound = in.number("reward_bound");
  const Json& choices = in.at("choices");
  const std::string cf = in.field("choices");
  if (!choices.is_object()) fail_field(cf, "expected an object keyed by state");
  smdp.choices.resize(smdp.states.size());
  for (auto it = choices.begin(); it != choices.end(); ++it) {
    Index s;
    try {
      s = smdp.state_index(it.key());
    } catch (const ValidationError&) {
      fail_field(cf, "unknown state \"" + it.key() + "\"");
    }
    const std::string sf = cf + "." + it.key();
    if (!it.value().is_array()) fail_field(sf, "expected a list of actions");
    for (std::size_t a = 0; a < it.value().size(); ++a) {
      ObjectReader ac(it.value()[a], sf + "[" + std::to_string(a) + "]");
      SmdpChoice c;
      c.action = ac.string("action");
      c.transition = per_state(ac.at("transition"), smdp, 0.0, ac.field("transition"));
      c.rate = per_state(ac.at("rate"), smdp, 1.0, ac.field("rate"));
      const Json* r1 = ac.find("r1");
      c.r1 = r1 ? per_state(*r1, smdp, 0.0, ac.field("r1")) : VectorXd::Zero(smdp.num_states());
      c.r2 = ac.number_or("r2", 0.0);
      ac.finish();
      smdp.choices[static_cast<std::size_t>(s)].push_back(std::move(c));
    }
  }
  for (Index s = 0; s < smdp.num_states(); ++s) {
    if (!choices.contains(smdp.states[static_cast<std::size_t>(s)])) {
      fail_field(cf, "missing state \"" + smdp.states[static_cast<std::size_t>(s)] + "\"");
    }
    if (smdp.choices[static_cast<std::size_t>(s)].empty()) {
      smdp.choices[static_cast<std::size_t>(s)].push_back(absorbing_noop(smdp.num_states(), s));
    }
  }
  const std::string start = in.string_or("start_state", smdp.states.front());
  try {
    smdp.start_state = smdp.state_index(start);
  } catch (const ValidationError&) {
    fail_field(in.field("start_state"), "unknown state \"" + start + "\"");
  }
  in.finish();
  smdp.validate();
  return smdp;
}

Json to_json(const Smdp& smdp) {
  Json choices = Json::object();
  for (Index s = 0; s < smdp.num_states(); ++s) {
    Json list = Json::array();
    if (!smdp.is_absorbing(s)) {
      for (Index a = 0; a < smdp.num_actions(s); ++a) {
        const SmdpChoice& c = smdp.choice(s, a);
        Json tr = Json::object(), rate = Json::object(), r1 = Json::object();
        for (Index t = 0; t < smdp.num_states(); ++t) {
          const std::string& name = smdp.states[static_cast<std::size_t>(t)];
          if (c.transition[t] != 0.0) tr[name] = c.transition[t];
          rate[name] = c.rate[t];
          if (c.r1[t] != 0.0) r1[name] = c.r1[t];
        }
        list.push_back({{"action", c.action}, {"transition", tr}, {"rate", rate}, {"r1", r1}, {"r2", c.r2}});
      }
    }
    choices[smdp.states[static_cast<std::size_t>(s)]] = std::move(list);
  }
  return {{"states", smdp.states},
          {"gamma", smdp.gamma},
          {"reward_bound", smdp.reward_bound},
          {"start_state", smdp.states[static_cast<std::size_t>(smdp.start_state)]},
          {"choices", std::move(choices)}};
}

HoneynetParams honeynet_params_from_json(const Json& value, const std::string& path) {
  ObjectReader in(value, path);
  HoneynetParams p;
  p.gamma = in.number_or("gamma", p.gamma);
  p.reward_bound = in.number_or("reward_bound", p.reward_bound);
  if (const Json* links = in.find("links")) {
    p.links.clear();
    const std::string f = in.field("links");
    if (!links->is_array()) fail_field(f, "expected a list of [i, j] pairs");
    for (std::size_t k = 0; k < links->size(); ++k) {
      const auto pair = as_indices((*links)[k], f + "[" + std::to_string(k) + "]");
      if (pair.size() != 2) fail_field(f + "[" + std::to_string(k) + "]", "expected two indices");
      p.links.emplace_back(pair[0], pair[1]);
    }
  }
  if (const Json* entry = in.find("entry")) {
    p.entry.clear();
    for (int e : as_indices(*entry, in.field("entry"))) p.entry.push_back(e);
  }
  auto levels = [&](const char* key, std::vector<double>& target) {
    if (const Json* v = in.find(key)) {
      const VectorXd x = as_vector(*v, in.field(key));
      target.assign(x.data(), x.data() + x.size());
    }
  };
  levels("node_value", p.node_value);
  levels("move_prob", p.move_prob);
  levels("escape_prob", p.escape_prob);
  levels("quit_prob", p.quit_prob);
  levels("sojourn_rate", p.sojourn_rate);
  levels("investigation_rate", p.investigation_rate);
  levels("escape_penalty", p.escape_penalty);
  p.eject_reward = in.number_or("eject_reward", p.eject_reward);
  p.eject_rate = in.number_or("eject_rate", p.eject_rate);
  p.attract_reward = in.number_or("attract_reward", p.attract_reward);
  p.attract_rate = in.number_or("attract_rate", p.attract_rate);
  p.normal_zone_rate = in.number_or("normal_zone_rate", p.normal_zone_rate);
  in.finish();
  p.validate();
  return p;
}

SmdpSchedule smdp_schedule_from_json(const Json& value, const std::string& path) {
  ObjectReader in(value, path);
  SmdpSchedule s;
  s.k_c = in.number_or("k_c", s.k_c);
  s.exploration = in.number_or("exploration", s.exploration);
  s.epochs = in.integer_or("epochs", s.epochs);
  in.finish();
  s.validate();
  return s;
}

}  // namespace cyres
