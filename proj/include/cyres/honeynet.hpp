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

#ifndef CYRES_HONEYNET_HPP_
#define CYRES_HONEYNET_HPP_

// Attacker engagement in a honeynet as a semi-Markov decision process with
// exponential sojourn times, solved exactly through the discounted
// equivalent MDP and learned with SMDP Q-learning.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cyres/json_io.hpp"
#include "cyres/random.hpp"

namespace cyres {

using Eigen::Index;

// One available action at one state. Vectors are indexed by the next state.
struct SmdpChoice {
  std::string action;
  Eigen::VectorXd transition;  // tr(s' | s, a)
  Eigen::VectorXd rate;        // exponential sojourn rate for (s, a, s'), 1/time
  Eigen::VectorXd r1;          // lump reward at the decision epoch
  double r2 = 0.0;             // reward rate while sojourning, reward/time
};

struct Smdp {
  std::vector<std::string> states;
  std::vector<std::vector<SmdpChoice>> choices;  // choices[s]
  double gamma = 0.1;                            // discount rate, 1/time
  double reward_bound = 1e6;                     // m_c
  Index start_state = 0;                         // re-entry after absorption

  Index num_states() const { return static_cast<Index>(states.size()); }
  Index num_actions(Index s) const { return static_cast<Index>(choices[static_cast<std::size_t>(s)].size()); }
  const SmdpChoice& choice(Index s, Index a) const {
    return choices[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
  }
  // A state with a single no-op that loops on itself.
  bool is_absorbing(Index s) const;
  Index state_index(const std::string& name) const;
  Index action_index(Index s, const std::string& action) const;

  // Checks stochastic rows, positive rates, and |r^gamma| <= m_c.
  void validate() const;
};

// Adds an absorbing state with one zero-reward no-op self-loop.
SmdpChoice absorbing_noop(Index num_states, Index self);

// Laplace transform of the sojourn density at gamma: mu / (mu + gamma).
double laplace_sojourn(const Smdp& smdp, Index s, Index a, Index next);

// r1 + r2 / gamma * (1 - z). Throws ValidationError beyond the reward bound.
double equivalent_reward(const Smdp& smdp, Index s, Index a, Index next);

// max over (s, a) of sum_s' tr * z; the equivalent operator's modulus.
double contraction_modulus(const Smdp& smdp);

// Ragged table, one vector of action values per state.
struct SmdpQTable {
  std::vector<Eigen::VectorXd> values;

  double max_value(Index s) const { return values[static_cast<std::size_t>(s)].maxCoeff(); }
  Index greedy_action(Index s) const;  // lowest index on ties
};

// Equivalent-MDP backup of v for every (s, a).
SmdpQTable smdp_q_from_values(const Smdp& smdp, const Eigen::VectorXd& v);
Eigen::VectorXd smdp_bellman(const Smdp& smdp, const Eigen::VectorXd& v);

// Iterates the equivalent-MDP operator until ||Tv - v||_inf <= tol.
Eigen::VectorXd smdp_value_iteration(const Smdp& smdp, double tol);

struct SmdpSchedule {
  double k_c = 10.0;
  double exploration = 0.3;
  std::int64_t epochs = 5000;
  // Row of the table copied after every epoch (-1: none).
  Index watch_state = -1;

  void validate() const;
  // k_c / (n - 1 + k_c) on the n-th visit, n >= 1.
  double rate_at(std::int64_t visit) const { return k_c / (static_cast<double>(visit) - 1.0 + k_c); }
};

struct EngagementEpoch {
  Index state = 0;
  Index action = 0;
  double sojourn = 0.0;
  double reward = 0.0;  // r1 + r2 (1 - e^{-gamma tau}) / gamma
  Index next_state = 0;
  double time = 0.0;    // wall clock at the start of the epoch
};

struct EngagementTrace {
  std::vector<EngagementEpoch> epochs;
  // watched(k, a): Q(watch_state, a) after epoch k.
  Eigen::MatrixXd watched;
};

struct SmdpLearning {
  SmdpQTable q;
  EngagementTrace trace;
};

// Epsilon-greedy SMDP Q-learning from a zero table, starting at the start
// state and re-entering it whenever the attacker reaches an absorbing state.
SmdpLearning smdp_q_learning(const Smdp& smdp, const SmdpSchedule& schedule, std::uint64_t seed);

// Parameters of the 13-state honeynet: eleven honeypots, the normal zone and
// an absorbing exit. Interaction actions P, L, H are indexed 0, 1, 2.
struct HoneynetParams {
  double gamma = 0.5;
  double reward_bound = 100.0;
  // Undirected links among the honeypots (0-based) and the honeypots the
  // normal zone connects to.
  std::vector<std::pair<Index, Index>> links = {{0, 1}, {0, 2}, {1, 3}, {1, 4}, {2, 5},
                                                {2, 6}, {3, 7}, {4, 7}, {5, 8}, {6, 9},
                                                {7, 10}, {8, 10}, {9, 10}};
  std::vector<Index> entry = {0, 1, 2};
  // Scales the investigation rate per honeypot (deeper nodes emulate more
  // valuable assets).
  std::vector<double> node_value = {1.0, 1.0, 1.0, 1.2, 1.2, 1.2, 1.2, 1.5, 1.5, 1.5, 2.0};
  // Per interaction level P, L, H.
  std::vector<double> move_prob = {0.55, 0.6, 0.65};     // to a linked honeypot
  std::vector<double> escape_prob = {0.05, 0.1, 0.2};    // back to the normal zone
  std::vector<double> quit_prob = {0.25, 0.15, 0.05};    // attacker leaves
  std::vector<double> sojourn_rate = {1.5, 1.0, 0.6};    // 1/time
  std::vector<double> investigation_rate = {0.5, 1.2, 2.0};  // reward/time
  std::vector<double> escape_penalty = {-1.0, -3.0, -6.0};   // r1 on return to the normal zone
  double eject_reward = 0.0;
  double eject_rate = 4.0;
  double attract_reward = -0.2;  // r1 of luring an attacker into the honeynet
  double attract_rate = 2.0;
  double normal_zone_rate = -0.5;  // reward/time while the attacker is in production

  void validate() const;
};

// States s1..s11 are the honeypots (indices 0..10), s12 the normal zone
// (index 11, actions a_E and a_A), s13 the absorbing exit (index 12).
// Honeypot actions: a_E, a_P, a_L, a_H.
Smdp build_example_honeynet(const HoneynetParams& params = {});

inline constexpr Index kNormalZone = 11;
inline constexpr Index kExitState = 12;

struct KcStudyRow {
  double k_c = 0.0;
  // Per epoch, across runs: mean and population variance.
  Eigen::VectorXd mean_max_q;
  Eigen::VectorXd var_max_q;
  Eigen::VectorXd mean_watched_q;  // Q(watch_state, watch_action)
  Eigen::VectorXd var_watched_q;
  // First epoch after which |max_a Q(watch, a) - v(watch)| stays within the
  // band, one per run (epochs when it never settles).
  std::vector<std::int64_t> settle_epoch;
};

struct KcStudy {
  double reference_value = 0.0;  // v(watch_state)
  double band = 0.0;             // 5% of the range of v
  std::vector<KcStudyRow> rows;
};

// For each k_c, `runs` replications with seeds derive_seed(seed, r).
KcStudy kc_sensitivity_study(const Smdp& smdp, const std::vector<double>& kc_values, int runs,
                             const SmdpSchedule& base, Index watch_state, Index watch_action,
                             std::uint64_t seed);

// First index after which |series - target| <= band holds to the end;
// series.size() when the last entry is outside.
std::int64_t settle_index(const Eigen::VectorXd& series, double target, double band);

Smdp smdp_from_json(const Json& value, const std::string& path = "smdp");
Json to_json(const Smdp& smdp);
HoneynetParams honeynet_params_from_json(const Json& value, const std::string& path = "params");
SmdpSchedule smdp_schedule_from_json(const Json& value, const std::string& path = "schedule");

}  // namespace cyres

#endif  // CYRES_HONEYNET_HPP_
