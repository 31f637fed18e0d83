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

#ifndef CYRES_MDP_HPP_
#define CYRES_MDP_HPP_

// Finite discounted MDPs: exact solvers and a tabular Q-learning agent.

#include <cstdint>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "cyres/json_io.hpp"
#include "cyres/random.hpp"

namespace cyres {

using Eigen::Index;

enum class Objective { kMinimizeCost, kMaximizeReward };

const char* to_string(Objective objective);
Objective objective_from_string(const std::string& name, const std::string& field);

// `transition[a](s, s')` is the probability of moving from s to s' under a;
// `cost(s, a)` is the per-step signal (a reward when the objective says so).
struct Mdp {
  std::vector<Eigen::MatrixXd> transition;
  Eigen::MatrixXd cost;
  double discount = 0.9;
  Objective objective = Objective::kMinimizeCost;
  // Standard deviation of zero-mean Gaussian noise added to observed costs.
  double cost_noise_std = 0.0;

  Index num_states() const { return cost.rows(); }
  Index num_actions() const { return cost.cols(); }

  // Throws ValidationError naming the offending row or field.
  void validate() const;

  // True when every action keeps the chain in s with probability one.
  bool is_absorbing(Index s) const;
};

struct QTable {
  Eigen::MatrixXd values;  // (state, action)
  Objective objective = Objective::kMinimizeCost;
};

struct Policy {
  std::vector<Index> action;

  Index size() const { return static_cast<Index>(action.size()); }
  Index operator[](Index s) const { return action[static_cast<std::size_t>(s)]; }
  bool operator==(const Policy&) const = default;
};

// Per-step rates for tabular learning.
struct ConstantRate {
  double alpha = 0.1;
};
// alpha = k_c / (n - 1 + k_c) on the n-th visit (n counted from 1).
struct HarmonicVisitRate {
  double k_c = 1.0;
};

struct LearningSchedule {
  std::variant<ConstantRate, HarmonicVisitRate> rate = HarmonicVisitRate{};
  double exploration = 0.1;
  std::int64_t max_steps = 100000;

  void validate() const;
  // Rate for the n-th visit of a pair, n >= 1.
  double rate_at(std::int64_t visit) const;
};

// (T Q)(s, a) = c(s, a) + beta * sum_s' P(s, s', a) * opt_a' Q(s', a').
Eigen::MatrixXd bellman_operator(const Mdp& mdp, const Eigen::MatrixXd& q);

// Fixed-point iteration of the Bellman operator until ||TQ - Q||_inf <= tol.
QTable q_value_iteration(const Mdp& mdp, double tol);

// Howard policy iteration with exact evaluation. The result is the optimal
// Q-factor up to linear-solve round-off.
QTable exact_q_values(const Mdp& mdp);

// Q^pi(s, a) = c(s, a) + beta * P_sa . V^pi.
Eigen::MatrixXd policy_q_values(const Mdp& mdp, const Policy& pi);

// Argmin (costs) or argmax (rewards) per state, lowest index on ties.
Policy greedy_policy(const QTable& q);

// opt_a Q(s, a) per state.
Eigen::VectorXd state_values(const QTable& q);

// Solves (I - beta P_pi) V = c_pi directly.
Eigen::VectorXd policy_cost_to_go(const Mdp& mdp, const Policy& pi);

// Row-stochastic matrix P_pi(s, s') = P(s, s', pi(s)).
Eigen::MatrixXd policy_transition(const Mdp& mdp, const Policy& pi);

struct StepOutcome {
  Index next_state = 0;
  double cost = 0.0;
};

StepOutcome simulate_step(const Mdp& mdp, Index s, Index a, Rng& rng);

// Tabular Q-learning from a zero table. Each step picks an epsilon-greedy
// action, samples the environment and updates only the visited pair.
// Trajectories restart from a uniformly drawn state after acting in an
// absorbing state.
QTable q_learning_run(const Mdp& mdp, const LearningSchedule& schedule, std::uint64_t seed);

void validate_policy(const Mdp& mdp, const Policy& pi);

// JSON: {n_states, n_actions, discount, objective, cost, transition[s][a][s']}
// plus optional cost_noise_std.
Mdp mdp_from_json(const Json& value, const std::string& path = "mdp");
Json to_json(const Mdp& mdp);
Policy policy_from_json(const Json& value, const std::string& path = "policy");
Json to_json(const Policy& pi);

}  // namespace cyres

#endif  // CYRES_MDP_HPP_
