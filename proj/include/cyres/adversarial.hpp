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

#ifndef CYRES_ADVERSARIAL_HPP_
#define CYRES_ADVERSARIAL_HPP_

// Attacks on tabular learners: cost/reward poisoning, policy teaching and
// transition poisoning, with checks against exact solvers.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cyres/json_io.hpp"
#include "cyres/mdp.hpp"

namespace cyres {

using Eigen::Index;

enum class PerturbationNorm { kSup, kL1 };

const char* to_string(PerturbationNorm norm);
PerturbationNorm norm_from_string(const std::string& name, const std::string& field);

struct CostPerturbation {
  Eigen::MatrixXd original;     // c(s, a)
  Eigen::MatrixXd manipulated;  // c~(s, a)
  std::vector<Index> attackable;  // S^dagger, sorted
  std::optional<double> bound;    // B
  PerturbationNorm norm = PerturbationNorm::kSup;

  // ||c~ - c|| in the chosen norm.
  double size() const;
  // Rows outside S^dagger untouched, within B when set.
  void validate() const;
};

// Same MDP with the cost signal replaced.
Mdp with_cost(const Mdp& mdp, const Eigen::MatrixXd& cost);

struct LipschitzCheck {
  double lhs = 0.0;  // ||Q~* - Q*||_inf
  double rhs = 0.0;  // ||c~ - c||_inf / (1 - beta)
  bool holds = false;
};

// Exact Q for both cost signals; holds when lhs <= rhs + 1e-8.
LipschitzCheck verify_lipschitz_bound(const Mdp& mdp, const CostPerturbation& perturbation);

// (1 - beta) inf { ||Q - Q*||_inf : pi^dagger greedy for Q (non-strict) }.
double minimal_perturbation_bound(const Mdp& mdp, const Policy& target);

struct CostCondition {
  // margin(s, a) > 0 means the condition holds at (s, a); it is c~ - RHS for
  // costs and RHS - r~ for rewards, and zero on the target actions.
  Eigen::MatrixXd margins;
  bool holds = false;
  double min_margin() const;  // over off-target pairs
};

CostCondition cost_condition_check(const Mdp& mdp, const Eigen::MatrixXd& manipulated, const Policy& target);

// Moves every off-target signal on S^dagger just past the policy-teaching
// threshold (by `margin`) when it is not already past it. Throws
// InfeasibleError naming the states where the condition still fails.
CostPerturbation synthesize_poisoned_cost(const Mdp& mdp, const Policy& target, double margin,
                                          const std::vector<Index>& attackable);

struct PoisonSample {
  Index state = 0;
  Index action = 0;
  double reward = 0.0;
  Index next_state = 0;
};

struct PoisonDataset {
  Index num_states = 0;
  Index num_actions = 0;
  std::vector<PoisonSample> samples;

  void validate() const;
  // Maximum-likelihood rewards and transitions. Throws ValidationError when a
  // pair never appears.
  Mdp estimate(const Eigen::VectorXd& rewards, double discount) const;
  Eigen::VectorXd rewards() const;
};

// Lines "s,a,r,s'" with an optional header; sizes from the largest indices
// unless given.
PoisonDataset dataset_from_csv(const std::string& text, Index num_states = 0, Index num_actions = 0);
PoisonDataset read_dataset_csv(const std::string& path, Index num_states = 0, Index num_actions = 0);

struct RewardPoisonResult {
  Eigen::VectorXd rewards;  // poisoned r_t
  double cost = 0.0;        // ||r0 - r||
  Eigen::MatrixXd q;        // Q^{pi^dagger} of the poisoned model
  double min_margin = 0.0;  // min over s, a != target of Q(s, target) - Q(s, a)
};

// min ||r0 - r|| over poisoned rewards such that pi^dagger leads every other
// action by `margin` in the maximum-likelihood model of the poisoned data.
RewardPoisonResult solve_reward_poison_lp(const PoisonDataset& dataset, const Policy& target, double margin,
                                          double discount, PerturbationNorm norm = PerturbationNorm::kL1);

// Row-stochastic matrix with exactly one closed class.
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& p);
Eigen::VectorXd stationary_distribution(const Mdp& mdp, const Policy& pi);

struct EnvPoisonSpec {
  Policy target;
  double margin = 0.1;  // epsilon
  double floor = 0.5;   // delta
  double norm_order = 1.0;  // rho; infinity allowed

  void validate(const Mdp& mdp) const;
};

// Per-step reward used by the average-reward criterion: the signal itself
// for reward MDPs, its negation for cost MDPs.
Eigen::MatrixXd reward_signal(const Mdp& mdp);

// Long-run average reward of pi.
double average_reward(const Mdp& mdp, const Policy& pi);

struct NeighborMargins {
  // margins(s, a) = g(target) - g(target{s; a}); zero on target actions.
  Eigen::MatrixXd margins;
  double min_margin = 0.0;
};

NeighborMargins neighbor_margins(const Mdp& mdp, const Policy& target);

// (sum over (s, a) of (sum over s' of |p - p~|)^rho)^(1/rho).
double transition_distance(const Mdp& a, const Mdp& b, double rho);

struct EnvPoisonResult {
  Mdp poisoned;
  double cost = 0.0;
  bool feasible = false;
  double min_margin = 0.0;
  int iterations = 0;
};

// Sequential linear programming with a trust region on the transition rows:
// each iteration linearizes the neighbor margins, solves an elastic LP and
// keeps the step when an exact merit function improves. Returns the best
// feasible point found within `budget` iterations; feasible is false when
// none was found.
EnvPoisonResult env_poison_search(const Mdp& mdp, const EnvPoisonSpec& spec, int budget);

enum class VictimKind { kExactSolver, kQLearning };

struct AttackResult {
  bool success = false;
  double attack_cost = 0.0;
  Policy victim_policy;
  Eigen::VectorXd margins;  // per state: best target lead over other actions
};

// Full exploration, visit-count rates, 2e5 steps.
LearningSchedule default_victim_schedule();

// Trains the victim on the poisoned MDP; the schedule and seed only matter
// for the Q-learning victim.
AttackResult run_poisoned_victim(const Mdp& poisoned, const Policy& target, double attack_cost,
                                 VictimKind victim, std::uint64_t seed = 0,
                                 const LearningSchedule& schedule = default_victim_schedule());

// Model-based victim: greedy policy of the maximum-likelihood model.
AttackResult run_poisoned_victim(const PoisonDataset& dataset, const Eigen::VectorXd& rewards,
                                 double discount, const Policy& target, double attack_cost);

// {original?, manipulated, attackable?, bound?, norm?}; original defaults to
// the MDP's cost.
CostPerturbation perturbation_from_json(const Json& value, const Mdp& mdp,
                                        const std::string& path = "perturbation");
EnvPoisonSpec env_poison_spec_from_json(const Json& value, const Mdp& mdp,
                                        const std::string& path = "spec");
Json to_json(const AttackResult& result);

}  // namespace cyres

#endif  // CYRES_ADVERSARIAL_HPP_
