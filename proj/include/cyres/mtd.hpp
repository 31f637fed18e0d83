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

#ifndef CYRES_MTD_HPP_
#define CYRES_MTD_HPP_

// Moving-target defense on layered attack surfaces. Each layer is a zero-sum
// game between configurations (defender) and attacks (attacker); both sides
// learn their risks online and adapt their mixed strategies with an
// entropy-regularized multiplicative step.
//
// Sign convention: the attacker stores the negated observed damage as its
// risk estimate, so the shared update rule steers it towards high damage.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cyres/json_io.hpp"
#include "cyres/matrix_game.hpp"
#include "cyres/random.hpp"

namespace cyres {

using Eigen::Index;

struct LayerSpec {
  std::vector<std::string> vulnerabilities;  // n entries
  std::vector<std::string> configurations;   // m entries
  std::vector<std::string> attacks;          // n entries
  // surface[h] lists the vulnerability indices exposed by configuration h.
  std::vector<std::vector<Index>> surface;
  // exploited[k] is the vulnerability targeted by attack k (a bijection).
  std::vector<Index> exploited;
  Eigen::MatrixXd damage;  // (configuration h, attack k)
  double noise_std = 0.0;

  Index num_configurations() const { return static_cast<Index>(configurations.size()); }
  Index num_attacks() const { return static_cast<Index>(attacks.size()); }
  void validate() const;
};

// D(h, k) when attack k's vulnerability is on configuration h's surface,
// zero otherwise.
double damage(const LayerSpec& layer, Index attack, Index config);
double damage(const LayerSpec& layer, const std::string& attack, const std::string& config);

// The zero-sum game whose (h, k) entry is damage(layer, k, h).
MatrixGame layer_game(const LayerSpec& layer);

struct MtdPlayerState {
  MixedStrategy strategy;
  Eigen::VectorXd risk;  // one estimate per own action
};

// r(x) += rate * (observed - r(x)) for the chosen action only.
MtdPlayerState update_risk_estimate(MtdPlayerState state, Index chosen, double observed,
                                    double rate);

// (1 - lambda) f + lambda * f .* exp(-r / epsilon) / Z, evaluated in log space
// so that tiny epsilon gives the exact best response on the support.
MixedStrategy strategy_step(const MixedStrategy& f, const Eigen::VectorXd& risk, double epsilon,
                            double lambda);

// sum_h next_h ln(next_h / prev_h); throws when next leaves prev's support.
double reconfigure_cost(const MixedStrategy& prev, const MixedStrategy& next);

// epsilon * ln sum_h f_h exp(-r_h / epsilon).
double regularized_value(const MixedStrategy& f, const Eigen::VectorXd& risk, double epsilon);

// scale * (offset + x / tau)^(-power).
struct PowerSchedule {
  double scale = 1.0;
  double offset = 1.0;
  double tau = 1.0;
  double power = 1.0;

  double operator()(double x) const;
  static PowerSchedule constant(double value) { return {value, 1.0, 1.0, 0.0}; }
  void validate(const std::string& field, double max_value, bool allow_zero) const;
};

struct MtdSchedules {
  // Payoff rates are evaluated at the visit count of the chosen action
  // (counted from 1); tradeoff and strategy rates at the step index t >= 0.
  PowerSchedule payoff_defender{1.0, 1.0, 1.0, 0.35};
  PowerSchedule payoff_attacker{1.0, 1.0, 1.0, 0.35};
  PowerSchedule tradeoff_defender = PowerSchedule::constant(1e-8);
  PowerSchedule tradeoff_attacker = PowerSchedule::constant(1e-8);
  PowerSchedule strategy_defender{1.0, 2.0, 1.0, 1.0};
  PowerSchedule strategy_attacker{1.0, 2.0, 1.0, 1.0};
  std::int64_t record_every = 1000;

  void validate() const;
};

struct MtdSnapshot {
  std::int64_t step = 0;  // number of rounds played so far
  Eigen::VectorXd defender;
  Eigen::VectorXd attacker;
  Eigen::VectorXd defender_risk;
  Eigen::VectorXd attacker_risk;
  double exploitability = 0.0;
};

struct MtdTrajectory {
  std::vector<Index> configs;
  std::vector<Index> attacks;
  std::vector<double> costs;
  std::vector<MtdSnapshot> snapshots;  // every record_every rounds
  MtdPlayerState defender;
  MtdPlayerState attacker;
  SpeSolution reference;

  std::int64_t rounds() const { return static_cast<std::int64_t>(costs.size()); }
  double final_exploitability() const;
};

MtdTrajectory run_mtd_layer(const LayerSpec& layer, const MtdSchedules& schedules,
                            std::int64_t horizon, std::uint64_t seed);

enum class LayerCoupling { kIndependent, kSequentialPenetration };

const char* to_string(LayerCoupling mode);
LayerCoupling coupling_from_string(const std::string& name, const std::string& field);

// Independent: layer l runs alone with seed derive_seed(seed, l) for
// `horizon` rounds. Sequential: `horizon` global rounds in one random stream;
// the attacker starts each episode at layer 0 and moves one layer deeper
// after a round with positive damage, back to layer 0 otherwise (and after
// breaching the last layer). Each layer keeps its own clock.
std::vector<MtdTrajectory> run_mtd_multilayer(const std::vector<LayerSpec>& layers,
                                              const MtdSchedules& schedules,
                                              std::int64_t horizon, LayerCoupling mode,
                                              std::uint64_t seed);

LayerSpec layer_from_json(const Json& value, const std::string& path = "layer");
Json to_json(const LayerSpec& layer);
PowerSchedule power_schedule_from_json(const Json& value, const std::string& path);
MtdSchedules schedules_from_json(const Json& value, const std::string& path = "schedules");

}  // namespace cyres

#endif  // CYRES_MTD_HPP_
