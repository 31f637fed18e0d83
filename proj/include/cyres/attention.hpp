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

#ifndef CYRES_ATTENTION_HPP_
#define CYRES_ATTENTION_HPP_

// Attention guidance: a continuous-time gaze model over visual states, reward
// accounting per generation stage, and Q-learning over quantized attention
// levels to choose a visual aid.

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "cyres/json_io.hpp"
#include "cyres/mdp.hpp"
#include "cyres/random.hpp"

namespace cyres {

using Eigen::Index;

// Visual states: AoIs 0..I-1, then the uninformative state s^ua (index I)
// and the distraction state s^da (index I + 1).
struct VisualStateSpace {
  Index aoi_count = 4;

  Index size() const { return aoi_count + 2; }
  Index uninformative() const { return aoi_count; }
  Index distraction() const { return aoi_count + 1; }
  bool is_aoi(Index s) const { return s >= 0 && s < aoi_count; }
  std::string name(Index s) const;
};

// Checks a CTMC generator: square, off-diagonal rates >= 0, rows sum to 0.
void validate_generator(const Eigen::MatrixXd& generator, const std::string& field);

struct GazeModel {
  VisualStateSpace space;
  std::vector<std::string> aids;
  std::vector<Eigen::MatrixXd> generators;  // per aid, rates in 1/s

  Index num_aids() const { return static_cast<Index>(aids.size()); }
  const Eigen::MatrixXd& generator(Index aid) const { return generators.at(static_cast<std::size_t>(aid)); }
  Index aid_index(const std::string& aid) const;
  // Generators valid and every state entered under at least one aid.
  void validate() const;
};

struct GazeSegment {
  Index state = 0;
  double t_start = 0.0;
  double t_end = 0.0;
};

struct GazeTrace {
  std::vector<GazeSegment> segments;

  double t_begin() const { return segments.front().t_start; }
  double t_end() const { return segments.back().t_end; }
  Index final_state() const { return segments.back().state; }
};

// Samples the chain on [t_start, t_start + duration]: exponential holding
// times, embedded-chain jumps, last segment truncated.
GazeTrace simulate_gaze(const Eigen::MatrixXd& generator, Index start_state, double duration, Rng& rng,
                        double t_start = 0.0);
GazeTrace simulate_gaze_stage(const GazeModel& model, Index aid, Index start_state, double duration,
                              Rng& rng, double t_start = 0.0);

struct AttentionRewardSpec {
  Eigen::VectorXd transient;      // r^tr per AoI
  Eigen::VectorXd concentration;  // r^co per AoI, per second
  double decay = 0.0;             // alpha, 1/s

  void validate(const VisualStateSpace& space) const;
  double transient_at(Index s) const;
  double concentration_at(Index s) const;
};

// Integral of r e^{-alpha u} over [u1, u2].
double concentration_integral(double rate, double decay, double u1, double u2);

// u_k(s, t) for a stage that starts at stage_start. The trace must cover
// [stage_start, t].
double cumulative_reward(const GazeTrace& trace, const AttentionRewardSpec& spec, double stage_start,
                         double t, Index s);
// v_k(t): sum of u_k(s, t) over all visual states.
double average_attention(const GazeTrace& trace, const AttentionRewardSpec& spec,
                         const VisualStateSpace& space, double stage_start, double t);

// Nearest bin, lower bin on exact midpoints, clamped at both ends.
double quantize(double v, const Eigen::VectorXd& bins);
Index quantize_index(double v, const Eigen::VectorXd& bins);

struct AttentionConfig {
  double horizon = 50.0;        // T, seconds
  double period = 50.0 / 3.0;   // T^pl, seconds
  Eigen::VectorXd bins = (Eigen::VectorXd(4) << -30.0, 0.0, 30.0, 60.0).finished();
  double discount = 0.9;
  std::variant<ConstantRate, HarmonicVisitRate> rate = HarmonicVisitRate{5.0};
  double exploration = 0.1;
  std::int64_t episodes = 2000;
  Index start_state = -1;  // gaze state at t = 0; -1 selects s^ua

  // K with K T^pl <= T < (K + 1) T^pl.
  Index stages() const;
  double rate_at(std::int64_t visit) const;
  Index gaze_start(const VisualStateSpace& space) const {
    return start_state < 0 ? space.uninformative() : start_state;
  }
  void validate(const VisualStateSpace& space) const;
};

// Q over (attention bin, aid).
struct AidQTable {
  Eigen::VectorXd bins;
  Eigen::MatrixXd values;

  AidQTable(Eigen::VectorXd bins_in, Index num_aids);
  // Row of an attention state; throws unless v is one of the bins.
  Index row(double v) const;
  Index greedy_aid(double v) const;  // lowest index on ties
};

// Q(v, a) <- (1 - rate) Q(v, a) + rate (v + beta max_a' Q(v_next, a')).
void attention_q_update(AidQTable& q, double v, Index aid, double v_next, double rate, double beta);

// Greedy with probability 1 - epsilon, otherwise a uniform aid.
Index select_aid(const AidQTable& q, double v, double epsilon, Rng& rng);

struct StageRecord {
  std::int64_t episode = 0;
  Index stage = 0;  // 1-based
  Index aid = 0;
  double state = 0.0;      // attention state the aid was chosen in
  double attention = 0.0;  // v_k at the end of the stage
  double quantized = 0.0;
};

struct AttentionReport {
  AidQTable q;
  Eigen::MatrixXi visits;         // (bin, aid) update counts
  std::vector<Index> greedy_aid;  // per bin
  std::vector<StageRecord> stages;
};

// Episodes of K stages. Each stage picks an aid in the current attention
// state, simulates T^pl seconds of gaze from where the last stage ended and
// moves to the quantized end-of-stage attention level. Every episode starts
// from the gaze start state and the attention state quantize(0).
AttentionReport run_attention_experiment(const GazeModel& model, const AttentionRewardSpec& spec,
                                         const AttentionConfig& config, std::uint64_t seed);

struct StageEstimate {
  double mean_attention = 0.0;
  double mean_quantized = 0.0;
  double stderr_quantized = 0.0;
};

// Monte-Carlo estimate of one stage under a fixed aid from the gaze start.
StageEstimate estimate_stage_attention(const GazeModel& model, const AttentionRewardSpec& spec,
                                       const AttentionConfig& config, Index aid, std::int64_t rollouts,
                                       std::uint64_t seed);

// Aid with the largest expected quantized stage attention (ties: larger raw
// attention, then lower index).
Index oracle_best_aid(const GazeModel& model, const AttentionRewardSpec& spec,
                      const AttentionConfig& config, std::int64_t rollouts, std::uint64_t seed);

struct AttentionScenario {
  GazeModel model;
  AttentionRewardSpec rewards;
  AttentionConfig config;
};

// {I, generators{aid: matrix}, r_tr, r_co, alpha, T, T_pl, X, beta,
//  gamma_schedule (number or {"k_c": x}), epsilon, episodes, start_state?}
AttentionScenario attention_scenario_from_json(const Json& value, const std::string& path = "attention");
Json to_json(const AttentionScenario& scenario);

}  // namespace cyres

#endif  // CYRES_ATTENTION_HPP_
