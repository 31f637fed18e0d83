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

#ifndef CYRES_TESTS_SUPPORT_SUITES_HPP_
#define CYRES_TESTS_SUPPORT_SUITES_HPP_

// Fixed seeded instance suites used by the acceptance checks.

#include <cstdint>
#include <string>

#include "cyres/adversarial.hpp"
#include "cyres/attention.hpp"
#include "cyres/mtd.hpp"
#include "cyres/random.hpp"
#include "support/generators.hpp"

namespace cyres::testing {

// m configurations over n vulnerabilities; each vulnerability is exposed by a
// configuration with probability `exposure`, surfaces are redrawn until
// non-empty; damage ~ U(1, 10).
inline LayerSpec random_layer(std::uint64_t seed, int m = 3, int n = 3, double exposure = 0.6,
                              double noise_std = 0.5) {
  Rng rng(seed);
  LayerSpec layer;
  for (int k = 0; k < n; ++k) {
    layer.vulnerabilities.push_back("v" + std::to_string(k));
    layer.attacks.push_back("a" + std::to_string(k));
    layer.exploited.push_back(k);
  }
  for (int h = 0; h < m; ++h) layer.configurations.push_back("c" + std::to_string(h));
  layer.damage.resize(m, n);
  for (int h = 0; h < m; ++h) {
    for (int k = 0; k < n; ++k) layer.damage(h, k) = 1.0 + 9.0 * rng.uniform();
  }
  layer.surface.resize(static_cast<std::size_t>(m));
  for (auto& surface : layer.surface) {
    while (surface.empty()) {
      for (int k = 0; k < n; ++k) {
        if (rng.uniform() < exposure) surface.push_back(k);
      }
    }
  }
  layer.noise_std = noise_std;
  return layer;
}

constexpr std::uint64_t kMtdSuiteSeed = 1000;
constexpr int kMtdSuiteSize = 10;

constexpr std::uint64_t kSpeSuiteSeed = 9000;
constexpr int kSpeSuiteSize = 50;

// Replication and seed suites for the honeynet learner.
constexpr std::uint64_t kHoneynetSuiteSeed = 6000;
constexpr int kHoneynetReplications = 100;
constexpr std::uint64_t kKcSuiteSeed = 7000;
constexpr int kKcSuiteSize = 20;

constexpr std::uint64_t kLipschitzSuiteSeed = 8000;
constexpr int kLipschitzSuiteSize = 100;

struct TeachInstance {
  Mdp mdp;
  Policy target;
};

// 2..5 states, 2..3 actions, discount in [0.5, 0.95] and a uniformly drawn
// target that is not optimal.
inline TeachInstance teach_instance(std::uint64_t seed) {
  Rng rng(seed);
  const auto states = static_cast<Index>(2 + rng.below(4));
  const auto actions = static_cast<Index>(2 + rng.below(2));
  const double discount = 0.5 + 0.45 * rng.uniform();
  TeachInstance out{random_mdp(rng, states, actions, discount), {}};
  const Policy optimum = greedy_policy(exact_q_values(out.mdp));
  out.target = optimum;
  while (out.target == optimum) {
    for (auto& a : out.target.action) a = static_cast<Index>(rng.below(static_cast<std::uint64_t>(actions)));
  }
  return out;
}

constexpr std::uint64_t kTeachSuiteSeed = 3000;
constexpr int kTeachSuiteSize = 100;

// Four AoIs, two aids. "highlight" raises every rate into an AoI by `boost`
// and scales every rate into s^da by 1 / boost relative to "baseline".
inline AttentionScenario dominant_aid_scenario(double boost = 1.5) {
  AttentionScenario sc;
  sc.model.space.aoi_count = 4;
  const Index n = 6, ua = 4, da = 5;
  Eigen::MatrixXd base = Eigen::MatrixXd::Zero(n, n);
  for (Index i = 0; i < 4; ++i) {
    for (Index j = 0; j < 4; ++j) {
      if (i != j) base(i, j) = 0.1;
    }
    base(i, ua) = 0.3;
    base(i, da) = 0.4;
    base(ua, i) = 0.2;
    base(da, i) = 0.1;
  }
  base(ua, da) = 0.3;
  base(da, ua) = 0.2;
  Eigen::MatrixXd high = base;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < 4; ++j) high(i, j) *= boost;
    high(i, da) /= boost;
  }
  for (Eigen::MatrixXd* g : {&base, &high}) {
    for (Index i = 0; i < n; ++i) {
      (*g)(i, i) = 0.0;
      (*g)(i, i) = -g->row(i).sum();
    }
  }
  sc.model.aids = {"baseline", "highlight"};
  sc.model.generators = {base, high};
  sc.rewards.transient = Eigen::VectorXd::Constant(4, 5.0);
  sc.rewards.concentration = Eigen::VectorXd::Constant(4, 4.0);
  sc.rewards.decay = 0.05;
  return sc;
}

constexpr std::uint64_t kAttentionSuiteSeed = 2000;
constexpr int kAttentionSuiteSize = 20;

// Random batch data: `per_pair` samples of every (s, a) with next states
// drawn from a random kernel and rewards r(s, a) + N(0, noise^2).
inline PoisonDataset random_dataset(std::uint64_t seed, Index states = 2, Index actions = 2, int per_pair = 10,
                                    double noise = 0.1) {
  Rng rng(seed);
  const Mdp truth = random_mdp(rng, states, actions, 0.9, Objective::kMaximizeReward);
  PoisonDataset data{states, actions, {}};
  for (int k = 0; k < per_pair; ++k) {
    for (Index s = 0; s < states; ++s) {
      for (Index a = 0; a < actions; ++a) {
        const Index next = rng.categorical(truth.transition[static_cast<std::size_t>(a)].row(s).transpose());
        data.samples.push_back({s, a, truth.cost(s, a) + noise * rng.normal(), next});
      }
    }
  }
  return data;
}

// A target that is not optimal for the maximum-likelihood model: the
// optimal policy with the action of state 0 switched.
inline Policy non_optimal_target(const PoisonDataset& data, double discount) {
  const Mdp model = data.estimate(data.rewards(), discount);
  Policy pi = greedy_policy(exact_q_values(model));
  pi.action[0] = (pi.action[0] + 1) % data.num_actions;
  return pi;
}

constexpr std::uint64_t kPoisonLpSuiteSeed = 5000;
constexpr int kPoisonLpSuiteSize = 10;

struct EnvPoisonInstance {
  Mdp mdp;
  EnvPoisonSpec spec;
};

// Every non-target row replaced by delta P(s, ., a) + (1 - delta)
// P(s, ., target(s)): floor-respecting and makes every neighbour chain
// nearly equal to the target chain.
inline Mdp copy_target_rows(const Mdp& mdp, const EnvPoisonSpec& spec) {
  Mdp out = mdp;
  for (Index s = 0; s < mdp.num_states(); ++s) {
    for (Index a = 0; a < mdp.num_actions(); ++a) {
      out.transition[static_cast<std::size_t>(a)].row(s) =
          spec.floor * mdp.transition[static_cast<std::size_t>(a)].row(s) +
          (1.0 - spec.floor) * mdp.transition[static_cast<std::size_t>(spec.target[s])].row(s);
    }
  }
  return out;
}

// Cost MDP where the target action is cheapest in every state (cost in
// [0, 0.5) against [0.5, 1)), random kernel and random target.
inline EnvPoisonInstance env_poison_instance(std::uint64_t seed, Index states, Index actions, double margin = 0.05,
                                             double floor = 0.2) {
  Rng rng(seed);
  EnvPoisonInstance inst;
  inst.mdp = random_mdp(rng, states, actions, 0.9);
  inst.spec.target.action.resize(static_cast<std::size_t>(states));
  for (auto& a : inst.spec.target.action) a = static_cast<Index>(rng.below(static_cast<std::uint64_t>(actions)));
  for (Index s = 0; s < states; ++s) {
    for (Index a = 0; a < actions; ++a) {
      inst.mdp.cost(s, a) = a == inst.spec.target[s] ? 0.5 * rng.uniform() : 0.5 + 0.5 * rng.uniform();
    }
  }
  inst.spec.margin = margin;
  inst.spec.floor = floor;
  inst.spec.norm_order = 1.0;
  return inst;
}

// Instances where the target is not yet dominant and the copy-target point
// certifies that a feasible poisoning exists.
inline std::vector<EnvPoisonInstance> env_poison_suite(int count = 10, std::uint64_t first_seed = 4000) {
  std::vector<EnvPoisonInstance> out;
  for (std::uint64_t seed = first_seed; static_cast<int>(out.size()) < count; ++seed) {
    Rng shape(seed ^ 0x5a5a5a5aULL);
    const auto states = static_cast<Index>(2 + shape.below(3));
    const auto actions = static_cast<Index>(2 + shape.below(2));
    EnvPoisonInstance inst = env_poison_instance(seed, states, actions);
    if (neighbor_margins(inst.mdp, inst.spec.target).min_margin >= inst.spec.margin) continue;
    if (neighbor_margins(copy_target_rows(inst.mdp, inst.spec), inst.spec.target).min_margin < inst.spec.margin) {
      continue;
    }
    out.push_back(std::move(inst));
  }
  return out;
}

// The two-state instance checked against the grid oracle.
constexpr std::uint64_t kEnvGridSeed = 11;

}  // namespace cyres::testing

#endif  // CYRES_TESTS_SUPPORT_SUITES_HPP_
