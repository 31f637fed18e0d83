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

#include <doctest.h>

#include <cmath>

#include "cyres/adversarial.hpp"
#include "cyres/error.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"
#include "support/suites.hpp"

namespace cyres {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::vector<Index> all_states(Index n) {
  std::vector<Index> out;
  for (Index s = 0; s < n; ++s) out.push_back(s);
  return out;
}

Mdp single_state(const VectorXd& cost, double discount) {
  Mdp mdp;
  mdp.discount = discount;
  mdp.cost = cost.transpose();
  mdp.transition.assign(static_cast<std::size_t>(cost.size()), MatrixXd::Ones(1, 1));
  return mdp;
}

Policy random_other_policy(Rng& rng, const Policy& avoid, Index actions) {
  Policy pi = avoid;
  while (pi == avoid) {
    for (auto& a : pi.action) a = static_cast<Index>(rng.below(static_cast<std::uint64_t>(actions)));
  }
  return pi;
}

TEST_CASE("Lipschitz bound") {
  Rng rng(21);
  const Mdp mdp = testing::random_mdp(rng, 4, 3, 0.8);
  CostPerturbation same{mdp.cost, mdp.cost, all_states(4), std::nullopt, PerturbationNorm::kSup};
  const LipschitzCheck zero = verify_lipschitz_bound(mdp, same);
  CHECK(zero.lhs == 0.0);
  CHECK(zero.rhs == 0.0);
  CHECK(zero.holds);

  const Mdp one = single_state((VectorXd(1) << 0.7).finished(), 0.9);
  CostPerturbation bump{one.cost, one.cost.array() + 0.3, {0}, std::nullopt, PerturbationNorm::kSup};
  const LipschitzCheck tight = verify_lipschitz_bound(one, bump);
  CHECK(tight.rhs == doctest::Approx(3.0));
  CHECK(std::abs(tight.lhs - tight.rhs) <= 1e-10);

  for (int i = 0; i < 100; ++i) {
    const auto states = static_cast<Index>(1 + rng.below(5));
    const auto actions = static_cast<Index>(1 + rng.below(3));
    const Mdp m = testing::random_mdp(rng, states, actions, 0.5 + 0.45 * rng.uniform());
    MatrixXd tilde = m.cost;
    for (Index s = 0; s < states; ++s) {
      for (Index a = 0; a < actions; ++a) tilde(s, a) += rng.normal();
    }
    const LipschitzCheck c =
        verify_lipschitz_bound(m, {m.cost, tilde, all_states(states), std::nullopt, PerturbationNorm::kSup});
    CHECK(c.holds);
  }
}

TEST_CASE("perturbation validation") {
  const MatrixXd c = MatrixXd::Zero(3, 2);
  MatrixXd t = c;
  t(1, 0) = 0.5;
  CHECK_THROWS_WITH_AS((CostPerturbation{c, t, {0, 2}, std::nullopt, PerturbationNorm::kSup}.validate()),
                       doctest::Contains("not attackable"), ValidationError);
  CHECK_NOTHROW((CostPerturbation{c, t, {1}, 0.5, PerturbationNorm::kSup}.validate()));
  CHECK_THROWS_WITH_AS((CostPerturbation{c, t, {1}, 0.4, PerturbationNorm::kSup}.validate()),
                       doctest::Contains("exceeds bound"), ValidationError);
  t(1, 1) = -0.5;
  CHECK((CostPerturbation{c, t, {1}, std::nullopt, PerturbationNorm::kL1}.size()) == 1.0);
  CHECK((CostPerturbation{c, t, {1}, std::nullopt, PerturbationNorm::kSup}.size()) == 0.5);
}

TEST_CASE("minimal perturbation bound") {
  // Q* = (1, 2) with beta = 0.5 needs c = (0.5, 1.5).
  const Mdp one = single_state((VectorXd(2) << 0.5, 1.5).finished(), 0.5);
  CHECK(exact_q_values(one).values(0, 1) == doctest::Approx(2.0));
  CHECK(minimal_perturbation_bound(one, Policy{{1}}) == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(minimal_perturbation_bound(one, Policy{{0}}) == doctest::Approx(0.0).epsilon(1e-12));

  Rng rng(5);
  for (int i = 0; i < 30; ++i) {
    const auto states = static_cast<Index>(1 + rng.below(4));
    const auto actions = static_cast<Index>(2 + rng.below(2));
    const Mdp m = testing::random_mdp(rng, states, actions, 0.5 + 0.4 * rng.uniform(),
                                      i % 2 ? Objective::kMaximizeReward : Objective::kMinimizeCost);
    const MatrixXd q = exact_q_values(m).values;
    Policy target{std::vector<Index>(static_cast<std::size_t>(states))};
    for (auto& a : target.action) a = static_cast<Index>(rng.below(static_cast<std::uint64_t>(actions)));
    // Per state the cheapest fix meets in the middle of the largest gap.
    const double sign = m.objective == Objective::kMinimizeCost ? 1.0 : -1.0;
    double d = 0.0;
    for (Index s = 0; s < states; ++s) {
      for (Index a = 0; a < actions; ++a) d = std::max(d, sign * (q(s, target[s]) - q(s, a)) / 2.0);
    }
    CHECK(minimal_perturbation_bound(m, target) == doctest::Approx((1.0 - m.discount) * d).epsilon(1e-8));
  }
}

TEST_CASE("cost condition and synthesis") {
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    const auto states = static_cast<Index>(2 + rng.below(4));
    const auto actions = static_cast<Index>(2 + rng.below(2));
    const Mdp mdp = testing::random_mdp(rng, states, actions, 0.5 + 0.45 * rng.uniform(),
                                        i % 3 == 0 ? Objective::kMaximizeReward : Objective::kMinimizeCost);
    const Policy optimum = greedy_policy(exact_q_values(mdp));
    const Policy target = random_other_policy(rng, optimum, actions);
    const double margin = 0.05;
    const CostPerturbation p = synthesize_poisoned_cost(mdp, target, margin, all_states(states));
    const CostCondition cond = cost_condition_check(mdp, p.manipulated, target);
    REQUIRE(cond.holds);
    for (Index s = 0; s < states; ++s) {
      CHECK(cond.margins(s, target[s]) == 0.0);
      for (Index a = 0; a < actions; ++a) {
        if (a == target[s]) continue;
        if (p.manipulated(s, a) != mdp.cost(s, a)) {
          CHECK(std::abs(cond.margins(s, a) - margin) <= 1e-9);
        } else {
          CHECK(cond.margins(s, a) >= margin - 1e-9);
        }
      }
    }
    // Any signal that keeps the condition also teaches the exact solver.
    MatrixXd louder = p.manipulated;
    const double sign = mdp.objective == Objective::kMinimizeCost ? 1.0 : -1.0;
    for (Index s = 0; s < states; ++s) {
      for (Index a = 0; a < actions; ++a) {
        if (a != target[s]) louder(s, a) += sign * rng.uniform();
      }
    }
    const CostCondition loud = cost_condition_check(mdp, louder, target);
    CHECK(loud.holds);
    CHECK(greedy_policy(exact_q_values(with_cost(mdp, louder))) == target);
    const AttackResult exact = run_poisoned_victim(with_cost(mdp, p.manipulated), target, p.size(),
                                                   VictimKind::kExactSolver);
    CHECK(exact.success);
    CHECK(exact.margins.minCoeff() >= margin - 1e-9);
    CHECK(p.size() >= minimal_perturbation_bound(mdp, target) - 1e-8);
  }
}

TEST_CASE("synthesis edge cases") {
  Rng rng(13);
  const Mdp mdp = testing::random_mdp(rng, 4, 2, 0.9);
  const Policy optimum = greedy_policy(exact_q_values(mdp));
  const CostPerturbation keep = synthesize_poisoned_cost(mdp, optimum, 1e-6, all_states(4));
  const MatrixXd rhs_plus = mdp.cost - cost_condition_check(mdp, mdp.cost, optimum).margins;
  for (Index s = 0; s < 4; ++s) {
    for (Index a = 0; a < 2; ++a) {
      if (keep.manipulated(s, a) != mdp.cost(s, a)) CHECK(mdp.cost(s, a) < rhs_plus(s, a) + 1e-6);
    }
  }
  CHECK(greedy_policy(exact_q_values(with_cost(mdp, keep.manipulated))) == optimum);
  const AttackResult clean = run_poisoned_victim(mdp, optimum, 0.0, VictimKind::kExactSolver);
  CHECK(clean.success);
  CHECK(clean.attack_cost == 0.0);

  const Policy target = random_other_policy(rng, optimum, 2);
  CHECK_THROWS_WITH_AS(synthesize_poisoned_cost(mdp, target, 0.1, {}), doctest::Contains("states"),
                       InfeasibleError);
  CHECK_THROWS_AS(synthesize_poisoned_cost(mdp, target, 0.0, all_states(4)), ValidationError);
  CHECK_THROWS_AS(synthesize_poisoned_cost(mdp, Policy{{0, 1}}, 0.1, all_states(4)), ValidationError);
}

TEST_CASE("Q-learning victim follows the taught policy") {
  Rng rng(31);
  int wins = 0;
  for (int i = 0; i < 5; ++i) {
    const Mdp mdp = testing::random_mdp(rng, 3, 2, 0.8);
    const Policy target = random_other_policy(rng, greedy_policy(exact_q_values(mdp)), 2);
    const CostPerturbation p = synthesize_poisoned_cost(mdp, target, 0.1, all_states(3));
    wins += run_poisoned_victim(with_cost(mdp, p.manipulated), target, p.size(), VictimKind::kQLearning,
                                static_cast<std::uint64_t>(i))
                .success;
  }
  CHECK(wins == 5);
}

TEST_CASE("dataset CSV") {
  const PoisonDataset d = dataset_from_csv("s,a,r,s'\n0,1,0.5,1\n1,0,-2e-1,0\n\n1, 1, 3 ,1\r\n");
  CHECK(d.num_states == 2);
  CHECK(d.num_actions == 2);
  REQUIRE(d.samples.size() == 3);
  CHECK(d.samples[1].reward == -0.2);
  CHECK(d.samples[2].next_state == 1);
  CHECK_THROWS_WITH_AS(dataset_from_csv("0,1,x,1\n"), doctest::Contains("line 1"), ValidationError);
  CHECK_THROWS_WITH_AS(dataset_from_csv("0,1,1\n"), doctest::Contains("4 columns"), ValidationError);
  CHECK_THROWS_AS(dataset_from_csv("0,-1,1,1\n"), ValidationError);
  CHECK_THROWS_AS(dataset_from_csv("0,3,1,1\n", 2, 2), ValidationError);
  CHECK_THROWS_WITH_AS(d.estimate(d.rewards(), 0.9), doctest::Contains("never observed"), ValidationError);
}

TEST_CASE("reward poisoning LP") {
  SUBCASE("already taught") {
    const PoisonDataset d = testing::random_dataset(77);
    const Mdp model = d.estimate(d.rewards(), 0.9);
    const QTable q = exact_q_values(model);
    const Policy optimum = greedy_policy(q);
    double lead = INFINITY;
    for (Index s = 0; s < 2; ++s) lead = std::min(lead, q.values(s, optimum[s]) - q.values(s, 1 - optimum[s]));
    const RewardPoisonResult r = solve_reward_poison_lp(d, optimum, lead / 2.0, 0.9);
    CHECK(r.cost <= 1e-9);
    CHECK((r.rewards - d.rewards()).cwiseAbs().maxCoeff() <= 1e-9);
  }
  SUBCASE("grid oracle and victim") {
    for (std::uint64_t seed : {5000u, 5003u}) {
      const PoisonDataset d = testing::random_dataset(seed);
      const Policy target = testing::non_optimal_target(d, 0.9);
      const RewardPoisonResult r = solve_reward_poison_lp(d, target, 0.1, 0.9, PerturbationNorm::kL1);
      const double grid = testing::poison_grid_minimum(d, target, 0.1, 0.9, 0.01);
      CHECK(r.cost <= grid + 0.02);
      // The grid can only lose one step per group.
      CHECK(r.cost >= grid - 40 * 0.01);
      CHECK(r.min_margin >= 0.1 - 1e-6);
      const AttackResult v = run_poisoned_victim(d, r.rewards, 0.9, target, r.cost);
      CHECK(v.success);
      CHECK(v.margins.minCoeff() >= 0.1 - 1e-6);
      CHECK(r.cost == doctest::Approx((r.rewards - d.rewards()).cwiseAbs().sum()));
    }
  }
  SUBCASE("sup norm") {
    const PoisonDataset d = testing::random_dataset(5001);
    const Policy target = testing::non_optimal_target(d, 0.9);
    const RewardPoisonResult sup = solve_reward_poison_lp(d, target, 0.1, 0.9, PerturbationNorm::kSup);
    const RewardPoisonResult l1 = solve_reward_poison_lp(d, target, 0.1, 0.9, PerturbationNorm::kL1);
    CHECK(sup.min_margin >= 0.1 - 1e-6);
    CHECK(sup.cost == doctest::Approx((sup.rewards - d.rewards()).cwiseAbs().maxCoeff()));
    CHECK(sup.cost <= (l1.rewards - d.rewards()).cwiseAbs().maxCoeff() + 1e-9);
    CHECK(l1.cost <= (sup.rewards - d.rewards()).cwiseAbs().sum() + 1e-9);
  }
  SUBCASE("bad inputs") {
    PoisonDataset d = testing::random_dataset(5002);
    const Policy target = testing::non_optimal_target(d, 0.9);
    CHECK_THROWS_AS(solve_reward_poison_lp(d, target, 0.0, 0.9), ValidationError);
    CHECK_THROWS_AS(solve_reward_poison_lp(d, target, 0.1, 1.0), ValidationError);
    d.samples.erase(std::remove_if(d.samples.begin(), d.samples.end(),
                                   [](const PoisonSample& x) { return x.state == 1 && x.action == 0; }),
                    d.samples.end());
    CHECK_THROWS_WITH_AS(solve_reward_poison_lp(d, target, 0.1, 0.9), doctest::Contains("(s=1, a=0)"),
                         ValidationError);
  }
}

TEST_CASE("stationary distribution") {
  CHECK(stationary_distribution(MatrixXd::Constant(4, 4, 0.25)).isApprox(VectorXd::Constant(4, 0.25)));
  MatrixXd p(2, 2);
  p << 0.7, 0.3, 0.6, 0.4;
  const VectorXd mu = stationary_distribution(p);
  CHECK(mu[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(mu[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  MatrixXd flip(2, 2);
  flip << 0, 1, 1, 0;
  CHECK(stationary_distribution(flip).isApprox(VectorXd::Constant(2, 0.5)));
  MatrixXd transient(3, 3);
  transient << 0.5, 0.5, 0.0, 0.0, 0.2, 0.8, 0.0, 0.6, 0.4;
  const VectorXd t = stationary_distribution(transient);
  CHECK(t[0] == 0.0);
  CHECK(std::abs(t.sum() - 1.0) <= 1e-12);
  MatrixXd split = MatrixXd::Identity(3, 3);
  split.row(1) << 0.5, 0.0, 0.5;
  CHECK_THROWS_WITH_AS(stationary_distribution(split), doctest::Contains("2 closed classes {0} {2}"),
                       ValidationError);
  MatrixXd bad = p;
  bad(0, 0) = 0.8;
  CHECK_THROWS_AS(stationary_distribution(bad), ValidationError);

  Rng rng(4);
  const Mdp mdp = testing::random_mdp(rng, 4, 2, 0.9);
  const Policy pi{{0, 1, 1, 0}};
  const VectorXd exact = stationary_distribution(mdp, pi);
  CHECK((exact.array() >= 0.0).all());
  CHECK(std::abs(exact.sum() - 1.0) <= 1e-12);
  CHECK((policy_transition(mdp, pi).transpose() * exact - exact).cwiseAbs().maxCoeff() <= 1e-10);
  VectorXd occupancy = VectorXd::Zero(4);
  Index s = 0;
  for (int k = 0; k < 1000000; ++k) {
    occupancy[s] += 1.0;
    s = simulate_step(mdp, s, pi[s], rng).next_state;
  }
  CHECK((occupancy / 1e6 - exact).cwiseAbs().maxCoeff() <= 0.01);
}

TEST_CASE("average reward sign and neighbours") {
  Rng rng(6);
  Mdp mdp = testing::random_mdp(rng, 3, 2, 0.9);
  const Policy pi{{1, 0, 1}};
  const double g_cost = average_reward(mdp, pi);
  mdp.objective = Objective::kMaximizeReward;
  CHECK(average_reward(mdp, pi) == doctest::Approx(-g_cost));
  const NeighborMargins nm = neighbor_margins(mdp, pi);
  CHECK(nm.margins(0, 1) == 0.0);
  Policy nb = pi;
  nb.action[2] = 0;
  CHECK(nm.margins(2, 0) == doctest::Approx(average_reward(mdp, pi) - average_reward(mdp, nb)));
}

TEST_CASE("environment poisoning") {
  SUBCASE("already dominant") {
    testing::EnvPoisonInstance inst = testing::env_poison_instance(1, 2, 2);
    REQUIRE(neighbor_margins(inst.mdp, inst.spec.target).min_margin >= inst.spec.margin);
    const EnvPoisonResult r = env_poison_search(inst.mdp, inst.spec, 100);
    CHECK(r.feasible);
    CHECK(r.cost == 0.0);
    CHECK(r.poisoned.transition == inst.mdp.transition);
  }
  SUBCASE("suite feasibility") {
    for (const auto& inst : testing::env_poison_suite(4)) {
      const EnvPoisonResult r = env_poison_search(inst.mdp, inst.spec, 2000);
      REQUIRE(r.feasible);
      CHECK_NOTHROW(r.poisoned.validate());
      for (std::size_t a = 0; a < inst.mdp.transition.size(); ++a) {
        CHECK(((r.poisoned.transition[a] - inst.spec.floor * inst.mdp.transition[a]).array() >= -1e-12).all());
      }
      CHECK(neighbor_margins(r.poisoned, inst.spec.target).min_margin >= inst.spec.margin - 1e-8);
      CHECK(r.cost == doctest::Approx(transition_distance(inst.mdp, r.poisoned, 1.0)));
      CHECK(r.cost <= transition_distance(inst.mdp, testing::copy_target_rows(inst.mdp, inst.spec), 1.0));
    }
  }
  SUBCASE("two-state grid oracle") {
    const auto inst = testing::env_poison_instance(testing::kEnvGridSeed, 2, 2);
    const double grid = testing::env_poison_grid_minimum(inst.mdp, inst.spec, 0.02);
    REQUIRE(std::isfinite(grid));
    const EnvPoisonResult r = env_poison_search(inst.mdp, inst.spec, 2000);
    CHECK(r.feasible);
    CHECK(r.cost <= grid + 0.05);
  }
  SUBCASE("higher order norms") {
    auto inst = testing::env_poison_suite(1)[0];
    inst.spec.norm_order = 2.0;
    const EnvPoisonResult r = env_poison_search(inst.mdp, inst.spec, 500);
    CHECK(r.feasible);
    CHECK(r.cost == doctest::Approx(transition_distance(inst.mdp, r.poisoned, 2.0)));
  }
  SUBCASE("bad specs") {
    auto inst = testing::env_poison_instance(3, 2, 2);
    inst.spec.floor = 0.0;
    CHECK_THROWS_WITH_AS(env_poison_search(inst.mdp, inst.spec, 10), doctest::Contains("floor"), ValidationError);
    inst.spec.floor = 0.5;
    inst.spec.margin = -1.0;
    CHECK_THROWS_AS(env_poison_search(inst.mdp, inst.spec, 10), ValidationError);
  }
  SUBCASE("floor of one forbids any change") {
    auto inst = testing::env_poison_suite(1)[0];
    inst.spec.floor = 1.0;
    const EnvPoisonResult r = env_poison_search(inst.mdp, inst.spec, 50);
    CHECK_FALSE(r.feasible);
  }
}

TEST_CASE("attack JSON") {
  Rng rng(2);
  const Mdp mdp = testing::random_mdp(rng, 2, 2, 0.9);
  Json j = {{"manipulated", {{0.1, 0.2}, {0.3, 0.4}}}, {"attackable", {0, 1}}, {"norm", "l1"}};
  const CostPerturbation p = perturbation_from_json(j, mdp);
  CHECK(p.norm == PerturbationNorm::kL1);
  CHECK(p.original == mdp.cost);
  j["norm"] = "l2";
  CHECK_THROWS_WITH_AS(perturbation_from_json(j, mdp), doctest::Contains("perturbation.norm"), ValidationError);
  j["norm"] = "sup";
  j["attackable"] = {0};
  CHECK_THROWS_AS(perturbation_from_json(j, mdp), ValidationError);
  const Json spec = {{"target", {1, 0}}, {"margin", 0.1}, {"floor", 0.3}};
  CHECK(env_poison_spec_from_json(spec, mdp).floor == 0.3);
  CHECK_THROWS_AS(env_poison_spec_from_json(Json{{"target", {1, 0}}}, mdp), ValidationError);
  CHECK_THROWS_AS(env_poison_spec_from_json(Json{{"target", {1, 0, 0}}, {"margin", 0.1}}, mdp), ValidationError);
  AttackResult r;
  r.victim_policy = Policy{{1, 0}};
  r.margins = (VectorXd(2) << 0.5, INFINITY).finished();
  const Json out = to_json(r);
  CHECK(out["margins"][1].is_null());
  CHECK(out["victim_policy"] == Json::array({1, 0}));
}

}  // namespace
}  // namespace cyres
