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
#include <functional>

#include "cyres/error.hpp"
#include "cyres/honeynet.hpp"

namespace cyres {
namespace {

using Eigen::VectorXd;

// Adaptive Simpson quadrature.
double simpson(const std::function<double(double)>& f, double a, double b, double tol, int depth = 0) {
  const double m = 0.5 * (a + b);
  const double whole = (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b));
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double left = (m - a) / 6.0 * (f(a) + 4.0 * f(lm) + f(m));
  const double right = (b - m) / 6.0 * (f(m) + 4.0 * f(rm) + f(b));
  if (depth > 40 || std::abs(left + right - whole) <= 15.0 * tol) return left + right;
  return simpson(f, a, m, tol / 2, depth + 1) + simpson(f, m, b, tol / 2, depth + 1);
}

SmdpChoice make_choice(const std::string& name, VectorXd tr, double rate, double r1, double r2) {
  const auto n = tr.size();
  return SmdpChoice{name, std::move(tr), VectorXd::Constant(n, rate), VectorXd::Constant(n, r1), r2};
}

VectorXd unit(Index n, Index i) {
  VectorXd v = VectorXd::Zero(n);
  v[i] = 1.0;
  return v;
}

// Two transient states and an exit.
Smdp toy(double gamma = 1.0) {
  Smdp smdp;
  smdp.states = {"x", "y", "exit"};
  smdp.gamma = gamma;
  smdp.reward_bound = 100.0;
  VectorXd mix(3);
  mix << 0.3, 0.5, 0.2;
  smdp.choices = {{make_choice("stay", unit(3, 0), 2.0, 0.5, 1.0), make_choice("go", mix, 1.0, 0.0, 2.0)},
                  {make_choice("back", unit(3, 0), 3.0, -0.5, 0.5), make_choice("out", unit(3, 2), 1.0, 1.0, 0.0)},
                  {absorbing_noop(3, 2)}};
  return smdp;
}

TEST_CASE("laplace transform of exponential sojourns") {
  Smdp smdp = toy(2.0);
  CHECK(laplace_sojourn(smdp, 0, 0, 0) == doctest::Approx(0.5));
  smdp.gamma = 1e-9;
  CHECK(laplace_sojourn(smdp, 0, 0, 0) == doctest::Approx(1.0).epsilon(1e-8));
  smdp.gamma = 1.0;
  const double quad = simpson([](double t) { return std::exp(-t) * 2.0 * std::exp(-2.0 * t); }, 0.0, 60.0, 1e-12);
  CHECK(laplace_sojourn(smdp, 0, 0, 0) == doctest::Approx(2.0 / 3.0));
  CHECK(std::abs(laplace_sojourn(smdp, 0, 0, 0) - quad) <= 1e-6);
}

TEST_CASE("equivalent reward closed forms") {
  Smdp smdp = toy(2.0);
  smdp.choices[1][1].r2 = 0.0;
  CHECK(equivalent_reward(smdp, 1, 1, 2) == 1.0);
  // r1 = 0, r2 = gamma, z = 0.5.
  smdp.choices[0][0] = make_choice("stay", unit(3, 0), 2.0, 0.0, 2.0);
  CHECK(equivalent_reward(smdp, 0, 0, 0) == doctest::Approx(0.5));
  smdp.reward_bound = 0.25;
  CHECK_THROWS_AS(equivalent_reward(smdp, 0, 0, 0), ValidationError);
  CHECK_THROWS_AS(smdp.validate(), ValidationError);
}

TEST_CASE("equivalent reward matches sampled sojourns") {
  const Smdp smdp = toy(0.7);
  const SmdpChoice& c = smdp.choice(0, 1);
  Rng rng(5);
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double tau = rng.exponential(c.rate[1]);
    const double x = c.r1[1] + c.r2 * (1.0 - std::exp(-smdp.gamma * tau)) / smdp.gamma;
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sq / n - mean * mean) / n);
  CHECK(std::abs(equivalent_reward(smdp, 0, 1, 1) - mean) <= 3.0 * se);
}

TEST_CASE("value iteration closed forms") {
  Smdp one;
  one.states = {"s"};
  one.gamma = 1.0;
  one.reward_bound = 10.0;
  // rate 1 and gamma 1 give z = 0.5; r2 = 2 gives r = 2 / 1 * 0.5 = 1.
  one.choices = {{make_choice("loop", unit(1, 0), 1.0, 0.0, 2.0)}};
  CHECK(smdp_value_iteration(one, 1e-12)[0] == doctest::Approx(2.0).epsilon(1e-10));

  const Smdp smdp = toy();
  const VectorXd v = smdp_value_iteration(smdp, 1e-12);
  CHECK(v[2] == 0.0);
  VectorXd w = VectorXd::Zero(3);
  for (int i = 0; i < 100000; ++i) w = smdp_bellman(smdp, w);
  CHECK((v - w).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((smdp_bellman(smdp, v) - v).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("equivalent operator contracts with the computed modulus") {
  const Smdp smdp = build_example_honeynet();
  const double rho = contraction_modulus(smdp);
  CHECK(rho < 1.0);
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    VectorXd a(13), b(13);
    for (int i = 0; i < 13; ++i) {
      a[i] = 10.0 * rng.normal();
      b[i] = 10.0 * rng.normal();
    }
    const double before = (a - b).cwiseAbs().maxCoeff();
    CHECK((smdp_bellman(smdp, a) - smdp_bellman(smdp, b)).cwiseAbs().maxCoeff() <= rho * before + 1e-12);
  }
  for (Index s = 0; s < 13; ++s) {
    for (Index a = 0; a < smdp.num_actions(s); ++a) {
      for (Index t = 0; t < 13; ++t) {
        const double z = laplace_sojourn(smdp, s, a, t);
        CHECK((z > 0.0 && z < 1.0));
      }
    }
  }
}

TEST_CASE("example honeynet structure") {
  const Smdp smdp = build_example_honeynet();
  CHECK(smdp.num_states() == 13);
  for (Index s = 0; s < 11; ++s) {
    REQUIRE(smdp.num_actions(s) == 4);
    CHECK(smdp.choice(s, 0).action == "a_E");
    CHECK(smdp.choice(s, 1).action == "a_P");
    CHECK(smdp.choice(s, 2).action == "a_L");
    CHECK(smdp.choice(s, 3).action == "a_H");
  }
  CHECK(smdp.num_actions(kNormalZone) == 2);
  CHECK(smdp.choice(kNormalZone, 1).action == "a_A");
  CHECK(smdp.is_absorbing(kExitState));
  CHECK(smdp.choice(kExitState, 0).action == "noop");
  for (Index s = 0; s < 12; ++s) CHECK(smdp.choice(s, 0).transition == unit(13, kExitState));
  CHECK_NOTHROW(smdp.validate());
  CHECK(smdp_value_iteration(smdp, 1e-10)[kExitState] == 0.0);

  HoneynetParams bad;
  bad.move_prob = {0.9, 0.6, 0.65};
  CHECK_THROWS_AS(build_example_honeynet(bad), ValidationError);
  bad = HoneynetParams{};
  bad.links.push_back({3, 11});
  CHECK_THROWS_AS(build_example_honeynet(bad), ValidationError);
}

TEST_CASE("smdp q-learning with full exploration matches the exact values") {
  const Smdp smdp = toy();
  const VectorXd v = smdp_value_iteration(smdp, 1e-12);
  SmdpSchedule schedule;
  schedule.exploration = 1.0;
  schedule.epochs = 50000;
  schedule.k_c = 10.0;
  const SmdpLearning run = smdp_q_learning(smdp, schedule, 4);
  for (Index s = 0; s < 2; ++s) {
    CHECK(std::abs(run.q.max_value(s) - v[s]) <= 0.05 * std::abs(v[s]));
  }
}

TEST_CASE("first visit overwrites the zero table") {
  const Smdp smdp = toy();
  SmdpSchedule schedule;
  schedule.epochs = 1;
  schedule.exploration = 0.0;
  schedule.watch_state = 0;
  const SmdpLearning run = smdp_q_learning(smdp, schedule, 1);
  const EngagementEpoch& e = run.trace.epochs.at(0);
  CHECK(e.state == 0);
  CHECK(e.action == 0);
  CHECK(run.q.values[0][0] == doctest::Approx(e.reward).epsilon(1e-15));
  CHECK(run.trace.watched(0, 0) == run.q.values[0][0]);
  CHECK(schedule.rate_at(1) == 1.0);
}

TEST_CASE("trace bookkeeping and determinism") {
  const Smdp smdp = build_example_honeynet();
  SmdpSchedule schedule;
  schedule.epochs = 3000;
  const SmdpLearning a = smdp_q_learning(smdp, schedule, 17);
  const SmdpLearning b = smdp_q_learning(smdp, schedule, 17);
  REQUIRE(a.trace.epochs.size() == 3000);
  CHECK(a.trace.epochs.front().state == kNormalZone);
  for (std::size_t k = 0; k < a.trace.epochs.size(); ++k) {
    const auto& x = a.trace.epochs[k];
    CHECK(x.sojourn > 0.0);
    CHECK(x.state != kExitState);
    if (k + 1 < a.trace.epochs.size()) {
      CHECK(a.trace.epochs[k + 1].time == x.time + x.sojourn);
      const Index expect = x.next_state == kExitState ? kNormalZone : x.next_state;
      CHECK(a.trace.epochs[k + 1].state == expect);
    }
    CHECK(x.sojourn == b.trace.epochs[k].sojourn);
    CHECK(x.action == b.trace.epochs[k].action);
  }
  for (Index s = 0; s < 13; ++s) CHECK(a.q.values[s] == b.q.values[s]);
}

TEST_CASE("visit-count rates: divergent sum, convergent squares") {
  for (double k_c : {0.5, 1.0, 10.0}) {
    SmdpSchedule s;
    s.k_c = k_c;
    double s1_small = 0.0, s1 = 0.0, s2 = 0.0, s2_tail = 0.0;
    for (std::int64_t n = 1; n <= 1000000; ++n) {
      const double a = s.rate_at(n);
      s1 += a;
      s2 += a * a;
      if (n == 1000) s1_small = s1;
      if (n > 100000) s2_tail += a * a;
    }
    // Partial sums of the rate grow like k_c ln n; the squares settle.
    CHECK((s1 - s1_small) == doctest::Approx(k_c * std::log(1000.0)).epsilon(0.01));
    CHECK(s2 <= 1.0 + k_c * k_c * M_PI * M_PI / 6.0);
    CHECK(s2_tail <= k_c * k_c * 1e-5);
  }
}

TEST_CASE("k_c study: reported statistics") {
  const Smdp smdp = build_example_honeynet();
  SmdpSchedule base;
  base.epochs = 2000;
  const KcStudy single = kc_sensitivity_study(smdp, {10.0}, 1, base, kNormalZone, 1, 3);
  CHECK(single.rows[0].var_max_q.isZero(0.0));
  CHECK(single.rows[0].settle_epoch.size() == 1);

  const KcStudy study = kc_sensitivity_study(smdp, {0.01, 10.0}, 40, base, kNormalZone, 1, 3);
  CHECK(study.reference_value == doctest::Approx(smdp_value_iteration(smdp, 1e-12)[kNormalZone]));
  const KcStudyRow& row = study.rows[1];
  CHECK(row.var_watched_q[1999] < row.var_watched_q[99]);
  CHECK(std::abs(row.mean_watched_q[1999] - study.reference_value) <
        std::abs(row.mean_watched_q[99] - study.reference_value));
  CHECK_THROWS_AS(kc_sensitivity_study(smdp, {1.0}, 0, base, kNormalZone, 1, 3), ValidationError);
  CHECK_THROWS_AS(kc_sensitivity_study(smdp, {1.0}, 2, base, kNormalZone, 2, 3), ValidationError);
}

TEST_CASE("settling index") {
  VectorXd x(6);
  x << 5, 1.0, 3, 1.02, 0.99, 1.01;
  CHECK(settle_index(x, 1.0, 0.05) == 3);
  CHECK(settle_index(x, 9.0, 0.05) == 6);
  CHECK(settle_index(VectorXd::Ones(4), 1.0, 0.0) == 0);
}

TEST_CASE("smdp JSON round trip and errors") {
  const Smdp smdp = build_example_honeynet();
  const Smdp back = smdp_from_json(to_json(smdp));
  CHECK(back.num_states() == 13);
  CHECK(back.start_state == kNormalZone);
  CHECK(back.is_absorbing(kExitState));
  CHECK((smdp_value_iteration(back, 1e-12) - smdp_value_iteration(smdp, 1e-12)).cwiseAbs().maxCoeff() < 1e-12);

  Json bad = to_json(smdp);
  bad["choices"]["s4"][1]["transition"]["s99"] = 0.1;
  CHECK_THROWS_WITH_AS(smdp_from_json(bad), doctest::Contains("smdp.choices.s4[1].transition"), ValidationError);
  bad = to_json(smdp);
  bad["choices"]["s4"][1]["rate"]["s2"] = 0.0;
  CHECK_THROWS_WITH_AS(smdp_from_json(bad), doctest::Contains("rates must be positive"), ValidationError);
  bad = to_json(smdp);
  bad["choices"].erase("s5");
  CHECK_THROWS_WITH_AS(smdp_from_json(bad), doctest::Contains("missing state \"s5\""), ValidationError);
  CHECK_THROWS_AS(honeynet_params_from_json(Json::parse(R"({"gamma": -1})")), ValidationError);
  CHECK_THROWS_AS(smdp_schedule_from_json(Json::parse(R"({"k_c": 0})")), ValidationError);
}

}  // namespace
}  // namespace cyres
