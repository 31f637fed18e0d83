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

#include "cyres/mdp.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/LU>

#include "cyres/error.hpp"

namespace cyres {
namespace {

constexpr double kRowTolerance = 1e-12;

bool better(Objective objective, double candidate, double incumbent) {
  return objective == Objective::kMinimizeCost ? candidate < incumbent : candidate > incumbent;
}

Index best_action(Objective objective, const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  Index best = 0;
  for (Index a = 1; a < row.size(); ++a) {
    if (better(objective, row[a], row[best])) best = a;
  }
  return best;
}

Eigen::VectorXd optimize_rows(Objective objective, const Eigen::MatrixXd& q) {
  return objective == Objective::kMinimizeCost ? Eigen::VectorXd(q.rowwise().minCoeff())
                                               : Eigen::VectorXd(q.rowwise().maxCoeff());
}

std::string row_name(Index s, Index a) {
  return "transition[" + std::to_string(s) + "][" + std::to_string(a) + "]";
}

}  // namespace

const char* to_string(Objective objective) {
  return objective == Objective::kMinimizeCost ? "minimize-cost" : "maximize-reward";
}

Objective objective_from_string(const std::string& name, const std::string& field) {
  if (name == "minimize-cost") return Objective::kMinimizeCost;
  if (name == "maximize-reward") return Objective::kMaximizeReward;
  fail_field(field, "expected \"minimize-cost\" or \"maximize-reward\", got \"" + name + "\"");
}

void Mdp::validate() const {
  const Index n = num_states();
  if (n < 1) throw ValidationError("n_states: must be positive");
  if (num_actions() < 1) throw ValidationError("n_actions: must be positive");
  if (!(discount > 0.0 && discount < 1.0)) {
    throw ValidationError("discount: must lie strictly inside (0, 1)");
  }
  if (!cost.allFinite()) throw ValidationError("cost: entries must be finite");
  if (!(cost_noise_std >= 0.0) || !std::isfinite(cost_noise_std)) {
    throw ValidationError("cost_noise_std: must be finite and non-negative");
  }
  if (static_cast<Index>(transition.size()) != num_actions()) {
    throw ValidationError("transition: expected one matrix per action");
  }
  for (Index a = 0; a < num_actions(); ++a) {
    const auto& p = transition[static_cast<std::size_t>(a)];
    if (p.rows() != n || p.cols() != n) {
      throw ValidationError("transition: action " + std::to_string(a) + " has wrong shape");
    }
    for (Index s = 0; s < n; ++s) {
      if (!p.row(s).allFinite() || (p.row(s).array() < 0.0).any()) {
        throw ValidationError(row_name(s, a) + ": entries must be finite and non-negative");
      }
      const double sum = p.row(s).sum();
      if (std::abs(sum - 1.0) > kRowTolerance) {
        throw ValidationError(row_name(s, a) + ": row sums to " + std::to_string(sum) +
                              ", expected 1");
      }
    }
  }
}

bool Mdp::is_absorbing(Index s) const {
  for (const auto& p : transition) {
    if (p(s, s) < 1.0) return false;
  }
  return true;
}

void LearningSchedule::validate() const {
  if (const auto* c = std::get_if<ConstantRate>(&rate)) {
    if (!(c->alpha >= 0.0 && c->alpha <= 1.0)) {
      throw ValidationError("schedule.alpha: must lie in [0, 1]");
    }
  } else if (!(std::get<HarmonicVisitRate>(rate).k_c > 0.0)) {
    throw ValidationError("schedule.k_c: must be positive");
  }
  if (!(exploration >= 0.0 && exploration <= 1.0)) {
    throw ValidationError("schedule.exploration: must lie in [0, 1]");
  }
  if (max_steps < 0) throw ValidationError("schedule.max_steps: must be non-negative");
}

double LearningSchedule::rate_at(std::int64_t visit) const {
  if (const auto* c = std::get_if<ConstantRate>(&rate)) return c->alpha;
  const double k_c = std::get<HarmonicVisitRate>(rate).k_c;
  return k_c / (static_cast<double>(visit) - 1.0 + k_c);
}

Eigen::MatrixXd bellman_operator(const Mdp& mdp, const Eigen::MatrixXd& q) {
  const Eigen::VectorXd next = optimize_rows(mdp.objective, q);
  Eigen::MatrixXd out(mdp.num_states(), mdp.num_actions());
  for (Index a = 0; a < mdp.num_actions(); ++a) {
    out.col(a) = mdp.cost.col(a) + mdp.discount * (mdp.transition[static_cast<std::size_t>(a)] * next);
  }
  return out;
}

QTable q_value_iteration(const Mdp& mdp, double tol) {
  if (!(tol > 0.0)) throw ValidationError("tol: must be positive");
  mdp.validate();
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(mdp.num_states(), mdp.num_actions());
  constexpr long kMaxIterations = 50'000'000;
  for (long it = 0; it < kMaxIterations; ++it) {
    Eigen::MatrixXd next = bellman_operator(mdp, q);
    const double residual = (next - q).cwiseAbs().maxCoeff();
    if (residual <= tol) return QTable{std::move(q), mdp.objective};
    q = std::move(next);
  }
  throw NumericalError("q_value_iteration: no convergence (tolerance below round-off?)");
}

Eigen::MatrixXd policy_transition(const Mdp& mdp, const Policy& pi) {
  validate_policy(mdp, pi);
  Eigen::MatrixXd p(mdp.num_states(), mdp.num_states());
  for (Index s = 0; s < mdp.num_states(); ++s) {
    p.row(s) = mdp.transition[static_cast<std::size_t>(pi[s])].row(s);
  }
  return p;
}

Eigen::VectorXd policy_cost_to_go(const Mdp& mdp, const Policy& pi) {
  const Index n = mdp.num_states();
  const Eigen::MatrixXd p = policy_transition(mdp, pi);
  Eigen::VectorXd c(n);
  for (Index s = 0; s < n; ++s) c[s] = mdp.cost(s, pi[s]);
  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - mdp.discount * p;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
  Eigen::VectorXd v = lu.solve(c);
  const double scale = 1.0 + c.cwiseAbs().maxCoeff() / (1.0 - mdp.discount);
  if (!v.allFinite() || (system * v - c).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw NumericalError("policy_cost_to_go: singular or ill-conditioned system");
  }
  return v;
}

Eigen::MatrixXd policy_q_values(const Mdp& mdp, const Policy& pi) {
  const Eigen::VectorXd v = policy_cost_to_go(mdp, pi);
  Eigen::MatrixXd q(mdp.num_states(), mdp.num_actions());
  for (Index a = 0; a < mdp.num_actions(); ++a) {
    q.col(a) = mdp.cost.col(a) + mdp.discount * (mdp.transition[static_cast<std::size_t>(a)] * v);
  }
  return q;
}

QTable exact_q_values(const Mdp& mdp) {
  mdp.validate();
  Policy pi{std::vector<Index>(static_cast<std::size_t>(mdp.num_states()), 0)};
  for (int round = 0; round < 10'000; ++round) {
    Eigen::MatrixXd q = policy_q_values(mdp, pi);
    bool changed = false;
    for (Index s = 0; s < mdp.num_states(); ++s) {
      const Index current = pi[s];
      const Index best = best_action(mdp.objective, q.row(s));
      const double slack = 1e-12 * (1.0 + std::abs(q(s, current)));
      const double gain = std::abs(q(s, best) - q(s, current));
      if (best != current && gain > slack) {
        pi.action[static_cast<std::size_t>(s)] = best;
        changed = true;
      }
    }
    if (!changed) return QTable{std::move(q), mdp.objective};
  }
  throw NumericalError("exact_q_values: policy iteration did not stabilize");
}

Policy greedy_policy(const QTable& q) {
  Policy pi;
  pi.action.reserve(static_cast<std::size_t>(q.values.rows()));
  for (Index s = 0; s < q.values.rows(); ++s) {
    pi.action.push_back(best_action(q.objective, q.values.row(s)));
  }
  return pi;
}

Eigen::VectorXd state_values(const QTable& q) { return optimize_rows(q.objective, q.values); }

StepOutcome simulate_step(const Mdp& mdp, Index s, Index a, Rng& rng) {
  StepOutcome out;
  out.next_state = rng.categorical(mdp.transition[static_cast<std::size_t>(a)].row(s).transpose());
  out.cost = mdp.cost(s, a);
  if (mdp.cost_noise_std > 0.0) out.cost += mdp.cost_noise_std * rng.normal();
  return out;
}

QTable q_learning_run(const Mdp& mdp, const LearningSchedule& schedule, std::uint64_t seed) {
  mdp.validate();
  schedule.validate();
  const Index n = mdp.num_states();
  const Index m = mdp.num_actions();
  Rng rng(seed);
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, m);
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> visits =
      Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, m);
  std::vector<bool> absorbing(static_cast<std::size_t>(n));
  for (Index s = 0; s < n; ++s) absorbing[static_cast<std::size_t>(s)] = mdp.is_absorbing(s);

  auto s = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
  for (std::int64_t step = 0; step < schedule.max_steps; ++step) {
    Index a;
    if (rng.uniform() < schedule.exploration) {
      a = static_cast<Index>(rng.below(static_cast<std::uint64_t>(m)));
    } else {
      a = best_action(mdp.objective, q.row(s));
    }
    const StepOutcome out = simulate_step(mdp, s, a, rng);
    const double alpha = schedule.rate_at(++visits(s, a));
    const Eigen::RowVectorXd next_row = q.row(out.next_state);
    const double bootstrap = mdp.objective == Objective::kMinimizeCost ? next_row.minCoeff()
                                                                       : next_row.maxCoeff();
    q(s, a) += alpha * (mdp.discount * bootstrap + out.cost - q(s, a));
    s = absorbing[static_cast<std::size_t>(s)]
            ? static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)))
            : out.next_state;
  }
  return QTable{std::move(q), mdp.objective};
}

void validate_policy(const Mdp& mdp, const Policy& pi) {
  if (pi.size() != mdp.num_states()) {
    throw ValidationError("policy: expected " + std::to_string(mdp.num_states()) + " entries");
  }
  for (Index s = 0; s < pi.size(); ++s) {
    if (pi[s] < 0 || pi[s] >= mdp.num_actions()) {
      throw ValidationError("policy[" + std::to_string(s) + "]: invalid action " +
                            std::to_string(pi[s]));
    }
  }
}

Mdp mdp_from_json(const Json& value, const std::string& path) {
  ObjectReader in(value, path);
  const std::int64_t n = in.integer("n_states");
  const std::int64_t m = in.integer("n_actions");
  if (n < 1) fail_field(in.field("n_states"), "must be positive");
  if (m < 1) fail_field(in.field("n_actions"), "must be positive");
  Mdp mdp;
  mdp.discount = in.number("discount");
  if (!(mdp.discount > 0.0 && mdp.discount < 1.0)) {
    fail_field(in.field("discount"), "must lie strictly inside (0, 1)");
  }
  mdp.objective = objective_from_string(in.string_or("objective", "minimize-cost"),
                                        in.field("objective"));
  mdp.cost_noise_std = in.number_or("cost_noise_std", 0.0);
  if (mdp.cost_noise_std < 0.0) fail_field(in.field("cost_noise_std"), "must be non-negative");
  mdp.cost = as_matrix(in.at("cost"), in.field("cost"));
  if (mdp.cost.rows() != n || mdp.cost.cols() != m) {
    fail_field(in.field("cost"), "expected shape n_states x n_actions");
  }
  const Json& t = in.at("transition");
  const std::string tf = in.field("transition");
  if (!t.is_array() || static_cast<std::int64_t>(t.size()) != n) {
    fail_field(tf, "expected n_states entries");
  }
  mdp.transition.assign(static_cast<std::size_t>(m), Eigen::MatrixXd::Zero(n, n));
  for (std::int64_t s = 0; s < n; ++s) {
    const std::string sf = tf + "[" + std::to_string(s) + "]";
    const Eigen::MatrixXd rows = as_matrix(t[static_cast<std::size_t>(s)], sf);
    if (rows.rows() != m || rows.cols() != n) fail_field(sf, "expected n_actions x n_states");
    for (std::int64_t a = 0; a < m; ++a) {
      mdp.transition[static_cast<std::size_t>(a)].row(s) = rows.row(a);
    }
  }
  in.finish();
  try {
    mdp.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(path + "." + e.what());
  }
  return mdp;
}

Json to_json(const Mdp& mdp) {
  Json t = Json::array();
  for (Index s = 0; s < mdp.num_states(); ++s) {
    Json rows = Json::array();
    for (Index a = 0; a < mdp.num_actions(); ++a) {
      rows.push_back(vector_json(mdp.transition[static_cast<std::size_t>(a)].row(s).transpose()));
    }
    t.push_back(std::move(rows));
  }
  Json out = {{"n_states", mdp.num_states()},
              {"n_actions", mdp.num_actions()},
              {"discount", mdp.discount},
              {"objective", to_string(mdp.objective)},
              {"cost", matrix_json(mdp.cost)},
              {"transition", std::move(t)}};
  if (mdp.cost_noise_std > 0.0) out["cost_noise_std"] = mdp.cost_noise_std;
  return out;
}

Policy policy_from_json(const Json& value, const std::string& path) {
  Policy pi;
  for (int a : as_indices(value, path)) pi.action.push_back(a);
  return pi;
}

Json to_json(const Policy& pi) {
  Json out = Json::array();
  for (Index a : pi.action) out.push_back(a);
  return out;
}

}  // namespace cyres
