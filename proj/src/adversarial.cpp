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

#include "cyres/adversarial.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <Eigen/LU>

#include "cyres/error.hpp"
#include "cyres/lp.hpp"

namespace cyres {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// +1 when low signals are good (costs), -1 for rewards.
double cost_sign(const Mdp& mdp) { return mdp.objective == Objective::kMinimizeCost ? 1.0 : -1.0; }

std::string state_list(const std::vector<Index>& states) {
  std::string out;
  for (Index s : states) out += (out.empty() ? "" : ", ") + std::to_string(s);
  return out;
}

Policy neighbor(const Policy& pi, Index s, Index a) {
  Policy out = pi;
  out.action[static_cast<std::size_t>(s)] = a;
  return out;
}

}  // namespace

const char* to_string(PerturbationNorm norm) { return norm == PerturbationNorm::kSup ? "sup" : "l1"; }

PerturbationNorm norm_from_string(const std::string& name, const std::string& field) {
  if (name == "sup") return PerturbationNorm::kSup;
  if (name == "l1") return PerturbationNorm::kL1;
  fail_field(field, "expected \"sup\" or \"l1\", got \"" + name + "\"");
}

double CostPerturbation::size() const {
  const MatrixXd d = manipulated - original;
  if (d.size() == 0) return 0.0;
  return norm == PerturbationNorm::kSup ? d.cwiseAbs().maxCoeff() : d.cwiseAbs().sum();
}

void CostPerturbation::validate() const {
  if (original.rows() != manipulated.rows() || original.cols() != manipulated.cols()) {
    throw ValidationError("perturbation: original and manipulated shapes differ");
  }
  if (!manipulated.allFinite()) throw ValidationError("perturbation.manipulated: must be finite");
  std::vector<bool> allowed(static_cast<std::size_t>(original.rows()), false);
  for (Index s : attackable) {
    if (s < 0 || s >= original.rows()) {
      throw ValidationError("perturbation.attackable: state " + std::to_string(s) + " out of range");
    }
    allowed[static_cast<std::size_t>(s)] = true;
  }
  for (Index s = 0; s < original.rows(); ++s) {
    if (!allowed[static_cast<std::size_t>(s)] && original.row(s) != manipulated.row(s)) {
      throw ValidationError("perturbation.manipulated[" + std::to_string(s) +
                            "]: state is not attackable but its signal changed");
    }
  }
  if (bound && !(*bound >= 0.0)) throw ValidationError("perturbation.bound: must be non-negative");
  if (bound && size() > *bound * (1.0 + 1e-12)) {
    throw ValidationError("perturbation: size " + std::to_string(size()) + " exceeds bound " +
                          std::to_string(*bound));
  }
}

Mdp with_cost(const Mdp& mdp, const MatrixXd& cost) {
  if (cost.rows() != mdp.num_states() || cost.cols() != mdp.num_actions()) {
    throw ValidationError("cost: expected a " + std::to_string(mdp.num_states()) + "x" +
                          std::to_string(mdp.num_actions()) + " matrix");
  }
  Mdp out = mdp;
  out.cost = cost;
  return out;
}

LipschitzCheck verify_lipschitz_bound(const Mdp& mdp, const CostPerturbation& perturbation) {
  perturbation.validate();
  const QTable q = exact_q_values(with_cost(mdp, perturbation.original));
  const QTable q_tilde = exact_q_values(with_cost(mdp, perturbation.manipulated));
  LipschitzCheck out;
  out.lhs = (q_tilde.values - q.values).cwiseAbs().maxCoeff();
  out.rhs = (perturbation.manipulated - perturbation.original).cwiseAbs().maxCoeff() / (1.0 - mdp.discount);
  out.holds = out.lhs <= out.rhs + 1e-8;
  return out;
}

double minimal_perturbation_bound(const Mdp& mdp, const Policy& target) {
  validate_policy(mdp, target);
  const MatrixXd q_star = exact_q_values(mdp).values;
  const Index n = mdp.num_states(), m = mdp.num_actions();
  const Index t = n * m;
  auto var = [m](Index s, Index a) { return s * m + a; };
  LpProblem lp = LpProblem::with_variables(t + 1);
  lp.objective[t] = 1.0;
  lp.lower = VectorXd::Constant(t + 1, -kInf);
  lp.lower[t] = 0.0;
  const double sign = cost_sign(mdp);
  for (Index s = 0; s < n; ++s) {
    for (Index a = 0; a < m; ++a) {
      RowVectorXd row = RowVectorXd::Zero(t + 1);
      row[var(s, a)] = 1.0;
      row[t] = -1.0;
      lp.add_less_equal(row, q_star(s, a));
      row[var(s, a)] = -1.0;
      lp.add_less_equal(row, -q_star(s, a));
      if (a == target[s]) continue;
      // Target weakly preferred: sign * (Q(s, target) - Q(s, a)) <= 0.
      RowVectorXd pref = RowVectorXd::Zero(t + 1);
      pref[var(s, target[s])] = sign;
      pref[var(s, a)] = -sign;
      lp.add_less_equal(pref, 0.0);
    }
  }
  const LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::kOptimal) {
    throw NumericalError(std::string("minimal_perturbation_bound: LP ") + to_string(sol.status));
  }
  return (1.0 - mdp.discount) * std::max(0.0, sol.x[t]);
}

double CostCondition::min_margin() const {
  double best = kInf;
  for (Index s = 0; s < margins.rows(); ++s) {
    for (Index a = 0; a < margins.cols(); ++a) {
      if (margins(s, a) != 0.0) best = std::min(best, margins(s, a));
    }
  }
  return best;
}

namespace {

// V - beta P_sa V for every pair, with V the value of the target under cost.
MatrixXd teaching_threshold(const Mdp& mdp, const MatrixXd& cost, const Policy& target) {
  const Mdp poisoned = with_cost(mdp, cost);
  const VectorXd v = policy_cost_to_go(poisoned, target);
  MatrixXd rhs(mdp.num_states(), mdp.num_actions());
  for (Index a = 0; a < mdp.num_actions(); ++a) {
    rhs.col(a) = v - mdp.discount * (mdp.transition[static_cast<std::size_t>(a)] * v);
  }
  return rhs;
}

}  // namespace

CostCondition cost_condition_check(const Mdp& mdp, const MatrixXd& manipulated, const Policy& target) {
  validate_policy(mdp, target);
  const MatrixXd rhs = teaching_threshold(mdp, manipulated, target);
  CostCondition out;
  out.margins = cost_sign(mdp) * (manipulated - rhs);
  out.holds = true;
  for (Index s = 0; s < mdp.num_states(); ++s) {
    for (Index a = 0; a < mdp.num_actions(); ++a) {
      if (a == target[s]) {
        out.margins(s, a) = 0.0;
      } else if (!(out.margins(s, a) > 0.0)) {
        out.holds = false;
      }
    }
  }
  return out;
}

CostPerturbation synthesize_poisoned_cost(const Mdp& mdp, const Policy& target, double margin,
                                          const std::vector<Index>& attackable) {
  mdp.validate();
  validate_policy(mdp, target);
  if (!(margin > 0.0)) throw ValidationError("margin: must be positive");
  CostPerturbation out;
  out.original = mdp.cost;
  out.manipulated = mdp.cost;
  out.attackable = attackable;
  std::sort(out.attackable.begin(), out.attackable.end());
  out.attackable.erase(std::unique(out.attackable.begin(), out.attackable.end()), out.attackable.end());
  out.validate();
  // Target costs are kept, so the threshold is fixed by the original signal.
  const MatrixXd rhs = teaching_threshold(mdp, mdp.cost, target);
  const double sign = cost_sign(mdp);
  for (Index s : out.attackable) {
    for (Index a = 0; a < mdp.num_actions(); ++a) {
      if (a == target[s]) continue;
      const double wanted = rhs(s, a) + sign * margin;
      out.manipulated(s, a) = sign > 0 ? std::max(mdp.cost(s, a), wanted) : std::min(mdp.cost(s, a), wanted);
    }
  }
  const CostCondition check = cost_condition_check(mdp, out.manipulated, target);
  if (!check.holds) {
    std::vector<Index> bad;
    for (Index s = 0; s < mdp.num_states(); ++s) {
      for (Index a = 0; a < mdp.num_actions(); ++a) {
        if (a != target[s] && !(check.margins(s, a) > 0.0)) {
          bad.push_back(s);
          break;
        }
      }
    }
    throw InfeasibleError("synthesize_poisoned_cost: teaching condition fails at states " + state_list(bad) +
                          " outside the attackable set");
  }
  return out;
}

void PoisonDataset::validate() const {
  if (num_states < 1 || num_actions < 1) throw ValidationError("dataset: needs at least one state and action");
  if (samples.empty()) throw ValidationError("dataset: no samples");
  for (std::size_t t = 0; t < samples.size(); ++t) {
    const PoisonSample& x = samples[t];
    const std::string where = "dataset[" + std::to_string(t) + "]";
    if (x.state < 0 || x.state >= num_states || x.next_state < 0 || x.next_state >= num_states) {
      throw ValidationError(where + ": state out of range");
    }
    if (x.action < 0 || x.action >= num_actions) throw ValidationError(where + ": action out of range");
    if (!std::isfinite(x.reward)) throw ValidationError(where + ": reward must be finite");
  }
}

VectorXd PoisonDataset::rewards() const {
  VectorXd r(static_cast<Index>(samples.size()));
  for (std::size_t t = 0; t < samples.size(); ++t) r[static_cast<Index>(t)] = samples[t].reward;
  return r;
}

Mdp PoisonDataset::estimate(const VectorXd& rewards, double discount) const {
  validate();
  if (rewards.size() != static_cast<Index>(samples.size())) {
    throw ValidationError("dataset: reward vector has the wrong length");
  }
  Mdp mdp;
  mdp.discount = discount;
  mdp.objective = Objective::kMaximizeReward;
  mdp.cost = MatrixXd::Zero(num_states, num_actions);
  mdp.transition.assign(static_cast<std::size_t>(num_actions), MatrixXd::Zero(num_states, num_states));
  MatrixXd counts = MatrixXd::Zero(num_states, num_actions);
  for (std::size_t t = 0; t < samples.size(); ++t) {
    const PoisonSample& x = samples[t];
    counts(x.state, x.action) += 1.0;
    mdp.cost(x.state, x.action) += rewards[static_cast<Index>(t)];
    mdp.transition[static_cast<std::size_t>(x.action)](x.state, x.next_state) += 1.0;
  }
  for (Index s = 0; s < num_states; ++s) {
    for (Index a = 0; a < num_actions; ++a) {
      if (counts(s, a) == 0.0) {
        throw ValidationError("dataset: pair (s=" + std::to_string(s) + ", a=" + std::to_string(a) +
                              ") never observed");
      }
      mdp.cost(s, a) /= counts(s, a);
      mdp.transition[static_cast<std::size_t>(a)].row(s) /= counts(s, a);
    }
  }
  return mdp;
}

PoisonDataset dataset_from_csv(const std::string& text, Index num_states, Index num_actions) {
  PoisonDataset data;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  Index max_state = -1, max_action = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<std::string> cells;
    std::stringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t");
      const auto e = cell.find_last_not_of(" \t");
      cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    const std::string where = "dataset line " + std::to_string(line_no);
    if (cells.size() != 4) throw ValidationError(where + ": expected 4 columns s,a,r,s'");
    if (line_no == 1 && cells[0] == "s") continue;  // header
    auto integer = [&](const std::string& c) {
      long long v = 0;
      const auto [p, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
      if (ec != std::errc() || p != c.data() + c.size() || v < 0) {
        throw ValidationError(where + ": \"" + c + "\" is not a non-negative integer");
      }
      return static_cast<Index>(v);
    };
    PoisonSample x;
    x.state = integer(cells[0]);
    x.action = integer(cells[1]);
    x.next_state = integer(cells[3]);
    const auto [p, ec] = std::from_chars(cells[2].data(), cells[2].data() + cells[2].size(), x.reward);
    if (ec != std::errc() || p != cells[2].data() + cells[2].size()) {
      throw ValidationError(where + ": \"" + cells[2] + "\" is not a number");
    }
    max_state = std::max({max_state, x.state, x.next_state});
    max_action = std::max(max_action, x.action);
    data.samples.push_back(x);
  }
  data.num_states = num_states > 0 ? num_states : max_state + 1;
  data.num_actions = num_actions > 0 ? num_actions : max_action + 1;
  data.validate();
  return data;
}

PoisonDataset read_dataset_csv(const std::string& path, Index num_states, Index num_actions) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path + ": cannot open file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return dataset_from_csv(buffer.str(), num_states, num_actions);
}

RewardPoisonResult solve_reward_poison_lp(const PoisonDataset& dataset, const Policy& target, double margin,
                                          double discount, PerturbationNorm norm) {
  dataset.validate();
  if (!(margin > 0.0) || !std::isfinite(margin)) throw ValidationError("margin: must be positive");
  if (!(discount >= 0.0 && discount < 1.0)) throw ValidationError("discount: must lie in [0, 1)");
  const VectorXd r0 = dataset.rewards();
  const Mdp model = dataset.estimate(r0, discount);  // also checks coverage
  validate_policy(model, target);
  const Index n = dataset.num_states, m = dataset.num_actions;
  const auto big_t = static_cast<Index>(dataset.samples.size());
  // Columns: reward change (l1: p, n split; sup: free d and epigraph u), then Q.
  const bool l1 = norm == PerturbationNorm::kL1;
  const Index change_cols = l1 ? 2 * big_t : big_t + 1;
  const Index q0 = change_cols;
  const Index cols = q0 + n * m;
  auto qv = [&](Index s, Index a) { return q0 + s * m + a; };
  LpProblem lp = LpProblem::with_variables(cols);
  lp.lower = VectorXd::Zero(cols);
  lp.lower.tail(n * m).setConstant(-kInf);
  if (l1) {
    lp.objective.head(2 * big_t).setOnes();
  } else {
    lp.lower.head(big_t).setConstant(-kInf);
    lp.objective[big_t] = 1.0;
    for (Index t = 0; t < big_t; ++t) {
      RowVectorXd row = RowVectorXd::Zero(cols);
      row[t] = 1.0;
      row[big_t] = -1.0;
      lp.add_less_equal(row, 0.0);
      row[t] = -1.0;
      lp.add_less_equal(row, 0.0);
    }
  }
  MatrixXd counts = MatrixXd::Zero(n, m);
  for (const PoisonSample& x : dataset.samples) counts(x.state, x.action) += 1.0;
  for (Index s = 0; s < n; ++s) {
    for (Index a = 0; a < m; ++a) {
      // Q(s,a) - gamma sum p(s'|s,a) Q(s', target) - mean change = mean r0.
      RowVectorXd row = RowVectorXd::Zero(cols);
      row[qv(s, a)] += 1.0;
      const MatrixXd& p = model.transition[static_cast<std::size_t>(a)];
      for (Index next = 0; next < n; ++next) row[qv(next, target[next])] -= discount * p(s, next);
      for (Index t = 0; t < big_t; ++t) {
        const PoisonSample& x = dataset.samples[static_cast<std::size_t>(t)];
        if (x.state != s || x.action != a) continue;
        if (l1) {
          row[t] -= 1.0 / counts(s, a);
          row[big_t + t] += 1.0 / counts(s, a);
        } else {
          row[t] -= 1.0 / counts(s, a);
        }
      }
      lp.add_equal(row, model.cost(s, a));
      if (a == target[s]) continue;
      RowVectorXd lead = RowVectorXd::Zero(cols);
      lead[qv(s, a)] = 1.0;
      lead[qv(s, target[s])] = -1.0;
      lp.add_less_equal(lead, -margin);
    }
  }
  const LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::kOptimal) {
    throw NumericalError(std::string("solve_reward_poison_lp: LP ") + to_string(sol.status));
  }
  VectorXd change = l1 ? VectorXd(sol.x.head(big_t) - sol.x.segment(big_t, big_t)) : VectorXd(sol.x.head(big_t));
  RewardPoisonResult out;
  out.rewards = r0 + change;
  out.cost = l1 ? change.cwiseAbs().sum() : change.cwiseAbs().maxCoeff();
  const Mdp poisoned = dataset.estimate(out.rewards, discount);
  out.q = policy_q_values(poisoned, target);
  out.min_margin = kInf;
  for (Index s = 0; s < n; ++s) {
    for (Index a = 0; a < m; ++a) {
      if (a != target[s]) out.min_margin = std::min(out.min_margin, out.q(s, target[s]) - out.q(s, a));
    }
  }
  return out;
}

VectorXd stationary_distribution(const MatrixXd& p) {
  const Index n = p.rows();
  if (n == 0 || p.cols() != n) throw ValidationError("stationary_distribution: expected a square matrix");
  for (Index i = 0; i < n; ++i) {
    if ((p.row(i).array() < 0.0).any() || std::abs(p.row(i).sum() - 1.0) > 1e-9) {
      throw ValidationError("stationary_distribution: row " + std::to_string(i) + " is not a distribution");
    }
  }
  // Reachability closure on the support graph.
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> reach(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) reach(i, j) = i == j || p(i, j) > 0.0;
  }
  for (Index k = 0; k < n; ++k) {
    for (Index i = 0; i < n; ++i) {
      if (!reach(i, k)) continue;
      for (Index j = 0; j < n; ++j) reach(i, j) = reach(i, j) || reach(k, j);
    }
  }
  std::vector<Index> class_of(static_cast<std::size_t>(n), -1);
  std::vector<std::vector<Index>> closed;
  for (Index i = 0; i < n; ++i) {
    bool recurrent = true;
    for (Index j = 0; j < n && recurrent; ++j) recurrent = !reach(i, j) || reach(j, i);
    if (!recurrent || class_of[static_cast<std::size_t>(i)] >= 0) continue;
    std::vector<Index> members;
    for (Index j = 0; j < n; ++j) {
      if (reach(i, j)) {
        members.push_back(j);
        class_of[static_cast<std::size_t>(j)] = static_cast<Index>(closed.size());
      }
    }
    closed.push_back(std::move(members));
  }
  if (closed.size() != 1) {
    std::string what = "stationary_distribution: " + std::to_string(closed.size()) + " closed classes";
    for (const auto& c : closed) what += " {" + state_list(c) + "}";
    throw ValidationError(what + "; the stationary distribution is not unique");
  }
  MatrixXd system = p.transpose() - MatrixXd::Identity(n, n);
  system.row(n - 1).setOnes();
  VectorXd rhs = VectorXd::Zero(n);
  rhs[n - 1] = 1.0;
  VectorXd mu = Eigen::FullPivLU<MatrixXd>(system).solve(rhs);
  if ((mu.array() < -1e-12).any() || !mu.allFinite()) {
    throw NumericalError("stationary_distribution: linear solve produced negative mass");
  }
  mu = mu.cwiseMax(0.0);
  mu /= mu.sum();
  if ((p.transpose() * mu - mu).cwiseAbs().maxCoeff() > 1e-10) {
    throw NumericalError("stationary_distribution: balance residual above 1e-10");
  }
  return mu;
}

VectorXd stationary_distribution(const Mdp& mdp, const Policy& pi) {
  validate_policy(mdp, pi);
  return stationary_distribution(policy_transition(mdp, pi));
}

void EnvPoisonSpec::validate(const Mdp& mdp) const {
  validate_policy(mdp, target);
  if (!(margin > 0.0) || !std::isfinite(margin)) throw ValidationError("spec.margin: must be positive");
  if (!(floor > 0.0 && floor <= 1.0)) throw ValidationError("spec.floor: must lie in (0, 1]");
  if (!(norm_order >= 1.0) || !std::isfinite(norm_order)) {
    throw ValidationError("spec.norm_order: must be a finite number >= 1");
  }
}

MatrixXd reward_signal(const Mdp& mdp) { return -cost_sign(mdp) * mdp.cost; }

double average_reward(const Mdp& mdp, const Policy& pi) {
  const VectorXd mu = stationary_distribution(mdp, pi);
  const MatrixXd r = reward_signal(mdp);
  double g = 0.0;
  for (Index s = 0; s < mdp.num_states(); ++s) g += mu[s] * r(s, pi[s]);
  return g;
}

NeighborMargins neighbor_margins(const Mdp& mdp, const Policy& target) {
  const double g = average_reward(mdp, target);
  NeighborMargins out;
  out.margins = MatrixXd::Zero(mdp.num_states(), mdp.num_actions());
  out.min_margin = kInf;
  for (Index s = 0; s < mdp.num_states(); ++s) {
    for (Index a = 0; a < mdp.num_actions(); ++a) {
      if (a == target[s]) continue;
      out.margins(s, a) = g - average_reward(mdp, neighbor(target, s, a));
      out.min_margin = std::min(out.min_margin, out.margins(s, a));
    }
  }
  return out;
}

double transition_distance(const Mdp& a, const Mdp& b, double rho) {
  double total = 0.0;
  for (std::size_t k = 0; k < a.transition.size(); ++k) {
    const VectorXd mass = (a.transition[k] - b.transition[k]).cwiseAbs().rowwise().sum();
    total += mass.array().pow(rho).sum();
  }
  return std::pow(total, 1.0 / rho);
}

namespace {

// Gradient of the average reward of pi with respect to the entries
// P(i, j, pi(i)): mu(i) h(j), h the bias vector.
struct GainGradient {
  double gain = 0.0;
  VectorXd mu;
  VectorXd bias;
};

GainGradient gain_gradient(const Mdp& mdp, const Policy& pi) {
  const Index n = mdp.num_states();
  const MatrixXd p = policy_transition(mdp, pi);
  GainGradient out;
  out.mu = stationary_distribution(p);
  const MatrixXd r = reward_signal(mdp);
  VectorXd r_pi(n);
  for (Index s = 0; s < n; ++s) r_pi[s] = r(s, pi[s]);
  out.gain = out.mu.dot(r_pi);
  const MatrixXd fundamental = MatrixXd::Identity(n, n) - p + VectorXd::Ones(n) * out.mu.transpose();
  out.bias = Eigen::FullPivLU<MatrixXd>(fundamental).solve(r_pi - out.gain * VectorXd::Ones(n));
  return out;
}

struct PoisonPoint {
  Mdp mdp;
  double cost = 0.0;
  NeighborMargins margins;
  double merit = 0.0;
};

}  // namespace

EnvPoisonResult env_poison_search(const Mdp& mdp, const EnvPoisonSpec& spec, int budget) {
  mdp.validate();
  spec.validate(mdp);
  if (budget < 0) throw ValidationError("budget: must be non-negative");
  const Index n = mdp.num_states(), m = mdp.num_actions();
  const Policy& target = spec.target;
  const double r_scale = std::max(1e-12, reward_signal(mdp).cwiseAbs().maxCoeff());
  // Linearization error near convergence must not leave points just short
  // of the margin.
  const double goal = spec.margin + 1e-7 * r_scale;
  const double penalty = 1e3 / r_scale;

  auto evaluate = [&](Mdp candidate) {
    PoisonPoint pt;
    pt.cost = transition_distance(mdp, candidate, spec.norm_order);
    pt.margins = neighbor_margins(candidate, target);
    double violation = 0.0;
    for (Index s = 0; s < n; ++s) {
      for (Index a = 0; a < m; ++a) {
        if (a != target[s]) violation += std::max(0.0, goal - pt.margins.margins(s, a));
      }
    }
    pt.merit = pt.cost + penalty * violation;
    pt.mdp = std::move(candidate);
    return pt;
  };
  auto feasible = [&](const PoisonPoint& pt) { return pt.margins.min_margin >= spec.margin; };

  EnvPoisonResult best;
  PoisonPoint current = evaluate(mdp);
  if (feasible(current) || m == 1) {
    best.poisoned = mdp;
    best.feasible = true;
    best.min_margin = current.margins.min_margin;
    return best;
  }
  best.poisoned = mdp;
  best.cost = kInf;
  best.min_margin = current.margins.min_margin;

  // Columns: up/down moves for entry (i, b, j), then one elastic slack per
  // off-target pair.
  const Index entries = n * m * n;
  auto entry = [&](Index i, Index b, Index j) { return (i * m + b) * n + j; };
  std::vector<std::pair<Index, Index>> pairs;
  for (Index s = 0; s < n; ++s) {
    for (Index a = 0; a < m; ++a) {
      if (a != target[s]) pairs.emplace_back(s, a);
    }
  }
  const auto num_pairs = static_cast<Index>(pairs.size());
  const Index cols = 2 * entries + num_pairs;
  VectorXd up_cap(entries), down_cap(entries), base(entries);
  for (Index i = 0; i < n; ++i) {
    for (Index b = 0; b < m; ++b) {
      for (Index j = 0; j < n; ++j) {
        const double pij = mdp.transition[static_cast<std::size_t>(b)](i, j);
        base[entry(i, b, j)] = pij;
        up_cap[entry(i, b, j)] = 1.0 - pij;
        down_cap[entry(i, b, j)] = (1.0 - spec.floor) * pij;
      }
    }
  }
  VectorXd up = VectorXd::Zero(entries), down = VectorXd::Zero(entries);
  double radius = 0.1;
  int it = 0;
  for (; it < budget && radius > 1e-10; ++it) {
    // Linearized margins: g(target) - g(neighbor) at the current point.
    const GainGradient g_target = gain_gradient(current.mdp, target);
    MatrixXd grad(num_pairs, entries);
    grad.setZero();
    for (Index c = 0; c < num_pairs; ++c) {
      const auto [s, a] = pairs[static_cast<std::size_t>(c)];
      const GainGradient g_nb = gain_gradient(current.mdp, neighbor(target, s, a));
      for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
          grad(c, entry(i, target[i], j)) += g_target.mu[i] * g_target.bias[j];
          const Index nb_action = i == s ? a : target[i];
          grad(c, entry(i, nb_action, j)) -= g_nb.mu[i] * g_nb.bias[j];
        }
      }
    }
    LpProblem lp = LpProblem::with_variables(cols);
    lp.lower = VectorXd::Zero(cols);
    lp.upper = VectorXd::Constant(cols, kInf);
    for (Index e = 0; e < entries; ++e) {
      lp.objective[e] = lp.objective[entries + e] = 1.0;
      lp.lower[e] = std::max(0.0, up[e] - radius);
      lp.upper[e] = std::min(up_cap[e], up[e] + radius);
      lp.lower[entries + e] = std::max(0.0, down[e] - radius);
      lp.upper[entries + e] = std::min(down_cap[e], down[e] + radius);
      lp.lower[e] = std::min(lp.lower[e], lp.upper[e]);
      lp.lower[entries + e] = std::min(lp.lower[entries + e], lp.upper[entries + e]);
    }
    lp.objective.tail(num_pairs).setConstant(penalty);
    for (Index i = 0; i < n; ++i) {
      for (Index b = 0; b < m; ++b) {
        RowVectorXd row = RowVectorXd::Zero(cols);
        for (Index j = 0; j < n; ++j) {
          row[entry(i, b, j)] = 1.0;
          row[entries + entry(i, b, j)] = -1.0;
        }
        lp.add_equal(row, 0.0);
      }
    }
    const VectorXd shift = up - down;
    for (Index c = 0; c < num_pairs; ++c) {
      const auto [s, a] = pairs[static_cast<std::size_t>(c)];
      RowVectorXd row = RowVectorXd::Zero(cols);
      row.head(entries) = grad.row(c);
      row.segment(entries, entries) = -grad.row(c);
      row[2 * entries + c] = 1.0;
      lp.add_greater_equal(row, goal - current.margins.margins(s, a) + grad.row(c).dot(shift));
    }
    const LpSolution sol = solve_lp(lp);
    if (sol.status != LpStatus::kOptimal) {
      radius *= 0.25;
      continue;
    }
    VectorXd next_up = sol.x.head(entries), next_down = sol.x.segment(entries, entries);
    Mdp candidate = mdp;
    for (Index i = 0; i < n; ++i) {
      for (Index b = 0; b < m; ++b) {
        auto& row = candidate.transition[static_cast<std::size_t>(b)];
        for (Index j = 0; j < n; ++j) {
          const Index e = entry(i, b, j);
          row(i, j) = std::max(spec.floor * base[e], base[e] + next_up[e] - next_down[e]);
        }
        row.row(i) /= row.row(i).sum();
      }
    }
    PoisonPoint trial = evaluate(std::move(candidate));
    if (trial.merit < current.merit - 1e-15) {
      const double step = std::max((next_up - up).cwiseAbs().maxCoeff(), (next_down - down).cwiseAbs().maxCoeff());
      if (step >= 0.5 * radius) radius = std::min(1.0, 2.0 * radius);
      current = std::move(trial);
      up = next_up;
      down = next_down;
      if (feasible(current) && current.cost < best.cost) {
        best.poisoned = current.mdp;
        best.cost = current.cost;
        best.feasible = true;
        best.min_margin = current.margins.min_margin;
      }
    } else {
      radius *= 0.25;
    }
  }
  best.iterations = it;
  if (!best.feasible) {
    best.cost = current.cost;
    best.poisoned = current.mdp;
    best.min_margin = current.margins.min_margin;
  }
  return best;
}

LearningSchedule default_victim_schedule() {
  LearningSchedule s;
  s.rate = HarmonicVisitRate{10.0};
  s.exploration = 1.0;
  s.max_steps = 200000;
  return s;
}

namespace {

AttackResult judge(const QTable& q, const Policy& target, double attack_cost) {
  AttackResult out;
  out.attack_cost = attack_cost;
  out.victim_policy = greedy_policy(q);
  out.success = out.victim_policy == target;
  const double sign = q.objective == Objective::kMinimizeCost ? 1.0 : -1.0;
  out.margins = VectorXd::Constant(q.values.rows(), kInf);
  for (Index s = 0; s < q.values.rows(); ++s) {
    for (Index a = 0; a < q.values.cols(); ++a) {
      if (a == target[s]) continue;
      out.margins[s] = std::min(out.margins[s], sign * (q.values(s, a) - q.values(s, target[s])));
    }
  }
  return out;
}

}  // namespace

AttackResult run_poisoned_victim(const Mdp& poisoned, const Policy& target, double attack_cost,
                                 VictimKind victim, std::uint64_t seed, const LearningSchedule& schedule) {
  validate_policy(poisoned, target);
  const QTable q =
      victim == VictimKind::kExactSolver ? exact_q_values(poisoned) : q_learning_run(poisoned, schedule, seed);
  return judge(q, target, attack_cost);
}

AttackResult run_poisoned_victim(const PoisonDataset& dataset, const VectorXd& rewards, double discount,
                                 const Policy& target, double attack_cost) {
  const Mdp model = dataset.estimate(rewards, discount);
  validate_policy(model, target);
  return judge(exact_q_values(model), target, attack_cost);
}

CostPerturbation perturbation_from_json(const Json& value, const Mdp& mdp, const std::string& path) {
  ObjectReader in(value, path);
  CostPerturbation out;
  out.original = in.has("original") ? as_matrix(in.at("original"), in.field("original")) : mdp.cost;
  out.manipulated = as_matrix(in.at("manipulated"), in.field("manipulated"));
  if (out.original.rows() != mdp.num_states() || out.original.cols() != mdp.num_actions() ||
      out.manipulated.rows() != mdp.num_states() || out.manipulated.cols() != mdp.num_actions()) {
    fail_field(path, "cost matrices must be " + std::to_string(mdp.num_states()) + "x" +
                         std::to_string(mdp.num_actions()));
  }
  if (const Json* states = in.find("attackable")) {
    for (int s : as_indices(*states, in.field("attackable"))) out.attackable.push_back(s);
  } else {
    for (Index s = 0; s < mdp.num_states(); ++s) out.attackable.push_back(s);
  }
  std::sort(out.attackable.begin(), out.attackable.end());
  if (const Json* b = in.find("bound")) out.bound = as_number(*b, in.field("bound"));
  out.norm = norm_from_string(in.string_or("norm", "sup"), in.field("norm"));
  in.finish();
  out.validate();
  return out;
}

EnvPoisonSpec env_poison_spec_from_json(const Json& value, const Mdp& mdp, const std::string& path) {
  ObjectReader in(value, path);
  EnvPoisonSpec spec;
  spec.target = policy_from_json(in.at("target"), in.field("target"));
  spec.margin = in.number("margin");
  spec.floor = in.number_or("floor", spec.floor);
  spec.norm_order = in.number_or("norm_order", spec.norm_order);
  in.finish();
  spec.validate(mdp);
  return spec;
}

Json to_json(const AttackResult& result) {
  Json margins = Json::array();
  for (Index s = 0; s < result.margins.size(); ++s) {
    if (std::isfinite(result.margins[s])) {
      margins.push_back(result.margins[s]);
    } else {
      margins.push_back(nullptr);
    }
  }
  return Json{{"success", result.success},
              {"attack_cost", result.attack_cost},
              {"victim_policy", to_json(result.victim_policy)},
              {"margins", std::move(margins)}};
}

}  // namespace cyres
