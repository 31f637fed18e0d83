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

#include "cyres/matrix_game.hpp"

#include <cmath>
#include <sstream>

#include "cyres/error.hpp"
#include "cyres/lp.hpp"

namespace cyres {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void check_sizes(const MatrixGame& game, const MixedStrategy& f, const MixedStrategy& g) {
  if (f.size() != game.rows() || g.size() != game.cols()) {
    throw ValidationError("strategy dimensions do not match the game");
  }
}

// Normalizes an LP solution onto the simplex.
VectorXd to_simplex(const VectorXd& u) {
  VectorXd p = u.cwiseMax(0.0);
  return p / p.sum();
}

}  // namespace

MixedStrategy::MixedStrategy(VectorXd probs, const std::string& what) : probs_(std::move(probs)) {
  if (probs_.size() < 1) throw ValidationError(what + ": empty");
  if (!probs_.allFinite() || (probs_.array() < 0.0).any()) {
    throw ValidationError(what + ": entries must be finite and non-negative");
  }
  if (std::abs(probs_.sum() - 1.0) > 1e-12) {
    throw ValidationError(what + ": probabilities sum to " + std::to_string(probs_.sum()));
  }
}

MixedStrategy MixedStrategy::uniform(Index n) {
  return MixedStrategy(VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
}

MixedStrategy MixedStrategy::pure(Index n, Index i) {
  VectorXd p = VectorXd::Zero(n);
  p[i] = 1.0;
  return MixedStrategy(std::move(p));
}

void MatrixGame::validate() const {
  if (rows() < 1 || cols() < 1) throw ValidationError("game.cost: needs at least one row and column");
  if (!cost.allFinite()) throw ValidationError("game.cost: entries must be finite");
}

double expected_cost(const MatrixGame& game, const MixedStrategy& f, const MixedStrategy& g) {
  check_sizes(game, f, g);
  return expected_cost(game.cost, f.probs(), g.probs());
}

double exploitability(const MatrixGame& game, const MixedStrategy& f, const MixedStrategy& g) {
  check_sizes(game, f, g);
  return exploitability(game.cost, f.probs(), g.probs());
}

SpeSolution solve_spe(const MatrixGame& game, double tol) {
  game.validate();
  if (!(tol > 0.0)) throw ValidationError("tol: must be positive");
  const Index m = game.rows();
  const Index n = game.cols();
  const double shift = 1.0 - game.cost.minCoeff();
  const MatrixXd b = game.cost.array() + shift;

  // Defender: max 1^T u  s.t.  B^T u <= 1, u >= 0; value = 1 / sum(u).
  LpProblem defender = LpProblem::with_variables(m, LpSense::kMaximize);
  defender.objective.setOnes();
  defender.a_ub = b.transpose();
  defender.b_ub = VectorXd::Ones(n);
  // Attacker: min 1^T w  s.t.  B w >= 1, w >= 0; value = 1 / sum(w).
  LpProblem attacker = LpProblem::with_variables(n, LpSense::kMinimize);
  attacker.objective.setOnes();
  attacker.a_ub = -b;
  attacker.b_ub = -VectorXd::Ones(m);

  const LpSolution du = solve_lp(defender);
  const LpSolution aw = solve_lp(attacker);
  if (du.status != LpStatus::kOptimal || aw.status != LpStatus::kOptimal) {
    throw NumericalError(std::string("solve_spe: minimax program returned ") +
                         to_string(du.status) + "/" + to_string(aw.status));
  }

  SpeSolution out;
  out.defender = MixedStrategy(to_simplex(du.x), "defender");
  out.attacker = MixedStrategy(to_simplex(aw.x), "attacker");
  out.value = 1.0 / du.x.sum() - shift;
  out.maximin_value = 1.0 / aw.x.sum() - shift;
  out.basis_condition = std::max(du.basis_condition, aw.basis_condition);

  const double best_attack = (game.cost.transpose() * out.defender.probs()).maxCoeff();
  const double best_defense = (game.cost * out.attacker.probs()).minCoeff();
  const double scale = 1.0 + game.cost.cwiseAbs().maxCoeff();
  if (best_attack > out.value + tol * scale || best_defense < out.value - tol * scale) {
    std::ostringstream msg;
    msg << "solve_spe: saddle check failed (attacker gain " << best_attack - out.value
        << ", defender gain " << out.value - best_defense << ", basis condition "
        << out.basis_condition << ")";
    throw NumericalError(msg.str());
  }
  return out;
}

MatrixGame game_from_json(const Json& value, const std::string& path) {
  ObjectReader in(value, path);
  MatrixGame game{as_matrix(in.at("cost"), in.field("cost"))};
  in.finish();
  if (game.rows() < 1 || game.cols() < 1) fail_field(in.field("cost"), "needs at least one entry");
  return game;
}

Json to_json(const SpeSolution& solution) {
  return {{"defender", vector_json(solution.defender.probs())},
          {"attacker", vector_json(solution.attacker.probs())},
          {"value", solution.value},
          {"maximin_value", solution.maximin_value}};
}

}  // namespace cyres
