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

#ifndef CYRES_MATRIX_GAME_HPP_
#define CYRES_MATRIX_GAME_HPP_

// Finite zero-sum games. The row player (defender) minimizes f^T A g, the
// column player (attacker) maximizes it.

#include <string>

#include <Eigen/Core>

#include "cyres/json_io.hpp"

namespace cyres {

// A probability vector. Construction checks non-negativity and unit mass.
class MixedStrategy {
 public:
  MixedStrategy() = default;
  explicit MixedStrategy(Eigen::VectorXd probs, const std::string& what = "strategy");

  static MixedStrategy uniform(Eigen::Index n);
  static MixedStrategy pure(Eigen::Index n, Eigen::Index i);

  const Eigen::VectorXd& probs() const { return probs_; }
  Eigen::Index size() const { return probs_.size(); }
  double operator[](Eigen::Index i) const { return probs_[i]; }

 private:
  Eigen::VectorXd probs_;
};

struct MatrixGame {
  Eigen::MatrixXd cost;

  Eigen::Index rows() const { return cost.rows(); }
  Eigen::Index cols() const { return cost.cols(); }
  void validate() const;
};

// f^T A g.
template <typename DerivedA, typename DerivedF, typename DerivedG>
typename DerivedA::Scalar expected_cost(const Eigen::MatrixBase<DerivedA>& a,
                                        const Eigen::MatrixBase<DerivedF>& f,
                                        const Eigen::MatrixBase<DerivedG>& g) {
  return f.dot(a * g);
}

// max_k (f^T A)_k - min_h (A g)_h, the sum of both players' best-response
// gains. Non-negative, zero exactly at a saddle point.
template <typename DerivedA, typename DerivedF, typename DerivedG>
typename DerivedA::Scalar exploitability(const Eigen::MatrixBase<DerivedA>& a,
                                         const Eigen::MatrixBase<DerivedF>& f,
                                         const Eigen::MatrixBase<DerivedG>& g) {
  return (a.transpose() * f).maxCoeff() - (a * g).minCoeff();
}

double expected_cost(const MatrixGame& game, const MixedStrategy& f, const MixedStrategy& g);
double exploitability(const MatrixGame& game, const MixedStrategy& f, const MixedStrategy& g);

struct SpeSolution {
  MixedStrategy defender;
  MixedStrategy attacker;
  double value = 0.0;          // min-max value from the defender's program
  double maximin_value = 0.0;  // max-min value from the attacker's program
  double basis_condition = 0.0;
};

// Saddle point via the two shifted minimax programs. Throws NumericalError
// when the returned pair misses either saddle inequality by more than tol.
SpeSolution solve_spe(const MatrixGame& game, double tol = 1e-9);

// {"cost": [[...], ...]}
MatrixGame game_from_json(const Json& value, const std::string& path = "game");
Json to_json(const SpeSolution& solution);

}  // namespace cyres

#endif  // CYRES_MATRIX_GAME_HPP_
