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

#ifndef CYRES_LP_HPP_
#define CYRES_LP_HPP_

// Small dense linear programs.
//
//   minimize (or maximize)  c^T x
//   subject to              A_ub x <= b_ub
//                           A_eq x  = b_eq
//                           lower <= x <= upper
//
// Bounds may be infinite. Solved by a two-phase tableau simplex with Bland's
// pivoting rule; the final basic solution is re-solved from the original data
// with an LU factorization to strip accumulated pivot round-off.

#include <string>

#include <Eigen/Core>

namespace cyres {

enum class LpSense { kMinimize, kMaximize };
enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

const char* to_string(LpStatus status);

struct LpProblem {
  Eigen::VectorXd objective;
  LpSense sense = LpSense::kMinimize;
  Eigen::MatrixXd a_ub;
  Eigen::VectorXd b_ub;
  Eigen::MatrixXd a_eq;
  Eigen::VectorXd b_eq;
  Eigen::VectorXd lower;  // empty means all zero
  Eigen::VectorXd upper;  // empty means all +infinity

  // An LP over n variables with x >= 0 and no constraints yet.
  static LpProblem with_variables(Eigen::Index n, LpSense sense = LpSense::kMinimize);

  Eigen::Index num_variables() const { return objective.size(); }

  // Appends one row; `row` must have num_variables() entries.
  void add_less_equal(const Eigen::Ref<const Eigen::RowVectorXd>& row, double rhs);
  void add_greater_equal(const Eigen::Ref<const Eigen::RowVectorXd>& row, double rhs);
  void add_equal(const Eigen::Ref<const Eigen::RowVectorXd>& row, double rhs);

  // Throws ValidationError on inconsistent dimensions or bounds.
  void validate() const;
};

struct LpSolution {
  LpStatus status = LpStatus::kInfeasible;
  Eigen::VectorXd x;
  double objective = 0.0;
  int iterations = 0;
  // Largest violation of any constraint or bound at x.
  double max_violation = 0.0;
  // Estimated 1-norm condition number of the final basis matrix.
  double basis_condition = 0.0;
};

struct LpOptions {
  double feasibility_tol = 1e-9;
  double pivot_tol = 1e-11;
  int max_iterations = 200000;
};

// Never throws on infeasible or unbounded programs; those come back as a
// status. Throws NumericalError when pivoting breaks down.
LpSolution solve_lp(const LpProblem& problem, const LpOptions& options = {});

}  // namespace cyres

#endif  // CYRES_LP_HPP_
