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

#include "cyres/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/LU>

#include "cyres/error.hpp"

namespace cyres {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

// The problem rewritten over y >= 0 with x = offset + map * y and the rows
// A y (+ slack) = b, b >= 0.
struct StandardForm {
  VectorXd offset;
  MatrixXd map;
  MatrixXd a;         // rows x (structural + slack) columns
  VectorXd b;
  VectorXd cost;      // minimization costs over the columns of `a`
  Index structural = 0;
  std::vector<Index> initial_basis;  // -1 where an artificial is needed
};

StandardForm standardize(const LpProblem& p) {
  const Index n = p.num_variables();
  const VectorXd lower = p.lower.size() ? p.lower : VectorXd::Zero(n);
  const VectorXd upper = p.upper.size() ? p.upper : VectorXd::Constant(n, kInf);

  StandardForm sf;
  sf.offset = VectorXd::Zero(n);
  std::vector<std::pair<Index, double>> columns;  // (variable, sign)
  std::vector<std::pair<Index, double>> box;      // (column, width)
  for (Index j = 0; j < n; ++j) {
    if (std::isfinite(lower[j])) {
      sf.offset[j] = lower[j];
      if (std::isfinite(upper[j])) box.emplace_back(static_cast<Index>(columns.size()), upper[j] - lower[j]);
      columns.emplace_back(j, 1.0);
    } else if (std::isfinite(upper[j])) {
      sf.offset[j] = upper[j];
      columns.emplace_back(j, -1.0);
    } else {
      columns.emplace_back(j, 1.0);
      columns.emplace_back(j, -1.0);
    }
  }
  const auto ny = static_cast<Index>(columns.size());
  sf.map = MatrixXd::Zero(n, ny);
  for (Index k = 0; k < ny; ++k) sf.map(columns[k].first, k) = columns[k].second;

  const Index n_ub = p.a_ub.rows();
  const auto n_box = static_cast<Index>(box.size());
  const Index n_eq = p.a_eq.rows();
  const Index rows = n_ub + n_box + n_eq;
  const Index slacks = n_ub + n_box;
  sf.structural = ny;
  sf.a = MatrixXd::Zero(rows, ny + slacks);
  sf.b = VectorXd::Zero(rows);
  if (n_ub) {
    sf.a.topLeftCorner(n_ub, ny) = p.a_ub * sf.map;
    sf.b.head(n_ub) = p.b_ub - p.a_ub * sf.offset;
  }
  for (Index k = 0; k < n_box; ++k) {
    sf.a(n_ub + k, box[k].first) = 1.0;
    sf.b[n_ub + k] = box[k].second;
  }
  if (n_eq) {
    sf.a.bottomLeftCorner(n_eq, ny) = p.a_eq * sf.map;
    sf.b.tail(n_eq) = p.b_eq - p.a_eq * sf.offset;
  }
  for (Index i = 0; i < slacks; ++i) sf.a(i, ny + i) = 1.0;

  sf.initial_basis.assign(static_cast<std::size_t>(rows), -1);
  for (Index i = 0; i < rows; ++i) {
    if (sf.b[i] < 0.0) {
      sf.a.row(i) *= -1.0;
      sf.b[i] = -sf.b[i];
    } else if (i < slacks) {
      sf.initial_basis[static_cast<std::size_t>(i)] = ny + i;
    }
  }

  const double flip = p.sense == LpSense::kMaximize ? -1.0 : 1.0;
  sf.cost = VectorXd::Zero(ny + slacks);
  sf.cost.head(ny) = flip * (sf.map.transpose() * p.objective);
  return sf;
}

// Dense tableau: rows 0..m-1 hold B^-1 [A | b], row m holds reduced costs and
// the negated objective in its last entry.
class Tableau {
 public:
  Tableau(MatrixXd t, std::vector<Index> basis, const LpOptions& options)
      : t_(std::move(t)), basis_(std::move(basis)), options_(options) {}

  Index rows() const { return t_.rows() - 1; }
  Index rhs_col() const { return t_.cols() - 1; }
  MatrixXd& data() { return t_; }
  std::vector<Index>& basis() { return basis_; }

  void set_costs(const VectorXd& cost) {
    t_.row(rows()).setZero();
    t_.row(rows()).head(cost.size()) = cost.transpose();
    for (Index i = 0; i < rows(); ++i) {
      const double cb = basis_[static_cast<std::size_t>(i)] < cost.size()
                            ? cost[basis_[static_cast<std::size_t>(i)]]
                            : 0.0;
      if (cb != 0.0) t_.row(rows()) -= cb * t_.row(i);
    }
  }

  void pivot(Index r, Index c) {
    t_.row(r) /= t_(r, c);
    for (Index i = 0; i <= rows(); ++i) {
      if (i != r && t_(i, c) != 0.0) {
        t_.row(i) -= t_(i, c) * t_.row(r);
        t_(i, c) = 0.0;
      }
    }
    t_(r, c) = 1.0;
    basis_[static_cast<std::size_t>(r)] = c;
  }

  // Bland's rule over columns [0, allowed). Returns false when unbounded.
  bool optimize(Index allowed, int& iterations) {
    const double scale = 1.0 + t_.row(rows()).head(allowed).cwiseAbs().maxCoeff();
    const double dj_tol = 1e-10 * scale;
    for (;;) {
      Index enter = -1;
      for (Index j = 0; j < allowed; ++j) {
        if (t_(rows(), j) < -dj_tol) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;
      Index leave = -1;
      double best = kInf;
      for (Index i = 0; i < rows(); ++i) {
        const double a = t_(i, enter);
        if (a <= options_.pivot_tol) continue;
        const double ratio = std::max(t_(i, rhs_col()), 0.0) / a;
        const double slack = 1e-12 * (1.0 + std::abs(best));
        if (leave < 0 || ratio < best - slack ||
            (ratio <= best + slack && basis_[static_cast<std::size_t>(i)] <
                                          basis_[static_cast<std::size_t>(leave)])) {
          leave = i;
          best = std::min(best, ratio);
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
      if (++iterations > options_.max_iterations) {
        throw NumericalError("solve_lp: iteration limit reached (cycling or ill-conditioning)");
      }
    }
  }

 private:
  MatrixXd t_;
  std::vector<Index> basis_;
  LpOptions options_;
};

double violation(const LpProblem& p, const VectorXd& x) {
  double worst = 0.0;
  if (p.a_ub.rows()) worst = std::max(worst, (p.a_ub * x - p.b_ub).maxCoeff());
  if (p.a_eq.rows()) worst = std::max(worst, (p.a_eq * x - p.b_eq).cwiseAbs().maxCoeff());
  const Index n = p.num_variables();
  for (Index j = 0; j < n; ++j) {
    const double lo = p.lower.size() ? p.lower[j] : 0.0;
    const double hi = p.upper.size() ? p.upper[j] : kInf;
    worst = std::max({worst, lo - x[j], x[j] - hi});
  }
  return worst;
}

}  // namespace

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::kOptimal:
      return "optimal";
    case LpStatus::kInfeasible:
      return "infeasible";
    case LpStatus::kUnbounded:
      return "unbounded";
  }
  return "unknown";
}

LpProblem LpProblem::with_variables(Index n, LpSense sense) {
  LpProblem p;
  p.objective = VectorXd::Zero(n);
  p.sense = sense;
  p.a_ub.resize(0, n);
  p.a_eq.resize(0, n);
  return p;
}

namespace {
void append_row(MatrixXd& a, VectorXd& b, const Eigen::Ref<const Eigen::RowVectorXd>& row,
                double rhs, Index n) {
  if (row.size() != n) throw ValidationError("lp: constraint row has wrong length");
  if (a.cols() != n) a.resize(0, n);
  a.conservativeResize(a.rows() + 1, n);
  a.row(a.rows() - 1) = row;
  b.conservativeResize(b.size() + 1);
  b[b.size() - 1] = rhs;
}
}  // namespace

void LpProblem::add_less_equal(const Eigen::Ref<const Eigen::RowVectorXd>& row, double rhs) {
  append_row(a_ub, b_ub, row, rhs, num_variables());
}

void LpProblem::add_greater_equal(const Eigen::Ref<const Eigen::RowVectorXd>& row, double rhs) {
  append_row(a_ub, b_ub, -row, -rhs, num_variables());
}

void LpProblem::add_equal(const Eigen::Ref<const Eigen::RowVectorXd>& row, double rhs) {
  append_row(a_eq, b_eq, row, rhs, num_variables());
}

void LpProblem::validate() const {
  const Index n = num_variables();
  if (n < 1) throw ValidationError("lp: no variables");
  if (!objective.allFinite()) throw ValidationError("lp: objective must be finite");
  if (a_ub.rows() && a_ub.cols() != n) throw ValidationError("lp: a_ub has wrong width");
  if (a_eq.rows() && a_eq.cols() != n) throw ValidationError("lp: a_eq has wrong width");
  if (a_ub.rows() != b_ub.size()) throw ValidationError("lp: a_ub and b_ub disagree");
  if (a_eq.rows() != b_eq.size()) throw ValidationError("lp: a_eq and b_eq disagree");
  if (!a_ub.allFinite() || !b_ub.allFinite() || !a_eq.allFinite() || !b_eq.allFinite()) {
    throw ValidationError("lp: constraint data must be finite");
  }
  if (lower.size() && lower.size() != n) throw ValidationError("lp: lower has wrong length");
  if (upper.size() && upper.size() != n) throw ValidationError("lp: upper has wrong length");
  for (Index j = 0; j < n; ++j) {
    const double lo = lower.size() ? lower[j] : 0.0;
    const double hi = upper.size() ? upper[j] : kInf;
    if (std::isnan(lo) || std::isnan(hi) || lo > hi || lo == kInf || hi == -kInf) {
      throw ValidationError("lp: bad bounds on variable " + std::to_string(j));
    }
  }
}

LpSolution solve_lp(const LpProblem& problem, const LpOptions& options) {
  problem.validate();
  const StandardForm sf = standardize(problem);
  const Index m = sf.a.rows();
  const Index cols = sf.a.cols();

  std::vector<Index> artificial_rows;
  for (Index i = 0; i < m; ++i) {
    if (sf.initial_basis[static_cast<std::size_t>(i)] < 0) artificial_rows.push_back(i);
  }
  const auto n_art = static_cast<Index>(artificial_rows.size());

  MatrixXd t = MatrixXd::Zero(m + 1, cols + n_art + 1);
  t.topLeftCorner(m, cols) = sf.a;
  t.block(0, cols + n_art, m, 1) = sf.b;
  std::vector<Index> basis = sf.initial_basis;
  for (Index k = 0; k < n_art; ++k) {
    t(artificial_rows[k], cols + k) = 1.0;
    basis[static_cast<std::size_t>(artificial_rows[k])] = cols + k;
  }
  Tableau tab(std::move(t), std::move(basis), options);
  LpSolution out;

  const double b_scale = 1.0 + (m ? sf.b.cwiseAbs().maxCoeff() : 0.0);
  if (n_art) {
    VectorXd phase1 = VectorXd::Zero(cols + n_art);
    phase1.tail(n_art).setOnes();
    tab.set_costs(phase1);
    tab.optimize(cols + n_art, out.iterations);
    const double infeasibility = -tab.data()(m, tab.rhs_col());
    if (infeasibility > options.feasibility_tol * b_scale) {
      out.status = LpStatus::kInfeasible;
      return out;
    }
    // Drive remaining artificials out of the basis; rows where that is
    // impossible are redundant and are dropped.
    std::vector<Index> keep;
    for (Index i = 0; i < m; ++i) {
      if (tab.basis()[static_cast<std::size_t>(i)] >= cols) {
        Index c = -1;
        for (Index j = 0; j < cols; ++j) {
          if (std::abs(tab.data()(i, j)) > 1e-9) {
            c = j;
            break;
          }
        }
        if (c < 0) continue;
        tab.pivot(i, c);
      }
      keep.push_back(i);
    }
    if (static_cast<Index>(keep.size()) < m) {
      MatrixXd reduced(static_cast<Index>(keep.size()) + 1, tab.data().cols());
      std::vector<Index> reduced_basis;
      for (std::size_t k = 0; k < keep.size(); ++k) {
        reduced.row(static_cast<Index>(k)) = tab.data().row(keep[k]);
        reduced_basis.push_back(tab.basis()[static_cast<std::size_t>(keep[k])]);
      }
      reduced.row(reduced.rows() - 1).setZero();
      tab = Tableau(std::move(reduced), std::move(reduced_basis), options);
    }
    // Artificial columns stay in the tableau but never re-enter.
    for (Index k = 0; k < n_art; ++k) {
      tab.data().col(cols + k).setZero();
    }
  }

  tab.set_costs(sf.cost);
  if (!tab.optimize(cols, out.iterations)) {
    out.status = LpStatus::kUnbounded;
    return out;
  }

  // Polish: recompute the basic values from the original rows.
  const Index r = tab.rows();
  VectorXd y_all = VectorXd::Zero(cols);
  {
    // With redundant rows dropped the basis is m x r; FullPivLU still solves
    // the consistent system.
    MatrixXd basis_cols(m, r);
    for (Index k = 0; k < r; ++k) basis_cols.col(k) = sf.a.col(tab.basis()[static_cast<std::size_t>(k)]);
    VectorXd xb;
    if (r == m) {
      Eigen::PartialPivLU<MatrixXd> lu(basis_cols);
      xb = lu.solve(sf.b);
      out.basis_condition = 1.0 / std::max(lu.rcond(), 1e-300);
    } else {
      Eigen::FullPivLU<MatrixXd> lu(basis_cols);
      xb = lu.solve(sf.b);
      out.basis_condition = 1.0 / std::max(lu.rcond(), 1e-300);
    }
    const VectorXd tableau_xb = tab.data().col(tab.rhs_col()).head(r);
    const bool polished_ok = xb.allFinite() && (xb - tableau_xb).cwiseAbs().maxCoeff() <=
                                                   1e-6 * (1.0 + tableau_xb.cwiseAbs().maxCoeff());
    const VectorXd& use = polished_ok ? xb : tableau_xb;
    for (Index k = 0; k < r; ++k) {
      y_all[tab.basis()[static_cast<std::size_t>(k)]] = std::max(use[k], 0.0);
    }
  }
  out.x = sf.offset + sf.map * y_all.head(sf.structural);
  out.objective = problem.objective.dot(out.x);
  out.max_violation = violation(problem, out.x);
  out.status = LpStatus::kOptimal;
  if (!out.x.allFinite()) throw NumericalError("solve_lp: non-finite solution");
  return out;
}

}  // namespace cyres
