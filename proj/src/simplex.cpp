#include "pss/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace pss {

namespace {

// Full-tableau pivot: normalize the pivot row, eliminate the column elsewhere
// including the objective row (last row of the tableau).
void pivot(Eigen::MatrixXd& tab, std::vector<int>& basis, int row, int col) {
  tab.row(row) /= tab(row, col);
  for (Eigen::Index r = 0; r < tab.rows(); ++r) {
    if (r == row) continue;
    const double factor = tab(r, col);
    if (factor != 0.0) tab.row(r) -= factor * tab.row(row);
  }
  basis[static_cast<std::size_t>(row)] = col;
}

// Returns the entering column, or -1 at optimality. `limit` bounds the
// candidate columns (excludes artificials in phase 2).
int price(const Eigen::MatrixXd& tab, int limit, bool bland, double tol) {
  const Eigen::Index obj = tab.rows() - 1;
  int best = -1;
  double most_negative = -tol;
  for (int j = 0; j < limit; ++j) {
    const double rc = tab(obj, j);
    if (rc < -tol) {
      if (bland) return j;
      if (rc < most_negative) {
        most_negative = rc;
        best = j;
      }
    }
  }
  return best;
}

// Ratio test; returns the leaving row or -1 when the column is unbounded.
// Ties broken by smallest basis index (Bland-compatible).
int ratio_test(const Eigen::MatrixXd& tab, const std::vector<int>& basis, int col, double tol) {
  const Eigen::Index m = tab.rows() - 1;
  const Eigen::Index rhs = tab.cols() - 1;
  int row = -1;
  double best_ratio = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double a = tab(i, col);
    if (a > tol) {
      const double ratio = tab(i, rhs) / a;
      if (row < 0 || ratio < best_ratio - 1e-12 ||
          (ratio < best_ratio + 1e-12 && basis[i] < basis[static_cast<std::size_t>(row)])) {
        row = static_cast<int>(i);
        best_ratio = ratio;
      }
    }
  }
  return row;
}

struct PhaseResult {
  bool unbounded = false;
  int pivots = 0;
};

PhaseResult run_phase(Eigen::MatrixXd& tab, std::vector<int>& basis, int limit, double tol) {
  PhaseResult result;
  const Eigen::Index obj = tab.rows() - 1;
  const Eigen::Index rhs = tab.cols() - 1;
  bool bland = false;
  int stall = 0;
  double last_obj = tab(obj, rhs);
  const int max_iters = 20000 + 200 * static_cast<int>(tab.cols());

  while (true) {
    const int col = price(tab, limit, bland, tol);
    if (col < 0) return result;
    const int row = ratio_test(tab, basis, col, 1e-11);
    if (row < 0) {
      result.unbounded = true;
      return result;
    }
    pivot(tab, basis, row, col);
    ++result.pivots;

    const double cur = tab(obj, rhs);
    if (cur > last_obj - 1e-13) {
      if (++stall > 50) bland = true;  // anti-cycling
    } else {
      stall = 0;
    }
    last_obj = cur;
    if (result.pivots > max_iters) {
      throw std::runtime_error("solve_standard_form: iteration limit exceeded");
    }
  }
}

}  // namespace

LpSolution solve_standard_form(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                               const Eigen::VectorXd& c, double tol) {
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  if (b.size() != m || c.size() != n) {
    throw std::invalid_argument("solve_standard_form: dimension mismatch");
  }

  // Tableau layout: [A | I_artificial | rhs] with the phase objective in the
  // last row. Columns n..n+m-1 are artificials.
  Eigen::MatrixXd tab = Eigen::MatrixXd::Zero(m + 1, n + m + 1);
  tab.block(0, 0, m, n) = a;
  tab.block(0, n, m, m) = Eigen::MatrixXd::Identity(m, m);
  tab.block(0, n + m, m, 1) = b;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (tab(i, n + m) < 0.0) tab.row(i).head(n + m + 1) *= -1.0;
    tab(i, n + i) = 1.0;  // restore the artificial after a sign flip
  }

  std::vector<int> basis(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = static_cast<int>(n + i);

  LpSolution sol;

  // Phase 1: minimize the sum of artificials. Express the objective in terms
  // of the nonbasic columns by subtracting the artificial rows.
  for (Eigen::Index i = 0; i < m; ++i) tab.row(m) -= tab.row(i);
  tab.block(m, n, 1, m).setZero();

  PhaseResult p1 = run_phase(tab, basis, static_cast<int>(n), tol);
  sol.phase1_pivots = p1.pivots;
  sol.pivots = p1.pivots;
  if (p1.unbounded) throw std::logic_error("solve_standard_form: phase 1 cannot be unbounded");
  const double feas_tol = 1e-7 * std::max(1.0, b.cwiseAbs().maxCoeff());
  if (-tab(m, n + m) > feas_tol) {  // objective row stores -value
    sol.status = LpStatus::kInfeasible;
    return sol;
  }

  // Drive any artificial still in the basis out of it; a row with no usable
  // structural column is redundant and can be left (its rhs is ~0).
  for (Eigen::Index i = 0; i < m; ++i) {
    if (basis[static_cast<std::size_t>(i)] >= n) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (std::abs(tab(i, j)) > 1e-9) {
          pivot(tab, basis, static_cast<int>(i), static_cast<int>(j));
          ++sol.pivots;
          break;
        }
      }
    }
  }

  // Phase 2 objective.
  tab.row(m).setZero();
  tab.block(m, 0, 1, n) = c.transpose();
  for (Eigen::Index i = 0; i < m; ++i) {
    const int bj = basis[static_cast<std::size_t>(i)];
    if (bj < n) {
      const double cost = c(bj);
      if (cost != 0.0) tab.row(m) -= cost * tab.row(i);
    }
  }

  PhaseResult p2 = run_phase(tab, basis, static_cast<int>(n), tol);
  sol.pivots += p2.pivots;
  if (p2.unbounded) {
    sol.status = LpStatus::kUnbounded;
    return sol;
  }

  sol.status = LpStatus::kOptimal;
  sol.x = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < m; ++i) {
    const int bj = basis[static_cast<std::size_t>(i)];
    if (bj < n) sol.x(bj) = tab(i, n + m);
  }
  sol.objective = -tab(m, n + m);
  return sol;
}

}  // namespace pss
