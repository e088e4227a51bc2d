#pragma once

#include <Eigen/Dense>

namespace pss {

enum class LpStatus { kOptimal, kUnbounded, kInfeasible };

struct LpSolution {
  LpStatus status = LpStatus::kInfeasible;
  double objective = 0.0;
  Eigen::VectorXd x;
  int pivots = 0;         // total pivot count across both phases
  int phase1_pivots = 0;
};

/// Dense two-phase primal simplex for the standard form
///   minimize c'x  subject to  A x = b,  x >= 0.
/// Row signs are normalized internally so b may have any sign. Dantzig
/// pricing with a permanent switch to Bland's rule after a stall, so the
/// method terminates on degenerate problems.
LpSolution solve_standard_form(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                               const Eigen::VectorXd& c, double tol = 1e-9);

}  // namespace pss
