#pragma once

#include <Eigen/Dense>

#include <functional>

#include "pss/comparison.hpp"
#include "pss/dynamics.hpp"

namespace pss {

/// Quadratic Lyapunov function V(e) = e' P e with the class-K-infinity
/// sandwich lower(r) = lambda_min(P) r^2 <= V <= upper(r) = lambda_max(P) r^2
/// and decay requirement decay(r) = c3 r^2.
struct QuadraticCLF {
  Eigen::MatrixXd p;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double c3 = 0.0;
  ComparisonFn lower;  // underbar alpha
  ComparisonFn upper;  // overbar alpha
  ComparisonFn decay;  // alpha

  double value(const Eigen::VectorXd& e) const { return e.dot(p * e); }
  Eigen::VectorXd gradient(const Eigen::VectorXd& e) const { return 2.0 * (p * e); }

  static QuadraticCLF from_matrix(const Eigen::MatrixXd& p, double c3);
};

/// Solves A' P + P A = -Q for symmetric P (dense Kronecker formulation).
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q);

/// Stabilizing solution of A'S + SA - S B R^-1 B' S + Q = 0 via the stable
/// invariant subspace of the Hamiltonian matrix.
Eigen::MatrixXd solve_care(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                           const Eigen::MatrixXd& q, const Eigen::MatrixXd& r);

/// Jacobian of the drift at a state by central differences.
Eigen::MatrixXd drift_jacobian(const AffineSystem& sys, const Eigen::VectorXd& x, double h = 1e-6);

struct ClfSynthesis {
  QuadraticCLF clf;
  Eigen::MatrixXd gain;   // LQR feedback K
  Eigen::MatrixXd a_lin;  // drift linearization at the origin
  Eigen::MatrixXd b_lin;  // actuation at the origin
};

/// Builds a quadratic CLF for the estimated model: K is the LQR gain for the
/// origin linearization under weights (Q, R); P solves the closed-loop
/// Lyapunov equation (A - BK)' P + P (A - BK) = -Q; c3 = lambda_min(Q) / 2.
/// Throws if the closed loop is not Hurwitz (non-stabilizable linearization).
ClfSynthesis synthesize_clf(const AffineSystem& est_sys, const Eigen::MatrixXd& q_weight,
                            const Eigen::MatrixXd& r_weight);

/// Learned corrections to the Lyapunov-derivative estimate, evaluated on the
/// (state, gradient) features the estimators were trained on.
struct ResidualModel {
  std::function<Eigen::VectorXd(const Eigen::VectorXd& x, const Eigen::VectorXd& grad_v)> a;
  std::function<double(const Eigen::VectorXd& x, const Eigen::VectorXd& grad_v)> b;
};

/// Estimated Lyapunov derivative split into the model-based term and the
/// learned correction.
struct DerivativeEstimate {
  double base = 0.0;        // (fhat + ghat u - xdot_d)' grad V
  double correction = 0.0;  // ahat' u + bhat, zero when no estimators
  double total = 0.0;
};

/// Affine-in-u form of the estimated Lyapunov derivative:
/// vdot_hat(x, u) = constant + linear' u.
struct VdotAffine {
  double constant = 0.0;
  Eigen::VectorXd linear;
  double base_constant = 0.0;  // constant without the learned correction

  double eval(const Eigen::VectorXd& u) const { return constant + linear.dot(u); }
};

VdotAffine vdot_affine(const QuadraticCLF& clf, const AffineSystem& est_sys, const Reference& ref,
                       const Eigen::VectorXd& x, double t, const ResidualModel* model = nullptr);

DerivativeEstimate vdot_estimated(const QuadraticCLF& clf, const AffineSystem& est_sys,
                                  const Reference& ref, const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& u, double t,
                                  const ResidualModel* model = nullptr);

/// Exact Lyapunov derivative under the true dynamics; simulation-side ground
/// truth for residual containment checks.
double vdot_true(const QuadraticCLF& clf, const AffineSystem& true_sys, const Reference& ref,
                 const Eigen::VectorXd& x, const Eigen::VectorXd& u, double t);

/// True iff vdot_estimated(x, u) <= -decay(||e||).
bool admissible(const QuadraticCLF& clf, const AffineSystem& est_sys, const Reference& ref,
                const Eigen::VectorXd& x, const Eigen::VectorXd& u, double t,
                const ResidualModel* model = nullptr);

struct ControllerLog {
  long infeasible = 0;  // steps where the decrease constraint could not be met in bounds
};

struct QpResult {
  Eigen::VectorXd input;
  bool feasible = true;
};

/// Min-norm input subject to vdot_hat(x, u) <= -decay(||e||) and |u| <= u_max.
/// When the constraint system is infeasible within bounds, returns the
/// constraint-minimizing saturated input and marks the result infeasible.
QpResult qp_control_input(const QuadraticCLF& clf, const AffineSystem& est_sys, const Reference& ref,
                          const Eigen::VectorXd& x, double t, double u_max,
                          const ResidualModel* model = nullptr);

Controller make_qp_controller(const QuadraticCLF& clf, const AffineSystem& est_sys,
                              const Reference& ref, double u_max,
                              const ResidualModel* model = nullptr, ControllerLog* log = nullptr);

/// u = -kp (angle - angle_d) - kd (rate - rate_d), saturated at u_max.
Controller make_pd_controller(double kp, double kd, const Reference& ref, double u_max);

}  // namespace pss
