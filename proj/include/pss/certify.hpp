#pragma once

#include <Eigen/Dense>

#include <vector>

#include "pss/comparison.hpp"
#include "pss/clf.hpp"
#include "pss/dynamics.hpp"
#include "pss/uncertainty.hpp"

namespace pss {

/// Explicit disturbance-to-state bound for a quadratic CLF:
///   ||x(t)|| <= beta(||x0||, t) + gamma(sup |delta|)
/// with beta(r, t) = sqrt(lmax/lmin) r exp(-lambda t / 2) where lambda is the
/// decay rate of the comparison ODE vdot = -alpha_p(upper^-1(v)), and
/// gamma(s) = sqrt(upper(alpha_q^-1(s)) / lmin).
struct PSSBoundParams {
  KLBound beta;        // beta'
  ComparisonFn gamma;  // gamma'
  ComparisonFn rho;    // alpha_q^-1
};

PSSBoundParams pss_bound_params(const QuadraticCLF& clf, const ComparisonFn& alpha_p,
                                const ComparisonFn& alpha_q);

double pss_envelope(const PSSBoundParams& params, double x0_norm, double t, double sup_delta);

struct PssCheckReport {
  bool holds = true;
  double max_violation = 0.0;  // max over steps of ||x|| - envelope
  double min_margin = 0.0;     // min over steps of envelope - ||x||
  std::size_t worst_step = 0;
};

/// Checks ||x(t_k)|| <= envelope(||x0||, t_k, running sup |delta|) + slack at
/// every step; delta has one entry per step (aligned with inputs).
PssCheckReport verify_pss_trajectory(const std::vector<double>& times,
                                     const std::vector<double>& norms,
                                     const std::vector<double>& deltas,
                                     const PSSBoundParams& params, double slack = 0.0);

/// Overload on a simulated trajectory; norms are error-state norms against
/// the reference.
PssCheckReport verify_pss_trajectory(const Trajectory& traj, const Reference& ref,
                                     const std::vector<double>& deltas,
                                     const PSSBoundParams& params, double slack = 0.0);

/// Deterministic sampling of the boundary ellipse {e : e'Pe = level} (n = 2).
std::vector<Eigen::VectorXd> boundary_states(const QuadraticCLF& clf, double level, int n_samples);

struct BoundaryReport {
  double level = 0.0;
  int sample_count = 0;
  double worst_margin = 0.0;  // min over samples of ||x|| - alpha_q^-1(sup)
  double mu = 0.0;            // max LP value over the boundary samples
  bool pass = false;
  bool unbounded_seen = false;
  std::vector<double> margins;
  std::vector<double> lp_values;
};

/// Samples the sublevel-set boundary, evaluates the worst-case projected
/// disturbance under the controller via the uncertainty set, and reports the
/// margin ||x|| - alpha_q^-1(sup). An unbounded set at any sample makes the
/// report certification-impossible rather than raising.
BoundaryReport check_boundary_condition(const QuadraticCLF& clf, double level,
                                        const Controller& controller, const DeltaBuilder& delta,
                                        const ComparisonFn& alpha_q, int n_samples);

/// max over the sample set of sup_{(a,b)} a'k(x) + b; throws
/// InsufficientDataError when any set is unbounded.
double mu_over_set(const std::vector<Eigen::VectorXd>& states, const Controller& controller,
                   const DeltaBuilder& delta);

/// Smallest sublevel value c with B_{alpha_q^-1(mu)} inside {V <= c}:
/// c = upper(alpha_q^-1(mu)).
double smallest_invariant_level(const QuadraticCLF& clf, const ComparisonFn& alpha_q, double mu);

struct InvarianceReport {
  double level = 0.0;
  double tolerance = 0.0;
  int trajectory_count = 0;
  double worst_excess = 0.0;  // max over runs of max V - level
  bool pass = false;
  std::vector<double> max_values;
};

/// Simulates trajectories of the true system from the boundary and checks
/// V(e(t)) <= level + tolerance throughout.
InvarianceReport check_forward_invariance(const QuadraticCLF& clf, double level,
                                          const Controller& controller,
                                          const AffineSystem& true_sys, int n_trajectories,
                                          double horizon, double dt, double tol_factor = 1e-3);

}  // namespace pss
