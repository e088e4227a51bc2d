#include "pss/certify.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace pss {

PSSBoundParams pss_bound_params(const QuadraticCLF& clf, const ComparisonFn& alpha_p,
                                const ComparisonFn& alpha_q) {
  // Comparison ODE: vdot <= -alpha_p(upper^-1(v)). For quadratic alpha_p with
  // coefficient c_p this is vdot <= -(c_p / lmax) v, so V decays at rate
  // lambda = c_p / lmax and norms at lambda / 2.
  const double c_p = alpha_p.eval(1.0);  // quadratic coefficient
  const double lambda = c_p / clf.lambda_max;

  PSSBoundParams params;
  params.beta.amplitude =
      ComparisonFn::power_law(std::sqrt(clf.lambda_max / clf.lambda_min), 1.0);
  params.beta.decay_rate = lambda / 2.0;
  // gamma(s) = sqrt(upper(alpha_q^-1(s)) / lmin), assembled by composition.
  params.gamma = compose(ComparisonFn::power_law(std::sqrt(1.0 / clf.lambda_min), 0.5),
                         compose(clf.upper, alpha_q.inverse_fn()));
  params.rho = alpha_q.inverse_fn();
  return params;
}

double pss_envelope(const PSSBoundParams& params, double x0_norm, double t, double sup_delta) {
  if (t < 0.0) throw std::domain_error("pss_envelope: negative time");
  return params.beta.eval(x0_norm, t) + params.gamma.eval(sup_delta);
}

PssCheckReport verify_pss_trajectory(const std::vector<double>& times,
                                     const std::vector<double>& norms,
                                     const std::vector<double>& deltas,
                                     const PSSBoundParams& params, double slack) {
  if (times.size() != norms.size() || times.empty()) {
    throw std::invalid_argument("verify_pss_trajectory: times/norms mismatch");
  }
  PssCheckReport report;
  report.min_margin = std::numeric_limits<double>::infinity();
  const double r0 = norms.front();
  double running_sup = 0.0;
  for (std::size_t k = 0; k < norms.size(); ++k) {
    if (k > 0 && k - 1 < deltas.size()) running_sup = std::max(running_sup, std::abs(deltas[k - 1]));
    const double envelope =
        pss_envelope(params, r0, times[k] - times.front(), running_sup) + slack;
    const double violation = norms[k] - envelope;
    if (violation > report.max_violation) {
      report.max_violation = violation;
      report.worst_step = k;
    }
    report.min_margin = std::min(report.min_margin, -violation);
  }
  report.holds = report.max_violation <= 0.0;
  return report;
}

PssCheckReport verify_pss_trajectory(const Trajectory& traj, const Reference& ref,
                                     const std::vector<double>& deltas,
                                     const PSSBoundParams& params, double slack) {
  std::vector<double> norms(traj.states.size());
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    norms[k] = (traj.states[k] - ref.state(traj.times[k])).norm();
  }
  return verify_pss_trajectory(traj.times, norms, deltas, params, slack);
}

std::vector<Eigen::VectorXd> boundary_states(const QuadraticCLF& clf, double level, int n_samples) {
  if (clf.p.rows() != 2) {
    throw std::invalid_argument("boundary_states: ellipse parameterization needs n = 2");
  }
  if (!(level > 0.0) || n_samples < 1) {
    throw std::invalid_argument("boundary_states: need level > 0 and n_samples >= 1");
  }
  // With P = L L', points sqrt(level) L^-T (cos phi, sin phi) satisfy
  // e'Pe = level exactly.
  const Eigen::MatrixXd l = clf.p.llt().matrixL();
  const Eigen::MatrixXd l_inv_t = l.transpose().inverse();
  std::vector<Eigen::VectorXd> states;
  states.reserve(static_cast<std::size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) {
    const double phi = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n_samples);
    states.push_back(std::sqrt(level) * (l_inv_t * Eigen::Vector2d{std::cos(phi), std::sin(phi)}));
  }
  return states;
}

BoundaryReport check_boundary_condition(const QuadraticCLF& clf, double level,
                                        const Controller& controller, const DeltaBuilder& delta,
                                        const ComparisonFn& alpha_q, int n_samples) {
  BoundaryReport report;
  report.level = level;
  report.sample_count = n_samples;
  report.worst_margin = std::numeric_limits<double>::infinity();

  for (const Eigen::VectorXd& x : boundary_states(clf, level, n_samples)) {
    const Eigen::VectorXd u = controller(x, 0.0);
    const SupResult sup = sup_linear(delta(x), u);
    if (sup.status != LpStatus::kOptimal) {
      report.unbounded_seen = true;
      report.pass = false;
      report.worst_margin = -std::numeric_limits<double>::infinity();
      return report;
    }
    // The set contains (0, 0), so the sup is nonnegative and in the domain
    // of alpha_q^-1.
    const double margin = x.norm() - alpha_q.inverse(std::max(sup.value, 0.0));
    report.margins.push_back(margin);
    report.lp_values.push_back(sup.value);
    report.mu = std::max(report.mu, sup.value);
    report.worst_margin = std::min(report.worst_margin, margin);
  }
  report.pass = report.worst_margin >= 0.0;
  return report;
}

double mu_over_set(const std::vector<Eigen::VectorXd>& states, const Controller& controller,
                   const DeltaBuilder& delta) {
  if (states.empty()) throw std::invalid_argument("mu_over_set: empty sample set");
  double mu = -std::numeric_limits<double>::infinity();
  for (const Eigen::VectorXd& x : states) {
    mu = std::max(mu, sup_linear(delta(x), controller(x, 0.0)).value_or_throw());
  }
  return mu;
}

double smallest_invariant_level(const QuadraticCLF& clf, const ComparisonFn& alpha_q, double mu) {
  if (mu < 0.0) throw std::domain_error("smallest_invariant_level: mu must be nonnegative");
  return clf.upper.eval(alpha_q.inverse(mu));
}

InvarianceReport check_forward_invariance(const QuadraticCLF& clf, double level,
                                          const Controller& controller,
                                          const AffineSystem& true_sys, int n_trajectories,
                                          double horizon, double dt, double tol_factor) {
  InvarianceReport report;
  report.level = level;
  report.tolerance = tol_factor * level;
  report.trajectory_count = n_trajectories;
  report.worst_excess = -std::numeric_limits<double>::infinity();

  SimOptions options;
  options.lyapunov = [&clf](const Eigen::VectorXd& x, double) { return clf.value(x); };

  for (const Eigen::VectorXd& x0 : boundary_states(clf, level, n_trajectories)) {
    const Trajectory traj = integrate(true_sys, controller, x0, horizon, dt, options);
    double max_v = -std::numeric_limits<double>::infinity();
    for (const double v : traj.lyapunov) max_v = std::max(max_v, v);
    report.max_values.push_back(max_v);
    report.worst_excess = std::max(report.worst_excess, max_v - level);
  }
  report.pass = report.worst_excess <= report.tolerance;
  return report;
}

}  // namespace pss
