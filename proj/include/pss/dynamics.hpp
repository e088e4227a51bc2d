#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <vector>

namespace pss {

/// Control-affine system xdot = f(x) + g(x) u given by its two evaluators.
struct AffineSystem {
  Eigen::Index state_dim = 0;
  Eigen::Index input_dim = 0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> drift;      // f
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> actuation;  // g

  Eigen::VectorXd rhs(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
    return drift(x) + actuation(x) * u;
  }
};

/// Rigid pendulum (massless rod, point mass, torque input at the base).
struct PendulumParams {
  double mass = 0.25;        // kg
  double length = 0.5;       // m
  double gravity = 9.81;     // m/s^2
  double input_limit = 5.0;  // N*m
};

/// xdot = [rate; (g0/l) sin(angle) + u / (m l^2)], state = (angle, rate).
Eigen::Vector2d pendulum_dynamics(const PendulumParams& params, const Eigen::Vector2d& x, double u);

AffineSystem pendulum_system(const PendulumParams& params);

/// Multiplies mass and length by independent uniform factors in
/// [1 - scale, 1 + scale]; gravity and input limit are kept. scale <= 0.3.
PendulumParams sample_true_params(const PendulumParams& estimated, double scale, std::uint64_t seed);

/// Model-error evaluators A = g - ghat and b = f - fhat.
struct ResidualPair {
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> actuation_residual;  // A
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> drift_residual;      // b
};

ResidualPair residual(const AffineSystem& true_sys, const AffineSystem& est_sys);

/// A(x), b(x) at a single state.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> residual_at(const AffineSystem& true_sys,
                                                        const AffineSystem& est_sys,
                                                        const Eigen::VectorXd& x);

/// Desired state and its time derivative as evaluators over t.
struct Reference {
  std::function<Eigen::VectorXd(double)> state;       // x_d(t)
  std::function<Eigen::VectorXd(double)> derivative;  // xdot_d(t)

  static Reference zero(Eigen::Index n);
};

/// angle_d(t) = amplitude * sin(frequency * t) with matching rate entry.
Reference sine_reference(double amplitude, double frequency);

using Controller = std::function<Eigen::VectorXd(const Eigen::VectorXd& x, double t)>;

/// Fixed-step simulation record. Inputs are sampled at step starts, so
/// inputs.size() == states.size() - 1 == times.size() - 1.
struct Trajectory {
  double dt = 0.0;
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> inputs;
  std::vector<double> lyapunov;       // V at (state, time); empty if not recorded
  std::vector<double> vdot_measured;  // forward differences of lyapunov; empty until measured
  long saturation_count = 0;

  std::size_t steps() const { return inputs.size(); }
};

struct SimOptions {
  double input_limit = -1.0;  // componentwise clamp to [-limit, limit]; <= 0 disables
  std::function<double(const Eigen::VectorXd& x, double t)> lyapunov;  // optional V recorder
};

/// Classical 4th-order Runge-Kutta with the input held constant over each
/// step (the controller is sampled once, at the step start). Throws on a
/// non-finite state with the step index in the message.
Trajectory integrate(const AffineSystem& sys, const Controller& controller,
                     const Eigen::VectorXd& x0, double horizon, double dt,
                     const SimOptions& options = {});

/// Forward differences (V_{k+1} - V_k) / dt, aligned with the input at step k.
std::vector<double> measure_vdot(const Trajectory& traj, double dt);

}  // namespace pss
