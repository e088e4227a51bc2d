#include "pss/dynamics.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace pss {

Eigen::Vector2d pendulum_dynamics(const PendulumParams& params, const Eigen::Vector2d& x, double u) {
  const double inertia = params.mass * params.length * params.length;
  return {x(1), (params.gravity / params.length) * std::sin(x(0)) + u / inertia};
}

AffineSystem pendulum_system(const PendulumParams& params) {
  AffineSystem sys;
  sys.state_dim = 2;
  sys.input_dim = 1;
  sys.drift = [params](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return Eigen::Vector2d{x(1), (params.gravity / params.length) * std::sin(x(0))};
  };
  sys.actuation = [params](const Eigen::VectorXd&) -> Eigen::MatrixXd {
    Eigen::MatrixXd g(2, 1);
    g << 0.0, 1.0 / (params.mass * params.length * params.length);
    return g;
  };
  return sys;
}

PendulumParams sample_true_params(const PendulumParams& estimated, double scale, std::uint64_t seed) {
  if (scale < 0.0 || scale > 0.3) {
    throw std::invalid_argument("sample_true_params: perturbation scale must lie in [0, 0.3]");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> band(1.0 - scale, 1.0 + scale);
  PendulumParams out = estimated;
  out.mass = estimated.mass * band(rng);
  out.length = estimated.length * band(rng);
  return out;
}

ResidualPair residual(const AffineSystem& true_sys, const AffineSystem& est_sys) {
  if (true_sys.state_dim != est_sys.state_dim || true_sys.input_dim != est_sys.input_dim) {
    throw std::invalid_argument("residual: system dimensions do not match");
  }
  ResidualPair pair;
  pair.actuation_residual = [t = true_sys.actuation, e = est_sys.actuation](const Eigen::VectorXd& x) {
    return Eigen::MatrixXd(t(x) - e(x));
  };
  pair.drift_residual = [t = true_sys.drift, e = est_sys.drift](const Eigen::VectorXd& x) {
    return Eigen::VectorXd(t(x) - e(x));
  };
  return pair;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> residual_at(const AffineSystem& true_sys,
                                                        const AffineSystem& est_sys,
                                                        const Eigen::VectorXd& x) {
  const ResidualPair pair = residual(true_sys, est_sys);
  return {pair.actuation_residual(x), pair.drift_residual(x)};
}

Reference Reference::zero(Eigen::Index n) {
  Reference ref;
  ref.state = [n](double) { return Eigen::VectorXd(Eigen::VectorXd::Zero(n)); };
  ref.derivative = ref.state;
  return ref;
}

Reference sine_reference(double amplitude, double frequency) {
  Reference ref;
  ref.state = [amplitude, frequency](double t) -> Eigen::VectorXd {
    return Eigen::Vector2d{amplitude * std::sin(frequency * t),
                           amplitude * frequency * std::cos(frequency * t)};
  };
  ref.derivative = [amplitude, frequency](double t) -> Eigen::VectorXd {
    return Eigen::Vector2d{amplitude * frequency * std::cos(frequency * t),
                           -amplitude * frequency * frequency * std::sin(frequency * t)};
  };
  return ref;
}

namespace {

Eigen::VectorXd clamp_input(const Eigen::VectorXd& u, double limit, long* saturations) {
  if (limit <= 0.0) return u;
  Eigen::VectorXd clamped = u.cwiseMax(-limit).cwiseMin(limit);
  if ((clamped - u).cwiseAbs().maxCoeff() > 0.0) ++(*saturations);
  return clamped;
}

}  // namespace

Trajectory integrate(const AffineSystem& sys, const Controller& controller,
                     const Eigen::VectorXd& x0, double horizon, double dt,
                     const SimOptions& options) {
  if (!(dt > 0.0) || horizon < dt) {
    throw std::invalid_argument("integrate: require dt > 0 and horizon >= dt");
  }
  const auto n_steps = static_cast<std::size_t>(std::floor(horizon / dt + 1e-9));

  Trajectory traj;
  traj.dt = dt;
  traj.times.reserve(n_steps + 1);
  traj.states.reserve(n_steps + 1);
  traj.inputs.reserve(n_steps);
  if (options.lyapunov) traj.lyapunov.reserve(n_steps + 1);

  Eigen::VectorXd x = x0;
  for (std::size_t k = 0; k <= n_steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    if (!x.allFinite()) {
      throw std::runtime_error("integrate: non-finite state at step " + std::to_string(k) +
                               " (t = " + std::to_string(t) + "); simulation diverged");
    }
    traj.times.push_back(t);
    traj.states.push_back(x);
    if (options.lyapunov) traj.lyapunov.push_back(options.lyapunov(x, t));
    if (k == n_steps) break;

    Eigen::VectorXd u = clamp_input(controller(x, t), options.input_limit, &traj.saturation_count);
    traj.inputs.push_back(u);

    // Zero-order hold on u across the substeps.
    const Eigen::VectorXd k1 = sys.rhs(x, u);
    const Eigen::VectorXd k2 = sys.rhs(x + 0.5 * dt * k1, u);
    const Eigen::VectorXd k3 = sys.rhs(x + 0.5 * dt * k2, u);
    const Eigen::VectorXd k4 = sys.rhs(x + dt * k3, u);
    x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return traj;
}

std::vector<double> measure_vdot(const Trajectory& traj, double dt) {
  if (traj.lyapunov.size() < 2) {
    throw std::invalid_argument("measure_vdot: trajectory must carry at least two V samples");
  }
  std::vector<double> vdot(traj.lyapunov.size() - 1);
  for (std::size_t k = 0; k + 1 < traj.lyapunov.size(); ++k) {
    vdot[k] = (traj.lyapunov[k + 1] - traj.lyapunov[k]) / dt;
  }
  return vdot;
}

}  // namespace pss
