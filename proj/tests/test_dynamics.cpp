#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "pss/dynamics.hpp"

using namespace pss;

namespace {

AffineSystem scalar_decay_system() {
  AffineSystem sys;
  sys.state_dim = 1;
  sys.input_dim = 1;
  sys.drift = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(-x); };
  sys.actuation = [](const Eigen::VectorXd&) { return Eigen::MatrixXd(Eigen::MatrixXd::Zero(1, 1)); };
  return sys;
}

Controller zero_controller(Eigen::Index m) {
  return [m](const Eigen::VectorXd&, double) { return Eigen::VectorXd(Eigen::VectorXd::Zero(m)); };
}

}  // namespace

TEST_CASE("pendulum dynamics formula") {
  PendulumParams params;  // 0.25 kg, 0.5 m, 9.81

  SUBCASE("upright equilibrium") {
    const Eigen::Vector2d dx = pendulum_dynamics(params, {0.0, 0.0}, 0.0);
    CHECK(dx(0) == 0.0);
    CHECK(dx(1) == 0.0);
  }

  SUBCASE("horizontal rod, unit parameters") {
    PendulumParams unit{1.0, 1.0, 9.81, 5.0};
    const Eigen::Vector2d dx = pendulum_dynamics(unit, {M_PI / 2.0, 0.0}, 0.0);
    CHECK(dx(0) == 0.0);
    CHECK(dx(1) == doctest::Approx(9.81).epsilon(1e-14));
  }

  SUBCASE("hand-evaluated two-term formula") {
    // (9.81 / 0.5) sin(0.3) + 0.5 / (0.25 * 0.25)
    const Eigen::Vector2d dx = pendulum_dynamics(params, {0.3, -0.1}, 0.5);
    CHECK(dx(0) == doctest::Approx(-0.1).epsilon(1e-16));
    CHECK(dx(1) == doctest::Approx(13.798106454695482).epsilon(1e-14));
  }

  SUBCASE("system evaluators agree with the closed form") {
    const AffineSystem sys = pendulum_system(params);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> dist(-3.0, 3.0);
    for (int i = 0; i < 50; ++i) {
      const Eigen::Vector2d x{dist(rng), dist(rng)};
      const double u = dist(rng);
      const Eigen::VectorXd rhs = sys.rhs(x, Eigen::VectorXd::Constant(1, u));
      const Eigen::Vector2d expected = pendulum_dynamics(params, x, u);
      CHECK((rhs - expected).norm() <= 1e-14);
    }
  }
}

TEST_CASE("residual identity") {
  const PendulumParams est;
  const AffineSystem est_sys = pendulum_system(est);

  SUBCASE("true equals estimated") {
    const auto [a, b] = residual_at(est_sys, est_sys, Eigen::Vector2d{0.4, -1.2});
    CHECK(a.norm() == 0.0);
    CHECK(b.norm() == 0.0);
  }

  SUBCASE("actuation residual at the origin") {
    PendulumParams true_params = est;
    true_params.mass = 0.3;
    true_params.length = 0.45;
    const AffineSystem true_sys = pendulum_system(true_params);
    const auto [a, b] = residual_at(true_sys, est_sys, Eigen::Vector2d::Zero().eval());
    const double expected = 1.0 / (0.3 * 0.45 * 0.45) - 1.0 / (0.25 * 0.5 * 0.5);
    CHECK(a(0, 0) == 0.0);
    CHECK(a(1, 0) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(b.norm() == 0.0);  // sin 0 kills the drift residual
  }

  SUBCASE("affine reconstruction at random states and inputs") {
    const PendulumParams true_params = sample_true_params(est, 0.3, 99);
    const AffineSystem true_sys = pendulum_system(true_params);
    const ResidualPair pair = residual(true_sys, est_sys);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> dist(-3.0, 3.0);
    for (int i = 0; i < 100; ++i) {
      const Eigen::Vector2d x{dist(rng), dist(rng)};
      const Eigen::VectorXd u = Eigen::VectorXd::Constant(1, dist(rng));
      const Eigen::VectorXd reconstructed =
          est_sys.rhs(x, u) + pair.actuation_residual(x) * u + pair.drift_residual(x);
      CHECK((reconstructed - true_sys.rhs(x, u)).norm() <= 1e-12);
    }
  }
}

TEST_CASE("sample_true_params") {
  const PendulumParams est;

  SUBCASE("zero scale is the identity") {
    const PendulumParams drawn = sample_true_params(est, 0.0, 1234);
    CHECK(drawn.mass == est.mass);
    CHECK(drawn.length == est.length);
  }

  SUBCASE("determinism") {
    const PendulumParams a = sample_true_params(est, 0.3, 42);
    const PendulumParams b = sample_true_params(est, 0.3, 42);
    CHECK(a.mass == b.mass);
    CHECK(a.length == b.length);
    CHECK(a.gravity == est.gravity);
  }

  SUBCASE("factors stay inside the band over many draws") {
    double min_factor = 10.0, max_factor = 0.0;
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
      const PendulumParams drawn = sample_true_params(est, 0.3, seed);
      min_factor = std::min({min_factor, drawn.mass / est.mass, drawn.length / est.length});
      max_factor = std::max({max_factor, drawn.mass / est.mass, drawn.length / est.length});
    }
    CHECK(min_factor >= 0.7);
    CHECK(max_factor <= 1.3);
    // The band is actually explored.
    CHECK(min_factor < 0.71);
    CHECK(max_factor > 1.29);
  }

  SUBCASE("scale above the band is rejected") {
    CHECK_THROWS_AS(sample_true_params(est, 0.31, 1), std::invalid_argument);
  }
}

TEST_CASE("integrate") {
  SUBCASE("equilibrium stays put") {
    const AffineSystem sys = pendulum_system(PendulumParams{});
    const Trajectory traj =
        integrate(sys, zero_controller(1), Eigen::Vector2d::Zero().eval(), 1.0, 0.01);
    CHECK(traj.states.size() == 101);
    CHECK(traj.inputs.size() == 100);
    for (const auto& x : traj.states) CHECK(x.norm() == 0.0);
  }

  SUBCASE("linear decay matches the exponential") {
    const Trajectory traj = integrate(scalar_decay_system(), zero_controller(1),
                                      Eigen::VectorXd::Ones(1), 1.0, 1e-3);
    CHECK(traj.states.back()(0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-8));
  }

  SUBCASE("RK4 order study on the pendulum") {
    const AffineSystem sys = pendulum_system(PendulumParams{});
    const Eigen::Vector2d x0{0.4, 0.0};
    const Controller u = zero_controller(1);
    const double coarse = integrate(sys, u, x0, 1.0, 1e-2).states.back()(0);
    const double medium = integrate(sys, u, x0, 1.0, 5e-3).states.back()(0);
    const double fine = integrate(sys, u, x0, 1.0, 2.5e-3).states.back()(0);
    const double order = std::log2(std::abs(coarse - medium) / std::abs(medium - fine));
    CHECK(order >= 3.8);
    CHECK(order <= 4.4);
  }

  SUBCASE("input saturation is applied and counted") {
    const AffineSystem sys = pendulum_system(PendulumParams{});
    const Controller big = [](const Eigen::VectorXd&, double) {
      return Eigen::VectorXd(Eigen::VectorXd::Constant(1, 100.0));
    };
    SimOptions options;
    options.input_limit = 5.0;
    const Trajectory traj = integrate(sys, big, Eigen::Vector2d::Zero().eval(), 0.1, 0.01, options);
    CHECK(traj.saturation_count == 10);
    for (const auto& u : traj.inputs) CHECK(u(0) == 5.0);
  }

  SUBCASE("divergence aborts with a diagnostic") {
    AffineSystem blowup;
    blowup.state_dim = 1;
    blowup.input_dim = 1;
    blowup.drift = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(x.array().square().matrix() * 1e8); };
    blowup.actuation = [](const Eigen::VectorXd&) { return Eigen::MatrixXd(Eigen::MatrixXd::Zero(1, 1)); };
    CHECK_THROWS_AS(integrate(blowup, zero_controller(1), Eigen::VectorXd::Ones(1), 10.0, 0.1),
                    std::runtime_error);
  }

  SUBCASE("bad steps are rejected") {
    CHECK_THROWS_AS(integrate(scalar_decay_system(), zero_controller(1), Eigen::VectorXd::Ones(1),
                              0.5, 1.0),
                    std::invalid_argument);
  }
}

TEST_CASE("measure_vdot") {
  Trajectory traj;
  traj.dt = 0.1;

  SUBCASE("constant V gives zeros") {
    traj.lyapunov = {2.0, 2.0, 2.0, 2.0};
    for (const double v : measure_vdot(traj, 0.1)) CHECK(v == 0.0);
  }

  SUBCASE("linear ramp gives ones") {
    traj.lyapunov = {0.0, 0.1, 0.2, 0.3, 0.4};
    const std::vector<double> vdot = measure_vdot(traj, 0.1);
    CHECK(vdot.size() == 4);
    for (const double v : vdot) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("too-short trajectory is rejected") {
    traj.lyapunov = {1.0};
    CHECK_THROWS_AS(measure_vdot(traj, 0.1), std::invalid_argument);
  }

  SUBCASE("first-order error model against the analytic derivative") {
    // V(t) = sin(t): forward difference error is bounded by dt/2 sup |V''|.
    const double dt = 1e-3;
    Trajectory smooth;
    smooth.dt = dt;
    for (int k = 0; k <= 1000; ++k) {
      smooth.times.push_back(k * dt);
      smooth.lyapunov.push_back(std::sin(k * dt));
    }
    const std::vector<double> vdot = measure_vdot(smooth, dt);
    double worst = 0.0;
    for (std::size_t k = 0; k < vdot.size(); ++k) {
      worst = std::max(worst, std::abs(vdot[k] - std::cos(smooth.times[k])));
    }
    CHECK(worst <= 0.5 * dt + 1e-6);
    CHECK(worst >= 0.1 * dt);  // the bound is tight up to a constant
  }
}

TEST_CASE("references") {
  SUBCASE("zero reference") {
    const Reference ref = Reference::zero(2);
    CHECK(ref.state(3.7).norm() == 0.0);
    CHECK(ref.derivative(-1.0).norm() == 0.0);
  }

  SUBCASE("sine reference derivative consistency") {
    const Reference ref = sine_reference(M_PI / 3.0, 1.0);
    const double h = 1e-6;
    for (double t = 0.0; t < 7.0; t += 0.37) {
      const Eigen::VectorXd fd = (ref.state(t + h) - ref.state(t - h)) / (2.0 * h);
      CHECK((fd - ref.derivative(t)).norm() <= 1e-6);
      // The rate entry of the state is the derivative of the angle entry.
      CHECK(ref.state(t)(1) == doctest::Approx(ref.derivative(t)(0)).epsilon(1e-12));
    }
  }
}
