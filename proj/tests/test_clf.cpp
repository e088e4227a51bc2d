#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "pss/clf.hpp"

using namespace pss;

namespace {

AffineSystem scalar_system(double a, double b) {
  AffineSystem sys;
  sys.state_dim = 1;
  sys.input_dim = 1;
  sys.drift = [a](const Eigen::VectorXd& x) { return Eigen::VectorXd(a * x); };
  sys.actuation = [b](const Eigen::VectorXd&) {
    return Eigen::MatrixXd(Eigen::MatrixXd::Constant(1, 1, b));
  };
  return sys;
}

// Dense grid search over [-u_max, u_max]; the min-norm oracle.
double grid_min_norm(const VdotAffine& form, double alpha, double u_max, double resolution) {
  double best = 0.0;
  double best_cost = std::numeric_limits<double>::infinity();
  const auto steps = static_cast<long>(std::ceil(2.0 * u_max / resolution));
  for (long i = 0; i <= steps; ++i) {
    const double u = -u_max + 2.0 * u_max * static_cast<double>(i) / static_cast<double>(steps);
    if (form.constant + form.linear(0) * u <= -alpha) {
      const double cost = u * u;
      if (cost < best_cost) {
        best_cost = cost;
        best = u;
      }
    }
  }
  return best_cost == std::numeric_limits<double>::infinity()
             ? std::numeric_limits<double>::quiet_NaN()
             : best;
}

}  // namespace

TEST_CASE("solve_lyapunov") {
  SUBCASE("scalar contraction") {
    // 2 (-1) P = -2  =>  P = 1
    const Eigen::MatrixXd p = solve_lyapunov(Eigen::MatrixXd::Constant(1, 1, -1.0),
                                             Eigen::MatrixXd::Constant(1, 1, 2.0));
    CHECK(p(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("double integrator with poles at -1, -1") {
    Eigen::MatrixXd a_cl(2, 2);
    a_cl << 0.0, 1.0, -1.0, -2.0;
    const Eigen::MatrixXd p = solve_lyapunov(a_cl, Eigen::MatrixXd::Identity(2, 2));
    // Hand-solved 2x2 Lyapunov equation.
    CHECK(p(0, 0) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(p(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(p(1, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(p(1, 1) == doctest::Approx(0.5).epsilon(1e-12));
    // Defining equation residual.
    CHECK((a_cl.transpose() * p + p * a_cl + Eigen::MatrixXd::Identity(2, 2)).norm() <= 1e-10);
  }
}

TEST_CASE("solve_care stabilizes") {
  Eigen::MatrixXd a(2, 2), b(2, 1);
  a << 0.0, 1.0, 19.62, 0.0;
  b << 0.0, 16.0;
  const Eigen::MatrixXd q = Eigen::Vector2d{10.0, 1.0}.asDiagonal();
  const Eigen::MatrixXd r = Eigen::MatrixXd::Identity(1, 1);
  const Eigen::MatrixXd s = solve_care(a, b, q, r);
  // Riccati residual.
  const Eigen::MatrixXd residual =
      a.transpose() * s + s * a - s * b * r.inverse() * b.transpose() * s + q;
  CHECK(residual.norm() <= 1e-8);
  // Closed loop is Hurwitz.
  const Eigen::MatrixXd k = r.inverse() * b.transpose() * s;
  const Eigen::EigenSolver<Eigen::MatrixXd> eig(a - b * k);
  CHECK(eig.eigenvalues().real().maxCoeff() < 0.0);
}

TEST_CASE("synthesize_clf") {
  SUBCASE("scalar autonomous system") {
    // xdot = -x with Q = 2: K = 0 and P = 1.
    AffineSystem sys = scalar_system(-1.0, 0.0);
    const ClfSynthesis synth = synthesize_clf(sys, Eigen::MatrixXd::Constant(1, 1, 2.0),
                                              Eigen::MatrixXd::Identity(1, 1));
    CHECK(synth.gain.norm() == 0.0);
    CHECK(synth.clf.p(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(synth.clf.c3 == doctest::Approx(1.0).epsilon(1e-12));  // lambda_min(Q)/2
  }

  SUBCASE("pendulum defaults") {
    const AffineSystem est_sys = pendulum_system(PendulumParams{});
    const Eigen::MatrixXd q = Eigen::Vector2d{10.0, 1.0}.asDiagonal();
    const ClfSynthesis synth = synthesize_clf(est_sys, q, Eigen::MatrixXd::Identity(1, 1));

    // Closed-loop Lyapunov equation holds.
    const Eigen::MatrixXd a_cl = synth.a_lin - synth.b_lin * synth.gain;
    CHECK((a_cl.transpose() * synth.clf.p + synth.clf.p * a_cl + q).norm() <= 1e-10);
    CHECK(synth.clf.c3 == doctest::Approx(0.5).epsilon(1e-12));

    // Definition sandwich on random states.
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> dist(-3.0, 3.0);
    for (int i = 0; i < 1000; ++i) {
      const Eigen::Vector2d e{dist(rng), dist(rng)};
      const double v = synth.clf.value(e);
      CHECK(v >= synth.clf.lower.eval(e.norm()) - 1e-9);
      CHECK(v <= synth.clf.upper.eval(e.norm()) + 1e-9);
    }
  }

  SUBCASE("non-stabilizable linearization is rejected") {
    AffineSystem unstable = scalar_system(1.0, 0.0);  // xdot = +x, no control
    CHECK_THROWS_AS(synthesize_clf(unstable, Eigen::MatrixXd::Identity(1, 1),
                                   Eigen::MatrixXd::Identity(1, 1)),
                    std::runtime_error);
  }
}

TEST_CASE("gradient consistency") {
  const AffineSystem est_sys = pendulum_system(PendulumParams{});
  const Eigen::MatrixXd q = Eigen::Vector2d{10.0, 1.0}.asDiagonal();
  const QuadraticCLF clf = synthesize_clf(est_sys, q, Eigen::MatrixXd::Identity(1, 1)).clf;

  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  const double h = 1e-6;
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector2d e{dist(rng), dist(rng)};
    Eigen::Vector2d fd;
    for (int j = 0; j < 2; ++j) {
      Eigen::Vector2d ep = e, em = e;
      ep(j) += h;
      em(j) -= h;
      fd(j) = (clf.value(ep) - clf.value(em)) / (2.0 * h);
    }
    const Eigen::VectorXd grad = clf.gradient(e);
    CHECK((fd - grad).norm() <= 1e-6 * (1.0 + grad.norm()));
  }
}

TEST_CASE("vdot identities") {
  const PendulumParams est;
  const AffineSystem est_sys = pendulum_system(est);
  const AffineSystem true_sys = pendulum_system(sample_true_params(est, 0.3, 7));
  const Eigen::MatrixXd q = Eigen::Vector2d{10.0, 1.0}.asDiagonal();
  const QuadraticCLF clf = synthesize_clf(est_sys, q, Eigen::MatrixXd::Identity(1, 1)).clf;
  const Reference ref = sine_reference(M_PI / 3.0, 1.0);

  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);

  SUBCASE("zero error, zero input gives zero") {
    const double t = 0.8;
    const Eigen::VectorXd x = ref.state(t);
    const DerivativeEstimate est_v =
        vdot_estimated(clf, est_sys, ref, x, Eigen::VectorXd::Zero(1), t);
    CHECK(std::abs(est_v.total) <= 1e-12);
  }

  SUBCASE("affinity in the input") {
    for (int i = 0; i < 50; ++i) {
      const Eigen::Vector2d x{dist(rng), dist(rng)};
      const double t = std::abs(dist(rng));
      const Eigen::VectorXd u1 = Eigen::VectorXd::Constant(1, dist(rng));
      const Eigen::VectorXd u2 = Eigen::VectorXd::Constant(1, dist(rng));
      const double gap = vdot_estimated(clf, est_sys, ref, x, u1 + u2, t).total -
                         vdot_estimated(clf, est_sys, ref, x, u1, t).total -
                         vdot_estimated(clf, est_sys, ref, x, u2, t).total +
                         vdot_estimated(clf, est_sys, ref, x, Eigen::VectorXd::Zero(1), t).total;
      CHECK(std::abs(gap) <= 1e-10);
    }
  }

  SUBCASE("term-by-term recomputation") {
    for (int i = 0; i < 50; ++i) {
      const Eigen::Vector2d x{dist(rng), dist(rng)};
      const double t = std::abs(dist(rng));
      const Eigen::VectorXd u = Eigen::VectorXd::Constant(1, dist(rng));
      const Eigen::VectorXd e = x - ref.state(t);
      const Eigen::VectorXd grad = clf.gradient(e);
      const double manual = grad.dot(est_sys.drift(x)) + grad.dot(est_sys.actuation(x) * u) -
                            grad.dot(ref.derivative(t));
      CHECK(vdot_estimated(clf, est_sys, ref, x, u, t).total ==
            doctest::Approx(manual).epsilon(1e-12));
    }
  }

  SUBCASE("true minus estimated equals the projected residual") {
    const ResidualPair pair = residual(true_sys, est_sys);
    for (int i = 0; i < 100; ++i) {
      const Eigen::Vector2d x{dist(rng), dist(rng)};
      const double t = std::abs(dist(rng));
      const Eigen::VectorXd u = Eigen::VectorXd::Constant(1, dist(rng));
      const Eigen::VectorXd grad = clf.gradient(x - ref.state(t));
      const double gap = vdot_true(clf, true_sys, ref, x, u, t) -
                         vdot_estimated(clf, est_sys, ref, x, u, t).total;
      const double expected = (pair.actuation_residual(x).transpose() * grad).dot(u) +
                              pair.drift_residual(x).dot(grad);
      CHECK(std::abs(gap - expected) <= 1e-12 * (1.0 + std::abs(expected)));
    }
  }

  SUBCASE("true equals estimated for a perfect model") {
    for (int i = 0; i < 20; ++i) {
      const Eigen::Vector2d x{dist(rng), dist(rng)};
      const Eigen::VectorXd u = Eigen::VectorXd::Constant(1, dist(rng));
      CHECK(vdot_true(clf, est_sys, ref, x, u, 0.3) ==
            doctest::Approx(vdot_estimated(clf, est_sys, ref, x, u, 0.3).total).epsilon(1e-12));
    }
  }

  SUBCASE("finite difference of V along a true-system run") {
    SimOptions options;
    options.input_limit = est.input_limit;
    options.lyapunov = [&](const Eigen::VectorXd& x, double t) {
      return clf.value(x - ref.state(t));
    };
    const Controller pd = make_pd_controller(10.0, 2.0, ref, est.input_limit);
    const double dt = 1e-3;
    const Trajectory traj =
        integrate(true_sys, pd, ref.state(0.0) + Eigen::Vector2d{0.1, 0.0}, 2.0, dt, options);
    const std::vector<double> fd = measure_vdot(traj, dt);
    double worst = 0.0;
    for (std::size_t k = 0; k < fd.size(); ++k) {
      const double analytic =
          vdot_true(clf, true_sys, ref, traj.states[k], traj.inputs[k], traj.times[k]);
      worst = std::max(worst, std::abs(fd[k] - analytic));
    }
    CHECK(worst <= 100.0 * dt);  // O(dt) difference-quotient error
  }
}

TEST_CASE("admissible") {
  // Stable scalar test system xdot = -x with V = x^2 and alpha = r^2:
  // vdot(x, 0) = -2 x^2 <= -x^2 everywhere.
  AffineSystem sys = scalar_system(-1.0, 1.0);
  const QuadraticCLF clf = QuadraticCLF::from_matrix(Eigen::MatrixXd::Identity(1, 1), 1.0);
  const Reference ref = Reference::zero(1);

  CHECK(admissible(clf, sys, ref, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1), 0.0));
  for (const double x : {-2.0, -0.3, 0.4, 1.7}) {
    CHECK(admissible(clf, sys, ref, Eigen::VectorXd::Constant(1, x), Eigen::VectorXd::Zero(1), 0.0));
  }
  // An input pushing vdot positive is rejected.
  CHECK_FALSE(admissible(clf, sys, ref, Eigen::VectorXd::Constant(1, 1.0),
                         Eigen::VectorXd::Constant(1, 50.0), 0.0));
}

TEST_CASE("qp controller") {
  const AffineSystem est_sys = pendulum_system(PendulumParams{});
  const Eigen::MatrixXd q = Eigen::Vector2d{10.0, 1.0}.asDiagonal();
  const QuadraticCLF clf = synthesize_clf(est_sys, q, Eigen::MatrixXd::Identity(1, 1)).clf;
  const Reference ref = Reference::zero(2);

  SUBCASE("slack constraint returns zero") {
    // Hanging-down-like configuration where the drift already decreases V is
    // hard to find for the upright pendulum, so build a slack case directly:
    // at zero error the constraint is 0 <= 0.
    const QpResult qp = qp_control_input(clf, est_sys, ref, Eigen::Vector2d::Zero().eval(), 0.0, 5.0);
    CHECK(qp.feasible);
    CHECK(qp.input.norm() == 0.0);
  }

  SUBCASE("closed-form single-constraint projection") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int i = 0; i < 200; ++i) {
      const Eigen::Vector2d x{dist(rng), dist(rng)};
      const VdotAffine form = vdot_affine(clf, est_sys, ref, x, 0.0);
      const double alpha = clf.decay.eval(x.norm());
      const QpResult qp = qp_control_input(clf, est_sys, ref, x, 0.0, 5.0);
      if (form.constant <= -alpha) {
        CHECK(qp.input.norm() == 0.0);
      } else if (qp.feasible && std::abs(qp.input(0)) < 5.0 - 1e-12) {
        const double expected = (-alpha - form.constant) / form.linear(0);
        CHECK(qp.input(0) == doctest::Approx(expected).epsilon(1e-10));
      }
      if (qp.feasible) {
        CHECK(form.eval(qp.input) <= -alpha + 1e-9);
      }
    }
  }

  SUBCASE("matches a dense grid oracle") {
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> dist(-1.5, 1.5);
    int compared = 0;
    for (int i = 0; i < 500; ++i) {
      const Eigen::Vector2d x{dist(rng), dist(rng)};
      const VdotAffine form = vdot_affine(clf, est_sys, ref, x, 0.0);
      const double alpha = clf.decay.eval(x.norm());
      const QpResult qp = qp_control_input(clf, est_sys, ref, x, 0.0, 5.0);
      const double oracle = grid_min_norm(form, alpha, 5.0, 1e-4);
      if (std::isnan(oracle)) {
        CHECK_FALSE(qp.feasible);
        continue;
      }
      if (!qp.feasible) continue;  // grid found a feasible point the box corner missed
      ++compared;
      CHECK(qp.input(0) * qp.input(0) <= oracle * oracle + 1e-6);
    }
    CHECK(compared >= 400);
  }

  SUBCASE("definition certificate over the operating box") {
    std::mt19937_64 rng(47);
    std::uniform_real_distribution<double> angle(-1.0, 1.0);
    std::uniform_real_distribution<double> rate(-2.0, 2.0);
    int feasible_count = 0;
    const int total = 10000;
    for (int i = 0; i < total; ++i) {
      const Eigen::Vector2d x{angle(rng), rate(rng)};
      const QpResult qp = qp_control_input(clf, est_sys, ref, x, 0.0, 5.0);
      if (!qp.feasible) continue;
      ++feasible_count;
      const double vdot = vdot_estimated(clf, est_sys, ref, x, qp.input, 0.0).total;
      CHECK(vdot <= -clf.decay.eval(x.norm()) + 1e-9);
    }
    // Assumption 1 holds on almost all of the box under the default torque.
    CHECK(feasible_count >= total * 95 / 100);
  }
}

TEST_CASE("pd controller") {
  const Reference ref = Reference::zero(2);
  const Controller pd = make_pd_controller(10.0, 2.0, ref, 5.0);

  CHECK(pd(Eigen::Vector2d::Zero(), 0.0)(0) == 0.0);
  CHECK(pd(Eigen::Vector2d{0.1, -0.05}, 0.0)(0) == doctest::Approx(-0.9).epsilon(1e-14));
  CHECK(pd(Eigen::Vector2d{100.0, 100.0}, 0.0)(0) == -5.0);
  CHECK(pd(Eigen::Vector2d{-100.0, -100.0}, 0.0)(0) == 5.0);
}
