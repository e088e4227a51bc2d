#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/SVD>

#include <cmath>
#include <random>

#include "pss/mlp.hpp"

using namespace pss;

namespace {

// Scalar test loss: sum over the batch of all outputs. dL/dy is all ones, so
// backward_batch yields exactly the analytic parameter gradients.
double sum_outputs(const Mlp& net, const Eigen::MatrixXd& z) {
  return net.forward_batch(z).sum();
}

double* param_entry(Mlp& net, int which, Eigen::Index i, Eigen::Index j) {
  switch (which) {
    case 0: return &net.w1()(i, j);
    case 1: return &net.b1()(i);
    case 2: return &net.w2()(i, j);
    default: return &net.b2()(i);
  }
}

double grad_entry(const Mlp::Gradients& g, int which, Eigen::Index i, Eigen::Index j) {
  switch (which) {
    case 0: return g.w1(i, j);
    case 1: return g.b1(i);
    case 2: return g.w2(i, j);
    default: return g.b2(i);
  }
}

}  // namespace

TEST_CASE("forward pass") {
  SUBCASE("zero weights give zero output") {
    Mlp net(3, 5, 2, 1);
    net.w1().setZero();
    net.w2().setZero();
    const Eigen::VectorXd y = net.forward(Eigen::Vector3d{1.0, -2.0, 3.0});
    CHECK(y.norm() == 0.0);
  }

  SUBCASE("single-unit hand case") {
    // input 2, w1 = 1, w2 = 3, biases 0: relu(2) * 3 = 6.
    Mlp net(1, 1, 1, 1);
    net.w1() = Eigen::MatrixXd::Constant(1, 1, 1.0);
    net.w2() = Eigen::MatrixXd::Constant(1, 1, 3.0);
    net.b1().setZero();
    net.b2().setZero();
    CHECK(net.forward(Eigen::VectorXd::Constant(1, 2.0))(0) == doctest::Approx(6.0));
    // ReLU clips the negative side.
    CHECK(net.forward(Eigen::VectorXd::Constant(1, -2.0))(0) == 0.0);
  }

  SUBCASE("batch forward matches per-sample forward") {
    Mlp net(4, 16, 3, 7);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd z(4, 10);
    for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = gauss(rng);
    const Eigen::MatrixXd batch = net.forward_batch(z);
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
      CHECK((batch.col(c) - net.forward(z.col(c))).norm() <= 1e-14);
    }
  }

  SUBCASE("finite outputs for finite inputs") {
    Mlp net(4, 200, 1, 11);
    const Eigen::VectorXd y = net.forward(Eigen::Vector4d{1e6, -1e6, 3.0, 0.0});
    CHECK(y.allFinite());
  }
}

TEST_CASE("analytic gradients match central differences") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> which_dist(0, 3);

  Mlp net(4, 12, 2, 13);
  Eigen::MatrixXd z(4, 8);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = gauss(rng);

  Mlp::Gradients grads = net.zero_gradients();
  net.backward_batch(z, Eigen::MatrixXd::Ones(2, 8), &grads);

  const double h = 1e-6;
  int checked = 0;
  while (checked < 20) {
    const int which = which_dist(rng);
    Eigen::Index i = 0, j = 0;
    switch (which) {
      case 0:
        i = std::uniform_int_distribution<Eigen::Index>(0, 11)(rng);
        j = std::uniform_int_distribution<Eigen::Index>(0, 3)(rng);
        break;
      case 1: i = std::uniform_int_distribution<Eigen::Index>(0, 11)(rng); break;
      case 2:
        i = std::uniform_int_distribution<Eigen::Index>(0, 1)(rng);
        j = std::uniform_int_distribution<Eigen::Index>(0, 11)(rng);
        break;
      default: i = std::uniform_int_distribution<Eigen::Index>(0, 1)(rng); break;
    }
    double* entry = param_entry(net, which, i, j);
    const double saved = *entry;
    *entry = saved + h;
    const double up = sum_outputs(net, z);
    *entry = saved - h;
    const double down = sum_outputs(net, z);
    *entry = saved;

    const double fd = (up - down) / (2.0 * h);
    const double analytic = grad_entry(grads, which, i, j);
    CHECK(std::abs(fd - analytic) <= 1e-5 * std::max(1.0, std::abs(analytic)));
    ++checked;
  }
}

TEST_CASE("spectral norm estimation") {
  SUBCASE("diagonal matrix with known top singular value") {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(3, 3);
    w.diagonal() << 2.0, 0.5, -1.0;
    CHECK(spectral_norm_estimate(w, 200) == doctest::Approx(2.0).epsilon(1e-10));
  }

  SUBCASE("against the dense SVD oracle on random matrices") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
      const Eigen::Index rows = 2 + trial % 7;
      const Eigen::Index cols = 2 + (trial * 3) % 5;
      Eigen::MatrixXd w(rows, cols);
      for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = gauss(rng);
      const double oracle = Eigen::JacobiSVD<Eigen::MatrixXd>(w).singularValues()(0);
      CHECK(std::abs(spectral_norm_estimate(w, 200) - oracle) <= 1e-3);
    }
  }
}

TEST_CASE("spectral normalization") {
  SUBCASE("matrix above budget is rescaled") {
    Mlp net(2, 2, 1, 19);
    net.w1() = Eigen::MatrixXd::Zero(2, 2);
    net.w1().diagonal() << 2.0, 1.0;
    net.w2() = Eigen::MatrixXd::Constant(1, 2, 0.1);
    spectral_normalize(net, 1.0, 200);
    CHECK(spectral_norm_estimate(net.w1(), 200) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(net.w1()(0, 0) == doctest::Approx(1.0).epsilon(1e-8));   // scaled by 1/2
    CHECK(net.w1()(1, 1) == doctest::Approx(0.5).epsilon(1e-8));
  }

  SUBCASE("matrix within budget is untouched") {
    Mlp net(2, 2, 1, 23);
    net.w1() = 0.3 * Eigen::MatrixXd::Identity(2, 2);
    const Eigen::MatrixXd before = net.w1();
    spectral_normalize(net, 1.0, 100);
    CHECK((net.w1() - before).norm() == 0.0);
  }

  SUBCASE("difference quotients respect the Lipschitz budget product") {
    Mlp net(3, 32, 2, 29);
    spectral_normalize(net, 1.5, 200);
    const double lip = 1.5 * 1.5;  // per-layer budgets multiply (ReLU is 1-Lipschitz)
    std::mt19937_64 rng(31);
    std::normal_distribution<double> gauss(0.0, 2.0);
    for (int i = 0; i < 1000; ++i) {
      Eigen::Vector3d z1, z2;
      for (int j = 0; j < 3; ++j) {
        z1(j) = gauss(rng);
        z2(j) = gauss(rng);
      }
      const double dy = (net.forward(z1) - net.forward(z2)).norm();
      const double dz = (z1 - z2).norm();
      if (dz > 1e-12) CHECK(dy <= lip * dz * (1.0 + 1e-9));
    }
  }
}
