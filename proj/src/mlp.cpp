#include "pss/mlp.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace pss {

Mlp::Mlp(Eigen::Index in_dim, Eigen::Index hidden_dim, Eigen::Index out_dim, std::uint64_t seed) {
  if (in_dim < 1 || hidden_dim < 1 || out_dim < 1) {
    throw std::invalid_argument("Mlp: dimensions must be positive");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double s1 = std::sqrt(2.0 / static_cast<double>(in_dim));
  const double s2 = std::sqrt(2.0 / static_cast<double>(hidden_dim));
  w1_.resize(hidden_dim, in_dim);
  w2_.resize(out_dim, hidden_dim);
  for (Eigen::Index i = 0; i < hidden_dim; ++i)
    for (Eigen::Index j = 0; j < in_dim; ++j) w1_(i, j) = s1 * normal(rng);
  for (Eigen::Index i = 0; i < out_dim; ++i)
    for (Eigen::Index j = 0; j < hidden_dim; ++j) w2_(i, j) = s2 * normal(rng);
  b1_ = Eigen::VectorXd::Zero(hidden_dim);
  b2_ = Eigen::VectorXd::Zero(out_dim);
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& z) const {
  const Eigen::VectorXd h = ((w1_ * z + b1_).array().max(0.0)).matrix();
  return w2_ * h + b2_;
}

Eigen::MatrixXd Mlp::forward_batch(const Eigen::MatrixXd& z) const {
  const Eigen::MatrixXd h =
      (((w1_ * z).colwise() + b1_).array().max(0.0)).matrix();
  return (w2_ * h).colwise() + b2_;
}

Mlp::Gradients Mlp::zero_gradients() const {
  Gradients g;
  g.w1 = Eigen::MatrixXd::Zero(w1_.rows(), w1_.cols());
  g.w2 = Eigen::MatrixXd::Zero(w2_.rows(), w2_.cols());
  g.b1 = Eigen::VectorXd::Zero(b1_.size());
  g.b2 = Eigen::VectorXd::Zero(b2_.size());
  return g;
}

void Mlp::backward_batch(const Eigen::MatrixXd& z, const Eigen::MatrixXd& dloss_dy,
                         Gradients* grads) const {
  const Eigen::MatrixXd pre = (w1_ * z).colwise() + b1_;
  const Eigen::MatrixXd h = (pre.array().max(0.0)).matrix();

  grads->w2 += dloss_dy * h.transpose();
  grads->b2 += dloss_dy.rowwise().sum();

  // Subgradient of the ReLU: active where the pre-activation is positive.
  Eigen::MatrixXd dh = w2_.transpose() * dloss_dy;
  dh = (dh.array() * (pre.array() > 0.0).cast<double>()).matrix();

  grads->w1 += dh * z.transpose();
  grads->b1 += dh.rowwise().sum();
}

double spectral_norm_estimate(const Eigen::MatrixXd& w, int power_iterations) {
  if (power_iterations < 1) throw std::invalid_argument("spectral_norm_estimate: iterations >= 1");
  // Deterministic start with strictly positive, non-uniform entries.
  Eigen::VectorXd v(w.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = 1.0 + 1e-3 * static_cast<double>(i);
  v.normalize();
  double sigma = 0.0;
  for (int it = 0; it < power_iterations; ++it) {
    Eigen::VectorXd u = w * v;
    const double u_norm = u.norm();
    if (u_norm == 0.0) return 0.0;
    u /= u_norm;
    v = w.transpose() * u;
    sigma = v.norm();
    if (sigma == 0.0) return 0.0;
    v /= sigma;
  }
  return sigma;
}

void spectral_normalize(Mlp& net, double budget, int power_iterations) {
  if (!(budget > 0.0)) throw std::invalid_argument("spectral_normalize: budget must be positive");
  for (Eigen::MatrixXd* w : {&net.w1(), &net.w2()}) {
    const double sigma = spectral_norm_estimate(*w, power_iterations);
    if (sigma > budget) *w *= budget / sigma;
  }
}

}  // namespace pss
