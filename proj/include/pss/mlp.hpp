#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace pss {

/// Two-layer ReLU network y = W2 relu(W1 z + b1) + b2 with column-batched
/// evaluation and analytic backpropagation.
class Mlp {
 public:
  Mlp() = default;
  Mlp(Eigen::Index in_dim, Eigen::Index hidden_dim, Eigen::Index out_dim, std::uint64_t seed);

  Eigen::VectorXd forward(const Eigen::VectorXd& z) const;
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& z) const;  // columns are samples

  struct Gradients {
    Eigen::MatrixXd w1, w2;
    Eigen::VectorXd b1, b2;
  };
  Gradients zero_gradients() const;

  /// Accumulates parameter gradients for the batch given dLoss/dOutput
  /// (same layout as forward_batch output).
  void backward_batch(const Eigen::MatrixXd& z, const Eigen::MatrixXd& dloss_dy,
                      Gradients* grads) const;

  Eigen::MatrixXd& w1() { return w1_; }
  Eigen::MatrixXd& w2() { return w2_; }
  Eigen::VectorXd& b1() { return b1_; }
  Eigen::VectorXd& b2() { return b2_; }
  const Eigen::MatrixXd& w1() const { return w1_; }
  const Eigen::MatrixXd& w2() const { return w2_; }
  const Eigen::VectorXd& b1() const { return b1_; }
  const Eigen::VectorXd& b2() const { return b2_; }

  Eigen::Index in_dim() const { return w1_.cols(); }
  Eigen::Index hidden_dim() const { return w1_.rows(); }
  Eigen::Index out_dim() const { return w2_.rows(); }

 private:
  Eigen::MatrixXd w1_, w2_;
  Eigen::VectorXd b1_, b2_;
};

/// Top singular value by power iteration on W'W (deterministic start).
double spectral_norm_estimate(const Eigen::MatrixXd& w, int power_iterations = 100);

/// Scales each layer so its operator norm is at most `budget`; layers
/// already within budget are untouched. The network Lipschitz constant is
/// then bounded by the product of the layer budgets.
void spectral_normalize(Mlp& net, double budget, int power_iterations = 100);

}  // namespace pss
