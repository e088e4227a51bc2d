#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "pss/clf.hpp"
#include "pss/config.hpp"
#include "pss/dynamics.hpp"
#include "pss/mlp.hpp"
#include "pss/uncertainty.hpp"

namespace pss {

/// Residual-coefficient estimators (ahat, bhat) over concatenated
/// (state, grad V) features.
struct EstimatorPair {
  Mlp a_net;  // outputs R^m
  Mlp b_net;  // outputs R

  Eigen::VectorXd a_eval(const Eigen::VectorXd& x, const Eigen::VectorXd& grad_v) const;
  double b_eval(const Eigen::VectorXd& x, const Eigen::VectorXd& grad_v) const;
  ResidualModel as_residual_model() const;
};

struct TrainOptions {
  int hidden_units = 200;
  int epochs = 200;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  int batch_size = 64;
  double spectral_budget = 0.0;  // 0 disables spectral normalization
  int power_iterations = 50;
};

TrainOptions train_options_from(const ExperimentConfig& config);

struct TrainStats {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::vector<double> epoch_losses;
};

/// Empirical risk minimization of the squared derivative-prediction error
///   mean (vdot_i - (vdot_base_i + ahat(z_i)'u_i + bhat(z_i)))^2
/// by mini-batch gradient descent with momentum. Features and targets are
/// standardized internally and the affine maps are folded back into the
/// layers, so the returned networks act on raw features. `train_indices`
/// selects the samples used for updates (all when empty); `warm_start`
/// resumes from previously fitted networks of matching shape instead of a
/// fresh initialization. Throws on a non-finite loss.
std::pair<EstimatorPair, TrainStats> erm_fit(const Dataset& data,
                                             const std::vector<std::size_t>& train_indices,
                                             const TrainOptions& options, std::uint64_t seed,
                                             const EstimatorPair* warm_start = nullptr);

/// Non-decreasing logistic trust weights w_k = 1 / (1 + exp(-s (k - (T+1)/2))).
struct TrustSchedule {
  int episodes = 0;
  double steepness = 1.0;
  std::vector<double> weights;
};

TrustSchedule trust_weights(int episodes, double steepness);

/// u + max(scale ||u||, floor) * zeta with zeta uniform on [-1, 1]^m.
Eigen::VectorXd explore(const Eigen::VectorXd& u, double scale, double floor,
                        std::mt19937_64& rng);

/// Quadratic weights for the augmenting program over [u_base; u'].
struct AugmentingQpWeights {
  Eigen::MatrixXd p;  // 2m x 2m, positive semidefinite
  Eigen::VectorXd q;  // 2m
  double r = 0.0;
};

/// P = blockdiag(0_m, I_m), q = 0, r = 0: penalize only the augmentation.
AugmentingQpWeights default_augmenting_weights(Eigen::Index m);

struct AugmentResult {
  Eigen::VectorXd delta_u;
  bool feasible = true;
  double objective = 0.0;
};

/// argmin of the quadratic over u' subject to
///   vdot(u_base + u') <= -alpha_value  and  |u_base + u'| <= u_max,
/// solved exactly for m = 1 (interval active set). On an infeasible
/// constraint system returns the in-bounds constraint-minimizing u' flagged
/// infeasible.
AugmentResult augmenting_qp(const VdotAffine& vdot, double alpha_value,
                            const Eigen::VectorXd& u_base, const AugmentingQpWeights& weights,
                            double u_max);

struct EpisodeMetrics {
  int episode = 0;
  std::size_t first_sample = 0;  // index of this episode's first sample in the dataset
  std::size_t dataset_size = 0;
  double trust = 0.0;
  double train_initial_loss = 0.0;
  double train_final_loss = 0.0;
  double heldout_before = 0.0;  // mean observed loss on fresh held-out samples
  double heldout_after = 0.0;
  double mean_abs_angle_error = 0.0;
  long saturations = 0;
  long infeasible = 0;
};

/// Everything a DaCLyF run produces, including the evaluation trajectories
/// used for tracking comparison.
struct DaclyfResult {
  PendulumParams true_params;
  ClfSynthesis synthesis;
  LipschitzBudget budget;
  double fitted_noise_slack = 0.0;

  Dataset dataset;
  std::optional<EstimatorPair> estimators;
  std::vector<EpisodeMetrics> episodes;
  std::vector<Trajectory> episode_trajectories;
  std::vector<double> trust;

  Trajectory eval_baseline;  // PD controller, no exploration
  Trajectory eval_qp;        // model-based QP controller, no estimators
  Trajectory eval_final;     // trust-weighted augmented controller
  double mean_error_baseline = 0.0;
  double mean_error_qp = 0.0;
  double mean_error_final = 0.0;
};

/// Builds the controller u_0 + w * augment(u_0, vdot_k) as a closure.
Controller make_augmented_controller(const QuadraticCLF& clf, const AffineSystem& est_sys,
                                     const Reference& ref, const Controller& baseline,
                                     const EstimatorPair& estimators, double trust, double u_max,
                                     ControllerLog* log = nullptr);

/// Bound on the forward-difference labeling error, fitted on a shadow run of
/// the estimated model (where the analytic derivative is available) and
/// scaled by `safety`.
double fit_noise_slack(const AffineSystem& est_sys, const QuadraticCLF& clf, const Reference& ref,
                       const Controller& controller, double u_max, double dt, double horizon,
                       double safety);

/// The episodic loop: run an experiment with the current controller plus
/// exploration, aggregate the dataset, refit the estimators against the base
/// derivative estimate, and trust-weight the augmentation into the baseline.
/// Deterministic for a fixed config seed.
DaclyfResult daclyf(const ExperimentConfig& config);

/// Mean |angle - angle_d| along a trajectory.
double mean_abs_angle_error(const Trajectory& traj, const Reference& ref);

}  // namespace pss
