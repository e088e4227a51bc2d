#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "pss/dynamics.hpp"

namespace pss {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything a run needs: plant, simulation grid, reference, CLF weights,
/// baseline gains, learning hyperparameters, uncertainty budget overrides,
/// certification and heatmap parameters, seeds, and output location.
struct ExperimentConfig {
  // Plant.
  PendulumParams estimated{0.25, 0.5, 9.81, 5.0};
  double perturbation_scale = 0.3;

  // Simulation.
  double dt = 0.01;     // s
  double horizon = 10.0;  // s

  // Reference: angle_d(t) = amplitude * sin(frequency t); amplitude 0 gives
  // the stabilization task.
  double reference_amplitude = 1.0471975511965976;  // pi / 3
  double reference_frequency = 1.0;

  // CLF synthesis and decrease split.
  double lqr_q_angle = 10.0;
  double lqr_q_rate = 1.0;
  double lqr_r = 1.0;
  double split_fraction = 0.5;  // alpha_p share

  // Baseline PD gains.
  double pd_kp = 10.0;
  double pd_kd = 2.0;

  // Episodic learning.
  int episodes = 10;
  double trust_steepness = 1.0;
  int hidden_units = 200;
  int epochs = 200;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  int batch_size = 64;
  double spectral_budget = 0.0;  // 0 disables spectral normalization
  int power_iterations = 50;
  double explore_scale = 0.25;
  double explore_floor_factor = 0.05;  // absolute floor = factor * input limit
  double x0_box = 0.2;                 // initial-condition box around the reference start
  int holdout_every = 5;               // every k-th fresh sample held out per episode

  // Uncertainty budget; negative overrides mean "analytic".
  double budget_safety = 1.1;
  double override_lip_actuation = -1.0;
  double override_lip_drift = -1.0;
  double override_sup_actuation = -1.0;
  double override_sup_drift = -1.0;
  double epsilon_num = -1.0;  // additive label slack; negative fits C*dt
  double epsilon_num_safety = 3.0;
  std::uint64_t polyhedron_cap = 500;

  // Certification.
  double certify_level = -1.0;  // negative scans for a passing level
  int boundary_samples = 720;
  int invariance_trajectories = 100;
  double invariance_horizon = 5.0;
  double envelope_slack_factor = 1.0;  // C in the C*dt envelope slack

  // Heatmap reconstruction parameters.
  double heatmap_sigma = 0.1;
  int heatmap_samples_per_point = 20;
  int heatmap_bins_angle = 50;
  int heatmap_bins_rate = 50;
  double heatmap_angle_min = -3.141592653589793;
  double heatmap_angle_max = 3.141592653589793;
  double heatmap_rate_min = -6.283185307179586;
  double heatmap_rate_max = 6.283185307179586;
  std::uint64_t heatmap_max_points = 400;

  std::uint64_t seed = 2;
  std::string output_dir = "out";
};

/// Throws ConfigError with a field-precise message on the first violation.
void validate(const ExperimentConfig& config);

/// Deterministic stream split: mixes the master seed with a purpose tag and
/// an index (FNV-1a over the tag, then a splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t master, const std::string& tag, std::uint64_t index = 0);

}  // namespace pss
