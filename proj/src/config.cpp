#include "pss/config.hpp"

namespace pss {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError("config: " + message);
}

}  // namespace

void validate(const ExperimentConfig& c) {
  require(c.estimated.mass > 0.0, "pendulum.mass must be positive");
  require(c.estimated.length > 0.0, "pendulum.length must be positive");
  require(c.estimated.gravity > 0.0, "pendulum.gravity must be positive");
  require(c.estimated.input_limit > 0.0, "pendulum.input-limit must be positive");
  require(c.perturbation_scale >= 0.0 && c.perturbation_scale <= 0.3,
          "plant.perturbation-scale must lie in [0, 0.3]");
  require(c.dt > 0.0, "sim.dt must be positive");
  require(c.horizon >= c.dt, "sim.horizon must be at least one step");
  require(c.reference_amplitude >= 0.0, "reference.amplitude must be nonnegative");
  require(c.reference_frequency > 0.0, "reference.frequency must be positive");
  require(c.lqr_q_angle > 0.0 && c.lqr_q_rate > 0.0, "clf.q weights must be positive");
  require(c.lqr_r > 0.0, "clf.r must be positive");
  require(c.split_fraction > 0.0 && c.split_fraction < 1.0,
          "clf.split-fraction must lie in (0, 1)");
  require(c.pd_kp >= 0.0 && c.pd_kd >= 0.0, "baseline gains must be nonnegative");
  require(c.episodes >= 0, "learn.episodes must be nonnegative");
  require(c.trust_steepness > 0.0, "learn.trust-steepness must be positive");
  require(c.hidden_units >= 1, "learn.hidden-units must be positive");
  require(c.epochs >= 1, "learn.epochs must be positive");
  require(c.learning_rate > 0.0, "learn.learning-rate must be positive");
  require(c.momentum >= 0.0 && c.momentum < 1.0, "learn.momentum must lie in [0, 1)");
  require(c.batch_size >= 1, "learn.batch-size must be positive");
  require(c.spectral_budget >= 0.0, "learn.spectral-budget must be nonnegative");
  require(c.power_iterations >= 1, "learn.power-iterations must be positive");
  require(c.explore_scale >= 0.0, "learn.explore-scale must be nonnegative");
  require(c.explore_floor_factor >= 0.0, "learn.explore-floor-factor must be nonnegative");
  require(c.x0_box >= 0.0, "learn.x0-box must be nonnegative");
  require(c.holdout_every >= 2, "learn.holdout-every must be at least 2");
  require(c.budget_safety >= 1.0, "uncertainty.budget-safety must be at least 1");
  require(c.epsilon_num_safety >= 1.0, "uncertainty.epsilon-num-safety must be at least 1");
  require(c.boundary_samples >= 4, "certify.boundary-samples must be at least 4");
  require(c.invariance_trajectories >= 1, "certify.trajectories must be positive");
  require(c.invariance_horizon >= c.dt, "certify.horizon must be at least one step");
  require(c.envelope_slack_factor >= 0.0, "certify.envelope-slack-factor must be nonnegative");
  require(c.heatmap_sigma > 0.0, "heatmap.sigma must be positive");
  require(c.heatmap_samples_per_point >= 1, "heatmap.samples-per-point must be positive");
  require(c.heatmap_bins_angle >= 1 && c.heatmap_bins_rate >= 1,
          "heatmap bin counts must be positive");
  require(c.heatmap_angle_max > c.heatmap_angle_min, "heatmap angle range is empty");
  require(c.heatmap_rate_max > c.heatmap_rate_min, "heatmap rate range is empty");
  require(!c.output_dir.empty(), "output-dir must not be empty");
}

std::uint64_t derive_seed(std::uint64_t master, const std::string& tag, std::uint64_t index) {
  std::uint64_t h = 1469598103934665603ull ^ master;
  for (const char ch : tag) {
    h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(ch));
    h *= 1099511628211ull;
  }
  h ^= index + 0x9e3779b97f4a7c15ull;
  // splitmix64 finalizer
  h ^= h >> 30;
  h *= 0xbf58476d1ce4e5b9ull;
  h ^= h >> 27;
  h *= 0x94d049bb133111ebull;
  h ^= h >> 31;
  return h;
}

}  // namespace pss
