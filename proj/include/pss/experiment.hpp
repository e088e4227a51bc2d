#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pss/certify.hpp"
#include "pss/config.hpp"
#include "pss/learn.hpp"
#include "pss/uncertainty.hpp"

namespace pss {

/// Binned worst-case disturbance bounds over the (angle, rate) plane.
/// Bins nobody sampled are marked empty rather than zero; bins that hit an
/// unbounded uncertainty set are flagged.
struct HeatmapGrid {
  std::vector<double> angle_edges;  // bins_angle + 1
  std::vector<double> rate_edges;   // bins_rate + 1
  Eigen::MatrixXd max_bound;        // bins_angle x bins_rate
  Eigen::MatrixXi counts;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> unbounded;
};

/// Samples Gaussian perturbations around training states, evaluates the
/// worst-case projected disturbance under the controller at each sample, and
/// keeps the per-bin maximum.
HeatmapGrid compute_heatmap(const Dataset& data, const QuadraticCLF& clf, const Reference& ref,
                            const LipschitzBudget& budget, const ResidualModel* model,
                            const Controller& controller, const ExperimentConfig& config);

void save_heatmap(const std::filesystem::path& path, const HeatmapGrid& grid,
                  const ExperimentConfig& config);

/// Per-step absolute angle tracking errors for two runs over the same grid.
struct TrackingComparison {
  std::vector<double> times;
  std::vector<double> error_baseline;
  std::vector<double> error_final;
  double mean_baseline = 0.0;
  double mean_final = 0.0;
};

TrackingComparison compare_tracking(const Trajectory& baseline, const Trajectory& final_traj,
                                    const Reference& ref);

void save_comparison(const std::filesystem::path& path, const TrackingComparison& cmp);
TrackingComparison load_comparison(const std::filesystem::path& path);

/// Worst-case disturbance bound along a trajectory, evaluated at the
/// recorded states and inputs; +infinity marks an unbounded set.
std::vector<double> bound_along_trajectory(const Trajectory& traj, const Dataset& data,
                                           const QuadraticCLF& clf, const Reference& ref,
                                           const LipschitzBudget& budget,
                                           const ResidualModel* model,
                                           const PolyhedronOptions& options = {});

/// Dense measurement sweep for certification: many short rollouts started on
/// sublevel-set boundaries across a band of levels, so the uncertainty sets
/// near any boundary in the band are anchored to nearby data.
struct SurveyOptions {
  int rollouts = 200;
  double duration = 0.3;     // seconds per rollout
  double level_low = 0.01;   // starting-level band
  double level_high = 0.6;
  double explore_scale = 0.25;
  double explore_floor = 0.25;
};

Dataset survey_dataset(const AffineSystem& true_sys, const AffineSystem& est_sys,
                       const QuadraticCLF& clf, double dt, double u_max,
                       const SurveyOptions& options, std::uint64_t seed);

struct CertificationOutcome {
  BoundaryReport boundary;
  std::optional<InvarianceReport> invariance;
  double suggested_level = 0.0;  // smallest sublevel value per the mu bound
  bool certified = false;
};

/// Boundary check at the configured level (scanning a geometric level grid
/// when the config asks for auto selection), followed by a forward-invariance
/// simulation when the boundary condition passes.
CertificationOutcome certify_experiment(const ExperimentConfig& config, const DaclyfResult& run,
                                        bool run_invariance = true);

struct RunArtifacts {
  std::filesystem::path directory;
  DaclyfResult result;
  CertificationOutcome certification;
};

/// Full pipeline: episodic learning, evaluation runs, certification, and all
/// artifact files (manifest, per-episode data and trajectories, final
/// dataset, estimator weights, comparison table, certification report).
RunArtifacts run_experiment(const ExperimentConfig& config);

}  // namespace pss
