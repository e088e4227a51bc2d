// Command-line driver: episodic learning runs, one-off simulations,
// certification of recorded runs, disturbance-bound heatmaps, and tracking
// comparisons. Flags mirror the config-file keys; precedence is
// command line > config file > defaults.

#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "pss/certify.hpp"
#include "pss/experiment.hpp"
#include "pss/io.hpp"
#include "pss/learn.hpp"

namespace {

constexpr int kExitConfigError = 2;
constexpr int kExitCertificationFail = 3;
constexpr int kExitUnboundedEverywhere = 4;

void add_config_options(CLI::App* cmd, pss::ExperimentConfig* c) {
  cmd->set_config("--config", "", "Read options from an INI-style config file");

  cmd->add_option("--pendulum.mass", c->estimated.mass, "Estimated pendulum mass [kg]");
  cmd->add_option("--pendulum.length", c->estimated.length, "Estimated rod length [m]");
  cmd->add_option("--pendulum.gravity", c->estimated.gravity, "Gravity [m/s^2]");
  cmd->add_option("--pendulum.input-limit", c->estimated.input_limit, "Torque limit [N*m]");
  cmd->add_option("--plant.perturbation-scale", c->perturbation_scale,
                  "True-parameter perturbation band, at most 0.3");
  cmd->add_option("--sim.dt", c->dt, "Integration step [s]");
  cmd->add_option("--sim.horizon", c->horizon, "Experiment horizon [s]");
  cmd->add_option("--reference.amplitude", c->reference_amplitude,
                  "Angle reference amplitude [rad]; 0 selects stabilization");
  cmd->add_option("--reference.frequency", c->reference_frequency, "Reference frequency [rad/s]");
  cmd->add_option("--clf.q-angle", c->lqr_q_angle, "LQR angle weight");
  cmd->add_option("--clf.q-rate", c->lqr_q_rate, "LQR rate weight");
  cmd->add_option("--clf.r", c->lqr_r, "LQR input weight");
  cmd->add_option("--clf.split-fraction", c->split_fraction,
                  "Fraction of the decrease assigned to alpha_p");
  cmd->add_option("--baseline.kp", c->pd_kp, "PD proportional gain");
  cmd->add_option("--baseline.kd", c->pd_kd, "PD derivative gain");
  cmd->add_option("--learn.episodes", c->episodes, "Number of episodes");
  cmd->add_option("--learn.trust-steepness", c->trust_steepness, "Trust sigmoid steepness");
  cmd->add_option("--learn.hidden-units", c->hidden_units, "Hidden units per estimator");
  cmd->add_option("--learn.epochs", c->epochs, "Training epochs per episode");
  cmd->add_option("--learn.learning-rate", c->learning_rate, "SGD learning rate");
  cmd->add_option("--learn.momentum", c->momentum, "SGD momentum");
  cmd->add_option("--learn.batch-size", c->batch_size, "Mini-batch size");
  cmd->add_option("--learn.spectral-budget", c->spectral_budget,
                  "Per-layer operator-norm budget; 0 disables");
  cmd->add_option("--learn.power-iterations", c->power_iterations, "Power-iteration count");
  cmd->add_option("--learn.explore-scale", c->explore_scale, "Exploration scale on ||u||");
  cmd->add_option("--learn.explore-floor-factor", c->explore_floor_factor,
                  "Exploration floor as a fraction of the torque limit");
  cmd->add_option("--learn.x0-box", c->x0_box, "Initial-condition box half-width");
  cmd->add_option("--learn.holdout-every", c->holdout_every,
                  "Hold out every k-th fresh sample per episode");
  cmd->add_option("--uncertainty.budget-safety", c->budget_safety, "Analytic budget safety factor");
  cmd->add_option("--uncertainty.lip-actuation", c->override_lip_actuation,
                  "Override L_A (negative keeps the analytic value)");
  cmd->add_option("--uncertainty.lip-drift", c->override_lip_drift, "Override L_b");
  cmd->add_option("--uncertainty.sup-actuation", c->override_sup_actuation, "Override sup ||A||");
  cmd->add_option("--uncertainty.sup-drift", c->override_sup_drift, "Override sup ||b||");
  cmd->add_option("--uncertainty.epsilon-num", c->epsilon_num,
                  "Additive label slack (negative fits C*dt)");
  cmd->add_option("--uncertainty.epsilon-num-safety", c->epsilon_num_safety,
                  "Safety factor on the fitted label slack");
  cmd->add_option("--uncertainty.polyhedron-cap", c->polyhedron_cap,
                  "Nearest data rows kept per uncertainty set; 0 keeps all");
  cmd->add_option("--certify.level", c->certify_level,
                  "Sublevel value to certify (negative scans)");
  cmd->add_option("--certify.boundary-samples", c->boundary_samples, "Boundary sample count");
  cmd->add_option("--certify.trajectories", c->invariance_trajectories,
                  "Forward-invariance trajectory count");
  cmd->add_option("--certify.horizon", c->invariance_horizon, "Forward-invariance horizon [s]");
  cmd->add_option("--certify.envelope-slack-factor", c->envelope_slack_factor,
                  "C in the C*dt envelope slack");
  cmd->add_option("--heatmap.sigma", c->heatmap_sigma, "Sampling sigma per coordinate");
  cmd->add_option("--heatmap.samples-per-point", c->heatmap_samples_per_point,
                  "Samples drawn around each training point");
  cmd->add_option("--heatmap.bins-angle", c->heatmap_bins_angle, "Angle bins");
  cmd->add_option("--heatmap.bins-rate", c->heatmap_bins_rate, "Rate bins");
  cmd->add_option("--heatmap.angle-min", c->heatmap_angle_min, "Angle range low [rad]");
  cmd->add_option("--heatmap.angle-max", c->heatmap_angle_max, "Angle range high [rad]");
  cmd->add_option("--heatmap.rate-min", c->heatmap_rate_min, "Rate range low [rad/s]");
  cmd->add_option("--heatmap.rate-max", c->heatmap_rate_max, "Rate range high [rad/s]");
  cmd->add_option("--heatmap.max-points", c->heatmap_max_points,
                  "Training points sampled around; 0 keeps all");
  cmd->add_option("--seed", c->seed, "Master seed");
  cmd->add_option("--output-dir", c->output_dir, "Artifact directory")->envname("PSS_OUTPUT_DIR");
}

// Rebuilds the pieces certify/heatmap need from a recorded run directory.
struct LoadedRun {
  pss::ExperimentConfig config;
  pss::DaclyfResult result;
};

LoadedRun load_run(const std::filesystem::path& dir) {
  const nlohmann::json manifest = pss::read_json(dir / "manifest.json");
  LoadedRun run;
  run.config = pss::config_from_json(manifest.at("config"));

  run.result.true_params.mass = manifest.at("true_params").at("mass").get<double>();
  run.result.true_params.length = manifest.at("true_params").at("length").get<double>();
  run.result.true_params.gravity = manifest.at("true_params").at("gravity").get<double>();
  run.result.true_params.input_limit = manifest.at("true_params").at("input_limit").get<double>();

  const pss::AffineSystem est_sys = pss::pendulum_system(run.config.estimated);
  Eigen::MatrixXd q = Eigen::Vector2d{run.config.lqr_q_angle, run.config.lqr_q_rate}.asDiagonal();
  Eigen::MatrixXd r = Eigen::MatrixXd::Constant(1, 1, run.config.lqr_r);
  run.result.synthesis = pss::synthesize_clf(est_sys, q, r);

  run.result.budget.lip_actuation = manifest.at("budget").at("lip_actuation").get<double>();
  run.result.budget.lip_drift = manifest.at("budget").at("lip_drift").get<double>();
  run.result.budget.sup_actuation = manifest.at("budget").at("sup_actuation").get<double>();
  run.result.budget.sup_drift = manifest.at("budget").at("sup_drift").get<double>();
  run.result.budget.noise_slack = manifest.at("budget").at("noise_slack").get<double>();

  run.result.dataset = pss::load_dataset(dir / "dataset.jsonl");
  const auto estimator_path = dir / "estimators.json";
  if (std::filesystem::exists(estimator_path)) {
    run.result.estimators = pss::load_estimators(estimator_path);
  }
  if (manifest.contains("trust")) {
    run.result.trust = manifest.at("trust").get<std::vector<double>>();
  }
  return run;
}

int run_simulate(const pss::ExperimentConfig& config, const std::string& controller_name) {
  pss::validate(config);
  const pss::AffineSystem est_sys = pss::pendulum_system(config.estimated);
  const pss::PendulumParams true_params = pss::sample_true_params(
      config.estimated, config.perturbation_scale, pss::derive_seed(config.seed, "plant"));
  const pss::AffineSystem true_sys = pss::pendulum_system(true_params);
  const pss::Reference ref =
      pss::sine_reference(config.reference_amplitude, config.reference_frequency);

  Eigen::MatrixXd q = Eigen::Vector2d{config.lqr_q_angle, config.lqr_q_rate}.asDiagonal();
  Eigen::MatrixXd r = Eigen::MatrixXd::Constant(1, 1, config.lqr_r);
  const pss::ClfSynthesis synthesis = pss::synthesize_clf(est_sys, q, r);

  pss::Controller controller;
  if (controller_name == "pd") {
    controller = pss::make_pd_controller(config.pd_kp, config.pd_kd, ref,
                                         config.estimated.input_limit);
  } else if (controller_name == "qp") {
    controller = pss::make_qp_controller(synthesis.clf, est_sys, ref,
                                         config.estimated.input_limit);
  } else {
    throw pss::ConfigError("simulate: unknown controller '" + controller_name + "'");
  }

  pss::SimOptions options;
  options.input_limit = config.estimated.input_limit;
  options.lyapunov = [clf = synthesis.clf, ref](const Eigen::VectorXd& x, double t) {
    return clf.value(x - ref.state(t));
  };
  Eigen::VectorXd x0 = ref.state(0.0);
  {
    std::mt19937_64 rng(pss::derive_seed(config.seed, "x0", 1));
    std::uniform_real_distribution<double> box(-config.x0_box, config.x0_box);
    for (Eigen::Index i = 0; i < x0.size(); ++i) x0(i) += box(rng);
  }
  pss::Trajectory traj =
      pss::integrate(true_sys, controller, x0, config.horizon, config.dt, options);
  traj.vdot_measured = pss::measure_vdot(traj, config.dt);

  std::filesystem::create_directories(config.output_dir);
  const auto path = std::filesystem::path(config.output_dir) /
                    ("simulate_" + controller_name + ".csv");
  pss::save_trajectory(path, traj);
  std::cout << "wrote " << path.string() << "\n";
  return 0;
}

int run_certify(const pss::ExperimentConfig& cli_config, const std::string& from_dir) {
  LoadedRun run = load_run(from_dir);
  // Certification knobs come from the command line; the run artifacts pin
  // everything physical.
  run.config.certify_level = cli_config.certify_level;
  run.config.boundary_samples = cli_config.boundary_samples;
  run.config.invariance_trajectories = cli_config.invariance_trajectories;
  run.config.invariance_horizon = cli_config.invariance_horizon;
  run.config.split_fraction = cli_config.split_fraction;
  run.config.polyhedron_cap = cli_config.polyhedron_cap;

  const pss::CertificationOutcome outcome = pss::certify_experiment(run.config, run.result);

  nlohmann::json report;
  report["boundary"] = pss::boundary_report_to_json(outcome.boundary);
  if (outcome.invariance) {
    report["invariance"] = pss::invariance_report_to_json(*outcome.invariance);
  }
  report["suggested_level"] = outcome.suggested_level;
  report["certified"] = outcome.certified;
  const auto path = std::filesystem::path(from_dir) / "certification.json";
  pss::write_json(path, report);

  std::cout << (outcome.certified ? "certified" : "not certified") << " at level "
            << outcome.boundary.level << " (worst margin " << outcome.boundary.worst_margin
            << ", mu " << outcome.boundary.mu << ")\n"
            << "wrote " << path.string() << "\n";
  return outcome.certified ? 0 : kExitCertificationFail;
}

int run_heatmap(const pss::ExperimentConfig& cli_config, const std::string& from_dir,
                const std::string& controller_name) {
  LoadedRun run = load_run(from_dir);
  run.config.heatmap_sigma = cli_config.heatmap_sigma;
  run.config.heatmap_samples_per_point = cli_config.heatmap_samples_per_point;
  run.config.heatmap_bins_angle = cli_config.heatmap_bins_angle;
  run.config.heatmap_bins_rate = cli_config.heatmap_bins_rate;
  run.config.heatmap_angle_min = cli_config.heatmap_angle_min;
  run.config.heatmap_angle_max = cli_config.heatmap_angle_max;
  run.config.heatmap_rate_min = cli_config.heatmap_rate_min;
  run.config.heatmap_rate_max = cli_config.heatmap_rate_max;
  run.config.heatmap_max_points = cli_config.heatmap_max_points;
  run.config.polyhedron_cap = cli_config.polyhedron_cap;

  const pss::AffineSystem est_sys = pss::pendulum_system(run.config.estimated);
  const pss::Reference ref =
      pss::sine_reference(run.config.reference_amplitude, run.config.reference_frequency);
  const pss::QuadraticCLF& clf = run.result.synthesis.clf;
  const double u_max = run.config.estimated.input_limit;

  // Each panel pairs a controller with its own derivative estimator: only
  // the final augmented controller carries the learned terms.
  pss::ResidualModel model;
  const pss::ResidualModel* model_ptr = nullptr;

  pss::Controller controller;
  if (controller_name == "pd") {
    controller = pss::make_pd_controller(run.config.pd_kp, run.config.pd_kd, ref, u_max);
  } else if (controller_name == "qp") {
    controller = pss::make_qp_controller(clf, est_sys, ref, u_max);
  } else if (controller_name == "final") {
    if (!run.result.estimators) {
      throw pss::ConfigError("heatmap: run has no estimators; 'final' unavailable");
    }
    model = run.result.estimators->as_residual_model();
    model_ptr = &model;
    const double trust = run.result.trust.empty() ? 1.0 : run.result.trust.back();
    controller = pss::make_augmented_controller(
        clf, est_sys, ref,
        pss::make_pd_controller(run.config.pd_kp, run.config.pd_kd, ref, u_max),
        *run.result.estimators, trust, u_max);
  } else {
    throw pss::ConfigError("heatmap: unknown controller '" + controller_name + "'");
  }

  run.result.dataset.refresh(model_ptr);
  const pss::HeatmapGrid grid = pss::compute_heatmap(run.result.dataset, clf, ref,
                                                     run.result.budget, model_ptr, controller,
                                                     run.config);

  const auto path =
      std::filesystem::path(from_dir) / ("heatmap_" + controller_name + ".csv");
  pss::save_heatmap(path, grid, run.config);
  std::cout << "wrote " << path.string() << "\n";

  bool any_bounded = false;
  bool any_sampled = false;
  for (Eigen::Index a = 0; a < grid.counts.rows() && !any_bounded; ++a) {
    for (Eigen::Index r = 0; r < grid.counts.cols() && !any_bounded; ++r) {
      if (grid.counts(a, r) > 0) {
        any_sampled = true;
        if (!grid.unbounded(a, r)) any_bounded = true;
      }
    }
  }
  if (any_sampled && !any_bounded) {
    std::cerr << "every sampled bin hit an unbounded uncertainty set\n";
    return kExitUnboundedEverywhere;
  }
  return 0;
}

int run_compare(const pss::ExperimentConfig& config, const std::string& baseline_path,
                const std::string& final_path, const std::string& out_path) {
  const pss::Trajectory baseline = pss::load_trajectory(baseline_path);
  const pss::Trajectory final_traj = pss::load_trajectory(final_path);
  if (baseline.states.size() != final_traj.states.size()) {
    throw pss::ConfigError("compare: trajectory horizons differ");
  }
  const pss::Reference ref =
      pss::sine_reference(config.reference_amplitude, config.reference_frequency);
  const pss::TrackingComparison cmp = pss::compare_tracking(baseline, final_traj, ref);
  pss::save_comparison(out_path, cmp);
  std::cout << "mean_baseline " << pss::format_full(cmp.mean_baseline) << "\n"
            << "mean_final " << pss::format_full(cmp.mean_final) << "\n"
            << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Projection-to-state stability toolkit for an uncertain pendulum"};
  app.require_subcommand(1);

  pss::ExperimentConfig config;
  std::string sim_controller = "pd";
  std::string from_dir;
  std::string heatmap_controller = "final";
  std::string compare_baseline, compare_final, compare_out = "compare.csv";

  CLI::App* simulate = app.add_subcommand("simulate", "Run one closed-loop trajectory");
  add_config_options(simulate, &config);
  simulate->add_option("--controller", sim_controller, "pd or qp");

  CLI::App* learn = app.add_subcommand("learn", "Run the episodic learning pipeline");
  add_config_options(learn, &config);

  CLI::App* certify = app.add_subcommand("certify", "Certify a recorded run");
  add_config_options(certify, &config);
  certify->add_option("--from", from_dir, "Run artifact directory")->required();

  CLI::App* heatmap = app.add_subcommand("heatmap", "Disturbance-bound heatmap for a run");
  add_config_options(heatmap, &config);
  heatmap->add_option("--from", from_dir, "Run artifact directory")->required();
  heatmap->add_option("--controller", heatmap_controller, "pd, qp, or final");

  CLI::App* compare = app.add_subcommand("compare", "Tracking-error comparison of two runs");
  add_config_options(compare, &config);
  compare->add_option("--baseline", compare_baseline, "Baseline trajectory CSV")->required();
  compare->add_option("--final", compare_final, "Comparison trajectory CSV")->required();
  compare->add_option("--out", compare_out, "Output CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfigError;
  }

  try {
    if (simulate->parsed()) return run_simulate(config, sim_controller);
    if (learn->parsed()) {
      pss::RunArtifacts artifacts = pss::run_experiment(config);
      std::cout << "artifacts in " << artifacts.directory.string() << "\n"
                << "mean_error_baseline "
                << pss::format_full(artifacts.result.mean_error_baseline) << "\n"
                << "mean_error_final " << pss::format_full(artifacts.result.mean_error_final)
                << "\n";
      return 0;
    }
    if (certify->parsed()) return run_certify(config, from_dir);
    if (heatmap->parsed()) return run_heatmap(config, from_dir, heatmap_controller);
    if (compare->parsed()) return run_compare(config, compare_baseline, compare_final, compare_out);
  } catch (const pss::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
