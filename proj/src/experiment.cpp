#include "pss/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include "pss/io.hpp"

namespace pss {

HeatmapGrid compute_heatmap(const Dataset& data, const QuadraticCLF& clf, const Reference& ref,
                            const LipschitzBudget& budget, const ResidualModel* model,
                            const Controller& controller, const ExperimentConfig& config) {
  if (data.empty()) throw std::invalid_argument("compute_heatmap: dataset is empty");

  HeatmapGrid grid;
  const int na = config.heatmap_bins_angle;
  const int nr = config.heatmap_bins_rate;
  grid.angle_edges.resize(static_cast<std::size_t>(na) + 1);
  grid.rate_edges.resize(static_cast<std::size_t>(nr) + 1);
  for (int i = 0; i <= na; ++i) {
    grid.angle_edges[static_cast<std::size_t>(i)] =
        config.heatmap_angle_min +
        (config.heatmap_angle_max - config.heatmap_angle_min) * i / static_cast<double>(na);
  }
  for (int i = 0; i <= nr; ++i) {
    grid.rate_edges[static_cast<std::size_t>(i)] =
        config.heatmap_rate_min +
        (config.heatmap_rate_max - config.heatmap_rate_min) * i / static_cast<double>(nr);
  }
  grid.max_bound = Eigen::MatrixXd::Zero(na, nr);
  grid.counts = Eigen::MatrixXi::Zero(na, nr);
  grid.unbounded = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(na, nr, false);

  // Deterministic subsample of training points when the dataset is large.
  std::vector<std::size_t> points(data.size());
  std::iota(points.begin(), points.end(), std::size_t{0});
  std::mt19937_64 rng(derive_seed(config.seed, "heatmap"));
  if (config.heatmap_max_points > 0 && points.size() > config.heatmap_max_points) {
    std::shuffle(points.begin(), points.end(), rng);
    points.resize(config.heatmap_max_points);
    std::sort(points.begin(), points.end());
  }

  std::normal_distribution<double> gauss(0.0, config.heatmap_sigma);
  const PolyhedronOptions options{config.polyhedron_cap};

  for (const std::size_t idx : points) {
    const Sample& center = data[idx];
    for (int s = 0; s < config.heatmap_samples_per_point; ++s) {
      Eigen::VectorXd x = center.x;
      for (Eigen::Index i = 0; i < x.size(); ++i) x(i) += gauss(rng);

      // Evaluate with the training point's reference phase.
      const QueryPoint query = make_query(clf, ref, center.t, x, model);
      const Eigen::VectorXd u = controller(x, center.t);
      const SupResult sup = sup_linear(build_polyhedron(data, query, budget, options), u);

      const auto ai = static_cast<int>(std::floor(
          (x(0) - config.heatmap_angle_min) / (config.heatmap_angle_max - config.heatmap_angle_min) *
          na));
      const auto ri = static_cast<int>(std::floor(
          (x(1) - config.heatmap_rate_min) / (config.heatmap_rate_max - config.heatmap_rate_min) *
          nr));
      if (ai < 0 || ai >= na || ri < 0 || ri >= nr) continue;

      if (sup.status != LpStatus::kOptimal) {
        grid.unbounded(ai, ri) = true;
      } else if (grid.counts(ai, ri) == 0 || sup.value > grid.max_bound(ai, ri)) {
        grid.max_bound(ai, ri) = sup.value;
      }
      grid.counts(ai, ri) += 1;
    }
  }
  return grid;
}

void save_heatmap(const std::filesystem::path& path, const HeatmapGrid& grid,
                  const ExperimentConfig& config) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << "# pss-heatmap v1\n";
  out << "# reconstruction: sigma=" << format_full(config.heatmap_sigma)
      << " samples_per_point=" << config.heatmap_samples_per_point
      << " max_points=" << config.heatmap_max_points << "\n";
  out << "angle_bin,rate_bin,angle_lo,angle_hi,rate_lo,rate_hi,count,max_bound\n";
  for (Eigen::Index a = 0; a < grid.max_bound.rows(); ++a) {
    for (Eigen::Index r = 0; r < grid.max_bound.cols(); ++r) {
      out << a << ',' << r << ',' << format_full(grid.angle_edges[static_cast<std::size_t>(a)])
          << ',' << format_full(grid.angle_edges[static_cast<std::size_t>(a) + 1]) << ','
          << format_full(grid.rate_edges[static_cast<std::size_t>(r)]) << ','
          << format_full(grid.rate_edges[static_cast<std::size_t>(r) + 1]) << ','
          << grid.counts(a, r) << ',';
      if (grid.unbounded(a, r)) {
        out << "unbounded";
      } else if (grid.counts(a, r) > 0) {
        out << format_full(grid.max_bound(a, r));
      }
      // Empty bins keep an empty bound field.
      out << "\n";
    }
  }
}

TrackingComparison compare_tracking(const Trajectory& baseline, const Trajectory& final_traj,
                                    const Reference& ref) {
  if (baseline.states.size() != final_traj.states.size()) {
    throw std::invalid_argument("compare_tracking: horizons differ");
  }
  TrackingComparison cmp;
  cmp.times = baseline.times;
  cmp.error_baseline.reserve(baseline.states.size());
  cmp.error_final.reserve(final_traj.states.size());
  for (std::size_t k = 0; k < baseline.states.size(); ++k) {
    const double angle_d = ref.state(baseline.times[k])(0);
    cmp.error_baseline.push_back(std::abs(baseline.states[k](0) - angle_d));
    cmp.error_final.push_back(std::abs(final_traj.states[k](0) - angle_d));
    cmp.mean_baseline += cmp.error_baseline.back();
    cmp.mean_final += cmp.error_final.back();
  }
  cmp.mean_baseline /= static_cast<double>(cmp.error_baseline.size());
  cmp.mean_final /= static_cast<double>(cmp.error_final.size());
  return cmp;
}

void save_comparison(const std::filesystem::path& path, const TrackingComparison& cmp) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << "# pss-compare v1\n";
  out << "# mean_baseline=" << format_full(cmp.mean_baseline) << "\n";
  out << "# mean_final=" << format_full(cmp.mean_final) << "\n";
  out << "t,abs_err_baseline,abs_err_final\n";
  for (std::size_t k = 0; k < cmp.times.size(); ++k) {
    out << format_full(cmp.times[k]) << ',' << format_full(cmp.error_baseline[k]) << ','
        << format_full(cmp.error_final[k]) << "\n";
  }
}

TrackingComparison load_comparison(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
  TrackingComparison cmp;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 't') continue;
    std::stringstream ss(line);
    std::string field;
    std::getline(ss, field, ',');
    cmp.times.push_back(std::stod(field));
    std::getline(ss, field, ',');
    cmp.error_baseline.push_back(std::stod(field));
    std::getline(ss, field, ',');
    cmp.error_final.push_back(std::stod(field));
  }
  for (const double e : cmp.error_baseline) cmp.mean_baseline += e;
  for (const double e : cmp.error_final) cmp.mean_final += e;
  if (!cmp.times.empty()) {
    cmp.mean_baseline /= static_cast<double>(cmp.times.size());
    cmp.mean_final /= static_cast<double>(cmp.times.size());
  }
  return cmp;
}

std::vector<double> bound_along_trajectory(const Trajectory& traj, const Dataset& data,
                                           const QuadraticCLF& clf, const Reference& ref,
                                           const LipschitzBudget& budget,
                                           const ResidualModel* model,
                                           const PolyhedronOptions& options) {
  std::vector<double> bounds;
  bounds.reserve(traj.inputs.size());
  for (std::size_t k = 0; k < traj.inputs.size(); ++k) {
    const QueryPoint query = make_query(clf, ref, traj.times[k], traj.states[k], model);
    const SupResult sup = sup_linear(build_polyhedron(data, query, budget, options), traj.inputs[k]);
    bounds.push_back(sup.status == LpStatus::kOptimal
                         ? sup.value
                         : std::numeric_limits<double>::infinity());
  }
  return bounds;
}

Dataset survey_dataset(const AffineSystem& true_sys, const AffineSystem& est_sys,
                       const QuadraticCLF& clf, double dt, double u_max,
                       const SurveyOptions& options, std::uint64_t seed) {
  const Reference ref = Reference::zero(est_sys.state_dim);
  const Controller qp = make_qp_controller(clf, est_sys, ref, u_max);
  SimOptions sim_options;
  sim_options.input_limit = u_max;
  sim_options.lyapunov = [&clf](const Eigen::VectorXd& x, double) { return clf.value(x); };

  Dataset data;
  std::mt19937_64 rng(derive_seed(seed, "survey"));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double log_lo = std::log(options.level_low);
  const double log_hi = std::log(options.level_high);
  const Eigen::MatrixXd l_inv_t =
      Eigen::MatrixXd(clf.p.llt().matrixL()).transpose().inverse();

  for (int r = 0; r < options.rollouts; ++r) {
    const double level = std::exp(log_lo + (log_hi - log_lo) * unit(rng));
    const double phi = 2.0 * M_PI * unit(rng);
    const Eigen::VectorXd x0 =
        std::sqrt(level) * (l_inv_t * Eigen::Vector2d{std::cos(phi), std::sin(phi)});

    auto explore_rng = std::make_shared<std::mt19937_64>(
        derive_seed(seed, "survey-explore", static_cast<std::uint64_t>(r)));
    const Controller exploring = [qp, explore_rng, scale = options.explore_scale,
                                  floor = options.explore_floor](const Eigen::VectorXd& x,
                                                                 double t) {
      return explore(qp(x, t), scale, floor, *explore_rng);
    };

    const Trajectory traj = integrate(true_sys, exploring, x0, options.duration, dt, sim_options);
    const std::vector<double> vdot = measure_vdot(traj, dt);
    for (std::size_t k = 0; k < traj.inputs.size(); ++k) {
      Sample s;
      s.x = traj.states[k];
      s.u = traj.inputs[k];
      s.t = traj.times[k];
      s.grad_v = clf.gradient(traj.states[k]);
      s.vdot_measured = vdot[k];
      s.vdot_hat_base = vdot_estimated(clf, est_sys, ref, s.x, s.u, s.t).total;
      s.vdot_hat = s.vdot_hat_base;
      data.append(std::move(s));
    }
  }
  return data;
}

CertificationOutcome certify_experiment(const ExperimentConfig& config, const DaclyfResult& run,
                                        bool run_invariance) {
  const QuadraticCLF& clf = run.synthesis.clf;
  const AffineSystem est_sys = pendulum_system(config.estimated);
  const AffineSystem true_sys = pendulum_system(run.true_params);

  // Certification lives in the time-invariant setting: the boundary states
  // are error states and the controller is evaluated at the reference origin.
  const Reference ref_zero = Reference::zero(2);
  const ComparisonFn alpha_q = split_alpha(clf.decay, config.split_fraction).second;

  const ResidualModel model =
      run.estimators ? run.estimators->as_residual_model() : ResidualModel{};
  const ResidualModel* model_ptr = run.estimators ? &model : nullptr;

  Dataset snapshot = run.dataset;
  snapshot.refresh(model_ptr);
  const DeltaBuilder delta = make_delta_builder(std::move(snapshot), clf, run.budget, model_ptr,
                                                PolyhedronOptions{config.polyhedron_cap});
  const Controller controller =
      make_qp_controller(clf, est_sys, ref_zero, config.estimated.input_limit, model_ptr);

  CertificationOutcome outcome;
  if (config.certify_level > 0.0) {
    outcome.boundary = check_boundary_condition(clf, config.certify_level, controller, delta,
                                                alpha_q, config.boundary_samples);
  } else {
    // Scan a geometric level grid with coarse sampling, keep the smallest
    // passing level, then redo it at full resolution.
    BoundaryReport best;
    best.worst_margin = -std::numeric_limits<double>::infinity();
    bool found = false;
    for (double level = 1e-3; level <= 10.0; level *= 1.5) {
      const BoundaryReport probe =
          check_boundary_condition(clf, level, controller, delta, alpha_q, 64);
      if (probe.pass) {
        outcome.boundary =
            check_boundary_condition(clf, level, controller, delta, alpha_q,
                                     config.boundary_samples);
        if (outcome.boundary.pass) {
          found = true;
          break;
        }
      }
      if (probe.worst_margin > best.worst_margin) best = probe;
    }
    if (!found) outcome.boundary = best;
  }

  outcome.suggested_level = smallest_invariant_level(clf, alpha_q, outcome.boundary.mu);
  if (outcome.boundary.pass && run_invariance) {
    outcome.invariance = check_forward_invariance(
        clf, outcome.boundary.level, controller, true_sys, config.invariance_trajectories,
        config.invariance_horizon, config.dt);
  }
  outcome.certified =
      outcome.boundary.pass && (!outcome.invariance || outcome.invariance->pass);
  return outcome;
}

namespace {

nlohmann::json episode_to_json(const EpisodeMetrics& m) {
  nlohmann::json j;
  j["episode"] = m.episode;
  j["first_sample"] = m.first_sample;
  j["dataset_size"] = m.dataset_size;
  j["trust"] = m.trust;
  j["train_initial_loss"] = m.train_initial_loss;
  j["train_final_loss"] = m.train_final_loss;
  j["heldout_before"] = m.heldout_before;
  j["heldout_after"] = m.heldout_after;
  j["mean_abs_angle_error"] = m.mean_abs_angle_error;
  j["saturations"] = m.saturations;
  j["infeasible"] = m.infeasible;
  return j;
}

std::string episode_stem(int episode) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "episode_%02d", episode);
  return buffer;
}

}  // namespace

RunArtifacts run_experiment(const ExperimentConfig& config) {
  validate(config);

  RunArtifacts artifacts;
  artifacts.directory = config.output_dir;
  std::filesystem::create_directories(artifacts.directory);

  artifacts.result = daclyf(config);
  const DaclyfResult& run = artifacts.result;
  const Reference ref = sine_reference(config.reference_amplitude, config.reference_frequency);

  // Per-episode artifacts.
  for (std::size_t k = 0; k < run.episode_trajectories.size(); ++k) {
    const std::string stem = episode_stem(static_cast<int>(k) + 1);
    save_trajectory(artifacts.directory / (stem + "_trajectory.csv"),
                    run.episode_trajectories[k]);
    Dataset episode_data;
    const std::size_t first = run.episodes[k].first_sample;
    const std::size_t last =
        k + 1 < run.episodes.size() ? run.episodes[k + 1].first_sample : run.dataset.size();
    for (std::size_t i = first; i < last; ++i) episode_data.append(run.dataset[i]);
    save_dataset(artifacts.directory / (stem + "_data.jsonl"), episode_data);
  }

  save_dataset(artifacts.directory / "dataset.jsonl", run.dataset);
  if (run.estimators) save_estimators(artifacts.directory / "estimators.json", *run.estimators);
  save_trajectory(artifacts.directory / "eval_baseline.csv", run.eval_baseline);
  save_trajectory(artifacts.directory / "eval_qp.csv", run.eval_qp);
  save_trajectory(artifacts.directory / "eval_final.csv", run.eval_final);
  save_comparison(artifacts.directory / "compare.csv",
                  compare_tracking(run.eval_baseline, run.eval_final, ref));

  // Certification report (skipped when there is no data to build sets from).
  nlohmann::json cert_json;
  if (!run.dataset.empty()) {
    artifacts.certification = certify_experiment(config, run);
    cert_json["boundary"] = boundary_report_to_json(artifacts.certification.boundary);
    if (artifacts.certification.invariance) {
      cert_json["invariance"] = invariance_report_to_json(*artifacts.certification.invariance);
    }
    cert_json["suggested_level"] = artifacts.certification.suggested_level;
    cert_json["certified"] = artifacts.certification.certified;
    write_json(artifacts.directory / "certification.json", cert_json);
  }

  // Manifest: config echo, hash, seeds, plant draw, CLF, budget, metrics.
  nlohmann::json manifest;
  manifest["format"] = "pss-manifest v1";
  manifest["config"] = config_to_json(config);
  manifest["config_hash"] = config_hash(config);
  manifest["seed"] = config.seed;
  manifest["true_params"] = {{"mass", run.true_params.mass},
                             {"length", run.true_params.length},
                             {"gravity", run.true_params.gravity},
                             {"input_limit", run.true_params.input_limit}};
  nlohmann::json clf_json;
  clf_json["p"] = {{"rows", 2},
                   {"cols", 2},
                   {"data", {run.synthesis.clf.p(0, 0), run.synthesis.clf.p(0, 1),
                             run.synthesis.clf.p(1, 0), run.synthesis.clf.p(1, 1)}}};
  clf_json["c3"] = run.synthesis.clf.c3;
  clf_json["gain"] = {run.synthesis.gain(0, 0), run.synthesis.gain(0, 1)};
  clf_json["lambda_min"] = run.synthesis.clf.lambda_min;
  clf_json["lambda_max"] = run.synthesis.clf.lambda_max;
  manifest["clf"] = clf_json;
  manifest["budget"] = {{"lip_actuation", run.budget.lip_actuation},
                        {"lip_drift", run.budget.lip_drift},
                        {"sup_actuation", run.budget.sup_actuation},
                        {"sup_drift", run.budget.sup_drift},
                        {"noise_slack", run.budget.noise_slack}};
  manifest["trust"] = run.trust;
  nlohmann::json episodes = nlohmann::json::array();
  for (const EpisodeMetrics& m : run.episodes) episodes.push_back(episode_to_json(m));
  manifest["episodes"] = episodes;
  manifest["evaluation"] = {{"mean_error_baseline", run.mean_error_baseline},
                            {"mean_error_qp", run.mean_error_qp},
                            {"mean_error_final", run.mean_error_final}};
  if (!cert_json.is_null()) manifest["certified"] = cert_json.value("certified", false);
  write_json(artifacts.directory / "manifest.json", manifest);

  return artifacts;
}

}  // namespace pss
