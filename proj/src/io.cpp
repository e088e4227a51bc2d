#include "pss/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pss {

namespace {

constexpr const char* kTrajectorySchema = "# pss-trajectory v1";
constexpr const char* kDatasetFormat = "pss-dataset v1";
constexpr const char* kModelFormat = "pss-mlp-pair v1";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
  return in;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& arr) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = arr[static_cast<std::size_t>(i)].get<double>();
  return v;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  nlohmann::json data = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  j["data"] = data;
  return j;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  Eigen::MatrixXd m(rows, cols);
  const nlohmann::json& data = j.at("data");
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[k++].get<double>();
  return m;
}

}  // namespace

std::string format_full(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

void save_trajectory(const std::filesystem::path& path, const Trajectory& traj) {
  if (traj.lyapunov.size() != traj.states.size()) {
    throw std::invalid_argument("save_trajectory: trajectory must carry V values");
  }
  std::vector<double> vdot = traj.vdot_measured;
  if (vdot.empty()) vdot = measure_vdot(traj, traj.dt);

  std::ofstream out = open_out(path);
  out << kTrajectorySchema << "\n";
  out << "t,theta,theta_dot,u,V,Vdot_measured\n";
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    out << format_full(traj.times[k]) << ',' << format_full(traj.states[k](0)) << ','
        << format_full(traj.states[k](1)) << ',';
    if (k < traj.inputs.size()) out << format_full(traj.inputs[k](0));
    out << ',' << format_full(traj.lyapunov[k]) << ',';
    if (k < vdot.size()) out << format_full(vdot[k]);
    out << "\n";
  }
}

Trajectory load_trajectory(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line != kTrajectorySchema) {
    throw std::runtime_error("load_trajectory: unrecognized schema in " + path.string());
  }
  std::getline(in, line);  // header row

  Trajectory traj;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv(line);
    if (fields.size() != 6) {
      throw std::runtime_error("load_trajectory: malformed row: " + line);
    }
    traj.times.push_back(std::stod(fields[0]));
    traj.states.push_back(Eigen::Vector2d{std::stod(fields[1]), std::stod(fields[2])});
    if (!fields[3].empty()) {
      traj.inputs.push_back(Eigen::VectorXd::Constant(1, std::stod(fields[3])));
    }
    traj.lyapunov.push_back(std::stod(fields[4]));
    if (!fields[5].empty()) traj.vdot_measured.push_back(std::stod(fields[5]));
  }
  if (traj.times.size() >= 2) traj.dt = traj.times[1] - traj.times[0];
  return traj;
}

void save_dataset(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out = open_out(path);
  for (const Sample& s : data.samples()) {
    nlohmann::json j;
    j["format"] = kDatasetFormat;
    j["x"] = vector_to_json(s.x);
    j["u"] = vector_to_json(s.u);
    j["t"] = s.t;
    j["grad_v"] = vector_to_json(s.grad_v);
    j["vdot_measured"] = s.vdot_measured;
    j["vdot_hat"] = s.vdot_hat;
    j["vdot_hat_base"] = s.vdot_hat_base;
    if (s.has_estimates) {
      j["a_hat"] = vector_to_json(s.a_hat);
      j["b_hat"] = s.b_hat;
    }
    out << j.dump() << "\n";
  }
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  Dataset data;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const nlohmann::json j = nlohmann::json::parse(line);
    Sample s;
    s.x = vector_from_json(j.at("x"));
    s.u = vector_from_json(j.at("u"));
    s.t = j.at("t").get<double>();
    s.grad_v = vector_from_json(j.at("grad_v"));
    s.vdot_measured = j.at("vdot_measured").get<double>();
    s.vdot_hat = j.at("vdot_hat").get<double>();
    s.vdot_hat_base = j.at("vdot_hat_base").get<double>();
    if (j.contains("a_hat")) {
      s.a_hat = vector_from_json(j.at("a_hat"));
      s.b_hat = j.at("b_hat").get<double>();
      s.has_estimates = true;
    }
    data.append(std::move(s));
  }
  return data;
}

namespace {

nlohmann::json mlp_to_json(const Mlp& net) {
  nlohmann::json j;
  j["in"] = net.in_dim();
  j["hidden"] = net.hidden_dim();
  j["out"] = net.out_dim();
  j["w1"] = matrix_to_json(net.w1());
  j["b1"] = vector_to_json(net.b1());
  j["w2"] = matrix_to_json(net.w2());
  j["b2"] = vector_to_json(net.b2());
  return j;
}

Mlp mlp_from_json(const nlohmann::json& j) {
  Mlp net(j.at("in").get<Eigen::Index>(), j.at("hidden").get<Eigen::Index>(),
          j.at("out").get<Eigen::Index>(), 0);
  net.w1() = matrix_from_json(j.at("w1"));
  net.b1() = vector_from_json(j.at("b1"));
  net.w2() = matrix_from_json(j.at("w2"));
  net.b2() = vector_from_json(j.at("b2"));
  return net;
}

}  // namespace

void save_estimators(const std::filesystem::path& path, const EstimatorPair& pair) {
  nlohmann::json j;
  j["format"] = kModelFormat;
  j["a"] = mlp_to_json(pair.a_net);
  j["b"] = mlp_to_json(pair.b_net);
  write_json(path, j);
}

EstimatorPair load_estimators(const std::filesystem::path& path) {
  const nlohmann::json j = read_json(path);
  if (j.value("format", "") != kModelFormat) {
    throw std::runtime_error("load_estimators: unrecognized format in " + path.string());
  }
  return EstimatorPair{mlp_from_json(j.at("a")), mlp_from_json(j.at("b"))};
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["pendulum"] = {{"mass", c.estimated.mass},
                   {"length", c.estimated.length},
                   {"gravity", c.estimated.gravity},
                   {"input_limit", c.estimated.input_limit}};
  j["plant"] = {{"perturbation_scale", c.perturbation_scale}};
  j["sim"] = {{"dt", c.dt}, {"horizon", c.horizon}};
  j["reference"] = {{"amplitude", c.reference_amplitude}, {"frequency", c.reference_frequency}};
  j["clf"] = {{"q_angle", c.lqr_q_angle},
              {"q_rate", c.lqr_q_rate},
              {"r", c.lqr_r},
              {"split_fraction", c.split_fraction}};
  j["baseline"] = {{"kp", c.pd_kp}, {"kd", c.pd_kd}};
  j["learn"] = {{"episodes", c.episodes},
                {"trust_steepness", c.trust_steepness},
                {"hidden_units", c.hidden_units},
                {"epochs", c.epochs},
                {"learning_rate", c.learning_rate},
                {"momentum", c.momentum},
                {"batch_size", c.batch_size},
                {"spectral_budget", c.spectral_budget},
                {"power_iterations", c.power_iterations},
                {"explore_scale", c.explore_scale},
                {"explore_floor_factor", c.explore_floor_factor},
                {"x0_box", c.x0_box},
                {"holdout_every", c.holdout_every}};
  j["uncertainty"] = {{"budget_safety", c.budget_safety},
                      {"override_lip_actuation", c.override_lip_actuation},
                      {"override_lip_drift", c.override_lip_drift},
                      {"override_sup_actuation", c.override_sup_actuation},
                      {"override_sup_drift", c.override_sup_drift},
                      {"epsilon_num", c.epsilon_num},
                      {"epsilon_num_safety", c.epsilon_num_safety},
                      {"polyhedron_cap", c.polyhedron_cap}};
  j["certify"] = {{"level", c.certify_level},
                  {"boundary_samples", c.boundary_samples},
                  {"invariance_trajectories", c.invariance_trajectories},
                  {"invariance_horizon", c.invariance_horizon},
                  {"envelope_slack_factor", c.envelope_slack_factor}};
  j["heatmap"] = {{"sigma", c.heatmap_sigma},
                  {"samples_per_point", c.heatmap_samples_per_point},
                  {"bins_angle", c.heatmap_bins_angle},
                  {"bins_rate", c.heatmap_bins_rate},
                  {"angle_min", c.heatmap_angle_min},
                  {"angle_max", c.heatmap_angle_max},
                  {"rate_min", c.heatmap_rate_min},
                  {"rate_max", c.heatmap_rate_max},
                  {"max_points", c.heatmap_max_points}};
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  const auto& pend = j.at("pendulum");
  c.estimated.mass = pend.at("mass").get<double>();
  c.estimated.length = pend.at("length").get<double>();
  c.estimated.gravity = pend.at("gravity").get<double>();
  c.estimated.input_limit = pend.at("input_limit").get<double>();
  c.perturbation_scale = j.at("plant").at("perturbation_scale").get<double>();
  c.dt = j.at("sim").at("dt").get<double>();
  c.horizon = j.at("sim").at("horizon").get<double>();
  c.reference_amplitude = j.at("reference").at("amplitude").get<double>();
  c.reference_frequency = j.at("reference").at("frequency").get<double>();
  const auto& clf = j.at("clf");
  c.lqr_q_angle = clf.at("q_angle").get<double>();
  c.lqr_q_rate = clf.at("q_rate").get<double>();
  c.lqr_r = clf.at("r").get<double>();
  c.split_fraction = clf.at("split_fraction").get<double>();
  c.pd_kp = j.at("baseline").at("kp").get<double>();
  c.pd_kd = j.at("baseline").at("kd").get<double>();
  const auto& learn = j.at("learn");
  c.episodes = learn.at("episodes").get<int>();
  c.trust_steepness = learn.at("trust_steepness").get<double>();
  c.hidden_units = learn.at("hidden_units").get<int>();
  c.epochs = learn.at("epochs").get<int>();
  c.learning_rate = learn.at("learning_rate").get<double>();
  c.momentum = learn.at("momentum").get<double>();
  c.batch_size = learn.at("batch_size").get<int>();
  c.spectral_budget = learn.at("spectral_budget").get<double>();
  c.power_iterations = learn.at("power_iterations").get<int>();
  c.explore_scale = learn.at("explore_scale").get<double>();
  c.explore_floor_factor = learn.at("explore_floor_factor").get<double>();
  c.x0_box = learn.at("x0_box").get<double>();
  c.holdout_every = learn.at("holdout_every").get<int>();
  const auto& unc = j.at("uncertainty");
  c.budget_safety = unc.at("budget_safety").get<double>();
  c.override_lip_actuation = unc.at("override_lip_actuation").get<double>();
  c.override_lip_drift = unc.at("override_lip_drift").get<double>();
  c.override_sup_actuation = unc.at("override_sup_actuation").get<double>();
  c.override_sup_drift = unc.at("override_sup_drift").get<double>();
  c.epsilon_num = unc.at("epsilon_num").get<double>();
  c.epsilon_num_safety = unc.at("epsilon_num_safety").get<double>();
  c.polyhedron_cap = unc.at("polyhedron_cap").get<std::uint64_t>();
  const auto& cert = j.at("certify");
  c.certify_level = cert.at("level").get<double>();
  c.boundary_samples = cert.at("boundary_samples").get<int>();
  c.invariance_trajectories = cert.at("invariance_trajectories").get<int>();
  c.invariance_horizon = cert.at("invariance_horizon").get<double>();
  c.envelope_slack_factor = cert.at("envelope_slack_factor").get<double>();
  const auto& heat = j.at("heatmap");
  c.heatmap_sigma = heat.at("sigma").get<double>();
  c.heatmap_samples_per_point = heat.at("samples_per_point").get<int>();
  c.heatmap_bins_angle = heat.at("bins_angle").get<int>();
  c.heatmap_bins_rate = heat.at("bins_rate").get<int>();
  c.heatmap_angle_min = heat.at("angle_min").get<double>();
  c.heatmap_angle_max = heat.at("angle_max").get<double>();
  c.heatmap_rate_min = heat.at("rate_min").get<double>();
  c.heatmap_rate_max = heat.at("rate_max").get<double>();
  c.heatmap_max_points = heat.at("max_points").get<std::uint64_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.output_dir = j.at("output_dir").get<std::string>();
  return c;
}

std::string config_hash(const ExperimentConfig& config) {
  const std::string canonical = config_to_json(config).dump();
  std::uint64_t h = 1469598103934665603ull;
  for (const char ch : canonical) {
    h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(ch));
    h *= 1099511628211ull;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(h));
  return buffer;
}

nlohmann::json boundary_report_to_json(const BoundaryReport& r) {
  nlohmann::json j;
  j["level"] = r.level;
  j["sample_count"] = r.sample_count;
  j["worst_margin"] = r.worst_margin;
  j["mu"] = r.mu;
  j["pass"] = r.pass;
  j["unbounded_seen"] = r.unbounded_seen;
  j["margins"] = r.margins;
  j["lp_values"] = r.lp_values;
  return j;
}

nlohmann::json invariance_report_to_json(const InvarianceReport& r) {
  nlohmann::json j;
  j["level"] = r.level;
  j["tolerance"] = r.tolerance;
  j["trajectory_count"] = r.trajectory_count;
  j["worst_excess"] = r.worst_excess;
  j["pass"] = r.pass;
  j["max_values"] = r.max_values;
  return j;
}

nlohmann::json pss_check_to_json(const PssCheckReport& r) {
  nlohmann::json j;
  j["holds"] = r.holds;
  j["max_violation"] = r.max_violation;
  j["min_margin"] = r.min_margin;
  j["worst_step"] = r.worst_step;
  return j;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << "\n";
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  nlohmann::json j;
  in >> j;
  return j;
}

}  // namespace pss
