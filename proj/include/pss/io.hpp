#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pss/certify.hpp"
#include "pss/config.hpp"
#include "pss/dynamics.hpp"
#include "pss/learn.hpp"
#include "pss/uncertainty.hpp"

#include "json.hpp"

namespace pss {

/// 17-significant-digit decimal rendering (round-trips binary doubles).
std::string format_full(double value);

// Trajectory files: one row per step `t, theta, theta_dot, u, V,
// Vdot_measured`, plus a final state row with empty input fields.
void save_trajectory(const std::filesystem::path& path, const Trajectory& traj);
Trajectory load_trajectory(const std::filesystem::path& path);

// Dataset files: JSON lines, one sample per line with fields
// x, u, vdot_measured, vdot_hat, grad_v (plus collection metadata).
void save_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset load_dataset(const std::filesystem::path& path);

// Estimator weights with shape headers.
void save_estimators(const std::filesystem::path& path, const EstimatorPair& pair);
EstimatorPair load_estimators(const std::filesystem::path& path);

nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);

/// FNV-1a over the canonical JSON rendering of the config.
std::string config_hash(const ExperimentConfig& config);

nlohmann::json boundary_report_to_json(const BoundaryReport& report);
nlohmann::json invariance_report_to_json(const InvarianceReport& report);
nlohmann::json pss_check_to_json(const PssCheckReport& report);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace pss
