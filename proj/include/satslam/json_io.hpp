#pragma once

#include <string>

#include <json.hpp>

#include "satslam/factor_graph.hpp"
#include "satslam/sim_harness.hpp"

namespace satslam {

nlohmann::json pose_to_json(const Pose& p);
Pose pose_from_json(const nlohmann::json& j);

/// Graph document with variables (initial values) and factors; "schema": 1.
nlohmann::json graph_to_json(const FactorGraph& g);
FactorGraph graph_from_json(const nlohmann::json& j);

nlohmann::json scene_to_json(const std::vector<Landmark>& scene);
std::vector<Landmark> scene_from_json(const nlohmann::json& j);

nlohmann::json record_to_json(const RunRecord& r);
RunRecord record_from_json(const nlohmann::json& j);

/// Applies the fields present in `j` on top of `cfg` (missing fields keep
/// their current values).
void apply_config_json(const nlohmann::json& j, ExperimentConfig& cfg);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

ExperimentConfig load_config_file(const std::string& path);

} // namespace satslam
