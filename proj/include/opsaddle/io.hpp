#pragma once

#include <string>

#include <json.hpp>

#include "opsaddle/linear_model.hpp"
#include "opsaddle/mdp.hpp"

namespace opsaddle {

std::string fnv1a_hex(const std::string& text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

nlohmann::json mdp_to_json(const TabularMdp& mdp);
TabularMdp mdp_from_json(const nlohmann::json& j);

nlohmann::json features_to_json(const FeatureMaps& features);
FeatureMaps features_from_json(const nlohmann::json& j);

nlohmann::json behavior_to_json(const BehaviorDistribution& behavior);
BehaviorDistribution behavior_from_json(const nlohmann::json& j);

// CSV with header `s,a,r,s_next`; lines starting with '#' are comments.
std::string dataset_to_csv(const OfflineDataset& dataset, const std::string& config_hash);
OfflineDataset dataset_from_csv(const std::string& csv, int n_states, int n_actions);

// Constants dump keyed by symbol name, for experiment provenance.
nlohmann::json constants_to_json(const ProblemConstants& c);

}  // namespace opsaddle
