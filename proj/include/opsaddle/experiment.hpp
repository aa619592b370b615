#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "opsaddle/ospim.hpp"
#include "opsaddle/problem.hpp"
#include "opsaddle/psreda.hpp"

namespace opsaddle {

// Parsed and validated experiment configuration. Unknown keys are rejected;
// `overrides` pins any schedule constant for ablation.
struct ExperimentConfig {
  enum class MdpSource { file, inline_json, random };
  MdpSource mdp_source = MdpSource::random;
  std::string mdp_file;
  nlohmann::json mdp_inline;
  int rand_states = 0;
  int rand_actions = 0;
  double rand_gamma = 0.0;
  std::uint64_t rand_seed = 0;

  enum class FeatureFamily { onehot, random };
  FeatureFamily feature_family = FeatureFamily::onehot;
  int dim_z = 0;
  int dim_xi = 0;
  std::uint64_t feature_seed = 0;

  enum class BehaviorKind { uniform, file };
  BehaviorKind behavior_kind = BehaviorKind::uniform;
  std::string behavior_file;

  int dataset_n = 0;
  double lambda_w = 0.0;
  double lambda_Q = 0.0;
  std::string algorithm;  // "psreda" | "ospim"
  OracleKind oracle_kind = OracleKind::least_square;
  double epsilon = 0.0;
  std::vector<std::uint64_t> seeds;
  std::string output_dir;
  std::map<std::string, double> overrides;
  bool infinite_data = false;

  std::vector<std::int64_t> compare_budgets{4000, 16000, 64000};
  int compare_seeds = 20;
  std::vector<double> bias_lambdas{0.2, 0.1, 0.05, 0.025};
  int bias_probe_policies = 16;
  int bias_probe_points = 32;

  std::string hash;
  nlohmann::json raw;

  double override_or(const std::string& key, double fallback) const;
  std::uint64_t dataset_seed() const;
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

struct Instance {
  TabularMdp mdp;
  BehaviorDistribution behavior;
  FeatureMaps features;
};

Instance build_instance(const ExperimentConfig& config, const std::string& base_dir);

Problem build_problem(const ExperimentConfig& config, const Instance& instance);

PsredaConfig psreda_config_for(const ExperimentConfig& config, const ProblemConstants& c);
OspimConfig ospim_config_for(const ExperimentConfig& config, const ProblemConstants& c);

int worker_threads();

void cmd_generate(const ExperimentConfig& config, const std::string& base_dir);
void cmd_run(const ExperimentConfig& config, const std::string& base_dir);
void cmd_compare_oracles(const ExperimentConfig& config, const std::string& base_dir);
void cmd_bias_report(const ExperimentConfig& config, const std::string& base_dir);
// Prints one line per invariant; returns the number of failures.
int cmd_check(const ExperimentConfig& config, const std::string& base_dir);

}  // namespace opsaddle
