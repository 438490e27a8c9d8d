#pragma once

// The single JSON document that drives every CLI command.
//
// Every section is optional and starts from its defaults. A top-level
// "seed" is copied into each section that does not set its own seed, and
// extender.n_bar / net.sequence_length default to params.n_bar.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mecsched/config_json.hpp"

namespace mecsched {

struct PathsConfig {
  std::string data_dir = "data";
  std::string checkpoint_dir = "checkpoints";
  std::string report_dir = "reports";
};

struct EvaluationConfig {
  std::vector<std::size_t> k_sweep{1, 5, 10, 20, 40};
  std::vector<double> sigma_sweep{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::size_t oracle_max_n = 16;
};

struct RunConfig {
  SystemParams params;
  InstanceDistribution distribution;
  std::size_t count_per_n = 100;
  GaConfig ga;
  NetConfig net;
  TrainingConfig training;
  ExtenderConfig extender;
  SacConfig sac;
  EvaluationConfig evaluation;
  PathsConfig paths;
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  /// Cross-section checks; throws ConfigError naming the offending field.
  void validate() const;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
};

/// Throws IoError when unreadable, ConfigError when malformed.
RunConfig load_run_config(const std::filesystem::path& file);

}  // namespace mecsched
