#pragma once

// JSON checkpoint holding one or more trained networks together with the
// normalizer and extender settings they were trained with. The layout is
// described in docs/checkpoint-format.md.

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "mecsched/datagen.hpp"
#include "mecsched/extender.hpp"
#include "mecsched/network.hpp"

namespace mecsched {

inline constexpr int kCheckpointVersion = 1;

struct CheckpointEntry {
  Network network;
  nlohmann::json metadata = nlohmann::json::object();  // training history, sample counts
};

struct Checkpoint {
  std::vector<CheckpointEntry> entries;
  Normalizer normalizer;
  ExtenderConfig extender;

  nlohmann::json to_json() const;
  /// Throws ConfigError on a malformed document or a parameter layout that
  /// does not match the stored NetConfig.
  static Checkpoint from_json(const nlohmann::json& j);
};

/// Throws IoError on filesystem failures.
void save_checkpoint(const std::filesystem::path& file, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& file);

}  // namespace mecsched
