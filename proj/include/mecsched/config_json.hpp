#pragma once

// JSON converters for the configuration structs of each module. Parsers
// start from defaults, accept partial objects and reject unknown keys with
// ConfigError.

#include <json.hpp>

#include "mecsched/datagen.hpp"
#include "mecsched/extender.hpp"
#include "mecsched/ga.hpp"
#include "mecsched/network.hpp"
#include "mecsched/params_io.hpp"
#include "mecsched/scheduler.hpp"
#include "mecsched/training.hpp"

namespace mecsched {

nlohmann::json to_json(const InstanceDistribution& dist);
InstanceDistribution distribution_from_json(const nlohmann::json& j);

nlohmann::json to_json(const GaConfig& cfg);
GaConfig ga_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const NetConfig& cfg);
NetConfig net_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ExtenderConfig& cfg);
ExtenderConfig extender_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SacConfig& cfg);
SacConfig sac_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TrainingConfig& cfg);
TrainingConfig training_config_from_json(const nlohmann::json& j);

}  // namespace mecsched
