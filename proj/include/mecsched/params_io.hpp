#pragma once

// JSON (de)serialization for SystemParams and instances.
//
// SystemParams is a flat object with SI fields; missing fields keep their
// defaults. Noise density is given as at most one of `n0_w_per_hz` or
// `n0_dbm_per_hz`; the dBm form is converted once at load.

#include <json.hpp>

#include "mecsched/model.hpp"

namespace mecsched {

/// Bad configuration content (unknown keys, wrong types, failed invariants).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlohmann::json to_json(const SystemParams& params);
/// Missing fields keep their Table defaults; unknown keys are rejected.
SystemParams params_from_json(const nlohmann::json& j);

/// {"tasks": [[u, c, d, h], ...]} with optional "h_dl": [...] for
/// asymmetric channels.
nlohmann::json instance_to_json(const Instance& instance);
Instance instance_from_json(const nlohmann::json& j);

nlohmann::json schedule_to_json(const Schedule& schedule);
Schedule schedule_from_json(const nlohmann::json& j);

nlohmann::json cost_report_to_json(const CostReport& report);

}  // namespace mecsched
