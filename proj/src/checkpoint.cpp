#include "mecsched/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "mecsched/config_json.hpp"

namespace mecsched {

using nlohmann::json;

json Checkpoint::to_json() const {
  json nets = json::array();
  for (const auto& entry : entries) {
    const Parameters& p = entry.network.parameters();
    json params = json::array();
    for (const auto& slot : p.slots()) {
      const auto first = p.values().begin() + static_cast<std::ptrdiff_t>(slot.offset);
      params.push_back({{"name", slot.name},
                        {"rows", slot.rows},
                        {"cols", slot.cols},
                        {"values", std::vector<double>(first, first + slot.rows * slot.cols)}});
    }
    nets.push_back({{"config", mecsched::to_json(entry.network.config())},
                    {"parameter_count", p.size()},
                    {"metadata", entry.metadata},
                    {"parameters", std::move(params)}});
  }
  return json{{"format", "mecsched-checkpoint"},
              {"version", kCheckpointVersion},
              {"normalizer", normalizer.to_json()},
              {"extender", mecsched::to_json(extender)},
              {"networks", std::move(nets)}};
}

Checkpoint Checkpoint::from_json(const json& j) {
  try {
    if (!j.is_object() || j.value("format", "") != "mecsched-checkpoint") {
      throw ConfigError("not a checkpoint document");
    }
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw ConfigError("unsupported checkpoint version " + j.at("version").dump());
    }
    Checkpoint c;
    c.normalizer = Normalizer::from_json(j.at("normalizer"));
    c.extender = extender_config_from_json(j.at("extender"));
    for (const auto& net : j.at("networks")) {
      CheckpointEntry entry{Network(net_config_from_json(net.at("config"))),
                            net.value("metadata", json::object())};
      Parameters& p = entry.network.parameters();
      const json& stored = net.at("parameters");
      if (stored.size() != p.slots().size()) {
        throw ConfigError("checkpoint has " + std::to_string(stored.size()) +
                          " parameter arrays, network expects " + std::to_string(p.slots().size()));
      }
      for (std::size_t s = 0; s < stored.size(); ++s) {
        const ParamSlot& slot = p.slots()[s];
        const json& arr = stored[s];
        if (arr.at("name").get<std::string>() != slot.name ||
            arr.at("rows").get<Eigen::Index>() != slot.rows ||
            arr.at("cols").get<Eigen::Index>() != slot.cols) {
          throw ConfigError("parameter array " + std::to_string(s) + " does not match '" +
                            slot.name + "'");
        }
        const auto values = arr.at("values").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(values.size()) != slot.rows * slot.cols) {
          throw ConfigError("parameter '" + slot.name + "' has the wrong number of values");
        }
        std::copy(values.begin(), values.end(),
                  p.values().begin() + static_cast<std::ptrdiff_t>(slot.offset));
      }
      c.entries.push_back(std::move(entry));
    }
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& file, const Checkpoint& checkpoint) {
  if (file.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(file.parent_path(), ec);
    if (ec) throw IoError("cannot create " + file.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(file);
  if (!out) throw IoError("cannot write " + file.string());
  out << checkpoint.to_json().dump() << '\n';
  if (!out) throw IoError("write failed for " + file.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open checkpoint " + file.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  json j;
  try {
    j = json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    throw ConfigError("checkpoint " + file.string() + " is not valid JSON: " + e.what());
  }
  return Checkpoint::from_json(j);
}

}  // namespace mecsched
