#include "mecsched/params_io.hpp"

#include <set>

namespace mecsched {

using nlohmann::json;

namespace {

double get_number(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

}  // namespace

json to_json(const SystemParams& p) {
  return json{{"f_loc", p.f_loc},         {"k_loc", p.k_loc},       {"k_ap", p.k_ap},
              {"p_ul_min", p.p_ul_min},   {"p_ul_max", p.p_ul_max}, {"p_dl_min", p.p_dl_min},
              {"p_dl_max", p.p_dl_max},   {"f_ap_min", p.f_ap_min}, {"f_ap_max", p.f_ap_max},
              {"f_total", p.f_total},     {"n0_w_per_hz", p.n0},    {"w_ul", p.w_ul},
              {"w_dl", p.w_dl},           {"lambda", p.lambda},     {"n_bar", p.n_bar}};
}

SystemParams params_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("params must be a JSON object");
  static const std::set<std::string> known = {
      "f_loc",    "k_loc",    "k_ap",     "p_ul_min", "p_ul_max",    "p_dl_min",
      "p_dl_max", "f_ap_min", "f_ap_max", "f_total",  "n0_w_per_hz", "n0_dbm_per_hz",
      "w_ul",     "w_dl",     "lambda",   "n_bar"};
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown params field '" + key + "'");
  }

  SystemParams p;
  struct Field {
    const char* key;
    double* target;
  };
  const Field fields[] = {{"f_loc", &p.f_loc},       {"k_loc", &p.k_loc},
                          {"k_ap", &p.k_ap},         {"p_ul_min", &p.p_ul_min},
                          {"p_ul_max", &p.p_ul_max}, {"p_dl_min", &p.p_dl_min},
                          {"p_dl_max", &p.p_dl_max}, {"f_ap_min", &p.f_ap_min},
                          {"f_ap_max", &p.f_ap_max}, {"f_total", &p.f_total},
                          {"w_ul", &p.w_ul},         {"w_dl", &p.w_dl},
                          {"lambda", &p.lambda}};
  for (const auto& f : fields) {
    if (j.contains(f.key)) *f.target = get_number(j, f.key);
  }

  const bool has_w = j.contains("n0_w_per_hz");
  const bool has_dbm = j.contains("n0_dbm_per_hz");
  if (has_w && has_dbm) {
    throw ConfigError("params accept only one of 'n0_w_per_hz' or 'n0_dbm_per_hz'");
  }
  if (has_w) p.n0 = get_number(j, "n0_w_per_hz");
  if (has_dbm) p.n0 = dbm_per_hz_to_watts_per_hz(get_number(j, "n0_dbm_per_hz"));

  if (j.contains("n_bar")) {
    const json& v = j.at("n_bar");
    if (!v.is_number_integer() || v.get<long long>() < 1) {
      throw ConfigError("field 'n_bar' must be a positive integer");
    }
    p.n_bar = v.get<std::size_t>();
  }

  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid params: ") + e.what());
  }
  return p;
}

json instance_to_json(const Instance& instance) {
  json tasks = json::array();
  bool asymmetric = false;
  for (const auto& t : instance.tasks) {
    tasks.push_back({t.u, t.c, t.d, t.h_ul});
    asymmetric = asymmetric || t.h_ul != t.h_dl;
  }
  json j{{"tasks", std::move(tasks)}};
  if (asymmetric) {
    json h_dl = json::array();
    for (const auto& t : instance.tasks) h_dl.push_back(t.h_dl);
    j["h_dl"] = std::move(h_dl);
  }
  return j;
}

Instance instance_from_json(const json& j) {
  if (!j.is_object() || !j.contains("tasks") || !j.at("tasks").is_array()) {
    throw ConfigError("instance must be an object with a 'tasks' array");
  }
  Instance inst;
  for (const auto& row : j.at("tasks")) {
    if (!row.is_array() || row.size() != 4) {
      throw ConfigError("each task must be a [u, c, d, h] array");
    }
    for (const auto& v : row) {
      if (!v.is_number()) throw ConfigError("task entries must be numbers");
    }
    inst.tasks.push_back(TaskInfo::reciprocal(row[0].get<double>(), row[1].get<double>(),
                                              row[2].get<double>(), row[3].get<double>()));
  }
  if (j.contains("h_dl")) {
    const json& h = j.at("h_dl");
    if (!h.is_array() || h.size() != inst.tasks.size()) {
      throw ConfigError("'h_dl' must have one entry per task");
    }
    for (std::size_t i = 0; i < inst.tasks.size(); ++i) inst.tasks[i].h_dl = h[i].get<double>();
  }
  try {
    for (const auto& t : inst.tasks) validate(t);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid task: ") + e.what());
  }
  if (inst.tasks.empty()) throw ConfigError("instance must contain at least one task");
  return inst;
}

json schedule_to_json(const Schedule& s) {
  return json{{"m", s.m}, {"p_ul", s.p_ul}, {"p_dl", s.p_dl}, {"f_ap", s.f_ap}};
}

Schedule schedule_from_json(const json& j) {
  Schedule s;
  s.m = j.at("m").get<std::vector<std::uint8_t>>();
  s.p_ul = j.at("p_ul").get<std::vector<double>>();
  s.p_dl = j.at("p_dl").get<std::vector<double>>();
  s.f_ap = j.at("f_ap").get<std::vector<double>>();
  return s;
}

json cost_report_to_json(const CostReport& r) {
  json violations = json::array();
  for (const auto& v : r.violations) {
    violations.push_back({{"constraint", to_string(v.id)},
                          {"task", v.task ? json(*v.task) : json(nullptr)},
                          {"amount", v.amount}});
  }
  return json{{"per_task_delay", r.per_task_delay},
              {"per_task_energy", r.per_task_energy},
              {"T", r.T},
              {"E", r.E},
              {"U", r.U},
              {"feasible", r.feasible},
              {"violations", std::move(violations)}};
}

}  // namespace mecsched
