#include "mecsched/run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace mecsched {

using nlohmann::json;

namespace {

// Reads fields of one config section, rejecting unknown keys and wrong types.
class Reader {
 public:
  Reader(const json& j, std::string scope, std::set<std::string> known)
      : j_(j), scope_(std::move(scope)) {
    if (!j.is_object()) throw ConfigError(scope_ + " must be a JSON object");
    for (const auto& [key, _] : j.items()) {
      if (!known.contains(key)) throw ConfigError("unknown field '" + scope_ + "." + key + "'");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }
  const json& at(const char* key) const { return j_.at(key); }

  void read(const char* key, double& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number()) fail(key, "a number");
    out = v.get<double>();
  }

  void read(const char* key, std::size_t& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) fail(key, "a non-negative integer");
    out = v.get<std::size_t>();
  }

  void read_seed(const char* key, std::uint64_t& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      fail(key, "a non-negative integer");
    }
    out = v.get<std::uint64_t>();
  }

  void read(const char* key, bool& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_boolean()) fail(key, "a boolean");
    out = v.get<bool>();
  }

  void read(const char* key, std::string& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_string()) fail(key, "a string");
    out = v.get<std::string>();
  }

  void read(const char* key, ValueRange& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      fail(key, "a [lo, hi] pair of numbers");
    }
    out = {v[0].get<double>(), v[1].get<double>()};
  }

  void read(const char* key, std::vector<std::size_t>& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_array()) fail(key, "an array of non-negative integers");
    out.clear();
    for (const auto& e : v) {
      if (!e.is_number_integer() || e.get<long long>() < 0) fail(key, "an array of non-negative integers");
      out.push_back(e.get<std::size_t>());
    }
  }

  void read(const char* key, std::vector<double>& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_array()) fail(key, "an array of numbers");
    out.clear();
    for (const auto& e : v) {
      if (!e.is_number()) fail(key, "an array of numbers");
      out.push_back(e.get<double>());
    }
  }

  [[noreturn]] void fail(const char* key, const char* what) const {
    throw ConfigError("field '" + scope_ + "." + key + "' must be " + what);
  }

  template <class F>
  void check(F&& validate) const {
    try {
      validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("invalid " + scope_ + ": " + e.what());
    }
  }

 private:
  const json& j_;
  std::string scope_;
};

json range_json(const ValueRange& r) { return json::array({r.lo, r.hi}); }

}  // namespace

// ------------------------------------------------------------ distribution

json to_json(const InstanceDistribution& d) {
  return json{{"u", range_json(d.u)},
              {"c", range_json(d.c)},
              {"d", range_json(d.d)},
              {"h_log10", range_json(d.h_log10)},
              {"n_values", d.n_values},
              {"seed", d.seed}};
}

InstanceDistribution distribution_from_json(const json& j) {
  Reader r(j, "distribution", {"u", "c", "d", "h_log10", "n_values", "seed"});
  InstanceDistribution d;
  r.read("u", d.u);
  r.read("c", d.c);
  r.read("d", d.d);
  r.read("h_log10", d.h_log10);
  r.read("n_values", d.n_values);
  r.read_seed("seed", d.seed);
  r.check([&] { d.validate(); });
  return d;
}

// ---------------------------------------------------------------------- GA

json to_json(const GaConfig& cfg) {
  json j{{"population_size", cfg.population_size},
         {"generations", cfg.generations},
         {"tournament_size", cfg.tournament_size},
         {"crossover_rate", cfg.crossover_rate},
         {"mutation_rate", cfg.mutation_rate ? json(*cfg.mutation_rate) : json(nullptr)},
         {"elitism_count", cfg.elitism_count},
         {"seed", cfg.seed}};
  if (!cfg.initial_population.empty()) j["initial_population"] = cfg.initial_population;
  return j;
}

GaConfig ga_config_from_json(const json& j) {
  Reader r(j, "ga",
           {"population_size", "generations", "tournament_size", "crossover_rate",
            "mutation_rate", "elitism_count", "seed", "initial_population"});
  GaConfig cfg;
  r.read("population_size", cfg.population_size);
  r.read("generations", cfg.generations);
  r.read("tournament_size", cfg.tournament_size);
  r.read("crossover_rate", cfg.crossover_rate);
  if (r.has("mutation_rate") && !r.at("mutation_rate").is_null()) {
    double rate = 0.0;
    r.read("mutation_rate", rate);
    cfg.mutation_rate = rate;
  }
  r.read("elitism_count", cfg.elitism_count);
  r.read_seed("seed", cfg.seed);
  if (r.has("initial_population")) {
    const json& pop = r.at("initial_population");
    if (!pop.is_array()) r.fail("initial_population", "an array of 0/1 arrays");
    for (const auto& chrom : pop) {
      if (!chrom.is_array()) r.fail("initial_population", "an array of 0/1 arrays");
      std::vector<std::uint8_t> bits;
      for (const auto& b : chrom) {
        if (!b.is_number_integer() || (b.get<int>() != 0 && b.get<int>() != 1)) {
          r.fail("initial_population", "an array of 0/1 arrays");
        }
        bits.push_back(static_cast<std::uint8_t>(b.get<int>()));
      }
      cfg.initial_population.push_back(std::move(bits));
    }
  }
  r.check([&] { cfg.validate(); });
  return cfg;
}

// --------------------------------------------------------------------- net

json to_json(const NetConfig& cfg) {
  return json{{"embed_dim", cfg.embed_dim},
              {"encoder_layers", cfg.encoder_layers},
              {"head_count", cfg.head_count},
              {"ffn_dim", cfg.ffn_dim},
              {"dropout", cfg.dropout},
              {"positional_encoding", cfg.positional_encoding},
              {"sequence_length", cfg.sequence_length},
              {"seed", cfg.seed},
              {"body", to_string(cfg.body)},
              {"head", to_string(cfg.head)}};
}

NetConfig net_config_from_json(const json& j) {
  Reader r(j, "net",
           {"embed_dim", "encoder_layers", "head_count", "ffn_dim", "dropout",
            "positional_encoding", "sequence_length", "seed", "body", "head"});
  NetConfig cfg;
  r.read("embed_dim", cfg.embed_dim);
  r.read("encoder_layers", cfg.encoder_layers);
  r.read("head_count", cfg.head_count);
  r.read("ffn_dim", cfg.ffn_dim);
  r.read("dropout", cfg.dropout);
  r.read("positional_encoding", cfg.positional_encoding);
  r.read("sequence_length", cfg.sequence_length);
  r.read_seed("seed", cfg.seed);
  r.check([&] {
    std::string s;
    if (r.has("body")) {
      r.read("body", s);
      cfg.body = body_kind_from_string(s);
    }
    if (r.has("head")) {
      r.read("head", s);
      cfg.head = head_kind_from_string(s);
    }
    cfg.validate();
  });
  return cfg;
}

// ---------------------------------------------------------------- extender

json to_json(const ExtenderConfig& cfg) {
  return json{{"n_bar", cfg.n_bar},
              {"pad_value", cfg.pad_value},
              {"pad_mode", to_string(cfg.pad_mode)},
              {"random_seed", cfg.random_seed}};
}

ExtenderConfig extender_config_from_json(const json& j) {
  Reader r(j, "extender", {"n_bar", "pad_value", "pad_mode", "random_seed"});
  ExtenderConfig cfg;
  r.read("n_bar", cfg.n_bar);
  r.read("pad_value", cfg.pad_value);
  r.read_seed("random_seed", cfg.random_seed);
  r.check([&] {
    if (r.has("pad_mode")) {
      std::string s;
      r.read("pad_mode", s);
      cfg.pad_mode = pad_mode_from_string(s);
    }
    cfg.validate();
  });
  return cfg;
}

// --------------------------------------------------------------------- SAC

json to_json(const SacConfig& cfg) {
  return json{{"k", cfg.k}, {"sigma", cfg.sigma}, {"unit_shifts", cfg.unit_shifts}};
}

SacConfig sac_config_from_json(const json& j) {
  Reader r(j, "sac", {"k", "sigma", "unit_shifts"});
  SacConfig cfg;
  r.read("k", cfg.k);
  r.read("sigma", cfg.sigma);
  r.read("unit_shifts", cfg.unit_shifts);
  return cfg;  // k is checked against n_bar by the owner
}

// ---------------------------------------------------------------- training

json to_json(const TrainingConfig& cfg) {
  return json{{"epochs", cfg.epochs},
              {"batch_size", cfg.batch_size},
              {"learning_rate", cfg.learning_rate},
              {"validation_fraction", cfg.validation_fraction},
              {"shift_augmentation", cfg.shift_augmentation},
              {"seed", cfg.seed}};
}

TrainingConfig training_config_from_json(const json& j) {
  Reader r(j, "training",
           {"epochs", "batch_size", "learning_rate", "validation_fraction", "shift_augmentation",
            "seed"});
  TrainingConfig cfg;
  r.read("epochs", cfg.epochs);
  r.read("batch_size", cfg.batch_size);
  r.read("learning_rate", cfg.learning_rate);
  r.read("validation_fraction", cfg.validation_fraction);
  r.read("shift_augmentation", cfg.shift_augmentation);
  r.read_seed("seed", cfg.seed);
  r.check([&] { cfg.validate(); });
  return cfg;
}

// -------------------------------------------------------------- run config

void RunConfig::validate() const {
  auto wrap = [](const char* scope, auto&& fn) {
    try {
      fn();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("invalid ") + scope + ": " + e.what());
    }
  };
  wrap("params", [&] { params.validate(); });
  wrap("distribution", [&] { distribution.validate(); });
  wrap("ga", [&] { ga.validate(); });
  wrap("net", [&] { net.validate(); });
  wrap("training", [&] { training.validate(); });
  wrap("extender", [&] { extender.validate(); });
  wrap("sac", [&] { sac.validate(extender.n_bar); });
  for (std::size_t n : distribution.n_values) {
    if (n == 0 || n > params.n_bar) {
      throw ConfigError("distribution.n_values entry " + std::to_string(n) +
                        " outside [1, params.n_bar = " + std::to_string(params.n_bar) + "]");
    }
  }
  if (extender.n_bar != params.n_bar) {
    throw ConfigError("extender.n_bar (" + std::to_string(extender.n_bar) +
                      ") must equal params.n_bar (" + std::to_string(params.n_bar) + ")");
  }
  if (net.sequence_length != extender.n_bar) {
    throw ConfigError("net.sequence_length (" + std::to_string(net.sequence_length) +
                      ") must equal extender.n_bar (" + std::to_string(extender.n_bar) + ")");
  }
  for (std::size_t k : evaluation.k_sweep) {
    if (k < 1 || k > extender.n_bar) {
      throw ConfigError("evaluation.k_sweep entry " + std::to_string(k) + " outside [1, n_bar]");
    }
  }
  for (double s : evaluation.sigma_sweep) {
    if (!(s > 0.0 && s < 1.0)) throw ConfigError("evaluation.sigma_sweep entries must lie in (0, 1)");
  }
  if (workers == 0) throw ConfigError("workers must be positive");
}

json RunConfig::to_json() const {
  return json{{"params", mecsched::to_json(params)},
              {"distribution", mecsched::to_json(distribution)},
              {"count_per_n", count_per_n},
              {"ga", mecsched::to_json(ga)},
              {"net", mecsched::to_json(net)},
              {"training", mecsched::to_json(training)},
              {"extender", mecsched::to_json(extender)},
              {"sac", mecsched::to_json(sac)},
              {"evaluation",
               {{"k_sweep", evaluation.k_sweep},
                {"sigma_sweep", evaluation.sigma_sweep},
                {"oracle_max_n", evaluation.oracle_max_n}}},
              {"paths",
               {{"data_dir", paths.data_dir},
                {"checkpoint_dir", paths.checkpoint_dir},
                {"report_dir", paths.report_dir}}},
              {"seed", seed},
              {"workers", workers}};
}

RunConfig RunConfig::from_json(const json& j) {
  Reader r(j, "config",
           {"params", "distribution", "count_per_n", "ga", "net", "training", "extender", "sac",
            "evaluation", "paths", "seed", "workers"});
  RunConfig cfg;
  r.read_seed("seed", cfg.seed);
  r.read("count_per_n", cfg.count_per_n);
  r.read("workers", cfg.workers);

  auto section = [&](const char* key) { return r.has(key) ? r.at(key) : json::object(); };
  auto has_field = [&](const char* key, const char* field) {
    return r.has(key) && r.at(key).is_object() && r.at(key).contains(field);
  };

  cfg.params = params_from_json(section("params"));
  cfg.distribution = distribution_from_json(section("distribution"));
  if (!has_field("distribution", "seed")) cfg.distribution.seed = cfg.seed;
  cfg.ga = ga_config_from_json(section("ga"));
  if (!has_field("ga", "seed")) cfg.ga.seed = cfg.seed;
  cfg.extender = extender_config_from_json(section("extender"));
  if (!has_field("extender", "n_bar")) cfg.extender.n_bar = cfg.params.n_bar;
  if (!has_field("extender", "random_seed")) cfg.extender.random_seed = cfg.seed;

  json net = section("net");
  if (net.is_object() && !net.contains("sequence_length")) net["sequence_length"] = cfg.extender.n_bar;
  cfg.net = net_config_from_json(net);
  if (!has_field("net", "seed")) cfg.net.seed = cfg.seed;
  cfg.training = training_config_from_json(section("training"));
  if (!has_field("training", "seed")) cfg.training.seed = cfg.seed;
  cfg.sac = sac_config_from_json(section("sac"));

  if (r.has("evaluation")) {
    Reader e(r.at("evaluation"), "evaluation", {"k_sweep", "sigma_sweep", "oracle_max_n"});
    e.read("k_sweep", cfg.evaluation.k_sweep);
    e.read("sigma_sweep", cfg.evaluation.sigma_sweep);
    e.read("oracle_max_n", cfg.evaluation.oracle_max_n);
  }
  if (r.has("paths")) {
    Reader p(r.at("paths"), "paths", {"data_dir", "checkpoint_dir", "report_dir"});
    p.read("data_dir", cfg.paths.data_dir);
    p.read("checkpoint_dir", cfg.paths.checkpoint_dir);
    p.read("report_dir", cfg.paths.report_dir);
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open config " + file.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  json j;
  try {
    j = json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + file.string() + " is not valid JSON: " + e.what());
  }
  return RunConfig::from_json(j);
}

}  // namespace mecsched
