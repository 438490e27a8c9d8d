#include "mecsched/datagen.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "mecsched/config_json.hpp"
#include "mecsched/parallel.hpp"
#include "mecsched/random.hpp"

namespace mecsched {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void check_range(const ValueRange& r, const char* name) {
  if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo > r.hi) {
    throw std::invalid_argument(std::string(name) + " range must be finite with lo <= hi");
  }
}

}  // namespace

void InstanceDistribution::validate() const {
  check_range(u, "u");
  check_range(c, "c");
  check_range(d, "d");
  check_range(h_log10, "h_log10");
  if (u.lo < 0.0 || d.lo < 0.0) throw std::invalid_argument("data volumes must be non-negative");
  if (c.lo <= 0.0) throw std::invalid_argument("cycle counts must be positive");
  for (std::size_t n : n_values) {
    if (n == 0) throw std::invalid_argument("n_values entries must be positive");
  }
}

std::uint64_t instance_seed(std::uint64_t distribution_seed, std::size_t n, std::size_t index) {
  return mix_seed(mix_seed(distribution_seed ^ static_cast<std::uint64_t>(n)) ^
                  static_cast<std::uint64_t>(index));
}

Instance sample_instance(const InstanceDistribution& dist, std::size_t n, std::uint64_t seed,
                         const SystemParams& params) {
  dist.validate();
  if (n == 0) throw std::invalid_argument("instances need at least one task");
  if (n > params.n_bar) {
    std::ostringstream os;
    os << "requested " << n << " tasks, more than n_bar = " << params.n_bar;
    throw std::invalid_argument(os.str());
  }
  Rng rng = make_rng(seed);
  Instance inst;
  inst.tasks.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = uniform(rng, dist.u.lo, dist.u.hi);
    const double c = uniform(rng, dist.c.lo, dist.c.hi);
    const double d = uniform(rng, dist.d.lo, dist.d.hi);
    const double h = std::pow(10.0, uniform(rng, dist.h_log10.lo, dist.h_log10.hi));
    inst.tasks.push_back(TaskInfo::reciprocal(u, c, d, h));
  }
  return inst;
}

Mat task_features(const Instance& instance) {
  Mat f(static_cast<Eigen::Index>(instance.size()), 4);
  for (std::size_t i = 0; i < instance.size(); ++i) {
    const TaskInfo& t = instance.tasks[i];
    f.row(static_cast<Eigen::Index>(i)) << t.u, t.c, t.d, t.h_ul;
  }
  return f;
}

// ---------------------------------------------------------------- Normalizer

Normalizer::Normalizer(std::array<double, 4> lo, std::array<double, 4> hi)
    : lo_(lo), hi_(hi), fitted_(true) {
  for (std::size_t k = 0; k < 4; ++k) {
    if (!(hi_[k] > lo_[k])) throw std::invalid_argument("normalizer bounds need hi > lo");
  }
}

Normalizer Normalizer::fit(std::span<const Instance> corpus) {
  std::array<double, 4> lo;
  std::array<double, 4> hi;
  lo.fill(std::numeric_limits<double>::infinity());
  hi.fill(-std::numeric_limits<double>::infinity());
  std::size_t rows = 0;
  for (const Instance& inst : corpus) {
    const Mat f = task_features(inst);
    for (Eigen::Index r = 0; r < f.rows(); ++r, ++rows) {
      for (std::size_t k = 0; k < 4; ++k) {
        lo[k] = std::min(lo[k], f(r, static_cast<Eigen::Index>(k)));
        hi[k] = std::max(hi[k], f(r, static_cast<Eigen::Index>(k)));
      }
    }
  }
  if (rows == 0) throw std::invalid_argument("cannot fit a normalizer on an empty corpus");
  // Constant features get a unit-scale span so they map to 0.
  for (std::size_t k = 0; k < 4; ++k) {
    if (!(hi[k] > lo[k])) hi[k] = lo[k] + std::max(std::abs(lo[k]), 1.0);
  }
  return Normalizer(lo, hi);
}

void Normalizer::require_fitted() const {
  if (!fitted_) throw StateError("normalizer has not been fitted");
}

Mat Normalizer::normalize(const Mat& features) const {
  require_fitted();
  if (features.cols() != 4) throw ShapeError("normalizer expects 4 feature columns");
  Mat out(features.rows(), 4);
  for (Eigen::Index k = 0; k < 4; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    out.col(k) = (features.col(k).array() - lo_[ku]) / (hi_[ku] - lo_[ku]);
  }
  return out;
}

Mat Normalizer::denormalize(const Mat& features) const {
  require_fitted();
  if (features.cols() != 4) throw ShapeError("normalizer expects 4 feature columns");
  Mat out(features.rows(), 4);
  for (Eigen::Index k = 0; k < 4; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    out.col(k) = features.col(k).array() * (hi_[ku] - lo_[ku]) + lo_[ku];
  }
  return out;
}

json Normalizer::to_json() const {
  if (!fitted_) return nullptr;
  return json{{"lo", lo_}, {"hi", hi_}};
}

Normalizer Normalizer::from_json(const json& j) {
  if (j.is_null()) return {};
  return Normalizer(j.at("lo").get<std::array<double, 4>>(), j.at("hi").get<std::array<double, 4>>());
}

// ------------------------------------------------------------------ records

namespace {

ordered_json ordered_record(const LabeledInstance& r) {
  ordered_json j;
  const json inst = instance_to_json(r.instance);
  j["tasks"] = inst.at("tasks");
  if (inst.contains("h_dl")) j["h_dl"] = inst.at("h_dl");
  j["m"] = r.schedule.m;
  j["p_ul"] = r.schedule.p_ul;
  j["p_dl"] = r.schedule.p_dl;
  j["f_ap"] = r.schedule.f_ap;
  j["utility"] = r.utility;
  j["n"] = r.instance.size();
  j["solver"] = r.solver_tag;
  return j;
}

}  // namespace

json record_to_json(const LabeledInstance& r) {
  return json::parse(ordered_record(r).dump());
}

LabeledInstance record_from_json(const json& j) {
  LabeledInstance r;
  json inst{{"tasks", j.at("tasks")}};
  if (j.contains("h_dl")) inst["h_dl"] = j.at("h_dl");
  r.instance = instance_from_json(inst);
  r.schedule = schedule_from_json(j);
  r.utility = j.at("utility").get<double>();
  r.solver_tag = j.at("solver").get<std::string>();
  if (j.at("n").get<std::size_t>() != r.instance.size() || r.schedule.size() != r.instance.size()) {
    throw ConfigError("record length fields are inconsistent");
  }
  return r;
}

void write_dataset(const fs::path& file, std::span<const LabeledInstance> records) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + file.string() + " for writing");
  for (const auto& r : records) out << ordered_record(r).dump() << '\n';
  if (!out) throw IoError("failed writing " + file.string());
}

std::vector<LabeledInstance> read_dataset(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open " + file.string());
  std::vector<LabeledInstance> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw ConfigError(file.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

// ----------------------------------------------------------------- manifest

json DatasetManifest::to_json() const {
  json counts_json = json::object();
  for (const auto& [n, count] : counts) counts_json[std::to_string(n)] = count;
  return json{{"format", "mecsched-dataset"},
              {"version", 1},
              {"data_file", data_file},
              {"distribution", mecsched::to_json(distribution)},
              {"params", mecsched::to_json(params)},
              {"ga", mecsched::to_json(ga)},
              {"count_per_n", count_per_n},
              {"counts", std::move(counts_json)},
              {"ga_failures", ga_failures},
              {"seeds", {{"distribution", distribution.seed}, {"ga", ga.seed}}},
              {"normalizer", normalizer.to_json()}};
}

DatasetManifest DatasetManifest::from_json(const json& j) {
  if (j.value("format", "") != "mecsched-dataset") throw ConfigError("not a dataset manifest");
  DatasetManifest m;
  m.data_file = j.at("data_file").get<std::string>();
  m.distribution = distribution_from_json(j.at("distribution"));
  m.params = params_from_json(j.at("params"));
  m.ga = ga_config_from_json(j.at("ga"));
  m.count_per_n = j.at("count_per_n").get<std::size_t>();
  for (const auto& [key, value] : j.at("counts").items()) {
    m.counts[std::stoul(key)] = value.get<std::size_t>();
  }
  m.ga_failures = j.at("ga_failures").get<std::size_t>();
  m.normalizer = Normalizer::from_json(j.at("normalizer"));
  return m;
}

DatasetManifest build_dataset(const InstanceDistribution& dist, const SystemParams& params,
                              const GaConfig& ga, std::size_t count_per_n, const fs::path& dir,
                              std::size_t workers) {
  dist.validate();
  params.validate();
  ga.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  struct Job {
    std::size_t n;
    std::size_t index;
  };
  std::vector<Job> jobs;
  for (std::size_t n : dist.n_values) {
    if (n > params.n_bar) {
      throw std::invalid_argument("n_values entry " + std::to_string(n) + " exceeds n_bar");
    }
    for (std::size_t i = 0; i < count_per_n; ++i) jobs.push_back({n, i});
  }

  std::vector<std::optional<LabeledInstance>> labeled(jobs.size());
  parallel_for(jobs.size(), workers, [&](std::size_t g) {
    const Instance inst =
        sample_instance(dist, jobs[g].n, instance_seed(dist.seed, jobs[g].n, jobs[g].index), params);
    GaConfig local = ga;
    local.seed = ga.seed ^ static_cast<std::uint64_t>(g);
    try {
      labeled[g] = ga_solve(inst, params, local);
    } catch (const std::exception&) {
      labeled[g].reset();
    }
  });

  DatasetManifest manifest;
  manifest.distribution = dist;
  manifest.params = params;
  manifest.ga = ga;
  manifest.count_per_n = count_per_n;
  for (std::size_t n : dist.n_values) manifest.counts[n] = 0;

  std::vector<LabeledInstance> records;
  std::vector<Instance> corpus;
  for (std::size_t g = 0; g < jobs.size(); ++g) {
    if (!labeled[g]) {
      ++manifest.ga_failures;
      continue;
    }
    ++manifest.counts[jobs[g].n];
    corpus.push_back(labeled[g]->instance);
    records.push_back(std::move(*labeled[g]));
  }
  if (!corpus.empty()) manifest.normalizer = Normalizer::fit(corpus);

  write_dataset(dir / kDatasetFile, records);
  std::ofstream out(dir / kManifestFile, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest in " + dir.string());
  out << manifest.to_json().dump(2) << '\n';
  return manifest;
}

DatasetManifest read_manifest(const fs::path& dir) {
  std::ifstream in(dir / kManifestFile);
  if (!in) throw IoError("cannot open " + (dir / kManifestFile).string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed manifest: ") + e.what());
  }
  return DatasetManifest::from_json(j);
}

}  // namespace mecsched
