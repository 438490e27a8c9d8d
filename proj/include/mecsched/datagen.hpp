#pragma once

// Instance sampling, feature normalization and dataset persistence.
//
// A dataset directory holds `dataset.jsonl` (one labeled instance per line)
// and `manifest.json` (distribution, params, GA settings, normalizer bounds,
// counts, seeds). The data file is a pure function of the manifest inputs.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mecsched/ga.hpp"
#include "mecsched/model.hpp"
#include "mecsched/tensor.hpp"

namespace mecsched {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Normalizer used before fit().
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct ValueRange {
  double lo;
  double hi;
};

struct InstanceDistribution {
  ValueRange u{1e5, 1e6};         // bits
  ValueRange c{1e8, 2e9};         // cycles
  ValueRange d{1e6, 1e8};         // bits
  ValueRange h_log10{-13.0, -10.0};
  std::vector<std::size_t> n_values{10};
  std::uint64_t seed = 1;

  void validate() const;
};

/// Seed of the index-th instance with n tasks.
std::uint64_t instance_seed(std::uint64_t distribution_seed, std::size_t n, std::size_t index);

/// u, c, d uniform; h = 10^x with x uniform; reciprocal channel.
Instance sample_instance(const InstanceDistribution& dist, std::size_t n, std::uint64_t seed,
                         const SystemParams& params);

/// Raw N x 4 feature rows [u, c, d, h_ul].
Mat task_features(const Instance& instance);

/// Per-feature affine map onto [0, 1] fitted on a training corpus. Values
/// outside the fitted bounds are not clamped.
class Normalizer {
 public:
  Normalizer() = default;
  Normalizer(std::array<double, 4> lo, std::array<double, 4> hi);

  static Normalizer fit(std::span<const Instance> corpus);

  bool fitted() const { return fitted_; }
  const std::array<double, 4>& lo() const { return lo_; }
  const std::array<double, 4>& hi() const { return hi_; }

  Mat normalize(const Mat& features) const;
  Mat denormalize(const Mat& features) const;

  nlohmann::json to_json() const;
  static Normalizer from_json(const nlohmann::json& j);

 private:
  void require_fitted() const;

  std::array<double, 4> lo_{};
  std::array<double, 4> hi_{};
  bool fitted_ = false;
};

nlohmann::json record_to_json(const LabeledInstance& record);
LabeledInstance record_from_json(const nlohmann::json& j);

inline constexpr const char* kDatasetFile = "dataset.jsonl";
inline constexpr const char* kManifestFile = "manifest.json";

void write_dataset(const std::filesystem::path& file, std::span<const LabeledInstance> records);
std::vector<LabeledInstance> read_dataset(const std::filesystem::path& file);

struct DatasetManifest {
  InstanceDistribution distribution;
  SystemParams params;
  GaConfig ga;
  std::size_t count_per_n = 0;
  std::map<std::size_t, std::size_t> counts;  // records written per n
  std::size_t ga_failures = 0;
  Normalizer normalizer;
  std::string data_file = kDatasetFile;

  nlohmann::json to_json() const;
  static DatasetManifest from_json(const nlohmann::json& j);
};

/// Samples count_per_n instances for every n in dist.n_values, labels them
/// with the GA and writes the dataset and manifest into `dir`. Instances
/// whose GA run fails are skipped and counted in ga_failures.
DatasetManifest build_dataset(const InstanceDistribution& dist, const SystemParams& params,
                              const GaConfig& ga, std::size_t count_per_n,
                              const std::filesystem::path& dir, std::size_t workers = 1);

DatasetManifest read_manifest(const std::filesystem::path& dir);

}  // namespace mecsched
