#pragma once

// Hybrid genetic algorithm used to label training instances.
//
// A chromosome is the offload vector m only. Its fitness is the utility of
// m after the exact continuous allocation (solve_resources_given_m), so the
// search is over the 2^N binary vectors and fitness carries no noise.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mecsched/model.hpp"
#include "mecsched/oracle.hpp"

namespace mecsched {

struct GaConfig {
  std::size_t population_size = 100;
  std::size_t generations = 200;
  std::size_t tournament_size = 3;
  double crossover_rate = 0.9;
  std::optional<double> mutation_rate;  // per-bit flip probability; 1/N when unset
  std::size_t elitism_count = 2;
  std::uint64_t seed = 0;
  /// Optional seeding; the initial population cycles through these before
  /// falling back to random chromosomes.
  std::vector<std::vector<std::uint8_t>> initial_population;

  void validate() const;
  double mutation_rate_for(std::size_t n) const;
};

struct LabeledInstance {
  Instance instance;
  Schedule schedule;
  double utility = 0.0;
  std::string solver_tag;
};

struct GaTrace {
  /// Incumbent utility after initialization (index 0) and after each generation.
  std::vector<double> best_utility;
  std::size_t distinct_evaluations = 0;
};

/// Error of one instance inside a batch.
class BatchError : public std::runtime_error {
 public:
  BatchError(std::size_t index, const std::string& what);
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

LabeledInstance ga_solve(const Instance& instance, const SystemParams& params,
                         const GaConfig& cfg, GaTrace* trace = nullptr,
                         const OracleConfig& oracle = {});

/// Order-preserving; instance i runs with seed cfg.seed ^ i, so results do
/// not depend on worker_count.
std::vector<LabeledInstance> ga_solve_batch(std::span<const Instance> instances,
                                            const SystemParams& params, const GaConfig& cfg,
                                            std::size_t worker_count);

}  // namespace mecsched
