#pragma once

// Exact reference solver for small instances.
//
// For a fixed offload vector the continuous allocation separates: each
// offloaded task's uplink and downlink power only enter that task's own
// link terms, and the edge frequencies couple only through the budget
// sum(f_ap) <= F_total, which is handled with a Lagrange multiplier.
// enumerate_optimal() walks all 2^N offload vectors on top of that.

#include <cstdint>
#include <span>
#include <vector>

#include "mecsched/model.hpp"

namespace mecsched {

class TooLargeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr std::size_t kMaxEnumerationSize = 16;

struct OracleConfig {
  std::size_t power_grid_points = 64;
  std::size_t refine_iterations = 40;
  double multiplier_tolerance = 1e-9;  // relative, on the budget multiplier

  void validate() const;
};

struct ResourceSolution {
  Schedule schedule;
  double utility = 0.0;
};

/// Objective weights of one task's terms inside U: delay terms carry
/// lambda/N (T is a mean), energy terms carry (1 - lambda).
struct ObjectiveWeights {
  double delay;
  double energy;

  static ObjectiveWeights for_instance(std::size_t n, const SystemParams& params) {
    return {params.lambda / static_cast<double>(n), 1.0 - params.lambda};
  }
};

struct PowerChoice {
  double power;
  double cost;  // weighted delay + energy of the link at that power
};

/// Minimizes bits * (w_delay + w_energy * p) / rate(p) over [p_min, p_max]
/// with a coarse grid followed by golden-section refinement.
PowerChoice optimize_link_power(double bits, double gain, double bandwidth, double p_min,
                                double p_max, ObjectiveWeights w, const SystemParams& params,
                                const OracleConfig& cfg);

/// argmin over [f_ap_min, f_ap_max] of w_d*c/f + w_e*k_ap*f^2*c + multiplier*f.
double optimal_frequency(double cycles, double multiplier, ObjectiveWeights w,
                         const SystemParams& params);

/// Sum of optimal_frequency() over the given cycle counts at a multiplier.
double total_frequency(std::span<const double> cycles, double multiplier, ObjectiveWeights w,
                       const SystemParams& params);

/// Budget-feasible frequencies for the offloaded cycle counts. Throws
/// InfeasibleError when cycles.size() * f_ap_min > F_total.
std::vector<double> allocate_frequencies(std::span<const double> cycles, ObjectiveWeights w,
                                         const SystemParams& params, const OracleConfig& cfg);

ResourceSolution solve_resources_given_m(const Instance& instance,
                                         std::span<const std::uint8_t> m,
                                         const SystemParams& params,
                                         const OracleConfig& cfg = {});

/// Minimum-utility schedule over all offload vectors. Ties go to fewer
/// offloaded tasks, then the lexicographically smallest m. Throws
/// TooLargeError for N > kMaxEnumerationSize.
ResourceSolution enumerate_optimal(const Instance& instance, const SystemParams& params,
                                   const OracleConfig& cfg = {});

}  // namespace mecsched
