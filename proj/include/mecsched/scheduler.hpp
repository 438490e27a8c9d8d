#pragma once

// Learned two-stage scheduling with sliding-shift candidates, plus the
// analytic and search baselines it is compared against.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mecsched/datagen.hpp"
#include "mecsched/extender.hpp"
#include "mecsched/ga.hpp"
#include "mecsched/network.hpp"
#include "mecsched/oracle.hpp"

namespace mecsched {

struct SacConfig {
  std::size_t k = 20;
  double sigma = 0.3;       // offload probability threshold
  bool unit_shifts = false;  // offsets 0..k-1 instead of evenly spaced

  void validate(std::size_t n_bar) const;
};

/// Offset i is floor(i * n_bar / k), or i with unit_shifts.
std::vector<std::size_t> shift_offsets(const SacConfig& cfg, std::size_t n_bar);

/// Both sub-networks plus the feature normalizer they were trained with.
struct TsNet {
  Network offload;
  Network resource;
  Normalizer normalizer;
};

/// Normalized, padded network input for an instance.
PaddedFeatures prepare_features(const Instance& instance, const Normalizer& normalizer,
                                const ExtenderConfig& ext);

/// m_i = 1 iff p_i >= sigma.
std::vector<std::uint8_t> threshold(std::span<const double> probabilities, double sigma);

/// Offload probabilities at the real positions, in task order.
std::vector<double> offload_probabilities(const Network& offload, const Mat& padded_features,
                                          std::span<const std::uint8_t> mask);

std::vector<std::uint8_t> predict_offload(const Network& offload, const Mat& padded_features,
                                          std::span<const std::uint8_t> mask, double sigma);

/// Scales real row i by m_i; pad rows are left as they are.
Mat couple(const Mat& padded_features, std::span<const std::uint8_t> mask,
           std::span<const std::uint8_t> m);

/// Maps normalized [p_ul, p_dl, f_ap] rows into the constraint boxes; rows
/// with m_i = 0 get zero allocations.
Schedule allocation_from_unit(const Mat& unit, std::span<const std::uint8_t> m,
                              const SystemParams& params);
/// Inverse of allocation_from_unit on offloaded rows; local rows are zero.
Mat unit_from_allocation(const Schedule& schedule, const SystemParams& params);

/// Resource prediction for fixed decisions, before clipping.
Schedule couple_and_allocate(const Network& resource, const PaddedFeatures& padded,
                             std::span<const std::uint8_t> m, const SystemParams& params);

struct Candidate {
  std::vector<std::uint8_t> m;
  Schedule schedule;  // clipped
  double utility = 0.0;
  std::size_t shift_index = 0;
  std::size_t offset = 0;
  bool feasible = false;
};

struct SacResult {
  Schedule schedule;
  double utility = 0.0;
  std::size_t shift_index = 0;
  bool fallback = false;  // every candidate failed; schedule is all-local
  std::vector<Candidate> candidates;
};

SacResult tsnet_sac_schedule(const TsNet& nets, const Instance& instance,
                             const SystemParams& params, const SacConfig& sac,
                             const ExtenderConfig& ext);

/// Plain prediction: the k = 1 pipeline.
SacResult tsnet_schedule(const TsNet& nets, const Instance& instance, const SystemParams& params,
                         double sigma, const ExtenderConfig& ext);

enum class Method { tsnet_sac, tsnet, mlp, mlp_mixer, all_local, all_offload, ga, oracle };

std::string to_string(Method method);
Method method_from_string(const std::string& s);
const std::vector<std::string>& method_names();

/// Offloads everything with allocations at the box midpoints, then clips.
Schedule all_offload_schedule(const Instance& instance, const SystemParams& params);

/// Everything a method may need; learned methods require their nets.
struct SchedulerContext {
  const TsNet* tsnet = nullptr;
  const TsNet* mlp = nullptr;
  const TsNet* mixer = nullptr;
  SacConfig sac;
  ExtenderConfig extender;
  GaConfig ga;
  OracleConfig oracle;
};

struct MethodResult {
  Schedule schedule;
  bool fallback = false;
};

/// Throws std::invalid_argument when a required network is missing and
/// TooLargeError for the oracle above its size limit.
MethodResult run_method(Method method, const Instance& instance, const SystemParams& params,
                        const SchedulerContext& ctx);

}  // namespace mecsched
