#include "mecsched/scheduler.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace mecsched {

void SacConfig::validate(std::size_t n_bar) const {
  if (k < 1 || k > n_bar) {
    throw std::invalid_argument("sac.k must lie in [1, n_bar], got " + std::to_string(k));
  }
  if (!(sigma > 0.0 && sigma < 1.0)) throw std::invalid_argument("sac.sigma must lie in (0, 1)");
}

std::vector<std::size_t> shift_offsets(const SacConfig& cfg, std::size_t n_bar) {
  cfg.validate(n_bar);
  std::vector<std::size_t> out(cfg.k);
  for (std::size_t i = 0; i < cfg.k; ++i) out[i] = cfg.unit_shifts ? i : i * n_bar / cfg.k;
  return out;
}

PaddedFeatures prepare_features(const Instance& instance, const Normalizer& normalizer,
                                const ExtenderConfig& ext) {
  return pad(normalizer.normalize(task_features(instance)), ext);
}

std::vector<std::uint8_t> threshold(std::span<const double> probabilities, double sigma) {
  std::vector<std::uint8_t> m(probabilities.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = probabilities[i] >= sigma ? 1 : 0;
  return m;
}

std::vector<double> offload_probabilities(const Network& offload, const Mat& padded_features,
                                          std::span<const std::uint8_t> mask) {
  const Mat real = unpad(offload.forward(padded_features), mask);
  return {real.data(), real.data() + real.size()};
}

std::vector<std::uint8_t> predict_offload(const Network& offload, const Mat& padded_features,
                                          std::span<const std::uint8_t> mask, double sigma) {
  return threshold(offload_probabilities(offload, padded_features, mask), sigma);
}

Mat couple(const Mat& padded_features, std::span<const std::uint8_t> mask,
           std::span<const std::uint8_t> m) {
  if (static_cast<std::size_t>(padded_features.rows()) != mask.size()) {
    throw ShapeError("mask length does not match feature rows");
  }
  Mat out = padded_features;
  std::size_t t = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    if (t >= m.size()) throw ShapeError("fewer decisions than real rows");
    if (!m[t]) out.row(static_cast<Eigen::Index>(i)).setZero();
    ++t;
  }
  if (t != m.size()) throw ShapeError("more decisions than real rows");
  return out;
}

namespace {

struct Box {
  double lo, hi;
};

std::array<Box, 3> boxes(const SystemParams& p) {
  return {Box{p.p_ul_min, p.p_ul_max}, Box{p.p_dl_min, p.p_dl_max}, Box{p.f_ap_min, p.f_ap_max}};
}

}  // namespace

Schedule allocation_from_unit(const Mat& unit, std::span<const std::uint8_t> m,
                              const SystemParams& params) {
  if (unit.rows() != static_cast<Eigen::Index>(m.size()) || unit.cols() != 3) {
    throw ShapeError("allocation rows must be N x 3");
  }
  const auto b = boxes(params);
  Schedule s = Schedule::with_decisions({m.begin(), m.end()});
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m[i]) continue;
    const auto r = static_cast<Eigen::Index>(i);
    s.p_ul[i] = b[0].lo + unit(r, 0) * (b[0].hi - b[0].lo);
    s.p_dl[i] = b[1].lo + unit(r, 1) * (b[1].hi - b[1].lo);
    s.f_ap[i] = b[2].lo + unit(r, 2) * (b[2].hi - b[2].lo);
  }
  return s;
}

Mat unit_from_allocation(const Schedule& schedule, const SystemParams& params) {
  const auto b = boxes(params);
  const auto n = static_cast<Eigen::Index>(schedule.size());
  Mat out = Mat::Zero(n, 3);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto i = static_cast<std::size_t>(r);
    if (!schedule.m[i]) continue;
    out(r, 0) = (schedule.p_ul[i] - b[0].lo) / (b[0].hi - b[0].lo);
    out(r, 1) = (schedule.p_dl[i] - b[1].lo) / (b[1].hi - b[1].lo);
    out(r, 2) = (schedule.f_ap[i] - b[2].lo) / (b[2].hi - b[2].lo);
  }
  return out;
}

Schedule couple_and_allocate(const Network& resource, const PaddedFeatures& padded,
                             std::span<const std::uint8_t> m, const SystemParams& params) {
  if (std::none_of(m.begin(), m.end(), [](std::uint8_t v) { return v != 0; })) {
    return Schedule::all_local(m.size());
  }
  const Mat out = resource.forward(couple(padded.features, padded.mask, m));
  return allocation_from_unit(unpad(out, padded.mask), m, params);
}

SacResult tsnet_sac_schedule(const TsNet& nets, const Instance& instance,
                             const SystemParams& params, const SacConfig& sac,
                             const ExtenderConfig& ext) {
  const PaddedFeatures padded = prepare_features(instance, nets.normalizer, ext);
  const auto offsets = shift_offsets(sac, ext.n_bar);

  // Distinct decision vectors share the resource pass and evaluation.
  std::map<std::vector<std::uint8_t>, std::size_t> seen;
  SacResult result;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < offsets.size(); ++s) {
    const std::size_t j = offsets[s];
    const Mat probs = inverse_shift(nets.offload.forward(shift(padded.features, j)), j);
    const Mat real = unpad(probs, padded.mask);
    Candidate cand;
    cand.m = threshold(std::span<const double>(real.data(), static_cast<std::size_t>(real.size())),
                       sac.sigma);
    cand.shift_index = s;
    cand.offset = j;
    if (auto it = seen.find(cand.m); it != seen.end()) {
      const Candidate& prev = result.candidates[it->second];
      cand.schedule = prev.schedule;
      cand.utility = prev.utility;
      cand.feasible = prev.feasible;
    } else {
      try {
        cand.schedule = clip_to_constraints(couple_and_allocate(nets.resource, padded, cand.m, params),
                                            params);
        const CostReport cost = evaluate(instance, cand.schedule, params);
        cand.feasible = cost.feasible;
        cand.utility = cost.U;
      } catch (const InfeasibleError&) {
        cand.feasible = false;
        cand.utility = std::numeric_limits<double>::infinity();
      }
      seen.emplace(cand.m, result.candidates.size());
    }
    if (cand.feasible && cand.utility < best) {
      best = cand.utility;
      result.schedule = cand.schedule;
      result.utility = cand.utility;
      result.shift_index = s;
    }
    result.candidates.push_back(std::move(cand));
  }
  if (!std::isfinite(best)) {
    result.fallback = true;
    result.schedule = Schedule::all_local(instance.size());
    result.utility = evaluate(instance, result.schedule, params).U;
    result.shift_index = 0;
  }
  return result;
}

SacResult tsnet_schedule(const TsNet& nets, const Instance& instance, const SystemParams& params,
                         double sigma, const ExtenderConfig& ext) {
  SacConfig one;
  one.k = 1;
  one.sigma = sigma;
  return tsnet_sac_schedule(nets, instance, params, one, ext);
}

namespace {

const std::vector<std::pair<Method, std::string>>& method_table() {
  static const std::vector<std::pair<Method, std::string>> table{
      {Method::tsnet_sac, "tsnet-sac"},   {Method::tsnet, "tsnet"},
      {Method::mlp, "mlp"},               {Method::mlp_mixer, "mlp-mixer"},
      {Method::all_local, "all-local"},   {Method::all_offload, "all-offload"},
      {Method::ga, "ga"},                 {Method::oracle, "oracle"},
  };
  return table;
}

}  // namespace

std::string to_string(Method method) {
  for (const auto& [m, name] : method_table()) {
    if (m == method) return name;
  }
  return "unknown";
}

const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& entry : method_table()) out.push_back(entry.second);
    return out;
  }();
  return names;
}

Method method_from_string(const std::string& s) {
  for (const auto& [m, name] : method_table()) {
    if (name == s) return m;
  }
  std::string valid;
  for (const auto& name : method_names()) valid += (valid.empty() ? "" : ", ") + name;
  throw std::invalid_argument("unknown method '" + s + "'; valid methods: " + valid);
}

Schedule all_offload_schedule(const Instance& instance, const SystemParams& params) {
  Schedule s = Schedule::with_decisions(std::vector<std::uint8_t>(instance.size(), 1));
  for (std::size_t i = 0; i < instance.size(); ++i) {
    s.p_ul[i] = 0.5 * (params.p_ul_min + params.p_ul_max);
    s.p_dl[i] = 0.5 * (params.p_dl_min + params.p_dl_max);
    s.f_ap[i] = 0.5 * (params.f_ap_min + params.f_ap_max);
  }
  return clip_to_constraints(std::move(s), params);
}

namespace {

const TsNet& require(const TsNet* nets, Method method) {
  if (nets == nullptr) {
    throw std::invalid_argument("method '" + to_string(method) + "' needs trained networks");
  }
  return *nets;
}

}  // namespace

MethodResult run_method(Method method, const Instance& instance, const SystemParams& params,
                        const SchedulerContext& ctx) {
  const double sigma = ctx.sac.sigma;
  auto from_sac = [](SacResult r) { return MethodResult{std::move(r.schedule), r.fallback}; };
  switch (method) {
    case Method::tsnet_sac:
      return from_sac(tsnet_sac_schedule(require(ctx.tsnet, method), instance, params, ctx.sac,
                                         ctx.extender));
    case Method::tsnet:
      return from_sac(tsnet_schedule(require(ctx.tsnet, method), instance, params, sigma,
                                     ctx.extender));
    case Method::mlp:
      return from_sac(tsnet_schedule(require(ctx.mlp, method), instance, params, sigma,
                                     ctx.extender));
    case Method::mlp_mixer:
      return from_sac(tsnet_schedule(require(ctx.mixer, method), instance, params, sigma,
                                     ctx.extender));
    case Method::all_local:
      return {Schedule::all_local(instance.size()), false};
    case Method::all_offload:
      return {all_offload_schedule(instance, params), false};
    case Method::ga:
      return {ga_solve(instance, params, ctx.ga, nullptr, ctx.oracle).schedule, false};
    case Method::oracle:
      return {enumerate_optimal(instance, params, ctx.oracle).schedule, false};
  }
  throw std::invalid_argument("unknown method");
}

}  // namespace mecsched
