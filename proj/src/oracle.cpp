#include "mecsched/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mecsched {

namespace {

constexpr double kTieTolerance = 1e-12;

double link_objective(double bits, double gain, double bandwidth, double p, ObjectiveWeights w,
                      const SystemParams& params) {
  return bits * (w.delay + w.energy * p) / link_rate(p, gain, bandwidth, params);
}

struct TaskTerms {
  double local = 0.0;         // weighted local delay + energy
  double link = 0.0;          // weighted uplink + downlink at optimal powers
  double p_ul = 0.0;
  double p_dl = 0.0;
  double exe_unbounded = 0.0;  // weighted execution cost at the multiplier-free frequency
  double f_unbounded = 0.0;
};

double execution_cost(double cycles, double f, ObjectiveWeights w, const SystemParams& params) {
  return w.delay * cycles / f + w.energy * params.k_ap * f * f * cycles;
}

TaskTerms offload_terms(const TaskInfo& t, ObjectiveWeights w, const SystemParams& params,
                        const OracleConfig& cfg) {
  TaskTerms terms;
  const PowerChoice ul = optimize_link_power(t.u, t.h_ul, params.w_ul, params.p_ul_min,
                                             params.p_ul_max, w, params, cfg);
  const PowerChoice dl = optimize_link_power(t.d, t.h_dl, params.w_dl, params.p_dl_min,
                                             params.p_dl_max, w, params, cfg);
  terms.p_ul = ul.power;
  terms.p_dl = dl.power;
  terms.link = ul.cost + dl.cost;
  terms.f_unbounded = optimal_frequency(t.c, 0.0, w, params);
  terms.exe_unbounded = execution_cost(t.c, terms.f_unbounded, w, params);
  return terms;
}

bool lexicographically_less(const std::vector<std::uint8_t>& a,
                            const std::vector<std::uint8_t>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace

void OracleConfig::validate() const {
  if (power_grid_points < 2) throw std::invalid_argument("power_grid_points must be >= 2");
  if (refine_iterations < 1) throw std::invalid_argument("refine_iterations must be >= 1");
  if (!(multiplier_tolerance > 0.0)) {
    throw std::invalid_argument("multiplier_tolerance must be positive");
  }
}

PowerChoice optimize_link_power(double bits, double gain, double bandwidth, double p_min,
                                double p_max, ObjectiveWeights w, const SystemParams& params,
                                const OracleConfig& cfg) {
  if (bits <= 0.0) return {p_min, 0.0};
  auto cost = [&](double p) { return link_objective(bits, gain, bandwidth, p, w, params); };
  if (p_max <= p_min) return {p_min, cost(p_min)};

  const std::size_t g = cfg.power_grid_points;
  const double step = (p_max - p_min) / static_cast<double>(g - 1);
  auto grid = [&](std::size_t i) { return i + 1 == g ? p_max : p_min + step * static_cast<double>(i); };

  std::size_t best = 0;
  double best_cost = cost(p_min);
  for (std::size_t i = 1; i < g; ++i) {
    const double c = cost(grid(i));
    if (c < best_cost) {
      best_cost = c;
      best = i;
    }
  }

  // Golden-section search on the two cells around the best grid point.
  static const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = grid(best == 0 ? 0 : best - 1);
  double b = grid(std::min(best + 1, g - 1));
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = cost(x1);
  double f2 = cost(x2);
  for (std::size_t it = 0; it < cfg.refine_iterations; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = cost(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = cost(x2);
    }
  }
  PowerChoice result{grid(best), best_cost};
  const double xm = f1 <= f2 ? x1 : x2;
  const double fm = std::min(f1, f2);
  if (fm < result.cost) result = {xm, fm};
  return result;
}

double optimal_frequency(double cycles, double multiplier, ObjectiveWeights w,
                         const SystemParams& params) {
  const double lo = params.f_ap_min;
  const double hi = params.f_ap_max;
  // d/df of the per-task objective; strictly increasing in f.
  auto slope = [&](double f) {
    return -w.delay * cycles / (f * f) + 2.0 * w.energy * params.k_ap * cycles * f + multiplier;
  };
  if (slope(lo) >= 0.0) return lo;
  if (slope(hi) <= 0.0) return hi;
  if (multiplier == 0.0 && w.energy > 0.0) {
    const double f = std::cbrt(w.delay / (2.0 * w.energy * params.k_ap));
    return std::clamp(f, lo, hi);
  }
  double a = lo;
  double b = hi;
  while (b - a > 1e-13 * b) {
    const double mid = 0.5 * (a + b);
    (slope(mid) > 0.0 ? b : a) = mid;
  }
  return 0.5 * (a + b);
}

double total_frequency(std::span<const double> cycles, double multiplier, ObjectiveWeights w,
                       const SystemParams& params) {
  double total = 0.0;
  for (double c : cycles) total += optimal_frequency(c, multiplier, w, params);
  return total;
}

std::vector<double> allocate_frequencies(std::span<const double> cycles, ObjectiveWeights w,
                                         const SystemParams& params, const OracleConfig& cfg) {
  std::vector<double> f(cycles.size());
  if (cycles.empty()) return f;
  const double floor_total = static_cast<double>(cycles.size()) * params.f_ap_min;
  if (floor_total > params.f_total * (1.0 + kConstraintTolerance)) {
    std::ostringstream os;
    os << cycles.size() << " offloaded tasks need at least " << floor_total << " Hz, budget is "
       << params.f_total << " Hz";
    throw InfeasibleError(os.str());
  }

  auto fill = [&](double mu) {
    for (std::size_t i = 0; i < cycles.size(); ++i) {
      f[i] = optimal_frequency(cycles[i], mu, w, params);
    }
  };
  if (total_frequency(cycles, 0.0, w, params) <= params.f_total) {
    fill(0.0);
    return f;
  }

  // Above this multiplier every task sits at f_ap_min.
  double hi = 0.0;
  for (double c : cycles) hi = std::max(hi, w.delay * c / (params.f_ap_min * params.f_ap_min));
  double lo = 0.0;
  while (hi - lo > cfg.multiplier_tolerance * hi) {
    const double mid = 0.5 * (lo + hi);
    (total_frequency(cycles, mid, w, params) > params.f_total ? lo : hi) = mid;
  }
  fill(hi);
  return f;
}

ResourceSolution solve_resources_given_m(const Instance& instance,
                                         std::span<const std::uint8_t> m,
                                         const SystemParams& params, const OracleConfig& cfg) {
  const std::size_t n = instance.size();
  if (m.size() != n) throw std::invalid_argument("offload vector length does not match instance");
  const ObjectiveWeights w = ObjectiveWeights::for_instance(n, params);

  Schedule s = Schedule::with_decisions(std::vector<std::uint8_t>(m.begin(), m.end()));
  std::vector<double> cycles;
  std::vector<std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) {
    if (m[i] > 1) throw std::invalid_argument("offload decisions must be 0 or 1");
    if (m[i] == 0) continue;
    const TaskInfo& t = instance.tasks[i];
    s.p_ul[i] = optimize_link_power(t.u, t.h_ul, params.w_ul, params.p_ul_min, params.p_ul_max,
                                    w, params, cfg).power;
    s.p_dl[i] = optimize_link_power(t.d, t.h_dl, params.w_dl, params.p_dl_min, params.p_dl_max,
                                    w, params, cfg).power;
    cycles.push_back(t.c);
    index.push_back(i);
  }
  const std::vector<double> f = allocate_frequencies(cycles, w, params, cfg);
  for (std::size_t k = 0; k < index.size(); ++k) s.f_ap[index[k]] = f[k];

  ResourceSolution out;
  out.utility = evaluate(instance, s, params).U;
  out.schedule = std::move(s);
  return out;
}

ResourceSolution enumerate_optimal(const Instance& instance, const SystemParams& params,
                                   const OracleConfig& cfg) {
  const std::size_t n = instance.size();
  if (n > kMaxEnumerationSize) {
    std::ostringstream os;
    os << "enumeration is limited to " << kMaxEnumerationSize << " tasks, got " << n;
    throw TooLargeError(os.str());
  }
  instance.validate(params);
  cfg.validate();
  const ObjectiveWeights w = ObjectiveWeights::for_instance(n, params);

  std::vector<TaskTerms> terms(n);
  for (std::size_t i = 0; i < n; ++i) {
    terms[i] = offload_terms(instance.tasks[i], w, params, cfg);
    const LocalCost lc = local_cost(instance.tasks[i], params);
    terms[i].local = w.delay * lc.delay + w.energy * lc.energy;
  }

  double best_utility = std::numeric_limits<double>::infinity();
  std::vector<std::uint8_t> best_m;
  std::vector<std::uint8_t> m(n);
  std::vector<double> cycles;
  cycles.reserve(n);

  const std::uint32_t count = 1u << n;
  for (std::uint32_t mask = 0; mask < count; ++mask) {
    double utility = 0.0;
    double f_sum = 0.0;
    cycles.clear();
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = static_cast<std::uint8_t>((mask >> i) & 1u);
      if (m[i]) {
        utility += terms[i].link + terms[i].exe_unbounded;
        f_sum += terms[i].f_unbounded;
        cycles.push_back(instance.tasks[i].c);
      } else {
        utility += terms[i].local;
      }
    }
    if (f_sum > params.f_total) {
      // Budget binds: redo the execution terms with the multiplier solution.
      std::vector<double> f;
      try {
        f = allocate_frequencies(cycles, w, params, cfg);
      } catch (const InfeasibleError&) {
        continue;
      }
      std::size_t k = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!m[i]) continue;
        utility += execution_cost(instance.tasks[i].c, f[k++], w, params) - terms[i].exe_unbounded;
      }
    }

    bool better = false;
    if (best_m.empty() || utility < best_utility * (1.0 - kTieTolerance)) {
      better = true;
    } else if (utility <= best_utility * (1.0 + kTieTolerance)) {
      const auto ones = std::count(m.begin(), m.end(), std::uint8_t{1});
      const auto best_ones = std::count(best_m.begin(), best_m.end(), std::uint8_t{1});
      better = ones < best_ones || (ones == best_ones && lexicographically_less(m, best_m));
    }
    if (better) {
      best_utility = std::min(best_utility, utility);
      best_m = m;
    }
  }
  if (best_m.empty()) throw InfeasibleError("no feasible offload vector");
  return solve_resources_given_m(instance, best_m, params, cfg);
}

}  // namespace mecsched
