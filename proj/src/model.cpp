#include "mecsched/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace mecsched {

namespace {

bool exceeds(double value, double bound) {
  return value > bound + kConstraintTolerance * std::abs(bound);
}

bool below(double value, double bound) {
  return value < bound - kConstraintTolerance * std::abs(bound);
}

void require_sizes(const Schedule& s) {
  const std::size_t n = s.m.size();
  if (s.p_ul.size() != n || s.p_dl.size() != n || s.f_ap.size() != n) {
    throw std::invalid_argument("schedule vectors have inconsistent lengths");
  }
}

void check_box(std::vector<Violation>& out, Constraint id, std::size_t i, double v, double lo,
               double hi) {
  if (below(v, lo)) out.push_back({id, i, lo - v});
  if (exceeds(v, hi)) out.push_back({id, i, v - hi});
}

}  // namespace

void validate(const TaskInfo& task) {
  if (!(task.u >= 0.0) || !(task.d >= 0.0)) {
    throw std::invalid_argument("task data volumes must be non-negative");
  }
  if (!(task.c > 0.0)) throw std::invalid_argument("task cycles must be positive");
  if (!(task.h_ul > 0.0) || !(task.h_dl > 0.0)) {
    throw std::invalid_argument("channel gains must be positive");
  }
  if (!std::isfinite(task.u) || !std::isfinite(task.c) || !std::isfinite(task.d) ||
      !std::isfinite(task.h_ul) || !std::isfinite(task.h_dl)) {
    throw std::invalid_argument("task fields must be finite");
  }
}

double dbm_per_hz_to_watts_per_hz(double dbm_per_hz) {
  return std::pow(10.0, dbm_per_hz / 10.0) * 1e-3;
}

void SystemParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument(std::string(name) + " must be positive and finite");
    }
  };
  positive(f_loc, "f_loc");
  positive(k_loc, "k_loc");
  positive(k_ap, "k_ap");
  positive(p_ul_min, "p_ul_min");
  positive(p_dl_min, "p_dl_min");
  positive(f_ap_min, "f_ap_min");
  positive(f_total, "f_total");
  positive(n0, "n0");
  positive(w_ul, "w_ul");
  positive(w_dl, "w_dl");
  if (p_ul_min > p_ul_max) throw std::invalid_argument("p_ul_min > p_ul_max");
  if (p_dl_min > p_dl_max) throw std::invalid_argument("p_dl_min > p_dl_max");
  if (f_ap_min > f_ap_max) throw std::invalid_argument("f_ap_min > f_ap_max");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must lie in [0, 1]");
  if (n_bar < 1) throw std::invalid_argument("n_bar must be at least 1");
}

void Instance::validate(const SystemParams& params) const {
  if (tasks.empty()) throw std::invalid_argument("instance must contain at least one task");
  if (tasks.size() > params.n_bar) {
    std::ostringstream os;
    os << "instance has " << tasks.size() << " tasks, more than n_bar = " << params.n_bar;
    throw std::invalid_argument(os.str());
  }
  for (const auto& t : tasks) mecsched::validate(t);
}

std::size_t Schedule::offloaded_count() const {
  return static_cast<std::size_t>(std::count(m.begin(), m.end(), std::uint8_t{1}));
}

Schedule Schedule::all_local(std::size_t n) {
  return with_decisions(std::vector<std::uint8_t>(n, 0));
}

Schedule Schedule::with_decisions(std::vector<std::uint8_t> decisions) {
  Schedule s;
  const std::size_t n = decisions.size();
  s.m = std::move(decisions);
  s.p_ul.assign(n, 0.0);
  s.p_dl.assign(n, 0.0);
  s.f_ap.assign(n, 0.0);
  return s;
}

std::string to_string(Constraint c) {
  switch (c) {
    case Constraint::FrequencyBox: return "frequency_box";
    case Constraint::UplinkPowerBox: return "uplink_power_box";
    case Constraint::DownlinkPowerBox: return "downlink_power_box";
    case Constraint::FrequencyBudget: return "frequency_budget";
    case Constraint::BinaryDecision: return "binary_decision";
  }
  return "unknown";
}

LocalCost local_cost(const TaskInfo& task, const SystemParams& params) {
  return {task.c / params.f_loc, params.k_loc * params.f_loc * params.f_loc * task.c};
}

double link_rate(double power, double gain, double bandwidth, const SystemParams& params) {
  if (!(power > 0.0) || !(gain > 0.0) || !(bandwidth > 0.0)) {
    throw std::invalid_argument("link_rate requires positive power, gain and bandwidth");
  }
  return bandwidth * std::log2(1.0 + power * gain / (params.n0 * bandwidth));
}

OffloadCost offload_cost(const TaskInfo& task, double p_ul, double p_dl, double f_ap,
                         const SystemParams& params) {
  if (!(f_ap > 0.0)) throw std::invalid_argument("f_ap must be positive");
  OffloadCost cost{};
  if (task.u > 0.0) {
    cost.t_ul = task.u / link_rate(p_ul, task.h_ul, params.w_ul, params);
    cost.e_ul = p_ul * cost.t_ul;
  }
  if (task.d > 0.0) {
    cost.t_dl = task.d / link_rate(p_dl, task.h_dl, params.w_dl, params);
    cost.e_dl = p_dl * cost.t_dl;
  }
  cost.t_exe = task.c / f_ap;
  cost.e_exe = params.k_ap * f_ap * f_ap * task.c;
  return cost;
}

CostReport evaluate(const Instance& instance, const Schedule& schedule,
                    const SystemParams& params) {
  require_sizes(schedule);
  const std::size_t n = instance.size();
  if (schedule.size() != n) {
    throw std::invalid_argument("schedule length does not match instance length");
  }
  if (n == 0) throw std::invalid_argument("cannot evaluate an empty instance");

  CostReport r;
  r.per_task_delay.resize(n);
  r.per_task_energy.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& task = instance.tasks[i];
    if (schedule.m[i] == 0) {
      const LocalCost lc = local_cost(task, params);
      r.per_task_delay[i] = lc.delay;
      r.per_task_energy[i] = lc.energy;
    } else {
      const OffloadCost oc =
          offload_cost(task, schedule.p_ul[i], schedule.p_dl[i], schedule.f_ap[i], params);
      r.per_task_delay[i] = oc.delay();
      r.per_task_energy[i] = oc.energy();
    }
  }
  r.T = std::accumulate(r.per_task_delay.begin(), r.per_task_delay.end(), 0.0) /
        static_cast<double>(n);
  r.E = std::accumulate(r.per_task_energy.begin(), r.per_task_energy.end(), 0.0);
  r.U = params.lambda * r.T + (1.0 - params.lambda) * r.E;

  FeasibilityReport f = check_constraints(schedule, params);
  r.feasible = f.feasible;
  r.violations = std::move(f.violations);
  return r;
}

FeasibilityReport check_constraints(const Schedule& schedule, const SystemParams& params) {
  require_sizes(schedule);
  FeasibilityReport report;
  double total = 0.0;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const std::uint8_t m = schedule.m[i];
    if (m > 1) {
      report.violations.push_back({Constraint::BinaryDecision, i, static_cast<double>(m) - 1.0});
      continue;
    }
    if (m == 0) continue;
    check_box(report.violations, Constraint::FrequencyBox, i, schedule.f_ap[i], params.f_ap_min,
              params.f_ap_max);
    check_box(report.violations, Constraint::UplinkPowerBox, i, schedule.p_ul[i],
              params.p_ul_min, params.p_ul_max);
    check_box(report.violations, Constraint::DownlinkPowerBox, i, schedule.p_dl[i],
              params.p_dl_min, params.p_dl_max);
    total += schedule.f_ap[i];
  }
  if (exceeds(total, params.f_total)) {
    report.violations.push_back({Constraint::FrequencyBudget, std::nullopt, total - params.f_total});
  }
  report.feasible = report.violations.empty();
  return report;
}

Schedule clip_to_constraints(Schedule s, const SystemParams& params) {
  require_sizes(s);
  std::vector<std::size_t> offloaded;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.m[i] == 0) {
      s.p_ul[i] = s.p_dl[i] = s.f_ap[i] = 0.0;
      continue;
    }
    s.m[i] = 1;
    s.p_ul[i] = std::clamp(s.p_ul[i], params.p_ul_min, params.p_ul_max);
    s.p_dl[i] = std::clamp(s.p_dl[i], params.p_dl_min, params.p_dl_max);
    s.f_ap[i] = std::clamp(s.f_ap[i], params.f_ap_min, params.f_ap_max);
    offloaded.push_back(i);
  }

  double total = 0.0;
  for (std::size_t i : offloaded) total += s.f_ap[i];
  if (!exceeds(total, params.f_total)) return s;

  const double floor_total = static_cast<double>(offloaded.size()) * params.f_ap_min;
  if (exceeds(floor_total, params.f_total)) {
    std::ostringstream os;
    os << offloaded.size() << " offloaded tasks need at least " << floor_total
       << " Hz, budget is " << params.f_total << " Hz";
    throw InfeasibleError(os.str());
  }

  // Proportional scaling; values that fall under f_ap_min are pinned there
  // and the remaining budget is rescaled over the free set.
  std::vector<std::uint8_t> pinned(s.size(), 0);
  for (;;) {
    double pinned_total = 0.0;
    double free_total = 0.0;
    for (std::size_t i : offloaded) (pinned[i] ? pinned_total : free_total) += s.f_ap[i];
    if (free_total <= 0.0) break;
    const double scale = (params.f_total - pinned_total) / free_total;
    bool newly_pinned = false;
    for (std::size_t i : offloaded) {
      if (pinned[i]) continue;
      const double scaled = s.f_ap[i] * scale;
      if (scaled < params.f_ap_min) {
        s.f_ap[i] = params.f_ap_min;
        pinned[i] = 1;
        newly_pinned = true;
      }
    }
    if (newly_pinned) continue;
    for (std::size_t i : offloaded) {
      if (!pinned[i]) s.f_ap[i] = std::min(s.f_ap[i] * scale, params.f_ap_max);
    }
    break;
  }
  return s;
}

}  // namespace mecsched
