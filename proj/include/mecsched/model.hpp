#pragma once

// Delay/energy model for a single MEC base station serving N terminals.
//
// Every terminal holds one task. A task either runs on the terminal
// (m_i = 0) or is uplinked, executed on the edge server and downlinked
// (m_i = 1). All quantities are SI: bits, cycles, Hz, W, J, s.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mecsched {

/// Raised when no schedule can satisfy the frequency budget, e.g. when even
/// minimum per-task frequencies of the offloaded set exceed F_total.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TaskInfo {
  double u = 0.0;     // uplink data volume (bits)
  double c = 1.0;     // required CPU cycles
  double d = 0.0;     // downlink data volume (bits)
  double h_ul = 1.0;  // uplink channel gain
  double h_dl = 1.0;  // downlink channel gain

  /// Reciprocal channel: h_ul = h_dl = h.
  static TaskInfo reciprocal(double u, double c, double d, double h) {
    return TaskInfo{u, c, d, h, h};
  }
};

void validate(const TaskInfo& task);

double dbm_per_hz_to_watts_per_hz(double dbm_per_hz);

struct SystemParams {
  double f_loc = 2e9;       // terminal CPU frequency (Hz)
  double k_loc = 3e-27;     // terminal CPU energy constant
  double k_ap = 1e-27;      // edge CPU energy constant
  double p_ul_min = 0.05;   // terminal transmit power (W)
  double p_ul_max = 0.2;
  double p_dl_min = 20.0;   // access point transmit power (W)
  double p_dl_max = 200.0;
  double f_ap_min = 1e9;    // per-task edge frequency (Hz)
  double f_ap_max = 8e9;
  double f_total = 140e9;   // edge frequency budget (Hz)
  double n0 = dbm_per_hz_to_watts_per_hz(-173.0);  // noise PSD (W/Hz)
  double w_ul = 10e6;       // per-terminal bandwidth (Hz)
  double w_dl = 10e6;
  double lambda = 0.5;      // delay/energy preference
  std::size_t n_bar = 40;   // maximum access count

  void validate() const;
};

struct Instance {
  std::vector<TaskInfo> tasks;

  std::size_t size() const { return tasks.size(); }
  void validate(const SystemParams& params) const;
};

/// Offload decisions plus per-task allocations. Allocations of local tasks
/// are kept at zero and never read by the cost formulas.
struct Schedule {
  std::vector<std::uint8_t> m;
  std::vector<double> p_ul;
  std::vector<double> p_dl;
  std::vector<double> f_ap;

  std::size_t size() const { return m.size(); }
  std::size_t offloaded_count() const;

  static Schedule all_local(std::size_t n);
  /// Sized schedule with zero allocations for the given decisions.
  static Schedule with_decisions(std::vector<std::uint8_t> decisions);
};

enum class Constraint {
  FrequencyBox,      // f_ap_min <= f_ap <= f_ap_max
  UplinkPowerBox,    // p_ul_min <= p_ul <= p_ul_max
  DownlinkPowerBox,  // p_dl_min <= p_dl <= p_dl_max
  FrequencyBudget,   // sum of offloaded f_ap <= F_total
  BinaryDecision,    // m_i in {0, 1}
};

std::string to_string(Constraint c);

struct Violation {
  Constraint id;
  std::optional<std::size_t> task;  // empty for the global budget
  double amount;                    // positive magnitude of the excess
};

struct FeasibilityReport {
  bool feasible = true;
  std::vector<Violation> violations;
};

struct CostReport {
  std::vector<double> per_task_delay;
  std::vector<double> per_task_energy;
  double T = 0.0;  // mean delay
  double E = 0.0;  // total energy
  double U = 0.0;  // lambda*T + (1-lambda)*E
  bool feasible = true;
  std::vector<Violation> violations;
};

struct LocalCost {
  double delay;
  double energy;
};

struct OffloadCost {
  double t_ul, t_dl, t_exe;
  double e_ul, e_dl, e_exe;

  double delay() const { return t_exe + t_ul + t_dl; }
  double energy() const { return e_ul + e_dl + e_exe; }
};

/// Relative slack applied to every bound check; absorbs rounding in
/// rescaled budgets.
inline constexpr double kConstraintTolerance = 1e-9;

LocalCost local_cost(const TaskInfo& task, const SystemParams& params);

/// Shannon rate W * log2(1 + p*h / (N0*W)).
double link_rate(double power, double gain, double bandwidth, const SystemParams& params);

/// Uplink, downlink and execution terms for one offloaded task.
OffloadCost offload_cost(const TaskInfo& task, double p_ul, double p_dl, double f_ap,
                         const SystemParams& params);

CostReport evaluate(const Instance& instance, const Schedule& schedule, const SystemParams& params);

FeasibilityReport check_constraints(const Schedule& schedule, const SystemParams& params);

/// Clamp offloaded allocations into their boxes and repair the frequency
/// budget by proportional scaling. Throws InfeasibleError when
/// n_offloaded * f_ap_min > F_total.
Schedule clip_to_constraints(Schedule schedule, const SystemParams& params);

}  // namespace mecsched
