#pragma once

// Command implementations behind the CLI: dataset generation, training,
// evaluation reports and single-instance solving.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mecsched/checkpoint.hpp"
#include "mecsched/run_config.hpp"
#include "mecsched/scheduler.hpp"
#include "mecsched/training.hpp"

namespace mecsched {

/// 2 for usage/config errors, 3 for I/O, 4 for numeric failures, 1 otherwise.
int exit_code_for(const std::exception& e);

// ----------------------------------------------------------------- generate

struct GenerateSummary {
  DatasetManifest manifest;
  std::size_t records = 0;
  double mean_utility = 0.0;
};

GenerateSummary run_generate(const RunConfig& cfg, const std::filesystem::path& out);

// -------------------------------------------------------------------- train

enum class NetRole { offload, resource, mlp, mixer };

std::string to_string(NetRole role);
NetRole net_role_from_string(const std::string& s);

struct TrainedNetwork {
  std::string name;  // "<body>-<head>"
  std::vector<EpochRecord> history;
};

struct TrainOutcome {
  Checkpoint checkpoint;
  std::vector<TrainedNetwork> trained;
};

/// offload/resource train one transformer head; mlp and mixer train both
/// heads of that baseline body. The normalizer is fitted on the training
/// split only.
TrainOutcome run_train(const RunConfig& cfg, NetRole role,
                       const std::filesystem::path& data_dir);

/// Columns: network,epoch,train_loss,val_loss,val_metric.
void write_history_csv(std::ostream& out, const std::vector<TrainedNetwork>& trained);
/// `<checkpoint stem>.history.csv` next to the checkpoint.
std::filesystem::path history_path_for(const std::filesystem::path& checkpoint);

// ----------------------------------------------------------------- networks

struct LoadedNets {
  std::optional<TsNet> tsnet;
  std::optional<TsNet> mlp;
  std::optional<TsNet> mixer;

  SchedulerContext context(const RunConfig& cfg) const;
};

/// Pairs offload and resource heads per body. Throws ConfigError when a body
/// has only one head or heads disagree on the normalizer.
LoadedNets assemble_nets(const std::vector<Checkpoint>& checkpoints);

/// Checkpoint files to use when none are given on the command line: any of
/// offload/resource/mlp/mixer.json present in the checkpoint directory.
std::vector<std::filesystem::path> default_checkpoints(const RunConfig& cfg);

// --------------------------------------------------------------- evaluation

inline constexpr int kReportSchemaVersion = 1;

struct MethodRow {
  std::string method;
  std::size_t n = 0;
  std::size_t instances = 0;
  double mean_utility = 0.0;
  double mean_gap_ga = 0.0;
  std::optional<double> mean_gap_oracle;
  double offload_accuracy = 0.0;
  std::optional<double> mse_p_ul;
  std::optional<double> mse_p_dl;
  std::optional<double> mse_f_ap;
  double latency_ms = 0.0;
  std::size_t feasible = 0;
  std::size_t violations = 0;
  std::size_t fallbacks = 0;
};

struct EvalReport {
  std::vector<MethodRow> rows;
  /// Per-instance utilities by method, in record order.
  std::map<std::string, std::vector<double>> utilities;
};

EvalReport evaluate_methods(const std::vector<LabeledInstance>& records,
                            const std::vector<Method>& methods, const SystemParams& params,
                            const SchedulerContext& ctx, std::size_t oracle_max_n,
                            std::size_t workers);

/// Header: schema_version,method,n,instances,mean_utility,mean_gap_ga,
/// mean_gap_oracle,offload_accuracy,mse_p_ul,mse_p_dl,mse_f_ap,latency_ms,
/// feasible,violations,fallbacks. Missing values are written as NA.
void write_report_csv(std::ostream& out, const EvalReport& report);
std::vector<MethodRow> read_report_csv(std::istream& in);

/// Mean utility of TSNet-SAC for each k.
std::vector<std::pair<std::size_t, double>> sac_k_sweep(const std::vector<LabeledInstance>& records,
                                                        const SystemParams& params,
                                                        const SchedulerContext& ctx,
                                                        const std::vector<std::size_t>& ks,
                                                        std::size_t workers);

/// Writes the plot-data files for a report into `dir` and returns their paths.
std::vector<std::filesystem::path> write_plot_files(const std::filesystem::path& dir,
                                                    const std::vector<LabeledInstance>& records,
                                                    const EvalReport& report,
                                                    const SystemParams& params,
                                                    const SchedulerContext& ctx,
                                                    const EvaluationConfig& eval,
                                                    std::size_t workers);

// -------------------------------------------------------------------- solve

struct SolveOutput {
  Schedule schedule;
  CostReport cost;
  double latency_ms = 0.0;
  bool fallback = false;
};

SolveOutput run_solve(const Instance& instance, Method method, const SystemParams& params,
                      const SchedulerContext& ctx);

}  // namespace mecsched
