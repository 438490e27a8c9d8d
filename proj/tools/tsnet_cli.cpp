// mecsched: dataset generation, training, evaluation and single-instance
// solving for the two-stage offloading scheduler.
//
// Exit codes: 0 ok, 2 usage/config, 3 I/O, 4 numeric failure.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "mecsched/bench.hpp"

namespace fs = std::filesystem;
using namespace mecsched;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::string data;
  std::string net;
  std::string instance;
  std::string method;
  std::string plots;
  std::vector<std::string> ckpts;
  std::vector<std::string> methods{"all-local", "all-offload", "ga"};
  std::size_t workers = 0;
  bool no_plots = false;
};

RunConfig load(const Options& o) {
  RunConfig cfg = load_run_config(o.config);
  if (o.workers > 0) cfg.workers = o.workers;
  return cfg;
}

std::vector<Checkpoint> load_checkpoints(const RunConfig& cfg, const std::vector<std::string>& given) {
  std::vector<fs::path> paths(given.begin(), given.end());
  if (paths.empty()) paths = default_checkpoints(cfg);
  std::vector<Checkpoint> out;
  for (const auto& p : paths) {
    if (!fs::exists(p)) throw ConfigError("checkpoint not found: " + p.string());
    out.push_back(load_checkpoint(p));
  }
  return out;
}

bool learned(Method m) {
  return m == Method::tsnet_sac || m == Method::tsnet || m == Method::mlp || m == Method::mlp_mixer;
}

void require_nets(Method m, const SchedulerContext& ctx) {
  const TsNet* nets = m == Method::mlp ? ctx.mlp : m == Method::mlp_mixer ? ctx.mixer : ctx.tsnet;
  if (learned(m) && nets == nullptr) {
    throw ConfigError("method '" + to_string(m) + "' needs a checkpoint (--ckpts)");
  }
}

int cmd_generate(const Options& o) {
  const RunConfig cfg = load(o);
  const GenerateSummary s = run_generate(cfg, o.out);
  std::cout << "records: " << s.records << '\n';
  for (const auto& [n, count] : s.manifest.counts) std::cout << "  n=" << n << ": " << count << '\n';
  std::cout << "mean label utility: " << std::setprecision(10) << s.mean_utility << '\n'
            << "ga failures: " << s.manifest.ga_failures << '\n'
            << "written: " << (fs::path(o.out) / s.manifest.data_file).string() << '\n';
  return 0;
}

int cmd_train(const Options& o) {
  const RunConfig cfg = load(o);
  const NetRole role = net_role_from_string(o.net);
  const TrainOutcome t = run_train(cfg, role, o.data);
  save_checkpoint(o.out, t.checkpoint);
  const fs::path history = history_path_for(o.out);
  std::ofstream csv(history);
  if (!csv) throw IoError("cannot write " + history.string());
  write_history_csv(csv, t.trained);
  for (const auto& n : t.trained) {
    const EpochRecord& last = n.history.empty() ? EpochRecord{} : n.history.back();
    std::cout << n.name << ": epochs " << n.history.size() << ", train loss " << std::setprecision(6)
              << last.train_loss << ", val loss " << last.val_loss << ", val metric "
              << last.val_metric << '\n';
  }
  std::cout << "checkpoint: " << o.out << "\nhistory: " << history.string() << '\n';
  return 0;
}

int cmd_evaluate(const Options& o) {
  const RunConfig cfg = load(o);
  std::vector<Method> methods;
  for (const auto& name : o.methods) methods.push_back(method_from_string(name));
  bool any_learned = false;
  for (Method m : methods) any_learned = any_learned || learned(m);
  const std::vector<Checkpoint> ckpts =
      any_learned || !o.ckpts.empty() ? load_checkpoints(cfg, o.ckpts) : std::vector<Checkpoint>{};
  const LoadedNets nets = assemble_nets(ckpts);
  const SchedulerContext ctx = nets.context(cfg);
  for (Method m : methods) require_nets(m, ctx);

  const DatasetManifest manifest = read_manifest(o.data);
  const auto records = read_dataset(fs::path(o.data) / manifest.data_file);
  const EvalReport report =
      evaluate_methods(records, methods, cfg.params, ctx, cfg.evaluation.oracle_max_n, cfg.workers);

  const fs::path out(o.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ofstream csv(out);
  if (!csv) throw IoError("cannot write " + out.string());
  write_report_csv(csv, report);
  csv.close();
  write_report_csv(std::cout, report);

  if (!o.no_plots) {
    fs::path dir = o.plots.empty() ? out.parent_path() / (out.stem().string() + "_plots") : fs::path(o.plots);
    const auto files = write_plot_files(dir, records, report, cfg.params, ctx, cfg.evaluation, cfg.workers);
    std::cerr << "plot data: " << files.size() << " files in " << dir.string() << '\n';
  }
  return 0;
}

int cmd_solve(const Options& o) {
  const RunConfig cfg = load(o);
  const Method method = method_from_string(o.method);
  std::ifstream in(o.instance);
  if (!in) throw IoError("cannot open instance " + o.instance);
  std::stringstream buffer;
  buffer << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(buffer.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("instance is not valid JSON: ") + e.what());
  }
  const Instance instance = instance_from_json(j);
  if (instance.size() > cfg.params.n_bar) {
    throw ConfigError("instance has " + std::to_string(instance.size()) + " tasks, n_bar is " +
                      std::to_string(cfg.params.n_bar));
  }

  const std::vector<Checkpoint> ckpts =
      learned(method) ? load_checkpoints(cfg, o.ckpts) : std::vector<Checkpoint>{};
  const LoadedNets nets = assemble_nets(ckpts);
  const SchedulerContext ctx = nets.context(cfg);
  require_nets(method, ctx);

  const SolveOutput s = run_solve(instance, method, cfg.params, ctx);
  const nlohmann::json doc{{"method", to_string(method)},
                           {"schedule", schedule_to_json(s.schedule)},
                           {"cost", cost_report_to_json(s.cost)},
                           {"fallback", s.fallback}};
  std::cout << doc.dump(2) << '\n';
  std::cerr << "latency_ms: " << std::setprecision(6) << s.latency_ms << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage MEC offloading scheduler: data, training, evaluation"};
  app.require_subcommand(1);
  Options o;

  auto* gen = app.add_subcommand("generate", "Sample instances, label them with the GA, write a dataset");
  gen->add_option("--config", o.config, "Run configuration JSON")->required();
  gen->add_option("--out", o.out, "Dataset directory")->required();
  gen->add_option("--workers", o.workers, "Worker threads (overrides config)");

  auto* train = app.add_subcommand("train", "Train one network on a dataset");
  train->add_option("--config", o.config, "Run configuration JSON")->required();
  train->add_option("--net", o.net, "offload | resource | mlp | mixer")->required();
  train->add_option("--data", o.data, "Dataset directory")->required();
  train->add_option("--out", o.out, "Checkpoint file")->required();
  train->add_option("--workers", o.workers, "Worker threads (overrides config)");

  auto* eval = app.add_subcommand("evaluate", "Compare methods on a dataset and write a CSV report");
  eval->add_option("--config", o.config, "Run configuration JSON")->required();
  eval->add_option("--data", o.data, "Dataset directory")->required();
  eval->add_option("--ckpts", o.ckpts, "Checkpoint files");
  eval->add_option("--methods", o.methods, "Methods to compare")->capture_default_str();
  eval->add_option("--out", o.out, "Report CSV")->required();
  eval->add_option("--plots", o.plots, "Plot data directory (default: <report>_plots)");
  eval->add_flag("--no-plots", o.no_plots, "Skip plot data files");
  eval->add_option("--workers", o.workers, "Worker threads (overrides config)");

  auto* solve = app.add_subcommand("solve", "Schedule one instance and print it as JSON");
  solve->add_option("--config", o.config, "Run configuration JSON")->required();
  solve->add_option("--instance", o.instance, "Instance JSON {\"tasks\": [[u,c,d,h], ...]}")->required();
  solve->add_option("--method", o.method, "Scheduling method")->required();
  solve->add_option("--ckpts", o.ckpts, "Checkpoint files for learned methods");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) return cmd_generate(o);
    if (train->parsed()) return cmd_train(o);
    if (eval->parsed()) return cmd_evaluate(o);
    if (solve->parsed()) return cmd_solve(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return 2;
}
