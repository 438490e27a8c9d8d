// Python bindings. Structured values cross the boundary as plain dicts and
// lists with the same layout as the JSON files the CLI reads and writes.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <chrono>
#include <fstream>

#include "mecsched/bench.hpp"
#include "mecsched/params_io.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using nlohmann::json;
using namespace mecsched;

namespace {

json to_json(const py::handle& obj) {
  if (obj.is_none()) return json::object();
  const auto dumps = py::module_::import("json").attr("dumps");
  return json::parse(dumps(obj).cast<std::string>());
}

py::object to_py(const json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

SystemParams params_of(const py::handle& obj) { return params_from_json(to_json(obj)); }

RunConfig config_of(const py::handle& obj) {
  RunConfig cfg = RunConfig::from_json(to_json(obj));
  cfg.validate();
  return cfg;
}

Instance instance_of(const py::handle& obj) { return instance_from_json(to_json(obj)); }

json solution_json(const Schedule& s, double utility) {
  return {{"schedule", schedule_to_json(s)}, {"utility", utility}};
}

LoadedNets load_nets(const RunConfig& cfg, const std::vector<fs::path>& files) {
  std::vector<Checkpoint> ckpts;
  for (const auto& f : files.empty() ? default_checkpoints(cfg) : files) {
    ckpts.push_back(load_checkpoint(f));
  }
  return assemble_nets(ckpts);
}

json row_json(const MethodRow& r) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return {{"method", r.method},
          {"n", r.n},
          {"instances", r.instances},
          {"mean_utility", r.mean_utility},
          {"mean_gap_ga", r.mean_gap_ga},
          {"mean_gap_oracle", opt(r.mean_gap_oracle)},
          {"offload_accuracy", r.offload_accuracy},
          {"mse_p_ul", opt(r.mse_p_ul)},
          {"mse_p_dl", opt(r.mse_p_dl)},
          {"mse_f_ap", opt(r.mse_f_ap)},
          {"latency_ms", r.latency_ms},
          {"feasible", r.feasible},
          {"violations", r.violations},
          {"fallbacks", r.fallbacks}};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "MEC offloading and resource allocation: model, solvers and learned schedulers";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<InfeasibleError>(m, "InfeasibleError", PyExc_ArithmeticError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_ArithmeticError);
  py::register_exception<TooLargeError>(m, "TooLargeError", PyExc_ValueError);

  m.def("default_params", [] { return to_py(to_json(SystemParams{})); });
  m.def("default_config", [] { return to_py(RunConfig{}.to_json()); });
  m.def("method_names", [] { return method_names(); });

  m.def(
      "sample_instance",
      [](std::size_t n, std::uint64_t seed, const py::object& distribution, const py::object& params) {
        const InstanceDistribution d = distribution_from_json(to_json(distribution));
        return to_py(instance_to_json(sample_instance(d, n, seed, params_of(params))));
      },
      py::arg("n"), py::arg("seed") = 0, py::arg("distribution") = py::none(),
      py::arg("params") = py::none());

  m.def(
      "evaluate",
      [](const py::object& instance, const py::object& schedule, const py::object& params) {
        return to_py(cost_report_to_json(
            evaluate(instance_of(instance), schedule_from_json(to_json(schedule)), params_of(params))));
      },
      py::arg("instance"), py::arg("schedule"), py::arg("params") = py::none());

  m.def(
      "check_constraints",
      [](const py::object& schedule, const py::object& params) {
        const FeasibilityReport r =
            check_constraints(schedule_from_json(to_json(schedule)), params_of(params));
        json out = json::array();
        for (const auto& v : r.violations) {
          out.push_back({{"constraint", to_string(v.id)},
                         {"task", v.task ? json(*v.task) : json(nullptr)},
                         {"amount", v.amount}});
        }
        return to_py(out);
      },
      py::arg("schedule"), py::arg("params") = py::none());

  m.def(
      "clip_to_constraints",
      [](const py::object& schedule, const py::object& params) {
        return to_py(schedule_to_json(
            clip_to_constraints(schedule_from_json(to_json(schedule)), params_of(params))));
      },
      py::arg("schedule"), py::arg("params") = py::none());

  m.def(
      "solve_resources",
      [](const py::object& instance, const std::vector<std::uint8_t>& decisions, const py::object& params) {
        const ResourceSolution r = solve_resources_given_m(instance_of(instance), decisions, params_of(params));
        return to_py(solution_json(r.schedule, r.utility));
      },
      py::arg("instance"), py::arg("m"), py::arg("params") = py::none());

  m.def(
      "enumerate_optimal",
      [](const py::object& instance, const py::object& params) {
        const ResourceSolution r = enumerate_optimal(instance_of(instance), params_of(params));
        return to_py(solution_json(r.schedule, r.utility));
      },
      py::arg("instance"), py::arg("params") = py::none());

  m.def(
      "ga_solve",
      [](const py::object& instance, const py::object& params, const py::object& ga) {
        const LabeledInstance r =
            ga_solve(instance_of(instance), params_of(params), ga_config_from_json(to_json(ga)));
        return to_py(solution_json(r.schedule, r.utility));
      },
      py::arg("instance"), py::arg("params") = py::none(), py::arg("ga") = py::none());

  m.def(
      "generate",
      [](const py::object& config, const fs::path& out) {
        const GenerateSummary s = run_generate(config_of(config), out);
        return to_py({{"records", s.records}, {"mean_utility", s.mean_utility}});
      },
      py::arg("config"), py::arg("out"));

  m.def(
      "train",
      [](const py::object& config, const std::string& net, const fs::path& data, const fs::path& out) {
        const RunConfig cfg = config_of(config);
        const TrainOutcome t = run_train(cfg, net_role_from_string(net), data);
        save_checkpoint(out, t.checkpoint);
        std::ofstream hist(history_path_for(out));
        if (!hist) throw IoError("cannot write " + history_path_for(out).string());
        write_history_csv(hist, t.trained);
        json history = json::array();
        for (const auto& tn : t.trained) {
          for (const auto& e : tn.history) {
            history.push_back({{"network", tn.name},
                               {"epoch", e.epoch},
                               {"train_loss", e.train_loss},
                               {"val_loss", e.val_loss},
                               {"val_metric", e.val_metric}});
          }
        }
        return to_py(history);
      },
      py::arg("config"), py::arg("net"), py::arg("data"), py::arg("out"));

  m.def(
      "solve",
      [](const py::object& config, const py::object& instance, const std::string& method,
         const std::vector<fs::path>& checkpoints) {
        const RunConfig cfg = config_of(config);
        const Method which = method_from_string(method);
        const bool learned = which == Method::tsnet_sac || which == Method::tsnet ||
                             which == Method::mlp || which == Method::mlp_mixer;
        const LoadedNets nets = learned ? load_nets(cfg, checkpoints) : LoadedNets{};
        const SolveOutput s = run_solve(instance_of(instance), which, cfg.params, nets.context(cfg));
        return to_py({{"method", method},
                      {"schedule", schedule_to_json(s.schedule)},
                      {"cost", cost_report_to_json(s.cost)},
                      {"fallback", s.fallback},
                      {"latency_ms", s.latency_ms}});
      },
      py::arg("config"), py::arg("instance"), py::arg("method"),
      py::arg("checkpoints") = std::vector<fs::path>{});

  m.def(
      "evaluate_dataset",
      [](const py::object& config, const fs::path& data, const std::vector<std::string>& methods,
         const std::vector<fs::path>& checkpoints) {
        const RunConfig cfg = config_of(config);
        std::vector<Method> which;
        bool learned = false;
        for (const auto& name : methods) {
          which.push_back(method_from_string(name));
          learned |= which.back() == Method::tsnet_sac || which.back() == Method::tsnet ||
                     which.back() == Method::mlp || which.back() == Method::mlp_mixer;
        }
        const LoadedNets nets = learned ? load_nets(cfg, checkpoints) : LoadedNets{};
        const EvalReport rep = evaluate_methods(read_dataset(data / kDatasetFile), which, cfg.params,
                                                nets.context(cfg), cfg.evaluation.oracle_max_n,
                                                cfg.workers);
        json rows = json::array();
        for (const auto& r : rep.rows) rows.push_back(row_json(r));
        return to_py(rows);
      },
      py::arg("config"), py::arg("data"), py::arg("methods"),
      py::arg("checkpoints") = std::vector<fs::path>{});
}
