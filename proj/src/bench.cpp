#include "mecsched/bench.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>

#include "mecsched/parallel.hpp"

namespace mecsched {

namespace fs = std::filesystem;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const fs::filesystem_error*>(&e)) return 3;
  if (dynamic_cast<const DivergenceError*>(&e) || dynamic_cast<const InfeasibleError*>(&e)) return 4;
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const std::invalid_argument*>(&e) ||
      dynamic_cast<const StateError*>(&e) || dynamic_cast<const nlohmann::json::exception*>(&e)) {
    return 2;
  }
  return 1;
}

// ----------------------------------------------------------------- generate

GenerateSummary run_generate(const RunConfig& cfg, const fs::path& out) {
  GenerateSummary s;
  s.manifest = build_dataset(cfg.distribution, cfg.params, cfg.ga, cfg.count_per_n, out, cfg.workers);
  const auto records = read_dataset(out / s.manifest.data_file);
  s.records = records.size();
  for (const auto& r : records) s.mean_utility += r.utility;
  if (!records.empty()) s.mean_utility /= static_cast<double>(records.size());
  return s;
}

// -------------------------------------------------------------------- train

std::string to_string(NetRole role) {
  switch (role) {
    case NetRole::offload: return "offload";
    case NetRole::resource: return "resource";
    case NetRole::mlp: return "mlp";
    case NetRole::mixer: return "mixer";
  }
  return "unknown";
}

NetRole net_role_from_string(const std::string& s) {
  if (s == "offload") return NetRole::offload;
  if (s == "resource") return NetRole::resource;
  if (s == "mlp") return NetRole::mlp;
  if (s == "mixer") return NetRole::mixer;
  throw std::invalid_argument("unknown network '" + s + "'; valid: offload, resource, mlp, mixer");
}

TrainOutcome run_train(const RunConfig& cfg, NetRole role, const fs::path& data_dir) {
  const DatasetManifest manifest = read_manifest(data_dir);
  const auto records = read_dataset(data_dir / manifest.data_file);
  if (records.empty()) throw ConfigError("dataset in " + data_dir.string() + " is empty");
  for (const auto& r : records) {
    if (r.instance.size() > cfg.extender.n_bar) {
      throw ConfigError("dataset instance with " + std::to_string(r.instance.size()) +
                        " tasks exceeds extender.n_bar");
    }
  }

  const Split split = split_indices(records.size(), cfg.training.validation_fraction, cfg.training.seed);
  std::vector<LabeledInstance> train_records;
  std::vector<LabeledInstance> val_records;
  std::vector<Instance> corpus;
  for (std::size_t i : split.train) {
    train_records.push_back(records[i]);
    corpus.push_back(records[i].instance);
  }
  for (std::size_t i : split.validation) val_records.push_back(records[i]);

  TrainOutcome outcome;
  outcome.checkpoint.normalizer = Normalizer::fit(corpus);
  outcome.checkpoint.extender = cfg.extender;

  BodyKind body = BodyKind::transformer;
  std::vector<HeadKind> heads;
  switch (role) {
    case NetRole::offload: heads = {HeadKind::offload}; break;
    case NetRole::resource: heads = {HeadKind::resource}; break;
    case NetRole::mlp: body = BodyKind::mlp; heads = {HeadKind::offload, HeadKind::resource}; break;
    case NetRole::mixer: body = BodyKind::mixer; heads = {HeadKind::offload, HeadKind::resource}; break;
  }

  for (HeadKind head : heads) {
    NetConfig net_cfg = cfg.net;
    net_cfg.body = body;
    net_cfg.head = head;
    Network net(net_cfg);
    const auto train = make_samples(head, train_records, outcome.checkpoint.normalizer,
                                    cfg.extender, cfg.params);
    const auto val = make_samples(head, val_records, outcome.checkpoint.normalizer,
                                  cfg.extender, cfg.params);
    TrainedNetwork t;
    t.name = to_string(body) + "-" + to_string(head);
    t.history = train_network(net, train, val, cfg.training, cfg.workers);

    nlohmann::json history = nlohmann::json::array();
    for (const auto& e : t.history) {
      history.push_back({{"epoch", e.epoch},
                         {"train_loss", e.train_loss},
                         {"val_loss", e.val_loss},
                         {"val_metric", e.val_metric}});
    }
    nlohmann::json meta{{"training", to_json(cfg.training)},
                        {"train_samples", train.size()},
                        {"validation_samples", val.size()},
                        {"history", std::move(history)}};
    outcome.checkpoint.entries.push_back({std::move(net), std::move(meta)});
    outcome.trained.push_back(std::move(t));
  }
  return outcome;
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : "NA"; }

}  // namespace

void write_history_csv(std::ostream& out, const std::vector<TrainedNetwork>& trained) {
  out << "network,epoch,train_loss,val_loss,val_metric\n";
  for (const auto& t : trained) {
    for (const auto& e : t.history) {
      out << t.name << ',' << e.epoch << ',' << fmt(e.train_loss) << ',' << fmt(e.val_loss) << ','
          << fmt(e.val_metric) << '\n';
    }
  }
}

fs::path history_path_for(const fs::path& checkpoint) {
  fs::path p = checkpoint;
  p.replace_extension(".history.csv");
  return p;
}

// ----------------------------------------------------------------- networks

SchedulerContext LoadedNets::context(const RunConfig& cfg) const {
  SchedulerContext ctx;
  ctx.tsnet = tsnet ? &*tsnet : nullptr;
  ctx.mlp = mlp ? &*mlp : nullptr;
  ctx.mixer = mixer ? &*mixer : nullptr;
  ctx.sac = cfg.sac;
  ctx.extender = cfg.extender;
  ctx.ga = cfg.ga;
  return ctx;
}

namespace {

bool same_normalizer(const Normalizer& a, const Normalizer& b) {
  return a.fitted() == b.fitted() && a.lo() == b.lo() && a.hi() == b.hi();
}

}  // namespace

LoadedNets assemble_nets(const std::vector<Checkpoint>& checkpoints) {
  struct Slot {
    const Network* offload = nullptr;
    const Network* resource = nullptr;
    const Normalizer* normalizer = nullptr;
  };
  std::map<BodyKind, Slot> slots;
  for (const auto& c : checkpoints) {
    for (const auto& e : c.entries) {
      Slot& s = slots[e.network.config().body];
      if (s.normalizer && !same_normalizer(*s.normalizer, c.normalizer)) {
        throw ConfigError("checkpoints for body '" + to_string(e.network.config().body) +
                          "' were trained with different normalizers");
      }
      s.normalizer = &c.normalizer;
      (e.network.config().head == HeadKind::offload ? s.offload : s.resource) = &e.network;
    }
  }
  LoadedNets out;
  for (const auto& [body, s] : slots) {
    if (!s.offload || !s.resource) {
      throw ConfigError("body '" + to_string(body) + "' needs both an offload and a resource network");
    }
    TsNet nets{*s.offload, *s.resource, *s.normalizer};
    switch (body) {
      case BodyKind::transformer: out.tsnet = std::move(nets); break;
      case BodyKind::mlp: out.mlp = std::move(nets); break;
      case BodyKind::mixer: out.mixer = std::move(nets); break;
    }
  }
  return out;
}

std::vector<fs::path> default_checkpoints(const RunConfig& cfg) {
  std::vector<fs::path> out;
  for (const char* name : {"offload.json", "resource.json", "mlp.json", "mixer.json"}) {
    const fs::path p = fs::path(cfg.paths.checkpoint_dir) / name;
    if (fs::exists(p)) out.push_back(p);
  }
  return out;
}

// --------------------------------------------------------------- evaluation

namespace {

struct Outcome {
  Schedule schedule;
  double utility = 0.0;
  double latency_ms = 0.0;
  bool fallback = false;
  bool feasible = false;
  std::size_t violations = 0;
};

Outcome timed_run(Method method, const Instance& instance, const SystemParams& params,
                  const SchedulerContext& ctx) {
  const auto start = std::chrono::steady_clock::now();
  MethodResult r = run_method(method, instance, params, ctx);
  const auto stop = std::chrono::steady_clock::now();
  Outcome o;
  o.latency_ms = std::chrono::duration<double, std::milli>(stop - start).count();
  o.fallback = r.fallback;
  const FeasibilityReport f = check_constraints(r.schedule, params);
  o.feasible = f.feasible;
  o.violations = f.violations.size();
  o.utility = evaluate(instance, r.schedule, params).U;
  o.schedule = std::move(r.schedule);
  return o;
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

EvalReport evaluate_methods(const std::vector<LabeledInstance>& records,
                            const std::vector<Method>& methods, const SystemParams& params,
                            const SchedulerContext& ctx, std::size_t oracle_max_n,
                            std::size_t workers) {
  oracle_max_n = std::min(oracle_max_n, kMaxEnumerationSize);
  for (Method m : methods) {
    if (m != Method::oracle) continue;
    for (const auto& r : records) {
      if (r.instance.size() > oracle_max_n) {
        throw ConfigError("method 'oracle' needs every instance to have at most " +
                          std::to_string(oracle_max_n) + " tasks");
      }
    }
  }

  const std::size_t count = records.size();
  std::vector<std::optional<double>> optimum(count);
  parallel_for(count, workers, [&](std::size_t i) {
    if (records[i].instance.size() <= oracle_max_n) {
      optimum[i] = enumerate_optimal(records[i].instance, params, ctx.oracle).utility;
    }
  });

  std::map<std::size_t, std::vector<std::size_t>> by_n;
  for (std::size_t i = 0; i < count; ++i) by_n[records[i].instance.size()].push_back(i);

  EvalReport report;
  for (Method method : methods) {
    std::vector<Outcome> outs(count);
    parallel_for(count, workers, [&](std::size_t i) {
      outs[i] = timed_run(method, records[i].instance, params, ctx);
    });
    auto& utilities = report.utilities[to_string(method)];
    for (const auto& o : outs) utilities.push_back(o.utility);

    for (const auto& [n, indices] : by_n) {
      MethodRow row;
      row.method = to_string(method);
      row.n = n;
      row.instances = indices.size();
      std::vector<double> util, gap_ga, gap_oracle, latency;
      std::size_t agree = 0, tasks = 0;
      std::array<double, 3> se{};
      std::size_t both = 0;
      for (std::size_t i : indices) {
        const Outcome& o = outs[i];
        const LabeledInstance& rec = records[i];
        util.push_back(o.utility);
        gap_ga.push_back((o.utility - rec.utility) / rec.utility);
        if (optimum[i]) gap_oracle.push_back((o.utility - *optimum[i]) / *optimum[i]);
        latency.push_back(o.latency_ms);
        row.feasible += o.feasible ? 1 : 0;
        row.violations += o.violations;
        row.fallbacks += o.fallback ? 1 : 0;
        const Mat mine = unit_from_allocation(o.schedule, params);
        const Mat label = unit_from_allocation(rec.schedule, params);
        for (std::size_t t = 0; t < n; ++t) {
          ++tasks;
          agree += o.schedule.m[t] == rec.schedule.m[t] ? 1 : 0;
          if (o.schedule.m[t] && rec.schedule.m[t]) {
            ++both;
            for (int c = 0; c < 3; ++c) {
              const double d = mine(static_cast<Eigen::Index>(t), c) -
                               label(static_cast<Eigen::Index>(t), c);
              se[static_cast<std::size_t>(c)] += d * d;
            }
          }
        }
      }
      row.mean_utility = mean(util);
      row.mean_gap_ga = mean(gap_ga);
      if (gap_oracle.size() == indices.size()) row.mean_gap_oracle = mean(gap_oracle);
      row.offload_accuracy = tasks ? static_cast<double>(agree) / static_cast<double>(tasks) : 0.0;
      if (both > 0) {
        row.mse_p_ul = se[0] / static_cast<double>(both);
        row.mse_p_dl = se[1] / static_cast<double>(both);
        row.mse_f_ap = se[2] / static_cast<double>(both);
      }
      row.latency_ms = mean(latency);
      report.rows.push_back(row);
    }
  }
  return report;
}

void write_report_csv(std::ostream& out, const EvalReport& report) {
  out << "schema_version,method,n,instances,mean_utility,mean_gap_ga,mean_gap_oracle,"
         "offload_accuracy,mse_p_ul,mse_p_dl,mse_f_ap,latency_ms,feasible,violations,fallbacks\n";
  for (const auto& r : report.rows) {
    out << kReportSchemaVersion << ',' << r.method << ',' << r.n << ',' << r.instances << ','
        << fmt(r.mean_utility) << ',' << fmt(r.mean_gap_ga) << ',' << fmt(r.mean_gap_oracle) << ','
        << fmt(r.offload_accuracy) << ',' << fmt(r.mse_p_ul) << ',' << fmt(r.mse_p_dl) << ','
        << fmt(r.mse_f_ap) << ',' << fmt(r.latency_ms) << ',' << r.feasible << ','
        << r.violations << ',' << r.fallbacks << '\n';
  }
}

std::vector<MethodRow> read_report_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("schema_version,", 0) != 0) {
    throw ConfigError("report has no header");
  }
  auto opt = [](const std::string& s) -> std::optional<double> {
    if (s == "NA") return std::nullopt;
    return std::stod(s);
  };
  std::vector<MethodRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 15) throw ConfigError("report row has " + std::to_string(f.size()) + " fields");
    if (std::stoi(f[0]) != kReportSchemaVersion) throw ConfigError("unsupported report schema " + f[0]);
    MethodRow r;
    r.method = f[1];
    r.n = std::stoul(f[2]);
    r.instances = std::stoul(f[3]);
    r.mean_utility = std::stod(f[4]);
    r.mean_gap_ga = std::stod(f[5]);
    r.mean_gap_oracle = opt(f[6]);
    r.offload_accuracy = std::stod(f[7]);
    r.mse_p_ul = opt(f[8]);
    r.mse_p_dl = opt(f[9]);
    r.mse_f_ap = opt(f[10]);
    r.latency_ms = std::stod(f[11]);
    r.feasible = std::stoul(f[12]);
    r.violations = std::stoul(f[13]);
    r.fallbacks = std::stoul(f[14]);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<std::pair<std::size_t, double>> sac_k_sweep(const std::vector<LabeledInstance>& records,
                                                        const SystemParams& params,
                                                        const SchedulerContext& ctx,
                                                        const std::vector<std::size_t>& ks,
                                                        std::size_t workers) {
  if (!ctx.tsnet) throw std::invalid_argument("k sweep needs trained networks");
  std::vector<std::pair<std::size_t, double>> out;
  for (std::size_t k : ks) {
    SacConfig sac = ctx.sac;
    sac.k = k;
    std::vector<double> u(records.size());
    parallel_for(records.size(), workers, [&](std::size_t i) {
      u[i] = tsnet_sac_schedule(*ctx.tsnet, records[i].instance, params, sac, ctx.extender).utility;
    });
    out.emplace_back(k, mean(u));
  }
  return out;
}

std::vector<fs::path> write_plot_files(const fs::path& dir,
                                       const std::vector<LabeledInstance>& records,
                                       const EvalReport& report, const SystemParams& params,
                                       const SchedulerContext& ctx, const EvaluationConfig& eval,
                                       std::size_t workers) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  std::vector<fs::path> written;
  auto open = [&](const std::string& name) {
    const fs::path p = dir / name;
    std::ofstream f(p);
    if (!f) throw IoError("cannot write " + p.string());
    written.push_back(p);
    return f;
  };

  std::map<std::string, std::vector<const MethodRow*>> per_method;
  for (const auto& r : report.rows) per_method[r.method].push_back(&r);
  for (const auto& [method, rows] : per_method) {
    auto u = open("utility_vs_n." + method + ".dat");
    u << "# n mean_utility\n";
    auto a = open("accuracy_vs_n." + method + ".dat");
    a << "# n offload_accuracy\n";
    for (const MethodRow* r : rows) {
      u << r->n << ' ' << fmt(r->mean_utility) << '\n';
      a << r->n << ' ' << fmt(r->offload_accuracy) << '\n';
    }
  }

  if (ctx.tsnet) {
    std::vector<std::size_t> ks;
    for (std::size_t k : eval.k_sweep) {
      if (k <= ctx.extender.n_bar) ks.push_back(k);
    }
    const auto sweep = sac_k_sweep(records, params, ctx, ks, workers);
    auto f = open("sac_gain_vs_k.dat");
    f << "# k mean_utility relative_gain_vs_k1\n";
    const double base = sweep.empty() ? 0.0 : sweep.front().second;
    for (const auto& [k, u] : sweep) {
      f << k << ' ' << fmt(u) << ' ' << fmt(base > 0.0 ? (base - u) / base : 0.0) << '\n';
    }

    auto t = open("threshold_sweep.dat");
    t << "# sigma offload_accuracy mean_utility\n";
    for (double sigma : eval.sigma_sweep) {
      SacConfig sac = ctx.sac;
      sac.sigma = sigma;
      std::vector<double> u(records.size());
      std::vector<double> acc(records.size());
      parallel_for(records.size(), workers, [&](std::size_t i) {
        const SacResult r = tsnet_sac_schedule(*ctx.tsnet, records[i].instance, params, sac, ctx.extender);
        u[i] = r.utility;
        std::size_t agree = 0;
        for (std::size_t j = 0; j < r.schedule.size(); ++j) {
          agree += r.schedule.m[j] == records[i].schedule.m[j] ? 1 : 0;
        }
        acc[i] = r.schedule.size() ? static_cast<double>(agree) / static_cast<double>(r.schedule.size()) : 1.0;
      });
      t << fmt(sigma) << ' ' << fmt(mean(acc)) << ' ' << fmt(mean(u)) << '\n';
    }
  }
  return written;
}

// -------------------------------------------------------------------- solve

SolveOutput run_solve(const Instance& instance, Method method, const SystemParams& params,
                      const SchedulerContext& ctx) {
  instance.validate(params);
  const auto start = std::chrono::steady_clock::now();
  MethodResult r = run_method(method, instance, params, ctx);
  const auto stop = std::chrono::steady_clock::now();
  SolveOutput out;
  out.latency_ms = std::chrono::duration<double, std::milli>(stop - start).count();
  out.fallback = r.fallback;
  out.cost = evaluate(instance, r.schedule, params);
  out.schedule = std::move(r.schedule);
  return out;
}

}  // namespace mecsched
