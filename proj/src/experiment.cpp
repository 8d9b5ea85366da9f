#include "dirlink/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

namespace dirlink {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

// Writes to a sibling temporary file, then renames over the target.
template <typename Fn>
void write_atomically(const fs::path& path, Fn&& body) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.precision(17);
    body(out);
  }
  fs::rename(tmp, path);
}

}  // namespace

void ExperimentConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (patience < 1) throw ConfigError("patience must be at least 1");
  if (lr && !(*lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (negative_ratio < 1) throw ConfigError("negative ratio must be at least 1");
  fractions.validate();
  model_config().validate();
}

double ExperimentConfig::learning_rate() const {
  return lr ? *lr : default_learning_rate(dataset_name(dataset), strategy, model);
}

ModelConfig ExperimentConfig::model_config() const {
  ModelConfig mc;
  mc.kind = model;
  mc.hidden_dim = hidden_dim;
  mc.output_dim = output_dim;
  mc.initial_lambda = initial_lambda;
  mc.dropout = dropout;
  mc.head = model == ModelKind::Mlp && strategy == Strategy::MultiClass ? DecoderHead::MultiClass
                                                                         : DecoderHead::Binary;
  return mc;
}

TrainOptions ExperimentConfig::train_options() const {
  TrainOptions o;
  o.strategy = strategy;
  o.epochs = epochs;
  o.patience = patience;
  o.adam.lr = learning_rate();
  o.negative_ratio = negative_ratio;
  o.full_negatives = full_negatives;
  o.self_loop_supervision = self_loop_supervision;
  o.mc_include_reverses = mc_include_reverses;
  o.mgda_solver = mgda_solver;
  o.mgda_preconditioned = mgda_preconditioned;
  return o;
}

void apply_json(const json& j, ExperimentConfig& cfg) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  try {
    if (j.contains("dataset")) cfg.dataset = j.at("dataset").get<std::string>();
    if (j.contains("model")) cfg.model = model_kind_from_string(j.at("model").get<std::string>());
    if (j.contains("strategy")) cfg.strategy = strategy_from_string(j.at("strategy").get<std::string>());
    if (j.contains("seeds")) {
      const auto& s = j.at("seeds");
      if (s.is_number_integer()) {
        const auto n = s.get<std::int64_t>();
        if (n < 1) throw ConfigError("seeds must be at least 1");
        cfg.seeds.clear();
        for (std::int64_t i = 0; i < n; ++i) cfg.seeds.push_back(static_cast<std::uint64_t>(i));
      } else {
        cfg.seeds = s.get<std::vector<std::uint64_t>>();
      }
    }
    if (j.contains("epochs")) cfg.epochs = j.at("epochs").get<std::size_t>();
    if (j.contains("patience")) cfg.patience = j.at("patience").get<std::size_t>();
    if (j.contains("lr") && !j.at("lr").is_null()) cfg.lr = j.at("lr").get<double>();
    if (j.contains("hidden_dim")) cfg.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    if (j.contains("output_dim")) cfg.output_dim = j.at("output_dim").get<std::size_t>();
    if (j.contains("fractions")) {
      const auto& f = j.at("fractions");
      cfg.fractions.uni_test = f.value("uni_test", cfg.fractions.uni_test);
      cfg.fractions.uni_val = f.value("uni_val", cfg.fractions.uni_val);
      cfg.fractions.bi_test = f.value("bi_test", cfg.fractions.bi_test);
      cfg.fractions.bi_val = f.value("bi_val", cfg.fractions.bi_val);
    }
    cfg.negative_ratio = j.value("negative_ratio", cfg.negative_ratio);
    cfg.full_negatives = j.value("full_negatives", cfg.full_negatives);
    cfg.deterministic = j.value("deterministic", cfg.deterministic);
    cfg.mc_include_reverses = j.value("mc_include_reverses", cfg.mc_include_reverses);
    cfg.self_loop_supervision = j.value("self_loop_supervision", cfg.self_loop_supervision);
    if (j.contains("mgda_solver")) {
      const auto s = j.at("mgda_solver").get<std::string>();
      if (s == "exact") {
        cfg.mgda_solver = MgdaSolver::Exact;
      } else if (s == "frank-wolfe") {
        cfg.mgda_solver = MgdaSolver::FrankWolfe;
      } else {
        throw ConfigError("mgda_solver must be 'exact' or 'frank-wolfe'");
      }
    }
    cfg.mgda_preconditioned = j.value("mgda_preconditioned", cfg.mgda_preconditioned);
    cfg.initial_lambda = j.value("initial_lambda", cfg.initial_lambda);
    cfg.dropout = j.value("dropout", cfg.dropout);
    cfg.jobs = j.value("jobs", cfg.jobs);
    if (j.contains("out")) cfg.out_dir = j.at("out").get<std::string>();
    cfg.write_splits = j.value("write_splits", cfg.write_splits);
    cfg.write_traces = j.value("write_traces", cfg.write_traces);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

json to_json(const ExperimentConfig& cfg) {
  json j;
  j["dataset"] = cfg.dataset;
  j["model"] = std::string(to_string(cfg.model));
  j["strategy"] = std::string(to_string(cfg.strategy));
  j["seeds"] = cfg.seeds;
  j["epochs"] = cfg.epochs;
  j["patience"] = cfg.patience;
  j["lr"] = cfg.learning_rate();
  j["hidden_dim"] = cfg.hidden_dim;
  j["output_dim"] = cfg.output_dim;
  j["fractions"] = {{"uni_test", cfg.fractions.uni_test},
                    {"uni_val", cfg.fractions.uni_val},
                    {"bi_test", cfg.fractions.bi_test},
                    {"bi_val", cfg.fractions.bi_val}};
  j["negative_ratio"] = cfg.negative_ratio;
  j["full_negatives"] = cfg.full_negatives;
  j["deterministic"] = cfg.deterministic;
  j["mc_include_reverses"] = cfg.mc_include_reverses;
  j["self_loop_supervision"] = cfg.self_loop_supervision;
  j["mgda_solver"] = cfg.mgda_solver == MgdaSolver::Exact ? "exact" : "frank-wolfe";
  j["mgda_preconditioned"] = cfg.mgda_preconditioned;
  j["initial_lambda"] = cfg.initial_lambda;
  j["dropout"] = cfg.dropout;
  return j;
}

double default_learning_rate(const std::string& dataset, Strategy strategy, ModelKind model) {
  const std::string name = lower(dataset);
  const bool mc = strategy == Strategy::MultiClass;
  if (model == ModelKind::Gae) return strategy == Strategy::Baseline ? 0.05 : 0.01;

  // {gravity, st, mlp, digae} for Baseline/MO/S, then for MC.
  using Row = std::array<double, 4>;
  static const std::map<std::string, std::pair<Row, Row>> table{
      {"cora", {{0.01, 0.01, 0.002, 0.02}, {0.01, 0.01, 0.001, 0.02}}},
      {"citeseer", {{0.05, 0.02, 0.002, 0.02}, {0.01, 0.01, 0.001, 0.02}}},
      {"google", {{0.05, 0.01, 0.002, 0.02}, {0.01, 0.01, 0.002, 0.002}}},
  };
  const auto it = table.find(name);
  if (it == table.end()) return 0.01;
  const Row& row = mc ? it->second.second : it->second.first;
  switch (model) {
    case ModelKind::Gravity: return row[0];
    case ModelKind::SourceTarget: return row[1];
    case ModelKind::Mlp: return row[2];
    case ModelKind::Digae: return row[3];
    case ModelKind::Gae: break;
  }
  return 0.01;
}

std::optional<DatasetStats> expected_stats(const std::string& name) {
  const std::string n = lower(name);
  if (n == "cora") return DatasetStats{2708, 5429};
  if (n == "citeseer") return DatasetStats{3327, 4732};
  if (n == "google") return DatasetStats{15763, 171206};
  return std::nullopt;
}

std::string dataset_name(const std::string& name_or_path) {
  if (name_or_path.find('/') == std::string::npos && name_or_path.find('.') == std::string::npos) {
    return lower(name_or_path);
  }
  return lower(fs::path(name_or_path).stem().string());
}

std::optional<fs::path> find_dataset(const std::string& name_or_path, const fs::path& root) {
  if (name_or_path.empty()) return std::nullopt;
  if (fs::is_regular_file(name_or_path)) return fs::path(name_or_path);
  fs::path base = root;
  if (base.empty()) {
    const char* env = std::getenv("DIRLINK_DATA");
    if (env == nullptr || *env == '\0') return std::nullopt;
    base = env;
  }
  const std::string name = lower(name_or_path);
  for (const fs::path& dir : {base, base / name}) {
    for (const char* ext : {".edges", ".cites", ".txt", ".edgelist"}) {
      const fs::path candidate = dir / (name + ext);
      if (fs::is_regular_file(candidate)) return candidate;
    }
  }
  return std::nullopt;
}

LoadedGraph load_dataset(const std::string& name_or_path, const fs::path& root, bool check_stats) {
  const auto path = find_dataset(name_or_path, root);
  if (!path) {
    throw std::runtime_error("dataset '" + name_or_path +
                             "' not found (pass a file path or set DIRLINK_DATA to the dataset directory)");
  }
  fs::path nodes = *path;
  nodes.replace_extension(".nodes");
  auto loaded = read_edge_list_file(*path, fs::is_regular_file(nodes) ? nodes : fs::path{});
  if (check_stats) {
    if (const auto stats = expected_stats(dataset_name(name_or_path))) {
      const auto& g = loaded.graph;
      if (g.num_nodes() != stats->nodes || g.num_edges() != stats->edges) {
        throw ConfigError("dataset " + path->string() + " has N=" + std::to_string(g.num_nodes()) +
                          ", |E|=" + std::to_string(g.num_edges()) + "; expected N=" +
                          std::to_string(stats->nodes) + ", |E|=" + std::to_string(stats->edges));
      }
    }
  }
  return loaded;
}

MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary s;
  s.n = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

SeedResult run_seed(const DirectedGraph& graph, const ExperimentConfig& cfg, std::uint64_t seed,
                    const fs::path& seed_dir) {
  SeedResult out;
  out.seed = seed;
  try {
    const Rng master(seed);
    const auto bundle = build_split(graph, cfg.fractions, master.fork("split").seed());
    if (!seed_dir.empty()) {
      fs::create_directories(seed_dir);
      if (cfg.write_splits) save_split(bundle, seed_dir / "split");
    }
    Model model(cfg.model_config(), graph.num_nodes());
    Rng init = master.fork("init");
    model.initialize(init);
    const auto run = train_run(model, bundle, cfg.train_options(), master.fork("train"));
    if (!seed_dir.empty() && cfg.write_traces) {
      write_trace_csv(run.trace, cfg.strategy, (seed_dir / "trace.csv").string());
    }
    out.best_epoch = run.best_epoch;
    out.epochs_run = run.trace.empty() ? 0 : run.trace.back().epoch;
    if (run.stop_reason.rfind("diverged", 0) == 0) {
      out.status = run.stop_reason;
      return out;
    }
    out.test = evaluate(model, bundle);
    out.ok = true;
    out.status = "ok (" + run.stop_reason + ")";
  } catch (const std::exception& e) {
    out.status = std::string("failed: ") + e.what();
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  const auto loaded = load_dataset(cfg.dataset);
  return run_experiment(loaded.graph, dataset_name(cfg.dataset), cfg);
}

ExperimentResult run_experiment(const DirectedGraph& graph, const std::string& dataset, const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentResult result;
  result.dataset = dataset;
  result.config = cfg;
  result.seeds.resize(cfg.seeds.size());

  auto seed_dir = [&](std::size_t i) {
    return cfg.out_dir.empty() ? fs::path{} : cfg.out_dir / ("seed_" + std::to_string(cfg.seeds[i]));
  };
  std::size_t jobs = cfg.deterministic ? 1 : cfg.jobs;
  if (jobs == 0) jobs = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  jobs = std::min(jobs, cfg.seeds.size());
  if (jobs <= 1) {
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) result.seeds[i] = run_seed(graph, cfg, cfg.seeds[i], seed_dir(i));
  } else {
    // Runs share nothing but the read-only graph; each worker claims the next seed.
    std::mutex mu;
    std::size_t next = 0;
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (;;) {
          std::size_t i;
          {
            std::lock_guard lock(mu);
            if (next >= cfg.seeds.size()) return;
            i = next++;
          }
          result.seeds[i] = run_seed(graph, cfg, cfg.seeds[i], seed_dir(i));
        }
      });
    }
    for (auto& t : workers) t.join();
  }

  for (std::size_t t = 0; t < 3; ++t) {
    for (std::size_t m = 0; m < 2; ++m) {
      std::vector<double> values;
      for (const auto& s : result.seeds) {
        if (s.ok) values.push_back(m == 0 ? s.test[t].roc_auc : s.test[t].auprc);
      }
      result.summary[t][m] = summarize(values);
    }
  }
  result.partial = std::any_of(result.seeds.begin(), result.seeds.end(), [](const SeedResult& s) { return !s.ok; });
  if (!cfg.out_dir.empty()) write_results(result, cfg.out_dir);
  return result;
}

void write_results(const ExperimentResult& result, const fs::path& dir) {
  fs::create_directories(dir);
  const std::string model(to_string(result.config.model));
  const std::string strategy(to_string(result.config.strategy));

  write_atomically(dir / "results.csv", [&](std::ostream& out) {
    out << "dataset,model,strategy,task,metric,mean,std,n_seeds\n";
    for (std::size_t t = 0; t < 3; ++t) {
      for (std::size_t m = 0; m < 2; ++m) {
        const auto& s = result.summary[t][m];
        out << result.dataset << ',' << model << ',' << strategy << ',' << kTaskNames[t] << ',' << kMetricNames[m]
            << ',' << s.mean << ',' << s.std << ',' << s.n << '\n';
      }
    }
  });

  write_atomically(dir / "per_seed.csv", [&](std::ostream& out) {
    out << "seed,status,best_epoch,epochs_run";
    for (const char* task : kTaskNames) {
      for (const char* metric : kMetricNames) out << ',' << task << '_' << metric;
    }
    out << '\n';
    for (const auto& s : result.seeds) {
      std::string status = s.status;
      std::replace(status.begin(), status.end(), ',', ';');
      out << s.seed << ',' << '"' << status << '"' << ',' << s.best_epoch << ',' << s.epochs_run;
      for (const auto& m : s.test) out << ',' << m.roc_auc << ',' << m.auprc;
      out << '\n';
    }
  });

  json j;
  j["dataset"] = result.dataset;
  j["config"] = to_json(result.config);
  j["partial"] = result.partial;
  json summary = json::object();
  for (std::size_t t = 0; t < 3; ++t) {
    for (std::size_t m = 0; m < 2; ++m) {
      const auto& s = result.summary[t][m];
      summary[kTaskNames[t]][kMetricNames[m]] = {{"mean", s.mean}, {"std", s.std}, {"n", s.n}};
    }
  }
  j["summary"] = summary;
  json seeds = json::array();
  for (const auto& s : result.seeds) {
    json js{{"seed", s.seed}, {"ok", s.ok}, {"status", s.status}, {"best_epoch", s.best_epoch},
            {"epochs_run", s.epochs_run}};
    for (std::size_t t = 0; t < 3; ++t) {
      js["test"][kTaskNames[t]] = {{"roc_auc", s.test[t].roc_auc}, {"auprc", s.test[t].auprc}};
    }
    seeds.push_back(js);
  }
  j["seeds"] = seeds;
  write_atomically(dir / "results.json", [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

}  // namespace dirlink
