#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dirlink/experiment.hpp"
#include "dirlink/gradcheck.hpp"

using namespace dirlink;
namespace fs = std::filesystem;

namespace {

void print_result(const ExperimentResult& r) {
  std::cout << r.dataset << " / " << to_string(r.config.model) << " / " << to_string(r.config.strategy)
            << (r.partial ? "  [PARTIAL]" : "") << '\n';
  for (const auto& s : r.seeds) std::cout << "  seed " << s.seed << ": " << s.status << ", best epoch " << s.best_epoch << '\n';
  std::cout << std::fixed << std::setprecision(1);
  for (std::size_t t = 0; t < 3; ++t) {
    std::cout << "  " << std::left << std::setw(14) << kTaskNames[t];
    for (std::size_t m = 0; m < 2; ++m) {
      const auto& s = r.summary[t][m];
      std::cout << "  " << kMetricNames[m] << ' ' << 100.0 * s.mean << " ± " << 100.0 * s.std;
    }
    std::cout << '\n';
  }
}

MgdaSolver parse_solver(const std::string& s) {
  if (s == "exact") return MgdaSolver::Exact;
  if (s == "frank-wolfe") return MgdaSolver::FrankWolfe;
  throw ConfigError("--mgda-solver must be exact or frank-wolfe");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Directed link prediction with graph autoencoders"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Train and evaluate over several seeds");
  std::string config_path, dataset, model, strategy, out_dir, solver;
  std::size_t n_seeds = 0, epochs = 0, patience = 0, hidden = 0, output = 0, neg_ratio = 0, jobs = 0;
  std::vector<std::uint64_t> seed_list;
  double lr = 0.0;
  bool deterministic = false, full_negatives = false, preconditioned = false, no_reverses = false;
  run->add_option("--config", config_path, "JSON config; flags override it")->check(CLI::ExistingFile);
  run->add_option("--dataset", dataset, "Dataset name (resolved under $DIRLINK_DATA) or edge-list path");
  run->add_option("--model", model, "gae, gravity, st, mlp, digae");
  run->add_option("--strategy", strategy, "baseline, mc, s, mo");
  run->add_option("--seeds", n_seeds, "Number of seeds (0..n-1)");
  run->add_option("--seed-list", seed_list, "Explicit seeds")->delimiter(',');
  run->add_option("--epochs", epochs);
  run->add_option("--patience", patience);
  run->add_option("--lr", lr, "Learning rate (default: per-dataset table)");
  run->add_option("--hidden", hidden, "Hidden width");
  run->add_option("--embedding", output, "Embedding width L");
  run->add_option("--negative-ratio", neg_ratio, "General negatives per training edge");
  run->add_option("--mgda-solver", solver, "exact or frank-wolfe");
  run->add_flag("--mgda-preconditioned", preconditioned, "Solve MGDA on Adam-preconditioned gradients");
  run->add_flag("--no-mc-reverses", no_reverses, "Drop reverse pairs from MC supervision");
  run->add_option("--jobs", jobs, "Parallel seed workers (0: auto)");
  run->add_option("--out", out_dir, "Output directory");
  run->add_flag("--deterministic", deterministic, "Run seeds sequentially");
  run->add_flag("--full-negatives", full_negatives, "Use every absent pair as a General negative");

  // split
  auto* split = app.add_subcommand("split", "Build and save one split");
  std::string split_dataset, split_out;
  std::uint64_t split_seed = 0;
  split->add_option("--dataset", split_dataset)->required();
  split->add_option("--seed", split_seed);
  split->add_option("--out", split_out)->required();

  // validate-split
  auto* validate = app.add_subcommand("validate-split", "Check a saved split against its graph");
  std::string val_dataset, val_dir;
  validate->add_option("--dataset", val_dataset)->required();
  validate->add_option("--split", val_dir, "Directory written by `split`")->required()->check(CLI::ExistingDirectory);

  // gradcheck
  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of every model/strategy pair");
  std::size_t gc_nodes = 20;
  std::uint64_t gc_seed = 1;
  std::string gc_model, gc_strategy;
  grad->add_option("--nodes", gc_nodes);
  grad->add_option("--seed", gc_seed);
  grad->add_option("--model", gc_model, "Restrict to one model");
  grad->add_option("--strategy", gc_strategy, "Restrict to one strategy");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      ExperimentConfig cfg;
      if (!config_path.empty()) {
        std::ifstream in(config_path);
        apply_json(nlohmann::json::parse(in), cfg);
      }
      if (!dataset.empty()) cfg.dataset = dataset;
      if (!model.empty()) cfg.model = model_kind_from_string(model);
      if (!strategy.empty()) cfg.strategy = strategy_from_string(strategy);
      if (run->count("--seeds")) {
        cfg.seeds.clear();
        for (std::size_t i = 0; i < n_seeds; ++i) cfg.seeds.push_back(i);
      }
      if (!seed_list.empty()) cfg.seeds = seed_list;
      if (run->count("--epochs")) cfg.epochs = epochs;
      if (run->count("--patience")) cfg.patience = patience;
      if (run->count("--lr")) cfg.lr = lr;
      if (run->count("--hidden")) cfg.hidden_dim = hidden;
      if (run->count("--embedding")) cfg.output_dim = output;
      if (run->count("--negative-ratio")) cfg.negative_ratio = neg_ratio;
      if (!solver.empty()) cfg.mgda_solver = parse_solver(solver);
      if (preconditioned) cfg.mgda_preconditioned = true;
      if (no_reverses) cfg.mc_include_reverses = false;
      if (run->count("--jobs")) cfg.jobs = jobs;
      if (!out_dir.empty()) cfg.out_dir = out_dir;
      if (deterministic) cfg.deterministic = true;
      if (full_negatives) cfg.full_negatives = true;
      if (cfg.dataset.empty()) throw ConfigError("--dataset is required");
      cfg.validate();
      const auto result = run_experiment(cfg);
      print_result(result);
      return result.partial ? 3 : 0;
    }

    if (split->parsed()) {
      const auto loaded = load_dataset(split_dataset);
      const auto bundle = build_split(loaded.graph, SplitFractions{}, split_seed);
      save_split(bundle, split_out);
      write_id_mapping(loaded, fs::path(split_out) / "id_mapping.csv");
      const auto report = validate_split(bundle, loaded.graph);
      std::cout << "split written to " << split_out << (report.ok() ? " (valid)" : " (INVALID)") << '\n';
      return report.ok() ? 0 : 1;
    }

    if (validate->parsed()) {
      const auto loaded = load_dataset(val_dataset);
      const auto bundle = load_split(val_dir);
      const auto report = validate_split(bundle, loaded.graph);
      for (const auto& c : report.checks) {
        std::cout << (c.passed ? "ok   " : "FAIL ") << c.name;
        if (!c.detail.empty()) std::cout << "  " << c.detail;
        std::cout << '\n';
      }
      return report.ok() ? 0 : 1;
    }

    if (grad->parsed()) {
      Rng rng(gc_seed);
      const auto g = random_digraph(gc_nodes, 2 * gc_nodes, gc_nodes / 2, rng);
      bool all = true;
      for (auto kind : {ModelKind::Gae, ModelKind::Gravity, ModelKind::SourceTarget, ModelKind::Mlp, ModelKind::Digae}) {
        if (!gc_model.empty() && model_kind_from_string(gc_model) != kind) continue;
        for (auto s : {Strategy::Baseline, Strategy::MultiClass, Strategy::Scalarization, Strategy::MultiObjective}) {
          if (!gc_strategy.empty() && strategy_from_string(gc_strategy) != s) continue;
          for (const auto& r : gradcheck(kind, s, g, gc_seed)) {
            all = all && r.report.passed;
            std::printf("%-4s %-8s %-4s %-5s max rel err %.3e over %zu coords (worst #%zu: %.6e vs %.6e)\n", r.report.passed ? "ok" : "FAIL",
                        std::string(to_string(kind)).c_str(), std::string(to_string(s)).c_str(), r.loss.c_str(),
                        r.report.max_rel_error, r.report.checked, r.report.worst_index, r.report.worst_analytic, r.report.worst_numeric);
          }
        }
      }
      return all ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "dirlink: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
