#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dirlink/edge_list.hpp"
#include "dirlink/trainer.hpp"

namespace dirlink {

struct ExperimentConfig {
  std::string dataset;  // known name (cora, citeseer, google) or a file path
  ModelKind model{ModelKind::Gravity};
  Strategy strategy{Strategy::Baseline};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::size_t epochs{1000};
  std::size_t patience{200};
  std::optional<double> lr;  // unset: per-dataset default table
  std::size_t hidden_dim{64};
  std::size_t output_dim{32};
  SplitFractions fractions;
  std::size_t negative_ratio{1};
  bool full_negatives{false};
  bool deterministic{false};  // run seeds one at a time
  bool mc_include_reverses{true};
  bool self_loop_supervision{true};
  MgdaSolver mgda_solver{MgdaSolver::Exact};
  bool mgda_preconditioned{false};
  double initial_lambda{1.0};
  double dropout{0.5};
  std::size_t jobs{0};  // 0: one thread per seed up to hardware concurrency
  std::filesystem::path out_dir;
  bool write_splits{true};
  bool write_traces{true};

  /// Throws ConfigError on epochs/patience < 1, lr <= 0, no seeds, bad dims.
  void validate() const;
  [[nodiscard]] double learning_rate() const;
  [[nodiscard]] ModelConfig model_config() const;
  [[nodiscard]] TrainOptions train_options() const;
};

/// Keys missing from `j` keep the values already in `cfg`.
void apply_json(const nlohmann::json& j, ExperimentConfig& cfg);
nlohmann::json to_json(const ExperimentConfig& cfg);

/// Learning-rate table by dataset, strategy and model; 0.01 when unlisted.
double default_learning_rate(const std::string& dataset, Strategy strategy, ModelKind model);

struct DatasetStats {
  std::size_t nodes;
  std::size_t edges;
};

/// Published node and edge counts for the named datasets.
std::optional<DatasetStats> expected_stats(const std::string& name);

/// Canonical dataset name for a name or path ("cora" for ".../cora.cites").
std::string dataset_name(const std::string& name_or_path);

/*
 * Loads a dataset by path, or by name from `root` (default: $DIRLINK_DATA),
 * trying <name>.edges, <name>.cites, <name>.txt and the same inside <name>/.
 * A sibling <stem>.nodes file adds isolated nodes. Throws std::runtime_error
 * when nothing is found and ConfigError when known stats do not match.
 */
LoadedGraph load_dataset(const std::string& name_or_path, const std::filesystem::path& root = {},
                         bool check_stats = true);

/// Resolved dataset file, or nullopt.
std::optional<std::filesystem::path> find_dataset(const std::string& name_or_path,
                                                  const std::filesystem::path& root = {});

struct SeedResult {
  std::uint64_t seed{0};
  bool ok{false};
  std::string status;
  std::size_t best_epoch{0};
  std::size_t epochs_run{0};
  std::array<TaskMetrics, 3> test{};
};

struct MetricSummary {
  double mean{0.0};
  double std{0.0};  // sample standard deviation, n - 1 denominator
  std::size_t n{0};
};

struct ExperimentResult {
  std::string dataset;
  ExperimentConfig config;
  std::vector<SeedResult> seeds;
  std::array<std::array<MetricSummary, 2>, 3> summary{};  // [task][roc_auc, auprc]
  bool partial{false};
};

inline constexpr std::array<const char*, 3> kTaskNames{"general", "directional", "bidirectional"};
inline constexpr std::array<const char*, 2> kMetricNames{"roc_auc", "auprc"};

MetricSummary summarize(const std::vector<double>& values);

/// One seed: split, init, train, test. Never throws for a diverging run.
SeedResult run_seed(const DirectedGraph& graph, const ExperimentConfig& cfg, std::uint64_t seed,
                    const std::filesystem::path& seed_dir = {});

/// All seeds, aggregated; writes results.csv, results.json and per-seed files under out_dir.
ExperimentResult run_experiment(const ExperimentConfig& cfg);
ExperimentResult run_experiment(const DirectedGraph& graph, const std::string& dataset, const ExperimentConfig& cfg);

void write_results(const ExperimentResult& result, const std::filesystem::path& dir);

}  // namespace dirlink
