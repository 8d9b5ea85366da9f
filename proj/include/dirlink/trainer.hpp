#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dirlink/metrics.hpp"
#include "dirlink/models.hpp"
#include "dirlink/split.hpp"
#include "dirlink/strategies.hpp"

namespace dirlink {

/// Non-finite loss or gradient during training.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AdamOptions {
  double lr{0.01};
  double beta1{0.9};
  double beta2{0.999};
  double eps{1e-8};
  double weight_decay{0.0};
};

class Adam {
 public:
  Adam(std::size_t size, AdamOptions opts);

  /// Bias-corrected Adam update of `theta` in place. Throws DivergenceError on
  /// a non-finite gradient entry, leaving theta and the moments untouched.
  void step(std::span<double> theta, std::span<const double> grad);

  /// 1 / (sqrt(v_hat) + eps) from the current second moment; ones before the first step.
  [[nodiscard]] std::vector<double> preconditioner() const;

  [[nodiscard]] std::size_t steps() const { return steps_; }
  [[nodiscard]] const AdamOptions& options() const { return opts_; }
  [[nodiscard]] std::span<const double> first_moment() const { return m_; }
  [[nodiscard]] std::span<const double> second_moment() const { return v_; }

 private:
  AdamOptions opts_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t steps_{0};
};

/// Tracks the best validation score; stops after more than `patience`
/// consecutive epochs without a strict improvement.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  /// Returns true when `score` is a new best.
  bool observe(std::size_t epoch, double score);

  [[nodiscard]] bool should_stop() const { return stale_ > patience_; }
  [[nodiscard]] std::size_t best_epoch() const { return best_epoch_; }
  [[nodiscard]] double best_score() const { return best_score_; }

 private:
  std::size_t patience_;
  std::size_t best_epoch_{0};
  double best_score_{-std::numeric_limits<double>::infinity()};
  std::size_t stale_{0};
};

struct TrainOptions {
  Strategy strategy{Strategy::Baseline};
  std::size_t epochs{1000};
  std::size_t patience{200};
  AdamOptions adam;
  // General-task negatives: negative_ratio x |train edges| absent pairs,
  // redrawn every epoch unless resample_negatives is off.
  std::size_t negative_ratio{1};
  bool resample_negatives{true};
  bool full_negatives{false};  // every absent pair, for small graphs
  bool self_loop_supervision{true};
  bool mc_include_reverses{true};
  MgdaSolver mgda_solver{MgdaSolver::Exact};
  bool mgda_preconditioned{false};
  std::optional<ScalarizationWeights> fixed_alpha;
};

struct EpochRecord {
  std::size_t epoch{0};
  std::vector<double> train_losses;  // L_G, L_D, L_B (or L_MC)
  std::vector<double> weights;       // α, γ or {1}
  double direction_norm{0.0};
  std::array<TaskMetrics, 3> val{};  // General, Directional, Bidirectional
  std::array<double, 3> val_losses{};
  double val_score{0.0};
};

struct TrainResult {
  std::vector<double> best_params;
  std::size_t best_epoch{0};
  double best_score{0.0};
  std::vector<EpochRecord> trace;
  std::string stop_reason;
};

/*
 * Epoch 0 scores the initial parameters; every later epoch takes one
 * full-batch step and re-scores the validation sets. Training stops once more
 * than `patience` consecutive epochs fail to improve the early-stopping score.
 * On return the model holds the best-validation parameters.
 */
TrainResult train_run(Model& model, const SplitBundle& bundle, const TrainOptions& opts, const Rng& rng);

/// Validation metrics and losses for the three sub-tasks.
EpochRecord validation_record(const Model& model, const Encoding& enc, const SplitBundle& bundle);

/// Test metrics for General, Directional and Bidirectional, dropout disabled.
std::array<TaskMetrics, 3> evaluate(const Model& model, const SplitBundle& bundle);

/// CSV header and rows for a trace.
void write_trace_csv(const std::vector<EpochRecord>& trace, Strategy strategy, const std::string& path);

/// The per-epoch supervision used by the binary-loss strategies.
TaskSupervision binary_supervision(const SplitBundle& bundle, std::vector<Edge> general_negatives,
                                   bool self_loop_positives);

}  // namespace dirlink
