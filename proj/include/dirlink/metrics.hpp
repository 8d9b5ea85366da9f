#pragma once

#include <optional>
#include <span>
#include <vector>

namespace dirlink {

/// ROC-AUC as the Mann-Whitney statistic with midranks: ties count one half.
/// Throws InputError unless both classes are present and scores are finite.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

/// Average precision Σ (R_k - R_{k-1}) P_k over descending score thresholds;
/// tied scores enter as one block. Throws InputError without positives.
double auprc(std::span<const double> scores, std::span<const int> labels);

struct TaskMetrics {
  double roc_auc{0.0};
  double auprc{0.0};
};

TaskMetrics task_metrics(std::span<const double> scores, std::span<const int> labels);

struct ValidationMetrics {
  std::optional<TaskMetrics> general;
  std::optional<TaskMetrics> directional;
  std::optional<TaskMetrics> bidirectional;
};

/// Baseline: ROC-AUC + AUPRC on General only. Other strategies: the sum over
/// all three sub-tasks. Throws InputError when a required task is missing.
double early_stop_score(const ValidationMetrics& m, bool baseline);

}  // namespace dirlink
