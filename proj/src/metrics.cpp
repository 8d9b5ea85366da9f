#include "dirlink/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dirlink/graph.hpp"

namespace dirlink {

namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw InputError("metric: scores and labels differ in length");
  for (double s : scores) {
    if (!std::isfinite(s)) throw InputError("metric: non-finite score");
  }
  for (int y : labels) {
    if (y != 0 && y != 1) throw InputError("metric: labels must be 0 or 1");
  }
}

std::vector<std::size_t> order_by_score(std::span<const double> scores, bool descending) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return descending ? scores[a] > scores[b] : scores[a] < scores[b];
  });
  return idx;
}

}  // namespace

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels);
  const auto n_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw InputError("roc_auc needs both positive and negative samples");

  // Twice the positive rank sum, using midranks (kept integral by doubling).
  const auto idx = order_by_score(scores, false);
  double rank_sum_x2 = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    std::size_t pos_in_block = 0;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      pos_in_block += static_cast<std::size_t>(labels[idx[j]]);
      ++j;
    }
    // Ranks i+1..j share the midrank (i + 1 + j) / 2.
    rank_sum_x2 += static_cast<double>(pos_in_block) * static_cast<double>(i + 1 + j);
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  const double u = rank_sum_x2 / 2.0 - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(n_neg));
}

double auprc(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels);
  const auto n_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  if (n_pos == 0) throw InputError("auprc needs at least one positive sample");

  const auto idx = order_by_score(scores, true);
  std::size_t tp = 0, fp = 0;
  double ap = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t tp_block = 0;
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      if (labels[idx[j]] == 1) {
        ++tp_block;
      } else {
        ++fp;
      }
      ++j;
    }
    tp += tp_block;
    if (tp_block > 0) {
      const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
      ap += static_cast<double>(tp_block) / static_cast<double>(n_pos) * precision;
    }
    i = j;
  }
  return ap;
}

TaskMetrics task_metrics(std::span<const double> scores, std::span<const int> labels) {
  return {roc_auc(scores, labels), auprc(scores, labels)};
}

double early_stop_score(const ValidationMetrics& m, bool baseline) {
  auto sum = [](const std::optional<TaskMetrics>& t, const char* name) {
    if (!t) throw InputError(std::string("early_stop_score: missing ") + name + " validation metrics");
    return t->roc_auc + t->auprc;
  };
  if (baseline) return sum(m.general, "General");
  return sum(m.general, "General") + sum(m.directional, "Directional") + sum(m.bidirectional, "Bidirectional");
}

}  // namespace dirlink
