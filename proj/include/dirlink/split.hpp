#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dirlink/graph.hpp"
#include "dirlink/rng.hpp"

namespace dirlink {

struct SplitFractions {
  double uni_test{0.10};
  double uni_val{0.05};
  double bi_test{0.30};
  double bi_val{0.15};

  /// Throws ConfigError unless each fraction is in [0,1) and each pair sums below 1.
  void validate() const;
};

struct EvalSet {
  std::vector<Edge> positives;
  std::vector<Edge> negatives;

  [[nodiscard]] std::size_t size() const { return positives.size() + negatives.size(); }
  [[nodiscard]] bool empty() const { return positives.empty() && negatives.empty(); }
  /// Positives first, then negatives.
  [[nodiscard]] std::vector<Edge> pairs() const;
  [[nodiscard]] std::vector<int> labels() const;
};

struct TaskSets {
  EvalSet train;
  EvalSet val;
  EvalSet test;
};

struct LabeledPair {
  Edge pair;
  EdgeClass cls;

  friend bool operator==(const LabeledPair&, const LabeledPair&) = default;
};

struct Reservation {
  DirectedGraph train_graph;
  std::vector<Edge> uni_val;
  std::vector<Edge> uni_test;
  std::vector<Edge> bi_val;   // canonical (min, max) direction; reverse stays in train_graph
  std::vector<Edge> bi_test;
};

struct SplitBundle {
  DirectedGraph train_graph;  // no self-loops
  TaskSets general;
  TaskSets directional;
  TaskSets bidirectional;
  std::vector<LabeledPair> multiclass_train;
  // Edges unidirectional in the original graph that remain for training.
  std::vector<Edge> train_unidirectional;
  std::uint64_t seed{0};
  SplitFractions fractions;
};

/*
 * Reserves floor(f * |partition|) unidirectional edges and canonical
 * bidirectional directions for test and validation. Only the reserved
 * direction of a bidirectional pair is removed from the training graph.
 */
Reservation reserve_edges(const DirectedGraph& g, const SplitFractions& f, Rng& rng);

/// `count` distinct ordered pairs (u != v) absent from `g` and not in `exclude`.
std::vector<Edge> sample_absent_pairs(const DirectedGraph& g, std::size_t count, Rng& rng,
                                      const std::vector<Edge>& exclude = {});

/// Every ordered non-loop pair absent from `g`.
std::vector<Edge> enumerate_absent_pairs(const DirectedGraph& g);

struct ValTest {
  EvalSet val;
  EvalSet test;
};

/// General val/test: all reserved edges as positives; negatives absent from the
/// original graph, disjoint between val and test.
ValTest build_general_sets(const DirectedGraph& original, const Reservation& r, Rng& rng);

/// General train: every training edge as positive, `negative_ratio` times as
/// many pairs absent from the training graph as negatives.
EvalSet build_general_train(const DirectedGraph& train_graph, Rng& rng,
                            std::size_t negative_ratio = 1);

ValTest build_directional_sets(const Reservation& r);
EvalSet build_directional_train(const std::vector<Edge>& train_unidirectional);

/// Edges of the training graph whose reverse is absent from the original graph.
std::vector<Edge> remaining_unidirectional(const DirectedGraph& original,
                                           const DirectedGraph& train_graph);

/// Bidirectional train/val/test. Negatives are mutually disjoint draws of
/// reverses of `train_unidirectional`.
TaskSets build_bidirectional_sets(const DirectedGraph& original, const Reservation& r,
                                  const std::vector<Edge>& train_unidirectional, Rng& rng);

/// Class label of a supervision pair against the training graph; self-loops are NB.
EdgeClass supervision_class(const DirectedGraph& train_graph, Edge e);

std::vector<LabeledPair> build_multiclass_train(const DirectedGraph& train_graph,
                                                const EvalSet& general_train);

/// Full pipeline from one seed. `g` must be simple without self-loops.
SplitBundle build_split(const DirectedGraph& g, const SplitFractions& f, std::uint64_t seed);

struct SplitCheck {
  std::string name;
  bool passed{true};
  std::string detail;
};

struct SplitReport {
  std::vector<SplitCheck> checks;

  [[nodiscard]] bool ok() const;
  [[nodiscard]] std::vector<std::string> failures() const;
};

SplitReport validate_split(const SplitBundle& bundle, const DirectedGraph& original);

/// Directory of `u,v,label` CSVs plus manifest.json.
void save_split(const SplitBundle& bundle, const std::filesystem::path& dir);
SplitBundle load_split(const std::filesystem::path& dir);

}  // namespace dirlink
