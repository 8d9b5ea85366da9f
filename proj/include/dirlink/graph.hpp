#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dirlink {

using NodeId = std::uint32_t;

struct Edge {
  NodeId src{0};
  NodeId dst{0};

  friend constexpr bool operator==(const Edge&, const Edge&) = default;
  friend constexpr auto operator<=>(const Edge&, const Edge&) = default;

  [[nodiscard]] constexpr Edge reversed() const { return {dst, src}; }
  [[nodiscard]] constexpr bool is_loop() const { return src == dst; }
};

/// Raised for malformed caller input (bad node ids, inconsistent shapes).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a configuration cannot be satisfied by the data (e.g. a split
/// that would reserve more edges than exist).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The four joint states of ((u,v), (v,u)) presence. Order matches the
// multi-class head: nb, nu, pu, pb.
enum class EdgeClass : std::uint8_t { NB = 0, NU = 1, PU = 2, PB = 3 };

inline constexpr std::array<EdgeClass, 4> kAllEdgeClasses{EdgeClass::NB, EdgeClass::NU,
                                                         EdgeClass::PU, EdgeClass::PB};

std::string_view to_string(EdgeClass c);
EdgeClass edge_class_from_string(std::string_view s);

struct ClassCensus {
  std::array<std::size_t, 4> counts{};

  std::size_t& operator[](EdgeClass c) { return counts[static_cast<std::size_t>(c)]; }
  std::size_t operator[](EdgeClass c) const { return counts[static_cast<std::size_t>(c)]; }
  [[nodiscard]] std::size_t total() const;
};

/*
 * Immutable simple directed graph on dense node ids [0, N).
 *
 * Both adjacency directions are kept as CSR arrays with sorted neighbour
 * lists, so edge lookup is a binary search and iteration order is stable.
 */
class DirectedGraph {
 public:
  DirectedGraph() = default;

  /// Builds from an edge list. Duplicates are dropped; self-loops are kept.
  /// Throws InputError on out-of-range ids.
  DirectedGraph(std::size_t num_nodes, std::span<const Edge> edges);

  [[nodiscard]] std::size_t num_nodes() const { return num_nodes_; }
  [[nodiscard]] std::size_t num_edges() const { return out_targets_.size(); }

  [[nodiscard]] bool has_edge(NodeId u, NodeId v) const;
  [[nodiscard]] bool has_edge(Edge e) const { return has_edge(e.src, e.dst); }

  [[nodiscard]] std::span<const NodeId> successors(NodeId v) const;
  [[nodiscard]] std::span<const NodeId> predecessors(NodeId v) const;
  [[nodiscard]] std::size_t out_degree(NodeId v) const { return successors(v).size(); }
  [[nodiscard]] std::size_t in_degree(NodeId v) const { return predecessors(v).size(); }

  /// All edges in (src, dst) lexicographic order.
  [[nodiscard]] std::vector<Edge> edges() const;

  /// Number of duplicate input edges dropped at construction.
  [[nodiscard]] std::size_t dropped_duplicates() const { return dropped_duplicates_; }

  [[nodiscard]] std::size_t num_self_loops() const;

  void check_node(NodeId v) const;

  friend bool operator==(const DirectedGraph& a, const DirectedGraph& b) {
    return a.num_nodes_ == b.num_nodes_ && a.out_offsets_ == b.out_offsets_ &&
           a.out_targets_ == b.out_targets_;
  }

 private:
  std::size_t num_nodes_{0};
  std::vector<std::size_t> out_offsets_{0};
  std::vector<NodeId> out_targets_;
  std::vector<std::size_t> in_offsets_{0};
  std::vector<NodeId> in_sources_;
  std::size_t dropped_duplicates_{0};
};

/// Class of the ordered pair (u, v). Requires u != v.
EdgeClass classify_edge(const DirectedGraph& g, NodeId u, NodeId v);

ClassCensus census(const DirectedGraph& g, std::span<const Edge> pairs);

struct EdgePartition {
  std::vector<Edge> unidirectional;
  // One representative (min, max) per reciprocal pair.
  std::vector<Edge> bidirectional;
};

/// Splits the non-loop edges into unidirectional edges and canonical
/// bidirectional pairs. Self-loops are ignored.
EdgePartition edge_partition(const DirectedGraph& g);

DirectedGraph with_self_loops(const DirectedGraph& g);
DirectedGraph without_self_loops(const DirectedGraph& g);

}  // namespace dirlink
