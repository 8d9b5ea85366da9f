#include "dirlink/graph.hpp"

#include <algorithm>
#include <numeric>

namespace dirlink {

std::string_view to_string(EdgeClass c) {
  switch (c) {
    case EdgeClass::NB: return "NB";
    case EdgeClass::NU: return "NU";
    case EdgeClass::PU: return "PU";
    case EdgeClass::PB: return "PB";
  }
  return "?";
}

EdgeClass edge_class_from_string(std::string_view s) {
  for (auto c : kAllEdgeClasses) {
    if (to_string(c) == s) return c;
  }
  throw InputError("unknown edge class '" + std::string(s) + "'");
}

std::size_t ClassCensus::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

namespace {

// CSR grouped by source (by_src) or destination, neighbour lists sorted.
void build_csr(std::size_t n, const std::vector<Edge>& edges, bool by_src,
               std::vector<std::size_t>& offsets, std::vector<NodeId>& targets) {
  offsets.assign(n + 1, 0);
  for (const auto& e : edges) ++offsets[(by_src ? e.src : e.dst) + 1];
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  targets.resize(edges.size());
  std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
  for (const auto& e : edges) {
    NodeId key = by_src ? e.src : e.dst;
    targets[cursor[key]++] = by_src ? e.dst : e.src;
  }
  for (std::size_t v = 0; v < n; ++v) {
    std::sort(targets.begin() + static_cast<std::ptrdiff_t>(offsets[v]),
              targets.begin() + static_cast<std::ptrdiff_t>(offsets[v + 1]));
  }
}

}  // namespace

DirectedGraph::DirectedGraph(std::size_t num_nodes, std::span<const Edge> edges)
    : num_nodes_(num_nodes) {
  std::vector<Edge> sorted(edges.begin(), edges.end());
  for (const auto& e : sorted) {
    if (e.src >= num_nodes || e.dst >= num_nodes) {
      throw InputError("edge (" + std::to_string(e.src) + "," + std::to_string(e.dst) +
                       ") out of range for " + std::to_string(num_nodes) + " nodes");
    }
  }
  std::sort(sorted.begin(), sorted.end());
  auto last = std::unique(sorted.begin(), sorted.end());
  dropped_duplicates_ = static_cast<std::size_t>(sorted.end() - last);
  sorted.erase(last, sorted.end());

  build_csr(num_nodes_, sorted, true, out_offsets_, out_targets_);
  build_csr(num_nodes_, sorted, false, in_offsets_, in_sources_);
}

void DirectedGraph::check_node(NodeId v) const {
  if (v >= num_nodes_) {
    throw InputError("node id " + std::to_string(v) + " out of range [0, " +
                     std::to_string(num_nodes_) + ")");
  }
}

std::span<const NodeId> DirectedGraph::successors(NodeId v) const {
  check_node(v);
  return {out_targets_.data() + out_offsets_[v], out_offsets_[v + 1] - out_offsets_[v]};
}

std::span<const NodeId> DirectedGraph::predecessors(NodeId v) const {
  check_node(v);
  return {in_sources_.data() + in_offsets_[v], in_offsets_[v + 1] - in_offsets_[v]};
}

bool DirectedGraph::has_edge(NodeId u, NodeId v) const {
  check_node(v);
  auto succ = successors(u);
  return std::binary_search(succ.begin(), succ.end(), v);
}

std::vector<Edge> DirectedGraph::edges() const {
  std::vector<Edge> out;
  out.reserve(num_edges());
  for (NodeId u = 0; u < num_nodes_; ++u) {
    for (NodeId v : successors(u)) out.push_back({u, v});
  }
  return out;
}

std::size_t DirectedGraph::num_self_loops() const {
  std::size_t loops = 0;
  for (NodeId v = 0; v < num_nodes_; ++v) loops += has_edge(v, v) ? 1 : 0;
  return loops;
}

EdgeClass classify_edge(const DirectedGraph& g, NodeId u, NodeId v) {
  g.check_node(u);
  g.check_node(v);
  if (u == v) throw InputError("classify_edge: self-loop pairs have no edge class");
  const bool fwd = g.has_edge(u, v);
  const bool bwd = g.has_edge(v, u);
  if (fwd) return bwd ? EdgeClass::PB : EdgeClass::PU;
  return bwd ? EdgeClass::NU : EdgeClass::NB;
}

ClassCensus census(const DirectedGraph& g, std::span<const Edge> pairs) {
  ClassCensus c;
  for (const auto& p : pairs) ++c[classify_edge(g, p.src, p.dst)];
  return c;
}

EdgePartition edge_partition(const DirectedGraph& g) {
  EdgePartition part;
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    for (NodeId v : g.successors(u)) {
      if (u == v) continue;
      if (!g.has_edge(v, u)) {
        part.unidirectional.push_back({u, v});
      } else if (u < v) {
        part.bidirectional.push_back({u, v});
      }
    }
  }
  return part;
}

DirectedGraph with_self_loops(const DirectedGraph& g) {
  auto edges = g.edges();
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    if (!g.has_edge(v, v)) edges.push_back({v, v});
  }
  return DirectedGraph(g.num_nodes(), edges);
}

DirectedGraph without_self_loops(const DirectedGraph& g) {
  auto edges = g.edges();
  std::erase_if(edges, [](const Edge& e) { return e.is_loop(); });
  return DirectedGraph(g.num_nodes(), edges);
}

}  // namespace dirlink
