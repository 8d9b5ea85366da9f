#pragma once

#include <filesystem>
#include <string>

#include "dirlink/gradcheck.hpp"
#include "dirlink/graph.hpp"
#include "dirlink/rng.hpp"

namespace test {

/// Same node, edge and reciprocity counts as Cora: 2,708 nodes, 5,127
/// one-way edges and 151 reciprocal pairs (5,429 directed edges).
inline dirlink::DirectedGraph cora_sized_graph(dirlink::Rng& rng) {
  return dirlink::random_digraph(2708, 5127, 151, rng);
}

/// About a quarter of the edges sit in reciprocal pairs.
inline dirlink::DirectedGraph random_graph(dirlink::Rng& rng, std::size_t nodes, std::size_t edges) {
  const std::size_t bi = edges / 8;
  return dirlink::random_digraph(nodes, edges - 2 * bi, bi, rng);
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("dirlink_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace test
