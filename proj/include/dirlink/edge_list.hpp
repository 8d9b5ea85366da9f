#pragma once

#include <filesystem>
#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dirlink/graph.hpp"

namespace dirlink {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  [[nodiscard]] std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct LoadedGraph {
  DirectedGraph graph;                // self-loops stripped, duplicates removed
  std::vector<std::string> raw_ids;   // dense id -> raw id
  std::size_t dropped_duplicates{0};
  std::size_t dropped_self_loops{0};
};

/*
 * Reads `src dst` pairs, one per line. Blank lines and lines starting with '#'
 * are skipped. Raw ids are arbitrary tokens, remapped to dense ids in order of
 * first appearance. `extra_nodes` (e.g. isolated nodes from a node list) are
 * registered before any edge is read.
 */
LoadedGraph read_edge_list(std::istream& in, const std::string& source_name = "<stream>",
                           const std::vector<std::string>& extra_nodes = {});

LoadedGraph read_edge_list_file(const std::filesystem::path& path,
                                const std::filesystem::path& node_list = {});

/// One raw id per line; '#' comments allowed.
std::vector<std::string> read_node_list_file(const std::filesystem::path& path);

/// Writes the `raw_id,dense_id` CSV mapping.
void write_id_mapping(const LoadedGraph& loaded, const std::filesystem::path& path);

void write_edge_list(const DirectedGraph& g, const std::filesystem::path& path);

}  // namespace dirlink
