#include "dirlink/edge_list.hpp"

#include <fstream>
#include <sstream>
#include <unordered_map>

namespace dirlink {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

class IdMap {
 public:
  NodeId intern(const std::string& raw) {
    auto [it, inserted] = index_.try_emplace(raw, static_cast<NodeId>(raw_ids_.size()));
    if (inserted) raw_ids_.push_back(raw);
    return it->second;
  }
  std::vector<std::string> release() { return std::move(raw_ids_); }
  [[nodiscard]] std::size_t size() const { return raw_ids_.size(); }

 private:
  std::unordered_map<std::string, NodeId> index_;
  std::vector<std::string> raw_ids_;
};

}  // namespace

LoadedGraph read_edge_list(std::istream& in, const std::string& source_name,
                           const std::vector<std::string>& extra_nodes) {
  IdMap ids;
  for (const auto& n : extra_nodes) ids.intern(n);

  std::vector<Edge> edges;
  std::size_t self_loops = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    std::istringstream fields{std::string(body)};
    std::string src, dst, extra;
    if (!(fields >> src >> dst)) {
      throw ParseError(source_name, lineno, "expected 'src dst', got '" + std::string(body) + "'");
    }
    if (fields >> extra) {
      throw ParseError(source_name, lineno, "unexpected trailing token '" + extra + "'");
    }
    const NodeId u = ids.intern(src);
    const NodeId v = ids.intern(dst);
    if (u == v) {
      ++self_loops;
      continue;
    }
    edges.push_back({u, v});
  }
  if (edges.empty()) throw InputError(source_name + ": empty graph (no edges besides self-loops)");

  LoadedGraph out;
  out.graph = DirectedGraph(ids.size(), edges);
  out.dropped_duplicates = out.graph.dropped_duplicates();
  out.dropped_self_loops = self_loops;
  out.raw_ids = ids.release();
  return out;
}

std::vector<std::string> read_node_list_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open node list " + path.string());
  std::vector<std::string> nodes;
  std::string line;
  while (std::getline(in, line)) {
    auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    std::istringstream fields{std::string(body)};
    std::string id;
    fields >> id;
    nodes.push_back(id);
  }
  return nodes;
}

LoadedGraph read_edge_list_file(const std::filesystem::path& path,
                                const std::filesystem::path& node_list) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open edge list " + path.string());
  std::vector<std::string> extra;
  if (!node_list.empty()) extra = read_node_list_file(node_list);
  return read_edge_list(in, path.string(), extra);
}

void write_id_mapping(const LoadedGraph& loaded, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "raw_id,dense_id\n";
  for (std::size_t i = 0; i < loaded.raw_ids.size(); ++i) {
    out << loaded.raw_ids[i] << ',' << i << '\n';
  }
}

void write_edge_list(const DirectedGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& e : g.edges()) out << e.src << ' ' << e.dst << '\n';
}

}  // namespace dirlink
