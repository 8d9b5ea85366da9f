#include "dirlink/split.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

namespace dirlink {

namespace {

std::uint64_t key(Edge e) { return (static_cast<std::uint64_t>(e.src) << 32) | e.dst; }

using EdgeSet = std::unordered_set<std::uint64_t>;

EdgeSet to_set(const std::vector<Edge>& edges) {
  EdgeSet s;
  s.reserve(edges.size() * 2);
  for (const auto& e : edges) s.insert(key(e));
  return s;
}

std::size_t reserve_count(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
}

std::vector<Edge> reversed(const std::vector<Edge>& edges) {
  std::vector<Edge> out;
  out.reserve(edges.size());
  for (const auto& e : edges) out.push_back(e.reversed());
  return out;
}

std::size_t non_loop_edges(const DirectedGraph& g) { return g.num_edges() - g.num_self_loops(); }

}  // namespace

void SplitFractions::validate() const {
  for (double f : {uni_test, uni_val, bi_test, bi_val}) {
    if (!(f >= 0.0 && f < 1.0)) throw ConfigError("split fractions must lie in [0, 1)");
  }
  if (uni_test + uni_val >= 1.0) throw ConfigError("uni_test + uni_val must be < 1");
  if (bi_test + bi_val >= 1.0) throw ConfigError("bi_test + bi_val must be < 1");
}

std::vector<Edge> EvalSet::pairs() const {
  std::vector<Edge> out(positives);
  out.insert(out.end(), negatives.begin(), negatives.end());
  return out;
}

std::vector<int> EvalSet::labels() const {
  std::vector<int> out(positives.size(), 1);
  out.resize(size(), 0);
  return out;
}

Reservation reserve_edges(const DirectedGraph& g, const SplitFractions& f, Rng& rng) {
  f.validate();
  if (g.num_self_loops() != 0) throw InputError("reserve_edges: graph must have self-loops stripped");

  auto part = edge_partition(g);
  if (part.unidirectional.empty()) {
    throw ConfigError("graph has no unidirectional edges; Directional task cannot be built");
  }
  if (part.bidirectional.empty()) {
    throw ConfigError("graph has no bidirectional edges; Bidirectional task cannot be built");
  }

  const std::size_t n_uni_test = reserve_count(f.uni_test, part.unidirectional.size());
  const std::size_t n_uni_val = reserve_count(f.uni_val, part.unidirectional.size());
  const std::size_t n_bi_test = reserve_count(f.bi_test, part.bidirectional.size());
  const std::size_t n_bi_val = reserve_count(f.bi_val, part.bidirectional.size());
  if (n_uni_test + n_uni_val > part.unidirectional.size() ||
      n_bi_test + n_bi_val > part.bidirectional.size()) {
    throw ConfigError("split fractions reserve more edges than exist");
  }

  auto uni = rng.sample(std::span<const Edge>(part.unidirectional), n_uni_test + n_uni_val);
  auto bi = rng.sample(std::span<const Edge>(part.bidirectional), n_bi_test + n_bi_val);

  Reservation r;
  r.uni_test.assign(uni.begin(), uni.begin() + static_cast<std::ptrdiff_t>(n_uni_test));
  r.uni_val.assign(uni.begin() + static_cast<std::ptrdiff_t>(n_uni_test), uni.end());
  r.bi_test.assign(bi.begin(), bi.begin() + static_cast<std::ptrdiff_t>(n_bi_test));
  r.bi_val.assign(bi.begin() + static_cast<std::ptrdiff_t>(n_bi_test), bi.end());

  EdgeSet removed = to_set(uni);
  for (const auto& e : bi) removed.insert(key(e));
  auto edges = g.edges();
  std::erase_if(edges, [&](const Edge& e) { return removed.contains(key(e)); });
  r.train_graph = DirectedGraph(g.num_nodes(), edges);
  return r;
}

std::vector<Edge> enumerate_absent_pairs(const DirectedGraph& g) {
  std::vector<Edge> out;
  const auto n = static_cast<NodeId>(g.num_nodes());
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = 0; v < n; ++v) {
      if (u != v && !g.has_edge(u, v)) out.push_back({u, v});
    }
  }
  return out;
}

std::vector<Edge> sample_absent_pairs(const DirectedGraph& g, std::size_t count, Rng& rng,
                                      const std::vector<Edge>& exclude) {
  if (count == 0) return {};
  const std::size_t n = g.num_nodes();
  EdgeSet excluded;
  for (const auto& e : exclude) {
    if (!e.is_loop() && !g.has_edge(e)) excluded.insert(key(e));
  }
  const std::size_t all_pairs = n * (n > 0 ? n - 1 : 0);
  const std::size_t available = all_pairs - non_loop_edges(g) - excluded.size();
  if (count > available) {
    throw ConfigError("cannot sample " + std::to_string(count) + " absent pairs; only " +
                      std::to_string(available) + " available");
  }

  // Dense regime: rejection sampling would stall, enumerate instead.
  if (2 * count > available) {
    auto pool = enumerate_absent_pairs(g);
    std::erase_if(pool, [&](const Edge& e) { return excluded.contains(key(e)); });
    return rng.sample(std::span<const Edge>(pool), count);
  }

  std::vector<Edge> out;
  out.reserve(count);
  EdgeSet chosen;
  chosen.reserve(count * 2);
  while (out.size() < count) {
    const auto u = static_cast<NodeId>(rng.index(n));
    const auto v = static_cast<NodeId>(rng.index(n));
    if (u == v) continue;
    const Edge e{u, v};
    if (g.has_edge(e) || excluded.contains(key(e)) || chosen.contains(key(e))) continue;
    chosen.insert(key(e));
    out.push_back(e);
  }
  return out;
}

ValTest build_general_sets(const DirectedGraph& original, const Reservation& r, Rng& rng) {
  ValTest out;
  out.val.positives = r.uni_val;
  out.val.positives.insert(out.val.positives.end(), r.bi_val.begin(), r.bi_val.end());
  out.test.positives = r.uni_test;
  out.test.positives.insert(out.test.positives.end(), r.bi_test.begin(), r.bi_test.end());

  auto negatives = sample_absent_pairs(original, out.val.positives.size() + out.test.positives.size(), rng);
  const auto split_at = negatives.begin() + static_cast<std::ptrdiff_t>(out.val.positives.size());
  out.val.negatives.assign(negatives.begin(), split_at);
  out.test.negatives.assign(split_at, negatives.end());
  return out;
}

EvalSet build_general_train(const DirectedGraph& train_graph, Rng& rng, std::size_t negative_ratio) {
  EvalSet s;
  s.positives = train_graph.edges();
  std::erase_if(s.positives, [](const Edge& e) { return e.is_loop(); });
  s.negatives = sample_absent_pairs(train_graph, negative_ratio * s.positives.size(), rng);
  return s;
}

ValTest build_directional_sets(const Reservation& r) {
  ValTest out;
  out.val.positives = r.uni_val;
  out.val.negatives = reversed(r.uni_val);
  out.test.positives = r.uni_test;
  out.test.negatives = reversed(r.uni_test);
  return out;
}

EvalSet build_directional_train(const std::vector<Edge>& train_unidirectional) {
  return {train_unidirectional, reversed(train_unidirectional)};
}

std::vector<Edge> remaining_unidirectional(const DirectedGraph& original,
                                           const DirectedGraph& train_graph) {
  std::vector<Edge> out;
  for (const auto& e : train_graph.edges()) {
    if (!e.is_loop() && !original.has_edge(e.reversed())) out.push_back(e);
  }
  return out;
}

TaskSets build_bidirectional_sets(const DirectedGraph& original, const Reservation& r,
                                  const std::vector<Edge>& train_unidirectional, Rng& rng) {
  TaskSets t;
  t.test.positives = r.bi_test;
  t.val.positives = r.bi_val;
  for (const auto& e : edge_partition(original).bidirectional) {
    if (r.train_graph.has_edge(e) && r.train_graph.has_edge(e.reversed())) {
      t.train.positives.push_back(e);
    }
  }

  const std::size_t n_test = t.test.positives.size();
  const std::size_t n_val = t.val.positives.size();
  const std::size_t n_train = t.train.positives.size();
  if (n_test + n_val + n_train > train_unidirectional.size()) {
    throw ConfigError("not enough unidirectional edges (" + std::to_string(train_unidirectional.size()) +
                      ") to supply " + std::to_string(n_test + n_val + n_train) +
                      " bidirectional negatives");
  }
  auto draw = rng.sample(std::span<const Edge>(train_unidirectional), n_test + n_val + n_train);
  auto it = draw.begin();
  for (auto* set : {&t.test, &t.val, &t.train}) {
    const auto n = static_cast<std::ptrdiff_t>(set->positives.size());
    for (auto e = it; e != it + n; ++e) set->negatives.push_back(e->reversed());
    it += n;
  }
  return t;
}

EdgeClass supervision_class(const DirectedGraph& train_graph, Edge e) {
  if (e.is_loop()) return EdgeClass::NB;
  return classify_edge(train_graph, e.src, e.dst);
}

std::vector<LabeledPair> build_multiclass_train(const DirectedGraph& train_graph,
                                                const EvalSet& general_train) {
  std::vector<LabeledPair> out;
  out.reserve(general_train.size());
  for (const auto& e : general_train.pairs()) out.push_back({e, supervision_class(train_graph, e)});
  return out;
}

SplitBundle build_split(const DirectedGraph& g, const SplitFractions& f, std::uint64_t seed) {
  const Rng root(seed);
  Rng reserve_rng = root.fork("reserve");
  Rng general_rng = root.fork("general");
  Rng train_rng = root.fork("general-train");
  Rng bi_rng = root.fork("bidirectional");

  auto r = reserve_edges(g, f, reserve_rng);

  SplitBundle b;
  b.seed = seed;
  b.fractions = f;
  b.train_unidirectional = remaining_unidirectional(g, r.train_graph);

  auto general = build_general_sets(g, r, general_rng);
  b.general.val = std::move(general.val);
  b.general.test = std::move(general.test);
  b.general.train = build_general_train(r.train_graph, train_rng);

  auto directional = build_directional_sets(r);
  b.directional.val = std::move(directional.val);
  b.directional.test = std::move(directional.test);
  b.directional.train = build_directional_train(b.train_unidirectional);

  b.bidirectional = build_bidirectional_sets(g, r, b.train_unidirectional, bi_rng);
  b.multiclass_train = build_multiclass_train(r.train_graph, b.general.train);
  b.train_graph = std::move(r.train_graph);
  return b;
}

// --- validation ---------------------------------------------------------------

bool SplitReport::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const SplitCheck& c) { return c.passed; });
}

std::vector<std::string> SplitReport::failures() const {
  std::vector<std::string> out;
  for (const auto& c : checks) {
    if (!c.passed) out.push_back(c.name + ": " + c.detail);
  }
  return out;
}

namespace {

std::string show(Edge e) { return "(" + std::to_string(e.src) + "," + std::to_string(e.dst) + ")"; }

class Checker {
 public:
  explicit Checker(SplitReport& report) : report_(report) {}

  void expect(const std::string& name, bool cond, const std::string& detail = {}) {
    auto it = std::find_if(report_.checks.begin(), report_.checks.end(),
                           [&](const SplitCheck& c) { return c.name == name; });
    if (it == report_.checks.end()) {
      report_.checks.push_back({name, true, {}});
      it = report_.checks.end() - 1;
    }
    if (!cond && it->passed) {
      it->passed = false;
      it->detail = detail;
    }
  }

 private:
  SplitReport& report_;
};

}  // namespace

SplitReport validate_split(const SplitBundle& b, const DirectedGraph& original) {
  SplitReport report;
  Checker check(report);

  const std::vector<std::pair<std::string, const TaskSets*>> tasks{
      {"general", &b.general}, {"directional", &b.directional}, {"bidirectional", &b.bidirectional}};

  check.expect("train-subgraph", b.train_graph.num_nodes() == original.num_nodes(),
               "node count differs from original");
  for (const auto& e : b.train_graph.edges()) {
    check.expect("train-subgraph", original.has_edge(e), "train edge " + show(e) + " not in original");
    check.expect("train-no-self-loops", !e.is_loop(), "self-loop " + show(e) + " in train graph");
  }

  EdgeSet val_pos, test_pos;
  for (const auto& [name, t] : tasks) {
    const std::vector<std::pair<std::string, const EvalSet*>> stages{
        {"train", &t->train}, {"val", &t->val}, {"test", &t->test}};
    for (const auto& [stage, set] : stages) {
      const std::string where = name + "." + stage;
      check.expect("balance", set->positives.size() == set->negatives.size(),
                   where + " has " + std::to_string(set->positives.size()) + " positives vs " +
                       std::to_string(set->negatives.size()) + " negatives");
      const auto pos = to_set(set->positives);
      const auto neg = to_set(set->negatives);
      check.expect("no-duplicates", pos.size() == set->positives.size() && neg.size() == set->negatives.size(),
                   where + " contains duplicate pairs");
      for (const auto& e : set->positives) {
        check.expect("no-self-loops", !e.is_loop(), where + " positive " + show(e));
        check.expect("disjoint-pos-neg", !neg.contains(key(e)), where + " pair " + show(e) + " is both");
      }
      for (const auto& e : set->negatives) check.expect("no-self-loops", !e.is_loop(), where + " negative " + show(e));
      if (stage == "train") continue;

      for (const auto& e : set->positives) {
        check.expect("leakage", !b.train_graph.has_edge(e), where + " positive " + show(e) + " is in train graph");
        check.expect("positives-exist", original.has_edge(e), where + " positive " + show(e) + " not in original");
        (stage == "val" ? val_pos : test_pos).insert(key(e));
      }
    }
  }
  for (auto k : val_pos) {
    check.expect("reserved-once", !test_pos.contains(k), "edge reserved for both val and test");
  }

  const auto directional_sets = {&b.directional.train, &b.directional.val, &b.directional.test};
  for (const auto* set : directional_sets) {
    bool mirrored = set->positives.size() == set->negatives.size();
    for (std::size_t i = 0; mirrored && i < set->positives.size(); ++i) {
      mirrored = set->negatives[i] == set->positives[i].reversed();
    }
    check.expect("directional-structure", mirrored, "directional negatives are not reverses of positives");
  }

  for (const auto* set : {&b.general.val, &b.general.test}) {
    for (const auto& e : set->negatives) {
      check.expect("general-negatives-absent", !original.has_edge(e), "general negative " + show(e) + " is an edge");
    }
  }

  EdgeSet bi_negatives;
  for (const auto* set : {&b.bidirectional.train, &b.bidirectional.val, &b.bidirectional.test}) {
    for (const auto& e : set->negatives) {
      check.expect("bidirectional-structure", !original.has_edge(e) && b.train_graph.has_edge(e.reversed()),
                   "bidirectional negative " + show(e) + " is not the reverse of a unidirectional train edge");
      check.expect("bidirectional-negatives-disjoint", bi_negatives.insert(key(e)).second,
                   "bidirectional negative " + show(e) + " drawn twice");
    }
    for (const auto& e : set->positives) {
      check.expect("bidirectional-structure", original.has_edge(e.reversed()),
                   "bidirectional positive " + show(e) + " has no reciprocal");
    }
  }
  for (const auto* set : {&b.bidirectional.val, &b.bidirectional.test}) {
    for (const auto& e : set->positives) {
      check.expect("reverse-retention", b.train_graph.has_edge(e.reversed()),
                   "reverse of reserved " + show(e) + " missing from train graph");
    }
  }

  for (const auto& lp : b.multiclass_train) {
    check.expect("multiclass-labels", supervision_class(b.train_graph, lp.pair) == lp.cls,
                 "pair " + show(lp.pair) + " mislabeled as " + std::string(to_string(lp.cls)));
  }

  const auto part = edge_partition(original);
  const auto& f = b.fractions;
  const std::size_t reserved = reserve_count(f.uni_test, part.unidirectional.size()) +
                               reserve_count(f.uni_val, part.unidirectional.size()) +
                               reserve_count(f.bi_test, part.bidirectional.size()) +
                               reserve_count(f.bi_val, part.bidirectional.size());
  check.expect("count-law", b.train_graph.num_edges() + reserved == non_loop_edges(original),
               "train edges " + std::to_string(b.train_graph.num_edges()) + " + reserved " +
                   std::to_string(reserved) + " != " + std::to_string(non_loop_edges(original)));
  return report;
}

// --- serialization ------------------------------------------------------------

namespace {

void write_pairs_csv(const std::filesystem::path& path, const EvalSet& set) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "u,v,label\n";
  for (const auto& e : set.positives) out << e.src << ',' << e.dst << ",1\n";
  for (const auto& e : set.negatives) out << e.src << ',' << e.dst << ",0\n";
}

EvalSet read_pairs_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  EvalSet set;
  std::string line;
  std::getline(in, line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    NodeId u = 0, v = 0;
    int label = -1;
    char c1 = 0, c2 = 0;
    if (!(row >> u >> c1 >> v >> c2 >> label) || c1 != ',' || c2 != ',' || (label != 0 && label != 1)) {
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": malformed row");
    }
    (label == 1 ? set.positives : set.negatives).push_back({u, v});
  }
  return set;
}

}  // namespace

void save_split(const SplitBundle& b, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json manifest;
  manifest["seed"] = b.seed;
  manifest["fractions"] = {{"uni_test", b.fractions.uni_test},
                           {"uni_val", b.fractions.uni_val},
                           {"bi_test", b.fractions.bi_test},
                           {"bi_val", b.fractions.bi_val}};
  manifest["num_nodes"] = b.train_graph.num_nodes();
  manifest["train_edges"] = b.train_graph.num_edges();

  const std::vector<std::pair<std::string, const TaskSets*>> tasks{
      {"general", &b.general}, {"directional", &b.directional}, {"bidirectional", &b.bidirectional}};
  auto& counts = manifest["counts"];
  for (const auto& [name, t] : tasks) {
    for (const auto& [stage, set] : {std::pair{"train", &t->train}, {"val", &t->val}, {"test", &t->test}}) {
      const std::string file = name + "_" + stage + ".csv";
      write_pairs_csv(dir / file, *set);
      counts[name][stage] = {{"positives", set->positives.size()}, {"negatives", set->negatives.size()}};
    }
  }

  {
    std::ofstream out(dir / "train_graph.csv");
    out << "u,v\n";
    for (const auto& e : b.train_graph.edges()) out << e.src << ',' << e.dst << '\n';
  }
  {
    std::ofstream out(dir / "train_unidirectional.csv");
    out << "u,v\n";
    for (const auto& e : b.train_unidirectional) out << e.src << ',' << e.dst << '\n';
  }
  {
    std::ofstream out(dir / "multiclass_train.csv");
    out << "u,v,class\n";
    for (const auto& lp : b.multiclass_train) {
      out << lp.pair.src << ',' << lp.pair.dst << ',' << to_string(lp.cls) << '\n';
    }
    ClassCensus c;
    for (const auto& lp : b.multiclass_train) ++c[lp.cls];
    for (auto cls : kAllEdgeClasses) manifest["multiclass_census"][std::string(to_string(cls))] = c[cls];
  }

  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
}

namespace {

std::vector<Edge> read_edge_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<Edge> edges;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    NodeId u = 0, v = 0;
    char comma = 0;
    if (!(row >> u >> comma >> v) || comma != ',') throw InputError(path.string() + ": malformed row '" + line + "'");
    edges.push_back({u, v});
  }
  return edges;
}

}  // namespace

SplitBundle load_split(const std::filesystem::path& dir) {
  std::ifstream mf(dir / "manifest.json");
  if (!mf) throw std::runtime_error("cannot open " + (dir / "manifest.json").string());
  const auto manifest = nlohmann::json::parse(mf);

  SplitBundle b;
  b.seed = manifest.at("seed").get<std::uint64_t>();
  const auto& fr = manifest.at("fractions");
  b.fractions = {fr.at("uni_test"), fr.at("uni_val"), fr.at("bi_test"), fr.at("bi_val")};
  const auto n = manifest.at("num_nodes").get<std::size_t>();
  b.train_graph = DirectedGraph(n, read_edge_csv(dir / "train_graph.csv"));
  b.train_unidirectional = read_edge_csv(dir / "train_unidirectional.csv");

  for (const auto& [name, t] : {std::pair{"general", &b.general}, {"directional", &b.directional},
                                {"bidirectional", &b.bidirectional}}) {
    t->train = read_pairs_csv(dir / (std::string(name) + "_train.csv"));
    t->val = read_pairs_csv(dir / (std::string(name) + "_val.csv"));
    t->test = read_pairs_csv(dir / (std::string(name) + "_test.csv"));
  }

  std::ifstream in(dir / "multiclass_train.csv");
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string u, v, cls;
    std::getline(row, u, ',');
    std::getline(row, v, ',');
    std::getline(row, cls);
    b.multiclass_train.push_back(
        {{static_cast<NodeId>(std::stoul(u)), static_cast<NodeId>(std::stoul(v))}, edge_class_from_string(cls)});
  }
  return b;
}

}  // namespace dirlink
