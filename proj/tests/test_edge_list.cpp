#include <doctest.h>

#include <fstream>
#include <sstream>

#include "dirlink/edge_list.hpp"
#include "helpers.hpp"

using namespace dirlink;

TEST_CASE("edge lists remap raw ids in order of first appearance") {
  std::istringstream in(
      "# citing cited\n"
      "paperA paperB\n"
      "\n"
      "paperB paperA\n"
      "paperA 77\n"
      "paperA paperB\n"
      "77 77\n");
  const auto loaded = read_edge_list(in, "toy");
  CHECK(loaded.raw_ids == std::vector<std::string>{"paperA", "paperB", "77"});
  CHECK(loaded.graph.num_nodes() == 3);
  CHECK(loaded.graph.edges() == std::vector<Edge>{{0, 1}, {0, 2}, {1, 0}});
  CHECK(loaded.dropped_duplicates == 1);
  CHECK(loaded.dropped_self_loops == 1);
}

TEST_CASE("node lists add isolated nodes first") {
  std::istringstream in("b c\n");
  const auto loaded = read_edge_list(in, "toy", {"a", "b", "c", "d"});
  CHECK(loaded.graph.num_nodes() == 4);
  CHECK(loaded.graph.has_edge(1, 2));
  CHECK(loaded.raw_ids[3] == "d");
}

TEST_CASE("malformed lines report their line number") {
  std::istringstream one_token("a b\nlonely\n");
  try {
    (void)read_edge_list(one_token, "bad.edges");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("bad.edges:2") == 0);
  }
  std::istringstream extra("a b c\n");
  CHECK_THROWS_AS(read_edge_list(extra, "x"), ParseError);
}

TEST_CASE("empty inputs are rejected") {
  std::istringstream empty("# nothing here\n\n");
  CHECK_THROWS_AS(read_edge_list(empty, "empty"), InputError);
  std::istringstream only_loops("a a\n");
  CHECK_THROWS_AS(read_edge_list(only_loops, "loops"), InputError);
}

TEST_CASE("files round-trip through write_edge_list") {
  const auto dir = test::temp_dir("edge_list");
  Rng rng(5);
  const auto g = test::random_graph(rng, 40, 120);
  write_edge_list(g, dir / "g.edges");
  const auto back = read_edge_list_file(dir / "g.edges");
  // Ids are re-densified in order of appearance; the edge count survives.
  CHECK(back.graph.num_edges() == g.num_edges());
  CHECK(census(back.graph, back.graph.edges()).counts == census(g, g.edges()).counts);

  write_id_mapping(back, dir / "ids.csv");
  std::ifstream ids(dir / "ids.csv");
  std::string header;
  std::getline(ids, header);
  CHECK(header == "raw_id,dense_id");

  CHECK_THROWS(read_edge_list_file(dir / "missing.edges"));
}
