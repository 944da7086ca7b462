#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>
#include <vector>

#include "ssmc/graph.hpp"
#include "ssmc/graph_io.hpp"

using namespace ssmc;

namespace {

void check_column_sums(const Eigen::MatrixXd& m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) CHECK(m.col(c).sum() == doctest::Approx(0.0));
}

// Vertex on the spine at the given depth: the target's ancestors.
std::vector<VertexId> spine(const WeightedGraph& g) {
  std::vector<VertexId> s{*g.target()};
  while (auto p = g.parent(s.back())) s.push_back(*p);
  std::reverse(s.begin(), s.end());
  return s;
}

}  // namespace

TEST_CASE("laplacian of a single edge") {
  WeightedGraph g(2, {{0, 1, 2.5}}, {1, 0});
  auto l = laplacian(g);
  Eigen::Matrix2d expected;
  expected << 2.5, -2.5, -2.5, 2.5;
  CHECK((l.matrix - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("laplacian of an isolated vertex is zero") {
  WeightedGraph g(1, {}, {0});
  auto l = laplacian(g);
  REQUIRE(l.size() == 1);
  CHECK(l.matrix(0, 0) == 0.0);
}

TEST_CASE("star laplacian diagonal and column sums") {
  std::vector<double> w{1.5, 0.25};
  auto g = make_star(w);
  auto l = laplacian(g);
  CHECK(l.matrix(0, 0) == doctest::Approx(1.75));
  CHECK(l.matrix(1, 1) == doctest::Approx(1.5));
  CHECK(l.matrix(2, 2) == doctest::Approx(0.25));
  CHECK(l.matrix(1, 0) == doctest::Approx(-1.5));
  check_column_sums(l.matrix);
}

TEST_CASE("laplacian on a subset keeps only internal edges") {
  auto g = make_path(3);
  std::vector<VertexId> support{0, 1};
  auto l = laplacian(g, support);
  CHECK(l.matrix(1, 1) == doctest::Approx(1.0));
  check_column_sums(l.matrix);
  std::vector<VertexId> bad{0, 9};
  CHECK_THROWS_AS(laplacian(g, bad), InvalidArgument);
}

TEST_CASE("every generator gives zero column sums") {
  std::vector<WeightedGraph> graphs{make_comb(5),          make_waterfall(4), make_hypercube(4),
                                    make_full_tree(3, 3),  make_path(4),
                                    make_random_tree(4, 1, 3, 0.5, 2.0, 11)};
  for (const auto& g : graphs) {
    check_column_sums(laplacian(g).matrix);
    for (int j = 1; j <= g.max_depth(); ++j) check_column_sums(stage_subgraph(g, j).matrix);
  }
}

TEST_CASE("stage subgraph of a full binary tree") {
  auto g = make_full_tree(3);
  auto s1 = stage_subgraph(g, 1);
  CHECK(s1.size() == 3);
  CHECK(stage_edges(g, 1).size() == 2);
  auto s3 = stage_subgraph(g, 3);
  CHECK(s3.size() == 12);
  CHECK(stage_edges(g, 3).size() == 8);
}

TEST_CASE("comb tooth tip past its end is isolated in later stages") {
  auto g = make_comb(4);
  // Every depth-1 vertex other than the spine vertex lies on the long tooth.
  auto sp = spine(g);
  auto layer2 = g.layer(2);
  for (VertexId v : layer2) {
    if (v == sp[2]) continue;
    if (g.is_leaf(v)) {
      auto s = stage_subgraph(g, 3);
      auto idx = s.index_of(v);
      REQUIRE(idx);
      CHECK(s.matrix.row(static_cast<Eigen::Index>(*idx)).cwiseAbs().sum() == 0.0);
    }
  }
}

TEST_CASE("waterfall final stage edges") {
  const int d = 3;
  auto g = make_waterfall(d);
  auto edges = stage_edges(g, d);
  // One edge per tooth still running plus the spine edge.
  CHECK(edges.size() == static_cast<std::size_t>(d + 1));
  for (const auto& e : edges) {
    std::set<int> depths{g.depth(e.u), g.depth(e.v)};
    CHECK(depths == std::set<int>{d - 1, d});
  }
  auto sp = spine(g);
  CHECK(g.child_count(sp[d - 1]) == 2);
}

TEST_CASE("stage index errors") {
  auto g = make_path(2);
  CHECK_THROWS_AS(stage_subgraph(g, 0), InvalidArgument);
  CHECK_THROWS_AS(stage_subgraph(g, 3), InvalidArgument);
  WeightedGraph flat(2, {{0, 1, 1.0}}, {0, 0});
  CHECK_THROWS_AS(stage_subgraph(flat, 1), InvalidArgument);
}

TEST_CASE("comb structure") {
  SUBCASE("depth two") {
    auto g = make_comb(2);
    CHECK(g.size() == 5);
    CHECK(g.child_count(*g.root()) == 2);
    CHECK(g.depth(*g.target()) == 2);
  }
  SUBCASE("default teeth") {
    const int d = 6;
    auto g = make_comb(d);
    auto sp = spine(g);
    REQUIRE(sp.size() == static_cast<std::size_t>(d + 1));
    for (int j = 0; j < d; ++j) CHECK(g.child_count(sp[j]) == 2);
    // spine + root tooth of length D-1 + D-1 unit teeth
    CHECK(g.size() == static_cast<std::size_t>((d + 1) + (d - 1) + (d - 1)));
    CHECK(g.edges().size() == g.size() - 1);
    CHECK(g.connected());
  }
  SUBCASE("tooth override") {
    auto g = make_comb(4, {{2, 2}});
    CHECK(g.size() == static_cast<std::size_t>(5 + 3 + 1 + 2 + 1));
  }
  CHECK_THROWS_AS(make_comb(1), InvalidArgument);
}

TEST_CASE("waterfall structure") {
  const int d = 5;
  auto g = make_waterfall(d);
  CHECK(g.size() == static_cast<std::size_t>(1 + d + d * (d + 1) / 2));
  CHECK(g.edges().size() == g.size() - 1);
  std::size_t leaves = 0;
  for (VertexId v = 0; v < g.size(); ++v) {
    if (g.is_leaf(v)) {
      ++leaves;
      CHECK(g.depth(v) == d);
    }
  }
  CHECK(leaves == static_cast<std::size_t>(d + 1));
  CHECK(g.layer(d).size() == static_cast<std::size_t>(d + 1));
}

TEST_CASE("hypercube") {
  auto g1 = make_hypercube(1);
  CHECK(g1.size() == 2);
  CHECK(g1.edges().size() == 1);
  CHECK(g1.objective(0) == 0.0);
  CHECK(g1.objective(1) == 1.0);
  auto g3 = make_hypercube(3);
  CHECK(g3.degree(0) == 3);
  CHECK(g3.objective(1) == doctest::Approx(1.0 / 3.0));
  auto g8 = make_hypercube(8);
  CHECK(g8.size() == 256);
  CHECK(g8.edges().size() == 1024);
  CHECK(g8.max_degree() == 8);
  CHECK_THROWS_AS(make_hypercube(17), InvalidArgument);
  CHECK_THROWS_AS(make_hypercube(0), InvalidArgument);
}

TEST_CASE("random trees are layered trees") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto g = make_random_tree(4, 1, 3, 0.5, 2.0, seed);
    CHECK(g.edges().size() == g.size() - 1);
    CHECK(g.connected());
    for (const auto& e : g.edges()) {
      CHECK(std::abs(g.depth(e.u) - g.depth(e.v)) == 1);
      CHECK(e.w >= 0.5);
      CHECK(e.w <= 2.0);
    }
    for (VertexId v = 1; v < g.size(); ++v) CHECK(g.depth(v - 1) <= g.depth(v));
  }
  CHECK(make_random_tree(4, 1, 3, 0.5, 2.0, 5) == make_random_tree(4, 1, 3, 0.5, 2.0, 5));
}

TEST_CASE("graph validation") {
  CHECK_THROWS_AS(WeightedGraph(2, {{0, 1, -1.0}}, {0, 0}), InvalidArgument);
  CHECK_THROWS_AS(WeightedGraph(2, {{0, 1, 0.0}}, {0, 0}), InvalidArgument);
  CHECK_THROWS_AS(WeightedGraph(2, {{1, 1, 1.0}}, {0, 0}), InvalidArgument);
  CHECK_THROWS_AS(WeightedGraph(2, {{0, 1, 1.0}, {1, 0, 1.0}}, {0, 0}), InvalidArgument);
  CHECK_THROWS_AS(WeightedGraph(2, {{0, 2, 1.0}}, {0, 0}), InvalidArgument);
  CHECK_THROWS_AS(WeightedGraph(2, {}, {0}), InvalidArgument);
  // edge skipping a layer
  CHECK_THROWS_AS(WeightedGraph(3, {{0, 1, 1.0}, {0, 2, 1.0}}, {0, 0, 0}, std::vector<int>{0, 1, 2}),
                  InvalidArgument);
  CHECK_THROWS_AS(WeightedGraph(2, {{0, 1, 1.0}}, {0, 0}, std::nullopt, VertexId{5}),
                  InvalidArgument);
}

TEST_CASE("json round trip is lossless") {
  std::vector<WeightedGraph> graphs{make_comb(6), make_waterfall(4), make_hypercube(5),
                                    make_random_tree(3, 1, 3, 0.5, 2.0, 3),
                                    WeightedGraph(3, {{0, 1, 0.1}, {1, 2, 1e-7}}, {2, 1, 0})};
  for (const auto& g : graphs) CHECK(graph_from_json(graph_to_json(g)) == g);

  auto path = std::filesystem::temp_directory_path() / "ssmc_graph_roundtrip.json";
  save_graph(graphs[3], path);
  CHECK(load_graph(path) == graphs[3]);
  std::filesystem::remove(path);
}

TEST_CASE("json rejects malformed graphs") {
  CHECK_THROWS_AS(graph_from_json("{"), InvalidArgument);
  CHECK_THROWS_AS(graph_from_json(R"({"edges":[]})"), InvalidArgument);
  CHECK_THROWS_AS(graph_from_json(R"({"vertices":[{"id":0,"height":0},{"id":2,"height":0}],
                                      "edges":[]})"),
                  InvalidArgument);
  CHECK_THROWS_AS(graph_from_json(R"({"vertices":[{"id":0,"height":0},{"id":1,"height":0}],
                                      "edges":[{"u":0,"v":1,"w":-2}]})"),
                  InvalidArgument);
  CHECK_THROWS_AS(load_graph("/nonexistent/graph.json"), Error);
}
