#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <sstream>

#include "support.hpp"
#include "wavegcn/error.hpp"
#include "wavegcn/graph.hpp"
#include "wavegcn/io.hpp"

using namespace wgc;

namespace {

Graph parse(const std::string& text) {
  std::istringstream in(text);
  return parse_graph(in);
}

std::string parse_error(const std::string& text) {
  try {
    parse(text);
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("smallest graph") {
  const Graph g = parse("2 1\n0 1");
  CHECK(g.node_count() == 2);
  REQUIRE(g.edge_count() == 1);
  CHECK(g.edges()[0] == Edge{0, 1});
}

TEST_CASE("triangle") {
  const Graph g = parse("3 3\n0 1\n1 2\n0 2\n");
  CHECK(g.edge_count() == 3);
  for (NodeId i = 0; i < 3; ++i) CHECK(g.degree(i) == 2);
  CHECK(g.has_edge(2, 0));
}

TEST_CASE("self-loop is reported with its line") {
  CHECK(parse_error("3 2\n0 0\n1 2") == "self-loop at line 2");
}

TEST_CASE("other parse errors name the line") {
  CHECK(parse_error("3 2\n0 1\n1 0\n") == "duplicate edge at line 3");
  CHECK(parse_error("3 1\n0 3\n") == "node id out of range at line 2");
  CHECK(parse_error("3 2\n0 1\n") == "expected 2 edges, file ended at line 2");
  CHECK(parse_error("3\n") == "malformed header (expected \"n m\") at line 1");
  CHECK(parse_error("3 1\n0 x\n") == "malformed edge (expected \"u v\") at line 2");
  CHECK(parse_error("") == "graph file is empty");
}

TEST_CASE("constructor rejects invalid edges") {
  CHECK_THROWS_AS(Graph(3, {{1, 1}}), DataError);
  CHECK_THROWS_AS(Graph(3, {{0, 1}, {1, 0}}), DataError);
  CHECK_THROWS_AS(Graph(3, {{0, 5}}), DataError);
}

TEST_CASE("adjacency is symmetric and sorted") {
  Rng rng(3);
  const Graph g = test::random_graph(30, 0.2, rng);
  for (NodeId i = 0; i < 30; ++i) {
    const auto adj = g.neighbors(i);
    CHECK(std::is_sorted(adj.begin(), adj.end()));
    for (NodeId j : adj) CHECK(g.has_edge(j, i));
  }
}

TEST_CASE("graph text round trip") {
  Rng rng(4);
  const Graph g = test::random_graph(20, 0.3, rng);
  std::ostringstream out;
  write_graph(out, g);
  CHECK(parse(out.str()) == g);
}

TEST_CASE("component count") {
  CHECK(Graph(4, {{0, 1}, {2, 3}}).component_count() == 2);
  CHECK(Graph(3, {}).component_count() == 3);
  CHECK(test::path_graph(6).component_count() == 1);
}

TEST_CASE("knn on collinear points") {
  const Matrix pts = Matrix::from_rows({{0.0}, {1.0}, {10.0}});
  const Graph g = knn_graph(pts, 1);
  REQUIRE(g.edge_count() == 2);
  CHECK(g.has_edge(0, 1));
  CHECK(g.has_edge(1, 2));
}

TEST_CASE("knn with k = n-1 is complete") {
  Rng rng(5);
  const Graph g = knn_graph(test::random_matrix(7, 3, rng), 6);
  CHECK(g.edge_count() == 21);
}

TEST_CASE("knn ties go to the lower index") {
  const Matrix pts = Matrix::from_rows({{0.0}, {0.0}, {0.0}, {5.0}});
  const Graph g = knn_graph(pts, 1);
  // 0 picks 1, 1 picks 0, 2 picks 0, 3 picks 0.
  CHECK(g.has_edge(0, 1));
  CHECK(g.has_edge(0, 2));
  CHECK(g.has_edge(0, 3));
  CHECK(g.edge_count() == 3);
}

TEST_CASE("knn matches a brute-force oracle") {
  Rng rng(6);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t n = 25;
    const std::size_t k = 4;
    const Matrix pts = test::random_matrix(n, 3, rng);
    std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::pair<double, std::size_t>> d;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        double s = 0.0;
        for (std::size_t c = 0; c < 3; ++c) s += (pts(i, c) - pts(j, c)) * (pts(i, c) - pts(j, c));
        d.push_back({s, j});
      }
      std::sort(d.begin(), d.end());
      for (std::size_t t = 0; t < k; ++t) adj[i][d[t].second] = adj[d[t].second][i] = true;
    }
    const Graph g = knn_graph(pts, k);
    std::size_t expected = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        expected += adj[i][j] ? 1 : 0;
        CHECK(g.has_edge(static_cast<NodeId>(i), static_cast<NodeId>(j)) == adj[i][j]);
      }
    }
    CHECK(g.edge_count() == expected);
    CHECK(knn_graph(pts, k) == g);
  }
}

TEST_CASE("knn rejects k outside (0, n)") {
  Rng rng(7);
  const Matrix pts = test::random_matrix(5, 2, rng);
  CHECK_THROWS_AS(knn_graph(pts, 5), DomainError);
  CHECK_THROWS_AS(knn_graph(pts, 0), DomainError);
}

TEST_CASE("propagation on tiny graphs") {
  const Matrix single = gcn_propagation(Graph(1, {})).to_dense();
  CHECK(single == Matrix(1, 1, 1.0));
  const Matrix pair = gcn_propagation(Graph(2, {{0, 1}})).to_dense();
  CHECK(pair == Matrix(2, 2, 0.5));
}

TEST_CASE("propagation preserves constants on regular graphs") {
  for (std::size_t n : {3u, 5u, 12u}) {
    const PropagationMatrix p = gcn_propagation(test::ring_graph(n));
    const Matrix out = p.apply(Matrix(n, 2, 3.0));
    CHECK(max_abs_diff(out, Matrix(n, 2, 3.0)) <= 1e-14);
  }
}

TEST_CASE("propagation is exactly symmetric with the graph pattern") {
  Rng rng(8);
  const Graph g = test::random_graph(20, 0.25, rng);
  const Matrix p = gcn_propagation(g).to_dense();
  for (std::size_t i = 0; i < 20; ++i) {
    for (std::size_t j = 0; j < 20; ++j) {
      CHECK(p(i, j) == p(j, i));
      const bool pattern = i == j || g.has_edge(static_cast<NodeId>(i), static_cast<NodeId>(j));
      CHECK((p(i, j) != 0.0) == pattern);
    }
  }
}

TEST_CASE("propagation spectrum lies in [-1, 1]") {
  Rng rng(9);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 1 + rng.below(12);
    const Graph g = test::random_graph(n, rng.uniform(), rng);
    const Matrix p = gcn_propagation(g).to_dense();
    Eigen::MatrixXd dense(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) dense(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = p(i, j);
    }
    const Eigen::VectorXd eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(dense).eigenvalues();
    CHECK(eig.minCoeff() >= -1.0 - 1e-12);
    CHECK(eig.maxCoeff() <= 1.0 + 1e-12);
  }
}
