#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "support.hpp"
#include "wavegcn/error.hpp"
#include "wavegcn/haar.hpp"
#include "wavegcn/matching.hpp"

using namespace wgc;

namespace {

// Minimum total weight over perfect matchings that use graph edges only;
// infinity when none exists.
double optimal_matching_weight(const Graph& g, const std::vector<double>& w) {
  const std::size_t n = g.node_count();
  std::vector<std::vector<double>> weight(n, std::vector<double>(n, std::numeric_limits<double>::infinity()));
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    weight[g.edges()[e].u][g.edges()[e].v] = w[e];
    weight[g.edges()[e].v][g.edges()[e].u] = w[e];
  }
  std::vector<bool> used(n, false);
  double best = std::numeric_limits<double>::infinity();
  auto recurse = [&](auto&& self, double acc) -> void {
    std::size_t i = 0;
    while (i < n && used[i]) ++i;
    if (i == n) {
      best = std::min(best, acc);
      return;
    }
    used[i] = true;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (used[j] || !std::isfinite(weight[i][j])) continue;
      used[j] = true;
      self(self, acc + weight[i][j]);
      used[j] = false;
    }
    used[i] = false;
  };
  recurse(recurse, 0.0);
  return best;
}

double matching_weight(const Graph& g, const std::vector<double>& w, const PairGraph& pg) {
  double total = 0.0;
  for (const auto& p : pg.pairs) {
    for (std::size_t e = 0; e < g.edge_count(); ++e) {
      if (g.edges()[e].u == p.first && g.edges()[e].v == p.second) total += w[e];
    }
  }
  return total;
}

void check_valid(const PairGraph& pg, std::size_t n) {
  CHECK(pg.node_count == n);
  CHECK(pg.pairs.size() == n / 2);
  CHECK(pg.orphan.has_value() == (n % 2 == 1));
  std::vector<int> seen(n, 0);
  for (std::size_t k = 0; k < pg.pairs.size(); ++k) {
    const auto& p = pg.pairs[k];
    CHECK(p.first < p.second);
    if (k > 0) CHECK(pg.pairs[k - 1].first < p.first);
    ++seen[p.first];
    ++seen[p.second];
    CHECK(pg.parent[p.first] == k);
    CHECK(pg.parent[p.second] == k);
  }
  if (pg.orphan) {
    ++seen[*pg.orphan];
    CHECK(pg.parent[*pg.orphan] == pg.pairs.size());
  }
  for (int s : seen) CHECK(s == 1);
}

}  // namespace

TEST_CASE("edge dissimilarity") {
  const Graph g(3, {{0, 1}, {1, 2}});
  const Matrix f = Matrix::from_rows({{3.0, 0.0}, {0.0, 4.0}, {0.0, 4.0}});
  const std::vector<double> w = edge_dissimilarity(g, f);
  REQUIRE(w.size() == 2);
  CHECK(w[0] == 5.0);
  CHECK(w[1] == 0.0);
}

TEST_CASE("edge dissimilarity matches per-edge recomputation") {
  Rng rng(1);
  const Graph g = test::random_graph(20, 0.3, rng);
  const Matrix f = test::random_matrix(20, 5, rng);
  const std::vector<double> w = edge_dissimilarity(g, f);
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    double s = 0.0;
    for (std::size_t c = 0; c < 5; ++c) {
      const double d = f(g.edges()[e].u, c) - f(g.edges()[e].v, c);
      s += d * d;
    }
    CHECK(w[e] == doctest::Approx(std::sqrt(s)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(edge_dissimilarity(g, test::random_matrix(19, 5, rng)), DimensionError);
}

TEST_CASE("path of three picks the lighter edge") {
  const PairGraph pg = greedy_match(test::path_graph(3), {1.0, 2.0}, 0);
  REQUIRE(pg.pairs.size() == 1);
  CHECK(pg.pairs[0] == PairGraph::Pair{0, 1});
  CHECK(pg.orphan == NodeId{2});
  CHECK(pg.unmatched_before_random == 1);
}

TEST_CASE("K4 with equal weights uses the lexicographic tie-break") {
  const PairGraph pg = greedy_match(test::complete_graph(4), std::vector<double>(6, 1.0), 0);
  REQUIRE(pg.pairs.size() == 2);
  CHECK(pg.pairs[0] == PairGraph::Pair{0, 1});
  CHECK(pg.pairs[1] == PairGraph::Pair{2, 3});
  CHECK(!pg.orphan);
}

TEST_CASE("leftover nodes are paired even without edges") {
  const Graph g(6, {{0, 1}});
  const PairGraph pg = greedy_match(g, {0.5}, 11);
  check_valid(pg, 6);
  CHECK(pg.unmatched_before_random == 4);
  CHECK(pg.pairs[0] == PairGraph::Pair{0, 1});
}

TEST_CASE("greedy matching is valid and deterministic") {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.below(40);
    const Graph g = test::random_graph(n, 0.2, rng);
    const Matrix f = test::random_matrix(n, 3, rng);
    const std::vector<double> w = edge_dissimilarity(g, f);
    const PairGraph a = greedy_match(g, w, 77);
    check_valid(a, n);
    const PairGraph b = greedy_match(g, w, 77);
    CHECK(a.pairs == b.pairs);
    CHECK(a.orphan == b.orphan);
  }
}

TEST_CASE("greedy weight is bounded below by the optimum") {
  Rng rng(3);
  int compared = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 * (1 + rng.below(4));
    const Graph g = test::random_connected_graph(n, 0.5, rng);
    std::vector<double> w(g.edge_count());
    for (double& x : w) x = rng.uniform();
    const PairGraph pg = greedy_match(g, w, 0);
    if (pg.unmatched_before_random != 0) continue;
    ++compared;
    CHECK(matching_weight(g, w, pg) >= optimal_matching_weight(g, w) - 1e-12);
  }
  CHECK(compared > 50);
}

TEST_CASE("greedy is exact on paths when it finds a perfect matching") {
  Rng rng(4);
  int compared = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 * (1 + rng.below(4));
    const Graph g = test::path_graph(n);
    std::vector<double> w(g.edge_count());
    for (double& x : w) x = rng.uniform();
    const PairGraph pg = greedy_match(g, w, 0);
    if (pg.unmatched_before_random != 0) continue;
    ++compared;
    CHECK(matching_weight(g, w, pg) == doctest::Approx(optimal_matching_weight(g, w)).epsilon(1e-14));
  }
  CHECK(compared > 10);
}

TEST_CASE("piecewise-constant features match within clusters at zero weight") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t half = 2 * (1 + rng.below(2));
    const std::size_t n = 2 * half;
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const bool same = (i < half) == (j < half);
        if ((same && (j == i + 1 || rng.uniform() < 0.5)) || (!same && rng.uniform() < 0.3)) {
          edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>(j)});
        }
      }
    }
    const Graph g(n, edges);
    Matrix f(n, 2);
    for (std::size_t i = 0; i < n; ++i) f(i, 0) = f(i, 1) = i < half ? 1.0 : -2.0;
    const std::vector<double> w = edge_dissimilarity(g, f);
    if (optimal_matching_weight(g, w) != 0.0) continue;
    const PairGraph pg = greedy_match(g, w, 0);
    for (const auto& p : pg.pairs) {
      if (pg.unmatched_before_random == 0) CHECK((p.first < half) == (p.second < half));
    }
  }
}

TEST_CASE("make_pair_graph validates coverage") {
  CHECK_NOTHROW(make_pair_graph(3, {{0, 2}}, NodeId{1}));
  CHECK_THROWS_AS(make_pair_graph(3, {{0, 2}}, std::nullopt), DataError);
  CHECK_THROWS_AS(make_pair_graph(4, {{0, 1}, {1, 2}}, std::nullopt), DataError);
  CHECK_THROWS_AS(make_pair_graph(4, {{0, 0}, {2, 3}}, std::nullopt), DataError);
  const PairGraph pg = make_pair_graph(4, {{3, 2}, {1, 0}}, std::nullopt);
  CHECK(pg.pairs[0] == PairGraph::Pair{0, 1});
  CHECK(pg.pairs[1] == PairGraph::Pair{2, 3});
}

TEST_CASE("coarsening a 4-cycle") {
  const Graph g = test::ring_graph(4);
  const Graph c = coarsen_graph(g, make_pair_graph(4, {{0, 1}, {2, 3}}, std::nullopt));
  CHECK(c.node_count() == 2);
  CHECK(c.edge_count() == 1);
}

TEST_CASE("coarsening inside components keeps the component count") {
  Rng rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    const Graph a = test::random_connected_graph(6, 0.4, rng);
    std::vector<Edge> edges(a.edges().begin(), a.edges().end());
    for (const Edge& e : a.edges()) edges.push_back({e.u + 6, e.v + 6});
    const Graph g(12, edges);
    const PairGraph pg = greedy_match(g, edge_dissimilarity(g, test::random_matrix(12, 2, rng)), 0);
    bool within = true;
    for (const auto& p : pg.pairs) within = within && (p.first < 6) == (p.second < 6);
    if (!within) continue;
    CHECK(coarsen_graph(g, pg).component_count() == g.component_count());
  }
}

TEST_CASE("eight nodes coarsen to 4, 2, 1") {
  Rng rng(7);
  const Graph g = test::ring_graph(8);
  const HaarHierarchy h = build_hierarchy(g, test::random_matrix(8, 3, rng), 3, 0);
  REQUIRE(h.level_count() == 3);
  CHECK(h.levels()[0].coarse_count() == 4);
  CHECK(h.levels()[1].coarse_count() == 2);
  CHECK(h.levels()[2].coarse_count() == 1);
  CHECK(h.levels()[2].coarse_graph.node_count() == 1);
}
