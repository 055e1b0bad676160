#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "haar_oracle.hpp"
#include "support.hpp"
#include "wavegcn/error.hpp"
#include "wavegcn/haar.hpp"

using namespace wgc;

namespace {

HaarHierarchy random_hierarchy(std::size_t n, int levels, Rng& rng, Matrix* features = nullptr) {
  const Graph g = test::random_connected_graph(n, 0.3, rng);
  Matrix f = test::random_matrix(n, 3, rng);
  HaarHierarchy h = build_hierarchy(g, f, levels, rng.next());
  if (features) *features = std::move(f);
  return h;
}

}  // namespace

TEST_CASE("surd arithmetic") {
  using test::Surd;
  CHECK(Surd::inv_sqrt2() * Surd::inv_sqrt2() == Surd{1, 0, 1});
  CHECK(Surd::inv_sqrt2() + -Surd::inv_sqrt2() == Surd{});
  CHECK(Surd{1, 0, 1} + Surd{1, 0, 1} == Surd::one());
}

TEST_CASE("single pair by hand") {
  const Graph g(2, {{0, 1}});
  const Matrix f = Matrix::from_rows({{3.0}, {1.0}});
  const HaarHierarchy h = build_hierarchy(g, f, 1, 0);
  const Matrix p = haar_forward(h, f);
  CHECK(p(0, 0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(p(1, 0) == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("constants have zero details") {
  for (int levels = 1; levels <= 4; ++levels) {
    const std::size_t n = std::size_t{1} << levels;
    Rng rng(static_cast<std::uint64_t>(levels));
    const Graph g = test::random_connected_graph(n, 0.4, rng);
    const Matrix f(n, 2, 1.5);
    const HaarHierarchy h = build_hierarchy(g, f, levels, 0);
    const Matrix p = haar_forward(h, f);
    for (std::size_t r = 0; r < h.average_offset(); ++r) {
      CHECK(p(r, 0) == 0.0);
      CHECK(p(r, 1) == 0.0);
    }
    REQUIRE(h.average_count() == 1);
    CHECK(p(n - 1, 0) == doctest::Approx(1.5 * std::pow(2.0, levels / 2.0)).epsilon(1e-14));
  }
}

TEST_CASE("block sizes") {
  Rng rng(1);
  SUBCASE("eight nodes, three levels") {
    const HaarHierarchy h = random_hierarchy(8, 3, rng);
    CHECK(h.detail_offset(0) == 0);
    CHECK(h.detail_offset(1) == 4);
    CHECK(h.detail_offset(2) == 6);
    CHECK(h.average_offset() == 7);
    CHECK(h.average_count() == 1);
  }
  SUBCASE("single node") {
    const Matrix f = Matrix::from_rows({{2.0, -1.0}});
    const HaarHierarchy h = build_hierarchy(Graph(1, {}), f, 3, 0);
    CHECK(h.level_count() == 0);
    CHECK(haar_forward(h, f) == f);
    CHECK(haar_inverse(h, f) == f);
  }
  SUBCASE("five nodes, one level") {
    const HaarHierarchy h = random_hierarchy(5, 1, rng);
    REQUIRE(h.level_count() == 1);
    CHECK(h.levels()[0].detail_count() == 2);
    CHECK(h.levels()[0].pair_graph.orphan.has_value());
    CHECK(h.levels()[0].coarse_count() == 3);
    CHECK(h.average_count() == 3);
  }
  SUBCASE("early termination") {
    const HaarHierarchy h = random_hierarchy(3, 6, rng);
    CHECK(h.level_count() == 2);
    CHECK(h.average_count() == 1);
  }
}

TEST_CASE("level counts follow ceil and floor") {
  Rng rng(2);
  for (std::size_t n = 1; n <= 40; ++n) {
    const HaarHierarchy h = random_hierarchy(n, 3, rng);
    std::size_t details = 0;
    std::size_t fine = n;
    for (const HaarLevel& level : h.levels()) {
      CHECK(level.fine_count() == fine);
      CHECK(level.detail_count() == fine / 2);
      CHECK(level.coarse_count() == (fine + 1) / 2);
      CHECK(level.coarse_graph.node_count() == level.coarse_count());
      details += level.detail_count();
      fine = level.coarse_count();
    }
    CHECK(details + h.average_count() == n);
  }
}

TEST_CASE("forward and inverse equal the dense operator") {
  Rng rng(3);
  for (std::size_t n = 1; n <= 16; ++n) {
    for (int trial = 0; trial < 3; ++trial) {
      const HaarHierarchy h = random_hierarchy(n, 3, rng);
      const Matrix w = test::dense_transform(h);
      const Matrix f = test::random_matrix(n, 4, rng);
      CHECK(max_abs_diff(haar_forward(h, f), matmul(w, f)) <= 1e-12);
      const Matrix p = test::random_matrix(n, 4, rng);
      CHECK(max_abs_diff(haar_inverse(h, p), transposed_matmul(w, p)) <= 1e-12);
    }
  }
}

TEST_CASE("level operators are exactly orthogonal") {
  Rng rng(4);
  for (std::size_t n = 1; n <= 16; ++n) {
    const HaarHierarchy h = random_hierarchy(n, 3, rng);
    for (const HaarLevel& level : h.levels()) {
      const test::LevelOperators ops = test::level_operators(level.pair_graph);
      const auto dt = test::surd_transposed(ops.detail);
      const auto at = test::surd_transposed(ops.average);
      CHECK(test::surd_is_zero(test::surd_product(ops.average, dt)));
      CHECK(test::surd_is_identity(test::surd_product(ops.detail, dt)));
      CHECK(test::surd_is_identity(test::surd_product(ops.average, at)));
      auto sum = test::surd_product(dt, ops.detail);
      const auto ata = test::surd_product(at, ops.average);
      for (std::size_t i = 0; i < sum.size(); ++i) {
        for (std::size_t j = 0; j < sum.size(); ++j) sum[i][j] = sum[i][j] + ata[i][j];
      }
      CHECK(test::surd_is_identity(sum));
    }
    const auto w = test::surd_transform(h);
    CHECK(test::surd_is_identity(test::surd_product(w, test::surd_transposed(w))));
  }
}

TEST_CASE("round trip and Parseval on random inputs") {
  Rng rng(5);
  for (std::size_t n : {7u, 64u, 300u, 1024u}) {
    Matrix f;
    const HaarHierarchy h = random_hierarchy(n, 3, rng);
    f = test::random_matrix(n, 16, rng);
    const Matrix p = haar_forward(h, f);
    CHECK(max_abs_diff(haar_inverse(h, p), f) <= 1e-12);
    CHECK(std::abs(frobenius_norm(p) - frobenius_norm(f)) / frobenius_norm(f) <= 1e-12);
    const Matrix q = test::random_matrix(n, 4, rng);
    CHECK(max_abs_diff(haar_forward(h, haar_inverse(h, q)), q) <= 1e-10);
  }
}

TEST_CASE("unit detail coefficient reconstructs to a signed pair") {
  Rng rng(6);
  const HaarHierarchy h = random_hierarchy(10, 1, rng);
  Matrix p(10, 1);
  p(2, 0) = 1.0;
  const Matrix f = haar_inverse(h, p);
  const auto& pair = h.levels()[0].pair_graph.pairs[2];
  for (std::size_t i = 0; i < 10; ++i) {
    if (i == pair.first) {
      CHECK(f(i, 0) == kInvSqrt2);
    } else if (i == pair.second) {
      CHECK(f(i, 0) == -kInvSqrt2);
    } else {
      CHECK(f(i, 0) == 0.0);
    }
  }
}

TEST_CASE("channels are transformed independently") {
  Rng rng(7);
  Matrix f;
  const HaarHierarchy h = random_hierarchy(37, 3, rng);
  f = test::random_matrix(37, 5, rng);
  const Matrix p = haar_forward(h, f);
  for (std::size_t c = 0; c < 5; ++c) {
    Matrix column(37, 1);
    for (std::size_t r = 0; r < 37; ++r) column(r, 0) = f(r, c);
    const Matrix pc = haar_forward(h, column);
    for (std::size_t r = 0; r < 37; ++r) CHECK(pc(r, 0) == p(r, c));
  }
}

TEST_CASE("piecewise-constant signals give sparse coefficients") {
  // Two cliques of four nodes joined by one edge; constant per clique.
  std::vector<Edge> edges;
  for (NodeId i = 0; i < 4; ++i) {
    for (NodeId j = i + 1; j < 4; ++j) {
      edges.push_back({i, j});
      edges.push_back({static_cast<NodeId>(i + 4), static_cast<NodeId>(j + 4)});
    }
  }
  edges.push_back({3, 4});
  const Graph g(8, edges);
  Matrix f(8, 1);
  for (std::size_t i = 0; i < 8; ++i) f(i, 0) = i < 4 ? 2.0 : -1.0;
  const HaarHierarchy h = build_hierarchy(g, f, 2, 0);
  const Matrix p = haar_forward(h, f);
  for (std::size_t r = 0; r < h.average_offset(); ++r) CHECK(p(r, 0) == 0.0);
}

TEST_CASE("errors") {
  Rng rng(8);
  const Graph g = test::path_graph(4);
  CHECK_THROWS_AS(build_hierarchy(g, test::random_matrix(4, 1, rng), 0, 0), DomainError);
  CHECK_THROWS_AS(build_hierarchy(g, test::random_matrix(5, 1, rng), 2, 0), DimensionError);
  const HaarHierarchy h = build_hierarchy(g, test::random_matrix(4, 1, rng), 2, 0);
  CHECK_THROWS_AS(haar_forward(h, test::random_matrix(3, 1, rng)), DimensionError);
  CHECK_THROWS_AS(haar_inverse(h, test::random_matrix(5, 1, rng)), DimensionError);
}

TEST_CASE("hierarchy construction validates level chaining") {
  const PairGraph a = make_pair_graph(4, {{0, 1}, {2, 3}}, std::nullopt);
  const PairGraph b = make_pair_graph(3, {{0, 1}}, NodeId{2});
  CHECK_THROWS_AS(HaarHierarchy(4, {HaarLevel{a, Graph(2, {})}, HaarLevel{b, Graph(2, {})}}), DataError);
  CHECK_NOTHROW(HaarHierarchy(4, {HaarLevel{a, Graph(2, {})}}));
}

TEST_CASE("hierarchy is deterministic in the seed") {
  Rng rng(9);
  const Graph g = test::random_graph(60, 0.05, rng);
  const Matrix f = test::random_matrix(60, 3, rng);
  const HaarHierarchy a = build_hierarchy(g, f, 3, 42);
  const HaarHierarchy b = build_hierarchy(g, f, 3, 42);
  for (std::size_t l = 0; l < a.level_count(); ++l) {
    CHECK(a.levels()[l].pair_graph.pairs == b.levels()[l].pair_graph.pairs);
  }
}
