#include "wavegcn/matching.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "wavegcn/error.hpp"
#include "wavegcn/rng.hpp"

namespace wgc {

std::vector<double> edge_dissimilarity(const Graph& g, const FeatureMatrix& f) {
  if (f.rows() != g.node_count()) {
    throw DimensionError("edge_dissimilarity: feature rows (" + std::to_string(f.rows()) +
                         ") != node count (" + std::to_string(g.node_count()) + ")");
  }
  std::vector<double> w;
  w.reserve(g.edge_count());
  for (const Edge& e : g.edges()) {
    const auto a = f.row(e.u);
    const auto b = f.row(e.v);
    double s = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) {
      const double d = a[c] - b[c];
      s += d * d;
    }
    w.push_back(std::sqrt(s));
  }
  return w;
}

PairGraph greedy_match(const Graph& g, const std::vector<double>& weights, std::uint64_t seed) {
  const auto edges = g.edges();
  if (weights.size() != edges.size()) {
    throw DimensionError("greedy_match: " + std::to_string(weights.size()) + " weights for " +
                         std::to_string(edges.size()) + " edges");
  }
  const std::size_t n = g.node_count();

  std::vector<std::size_t> order(edges.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Edges are already in (u, v) order, so a stable sort on weight alone
  // gives the (weight, u, v) scan order.
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return weights[a] < weights[b]; });

  constexpr NodeId kFree = UINT32_MAX;
  std::vector<NodeId> mate(n, kFree);
  PairGraph pg;
  pg.node_count = n;
  for (std::size_t idx : order) {
    const Edge& e = edges[idx];
    if (mate[e.u] == kFree && mate[e.v] == kFree) {
      mate[e.u] = e.v;
      mate[e.v] = e.u;
      pg.pairs.push_back({e.u, e.v});
    }
  }

  std::vector<NodeId> leftover;
  for (std::size_t i = 0; i < n; ++i) {
    if (mate[i] == kFree) leftover.push_back(static_cast<NodeId>(i));
  }
  pg.unmatched_before_random = leftover.size();
  Rng rng(seed);
  rng.shuffle(std::span<NodeId>(leftover));
  for (std::size_t k = 0; k + 1 < leftover.size(); k += 2) {
    const NodeId a = leftover[k];
    const NodeId b = leftover[k + 1];
    pg.pairs.push_back({std::min(a, b), std::max(a, b)});
  }
  if (leftover.size() % 2 == 1) pg.orphan = leftover.back();

  const std::size_t unmatched = pg.unmatched_before_random;
  pg = make_pair_graph(n, std::move(pg.pairs), pg.orphan);
  pg.unmatched_before_random = unmatched;
  return pg;
}

PairGraph make_pair_graph(std::size_t node_count, std::vector<PairGraph::Pair> pairs,
                          std::optional<NodeId> orphan) {
  PairGraph pg;
  pg.node_count = node_count;
  for (auto& p : pairs) {
    if (p.first > p.second) std::swap(p.first, p.second);
  }
  std::sort(pairs.begin(), pairs.end());
  pg.pairs = std::move(pairs);
  pg.orphan = orphan;

  if (pg.pairs.size() != node_count / 2 || orphan.has_value() != (node_count % 2 == 1)) {
    throw DataError("pair graph: " + std::to_string(pg.pairs.size()) + " pairs" +
                    (orphan ? " and an orphan" : "") + " cannot cover " +
                    std::to_string(node_count) + " nodes");
  }
  constexpr NodeId kUnset = UINT32_MAX;
  pg.parent.assign(node_count, kUnset);
  auto assign = [&](NodeId node, std::size_t coarse) {
    if (node >= node_count) throw DataError("pair graph: node " + std::to_string(node) + " out of range");
    if (pg.parent[node] != kUnset) {
      throw DataError("pair graph: node " + std::to_string(node) + " appears twice");
    }
    pg.parent[node] = static_cast<NodeId>(coarse);
  };
  for (std::size_t k = 0; k < pg.pairs.size(); ++k) {
    if (pg.pairs[k].first == pg.pairs[k].second) {
      throw DataError("pair graph: node " + std::to_string(pg.pairs[k].first) + " paired with itself");
    }
    assign(pg.pairs[k].first, k);
    assign(pg.pairs[k].second, k);
  }
  if (orphan) assign(*orphan, pg.pairs.size());
  return pg;
}

Graph coarsen_graph(const Graph& g, const PairGraph& pg) {
  if (pg.node_count != g.node_count() || pg.parent.size() != g.node_count()) {
    throw DimensionError("coarsen_graph: pair graph does not belong to this graph");
  }
  std::vector<Edge> coarse;
  coarse.reserve(g.edge_count());
  for (const Edge& e : g.edges()) {
    const NodeId a = pg.parent[e.u];
    const NodeId b = pg.parent[e.v];
    if (a == b) continue;
    coarse.push_back({std::min(a, b), std::max(a, b)});
  }
  std::sort(coarse.begin(), coarse.end());
  coarse.erase(std::unique(coarse.begin(), coarse.end()), coarse.end());
  return Graph(pg.coarse_count(), std::move(coarse));
}

}  // namespace wgc
