#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "wavegcn/graph.hpp"
#include "wavegcn/matrix.hpp"

namespace wgc {

// A near-perfect matching of the nodes of one graph level. Every node is in
// exactly one pair, except a single orphan when the node count is odd.
struct PairGraph {
  struct Pair {
    NodeId first = 0;   // first < second
    NodeId second = 0;
    auto operator<=>(const Pair&) const = default;
  };

  std::size_t node_count = 0;
  std::vector<Pair> pairs;          // sorted by first
  std::optional<NodeId> orphan;
  std::vector<NodeId> parent;       // node -> coarse index; pair k -> k, orphan -> pairs.size()
  // Nodes left unmatched by the greedy edge pass before random pairing.
  std::size_t unmatched_before_random = 0;

  std::size_t coarse_count() const { return pairs.size() + (orphan ? 1 : 0); }
};

// Per-edge weights w_ij = ||f_i - f_j||_2, aligned with g.edges().
std::vector<double> edge_dissimilarity(const Graph& g, const FeatureMatrix& f);

// Greedy minimum-weight matching: edges scanned by ascending (weight, u, v),
// accepted when both ends are free. Nodes left over are paired uniformly at
// random among themselves (adjacency ignored); an odd leftover is the orphan.
PairGraph greedy_match(const Graph& g, const std::vector<double>& weights, std::uint64_t seed);

// Builds a PairGraph from explicit pairs, validating that every node of
// [0, node_count) is covered exactly once. Pairs are normalized and sorted.
PairGraph make_pair_graph(std::size_t node_count, std::vector<PairGraph::Pair> pairs,
                          std::optional<NodeId> orphan);

// Contracts each pair (and the orphan) into one coarse node. Coarse nodes are
// adjacent when any fine edge joins their members.
Graph coarsen_graph(const Graph& g, const PairGraph& pg);

}  // namespace wgc
