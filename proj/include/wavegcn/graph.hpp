#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "wavegcn/matrix.hpp"

namespace wgc {

using NodeId = std::uint32_t;

// Undirected edge stored with u < v.
struct Edge {
  NodeId u = 0;
  NodeId v = 0;

  auto operator<=>(const Edge&) const = default;
};

// Immutable undirected simple graph. Edges are kept sorted and normalized
// to u < v; each node's neighbor list is sorted ascending.
class Graph {
 public:
  Graph() = default;

  // Throws DataError on self-loops, duplicate edges or out-of-range ids.
  // Edge orientation is normalized, so (1,0) and (0,1) are the same edge.
  Graph(std::size_t node_count, std::vector<Edge> edges);

  std::size_t node_count() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t edge_count() const { return edges_.size(); }
  std::span<const Edge> edges() const { return edges_; }

  std::span<const NodeId> neighbors(NodeId i) const {
    return {neighbors_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  std::size_t degree(NodeId i) const { return offsets_[i + 1] - offsets_[i]; }

  bool has_edge(NodeId a, NodeId b) const;

  // Number of connected components (isolated nodes count as components).
  std::size_t component_count() const;

  bool operator==(const Graph& other) const {
    return node_count() == other.node_count() && edges_ == other.edges_;
  }

 private:
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_{0};
  std::vector<NodeId> neighbors_;
};

// Parses the graph text format: "n m" followed by m lines "u v".
// Errors carry the 1-based line number.
Graph parse_graph(std::istream& in);
Graph load_graph(const std::filesystem::path& path);
void write_graph(std::ostream& out, const Graph& g);

// k nearest neighbours by Euclidean distance over full feature rows,
// symmetrized by union. Distance ties go to the lower index.
Graph knn_graph(const FeatureMatrix& points, std::size_t k);

// Symmetric sparse matrix in CSR form.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(std::size_t n, std::vector<std::size_t> row_offsets, std::vector<NodeId> columns,
               std::vector<double> values);

  std::size_t size() const { return row_offsets_.empty() ? 0 : row_offsets_.size() - 1; }
  std::span<const NodeId> row_columns(std::size_t r) const {
    return {columns_.data() + row_offsets_[r], row_offsets_[r + 1] - row_offsets_[r]};
  }
  std::span<const double> row_values(std::size_t r) const {
    return {values_.data() + row_offsets_[r], row_offsets_[r + 1] - row_offsets_[r]};
  }

  // Entry lookup; 0 for entries outside the pattern.
  double at(std::size_t r, std::size_t c) const;

  Matrix apply(const Matrix& f) const;
  Matrix to_dense() const;

 private:
  std::vector<std::size_t> row_offsets_{0};
  std::vector<NodeId> columns_;
  std::vector<double> values_;
};

using PropagationMatrix = SparseMatrix;

// D^{-1/2} (A + I) D^{-1/2} with D the degree matrix of A + I.
PropagationMatrix gcn_propagation(const Graph& g);

}  // namespace wgc
