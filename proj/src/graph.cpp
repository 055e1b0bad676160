#include "wavegcn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "wavegcn/error.hpp"

namespace wgc {

Graph::Graph(std::size_t node_count, std::vector<Edge> edges) : edges_(std::move(edges)) {
  for (Edge& e : edges_) {
    if (e.u >= node_count || e.v >= node_count) {
      throw DataError("edge (" + std::to_string(e.u) + "," + std::to_string(e.v) +
                      ") references a node outside [0," + std::to_string(node_count) + ")");
    }
    if (e.u == e.v) throw DataError("self-loop at node " + std::to_string(e.u));
    if (e.u > e.v) std::swap(e.u, e.v);
  }
  std::sort(edges_.begin(), edges_.end());
  const auto dup = std::adjacent_find(edges_.begin(), edges_.end());
  if (dup != edges_.end()) {
    throw DataError("duplicate edge (" + std::to_string(dup->u) + "," + std::to_string(dup->v) + ")");
  }

  std::vector<std::size_t> degree(node_count, 0);
  for (const Edge& e : edges_) {
    ++degree[e.u];
    ++degree[e.v];
  }
  offsets_.assign(node_count + 1, 0);
  for (std::size_t i = 0; i < node_count; ++i) offsets_[i + 1] = offsets_[i] + degree[i];
  neighbors_.resize(offsets_.back());
  std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
  // Edges are sorted by (u, v), so each list fills in ascending order for the
  // u side; the v side needs a sort afterwards.
  for (const Edge& e : edges_) {
    neighbors_[cursor[e.u]++] = e.v;
    neighbors_[cursor[e.v]++] = e.u;
  }
  for (std::size_t i = 0; i < node_count; ++i) {
    std::sort(neighbors_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]),
              neighbors_.begin() + static_cast<std::ptrdiff_t>(offsets_[i + 1]));
  }
}

bool Graph::has_edge(NodeId a, NodeId b) const {
  const auto adj = neighbors(a);
  return std::binary_search(adj.begin(), adj.end(), b);
}

std::size_t Graph::component_count() const {
  const std::size_t n = node_count();
  std::vector<NodeId> parent(n);
  std::iota(parent.begin(), parent.end(), NodeId{0});
  auto find = [&](NodeId x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  std::size_t components = n;
  for (const Edge& e : edges_) {
    const NodeId a = find(e.u);
    const NodeId b = find(e.v);
    if (a != b) {
      parent[std::max(a, b)] = std::min(a, b);
      --components;
    }
  }
  return components;
}

Graph parse_graph(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };
  auto fail = [&](const std::string& what) -> DataError {
    return DataError(what + " at line " + std::to_string(line_no));
  };

  if (!next_line()) throw DataError("graph file is empty");
  long long n = -1;
  long long m = -1;
  {
    std::istringstream header(line);
    std::string extra;
    if (!(header >> n >> m) || (header >> extra) || n < 0 || m < 0) {
      throw fail("malformed header (expected \"n m\")");
    }
  }

  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(m));
  std::vector<std::size_t> edge_line;
  for (long long k = 0; k < m; ++k) {
    if (!next_line()) throw fail("expected " + std::to_string(m) + " edges, file ended");
    std::istringstream row(line);
    long long u = -1;
    long long v = -1;
    std::string extra;
    if (!(row >> u >> v) || (row >> extra)) throw fail("malformed edge (expected \"u v\")");
    if (u < 0 || v < 0 || u >= n || v >= n) throw fail("node id out of range");
    if (u == v) throw fail("self-loop");
    edges.push_back({static_cast<NodeId>(std::min(u, v)), static_cast<NodeId>(std::max(u, v))});
    edge_line.push_back(line_no);
  }
  if (next_line()) throw fail("unexpected trailing content");

  // Report the first repeated edge with the line it occurs on.
  std::vector<std::size_t> order(edges.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return edges[a] < edges[b]; });
  std::size_t dup_line = 0;
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (edges[order[k]] == edges[order[k - 1]]) {
      const std::size_t l = edge_line[order[k]];
      if (dup_line == 0 || l < dup_line) dup_line = l;
    }
  }
  if (dup_line != 0) throw DataError("duplicate edge at line " + std::to_string(dup_line));

  return Graph(static_cast<std::size_t>(n), std::move(edges));
}

Graph load_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open graph file " + path.string());
  return parse_graph(in);
}

void write_graph(std::ostream& out, const Graph& g) {
  out << g.node_count() << ' ' << g.edge_count() << '\n';
  for (const Edge& e : g.edges()) out << e.u << ' ' << e.v << '\n';
}

Graph knn_graph(const FeatureMatrix& points, std::size_t k) {
  const std::size_t n = points.rows();
  if (k == 0 || k >= n) {
    throw DomainError("knn_graph: k must satisfy 0 < k < n (k=" + std::to_string(k) +
                      ", n=" + std::to_string(n) + ")");
  }
  if (!all_finite(points)) throw DataError("knn_graph: non-finite point coordinates");

  std::vector<Edge> edges;
  edges.reserve(n * k);
  std::vector<std::pair<double, NodeId>> candidates(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto pi = points.row(i);
    std::size_t slot = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto pj = points.row(j);
      double d2 = 0.0;
      for (std::size_t c = 0; c < pi.size(); ++c) {
        const double d = pi[c] - pj[c];
        d2 += d * d;
      }
      candidates[slot++] = {d2, static_cast<NodeId>(j)};
    }
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k),
                      candidates.end());
    for (std::size_t r = 0; r < k; ++r) {
      const NodeId j = candidates[r].second;
      edges.push_back({static_cast<NodeId>(std::min<std::size_t>(i, j)),
                       static_cast<NodeId>(std::max<std::size_t>(i, j))});
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return Graph(n, std::move(edges));
}

SparseMatrix::SparseMatrix(std::size_t n, std::vector<std::size_t> row_offsets,
                           std::vector<NodeId> columns, std::vector<double> values)
    : row_offsets_(std::move(row_offsets)), columns_(std::move(columns)), values_(std::move(values)) {
  if (row_offsets_.size() != n + 1 || columns_.size() != values_.size() ||
      row_offsets_.back() != columns_.size()) {
    throw DimensionError("SparseMatrix: inconsistent CSR arrays");
  }
}

double SparseMatrix::at(std::size_t r, std::size_t c) const {
  const auto cols = row_columns(r);
  const auto it = std::lower_bound(cols.begin(), cols.end(), c);
  if (it == cols.end() || *it != c) return 0.0;
  return row_values(r)[static_cast<std::size_t>(it - cols.begin())];
}

Matrix SparseMatrix::apply(const Matrix& f) const {
  if (f.rows() != size()) throw DimensionError("SparseMatrix::apply: row count mismatch");
  Matrix out(f.rows(), f.cols());
  for (std::size_t r = 0; r < size(); ++r) {
    auto dst = out.row(r);
    const auto cols = row_columns(r);
    const auto vals = row_values(r);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const auto src = f.row(cols[k]);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += vals[k] * src[c];
    }
  }
  return out;
}

Matrix SparseMatrix::to_dense() const {
  Matrix out(size(), size());
  for (std::size_t r = 0; r < size(); ++r) {
    const auto cols = row_columns(r);
    const auto vals = row_values(r);
    for (std::size_t k = 0; k < cols.size(); ++k) out(r, cols[k]) = vals[k];
  }
  return out;
}

PropagationMatrix gcn_propagation(const Graph& g) {
  const std::size_t n = g.node_count();
  std::vector<double> self_loop_degree(n);
  for (std::size_t i = 0; i < n; ++i) {
    self_loop_degree[i] = static_cast<double>(g.degree(static_cast<NodeId>(i)) + 1);
  }

  std::vector<std::size_t> offsets(n + 1, 0);
  std::vector<NodeId> columns;
  std::vector<double> values;
  columns.reserve(2 * g.edge_count() + n);
  values.reserve(2 * g.edge_count() + n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto adj = g.neighbors(static_cast<NodeId>(i));
    bool diagonal_done = false;
    auto push = [&](std::size_t j) {
      columns.push_back(static_cast<NodeId>(j));
      // The product is commutative, so (i,j) and (j,i) come out bit-equal.
      values.push_back(1.0 / std::sqrt(self_loop_degree[i] * self_loop_degree[j]));
    };
    for (NodeId j : adj) {
      if (!diagonal_done && j > i) {
        push(i);
        diagonal_done = true;
      }
      push(j);
    }
    if (!diagonal_done) push(i);
    offsets[i + 1] = columns.size();
  }
  return PropagationMatrix(n, std::move(offsets), std::move(columns), std::move(values));
}

}  // namespace wgc
