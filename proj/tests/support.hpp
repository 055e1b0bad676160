#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "wavegcn/graph.hpp"
#include "wavegcn/matrix.hpp"
#include "wavegcn/rng.hpp"

namespace wgc::test {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = scale * rng.normal();
  return m;
}

inline Matrix random_nonnegative(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform();
  return m;
}

// Erdos-Renyi graph with a spanning path so it is connected.
inline Graph random_connected_graph(std::size_t n, double p, Rng& rng) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || rng.uniform() < p) edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>(j)});
    }
  }
  return Graph(n, std::move(edges));
}

inline Graph random_graph(std::size_t n, double p, Rng& rng) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (rng.uniform() < p) edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>(j)});
    }
  }
  return Graph(n, std::move(edges));
}

inline Graph path_graph(std::size_t n) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i + 1 < n; ++i) edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>(i + 1)});
  return Graph(n, std::move(edges));
}

inline Graph ring_graph(std::size_t n) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>((i + 1) % n)});
  return Graph(n, std::move(edges));
}

inline Graph complete_graph(std::size_t n) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>(j)});
  }
  return Graph(n, std::move(edges));
}

// Largest entry-wise relative difference, with an absolute floor.
inline double relative_error(double analytic, double numeric, double floor = 1e-8) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

}  // namespace wgc::test
