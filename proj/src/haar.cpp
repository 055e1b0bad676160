#include "wavegcn/haar.hpp"

#include <algorithm>
#include <string>

#include "wavegcn/error.hpp"
#include "wavegcn/rng.hpp"

namespace wgc {

namespace {

// Averages of one level, pair rows first and the orphan last.
Matrix coarse_average(const PairGraph& pg, const Matrix& fine) {
  Matrix coarse(pg.coarse_count(), fine.cols());
  for (std::size_t k = 0; k < pg.pairs.size(); ++k) {
    const auto a = fine.row(pg.pairs[k].first);
    const auto b = fine.row(pg.pairs[k].second);
    auto dst = coarse.row(k);
    for (std::size_t c = 0; c < dst.size(); ++c) dst[c] = (a[c] + b[c]) * kInvSqrt2;
  }
  if (pg.orphan) {
    const auto src = fine.row(*pg.orphan);
    std::copy(src.begin(), src.end(), coarse.row(pg.pairs.size()).begin());
  }
  return coarse;
}

}  // namespace

HaarHierarchy::HaarHierarchy(std::size_t node_count, std::vector<HaarLevel> levels)
    : node_count_(node_count), levels_(std::move(levels)) {
  std::size_t expected = node_count;
  std::size_t offset = 0;
  for (std::size_t l = 0; l < levels_.size(); ++l) {
    const HaarLevel& level = levels_[l];
    if (level.fine_count() != expected || level.pair_graph.parent.size() != expected) {
      throw DataError("haar level " + std::to_string(l + 1) + " expects " +
                      std::to_string(level.fine_count()) + " nodes, previous level provides " +
                      std::to_string(expected));
    }
    detail_offsets_.push_back(offset);
    offset += level.detail_count();
    expected = level.coarse_count();
  }
  average_offset_ = offset;
}

HaarHierarchy build_hierarchy(const Graph& g, const FeatureMatrix& f, int levels, std::uint64_t seed) {
  if (levels < 1) throw DomainError("build_hierarchy: level count must be >= 1");
  if (f.rows() != g.node_count()) {
    throw DimensionError("build_hierarchy: feature rows (" + std::to_string(f.rows()) +
                         ") != node count (" + std::to_string(g.node_count()) + ")");
  }
  std::vector<HaarLevel> built;
  Graph graph = g;
  Matrix features = f;
  for (int l = 0; l < levels && graph.node_count() > 1; ++l) {
    const auto weights = edge_dissimilarity(graph, features);
    PairGraph pg = greedy_match(graph, weights, mix_seed(seed, static_cast<std::uint64_t>(l)));
    Graph coarse = coarsen_graph(graph, pg);
    features = coarse_average(pg, features);
    graph = coarse;
    built.push_back({std::move(pg), std::move(coarse)});
  }
  return HaarHierarchy(g.node_count(), std::move(built));
}

Matrix haar_forward(const HaarHierarchy& h, const FeatureMatrix& f) {
  if (f.rows() != h.node_count()) {
    throw DimensionError("haar_forward: signal has " + std::to_string(f.rows()) +
                         " rows, hierarchy has " + std::to_string(h.node_count()) + " nodes");
  }
  Matrix p(f.rows(), f.cols());
  Matrix current = f;
  for (std::size_t l = 0; l < h.level_count(); ++l) {
    const PairGraph& pg = h.levels()[l].pair_graph;
    const std::size_t offset = h.detail_offset(l);
    for (std::size_t k = 0; k < pg.pairs.size(); ++k) {
      const auto a = current.row(pg.pairs[k].first);
      const auto b = current.row(pg.pairs[k].second);
      auto dst = p.row(offset + k);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] = (a[c] - b[c]) * kInvSqrt2;
    }
    current = coarse_average(pg, current);
  }
  for (std::size_t r = 0; r < current.rows(); ++r) {
    const auto src = current.row(r);
    std::copy(src.begin(), src.end(), p.row(h.average_offset() + r).begin());
  }
  return p;
}

FeatureMatrix haar_inverse(const HaarHierarchy& h, const Matrix& p) {
  if (p.rows() != h.node_count()) {
    throw DimensionError("haar_inverse: coefficients have " + std::to_string(p.rows()) +
                         " rows, hierarchy has " + std::to_string(h.node_count()) + " nodes");
  }
  Matrix current(h.average_count(), p.cols());
  for (std::size_t r = 0; r < current.rows(); ++r) {
    const auto src = p.row(h.average_offset() + r);
    std::copy(src.begin(), src.end(), current.row(r).begin());
  }
  for (std::size_t l = h.level_count(); l-- > 0;) {
    const PairGraph& pg = h.levels()[l].pair_graph;
    const std::size_t offset = h.detail_offset(l);
    Matrix fine(pg.node_count, p.cols());
    for (std::size_t k = 0; k < pg.pairs.size(); ++k) {
      const auto avg = current.row(k);
      const auto det = p.row(offset + k);
      auto a = fine.row(pg.pairs[k].first);
      auto b = fine.row(pg.pairs[k].second);
      for (std::size_t c = 0; c < avg.size(); ++c) {
        a[c] = (avg[c] + det[c]) * kInvSqrt2;
        b[c] = (avg[c] - det[c]) * kInvSqrt2;
      }
    }
    if (pg.orphan) {
      const auto src = current.row(pg.pairs.size());
      std::copy(src.begin(), src.end(), fine.row(*pg.orphan).begin());
    }
    current = std::move(fine);
  }
  return current;
}

}  // namespace wgc
