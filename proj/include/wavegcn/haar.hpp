#pragma once

#include <cstdint>
#include <vector>

#include "wavegcn/graph.hpp"
#include "wavegcn/matching.hpp"
#include "wavegcn/matrix.hpp"

namespace wgc {

inline constexpr int kDefaultLevels = 3;

// 1/sqrt(2), the only multiplicative constant of the transform.
inline constexpr double kInvSqrt2 = 0.70710678118654752440;

// One level of the graph Haar transform: per pair (i, j) a detail row
// (f_i - f_j)/sqrt(2) and an average row (f_i + f_j)/sqrt(2). The orphan of
// an odd level is copied to the coarse level unchanged.
struct HaarLevel {
  PairGraph pair_graph;
  Graph coarse_graph;

  std::size_t fine_count() const { return pair_graph.node_count; }
  std::size_t coarse_count() const { return pair_graph.coarse_count(); }
  std::size_t detail_count() const { return pair_graph.pairs.size(); }
};

// Multi-level transform. Coefficient rows are laid out as
// [details of level 1, ..., details of level L, final averages].
class HaarHierarchy {
 public:
  HaarHierarchy() = default;
  // levels[l].fine_count() must equal levels[l-1].coarse_count().
  HaarHierarchy(std::size_t node_count, std::vector<HaarLevel> levels);

  std::size_t node_count() const { return node_count_; }
  std::size_t level_count() const { return levels_.size(); }
  const std::vector<HaarLevel>& levels() const { return levels_; }

  std::size_t detail_offset(std::size_t level) const { return detail_offsets_[level]; }
  std::size_t average_offset() const { return average_offset_; }
  std::size_t average_count() const { return node_count_ - average_offset_; }

 private:
  std::size_t node_count_ = 0;
  std::vector<HaarLevel> levels_;
  std::vector<std::size_t> detail_offsets_;
  std::size_t average_offset_ = 0;
};

// Builds up to `levels` levels. Level l matches the coarse graph of level
// l-1 using dissimilarities of the averaged features at that level. Stops
// early once a level has a single node. Throws DomainError for levels < 1.
HaarHierarchy build_hierarchy(const Graph& g, const FeatureMatrix& f, int levels, std::uint64_t seed);

// p = W f.
Matrix haar_forward(const HaarHierarchy& h, const FeatureMatrix& f);
// f = W^T p.
FeatureMatrix haar_inverse(const HaarHierarchy& h, const Matrix& p);

}  // namespace wgc
