#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "wavegcn/haar.hpp"
#include "wavegcn/matrix.hpp"

namespace wgc::test {

// Exact element of Q(sqrt 2): (a + b sqrt2) / 2^k.
struct Surd {
  std::int64_t a = 0;
  std::int64_t b = 0;
  int k = 0;

  static Surd one() { return {1, 0, 0}; }
  static Surd inv_sqrt2() { return {0, 1, 1}; }

  Surd normalized() const {
    Surd s = *this;
    if (s.a == 0 && s.b == 0) return {};
    while (s.k > 0 && s.a % 2 == 0 && s.b % 2 == 0) {
      s.a /= 2;
      s.b /= 2;
      --s.k;
    }
    return s;
  }

  friend Surd operator*(const Surd& x, const Surd& y) {
    return Surd{x.a * y.a + 2 * x.b * y.b, x.a * y.b + x.b * y.a, x.k + y.k}.normalized();
  }
  friend Surd operator+(const Surd& x, const Surd& y) {
    const int k = std::max(x.k, y.k);
    const std::int64_t sx = std::int64_t{1} << (k - x.k);
    const std::int64_t sy = std::int64_t{1} << (k - y.k);
    return Surd{x.a * sx + y.a * sy, x.b * sx + y.b * sy, k}.normalized();
  }
  Surd operator-() const { return {-a, -b, k}; }
  bool operator==(const Surd& o) const {
    const Surd l = normalized();
    const Surd r = o.normalized();
    return l.a == r.a && l.b == r.b && l.k == r.k;
  }
  bool is_zero() const { return a == 0 && b == 0; }
};

using SurdMatrix = std::vector<std::vector<Surd>>;

inline SurdMatrix surd_zeros(std::size_t rows, std::size_t cols) {
  return SurdMatrix(rows, std::vector<Surd>(cols));
}

inline SurdMatrix surd_product(const SurdMatrix& x, const SurdMatrix& y) {
  const std::size_t inner = y.size();
  const std::size_t cols = inner ? y[0].size() : 0;
  SurdMatrix out = surd_zeros(x.size(), cols);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t t = 0; t < inner; ++t) {
      if (x[i][t].is_zero()) continue;
      for (std::size_t j = 0; j < cols; ++j) {
        if (!y[t][j].is_zero()) out[i][j] = out[i][j] + x[i][t] * y[t][j];
      }
    }
  }
  return out;
}

inline SurdMatrix surd_transposed(const SurdMatrix& x) {
  const std::size_t cols = x.empty() ? 0 : x[0].size();
  SurdMatrix out = surd_zeros(cols, x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < cols; ++j) out[j][i] = x[i][j];
  }
  return out;
}

inline bool surd_is_identity(const SurdMatrix& x) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < x[i].size(); ++j) {
      if (!(x[i][j] == (i == j ? Surd::one() : Surd{}))) return false;
    }
  }
  return true;
}

inline bool surd_is_zero(const SurdMatrix& x) {
  for (const auto& row : x) {
    for (const Surd& v : row) {
      if (!v.is_zero()) return false;
    }
  }
  return true;
}

// Single-level operators of one level, built straight from its pair list:
// D has one row per pair (+1/sqrt2 at first, -1/sqrt2 at second), A one row
// per pair (+1/sqrt2 at both) and a final row selecting the orphan.
struct LevelOperators {
  SurdMatrix detail;
  SurdMatrix average;
};

inline LevelOperators level_operators(const PairGraph& pg) {
  const std::size_t n = pg.node_count;
  LevelOperators ops{surd_zeros(pg.pairs.size(), n), surd_zeros(pg.coarse_count(), n)};
  for (std::size_t k = 0; k < pg.pairs.size(); ++k) {
    ops.detail[k][pg.pairs[k].first] = Surd::inv_sqrt2();
    ops.detail[k][pg.pairs[k].second] = -Surd::inv_sqrt2();
    ops.average[k][pg.pairs[k].first] = Surd::inv_sqrt2();
    ops.average[k][pg.pairs[k].second] = Surd::inv_sqrt2();
  }
  if (pg.orphan) ops.average[pg.pairs.size()][*pg.orphan] = Surd::one();
  return ops;
}

// Full multi-level W = [D1; D2 A1; ...; DL A(L-1)...A1; AL...A1] in exact form.
inline SurdMatrix surd_transform(const HaarHierarchy& h) {
  const std::size_t n = h.node_count();
  SurdMatrix w;
  SurdMatrix chain = surd_zeros(n, n);
  for (std::size_t i = 0; i < n; ++i) chain[i][i] = Surd::one();
  for (const HaarLevel& level : h.levels()) {
    const LevelOperators ops = level_operators(level.pair_graph);
    for (auto& row : surd_product(ops.detail, chain)) w.push_back(std::move(row));
    chain = surd_product(ops.average, chain);
  }
  for (auto& row : chain) w.push_back(std::move(row));
  return w;
}

// Same construction in floating point.
inline Matrix dense_transform(const HaarHierarchy& h) {
  const SurdMatrix s = surd_transform(h);
  const double root2 = std::sqrt(2.0);
  Matrix w(s.size(), h.node_count());
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s[i].size(); ++j) {
      const Surd& v = s[i][j];
      w(i, j) = (static_cast<double>(v.a) + static_cast<double>(v.b) * root2) / std::ldexp(1.0, v.k);
    }
  }
  return w;
}

}  // namespace wgc::test
