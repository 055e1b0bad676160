#pragma once

#include <cstddef>
#include <vector>

#include "wavegcn/haar.hpp"
#include "wavegcn/matrix.hpp"

namespace wgc {

enum class SelectionNorm { l2, l1 };

// The shrinkage operator T: one set of kept coefficient rows shared by all
// channels.
struct ShrinkagePlan {
  double alpha = 1.0;
  std::size_t row_count = 0;          // n, rows of the uncompressed signal
  std::vector<std::size_t> kept;      // strictly increasing, size ceil(alpha * n)
};

struct CompressedSignal {
  Matrix dense;        // kept.size() x c; row r is source row plan.kept[r]
  ShrinkagePlan plan;
};

struct Reconstruction {
  FeatureMatrix signal;
  double mse = 0.0;    // ||f - signal||^2 / (n c)
};

// ceil(alpha * n), robust to alpha * n landing a rounding error above an
// integer. Throws DomainError unless 0 < alpha <= 1.
std::size_t kept_row_count(double alpha, std::size_t n);

// Keeps the ceil(alpha n) rows with the largest norm across all channels.
// Ties at the cut go to the lower row index.
ShrinkagePlan select_topk(const Matrix& p, double alpha, SelectionNorm norm = SelectionNorm::l2);

// T p.
CompressedSignal gather(const Matrix& p, const ShrinkagePlan& plan);
// T^T x: kept rows restored, every other row zero.
Matrix scatter(const CompressedSignal& cs);

// W^T T^T T W f together with its mean squared error.
Reconstruction compress_reconstruct(const HaarHierarchy& h, const FeatureMatrix& f, double alpha,
                                    SelectionNorm norm = SelectionNorm::l2);

double mean_squared_error(const Matrix& a, const Matrix& b);

}  // namespace wgc
