#include "wavegcn/shrinkage.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "wavegcn/error.hpp"

namespace wgc {

std::size_t kept_row_count(double alpha, std::size_t n) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw DomainError("compression fraction alpha must lie in (0, 1], got " + std::to_string(alpha));
  }
  const double scaled = alpha * static_cast<double>(n);
  const double nearest = std::round(scaled);
  // alpha = 1/k with n divisible by k must not round up to one extra row.
  const double target = std::abs(scaled - nearest) <= 1e-9 * std::max(1.0, scaled) ? nearest : std::ceil(scaled);
  return std::min(n, static_cast<std::size_t>(target));
}

ShrinkagePlan select_topk(const Matrix& p, double alpha, SelectionNorm norm) {
  const std::size_t n = p.rows();
  const std::size_t k = kept_row_count(alpha, n);

  std::vector<double> score(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0.0;
    for (double v : p.row(r)) s += norm == SelectionNorm::l2 ? v * v : std::abs(v);
    score[r] = s;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return score[a] != score[b] ? score[a] > score[b] : a < b;
                    });
  ShrinkagePlan plan;
  plan.alpha = alpha;
  plan.row_count = n;
  plan.kept.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(plan.kept.begin(), plan.kept.end());
  return plan;
}

CompressedSignal gather(const Matrix& p, const ShrinkagePlan& plan) {
  if (p.rows() != plan.row_count) {
    throw DimensionError("gather: signal has " + std::to_string(p.rows()) + " rows, plan expects " +
                         std::to_string(plan.row_count));
  }
  CompressedSignal cs{Matrix(plan.kept.size(), p.cols()), plan};
  for (std::size_t r = 0; r < plan.kept.size(); ++r) {
    const auto src = p.row(plan.kept[r]);
    std::copy(src.begin(), src.end(), cs.dense.row(r).begin());
  }
  return cs;
}

Matrix scatter(const CompressedSignal& cs) {
  if (cs.dense.rows() != cs.plan.kept.size()) {
    throw DimensionError("scatter: dense block does not match the plan");
  }
  Matrix out(cs.plan.row_count, cs.dense.cols());
  for (std::size_t r = 0; r < cs.plan.kept.size(); ++r) {
    const auto src = cs.dense.row(r);
    std::copy(src.begin(), src.end(), out.row(cs.plan.kept[r]).begin());
  }
  return out;
}

double mean_squared_error(const Matrix& a, const Matrix& b) {
  if (a.empty()) return 0.0;
  const Matrix d = a - b;
  return squared_norm(d) / static_cast<double>(d.size());
}

Reconstruction compress_reconstruct(const HaarHierarchy& h, const FeatureMatrix& f, double alpha,
                                    SelectionNorm norm) {
  const Matrix p = haar_forward(h, f);
  const ShrinkagePlan plan = select_topk(p, alpha, norm);
  Reconstruction out;
  out.signal = haar_inverse(h, scatter(gather(p, plan)));
  out.mse = mean_squared_error(f, out.signal);
  return out;
}

}  // namespace wgc
