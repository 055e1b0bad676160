#include "wavegcn/quantization.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wavegcn/error.hpp"

namespace wgc {

namespace {

void check_quantizer(const Quantizer& q) {
  if (q.bits < 1 || q.bits > 32) {
    throw DomainError("quantizer bit width must be in [1, 32], got " + std::to_string(q.bits));
  }
  if (!(q.clip >= 0.0) || !std::isfinite(q.clip)) {
    throw DomainError("quantizer clip must be a finite non-negative value");
  }
}

Quantizer calibrated(const Matrix& x, Quantizer q) {
  if (q.clip == 0.0) q.clip = calibrate_clip(x);
  return q;
}

}  // namespace

double range_ratio(int bits) { return 1.0 - std::ldexp(1.0, -bits); }

double q_round(double x, int bits) {
  return std::round(std::ldexp(x, bits)) / std::ldexp(1.0, bits);
}

Matrix q_round(const Matrix& x, int bits) {
  Matrix out = x;
  for (double& v : out.values()) v = q_round(v, bits);
  return out;
}

double calibrate_clip(const Matrix& x) {
  const double m = max_abs(x);
  return m > 0.0 ? m : 1.0;
}

Matrix QuantizedTensor::dequantize() const {
  Matrix out(rows, cols);
  auto dst = out.values();
  for (std::size_t i = 0; i < values.size(); ++i) dst[i] = scale * static_cast<double>(values[i]);
  return out;
}

FakeQuantized fake_quantize(const Matrix& x, const Quantizer& raw) {
  check_quantizer(raw);
  const Quantizer q = calibrated(x, raw);
  const int k = q.grid_bits();
  const double lo = q.is_signed ? -1.0 : 0.0;
  const double hi = q.ratio();

  FakeQuantized out;
  out.clip = q.clip;
  out.integers.rows = x.rows();
  out.integers.cols = x.cols();
  out.integers.bits = q.bits;
  out.integers.is_signed = q.is_signed;
  out.integers.scale = std::ldexp(q.clip, -k);
  out.integers.values.resize(x.size());
  out.values = Matrix(x.rows(), x.cols());

  const auto src = x.values();
  auto dst = out.values.values();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double t = std::clamp(src[i] / q.clip, lo, hi);
    const double level = std::round(std::ldexp(t, k));
    out.integers.values[i] = static_cast<std::int64_t>(level);
    dst[i] = out.integers.scale * level;
  }
  return out;
}

FakeQuantized quantize_weights(const Matrix& w, const Quantizer& q) {
  if (!q.is_signed) throw DomainError("quantize_weights requires a signed quantizer");
  return fake_quantize(w, q);
}

FakeQuantized quantize_activations(const Matrix& x, const Quantizer& q) {
  if (q.is_signed) throw DomainError("quantize_activations requires an unsigned quantizer");
  for (double v : x.values()) {
    if (v < 0.0) throw DomainError("quantize_activations: negative activation " + std::to_string(v));
  }
  return fake_quantize(x, q);
}

Matrix clip_gradient(const Matrix& x, const Quantizer& raw) {
  check_quantizer(raw);
  const Quantizer q = calibrated(x, raw);
  const FakeQuantized fq = fake_quantize(x, q);
  const double lower_value = q.is_signed ? -1.0 : 0.0;
  Matrix out(x.rows(), x.cols());
  const auto src = x.values();
  const auto quantized = fq.values.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i] <= q.lower()) {
      dst[i] = lower_value;
    } else if (src[i] >= q.upper()) {
      dst[i] = q.ratio();
    } else {
      dst[i] = (quantized[i] - src[i]) / q.clip;
    }
  }
  return out;
}

Matrix ste_input_gradient(const Matrix& x, const Quantizer& raw, const Matrix& grad) {
  if (x.rows() != grad.rows() || x.cols() != grad.cols()) {
    throw DimensionError("ste_input_gradient: shape mismatch");
  }
  const Quantizer q = calibrated(x, raw);
  Matrix out = grad;
  const auto src = x.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i] <= q.lower() || src[i] >= q.upper()) dst[i] = 0.0;
  }
  return out;
}

namespace {

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;
};

Moments moments(const Matrix& w) {
  Moments m;
  const double count = static_cast<double>(w.size());
  for (double v : w.values()) m.mean += v;
  m.mean /= count;
  double var = 0.0;
  for (double v : w.values()) var += (v - m.mean) * (v - m.mean);
  m.stddev = std::sqrt(var / count);
  return m;
}

}  // namespace

Matrix weight_normalize(const Matrix& w) {
  if (w.empty()) throw DomainError("weight_normalize: empty tensor");
  const Moments m = moments(w);
  Matrix out = w;
  for (double& v : out.values()) v = (v - m.mean) / (m.stddev + kWeightNormEpsilon);
  return out;
}

Matrix weight_normalize_backward(const Matrix& w, const Matrix& grad) {
  if (w.empty()) throw DomainError("weight_normalize_backward: empty tensor");
  if (w.rows() != grad.rows() || w.cols() != grad.cols()) {
    throw DimensionError("weight_normalize_backward: shape mismatch");
  }
  const Moments m = moments(w);
  const double count = static_cast<double>(w.size());
  const double denom = m.stddev + kWeightNormEpsilon;
  double grad_mean = 0.0;
  double grad_dot_centered = 0.0;
  const auto g = grad.values();
  const auto x = w.values();
  for (std::size_t i = 0; i < g.size(); ++i) {
    grad_mean += g[i];
    grad_dot_centered += g[i] * (x[i] - m.mean);
  }
  grad_mean /= count;
  // d std / d w_k = (w_k - mean) / (count * std); zero when std == 0.
  const double std_coeff =
      m.stddev > 0.0 ? grad_dot_centered / (denom * denom * count * m.stddev) : 0.0;
  Matrix out(w.rows(), w.cols());
  auto dst = out.values();
  for (std::size_t i = 0; i < g.size(); ++i) {
    dst[i] = (g[i] - grad_mean) / denom - std_coeff * (x[i] - m.mean);
  }
  return out;
}

}  // namespace wgc
