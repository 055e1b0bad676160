#pragma once

#include <cstdint>
#include <vector>

#include "wavegcn/matrix.hpp"

namespace wgc {

// (2^b - 1) / 2^b, the top of the representable range in units of the clip.
double range_ratio(int bits);

// Uniform per-tensor quantizer with a learnable clipping parameter.
//  signed:   x_b = clip * Q_{b-1}(clamp(x / clip, -1, r_{b-1}))
//  unsigned: x_b = clip * Q_b(clamp(x / clip, 0, r_b))
// A clip of 0 means "not yet calibrated": the tensor's max |x| is used.
struct Quantizer {
  int bits = 8;
  bool is_signed = false;
  double clip = 0.0;

  // Fractional bits of the integer grid: b-1 when signed, b otherwise.
  int grid_bits() const { return is_signed ? bits - 1 : bits; }
  double ratio() const { return range_ratio(grid_bits()); }
  double lower() const { return is_signed ? -clip : 0.0; }
  double upper() const { return clip * ratio(); }
};

struct QuantizedTensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::int64_t> values;   // signed: [-2^{b-1}, 2^{b-1}-1]; unsigned: [0, 2^b-1]
  double scale = 0.0;                 // real value = scale * integer
  int bits = 0;
  bool is_signed = false;

  Matrix dequantize() const;
};

struct FakeQuantized {
  Matrix values;              // equals integers.dequantize() bit for bit
  QuantizedTensor integers;
  double clip = 0.0;          // clip actually used (after calibration)
};

// round(2^b x) / 2^b with half-away-from-zero rounding.
double q_round(double x, int bits);
Matrix q_round(const Matrix& x, int bits);

// max |x|, or 1 for an all-zero tensor.
double calibrate_clip(const Matrix& x);

// Dispatches on q.is_signed. Throws DomainError for bits outside [1, 32]
// or a negative clip.
FakeQuantized fake_quantize(const Matrix& x, const Quantizer& q);

// Signed quantizer only.
FakeQuantized quantize_weights(const Matrix& w, const Quantizer& q);
// Unsigned quantizer only; throws DomainError on negative entries.
FakeQuantized quantize_activations(const Matrix& x, const Quantizer& q);

// Per-entry d x_b / d clip under the straight-through estimator:
// the lower-bound value (-1 signed, 0 unsigned) when x <= lower, r when
// x >= upper, (x_b - x)/clip in between. Callers weight and sum entries.
Matrix clip_gradient(const Matrix& x, const Quantizer& q);

// Straight-through input gradient: grad where lower < x < upper, else 0.
Matrix ste_input_gradient(const Matrix& x, const Quantizer& q, const Matrix& grad);

inline constexpr double kWeightNormEpsilon = 1e-6;

// (W - mean) / (std + 1e-6) over the whole tensor, population std.
Matrix weight_normalize(const Matrix& w);
// Vector-Jacobian product of weight_normalize at w.
Matrix weight_normalize_backward(const Matrix& w, const Matrix& grad);

}  // namespace wgc
