#include "wavegcn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "wavegcn/error.hpp"

namespace wgc {

Matrix conv1x1(const FeatureMatrix& f, const Matrix& kernel, OpCounter* counter) {
  if (f.cols() != kernel.cols()) {
    throw DimensionError("conv1x1: input has " + std::to_string(f.cols()) + " channels, kernel expects " +
                         std::to_string(kernel.cols()));
  }
  if (counter) counter->multiplies += static_cast<std::uint64_t>(f.rows() * kernel.rows() * kernel.cols());
  return matmul_transposed(f, kernel);
}

Matrix conv1x1(const FeatureMatrix& f, const Conv1x1& k, OpCounter* counter) {
  return conv1x1(f, effective_kernel(k), counter);
}

Matrix effective_kernel(const Conv1x1& k, KernelRecord* record) {
  if (!k.weight_quant) {
    if (record) *record = {};
    return k.weights;
  }
  Matrix normalized = weight_normalize(k.weights);
  FakeQuantized q = quantize_weights(normalized, *k.weight_quant);
  if (record) {
    Quantizer used = *k.weight_quant;
    used.clip = q.clip;
    record->quantizer = used;
    record->normalized = std::move(normalized);
  }
  return std::move(q.values);
}

Matrix effective_kernel(const Conv1x1& k) { return effective_kernel(k, nullptr); }

WaveletState plan_wavelet(const Graph& g, const FeatureMatrix& f, const WaveletConfig& cfg) {
  WaveletState state;
  state.hierarchy = build_hierarchy(g, f, cfg.levels, cfg.seed);
  state.plan = select_topk(haar_forward(state.hierarchy, f), cfg.alpha);
  return state;
}

Matrix apply_quant(const std::optional<Quantizer>& q, const Matrix& x, QuantRecord* record) {
  if (!q) {
    if (record) *record = {};
    return x;
  }
  FakeQuantized fq = fake_quantize(x, *q);
  if (record) {
    Quantizer used = *q;
    used.clip = fq.clip;
    record->quantizer = used;
    record->input = x;
  }
  return std::move(fq.values);
}

namespace {

void check_layer(const WaveletConvLayer& layer) {
  if (layer.convs.empty()) throw DimensionError("wavelet conv layer has no convolutions");
  if (layer.variant == WaveletVariant::v1 && layer.convs.size() != 1) {
    throw DimensionError("V1 wavelet conv layer takes exactly one convolution");
  }
  for (std::size_t i = 1; i < layer.convs.size(); ++i) {
    if (layer.convs[i].in_channels() != layer.convs[i - 1].out_channels()) {
      throw DimensionError("wavelet conv chain: conv " + std::to_string(i) + " expects " +
                           std::to_string(layer.convs[i].in_channels()) + " channels, previous produces " +
                           std::to_string(layer.convs[i - 1].out_channels()));
    }
  }
}

const WaveletState& resolve_state(std::optional<WaveletState>* slot, bool freeze, std::optional<WaveletState>& local,
                                  const Graph& g, const Matrix& x, const WaveletConfig& cfg) {
  if (slot && freeze && slot->has_value()) return **slot;
  local = plan_wavelet(g, x, cfg);
  if (slot) {
    *slot = local;
    return **slot;
  }
  return *local;
}

// Inputs entering a layer: quantized, then propagated when requested.
Matrix layer_input(const FeatureMatrix& f, const WaveletConvLayer& layer, const GraphContext& ctx,
                   QuantRecord* record) {
  Matrix x = apply_quant(layer.input_quant, f, record);
  return layer.propagate ? ctx.propagation.apply(x) : x;
}

Matrix v1_on_state(const Matrix& x, const WaveletConvLayer& layer, const WaveletState& state,
                   WaveletConvTape* tape, OpCounter* counter) {
  const Matrix p = haar_forward(state.hierarchy, x);
  Matrix block = apply_quant(layer.coeff_quant, gather(p, state.plan).dense, tape ? &tape->coefficients : nullptr);
  Matrix kernel = effective_kernel(layer.convs.front(), tape ? &tape->kernel_record : nullptr);
  Matrix mixed = conv1x1(block, kernel, counter);
  Matrix out = haar_inverse(state.hierarchy, scatter({std::move(mixed), state.plan}));
  if (tape) {
    tape->block = std::move(block);
    tape->kernel = std::move(kernel);
  }
  return out;
}

}  // namespace

Matrix compressed_conv_v1(const FeatureMatrix& f, const WaveletConvLayer& layer, const GraphContext& ctx,
                          WaveletConvTape* tape, OpCounter* counter) {
  check_layer(layer);
  if (layer.variant != WaveletVariant::v1) throw DimensionError("compressed_conv_v1 needs a V1 layer");
  const Matrix x = layer_input(f, layer, ctx, tape ? &tape->input : nullptr);
  std::optional<WaveletState> local;
  const WaveletState& state =
      resolve_state(tape ? &tape->state : nullptr, tape && tape->freeze, local, ctx.graph, x, layer.wavelet);
  return v1_on_state(x, layer, state, tape, counter);
}

Matrix compressed_conv_v1(const FeatureMatrix& f, const WaveletConvLayer& layer, const WaveletState& state,
                          OpCounter* counter) {
  check_layer(layer);
  if (layer.propagate) throw DimensionError("shared-state V1 form takes no propagation step");
  const Matrix x = apply_quant(layer.input_quant, f, nullptr);
  return v1_on_state(x, layer, state, nullptr, counter);
}

Matrix conv_then_compress(const FeatureMatrix& f, const WaveletConvLayer& layer, const WaveletState& state) {
  check_layer(layer);
  const Matrix y = conv1x1(f, layer.convs.front());
  const Matrix p = haar_forward(state.hierarchy, y);
  return haar_inverse(state.hierarchy, scatter(gather(p, state.plan)));
}

Matrix compressed_conv_v2(const FeatureMatrix& f, const WaveletConvLayer& layer, const GraphContext& ctx,
                          OpCounter* counter) {
  check_layer(layer);
  const Matrix x = layer_input(f, layer, ctx, nullptr);
  const WaveletState state = plan_wavelet(ctx.graph, x, layer.wavelet);
  Matrix z = apply_quant(layer.coeff_quant, gather(haar_forward(state.hierarchy, x), state.plan).dense, nullptr);
  for (std::size_t i = 0; i < layer.convs.size(); ++i) {
    z = conv1x1(z, layer.convs[i], counter);
    if (i + 1 < layer.convs.size()) z = relu(z);
  }
  return relu(haar_inverse(state.hierarchy, scatter({std::move(z), state.plan})));
}

namespace {

// Aggregates relu(message(i, j)) over the neighbours of every node.
template <typename Message>
Matrix aggregate_edges(const Graph& g, std::size_t channels, Aggregator agg, Message&& message) {
  const std::size_t n = g.node_count();
  Matrix out(n, channels);
  std::vector<double> msg(channels);
  for (std::size_t i = 0; i < n; ++i) {
    const auto adj = g.neighbors(static_cast<NodeId>(i));
    if (adj.empty()) continue;
    auto dst = out.row(i);
    if (agg == Aggregator::max) std::fill(dst.begin(), dst.end(), -std::numeric_limits<double>::infinity());
    for (NodeId j : adj) {
      message(i, j, std::span<double>(msg));
      for (std::size_t c = 0; c < channels; ++c) {
        const double v = msg[c] > 0.0 ? msg[c] : 0.0;
        if (agg == Aggregator::max) {
          dst[c] = std::max(dst[c], v);
        } else {
          dst[c] += v;
        }
      }
    }
    if (agg == Aggregator::mean) {
      const double inv = 1.0 / static_cast<double>(adj.size());
      for (double& v : dst) v *= inv;
    }
  }
  return out;
}

}  // namespace

Matrix edge_conv(const FeatureMatrix& f, const Graph& g, const Conv1x1& k, Aggregator agg, OpCounter* counter) {
  if (f.rows() != g.node_count()) throw DimensionError("edge_conv: feature rows do not match the graph");
  if (k.in_channels() != 2 * f.cols()) {
    throw DimensionError("edge_conv: kernel expects " + std::to_string(k.in_channels()) +
                         " inputs, [f_i, f_i - f_j] has " + std::to_string(2 * f.cols()));
  }
  const Matrix kernel = effective_kernel(k);
  const std::size_t c_in = f.cols();
  const std::size_t c_out = kernel.rows();
  std::vector<double> edge_input(2 * c_in);
  return aggregate_edges(g, c_out, agg, [&](std::size_t i, NodeId j, std::span<double> msg) {
    const auto fi = f.row(i);
    const auto fj = f.row(j);
    for (std::size_t c = 0; c < c_in; ++c) {
      edge_input[c] = fi[c];
      edge_input[c_in + c] = fi[c] - fj[c];
    }
    for (std::size_t o = 0; o < c_out; ++o) {
      const auto w = kernel.row(o);
      double acc = 0.0;
      for (std::size_t c = 0; c < edge_input.size(); ++c) acc += w[c] * edge_input[c];
      msg[o] = acc;
    }
    if (counter) counter->multiplies += static_cast<std::uint64_t>(c_out * 2 * c_in);
  });
}

Matrix edge_conv_cheap(const FeatureMatrix& f, const GraphContext& ctx, const EdgeConvCheap& layer,
                       OpCounter* counter) {
  const Graph& g = ctx.graph;
  if (f.rows() != g.node_count()) throw DimensionError("edge_conv_cheap: feature rows do not match the graph");
  if (layer.k1.weights.rows() != layer.k2.weights.rows() || layer.k1.weights.cols() != layer.k2.weights.cols()) {
    throw DimensionError("edge_conv_cheap: K1 and K2 must have the same shape");
  }
  Matrix y;
  Matrix t;
  if (layer.wavelet) {
    const Matrix x = apply_quant(layer.input_quant, f, nullptr);
    const WaveletState state = plan_wavelet(g, x, *layer.wavelet);
    const Matrix block =
        apply_quant(layer.coeff_quant, gather(haar_forward(state.hierarchy, x), state.plan).dense, nullptr);
    y = haar_inverse(state.hierarchy, scatter({conv1x1(block, layer.k1, counter), state.plan}));
    t = haar_inverse(state.hierarchy, scatter({conv1x1(block, layer.k2, counter), state.plan}));
  } else {
    const Matrix x = apply_quant(layer.input_quant, f, nullptr);
    y = conv1x1(x, layer.k1, counter);
    t = conv1x1(x, layer.k2, counter);
  }
  const std::size_t c_out = y.cols();
  return aggregate_edges(g, c_out, layer.aggregator, [&](std::size_t i, NodeId j, std::span<double> msg) {
    const auto yi = y.row(i);
    const auto ti = t.row(i);
    const auto tj = t.row(j);
    for (std::size_t o = 0; o < c_out; ++o) msg[o] = yi[o] + ti[o] - tj[o];
  });
}

std::uint64_t edge_conv_multiplies(const Graph& g, std::size_t c_in, std::size_t c_out) {
  return static_cast<std::uint64_t>(2 * g.edge_count()) * 2 * c_in * c_out;
}

std::uint64_t edge_conv_cheap_multiplies(std::size_t n, double alpha, std::size_t c_in, std::size_t c_out) {
  return static_cast<std::uint64_t>(2 * kept_row_count(alpha, n) * c_in * c_out);
}

double WGCNIILayer::beta_for(double lambda, int layer_index) {
  if (layer_index < 1) throw DomainError("GCNII layer index starts at 1");
  return std::log(lambda / static_cast<double>(layer_index) + 1.0);
}

Matrix wgcnii_layer(const FeatureMatrix& f, const FeatureMatrix& f0, const GraphContext& ctx,
                    const WGCNIILayer& layer, WGCNIITape* tape, OpCounter* counter) {
  if (layer.conv.in_channels() != layer.conv.out_channels()) {
    throw DimensionError("wgcnii_layer: channel mixing kernel must be square, got " +
                         std::to_string(layer.conv.out_channels()) + "x" + std::to_string(layer.conv.in_channels()));
  }
  if (f.rows() != f0.rows() || f.cols() != f0.cols()) {
    throw DimensionError("wgcnii_layer: f and f0 must have the same shape");
  }
  if (f.cols() != layer.conv.in_channels()) throw DimensionError("wgcnii_layer: channel count mismatch");

  const Matrix x = apply_quant(layer.input_quant, f, tape ? &tape->input : nullptr);
  const Matrix spatial = (1.0 - layer.alpha_l) * ctx.propagation.apply(x) + layer.alpha_l * f0;

  Matrix kernel = effective_kernel(layer.conv, tape ? &tape->kernel_record : nullptr);
  Matrix mixing = layer.beta_l * kernel;
  for (std::size_t i = 0; i < mixing.rows(); ++i) mixing(i, i) += 1.0 - layer.beta_l;

  Matrix block;
  Matrix pre;
  if (layer.wavelet) {
    std::optional<WaveletState> local;
    const WaveletState& state = resolve_state(tape ? &tape->state : nullptr, tape && tape->freeze, local,
                                              ctx.graph, spatial, *layer.wavelet);
    block = apply_quant(layer.coeff_quant, gather(haar_forward(state.hierarchy, spatial), state.plan).dense,
                        tape ? &tape->coefficients : nullptr);
    pre = haar_inverse(state.hierarchy, scatter({conv1x1(block, mixing, counter), state.plan}));
  } else {
    block = spatial;
    if (tape) tape->coefficients = {};
    pre = conv1x1(block, mixing, counter);
  }
  Matrix out = relu(pre);
  if (tape) {
    tape->block = std::move(block);
    tape->mixing = std::move(mixing);
    tape->pre_activation = std::move(pre);
  }
  return out;
}

double count_activation_compression(int bits_a, double alpha) {
  if (bits_a < 1 || bits_a > 32) throw DomainError("activation bits must be in [1, 32]");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in (0, 1]");
  return (32.0 / static_cast<double>(bits_a)) / alpha;
}

}  // namespace wgc
