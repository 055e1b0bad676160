#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "wavegcn/graph.hpp"
#include "wavegcn/haar.hpp"
#include "wavegcn/matrix.hpp"
#include "wavegcn/quantization.hpp"
#include "wavegcn/shrinkage.hpp"

namespace wgc {

// A graph together with its GCN propagation operator, built once and shared
// by every layer that runs on the graph.
struct GraphContext {
  explicit GraphContext(Graph g) : graph(std::move(g)), propagation(gcn_propagation(graph)) {}

  Graph graph;
  PropagationMatrix propagation;
};

// Counts scalar multiplies issued by the channel-mixing products.
struct OpCounter {
  std::uint64_t multiplies = 0;
};

// y = K f in channel space: out(i, o) = sum_c K(o, c) f(i, c).
struct Conv1x1 {
  Matrix weights;                          // c_out x c_in
  std::optional<Quantizer> weight_quant;   // signed; applied after weight normalization

  std::size_t in_channels() const { return weights.cols(); }
  std::size_t out_channels() const { return weights.rows(); }
};

Matrix conv1x1(const FeatureMatrix& f, const Matrix& kernel, OpCounter* counter = nullptr);
Matrix conv1x1(const FeatureMatrix& f, const Conv1x1& k, OpCounter* counter = nullptr);

// Kernel as used in the forward pass: quantize(weight_normalize(K)) when a
// weight quantizer is set, K otherwise.
Matrix effective_kernel(const Conv1x1& k);

struct WaveletConfig {
  double alpha = 1.0;
  int levels = kDefaultLevels;
  std::uint64_t seed = 0;
};

// Hierarchy and shrinkage plan of one forward pass.
struct WaveletState {
  HaarHierarchy hierarchy;
  ShrinkagePlan plan;
};

WaveletState plan_wavelet(const Graph& g, const FeatureMatrix& f, const WaveletConfig& cfg);

// Everything the backward pass needs from a quantization point.
struct QuantRecord {
  std::optional<Quantizer> quantizer;   // with the clip actually used
  Matrix input;
};

// Applies q (if set) and records the input for the backward pass.
Matrix apply_quant(const std::optional<Quantizer>& q, const Matrix& x, QuantRecord* record);

struct KernelRecord {
  std::optional<Quantizer> quantizer;
  Matrix normalized;   // weight_normalize(K), present only when quantized
};

Matrix effective_kernel(const Conv1x1& k, KernelRecord* record);

enum class WaveletVariant { v1, v2 };

// Compressed wavelet-domain convolution. V1 wraps one 1x1 conv in a
// forward/inverse transform pair and returns the pre-activation. V2 runs a
// chain of convs with ReLU between them inside one transform and applies a
// final ReLU after the inverse transform.
struct WaveletConvLayer {
  WaveletVariant variant = WaveletVariant::v1;
  std::vector<Conv1x1> convs;
  WaveletConfig wavelet;
  bool propagate = false;                   // apply the GCN operator before the transform
  std::optional<Quantizer> input_quant;     // unsigned, layer input
  std::optional<Quantizer> coeff_quant;     // signed, compressed coefficient block

  std::size_t in_channels() const { return convs.front().in_channels(); }
  std::size_t out_channels() const { return convs.back().out_channels(); }
};

// Forward intermediates of a V1 layer. With `freeze` set and `state` present
// the stored hierarchy and plan are reused instead of being rebuilt.
struct WaveletConvTape {
  std::optional<WaveletState> state;
  bool freeze = false;
  QuantRecord input;
  QuantRecord coefficients;
  KernelRecord kernel_record;
  Matrix block;    // quantized compressed block fed to the conv
  Matrix kernel;   // effective kernel
};

// W^T T^T K T W f; hierarchy and plan built from the (quantized) input.
Matrix compressed_conv_v1(const FeatureMatrix& f, const WaveletConvLayer& layer, const GraphContext& ctx,
                          WaveletConvTape* tape = nullptr, OpCounter* counter = nullptr);

// Same, on a caller-supplied hierarchy and plan.
Matrix compressed_conv_v1(const FeatureMatrix& f, const WaveletConvLayer& layer, const WaveletState& state,
                          OpCounter* counter = nullptr);

// K W^T T^T T W f on the given hierarchy and plan: the conv applied before
// compression, used to check that the two orders agree.
Matrix conv_then_compress(const FeatureMatrix& f, const WaveletConvLayer& layer, const WaveletState& state);

Matrix compressed_conv_v2(const FeatureMatrix& f, const WaveletConvLayer& layer, const GraphContext& ctx,
                          OpCounter* counter = nullptr);

enum class Aggregator { max, mean };

// out_i = agg_j relu(K [f_i, f_i - f_j]) over neighbours j; K is c_out x 2c_in.
// Isolated nodes produce a zero row.
Matrix edge_conv(const FeatureMatrix& f, const Graph& g, const Conv1x1& k, Aggregator agg = Aggregator::max,
                 OpCounter* counter = nullptr);

// Edge convolution with the convs moved before the gather:
// out_i = agg_j relu(y_i + t_i - t_j), y = K1 f, t = K2 f.
struct EdgeConvCheap {
  Conv1x1 k1;
  Conv1x1 k2;
  Aggregator aggregator = Aggregator::max;
  std::optional<WaveletConfig> wavelet;     // compress both convs with one shared transform
  std::optional<Quantizer> input_quant;
  std::optional<Quantizer> coeff_quant;
};

Matrix edge_conv_cheap(const FeatureMatrix& f, const GraphContext& ctx, const EdgeConvCheap& layer,
                       OpCounter* counter = nullptr);

// Multiply counts of the two edge convolution forms.
std::uint64_t edge_conv_multiplies(const Graph& g, std::size_t c_in, std::size_t c_out);
std::uint64_t edge_conv_cheap_multiplies(std::size_t n, double alpha, std::size_t c_in, std::size_t c_out);

// GCNII layer with the channel mixture in the compressed wavelet domain:
// relu(W^T T^T K_gcnii T W S f), S f = (1 - alpha_l) P f + alpha_l f0,
// K_gcnii = (1 - beta_l) I + beta_l K.
struct WGCNIILayer {
  Conv1x1 conv;                              // square
  double alpha_l = 0.1;
  double beta_l = 0.1;
  std::optional<WaveletConfig> wavelet;
  std::optional<Quantizer> input_quant;
  std::optional<Quantizer> coeff_quant;

  // beta_l = log(lambda / l + 1).
  static double beta_for(double lambda, int layer_index);
};

struct WGCNIITape {
  std::optional<WaveletState> state;
  bool freeze = false;
  QuantRecord input;
  QuantRecord coefficients;
  KernelRecord kernel_record;
  Matrix block;            // quantized compressed block (or S f without wavelet)
  Matrix mixing;           // K_gcnii
  Matrix pre_activation;
};

Matrix wgcnii_layer(const FeatureMatrix& f, const FeatureMatrix& f0, const GraphContext& ctx,
                    const WGCNIILayer& layer, WGCNIITape* tape = nullptr, OpCounter* counter = nullptr);

// Bandwidth ratio of the compressed activations: (32 / bits_a) / alpha.
double count_activation_compression(int bits_a, double alpha);

}  // namespace wgc
