#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "wavegcn/model.hpp"

namespace wgc {

struct LossResult {
  double loss = 0.0;
  Matrix gradient;   // d loss / d logits
};

// Mean cross-entropy over the masked rows; gradient (softmax - onehot)/|mask|
// on those rows and zero elsewhere. Throws DataError on an empty mask or a
// label outside [0, classes).
LossResult softmax_cross_entropy(const Matrix& logits, const std::vector<int>& labels,
                                 const std::vector<std::size_t>& mask);

// Gradients of one layer's parameters.
struct LayerGradients {
  std::vector<Matrix> kernels;          // one per kernel, same shape
  std::vector<double> weight_clips;     // one per kernel, 0 when unquantized
  std::vector<double> bias;
  double input_clip = 0.0;
  double coeff_clip = 0.0;
};

struct WConvBackward {
  LayerGradients grads;
  Matrix grad_input;
};

struct WGCNIIBackward {
  LayerGradients grads;
  Matrix grad_input;
  Matrix grad_f0;
};

// grad_out is d loss / d (layer output), before any model-level ReLU.
// Hierarchy and plan are constants; rounding passes gradients straight
// through. Throws DataError when the tape does not match the layer.
WConvBackward backward_wconv(const Matrix& grad_out, const WaveletConvTape& tape, const WaveletConvLayer& layer,
                             const GraphContext& ctx);
WGCNIIBackward backward_wgcnii(const Matrix& grad_out, const WGCNIITape& tape, const WGCNIILayer& layer,
                               const GraphContext& ctx);

struct ModelGradients {
  std::vector<LayerGradients> layers;
  Matrix grad_input;
};

// Backward pass through a model given the tape of its last forward pass.
// Supports linear, V1 wavelet conv and WGCNII layers.
ModelGradients model_backward(const Model& model, const ModelTape& tape, const GraphContext& ctx,
                              const Matrix& grad_output);

// w -= lr (g + weight_decay w) on kernels and biases; clips follow plain
// gradient steps and stay above 1e-8. A clip still at 0 first adopts the
// value calibrated in the taped forward pass.
void sgd_step(Model& model, const ModelGradients& grads, const ModelTape& tape, double lr, double weight_decay);

enum class ModelKind { wgcn, wgcnii };

struct TrainConfig {
  int epochs = 200;
  double lr = 0.01;
  double weight_decay = 5e-4;
  std::uint64_t seed = 0;
  int bits_w = 8;
  int bits_a = 8;
  double alpha = 1.0;
  int levels = kDefaultLevels;
  std::size_t hidden = 16;
  ModelKind kind = ModelKind::wgcn;
  bool freeze_hierarchy = false;
  double train_fraction = 0.6;
  double gcnii_alpha = 0.1;
  double gcnii_lambda = 0.1;

  // Throws DomainError on non-positive epochs or lr < 0 and on bad bits or alpha.
  void validate() const;
};

// Full-precision linear embedding, two quantized wavelet layers, full-precision
// linear classifier. Weights drawn from a seeded Glorot uniform.
Model make_model(const TrainConfig& cfg, std::size_t in_channels, std::size_t classes);

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
};

struct TrainResult {
  Model model;
  std::vector<EpochRecord> trace;
  std::vector<std::size_t> train_nodes;
  std::vector<std::size_t> val_nodes;
};

// Labelled nodes (label >= 0) are split by a seeded shuffle into train and
// validation sets. Accuracies in the trace are measured on the forward pass
// that precedes each update.
TrainResult train_toy(const Graph& g, const FeatureMatrix& f, const std::vector<int>& labels, const TrainConfig& cfg);

// CSV: epoch,loss,train_acc,val_acc.
void write_trace(std::ostream& out, const std::vector<EpochRecord>& trace);

// Fraction of the given nodes whose arg-max logit equals the label.
double accuracy(const Matrix& logits, const std::vector<int>& labels, const std::vector<std::size_t>& nodes);

// Arg-max per row, lowest index on ties.
std::vector<int> predict(const Matrix& logits);

}  // namespace wgc
