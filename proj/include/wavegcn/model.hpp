#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "wavegcn/layers.hpp"

namespace wgc {

// Dense 1x1 conv with bias, kept at full precision (input embedding and
// output classifier).
struct LinearLayer {
  Conv1x1 conv;
  std::vector<double> bias;
};

using Layer = std::variant<LinearLayer, WaveletConvLayer, EdgeConvCheap, WGCNIILayer>;

// Layers run in order. The output of layer 0 is the initial representation
// f0 consumed by GCNII layers. Linear and V1 layers are followed by ReLU
// except when they are the last layer; the other kinds apply ReLU themselves.
struct Model {
  std::vector<Layer> layers;
};

std::string layer_kind(const Layer& layer);
std::size_t layer_in_channels(const Layer& layer);
std::size_t layer_out_channels(const Layer& layer);

struct LayerTrace {
  Matrix input;
  Matrix output;     // before the model-level ReLU
  bool relu_applied = false;
  std::variant<std::monostate, WaveletConvTape, WGCNIITape> tape;
};

// Intermediates of one forward pass. With `freeze` set, hierarchies and
// plans stored by an earlier pass are reused.
struct ModelTape {
  std::vector<LayerTrace> layers;
  bool freeze = false;
};

Matrix model_forward(const Model& model, const GraphContext& ctx, const FeatureMatrix& input,
                     ModelTape* tape = nullptr);

// Model text format: header "layers: <count>", then one section per layer
// with the kind, dims, alpha, levels, seed, bits, clips and row-major
// weights. Values use round-trip decimal text.
void write_model(std::ostream& out, const Model& model);
Model parse_model(std::istream& in);
Model load_model(const std::filesystem::path& path);

}  // namespace wgc
