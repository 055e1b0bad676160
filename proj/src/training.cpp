#include "wavegcn/training.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "wavegcn/error.hpp"
#include "wavegcn/io.hpp"
#include "wavegcn/rng.hpp"

namespace wgc {

LossResult softmax_cross_entropy(const Matrix& logits, const std::vector<int>& labels,
                                 const std::vector<std::size_t>& mask) {
  if (mask.empty()) throw DataError("softmax_cross_entropy: empty mask");
  if (labels.size() != logits.rows()) throw DimensionError("softmax_cross_entropy: label count does not match logits");
  const std::size_t classes = logits.cols();
  LossResult result{0.0, Matrix(logits.rows(), classes)};
  const double inv = 1.0 / static_cast<double>(mask.size());
  for (std::size_t node : mask) {
    if (node >= logits.rows()) throw DataError("softmax_cross_entropy: mask node out of range");
    const int label = labels[node];
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw DataError("softmax_cross_entropy: label " + std::to_string(label) + " of node " + std::to_string(node) +
                      " is not a class index");
    }
    const auto z = logits.row(node);
    const double top = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (double v : z) total += std::exp(v - top);
    const double log_total = std::log(total);
    result.loss += (log_total - (z[label] - top)) * inv;
    auto g = result.gradient.row(node);
    for (std::size_t c = 0; c < classes; ++c) {
      const double p = std::exp(z[c] - top - log_total);
      g[c] = (p - (static_cast<std::size_t>(label) == c ? 1.0 : 0.0)) * inv;
    }
  }
  return result;
}

namespace {

struct KernelGrad {
  Matrix weights;
  double clip = 0.0;
};

// d loss / d K from d loss / d K_eff through quantize(weight_normalize(K)).
KernelGrad kernel_backward(const Conv1x1& k, const KernelRecord& record, const Matrix& grad_effective) {
  if (!record.quantizer) return {grad_effective, 0.0};
  const Quantizer& q = *record.quantizer;
  const double clip = dot(grad_effective, clip_gradient(record.normalized, q));
  const Matrix through = ste_input_gradient(record.normalized, q, grad_effective);
  return {weight_normalize_backward(k.weights, through), clip};
}

struct QuantGrad {
  Matrix input;
  double clip = 0.0;
};

QuantGrad quant_backward(const QuantRecord& record, const Matrix& grad) {
  if (!record.quantizer) return {grad, 0.0};
  const Quantizer& q = *record.quantizer;
  return {ste_input_gradient(record.input, q, grad), dot(grad, clip_gradient(record.input, q))};
}

void check_state(const std::optional<WaveletState>& state, const Matrix& block, std::size_t n, const char* what) {
  if (!state) throw DataError(std::string(what) + ": tape holds no wavelet state");
  if (state->hierarchy.node_count() != n || state->plan.row_count != n) {
    throw DataError(std::string(what) + ": tape hierarchy does not match the graph");
  }
  if (block.rows() != state->plan.kept.size()) throw DataError(std::string(what) + ": tape block does not match plan");
}

}  // namespace

WConvBackward backward_wconv(const Matrix& grad_out, const WaveletConvTape& tape, const WaveletConvLayer& layer,
                             const GraphContext& ctx) {
  if (layer.variant != WaveletVariant::v1 || layer.convs.size() != 1) {
    throw DataError("backward_wconv: only V1 layers with one convolution are differentiable");
  }
  const std::size_t n = ctx.graph.node_count();
  check_state(tape.state, tape.block, n, "backward_wconv");
  const Conv1x1& conv = layer.convs.front();
  if (grad_out.rows() != n || grad_out.cols() != conv.out_channels()) {
    throw DataError("backward_wconv: gradient shape does not match the layer output");
  }
  if (tape.block.cols() != conv.in_channels() || tape.kernel.rows() != conv.out_channels() ||
      tape.kernel.cols() != conv.in_channels()) {
    throw DataError("backward_wconv: tape does not match the layer");
  }
  const WaveletState& state = *tape.state;

  const Matrix grad_mixed = gather(haar_forward(state.hierarchy, grad_out), state.plan).dense;
  const Matrix grad_kernel_eff = transposed_matmul(grad_mixed, tape.block);
  const Matrix grad_block = matmul(grad_mixed, tape.kernel);

  WConvBackward out;
  KernelGrad kg = kernel_backward(conv, tape.kernel_record, grad_kernel_eff);
  out.grads.kernels.push_back(std::move(kg.weights));
  out.grads.weight_clips.push_back(kg.clip);

  QuantGrad coeff = quant_backward(tape.coefficients, grad_block);
  out.grads.coeff_clip = coeff.clip;
  Matrix grad_x = haar_inverse(state.hierarchy, scatter({std::move(coeff.input), state.plan}));
  if (layer.propagate) grad_x = ctx.propagation.apply(grad_x);

  QuantGrad in = quant_backward(tape.input, grad_x);
  out.grads.input_clip = in.clip;
  out.grad_input = std::move(in.input);
  return out;
}

WGCNIIBackward backward_wgcnii(const Matrix& grad_out, const WGCNIITape& tape, const WGCNIILayer& layer,
                               const GraphContext& ctx) {
  const std::size_t n = ctx.graph.node_count();
  const std::size_t c = layer.conv.out_channels();
  if (grad_out.rows() != n || grad_out.cols() != c) {
    throw DataError("backward_wgcnii: gradient shape does not match the layer output");
  }
  if (tape.pre_activation.rows() != n || tape.pre_activation.cols() != c || tape.mixing.rows() != c ||
      tape.mixing.cols() != c || tape.block.cols() != c) {
    throw DataError("backward_wgcnii: tape does not match the layer");
  }
  if (layer.wavelet) {
    check_state(tape.state, tape.block, n, "backward_wgcnii");
  } else if (tape.block.rows() != n) {
    throw DataError("backward_wgcnii: tape does not match the layer");
  }

  Matrix grad_pre = grad_out;
  for (std::size_t i = 0; i < grad_pre.size(); ++i) {
    if (!(tape.pre_activation.values()[i] > 0.0)) grad_pre.values()[i] = 0.0;
  }

  const Matrix grad_mixed =
      layer.wavelet ? gather(haar_forward(tape.state->hierarchy, grad_pre), tape.state->plan).dense : grad_pre;
  const Matrix grad_mixing = transposed_matmul(grad_mixed, tape.block);
  const Matrix grad_block = matmul(grad_mixed, tape.mixing);

  WGCNIIBackward out;
  KernelGrad kg = kernel_backward(layer.conv, tape.kernel_record, layer.beta_l * grad_mixing);
  out.grads.kernels.push_back(std::move(kg.weights));
  out.grads.weight_clips.push_back(kg.clip);

  Matrix grad_spatial;
  if (layer.wavelet) {
    QuantGrad coeff = quant_backward(tape.coefficients, grad_block);
    out.grads.coeff_clip = coeff.clip;
    grad_spatial = haar_inverse(tape.state->hierarchy, scatter({std::move(coeff.input), tape.state->plan}));
  } else {
    grad_spatial = grad_block;
  }

  out.grad_f0 = layer.alpha_l * grad_spatial;
  QuantGrad in = quant_backward(tape.input, (1.0 - layer.alpha_l) * ctx.propagation.apply(grad_spatial));
  out.grads.input_clip = in.clip;
  out.grad_input = std::move(in.input);
  return out;
}

ModelGradients model_backward(const Model& model, const ModelTape& tape, const GraphContext& ctx,
                              const Matrix& grad_output) {
  if (tape.layers.size() != model.layers.size()) throw DataError("model_backward: tape does not match the model");
  ModelGradients result;
  result.layers.resize(model.layers.size());
  Matrix grad = grad_output;
  Matrix grad_f0;
  for (std::size_t idx = model.layers.size(); idx-- > 0;) {
    const LayerTrace& trace = tape.layers[idx];
    if (grad.rows() != trace.output.rows() || grad.cols() != trace.output.cols()) {
      throw DataError("model_backward: gradient shape does not match layer " + std::to_string(idx));
    }
    if (idx == 0 && !grad_f0.empty()) grad = grad + grad_f0;
    if (trace.relu_applied) {
      for (std::size_t i = 0; i < grad.size(); ++i) {
        if (!(trace.output.values()[i] > 0.0)) grad.values()[i] = 0.0;
      }
    }
    const Layer& layer = model.layers[idx];
    if (const auto* lin = std::get_if<LinearLayer>(&layer)) {
      KernelRecord record;
      const Matrix kernel = effective_kernel(lin->conv, &record);
      KernelGrad kg = kernel_backward(lin->conv, record, transposed_matmul(grad, trace.input));
      LayerGradients& lg = result.layers[idx];
      lg.kernels.push_back(std::move(kg.weights));
      lg.weight_clips.push_back(kg.clip);
      lg.bias.assign(lin->bias.size(), 0.0);
      for (std::size_t r = 0; r < grad.rows(); ++r) {
        for (std::size_t c = 0; c < lg.bias.size(); ++c) lg.bias[c] += grad(r, c);
      }
      grad = matmul(grad, kernel);
    } else if (const auto* wc = std::get_if<WaveletConvLayer>(&layer)) {
      const auto* t = std::get_if<WaveletConvTape>(&trace.tape);
      if (!t) throw DataError("model_backward: layer " + std::to_string(idx) + " has no wavelet conv tape");
      WConvBackward b = backward_wconv(grad, *t, *wc, ctx);
      result.layers[idx] = std::move(b.grads);
      grad = std::move(b.grad_input);
    } else if (const auto* gc = std::get_if<WGCNIILayer>(&layer)) {
      const auto* t = std::get_if<WGCNIITape>(&trace.tape);
      if (!t) throw DataError("model_backward: layer " + std::to_string(idx) + " has no wgcnii tape");
      WGCNIIBackward b = backward_wgcnii(grad, *t, *gc, ctx);
      result.layers[idx] = std::move(b.grads);
      grad = std::move(b.grad_input);
      grad_f0 = grad_f0.empty() ? std::move(b.grad_f0) : grad_f0 + b.grad_f0;
    } else {
      throw DataError("model_backward: " + layer_kind(layer) + " layers are not trainable");
    }
  }
  result.grad_input = std::move(grad);
  return result;
}

namespace {

constexpr double kMinClip = 1e-8;

void step_matrix(Matrix& w, const Matrix& g, double lr, double weight_decay) {
  auto wv = w.values();
  const auto gv = g.values();
  for (std::size_t i = 0; i < wv.size(); ++i) wv[i] -= lr * (gv[i] + weight_decay * wv[i]);
}

void step_clip(std::optional<Quantizer>& q, const std::optional<Quantizer>& used, double grad, double lr) {
  if (!q) return;
  if (q->clip == 0.0) {
    if (!used) return;
    q->clip = used->clip;
  }
  q->clip = std::max(kMinClip, q->clip - lr * grad);
}

void step_kernel(Conv1x1& k, const LayerGradients& g, std::size_t i, const std::optional<Quantizer>& used, double lr,
                 double weight_decay) {
  step_matrix(k.weights, g.kernels[i], lr, weight_decay);
  step_clip(k.weight_quant, used, g.weight_clips[i], lr);
}

}  // namespace

void sgd_step(Model& model, const ModelGradients& grads, const ModelTape& tape, double lr, double weight_decay) {
  if (grads.layers.size() != model.layers.size() || tape.layers.size() != model.layers.size()) {
    throw DataError("sgd_step: gradients do not match the model");
  }
  for (std::size_t idx = 0; idx < model.layers.size(); ++idx) {
    const LayerGradients& g = grads.layers[idx];
    const LayerTrace& trace = tape.layers[idx];
    Layer& layer = model.layers[idx];
    if (auto* lin = std::get_if<LinearLayer>(&layer)) {
      KernelRecord record;
      effective_kernel(lin->conv, &record);
      step_kernel(lin->conv, g, 0, record.quantizer, lr, weight_decay);
      for (std::size_t c = 0; c < lin->bias.size(); ++c) lin->bias[c] -= lr * (g.bias[c] + weight_decay * lin->bias[c]);
    } else if (auto* wc = std::get_if<WaveletConvLayer>(&layer)) {
      const auto& t = std::get<WaveletConvTape>(trace.tape);
      step_kernel(wc->convs.front(), g, 0, t.kernel_record.quantizer, lr, weight_decay);
      step_clip(wc->input_quant, t.input.quantizer, g.input_clip, lr);
      step_clip(wc->coeff_quant, t.coefficients.quantizer, g.coeff_clip, lr);
    } else if (auto* gc = std::get_if<WGCNIILayer>(&layer)) {
      const auto& t = std::get<WGCNIITape>(trace.tape);
      step_kernel(gc->conv, g, 0, t.kernel_record.quantizer, lr, weight_decay);
      step_clip(gc->input_quant, t.input.quantizer, g.input_clip, lr);
      step_clip(gc->coeff_quant, t.coefficients.quantizer, g.coeff_clip, lr);
    }
  }
}

void TrainConfig::validate() const {
  if (epochs < 1) throw DomainError("epochs must be positive");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw DomainError("learning rate must be a finite non-negative number");
  if (!(weight_decay >= 0.0)) throw DomainError("weight decay must be non-negative");
  if (bits_w < 1 || bits_w > 32 || bits_a < 1 || bits_a > 32) throw DomainError("bits must be in [1, 32]");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in (0, 1]");
  if (levels < 1) throw DomainError("levels must be at least 1");
  if (hidden < 1) throw DomainError("hidden width must be positive");
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) throw DomainError("train fraction must lie in (0, 1]");
}

namespace {

Matrix glorot(std::size_t rows, std::size_t cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix w(rows, cols);
  for (double& v : w.values()) v = (2.0 * rng.uniform() - 1.0) * limit;
  return w;
}

// Kernels that pass through weight normalization start at its output scale.
Matrix unit_normal(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix w(rows, cols);
  for (double& v : w.values()) v = rng.normal();
  return w;
}

std::optional<Quantizer> quant_or_none(int bits, bool is_signed) {
  if (bits >= 32) return std::nullopt;
  return Quantizer{bits, is_signed, 0.0};
}

}  // namespace

Model make_model(const TrainConfig& cfg, std::size_t in_channels, std::size_t classes) {
  cfg.validate();
  if (in_channels == 0 || classes == 0) throw DimensionError("make_model: empty input or class dimension");
  Model model;
  Rng rng(mix_seed(cfg.seed, 0x6d6f64656cULL));
  const std::size_t h = cfg.hidden;
  model.layers.emplace_back(LinearLayer{Conv1x1{glorot(h, in_channels, rng), std::nullopt}, std::vector<double>(h)});
  for (int l = 1; l <= 2; ++l) {
    const WaveletConfig wavelet{cfg.alpha, cfg.levels, mix_seed(cfg.seed, static_cast<std::uint64_t>(l))};
    std::optional<Quantizer> wq = quant_or_none(cfg.bits_w, true);
    Conv1x1 conv{wq ? unit_normal(h, h, rng) : glorot(h, h, rng), wq};
    if (cfg.kind == ModelKind::wgcn) {
      WaveletConvLayer layer;
      layer.convs.push_back(std::move(conv));
      layer.wavelet = wavelet;
      layer.propagate = true;
      layer.input_quant = quant_or_none(cfg.bits_a, false);
      layer.coeff_quant = quant_or_none(cfg.bits_a, true);
      model.layers.emplace_back(std::move(layer));
    } else {
      WGCNIILayer layer;
      layer.conv = std::move(conv);
      layer.alpha_l = cfg.gcnii_alpha;
      layer.beta_l = WGCNIILayer::beta_for(cfg.gcnii_lambda, l);
      layer.wavelet = wavelet;
      layer.input_quant = quant_or_none(cfg.bits_a, false);
      layer.coeff_quant = quant_or_none(cfg.bits_a, true);
      model.layers.emplace_back(std::move(layer));
    }
  }
  model.layers.emplace_back(LinearLayer{Conv1x1{glorot(classes, h, rng), std::nullopt}, std::vector<double>(classes)});
  return model;
}

std::vector<int> predict(const Matrix& logits) {
  std::vector<int> out(logits.rows(), 0);
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto z = logits.row(r);
    out[r] = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
  }
  return out;
}

double accuracy(const Matrix& logits, const std::vector<int>& labels, const std::vector<std::size_t>& nodes) {
  if (nodes.empty()) return 0.0;
  const std::vector<int> pred = predict(logits);
  std::size_t hits = 0;
  for (std::size_t node : nodes) hits += pred[node] == labels[node] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(nodes.size());
}

TrainResult train_toy(const Graph& g, const FeatureMatrix& f, const std::vector<int>& labels, const TrainConfig& cfg) {
  cfg.validate();
  if (f.rows() != g.node_count()) throw DimensionError("train: feature rows do not match the graph");
  if (labels.size() != g.node_count()) throw DimensionError("train: label count does not match the graph");

  std::vector<std::size_t> labelled;
  int max_label = -1;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < -1) throw DataError("train: label " + std::to_string(labels[i]) + " of node " + std::to_string(i));
    if (labels[i] >= 0) {
      labelled.push_back(i);
      max_label = std::max(max_label, labels[i]);
    }
  }
  if (labelled.empty()) throw DataError("train: no labelled nodes");

  TrainResult result;
  Rng split_rng(mix_seed(cfg.seed, 0x73706c6974ULL));
  split_rng.shuffle(std::span<std::size_t>(labelled));
  const auto train_count = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(cfg.train_fraction * static_cast<double>(labelled.size()))));
  result.train_nodes.assign(labelled.begin(), labelled.begin() + static_cast<std::ptrdiff_t>(train_count));
  result.val_nodes.assign(labelled.begin() + static_cast<std::ptrdiff_t>(train_count), labelled.end());
  std::sort(result.train_nodes.begin(), result.train_nodes.end());
  std::sort(result.val_nodes.begin(), result.val_nodes.end());

  result.model = make_model(cfg, f.cols(), static_cast<std::size_t>(max_label) + 1);
  const GraphContext ctx(g);
  ModelTape tape;
  tape.freeze = cfg.freeze_hierarchy;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (!cfg.freeze_hierarchy) tape = ModelTape{};
    const Matrix logits = model_forward(result.model, ctx, f, &tape);
    const LossResult loss = softmax_cross_entropy(logits, labels, result.train_nodes);
    result.trace.push_back({epoch, loss.loss, accuracy(logits, labels, result.train_nodes),
                            accuracy(logits, labels, result.val_nodes)});
    const ModelGradients grads = model_backward(result.model, tape, ctx, loss.gradient);
    sgd_step(result.model, grads, tape, cfg.lr, cfg.weight_decay);
  }
  return result;
}

void write_trace(std::ostream& out, const std::vector<EpochRecord>& trace) {
  out << "epoch,loss,train_acc,val_acc\n";
  for (const EpochRecord& r : trace) {
    out << r.epoch << ',' << format_real(r.loss) << ',' << format_real(r.train_accuracy) << ','
        << format_real(r.val_accuracy) << '\n';
  }
}

}  // namespace wgc
