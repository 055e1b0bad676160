#include "wavegcn/model.hpp"

#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "wavegcn/error.hpp"
#include "wavegcn/io.hpp"

namespace wgc {

namespace {

template <typename... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <typename... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

constexpr int kFullPrecision = 32;

}  // namespace

std::string layer_kind(const Layer& layer) {
  return std::visit(Overloaded{
                        [](const LinearLayer&) { return std::string("linear"); },
                        [](const WaveletConvLayer& l) {
                          return std::string(l.variant == WaveletVariant::v1 ? "wconv_v1" : "wconv_v2");
                        },
                        [](const EdgeConvCheap&) { return std::string("edgeconv_cheap"); },
                        [](const WGCNIILayer&) { return std::string("wgcnii"); },
                    },
                    layer);
}

std::size_t layer_in_channels(const Layer& layer) {
  return std::visit(Overloaded{
                        [](const LinearLayer& l) { return l.conv.in_channels(); },
                        [](const WaveletConvLayer& l) { return l.in_channels(); },
                        [](const EdgeConvCheap& l) { return l.k1.in_channels(); },
                        [](const WGCNIILayer& l) { return l.conv.in_channels(); },
                    },
                    layer);
}

std::size_t layer_out_channels(const Layer& layer) {
  return std::visit(Overloaded{
                        [](const LinearLayer& l) { return l.conv.out_channels(); },
                        [](const WaveletConvLayer& l) { return l.out_channels(); },
                        [](const EdgeConvCheap& l) { return l.k1.out_channels(); },
                        [](const WGCNIILayer& l) { return l.conv.out_channels(); },
                    },
                    layer);
}

Matrix model_forward(const Model& model, const GraphContext& ctx, const FeatureMatrix& input, ModelTape* tape) {
  if (model.layers.empty()) throw DataError("model has no layers");
  if (input.rows() != ctx.graph.node_count()) {
    throw DimensionError("model input has " + std::to_string(input.rows()) + " rows, graph has " +
                         std::to_string(ctx.graph.node_count()) + " nodes");
  }
  if (tape) tape->layers.resize(model.layers.size());

  Matrix x = input;
  Matrix f0;
  const std::size_t last = model.layers.size() - 1;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    LayerTrace* trace = tape ? &tape->layers[i] : nullptr;
    if (layer_in_channels(model.layers[i]) != x.cols()) {
      throw DimensionError("layer " + std::to_string(i) + " expects " +
                           std::to_string(layer_in_channels(model.layers[i])) + " channels, got " +
                           std::to_string(x.cols()));
    }
    bool model_relu = false;
    Matrix out = std::visit(
        Overloaded{
            [&](const LinearLayer& l) {
              Matrix y = conv1x1(x, l.conv);
              for (std::size_t r = 0; r < y.rows(); ++r) {
                auto row = y.row(r);
                for (std::size_t c = 0; c < l.bias.size(); ++c) row[c] += l.bias[c];
              }
              model_relu = i != last;
              return y;
            },
            [&](const WaveletConvLayer& l) {
              if (l.variant == WaveletVariant::v2) return compressed_conv_v2(x, l, ctx);
              WaveletConvTape* t = nullptr;
              if (trace) {
                if (!std::holds_alternative<WaveletConvTape>(trace->tape)) trace->tape = WaveletConvTape{};
                t = &std::get<WaveletConvTape>(trace->tape);
                t->freeze = tape->freeze;
              }
              model_relu = i != last;
              return compressed_conv_v1(x, l, ctx, t);
            },
            [&](const EdgeConvCheap& l) { return edge_conv_cheap(x, ctx, l); },
            [&](const WGCNIILayer& l) {
              if (f0.empty()) throw DataError("wgcnii layer cannot be the first layer of a model");
              WGCNIITape* t = nullptr;
              if (trace) {
                if (!std::holds_alternative<WGCNIITape>(trace->tape)) trace->tape = WGCNIITape{};
                t = &std::get<WGCNIITape>(trace->tape);
                t->freeze = tape->freeze;
              }
              return wgcnii_layer(x, f0, ctx, l, t);
            },
        },
        model.layers[i]);

    Matrix activated = model_relu ? relu(out) : out;
    if (trace) {
      trace->input = std::move(x);
      trace->output = std::move(out);
      trace->relu_applied = model_relu;
    }
    x = std::move(activated);
    if (i == 0) f0 = x;
  }
  return x;
}

namespace {

struct LayerHeader {
  std::string kind;
  std::size_t c_in = 0;
  std::size_t c_out = 0;
  double alpha = 1.0;
  int levels = kDefaultLevels;
  std::uint64_t seed = 0;
  int bits_w = kFullPrecision;
  int bits_a = kFullPrecision;
  double input_clip = 0.0;
  double coeff_clip = 0.0;
  std::map<std::string, std::string> options;
};

std::optional<Quantizer> make_quant(int bits, bool is_signed, double clip) {
  if (bits >= kFullPrecision) return std::nullopt;
  return Quantizer{bits, is_signed, clip};
}

void write_kernel(std::ostream& out, const Conv1x1& k) {
  out << "kernel " << k.weights.rows() << ' ' << k.weights.cols() << ' '
      << (k.weight_quant ? k.weight_quant->bits : kFullPrecision) << ' '
      << format_real(k.weight_quant ? k.weight_quant->clip : 0.0) << '\n';
  for (std::size_t r = 0; r < k.weights.rows(); ++r) {
    const auto row = k.weights.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ' ';
      out << format_real(row[c]);
    }
    out << '\n';
  }
}

void write_header(std::ostream& out, std::size_t index, const std::string& kind, std::size_t c_in, std::size_t c_out,
                  const std::optional<WaveletConfig>& wavelet, int bits_w, const std::optional<Quantizer>& input_q,
                  const std::optional<Quantizer>& coeff_q, const std::string& options) {
  const WaveletConfig cfg = wavelet.value_or(WaveletConfig{});
  out << "layer " << index << '\n';
  out << "kind " << kind << '\n';
  out << "dims " << c_in << ' ' << c_out << '\n';
  out << "alpha " << format_real(cfg.alpha) << '\n';
  out << "levels " << cfg.levels << '\n';
  out << "seed " << cfg.seed << '\n';
  out << "bits " << bits_w << ' ' << (input_q ? input_q->bits : kFullPrecision) << '\n';
  out << "clips " << format_real(input_q ? input_q->clip : 0.0) << ' ' << format_real(coeff_q ? coeff_q->clip : 0.0)
      << '\n';
  out << "options" << (options.empty() ? "" : " ") << options << '\n';
}

int kernel_bits(const Conv1x1& k) { return k.weight_quant ? k.weight_quant->bits : kFullPrecision; }

}  // namespace

void write_model(std::ostream& out, const Model& model) {
  out << "layers: " << model.layers.size() << '\n';
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const Layer& layer = model.layers[i];
    const std::string kind = layer_kind(layer);
    std::visit(Overloaded{
                   [&](const LinearLayer& l) {
                     write_header(out, i, kind, l.conv.in_channels(), l.conv.out_channels(), std::nullopt,
                                  kernel_bits(l.conv), std::nullopt, std::nullopt, "");
                     out << "kernels 1\n";
                     write_kernel(out, l.conv);
                     out << "bias " << l.bias.size() << '\n';
                     for (std::size_t c = 0; c < l.bias.size(); ++c) out << (c ? " " : "") << format_real(l.bias[c]);
                     if (!l.bias.empty()) out << '\n';
                   },
                   [&](const WaveletConvLayer& l) {
                     write_header(out, i, kind, l.in_channels(), l.out_channels(), l.wavelet,
                                  kernel_bits(l.convs.front()), l.input_quant, l.coeff_quant,
                                  std::string("propagate=") + (l.propagate ? "1" : "0"));
                     out << "kernels " << l.convs.size() << '\n';
                     for (const Conv1x1& k : l.convs) write_kernel(out, k);
                     out << "bias 0\n";
                   },
                   [&](const EdgeConvCheap& l) {
                     write_header(out, i, kind, l.k1.in_channels(), l.k1.out_channels(), l.wavelet,
                                  kernel_bits(l.k1), l.input_quant, l.coeff_quant,
                                  std::string("aggregator=") + (l.aggregator == Aggregator::max ? "max" : "mean") +
                                      " wavelet=" + (l.wavelet ? "1" : "0"));
                     out << "kernels 2\n";
                     write_kernel(out, l.k1);
                     write_kernel(out, l.k2);
                     out << "bias 0\n";
                   },
                   [&](const WGCNIILayer& l) {
                     write_header(out, i, kind, l.conv.in_channels(), l.conv.out_channels(), l.wavelet,
                                  kernel_bits(l.conv), l.input_quant, l.coeff_quant,
                                  "gcnii_alpha=" + format_real(l.alpha_l) + " gcnii_beta=" + format_real(l.beta_l) +
                                      " wavelet=" + (l.wavelet ? "1" : "0"));
                     out << "kernels 1\n";
                     write_kernel(out, l.conv);
                     out << "bias 0\n";
                   },
               },
               layer);
    out << "end\n";
  }
}

namespace {

class TokenReader {
 public:
  explicit TokenReader(std::istream& in) : in_(in) {}

  std::string line(const std::string& expected_key) {
    std::string text;
    while (std::getline(in_, text)) {
      ++number_;
      if (text.find_first_not_of(" \t\r") != std::string::npos) break;
      text.clear();
    }
    if (text.empty()) throw error("unexpected end of model file, expected \"" + expected_key + "\"");
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (!expected_key.empty() && text.rfind(expected_key, 0) != 0) {
      throw error("expected \"" + expected_key + "\"");
    }
    return text;
  }

  DataError error(const std::string& what) const {
    return DataError("model file: " + what + " at line " + std::to_string(number_));
  }

 private:
  std::istream& in_;
  std::size_t number_ = 0;
};

template <typename T>
T read_value(std::istringstream& s, TokenReader& reader, const char* what) {
  T v{};
  if (!(s >> v)) throw reader.error(std::string("malformed ") + what);
  return v;
}

Conv1x1 read_kernel(TokenReader& reader) {
  std::istringstream head(reader.line("kernel"));
  std::string tag;
  head >> tag;
  const auto rows = read_value<std::size_t>(head, reader, "kernel rows");
  const auto cols = read_value<std::size_t>(head, reader, "kernel cols");
  const int bits = read_value<int>(head, reader, "kernel bits");
  const double clip = read_value<double>(head, reader, "kernel clip");
  Conv1x1 k{Matrix(rows, cols), make_quant(bits, true, clip)};
  for (std::size_t r = 0; r < rows; ++r) {
    std::istringstream row(reader.line(""));
    for (std::size_t c = 0; c < cols; ++c) k.weights(r, c) = read_value<double>(row, reader, "kernel value");
  }
  return k;
}

}  // namespace

Model parse_model(std::istream& in) {
  TokenReader reader(in);
  std::size_t count = 0;
  {
    std::istringstream head(reader.line("layers:"));
    std::string tag;
    head >> tag;
    count = read_value<std::size_t>(head, reader, "layer count");
  }
  Model model;
  for (std::size_t i = 0; i < count; ++i) {
    LayerHeader h;
    std::string tag;
    {
      std::istringstream s(reader.line("layer"));
      s >> tag;
      if (read_value<std::size_t>(s, reader, "layer index") != i) throw reader.error("layer index out of order");
    }
    {
      std::istringstream s(reader.line("kind"));
      s >> tag >> h.kind;
    }
    {
      std::istringstream s(reader.line("dims"));
      s >> tag;
      h.c_in = read_value<std::size_t>(s, reader, "dims");
      h.c_out = read_value<std::size_t>(s, reader, "dims");
    }
    {
      std::istringstream s(reader.line("alpha"));
      s >> tag;
      h.alpha = read_value<double>(s, reader, "alpha");
    }
    {
      std::istringstream s(reader.line("levels"));
      s >> tag;
      h.levels = read_value<int>(s, reader, "levels");
    }
    {
      std::istringstream s(reader.line("seed"));
      s >> tag;
      h.seed = read_value<std::uint64_t>(s, reader, "seed");
    }
    {
      std::istringstream s(reader.line("bits"));
      s >> tag;
      h.bits_w = read_value<int>(s, reader, "bits");
      h.bits_a = read_value<int>(s, reader, "bits");
    }
    {
      std::istringstream s(reader.line("clips"));
      s >> tag;
      h.input_clip = read_value<double>(s, reader, "clips");
      h.coeff_clip = read_value<double>(s, reader, "clips");
    }
    {
      std::istringstream s(reader.line("options"));
      s >> tag;
      std::string kv;
      while (s >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw reader.error("malformed option \"" + kv + "\"");
        h.options[kv.substr(0, eq)] = kv.substr(eq + 1);
      }
    }
    std::size_t kernel_count = 0;
    {
      std::istringstream s(reader.line("kernels"));
      s >> tag;
      kernel_count = read_value<std::size_t>(s, reader, "kernel count");
    }
    std::vector<Conv1x1> kernels;
    for (std::size_t k = 0; k < kernel_count; ++k) kernels.push_back(read_kernel(reader));
    std::vector<double> bias;
    {
      std::istringstream s(reader.line("bias"));
      s >> tag;
      const auto n_bias = read_value<std::size_t>(s, reader, "bias count");
      if (n_bias > 0) {
        std::istringstream values(reader.line(""));
        for (std::size_t b = 0; b < n_bias; ++b) bias.push_back(read_value<double>(values, reader, "bias value"));
      }
    }
    reader.line("end");

    const WaveletConfig wavelet{h.alpha, h.levels, h.seed};
    auto option = [&](const std::string& key, const std::string& fallback) {
      const auto it = h.options.find(key);
      return it == h.options.end() ? fallback : it->second;
    };
    auto need_kernels = [&](std::size_t expected) {
      if (kernels.size() != expected) {
        throw reader.error(h.kind + " layer needs " + std::to_string(expected) + " kernels");
      }
    };
    if (h.kind == "linear") {
      need_kernels(1);
      if (!bias.empty() && bias.size() != kernels[0].out_channels()) throw reader.error("bias size mismatch");
      model.layers.emplace_back(LinearLayer{kernels[0], bias});
    } else if (h.kind == "wconv_v1" || h.kind == "wconv_v2") {
      if (kernels.empty()) throw reader.error("wavelet conv layer needs kernels");
      WaveletConvLayer l;
      l.variant = h.kind == "wconv_v1" ? WaveletVariant::v1 : WaveletVariant::v2;
      l.convs = kernels;
      l.wavelet = wavelet;
      l.propagate = option("propagate", "0") == "1";
      l.input_quant = make_quant(h.bits_a, false, h.input_clip);
      l.coeff_quant = make_quant(h.bits_a, true, h.coeff_clip);
      model.layers.emplace_back(std::move(l));
    } else if (h.kind == "edgeconv_cheap") {
      need_kernels(2);
      EdgeConvCheap l{kernels[0], kernels[1], option("aggregator", "max") == "mean" ? Aggregator::mean : Aggregator::max,
                      std::nullopt, make_quant(h.bits_a, false, h.input_clip),
                      make_quant(h.bits_a, true, h.coeff_clip)};
      if (option("wavelet", "1") == "1") l.wavelet = wavelet;
      model.layers.emplace_back(std::move(l));
    } else if (h.kind == "wgcnii") {
      need_kernels(1);
      WGCNIILayer l;
      l.conv = kernels[0];
      l.alpha_l = std::stod(option("gcnii_alpha", "0.1"));
      l.beta_l = std::stod(option("gcnii_beta", "0.1"));
      if (option("wavelet", "1") == "1") l.wavelet = wavelet;
      l.input_quant = make_quant(h.bits_a, false, h.input_clip);
      l.coeff_quant = make_quant(h.bits_a, true, h.coeff_clip);
      model.layers.emplace_back(std::move(l));
    } else {
      throw reader.error("unknown layer kind \"" + h.kind + "\"");
    }
    if (layer_in_channels(model.layers.back()) != h.c_in || layer_out_channels(model.layers.back()) != h.c_out) {
      throw reader.error("layer " + std::to_string(i) + " dims do not match its kernels");
    }
  }
  return model;
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file " + path.string());
  return parse_model(in);
}

}  // namespace wgc
