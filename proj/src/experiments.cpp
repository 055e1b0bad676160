#include "wavegcn/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "wavegcn/error.hpp"
#include "wavegcn/haar.hpp"
#include "wavegcn/io.hpp"
#include "wavegcn/quantization.hpp"
#include "wavegcn/rng.hpp"
#include "wavegcn/shrinkage.hpp"

namespace wgc {

PlantedData gen_planted(const PlantedConfig& cfg) {
  if (cfg.nodes == 0) throw DomainError("planted graph needs at least one node");
  if (cfg.communities == 0 || cfg.communities > cfg.nodes) {
    throw DomainError("community count must lie in [1, n]");
  }
  if (!(cfg.p_out >= 0.0 && cfg.p_out < cfg.p_in && cfg.p_in <= 1.0)) {
    throw DomainError("planted graph needs 0 <= p_out < p_in <= 1");
  }
  if (!(cfg.noise >= 0.0)) throw DomainError("noise must be non-negative");

  PlantedData data;
  const std::size_t n = cfg.nodes;
  data.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) data.labels[i] = static_cast<int>(i * cfg.communities / n);

  Rng edge_rng(mix_seed(cfg.seed, 0));
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double p = data.labels[i] == data.labels[j] ? cfg.p_in : cfg.p_out;
      if (edge_rng.uniform() < p) edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>(j)});
    }
  }
  data.graph = Graph(n, std::move(edges));

  Rng feature_rng(mix_seed(cfg.seed, 1));
  Matrix means(cfg.communities, cfg.channels);
  for (double& v : means.values()) v = feature_rng.normal();
  data.features = Matrix(n, cfg.channels);
  for (std::size_t i = 0; i < n; ++i) {
    const auto mean = means.row(static_cast<std::size_t>(data.labels[i]));
    auto row = data.features.row(i);
    for (std::size_t c = 0; c < cfg.channels; ++c) row[c] = mean[c] + cfg.noise * feature_rng.normal();
  }
  return data;
}

FeatureMatrix random_point_cloud(std::size_t n, std::size_t dims, std::uint64_t seed) {
  Rng rng(seed);
  Matrix points(n, dims);
  for (double& v : points.values()) v = rng.uniform();
  return points;
}

FeatureMatrix diffusion_smoothed_noise(const Graph& g, std::size_t channels, int steps, std::uint64_t seed) {
  if (steps < 0) throw DomainError("diffusion steps must be non-negative");
  Rng rng(seed);
  Matrix f(g.node_count(), channels);
  for (double& v : f.values()) v = rng.normal();
  const PropagationMatrix p = gcn_propagation(g);
  for (int s = 0; s < steps; ++s) f = p.apply(f);
  return f;
}

SweepInput synthetic_sweep_input(std::uint64_t seed) {
  SweepInput input;
  input.graph = knn_graph(random_point_cloud(kSweepNodes, 3, mix_seed(seed, 0)), kSweepNeighbours);
  input.features = diffusion_smoothed_noise(input.graph, kSweepChannels, kSweepDiffusionSteps, mix_seed(seed, 1));
  return input;
}

namespace {

// Signed quantization of kept coefficients with the clip at their max |x|.
void quantize_kept(Matrix& p, const std::vector<std::vector<bool>>* mask, int bits) {
  if (bits >= 32) return;
  double clip = 0.0;
  for (std::size_t r = 0; r < p.rows(); ++r) {
    for (std::size_t c = 0; c < p.cols(); ++c) {
      if (!mask || (*mask)[c][r]) clip = std::max(clip, std::abs(p(r, c)));
    }
  }
  if (clip == 0.0) return;
  const Matrix q = fake_quantize(p, Quantizer{bits, true, clip}).values;
  for (std::size_t r = 0; r < p.rows(); ++r) {
    for (std::size_t c = 0; c < p.cols(); ++c) {
      if (!mask || (*mask)[c][r]) p(r, c) = q(r, c);
    }
  }
}

}  // namespace

Matrix joint_reconstruction(const HaarHierarchy& h, const FeatureMatrix& f, double alpha, int coeff_bits) {
  const Matrix p = haar_forward(h, f);
  CompressedSignal cs = gather(p, select_topk(p, alpha));
  quantize_kept(cs.dense, nullptr, coeff_bits);
  return haar_inverse(h, scatter(cs));
}

Matrix individual_reconstruction(const HaarHierarchy& h, const FeatureMatrix& f, double alpha, int coeff_bits) {
  Matrix p = haar_forward(h, f);
  const std::size_t n = p.rows();
  const std::size_t k = kept_row_count(alpha, n);
  std::vector<std::vector<bool>> keep(p.cols(), std::vector<bool>(n, false));
  std::vector<std::size_t> order(n);
  for (std::size_t c = 0; c < p.cols(); ++c) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return std::abs(p(a, c)) > std::abs(p(b, c)); });
    for (std::size_t i = 0; i < k; ++i) keep[c][order[i]] = true;
  }
  for (std::size_t c = 0; c < p.cols(); ++c) {
    for (std::size_t r = 0; r < n; ++r) {
      if (!keep[c][r]) p(r, c) = 0.0;
    }
  }
  quantize_kept(p, &keep, coeff_bits);
  return haar_inverse(h, p);
}

std::vector<SweepRow> mse_sweep(const Graph& g, const FeatureMatrix& f, int levels, std::uint64_t seed, int q_min,
                                int q_max) {
  if (q_min < 0 || q_max < q_min) throw DomainError("sweep exponents must satisfy 0 <= q_min <= q_max");
  if (f.rows() != g.node_count()) throw DimensionError("sweep: feature rows do not match the graph");
  const HaarHierarchy h = build_hierarchy(g, f, levels, seed);

  bool has_negative = false;
  for (double v : f.values()) has_negative = has_negative || v < 0.0;
  const double f_clip = calibrate_clip(f);

  std::vector<SweepRow> rows;
  for (int q = q_min; q <= q_max; ++q) {
    const double ratio = std::ldexp(1.0, q);
    const double alpha = std::ldexp(1.0, -q);
    if (q <= 5) {
      const int bits = 32 >> q;
      const Matrix uq = fake_quantize(f, Quantizer{bits, has_negative, f_clip}).values;
      rows.push_back({"uniform-quant", ratio, 1.0, bits, mean_squared_error(f, uq)});
    }
    rows.push_back({"haar-joint", ratio, alpha, 32, mean_squared_error(f, joint_reconstruction(h, f, alpha))});
    rows.push_back(
        {"haar-individual", ratio, alpha, 32, mean_squared_error(f, individual_reconstruction(h, f, alpha))});
    rows.push_back({"haar-joint+8bit", ratio, alpha, 8, mean_squared_error(f, joint_reconstruction(h, f, alpha, 8))});
    rows.push_back(
        {"haar-individual+8bit", ratio, alpha, 8, mean_squared_error(f, individual_reconstruction(h, f, alpha, 8))});
  }
  return rows;
}

void write_sweep(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "scheme,ratio,alpha,bits,mse\n";
  for (const SweepRow& r : rows) {
    out << r.scheme << ',' << format_real(r.ratio) << ',' << format_real(r.alpha) << ',' << r.bits << ','
        << format_real(r.mse) << '\n';
  }
}

CompressionRow compression_row(std::size_t n, std::size_t channels, double alpha, int bits_a) {
  CompressionRow row;
  row.channels = channels;
  row.alpha = alpha;
  row.bits_a = bits_a;
  row.ratio = count_activation_compression(bits_a, alpha);
  row.dense_bytes = static_cast<double>(n * channels) * 4.0;
  row.compressed_bytes = alpha * static_cast<double>(n * channels) * static_cast<double>(bits_a) / 8.0;
  return row;
}

std::vector<CompressionRow> report_compression(const Model& model, std::size_t n) {
  std::vector<CompressionRow> rows;
  CompressionRow total;
  total.layer = "hidden_total";
  total.kind = "-";
  bool any_hidden = false;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const Layer& layer = model.layers[i];
    double alpha = 1.0;
    int bits = 32;
    std::visit(
        [&](const auto& l) {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, WaveletConvLayer>) {
            alpha = l.wavelet.alpha;
            if (l.input_quant) bits = l.input_quant->bits;
          } else if constexpr (!std::is_same_v<T, LinearLayer>) {
            if (l.wavelet) alpha = l.wavelet->alpha;
            if (l.input_quant) bits = l.input_quant->bits;
          }
        },
        layer);
    CompressionRow row = compression_row(n, layer_in_channels(layer), alpha, bits);
    row.layer = std::to_string(i);
    row.kind = layer_kind(layer);
    if (!std::holds_alternative<LinearLayer>(layer)) {
      any_hidden = true;
      total.channels += row.channels;
      total.dense_bytes += row.dense_bytes;
      total.compressed_bytes += row.compressed_bytes;
    }
    rows.push_back(std::move(row));
  }
  if (any_hidden) {
    total.ratio = total.dense_bytes / total.compressed_bytes;
    const auto first_hidden = std::find_if(rows.begin(), rows.end(), [](const CompressionRow& r) {
      return r.kind != "linear";
    });
    const bool uniform = std::all_of(rows.begin(), rows.end(), [&](const CompressionRow& r) {
      return r.kind == "linear" || (r.alpha == first_hidden->alpha && r.bits_a == first_hidden->bits_a);
    });
    total.alpha = uniform ? first_hidden->alpha : 0.0;
    total.bits_a = uniform ? first_hidden->bits_a : 0;
    rows.push_back(total);
  }
  return rows;
}

void write_compression(std::ostream& out, const std::vector<CompressionRow>& rows) {
  out << "layer,kind,channels,alpha,bits_a,dense_bytes,compressed_bytes,ratio\n";
  for (const CompressionRow& r : rows) {
    out << r.layer << ',' << r.kind << ',' << r.channels << ',' << format_real(r.alpha) << ',' << r.bits_a << ','
        << format_real(r.dense_bytes) << ',' << format_real(r.compressed_bytes) << ',' << format_real(r.ratio)
        << '\n';
  }
}

}  // namespace wgc
