#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "wavegcn/graph.hpp"
#include "wavegcn/matrix.hpp"
#include "wavegcn/model.hpp"

namespace wgc {

struct PlantedData {
  Graph graph;
  FeatureMatrix features;
  std::vector<int> labels;
};

struct PlantedConfig {
  std::size_t nodes = 100;
  std::size_t communities = 2;
  double p_in = 0.1;
  double p_out = 0.01;
  std::size_t channels = 16;
  double noise = 1.0;   // std of the per-node noise around the community mean
  std::uint64_t seed = 0;
};

// Stochastic block model with contiguous, balanced communities. Features
// are a per-community N(0, 1) mean plus N(0, noise^2) noise. The graph may
// be disconnected. Throws DomainError unless 0 <= p_out < p_in <= 1.
PlantedData gen_planted(const PlantedConfig& cfg);

// n points uniform in the unit cube [0, 1)^dims.
FeatureMatrix random_point_cloud(std::size_t n, std::size_t dims, std::uint64_t seed);

// P^steps applied to unit Gaussian noise with c channels.
FeatureMatrix diffusion_smoothed_noise(const Graph& g, std::size_t channels, int steps, std::uint64_t seed);

struct SweepInput {
  Graph graph;
  FeatureMatrix features;
};

inline constexpr std::size_t kSweepNodes = 1024;
inline constexpr std::size_t kSweepChannels = 16;
inline constexpr std::size_t kSweepNeighbours = 20;
inline constexpr int kSweepDiffusionSteps = 10;

// Default sweep workload: kNN graph (k = 20) on 1024 unit-cube points and
// 16 channels of diffusion-smoothed noise.
SweepInput synthetic_sweep_input(std::uint64_t seed);

struct SweepRow {
  std::string scheme;
  double ratio = 1.0;
  double alpha = 1.0;
  int bits = 32;
  double mse = 0.0;
};

// Schemes per ratio 2^q: uniform-quant at 32/2^q bits (omitted below one
// bit), haar-joint and haar-individual at alpha = 2^-q, and both haar
// schemes again with 8-bit coefficients.
std::vector<SweepRow> mse_sweep(const Graph& g, const FeatureMatrix& f, int levels, std::uint64_t seed, int q_min = 1,
                                int q_max = 7);

// CSV: scheme,ratio,alpha,bits,mse.
void write_sweep(std::ostream& out, const std::vector<SweepRow>& rows);

// Per-channel top-k on the wavelet coefficients: every column keeps its own
// ceil(alpha n) largest entries.
Matrix individual_reconstruction(const HaarHierarchy& h, const FeatureMatrix& f, double alpha, int coeff_bits = 32);
Matrix joint_reconstruction(const HaarHierarchy& h, const FeatureMatrix& f, double alpha, int coeff_bits = 32);

struct CompressionRow {
  std::string layer;
  std::string kind;
  std::size_t channels = 0;
  double alpha = 1.0;
  int bits_a = 32;
  double dense_bytes = 0.0;
  double compressed_bytes = 0.0;
  double ratio = 1.0;
};

// Activation bytes entering each layer for an n-node graph: dense float32
// baseline against alpha n rows at bits_a bits. The last row, hidden_total,
// sums the wavelet layers.
std::vector<CompressionRow> report_compression(const Model& model, std::size_t n);

// Single-layer form used without a model.
CompressionRow compression_row(std::size_t n, std::size_t channels, double alpha, int bits_a);

// CSV: layer,kind,channels,alpha,bits_a,dense_bytes,compressed_bytes,ratio.
void write_compression(std::ostream& out, const std::vector<CompressionRow>& rows);

}  // namespace wgc
