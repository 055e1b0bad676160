// wavegcn: command-line front end for the compressed graph wavelet library.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>

#include "wavegcn/error.hpp"
#include "wavegcn/experiments.hpp"
#include "wavegcn/graph.hpp"
#include "wavegcn/haar.hpp"
#include "wavegcn/io.hpp"
#include "wavegcn/model.hpp"
#include "wavegcn/shrinkage.hpp"
#include "wavegcn/training.hpp"

namespace fs = std::filesystem;
using namespace wgc;

namespace {

struct Common {
  std::string graph;
  std::string features;
  std::string labels;
  std::string out;
  std::string model;
  int levels = kDefaultLevels;
  double alpha = 1.0;
  int bits_w = 8;
  int bits_a = 8;
  std::uint64_t seed = 0;
};

// Sends text to --out when given, stdout otherwise.
void emit(const std::string& out, const std::string& text) {
  if (out.empty()) {
    std::cout << text;
  } else {
    write_file(out, text);
  }
}

std::string with_suffix(const std::string& base, const char* suffix) { return base + suffix; }

int run_transform(const Common& o) {
  const Graph g = load_graph(o.graph);
  const FeatureMatrix f = load_features(o.features);
  const HaarHierarchy h = build_hierarchy(g, f, o.levels, o.seed);
  const Matrix p = haar_forward(h, f);

  std::ostringstream coeffs, layout, hier, stats;
  write_features(coeffs, p);
  write_layout(layout, h);
  write_hierarchy(hier, h);
  write_file(o.out, coeffs.str());
  write_file(with_suffix(o.out, ".layout"), layout.str());
  write_file(with_suffix(o.out, ".hier"), hier.str());

  stats << "level,fine_nodes,pairs,orphan,unmatched_before_random\n";
  for (std::size_t l = 0; l < h.level_count(); ++l) {
    const PairGraph& pg = h.levels()[l].pair_graph;
    stats << l + 1 << ',' << pg.node_count << ',' << pg.pairs.size() << ','
          << (pg.orphan ? std::to_string(*pg.orphan) : std::string("-1")) << ',' << pg.unmatched_before_random
          << '\n';
  }
  std::cout << stats.str();
  return 0;
}

int run_compress(const Common& o) {
  const Graph g = load_graph(o.graph);
  const FeatureMatrix f = load_features(o.features);
  const HaarHierarchy h = build_hierarchy(g, f, o.levels, o.seed);
  const Matrix p = haar_forward(h, f);
  const CompressedSignal cs = gather(p, select_topk(p, o.alpha));

  std::ostringstream coeffs, kept, hier;
  write_features(coeffs, cs.dense);
  write_indices(kept, cs.plan.kept);
  write_hierarchy(hier, h);
  write_file(with_suffix(o.out, ".coeffs"), coeffs.str());
  write_file(with_suffix(o.out, ".kept"), kept.str());
  write_file(with_suffix(o.out, ".hier"), hier.str());

  const double mse = mean_squared_error(f, haar_inverse(h, scatter(cs)));
  std::cout << "alpha,kept_rows,rows,mse\n"
            << format_real(o.alpha) << ',' << cs.plan.kept.size() << ',' << p.rows() << ',' << format_real(mse)
            << '\n';
  return 0;
}

int run_reconstruct(const std::string& in, const std::string& out) {
  std::istringstream hier_text(read_file(with_suffix(in, ".hier")));
  const HaarHierarchy h = parse_hierarchy(hier_text);
  const FeatureMatrix dense = load_features(with_suffix(in, ".coeffs"));
  std::istringstream kept_text(read_file(with_suffix(in, ".kept")));
  std::vector<std::size_t> kept = parse_indices(kept_text);

  if (dense.rows() != kept.size()) {
    throw DimensionError("reconstruct: " + std::to_string(dense.rows()) + " coefficient rows but " +
                         std::to_string(kept.size()) + " kept indices");
  }
  const std::size_t n = h.node_count();
  for (std::size_t idx : kept) {
    if (idx >= n) throw DataError("reconstruct: kept index " + std::to_string(idx) + " out of range");
  }
  ShrinkagePlan plan;
  plan.row_count = n;
  plan.alpha = n ? static_cast<double>(kept.size()) / static_cast<double>(n) : 1.0;
  plan.kept = std::move(kept);
  const FeatureMatrix f = haar_inverse(h, scatter({dense, std::move(plan)}));

  std::ostringstream text;
  write_features(text, f);
  emit(out, text.str());
  return 0;
}

int run_sweep(const Common& o, int q_min, int q_max) {
  Graph g;
  FeatureMatrix f;
  if (o.graph.empty() != o.features.empty()) throw DataError("mse-sweep: give both --graph and --features, or neither");
  if (o.graph.empty()) {
    SweepInput input = synthetic_sweep_input(o.seed);
    g = std::move(input.graph);
    f = std::move(input.features);
  } else {
    g = load_graph(o.graph);
    f = load_features(o.features);
  }
  std::ostringstream text;
  write_sweep(text, mse_sweep(g, f, o.levels, o.seed, q_min, q_max));
  emit(o.out, text.str());
  return 0;
}

int run_train(const Common& o, TrainConfig cfg, const std::string& kind, const std::string& trace_path) {
  if (kind == "wgcn") {
    cfg.kind = ModelKind::wgcn;
  } else if (kind == "wgcnii") {
    cfg.kind = ModelKind::wgcnii;
  } else {
    throw DataError("train: unknown model kind \"" + kind + "\"");
  }
  cfg.alpha = o.alpha;
  cfg.bits_w = o.bits_w;
  cfg.bits_a = o.bits_a;
  cfg.levels = o.levels;
  cfg.seed = o.seed;

  const Graph g = load_graph(o.graph);
  const FeatureMatrix f = load_features(o.features);
  const std::vector<int> labels = load_labels(o.labels);
  const TrainResult result = train_toy(g, f, labels, cfg);

  std::ostringstream model_text, trace;
  write_model(model_text, result.model);
  write_file(o.out, model_text.str());
  write_trace(trace, result.trace);
  emit(trace_path, trace.str());
  return 0;
}

int run_infer(const Common& o) {
  const Model model = load_model(o.model);
  const GraphContext ctx(load_graph(o.graph));
  const Matrix logits = model_forward(model, ctx, load_features(o.features));
  const std::vector<int> pred = predict(logits);

  std::ostringstream text;
  text << "node,prediction";
  for (std::size_t c = 0; c < logits.cols(); ++c) text << ",logit_" << c;
  text << '\n';
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    text << i << ',' << pred[i];
    for (double v : logits.row(i)) text << ',' << format_real(v);
    text << '\n';
  }
  emit(o.out, text.str());
  return 0;
}

int run_report(const Common& o, std::size_t nodes, std::size_t channels) {
  std::vector<CompressionRow> rows;
  if (!o.graph.empty()) nodes = load_graph(o.graph).node_count();
  if (!o.model.empty()) {
    rows = report_compression(load_model(o.model), nodes);
  } else {
    CompressionRow row = compression_row(nodes, channels, o.alpha, o.bits_a);
    row.layer = "0";
    row.kind = "wconv_v1";
    rows.push_back(row);
  }
  std::ostringstream text;
  write_compression(text, rows);
  emit(o.out, text.str());
  return 0;
}

int run_gen_planted(PlantedConfig cfg, std::uint64_t seed, const std::string& out) {
  cfg.seed = seed;
  const PlantedData data = gen_planted(cfg);
  std::ostringstream graph, features, labels;
  write_graph(graph, data.graph);
  write_features(features, data.features);
  write_labels(labels, data.labels);
  write_file(with_suffix(out, ".graph"), graph.str());
  write_file(with_suffix(out, ".features"), features.str());
  write_file(with_suffix(out, ".labels"), labels.str());
  std::cout << "nodes,edges,components\n"
            << data.graph.node_count() << ',' << data.graph.edge_count() << ',' << data.graph.component_count()
            << '\n';
  return 0;
}

void add_graph_inputs(CLI::App* cmd, Common& o) {
  cmd->add_option("--graph", o.graph, "graph file (\"n m\" then m lines \"u v\")")->required()->check(CLI::ExistingFile);
  cmd->add_option("--features", o.features, "feature file (\"n c\" then n rows)")->required()->check(CLI::ExistingFile);
}

void add_levels_seed(CLI::App* cmd, Common& o) {
  cmd->add_option("--levels", o.levels, "transform levels")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "random seed")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compressed graph Haar wavelet convolutions"};
  app.require_subcommand(1);
  Common o;

  auto* transform = app.add_subcommand("transform", "multi-level Haar transform of a feature matrix");
  add_graph_inputs(transform, o);
  add_levels_seed(transform, o);
  transform->add_option("--out", o.out, "coefficient file; .layout and .hier written alongside")->required();

  auto* compress = app.add_subcommand("compress", "joint top-k shrinkage of the wavelet coefficients");
  add_graph_inputs(compress, o);
  add_levels_seed(compress, o);
  compress->add_option("--alpha", o.alpha, "fraction of coefficient rows kept")->required();
  compress->add_option("--out", o.out, "output prefix for .coeffs, .kept and .hier")->required();

  std::string reconstruct_in;
  auto* reconstruct = app.add_subcommand("reconstruct", "inverse transform of a compressed signal");
  reconstruct->add_option("--in", reconstruct_in, "prefix written by compress")->required();
  reconstruct->add_option("--out", o.out, "feature file (stdout when omitted)");

  int q_min = 1;
  int q_max = 7;
  auto* sweep = app.add_subcommand("mse-sweep", "reconstruction error against compression ratio");
  sweep->add_option("--graph", o.graph, "graph file (synthetic kNN point cloud when omitted)")
      ->check(CLI::ExistingFile);
  sweep->add_option("--features", o.features, "feature file")->check(CLI::ExistingFile);
  add_levels_seed(sweep, o);
  sweep->add_option("--q-min", q_min, "smallest ratio exponent")->capture_default_str();
  sweep->add_option("--q-max", q_max, "largest ratio exponent")->capture_default_str();
  sweep->add_option("--out", o.out, "CSV file (stdout when omitted)");

  TrainConfig train_cfg;
  std::string kind = "wgcn";
  std::string trace_path;
  auto* train = app.add_subcommand("train", "train a two-layer quantized wavelet GCN");
  add_graph_inputs(train, o);
  train->add_option("--labels", o.labels, "one class id per line, -1 for unlabeled")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--alpha", o.alpha, "fraction of coefficient rows kept")->capture_default_str();
  train->add_option("--bits-w", o.bits_w, "weight bits")->capture_default_str()->check(CLI::Range(1, 32));
  train->add_option("--bits-a", o.bits_a, "activation bits")->capture_default_str()->check(CLI::Range(1, 32));
  add_levels_seed(train, o);
  train->add_option("--epochs", train_cfg.epochs, "training epochs")->capture_default_str();
  train->add_option("--lr", train_cfg.lr, "learning rate")->capture_default_str();
  train->add_option("--weight-decay", train_cfg.weight_decay, "weight decay")->capture_default_str();
  train->add_option("--hidden", train_cfg.hidden, "hidden channels")->capture_default_str();
  train->add_option("--kind", kind, "wgcn or wgcnii")->capture_default_str();
  train->add_flag("--freeze-hierarchy", train_cfg.freeze_hierarchy, "reuse the first epoch's hierarchies");
  train->add_option("--trace", trace_path, "accuracy trace CSV (stdout when omitted)");
  train->add_option("--out", o.out, "model file")->required();

  auto* infer = app.add_subcommand("infer", "run a trained model");
  infer->add_option("--model", o.model, "model file")->required()->check(CLI::ExistingFile);
  add_graph_inputs(infer, o);
  infer->add_option("--out", o.out, "CSV file (stdout when omitted)");

  std::size_t report_nodes = kSweepNodes;
  std::size_t report_channels = 64;
  auto* report = app.add_subcommand("report-compression", "activation traffic of the compressed path");
  report->add_option("--model", o.model, "model file (single layer from --alpha/--bits-a when omitted)")
      ->check(CLI::ExistingFile);
  report->add_option("--graph", o.graph, "graph file supplying the node count")->check(CLI::ExistingFile);
  report->add_option("--nodes", report_nodes, "node count when no graph is given")->capture_default_str();
  report->add_option("--channels", report_channels, "channels of the single-layer form")->capture_default_str();
  report->add_option("--alpha", o.alpha, "fraction of coefficient rows kept")->capture_default_str();
  report->add_option("--bits-a", o.bits_a, "activation bits")->capture_default_str()->check(CLI::Range(1, 32));
  report->add_option("--out", o.out, "CSV file (stdout when omitted)");

  PlantedConfig planted;
  auto* gen = app.add_subcommand("gen-planted", "stochastic block model benchmark");
  gen->add_option("--nodes", planted.nodes, "node count")->capture_default_str();
  gen->add_option("--communities", planted.communities, "community count")->capture_default_str();
  gen->add_option("--p-in", planted.p_in, "edge probability inside a community")->capture_default_str();
  gen->add_option("--p-out", planted.p_out, "edge probability across communities")->capture_default_str();
  gen->add_option("--channels", planted.channels, "feature channels")->capture_default_str();
  gen->add_option("--noise", planted.noise, "feature noise std")->capture_default_str();
  gen->add_option("--seed", o.seed, "random seed")->capture_default_str();
  gen->add_option("--out", o.out, "prefix for .graph, .features and .labels")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*transform) return run_transform(o);
    if (*compress) return run_compress(o);
    if (*reconstruct) return run_reconstruct(reconstruct_in, o.out);
    if (*sweep) return run_sweep(o, q_min, q_max);
    if (*train) return run_train(o, train_cfg, kind, trace_path);
    if (*infer) return run_infer(o);
    if (*report) return run_report(o, report_nodes, report_channels);
    if (*gen) return run_gen_planted(planted, o.seed, o.out);
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
