#include "wavegcn/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "wavegcn/error.hpp"

namespace wgc {

namespace {

// Reads non-blank lines while tracking 1-based line numbers for messages.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  bool next() {
    while (std::getline(in_, line_)) {
      ++number_;
      if (line_.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  }
  const std::string& line() const { return line_; }
  DataError error(const std::string& what) const {
    return DataError(what + " at line " + std::to_string(number_));
  }

 private:
  std::istream& in_;
  std::string line_;
  std::size_t number_ = 0;
};

}  // namespace

std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

FeatureMatrix parse_features(std::istream& in) {
  LineReader reader(in);
  if (!reader.next()) throw DataError("feature file is empty");
  long long n = -1;
  long long c = -1;
  {
    std::istringstream header(reader.line());
    std::string extra;
    if (!(header >> n >> c) || (header >> extra) || n < 0 || c < 0) {
      throw reader.error("malformed header (expected \"n c\")");
    }
  }
  Matrix f(static_cast<std::size_t>(n), static_cast<std::size_t>(c));
  for (std::size_t r = 0; r < f.rows(); ++r) {
    if (!reader.next()) throw reader.error("expected " + std::to_string(n) + " feature rows, file ended");
    std::istringstream row(reader.line());
    for (std::size_t k = 0; k < f.cols(); ++k) {
      if (!(row >> f(r, k))) throw reader.error("expected " + std::to_string(c) + " values");
      if (!std::isfinite(f(r, k))) throw reader.error("non-finite feature value");
    }
    std::string extra;
    if (row >> extra) throw reader.error("too many values");
  }
  if (reader.next()) throw reader.error("unexpected trailing content");
  return f;
}

FeatureMatrix load_features(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open feature file " + path.string());
  return parse_features(in);
}

void write_features(std::ostream& out, const Matrix& f) {
  out << f.rows() << ' ' << f.cols() << '\n';
  for (std::size_t r = 0; r < f.rows(); ++r) {
    const auto row = f.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ' ';
      out << format_real(row[c]);
    }
    out << '\n';
  }
}

std::vector<int> load_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open label file " + path.string());
  LineReader reader(in);
  std::vector<int> labels;
  while (reader.next()) {
    std::istringstream row(reader.line());
    int label = 0;
    std::string extra;
    if (!(row >> label) || (row >> extra)) throw reader.error("malformed label");
    if (label < -1) throw reader.error("label must be >= -1");
    labels.push_back(label);
  }
  return labels;
}

void write_labels(std::ostream& out, const std::vector<int>& labels) {
  for (int l : labels) out << l << '\n';
}

std::vector<std::size_t> parse_indices(std::istream& in) {
  LineReader reader(in);
  std::vector<std::size_t> indices;
  while (reader.next()) {
    std::istringstream row(reader.line());
    long long idx = -1;
    std::string extra;
    if (!(row >> idx) || (row >> extra) || idx < 0) throw reader.error("malformed index");
    if (!indices.empty() && static_cast<std::size_t>(idx) <= indices.back()) {
      throw reader.error("indices must be strictly increasing");
    }
    indices.push_back(static_cast<std::size_t>(idx));
  }
  return indices;
}

void write_indices(std::ostream& out, const std::vector<std::size_t>& indices) {
  for (std::size_t i : indices) out << i << '\n';
}

void write_hierarchy(std::ostream& out, const HaarHierarchy& h) {
  out << "hierarchy " << h.node_count() << ' ' << h.level_count() << '\n';
  for (const HaarLevel& level : h.levels()) {
    const PairGraph& pg = level.pair_graph;
    out << "level " << pg.node_count << ' ' << pg.pairs.size() << ' '
        << (pg.orphan ? static_cast<long long>(*pg.orphan) : -1LL) << '\n';
    for (const auto& p : pg.pairs) out << p.first << ' ' << p.second << '\n';
  }
}

HaarHierarchy parse_hierarchy(std::istream& in) {
  LineReader reader(in);
  if (!reader.next()) throw DataError("hierarchy file is empty");
  std::string tag;
  long long n = -1;
  long long levels = -1;
  {
    std::istringstream header(reader.line());
    if (!(header >> tag >> n >> levels) || tag != "hierarchy" || n < 0 || levels < 0) {
      throw reader.error("malformed header (expected \"hierarchy n levels\")");
    }
  }
  std::vector<HaarLevel> built;
  for (long long l = 0; l < levels; ++l) {
    if (!reader.next()) throw reader.error("missing level " + std::to_string(l + 1));
    std::istringstream header(reader.line());
    long long fine = -1;
    long long pairs = -1;
    long long orphan = -2;
    if (!(header >> tag >> fine >> pairs >> orphan) || tag != "level" || fine < 0 || pairs < 0 || orphan < -1) {
      throw reader.error("malformed level header");
    }
    std::vector<PairGraph::Pair> list;
    for (long long k = 0; k < pairs; ++k) {
      if (!reader.next()) throw reader.error("missing pair");
      std::istringstream row(reader.line());
      long long a = -1;
      long long b = -1;
      if (!(row >> a >> b) || a < 0 || b < 0) throw reader.error("malformed pair");
      list.push_back({static_cast<NodeId>(a), static_cast<NodeId>(b)});
    }
    std::optional<NodeId> orph;
    if (orphan >= 0) orph = static_cast<NodeId>(orphan);
    PairGraph pg = make_pair_graph(static_cast<std::size_t>(fine), std::move(list), orph);
    Graph coarse(pg.coarse_count(), {});
    built.push_back({std::move(pg), std::move(coarse)});
  }
  if (reader.next()) throw reader.error("unexpected trailing content");
  return HaarHierarchy(static_cast<std::size_t>(n), std::move(built));
}

void write_layout(std::ostream& out, const HaarHierarchy& h) {
  out << "block,level,offset,rows\n";
  for (std::size_t l = 0; l < h.level_count(); ++l) {
    out << "detail," << (l + 1) << ',' << h.detail_offset(l) << ',' << h.levels()[l].detail_count() << '\n';
  }
  out << "average," << h.level_count() << ',' << h.average_offset() << ',' << h.average_count() << '\n';
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << contents;
  if (!out) throw DataError("failed writing " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace wgc
