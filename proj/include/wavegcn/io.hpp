#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "wavegcn/haar.hpp"
#include "wavegcn/matrix.hpp"

namespace wgc {

// Shortest decimal text that reads back to the same double.
std::string format_real(double v);

// Feature text format: "n c" then n lines of c decimal values.
FeatureMatrix parse_features(std::istream& in);
FeatureMatrix load_features(const std::filesystem::path& path);
void write_features(std::ostream& out, const Matrix& f);

// One integer per line; -1 marks an unlabeled node.
std::vector<int> load_labels(const std::filesystem::path& path);
void write_labels(std::ostream& out, const std::vector<int>& labels);

// Kept coefficient rows, one index per line.
std::vector<std::size_t> parse_indices(std::istream& in);
void write_indices(std::ostream& out, const std::vector<std::size_t>& indices);

// Hierarchy text format:
//   hierarchy <n> <levels>
//   level <fine_count> <pair_count> <orphan or -1>
//   <i> <j>            (pair_count lines)
// Coarse graphs are not stored; a read hierarchy carries edgeless ones.
void write_hierarchy(std::ostream& out, const HaarHierarchy& h);
HaarHierarchy parse_hierarchy(std::istream& in);

// CSV with one row per coefficient block: block,level,offset,rows.
void write_layout(std::ostream& out, const HaarHierarchy& h);

// Writes via a temporary stream and throws DataError if the file cannot be opened.
void write_file(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace wgc
