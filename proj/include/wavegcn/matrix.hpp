#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace wgc {

// Dense row-major real matrix. Rows are graph nodes (or coefficient rows),
// columns are channels.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

  // Rows must all have the same length.
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  Matrix transposed() const;

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// Node features f, one row per node.
using FeatureMatrix = Matrix;

// a * b (plain matrix product).
Matrix matmul(const Matrix& a, const Matrix& b);
// a * b^T; the channel-space product used by 1x1 convolutions.
Matrix matmul_transposed(const Matrix& a, const Matrix& b);
// a^T * b.
Matrix transposed_matmul(const Matrix& a, const Matrix& b);

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);

double max_abs(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);
double frobenius_norm(const Matrix& a);
double squared_norm(const Matrix& a);
double dot(const Matrix& a, const Matrix& b);
bool all_finite(const Matrix& a);

Matrix relu(const Matrix& a);

}  // namespace wgc
