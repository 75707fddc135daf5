#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace racer::nn {

/// Dense row-major matrix of doubles. Row vectors are [1, n]; a batch of n
/// observations of width d is [n, d].
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}
  Matrix(int r, int c, std::vector<double> d);

  static Matrix zeros(int r, int c) { return Matrix(r, c); }
  static Matrix row(std::span<const double> v);
  static Matrix row(std::initializer_list<double> v);
  static Matrix scalar(double v);

  double& operator()(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }

  std::size_t size() const { return data.size(); }
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
  bool all_finite() const;

  std::span<double> row_span(int i) { return {data.data() + static_cast<size_t>(i) * cols, static_cast<size_t>(cols)}; }
  std::span<const double> row_span(int i) const { return {data.data() + static_cast<size_t>(i) * cols, static_cast<size_t>(cols)}; }
};

// out += a * b and friends; shapes validated with asserts, not exceptions.
Matrix matmul(const Matrix& a, const Matrix& b);
void matmul_acc(const Matrix& a, const Matrix& b, Matrix& out);        // out += a b
void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& out);     // out += a^T b
void matmul_nt_acc(const Matrix& a, const Matrix& b, Matrix& out);     // out += a b^T

}  // namespace racer::nn
