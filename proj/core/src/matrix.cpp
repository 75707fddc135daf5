#include "racer/matrix.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace racer::nn {

Matrix::Matrix(int r, int c, std::vector<double> d) : rows(r), cols(c), data(std::move(d)) {
  if (data.size() != static_cast<size_t>(r) * c) {
    throw std::invalid_argument("matrix: data size does not match shape");
  }
}

Matrix Matrix::row(std::span<const double> v) {
  Matrix m(1, static_cast<int>(v.size()));
  std::copy(v.begin(), v.end(), m.data.begin());
  return m;
}

Matrix Matrix::row(std::initializer_list<double> v) {
  return row(std::span<const double>(v.begin(), v.size()));
}

Matrix Matrix::scalar(double v) {
  Matrix m(1, 1);
  m.data[0] = v;
  return m;
}

bool Matrix::all_finite() const {
  for (double x : data) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows, b.cols);
  matmul_acc(a, b, out);
  return out;
}

void matmul_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  assert(a.cols == b.rows && out.rows == a.rows && out.cols == b.cols);
  const int n = a.rows, k = a.cols, m = b.cols;
  for (int i = 0; i < n; ++i) {
    const double* ai = a.data.data() + static_cast<size_t>(i) * k;
    double* oi = out.data.data() + static_cast<size_t>(i) * m;
    for (int p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = b.data.data() + static_cast<size_t>(p) * m;
      for (int j = 0; j < m; ++j) oi[j] += av * bp[j];
    }
  }
}

void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  // out[k, m] += a[n, k]^T b[n, m]
  assert(a.rows == b.rows && out.rows == a.cols && out.cols == b.cols);
  const int n = a.rows, k = a.cols, m = b.cols;
  for (int i = 0; i < n; ++i) {
    const double* ai = a.data.data() + static_cast<size_t>(i) * k;
    const double* bi = b.data.data() + static_cast<size_t>(i) * m;
    for (int p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      double* op = out.data.data() + static_cast<size_t>(p) * m;
      for (int j = 0; j < m; ++j) op[j] += av * bi[j];
    }
  }
}

void matmul_nt_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  // out[n, r] += a[n, k] b[r, k]^T
  assert(a.cols == b.cols && out.rows == a.rows && out.cols == b.rows);
  const int n = a.rows, k = a.cols, r = b.rows;
  for (int i = 0; i < n; ++i) {
    const double* ai = a.data.data() + static_cast<size_t>(i) * k;
    double* oi = out.data.data() + static_cast<size_t>(i) * r;
    for (int j = 0; j < r; ++j) {
      const double* bj = b.data.data() + static_cast<size_t>(j) * k;
      double acc = 0.0;
      for (int p = 0; p < k; ++p) acc += ai[p] * bj[p];
      oi[j] += acc;
    }
  }
}

}  // namespace racer::nn
