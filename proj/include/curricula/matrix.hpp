#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace curricula {

// Dense row-major matrix of doubles. The numerical substrate for every
// learned component; 64-bit throughout.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {
    if (r < 0 || c < 0) throw std::invalid_argument("Matrix: negative dimension");
  }

  static Matrix zeros(int r, int c) { return Matrix(r, c); }
  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
  }
  static Matrix from_row(const std::vector<double>& v) {
    Matrix m(1, static_cast<int>(v.size()));
    m.data = v;
    return m;
  }

  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
  size_t size() const { return data.size(); }
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

// Matrix product kernels. Each has a plain serial form, kept as the reference
// for the OpenMP form; the dispatching entry points pick between them by size.
// Both forms partition work by output row, so results are bit-identical.

// out = a * b
void matmul_serial(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_parallel(const Matrix& a, const Matrix& b, Matrix& out);
void matmul(const Matrix& a, const Matrix& b, Matrix& out);
Matrix matmul(const Matrix& a, const Matrix& b);

// out = a * b^T
void matmul_nt_serial(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_nt_parallel(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out);

// out = a^T * b
void matmul_tn_serial(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_tn_parallel(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out);

// Row-wise softmax with per-row max subtraction. Writes into out (resized).
void rowwise_softmax_inplace(const Matrix& logits, Matrix& out);

Matrix transpose(const Matrix& m);

}  // namespace curricula
