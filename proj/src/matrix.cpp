#include "curricula/matrix.hpp"

#include <algorithm>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace curricula {

namespace {

void check_inner(int a_cols, int b_rows, const char* what) {
  if (a_cols != b_rows)
    throw std::invalid_argument(std::string(what) + ": inner dimensions disagree (" +
                                std::to_string(a_cols) + " vs " + std::to_string(b_rows) + ")");
}

// Work threshold below which spinning up a team costs more than the product.
constexpr long kParallelFlops = 1 << 16;

inline void mm_row(const double* a_row, const Matrix& b, double* out_row) {
  const int k_dim = b.rows, n = b.cols;
  std::fill(out_row, out_row + n, 0.0);
  for (int k = 0; k < k_dim; ++k) {
    const double aik = a_row[k];
    const double* b_row = &b.data[static_cast<size_t>(k) * n];
    for (int j = 0; j < n; ++j) out_row[j] += aik * b_row[j];
  }
}

inline void mm_nt_row(const double* a_row, const Matrix& b, double* out_row) {
  const int k_dim = b.cols, n = b.rows;
  for (int j = 0; j < n; ++j) {
    const double* b_row = &b.data[static_cast<size_t>(j) * k_dim];
    double acc = 0.0;
    for (int k = 0; k < k_dim; ++k) acc += a_row[k] * b_row[k];
    out_row[j] = acc;
  }
}

}  // namespace

void matmul_serial(const Matrix& a, const Matrix& b, Matrix& out) {
  check_inner(a.cols, b.rows, "matmul");
  out = Matrix(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i)
    mm_row(&a.data[static_cast<size_t>(i) * a.cols], b, &out.data[static_cast<size_t>(i) * b.cols]);
}

void matmul_parallel(const Matrix& a, const Matrix& b, Matrix& out) {
  check_inner(a.cols, b.rows, "matmul");
  out = Matrix(a.rows, b.cols);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int i = 0; i < a.rows; ++i)
    mm_row(&a.data[static_cast<size_t>(i) * a.cols], b, &out.data[static_cast<size_t>(i) * b.cols]);
}

void matmul(const Matrix& a, const Matrix& b, Matrix& out) {
  const long flops = static_cast<long>(a.rows) * a.cols * b.cols;
  if (flops >= kParallelFlops && a.rows > 1)
    matmul_parallel(a, b, out);
  else
    matmul_serial(a, b, out);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix out;
  matmul(a, b, out);
  return out;
}

void matmul_nt_serial(const Matrix& a, const Matrix& b, Matrix& out) {
  check_inner(a.cols, b.cols, "matmul_nt");
  out = Matrix(a.rows, b.rows);
  for (int i = 0; i < a.rows; ++i)
    mm_nt_row(&a.data[static_cast<size_t>(i) * a.cols], b, &out.data[static_cast<size_t>(i) * b.rows]);
}

void matmul_nt_parallel(const Matrix& a, const Matrix& b, Matrix& out) {
  check_inner(a.cols, b.cols, "matmul_nt");
  out = Matrix(a.rows, b.rows);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int i = 0; i < a.rows; ++i)
    mm_nt_row(&a.data[static_cast<size_t>(i) * a.cols], b, &out.data[static_cast<size_t>(i) * b.rows]);
}

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out) {
  const long flops = static_cast<long>(a.rows) * a.cols * b.rows;
  if (flops >= kParallelFlops && a.rows > 1)
    matmul_nt_parallel(a, b, out);
  else
    matmul_nt_serial(a, b, out);
}

void matmul_tn_serial(const Matrix& a, const Matrix& b, Matrix& out) {
  check_inner(a.rows, b.rows, "matmul_tn");
  out = Matrix(a.cols, b.cols);
  for (int k = 0; k < a.rows; ++k) {
    const double* a_row = &a.data[static_cast<size_t>(k) * a.cols];
    const double* b_row = &b.data[static_cast<size_t>(k) * b.cols];
    for (int i = 0; i < a.cols; ++i) {
      const double aki = a_row[i];
      double* out_row = &out.data[static_cast<size_t>(i) * b.cols];
      for (int j = 0; j < b.cols; ++j) out_row[j] += aki * b_row[j];
    }
  }
}

void matmul_tn_parallel(const Matrix& a, const Matrix& b, Matrix& out) {
  check_inner(a.rows, b.rows, "matmul_tn");
  out = Matrix(a.cols, b.cols);
  // Parallel over output rows: row i of out accumulates a.col(i) against all
  // of b, in the same k order as the serial loop.
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int i = 0; i < a.cols; ++i) {
    double* out_row = &out.data[static_cast<size_t>(i) * b.cols];
    for (int k = 0; k < a.rows; ++k) {
      const double aki = a.data[static_cast<size_t>(k) * a.cols + i];
      const double* b_row = &b.data[static_cast<size_t>(k) * b.cols];
      for (int j = 0; j < b.cols; ++j) out_row[j] += aki * b_row[j];
    }
  }
}

void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out) {
  const long flops = static_cast<long>(a.cols) * a.rows * b.cols;
  if (flops >= kParallelFlops && a.cols > 1)
    matmul_tn_parallel(a, b, out);
  else
    matmul_tn_serial(a, b, out);
}

void rowwise_softmax_inplace(const Matrix& logits, Matrix& out) {
  out = Matrix(logits.rows, logits.cols);
  for (int i = 0; i < logits.rows; ++i) {
    const double* in_row = &logits.data[static_cast<size_t>(i) * logits.cols];
    double* out_row = &out.data[static_cast<size_t>(i) * logits.cols];
    double mx = in_row[0];
    for (int j = 1; j < logits.cols; ++j) mx = std::max(mx, in_row[j]);
    double sum = 0.0;
    for (int j = 0; j < logits.cols; ++j) {
      out_row[j] = std::exp(in_row[j] - mx);
      sum += out_row[j];
    }
    for (int j = 0; j < logits.cols; ++j) out_row[j] /= sum;
  }
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols, m.rows);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) out.at(j, i) = m.at(i, j);
  return out;
}

}  // namespace curricula
