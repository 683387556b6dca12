#include "icf/kernels.hpp"

#include <cassert>

namespace icf::kern {

// The row bodies are shared by the serial and the OpenMP variants so the
// floating-point evaluation order cannot drift between them.

namespace {

inline void matmul_row(const Matrix& a, const Matrix& b, Matrix& out, int i) {
  double* o = out.row(i);
  for (int j = 0; j < out.cols; ++j) o[j] = 0.0;
  for (int k = 0; k < a.cols; ++k) {
    const double aik = a.at(i, k);
    const double* br = b.row(k);
    for (int j = 0; j < out.cols; ++j) o[j] += aik * br[j];
  }
}

inline void matmul_tn_row(const Matrix& a, const Matrix& b, Matrix& out, int i) {
  // out(i,j) = sum_k a(k,i) * b(k,j)
  double* o = out.row(i);
  for (int j = 0; j < out.cols; ++j) o[j] = 0.0;
  for (int k = 0; k < a.rows; ++k) {
    const double aki = a.at(k, i);
    const double* br = b.row(k);
    for (int j = 0; j < out.cols; ++j) o[j] += aki * br[j];
  }
}

inline void matmul_nt_row(const Matrix& a, const Matrix& b, Matrix& out, int i) {
  // out(i,j) = dot(a.row(i), b.row(j))
  const double* ar = a.row(i);
  for (int j = 0; j < out.cols; ++j) {
    const double* br = b.row(j);
    double acc = 0.0;
    for (int k = 0; k < a.cols; ++k) acc += ar[k] * br[k];
    out.at(i, j) = acc;
  }
}

inline double sqdist_row(const Matrix& m, const double* q, int r) {
  const double* mr = m.row(r);
  double acc = 0.0;
  for (int k = 0; k < m.cols; ++k) {
    const double d = mr[k] - q[k];
    acc += d * d;
  }
  return acc;
}

}  // namespace

void matmul(const Matrix& a, const Matrix& b, Matrix& out) {
  assert(a.cols == b.rows);
  out = Matrix(a.rows, b.cols);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < a.rows; ++i) matmul_row(a, b, out, i);
}

void matmul_serial(const Matrix& a, const Matrix& b, Matrix& out) {
  assert(a.cols == b.rows);
  out = Matrix(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) matmul_row(a, b, out, i);
}

void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out) {
  assert(a.rows == b.rows);
  out = Matrix(a.cols, b.cols);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < a.cols; ++i) matmul_tn_row(a, b, out, i);
}

void matmul_tn_serial(const Matrix& a, const Matrix& b, Matrix& out) {
  assert(a.rows == b.rows);
  out = Matrix(a.cols, b.cols);
  for (int i = 0; i < a.cols; ++i) matmul_tn_row(a, b, out, i);
}

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out) {
  assert(a.cols == b.cols);
  out = Matrix(a.rows, b.rows);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < a.rows; ++i) matmul_nt_row(a, b, out, i);
}

void matmul_nt_serial(const Matrix& a, const Matrix& b, Matrix& out) {
  assert(a.cols == b.cols);
  out = Matrix(a.rows, b.rows);
  for (int i = 0; i < a.rows; ++i) matmul_nt_row(a, b, out, i);
}

void row_sqdist(const Matrix& m, const double* q, std::vector<double>& out) {
  out.assign(m.rows, 0.0);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < m.rows; ++r) out[r] = sqdist_row(m, q, r);
}

void row_sqdist_serial(const Matrix& m, const double* q, std::vector<double>& out) {
  out.assign(m.rows, 0.0);
  for (int r = 0; r < m.rows; ++r) out[r] = sqdist_row(m, q, r);
}

}  // namespace icf::kern
