#pragma once

#include <cstddef>
#include <vector>

namespace icf::kern {

// Dense row-major matrix of doubles.  Deliberately minimal: the models in
// this project need batched products and distance scans, nothing more.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
  double* row(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
  const double* row(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }
  std::size_t size() const { return data.size(); }
};

// Each kernel has an OpenMP version (default name) and a serial reference
// (_serial suffix).  The parallel loops distribute whole output rows across
// threads and every output element is accumulated in the same order as the
// serial code, so results are bitwise identical regardless of thread count.

// out = a·b, shapes (m×k)·(k×n)
void matmul(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_serial(const Matrix& a, const Matrix& b, Matrix& out);

// out = aᵀ·b, shapes (k×m)ᵀ·(k×n) -> (m×n)
void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_tn_serial(const Matrix& a, const Matrix& b, Matrix& out);

// out = a·bᵀ, shapes (m×k)·(n×k)ᵀ -> (m×n)
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_nt_serial(const Matrix& a, const Matrix& b, Matrix& out);

// out[r] = squared Euclidean distance between q and row r of m.
// q must have m.cols elements.
void row_sqdist(const Matrix& m, const double* q, std::vector<double>& out);
void row_sqdist_serial(const Matrix& m, const double* q, std::vector<double>& out);

}  // namespace icf::kern
