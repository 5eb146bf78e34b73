#pragma once
// Dense kernels for the network code. The parallel versions split output rows
// across threads while every output element is accumulated serially in k
// order, so they match the serial references bit for bit at any thread count.
// Serial twins are kept for testing and benchmarking, not as fallbacks.

#include <algorithm>
#include <cstddef>
#include <vector>

#include "msf/errors.hpp"

namespace msf::nn {

struct Matrix {
  int rows = 0, cols = 0;
  std::vector<double> d;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), d(std::size_t(r) * c, 0.0) {}

  double& at(int r, int c) { return d[std::size_t(r) * cols + c]; }
  double at(int r, int c) const { return d[std::size_t(r) * cols + c]; }
  double* row(int r) { return d.data() + std::size_t(r) * cols; }
  const double* row(int r) const { return d.data() + std::size_t(r) * cols; }
  std::size_t size() const { return d.size(); }
  void zero() { std::fill(d.begin(), d.end(), 0.0); }
};

bool same_shape(const Matrix& a, const Matrix& b);

// C[m x n] = A[m x k] * B[k x n]
void matmul_nn(const double* A, const double* B, double* C, int m, int n,
               int k);
void matmul_nn_serial(const double* A, const double* B, double* C, int m,
                      int n, int k);
// C[m x n] = A[m x k] * B[n x k]^T (B is packed transposed, then nn)
void matmul_nt(const double* A, const double* B, double* C, int m, int n,
               int k);
void matmul_nt_serial(const double* A, const double* B, double* C, int m,
                      int n, int k);
// C[m x n] = A[k x m]^T * B[k x n]
void matmul_tn(const double* A, const double* B, double* C, int m, int n,
               int k);
void matmul_tn_serial(const double* A, const double* B, double* C, int m,
                      int n, int k);

Matrix matmul_nn(const Matrix& A, const Matrix& B);
Matrix matmul_nt(const Matrix& A, const Matrix& B);
Matrix matmul_tn(const Matrix& A, const Matrix& B);

void add_row_vector(Matrix& m, const std::vector<double>& v);
// Column sums, the bias-gradient reduction.
std::vector<double> column_sums(const Matrix& m);

void tanh_inplace(Matrix& m);
void relu_inplace(Matrix& m);
// dpre = dact * act'(pre) given the activation outputs.
void tanh_backward(const Matrix& act, Matrix& grad);
void relu_backward(const Matrix& act, Matrix& grad);

double dot(const std::vector<double>& a, const std::vector<double>& b);
double norm2(const std::vector<double>& v);  // Euclidean norm
void axpy(double alpha, const std::vector<double>& x, std::vector<double>& y);

}  // namespace msf::nn
