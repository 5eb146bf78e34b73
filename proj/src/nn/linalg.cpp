#include "msf/nn/linalg.hpp"

#include <cmath>

namespace msf::nn {

bool same_shape(const Matrix& a, const Matrix& b) {
  return a.rows == b.rows && a.cols == b.cols;
}

// ikj loop order: the j loop is independent per lane, so the compiler can
// vectorize without reassociating the k accumulation; k order per element is
// identical in serial and parallel versions.
void matmul_nn_serial(const double* A, const double* B, double* C, int m,
                      int n, int k) {
  for (int i = 0; i < m; ++i) {
    double* c = C + std::size_t(i) * n;
    for (int j = 0; j < n; ++j) c[j] = 0.0;
    const double* a = A + std::size_t(i) * k;
    for (int p = 0; p < k; ++p) {
      const double ap = a[p];
      const double* b = B + std::size_t(p) * n;
      for (int j = 0; j < n; ++j) c[j] += ap * b[j];
    }
  }
}

void matmul_nn(const double* A, const double* B, double* C, int m, int n,
               int k) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    double* c = C + std::size_t(i) * n;
    for (int j = 0; j < n; ++j) c[j] = 0.0;
    const double* a = A + std::size_t(i) * k;
    for (int p = 0; p < k; ++p) {
      const double ap = a[p];
      const double* b = B + std::size_t(p) * n;
      for (int j = 0; j < n; ++j) c[j] += ap * b[j];
    }
  }
}

static std::vector<double> pack_transpose(const double* B, int rows,
                                          int cols) {
  std::vector<double> t(std::size_t(rows) * cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      t[std::size_t(c) * rows + r] = B[std::size_t(r) * cols + c];
  return t;
}

void matmul_nt_serial(const double* A, const double* B, double* C, int m,
                      int n, int k) {
  const std::vector<double> bt = pack_transpose(B, n, k);  // k x n
  matmul_nn_serial(A, bt.data(), C, m, n, k);
}

void matmul_nt(const double* A, const double* B, double* C, int m, int n,
               int k) {
  const std::vector<double> bt = pack_transpose(B, n, k);
  matmul_nn(A, bt.data(), C, m, n, k);
}

void matmul_tn_serial(const double* A, const double* B, double* C, int m,
                      int n, int k) {
  for (int i = 0; i < m; ++i) {
    double* c = C + std::size_t(i) * n;
    for (int j = 0; j < n; ++j) c[j] = 0.0;
    for (int p = 0; p < k; ++p) {
      const double ap = A[std::size_t(p) * m + i];
      const double* b = B + std::size_t(p) * n;
      for (int j = 0; j < n; ++j) c[j] += ap * b[j];
    }
  }
}

void matmul_tn(const double* A, const double* B, double* C, int m, int n,
               int k) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    double* c = C + std::size_t(i) * n;
    for (int j = 0; j < n; ++j) c[j] = 0.0;
    for (int p = 0; p < k; ++p) {
      const double ap = A[std::size_t(p) * m + i];
      const double* b = B + std::size_t(p) * n;
      for (int j = 0; j < n; ++j) c[j] += ap * b[j];
    }
  }
}

static void check_mul(int ac, int br, const char* what) {
  if (ac != br)
    throw validation_error(std::string("matmul shape mismatch in ") + what);
}

Matrix matmul_nn(const Matrix& A, const Matrix& B) {
  check_mul(A.cols, B.rows, "nn");
  Matrix C(A.rows, B.cols);
  matmul_nn(A.d.data(), B.d.data(), C.d.data(), A.rows, B.cols, A.cols);
  return C;
}

Matrix matmul_nt(const Matrix& A, const Matrix& B) {
  check_mul(A.cols, B.cols, "nt");
  Matrix C(A.rows, B.rows);
  matmul_nt(A.d.data(), B.d.data(), C.d.data(), A.rows, B.rows, A.cols);
  return C;
}

Matrix matmul_tn(const Matrix& A, const Matrix& B) {
  check_mul(A.rows, B.rows, "tn");
  Matrix C(A.cols, B.cols);
  matmul_tn(A.d.data(), B.d.data(), C.d.data(), A.cols, B.cols, A.rows);
  return C;
}

void add_row_vector(Matrix& m, const std::vector<double>& v) {
  if (v.size() != std::size_t(m.cols))
    throw validation_error("bias length mismatch");
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m.rows; ++i) {
    double* r = m.row(i);
    for (int j = 0; j < m.cols; ++j) r[j] += v[j];
  }
}

std::vector<double> column_sums(const Matrix& m) {
  std::vector<double> s(m.cols, 0.0);
  for (int i = 0; i < m.rows; ++i) {
    const double* r = m.row(i);
    for (int j = 0; j < m.cols; ++j) s[j] += r[j];
  }
  return s;
}

void tanh_inplace(Matrix& m) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m.rows; ++i) {
    double* r = m.row(i);
    for (int j = 0; j < m.cols; ++j) r[j] = std::tanh(r[j]);
  }
}

void relu_inplace(Matrix& m) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m.rows; ++i) {
    double* r = m.row(i);
    for (int j = 0; j < m.cols; ++j) r[j] = r[j] > 0.0 ? r[j] : 0.0;
  }
}

void tanh_backward(const Matrix& act, Matrix& grad) {
  if (!same_shape(act, grad))
    throw validation_error("tanh_backward shape mismatch");
#pragma omp parallel for schedule(static)
  for (int i = 0; i < act.rows; ++i) {
    const double* a = act.row(i);
    double* g = grad.row(i);
    for (int j = 0; j < act.cols; ++j) g[j] *= 1.0 - a[j] * a[j];
  }
}

void relu_backward(const Matrix& act, Matrix& grad) {
  if (!same_shape(act, grad))
    throw validation_error("relu_backward shape mismatch");
#pragma omp parallel for schedule(static)
  for (int i = 0; i < act.rows; ++i) {
    const double* a = act.row(i);
    double* g = grad.row(i);
    for (int j = 0; j < act.cols; ++j)
      if (a[j] <= 0.0) g[j] = 0.0;
  }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw validation_error("dot length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const std::vector<double>& v) { return std::sqrt(dot(v, v)); }

void axpy(double alpha, const std::vector<double>& x, std::vector<double>& y) {
  if (x.size() != y.size()) throw validation_error("axpy length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace msf::nn
