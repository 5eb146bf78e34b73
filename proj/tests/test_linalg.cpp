#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <omp.h>

#include <cmath>

#include "msf/core.hpp"
#include "msf/nn/linalg.hpp"
#include "test_support.hpp"

using namespace msf;
using namespace msf::nn;

namespace {

Matrix random_matrix(int r, int c, std::uint64_t seed) {
  Matrix m(r, c);
  SeededRng rng(seed);
  for (auto& v : m.d) v = rng.uniform_range(-1.0, 1.0);
  return m;
}

// Independent oracle: plain triple loop, no blocking, no reordering.
Matrix naive_nn(const Matrix& A, const Matrix& B) {
  Matrix C(A.rows, B.cols);
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < B.cols; ++j) {
      double acc = 0.0;
      for (int k = 0; k < A.cols; ++k) acc += A.at(i, k) * B.at(k, j);
      C.at(i, j) = acc;
    }
  return C;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  REQUIRE(same_shape(a, b));
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    worst = std::max(worst, std::abs(a.d[k] - b.d[k]));
  return worst;
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols, m.rows);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) t.at(j, i) = m.at(i, j);
  return t;
}

}  // namespace

TEST_CASE("matrix basics") {
  Matrix m(2, 3);
  CHECK(m.size() == 6);
  m.at(1, 2) = 5.0;
  CHECK(m.d[5] == 5.0);
  CHECK(m.row(1)[2] == 5.0);
  m.zero();
  CHECK(m.at(1, 2) == 0.0);
  CHECK(same_shape(m, Matrix(2, 3)));
  CHECK_FALSE(same_shape(m, Matrix(3, 2)));
}

TEST_CASE("gemm hand-computed case") {
  Matrix A(2, 2), B(2, 2);
  A.d = {1, 2, 3, 4};
  B.d = {5, 6, 7, 8};
  const Matrix C = matmul_nn(A, B);
  CHECK(C.at(0, 0) == 19.0);
  CHECK(C.at(0, 1) == 22.0);
  CHECK(C.at(1, 0) == 43.0);
  CHECK(C.at(1, 1) == 50.0);
}

TEST_CASE("all gemm variants match the triple-loop oracle") {
  for (auto [m, n, k] : {std::tuple{7, 5, 9}, std::tuple{32, 17, 64},
                         std::tuple{1, 13, 1}, std::tuple{40, 40, 40}}) {
    const Matrix A = random_matrix(m, k, 100 + m);
    const Matrix B = random_matrix(k, n, 200 + n);
    const Matrix ref = naive_nn(A, B);

    CHECK(max_abs_diff(matmul_nn(A, B), ref) < 1e-12);
    CHECK(max_abs_diff(matmul_nt(A, transpose(B)), ref) < 1e-12);
    CHECK(max_abs_diff(matmul_tn(transpose(A), B), ref) < 1e-12);
  }
}

TEST_CASE("parallel kernels are bitwise equal to their serial twins") {
  const int m = 65, n = 47, k = 83;
  const Matrix A = random_matrix(m, k, 1);
  const Matrix Bt = random_matrix(n, k, 2);
  const Matrix B = transpose(Bt);

  omp_set_num_threads(4);  // oversubscription still exercises the split
  Matrix P(m, n), S(m, n);

  matmul_nn(A.d.data(), B.d.data(), P.d.data(), m, n, k);
  matmul_nn_serial(A.d.data(), B.d.data(), S.d.data(), m, n, k);
  CHECK(P.d == S.d);

  matmul_nt(A.d.data(), Bt.d.data(), P.d.data(), m, n, k);
  matmul_nt_serial(A.d.data(), Bt.d.data(), S.d.data(), m, n, k);
  CHECK(P.d == S.d);

  const Matrix At = transpose(A);
  matmul_tn(At.d.data(), B.d.data(), P.d.data(), m, n, k);
  matmul_tn_serial(At.d.data(), B.d.data(), S.d.data(), m, n, k);
  CHECK(P.d == S.d);
}

TEST_CASE("row vector addition and column sums") {
  Matrix m(2, 3);
  m.d = {1, 2, 3, 4, 5, 6};
  add_row_vector(m, {10, 20, 30});
  CHECK(m.d == std::vector<double>{11, 22, 33, 14, 25, 36});
  const std::vector<double> s = column_sums(m);
  CHECK(s == std::vector<double>{25, 47, 69});
}

TEST_CASE("activations and their backward rules") {
  Matrix m(1, 4);
  m.d = {-2.0, -0.5, 0.0, 1.5};

  Matrix t = m;
  tanh_inplace(t);
  for (int j = 0; j < 4; ++j)
    CHECK(t.d[j] == doctest::Approx(std::tanh(m.d[j])).epsilon(1e-15));

  // tanh'(x) = 1 - tanh(x)^2, expressed through the stored outputs.
  Matrix g(1, 4);
  g.d = {1, 1, 1, 1};
  tanh_backward(t, g);
  for (int j = 0; j < 4; ++j)
    CHECK(g.d[j] == doctest::Approx(1.0 - t.d[j] * t.d[j]).epsilon(1e-15));

  Matrix r = m;
  relu_inplace(r);
  CHECK(r.d == std::vector<double>{0.0, 0.0, 0.0, 1.5});
  Matrix gr(1, 4);
  gr.d = {5, 5, 5, 5};
  relu_backward(r, gr);
  CHECK(gr.d == std::vector<double>{0.0, 0.0, 0.0, 5.0});
}

TEST_CASE("vector helpers") {
  std::vector<double> a = {1, 2, 3}, b = {4, -5, 6};
  CHECK(dot(a, b) == doctest::Approx(12.0).epsilon(1e-15));
  CHECK(norm2(a) == doctest::Approx(std::sqrt(14.0)).epsilon(1e-15));
  axpy(2.0, b, a);  // a += 2 b
  CHECK(a == std::vector<double>{9, -8, 15});
}
