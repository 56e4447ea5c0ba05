#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace risv2x {

/// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  void resize(std::size_t r, std::size_t c) {
    rows = r;
    cols = c;
    data.assign(r * c, 0.0);
  }
};

enum class Trans { kNo, kYes };

/// C = alpha * op(A) * op(B) + beta * C where op(X) is X or X^T.
/// The raw-pointer forms take row-major operands with explicit leading dimensions.
struct GemmArgs {
  Trans trans_a = Trans::kNo;
  Trans trans_b = Trans::kNo;
  std::size_t m = 0, n = 0, k = 0;
  double alpha = 1.0;
  const double* a = nullptr;
  std::size_t lda = 0;
  const double* b = nullptr;
  std::size_t ldb = 0;
  double beta = 0.0;
  double* c = nullptr;
  std::size_t ldc = 0;
};

/// Hot-path kernels: BLAS for matrix products, OpenMP for element-wise work.
namespace kernels {

void gemm(const GemmArgs& g);
void add_row_bias(Matrix& y, std::span<const double> bias);
void relu_inplace(Matrix& y);
/// grad *= (activated > 0)
void relu_backward(const Matrix& activated, Matrix& grad);
/// out[c] = sum_r g(r, c)
void column_sums(const Matrix& g, std::span<double> out);
void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                 std::span<double> v, double lr, double beta1, double beta2, double eps,
                 double bias_correction1, double bias_correction2);
/// target = tau * source + (1 - tau) * target
void soft_update(std::span<double> target, std::span<const double> source, double tau);
bool all_finite(std::span<const double> x);

}  // namespace kernels

/// Straightforward serial versions, kept as the test oracle for `kernels`.
namespace reference {

void gemm(const GemmArgs& g);
void add_row_bias(Matrix& y, std::span<const double> bias);
void relu_inplace(Matrix& y);
void relu_backward(const Matrix& activated, Matrix& grad);
void column_sums(const Matrix& g, std::span<double> out);
void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                 std::span<double> v, double lr, double beta1, double beta2, double eps,
                 double bias_correction1, double bias_correction2);
void soft_update(std::span<double> target, std::span<const double> source, double tau);
bool all_finite(std::span<const double> x);

}  // namespace reference

/// Matrix-level convenience: C = op(A) * op(B) (+ beta * C).
void matmul(const Matrix& a, Trans ta, const Matrix& b, Trans tb, Matrix& c, double beta = 0.0);

}  // namespace risv2x
