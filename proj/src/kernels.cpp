#include "risv2x/kernels.hpp"

#include <cblas.h>

#include <cmath>
#include <stdexcept>

namespace risv2x {

namespace kernels {

void gemm(const GemmArgs& g) {
  if (g.m == 0 || g.n == 0) return;
  if (g.k == 0) {
    for (std::size_t i = 0; i < g.m; ++i)
      for (std::size_t j = 0; j < g.n; ++j) {
        double& c = g.c[i * g.ldc + j];
        c = g.beta == 0.0 ? 0.0 : g.beta * c;
      }
    return;
  }
  cblas_dgemm(CblasRowMajor, g.trans_a == Trans::kYes ? CblasTrans : CblasNoTrans,
              g.trans_b == Trans::kYes ? CblasTrans : CblasNoTrans, static_cast<int>(g.m),
              static_cast<int>(g.n), static_cast<int>(g.k), g.alpha, g.a, static_cast<int>(g.lda), g.b,
              static_cast<int>(g.ldb), g.beta, g.c, static_cast<int>(g.ldc));
}

void add_row_bias(Matrix& y, std::span<const double> bias) {
  const std::size_t rows = y.rows;
  const std::size_t cols = y.cols;
  double* d = y.data.data();
  const double* b = bias.data();
#pragma omp parallel for schedule(static)
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = d + r * cols;
#pragma omp simd
    for (std::size_t c = 0; c < cols; ++c) row[c] += b[c];
  }
}

void relu_inplace(Matrix& y) {
  const std::size_t n = y.data.size();
  double* d = y.data.data();
#pragma omp parallel for simd schedule(static)
  for (std::size_t i = 0; i < n; ++i) d[i] = d[i] > 0.0 ? d[i] : 0.0;
}

void relu_backward(const Matrix& activated, Matrix& grad) {
  const std::size_t n = grad.data.size();
  const double* a = activated.data.data();
  double* g = grad.data.data();
#pragma omp parallel for simd schedule(static)
  for (std::size_t i = 0; i < n; ++i) g[i] = a[i] > 0.0 ? g[i] : 0.0;
}

void column_sums(const Matrix& g, std::span<double> out) {
  const std::size_t rows = g.rows;
  const std::size_t cols = g.cols;
  const double* d = g.data.data();
  // Each column is reduced by one thread in row order, so the result does
  // not depend on the thread count.
#pragma omp parallel for schedule(static)
  for (std::size_t c = 0; c < cols; ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < rows; ++r) s += d[r * cols + c];
    out[c] = s;
  }
}

void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                 std::span<double> v, double lr, double beta1, double beta2, double eps,
                 double bias_correction1, double bias_correction2) {
  const std::size_t n = params.size();
  double* p = params.data();
  const double* g = grads.data();
  double* mm = m.data();
  double* vv = v.data();
#pragma omp parallel for simd schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    mm[i] = beta1 * mm[i] + (1.0 - beta1) * g[i];
    vv[i] = beta2 * vv[i] + (1.0 - beta2) * g[i] * g[i];
    const double mhat = mm[i] / bias_correction1;
    const double vhat = vv[i] / bias_correction2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

void soft_update(std::span<double> target, std::span<const double> source, double tau) {
  const std::size_t n = target.size();
  double* t = target.data();
  const double* s = source.data();
#pragma omp parallel for simd schedule(static)
  for (std::size_t i = 0; i < n; ++i) t[i] = tau * s[i] + (1.0 - tau) * t[i];
}

bool all_finite(std::span<const double> x) {
  const std::size_t n = x.size();
  const double* d = x.data();
  int bad = 0;
#pragma omp parallel for reduction(| : bad) schedule(static)
  for (std::size_t i = 0; i < n; ++i) bad |= std::isfinite(d[i]) ? 0 : 1;
  return bad == 0;
}

}  // namespace kernels

namespace reference {

void gemm(const GemmArgs& g) {
  for (std::size_t i = 0; i < g.m; ++i)
    for (std::size_t j = 0; j < g.n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < g.k; ++p) {
        const double a = g.trans_a == Trans::kYes ? g.a[p * g.lda + i] : g.a[i * g.lda + p];
        const double b = g.trans_b == Trans::kYes ? g.b[j * g.ldb + p] : g.b[p * g.ldb + j];
        s += a * b;
      }
      double& c = g.c[i * g.ldc + j];
      c = g.alpha * s + (g.beta == 0.0 ? 0.0 : g.beta * c);
    }
}

void add_row_bias(Matrix& y, std::span<const double> bias) {
  for (std::size_t r = 0; r < y.rows; ++r)
    for (std::size_t c = 0; c < y.cols; ++c) y(r, c) += bias[c];
}

void relu_inplace(Matrix& y) {
  for (double& x : y.data)
    if (!(x > 0.0)) x = 0.0;
}

void relu_backward(const Matrix& activated, Matrix& grad) {
  for (std::size_t i = 0; i < grad.data.size(); ++i)
    if (!(activated.data[i] > 0.0)) grad.data[i] = 0.0;
}

void column_sums(const Matrix& g, std::span<double> out) {
  for (std::size_t c = 0; c < g.cols; ++c) out[c] = 0.0;
  for (std::size_t r = 0; r < g.rows; ++r)
    for (std::size_t c = 0; c < g.cols; ++c) out[c] += g(r, c);
}

void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                 std::span<double> v, double lr, double beta1, double beta2, double eps,
                 double bias_correction1, double bias_correction2) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * grads[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * grads[i] * grads[i];
    params[i] -= lr * (m[i] / bias_correction1) / (std::sqrt(v[i] / bias_correction2) + eps);
  }
}

void soft_update(std::span<double> target, std::span<const double> source, double tau) {
  for (std::size_t i = 0; i < target.size(); ++i) target[i] = tau * source[i] + (1.0 - tau) * target[i];
}

bool all_finite(std::span<const double> x) {
  for (double d : x)
    if (!std::isfinite(d)) return false;
  return true;
}

}  // namespace reference

void matmul(const Matrix& a, Trans ta, const Matrix& b, Trans tb, Matrix& c, double beta) {
  const std::size_t m = ta == Trans::kYes ? a.cols : a.rows;
  const std::size_t k = ta == Trans::kYes ? a.rows : a.cols;
  const std::size_t kb = tb == Trans::kYes ? b.cols : b.rows;
  const std::size_t n = tb == Trans::kYes ? b.rows : b.cols;
  if (k != kb) throw std::invalid_argument("matmul: inner dimensions differ");
  if (beta == 0.0) {
    if (c.rows != m || c.cols != n) c.resize(m, n);
  } else if (c.rows != m || c.cols != n) {
    throw std::invalid_argument("matmul: accumulator has the wrong shape");
  }
  GemmArgs g;
  g.trans_a = ta;
  g.trans_b = tb;
  g.m = m;
  g.n = n;
  g.k = k;
  g.a = a.data.data();
  g.lda = a.cols;
  g.b = b.data.data();
  g.ldb = b.cols;
  g.beta = beta;
  g.c = c.data.data();
  g.ldc = n;
  kernels::gemm(g);
}

}  // namespace risv2x
