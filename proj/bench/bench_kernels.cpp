#include <benchmark/benchmark.h>

#include <random>

#include "risv2x/kernels.hpp"
#include "risv2x/mlp.hpp"

using namespace risv2x;

namespace {

Matrix filled(std::size_t r, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (double& x : m.data) x = n(rng);
  return m;
}

// Forward-layer product: batch x in times in x out.
template <void (*Gemm)(const GemmArgs&)>
void BM_Gemm(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  const auto width = static_cast<std::size_t>(state.range(1));
  const Matrix a = filled(batch, width, 1), b = filled(width, width, 2);
  Matrix c(batch, width);
  GemmArgs g;
  g.m = batch;
  g.n = width;
  g.k = width;
  g.a = a.data.data();
  g.lda = width;
  g.b = b.data.data();
  g.ldb = width;
  g.c = c.data.data();
  g.ldc = width;
  for (auto _ : state) {
    Gemm(g);
    benchmark::DoNotOptimize(c.data.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(2 * batch * width * width));
}

template <void (*Adam)(std::span<double>, std::span<const double>, std::span<double>, std::span<double>, double,
                       double, double, double, double, double)>
void BM_Adam(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> p(n, 0.1), g(n, 0.01), m(n, 0.0), v(n, 0.0);
  for (auto _ : state) {
    Adam(p, g, m, v, 3e-4, 0.9, 0.999, 1e-8, 0.5, 0.5);
    benchmark::DoNotOptimize(p.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n));
}

template <void (*Soft)(std::span<double>, std::span<const double>, double)>
void BM_SoftUpdate(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> t(n, 0.0), s(n, 1.0);
  for (auto _ : state) {
    Soft(t, s, 0.01);
    benchmark::DoNotOptimize(t.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n));
}

template <void (*Relu)(const Matrix&, Matrix&)>
void BM_ReluBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix act = filled(n, 512, 3);
  Matrix g = filled(n, 512, 4);
  for (auto _ : state) {
    Relu(act, g);
    benchmark::DoNotOptimize(g.data.data());
  }
}

void BM_CriticForwardBackward(benchmark::State& state) {
  const auto width = static_cast<std::size_t>(state.range(0));
  const auto batch = static_cast<std::size_t>(state.range(1));
  Rng rng(5);
  const Mlp net = Mlp::random({52, width, width, width, 1}, rng);
  const Matrix x = filled(batch, 52, 6);
  std::vector<double> grad(net.parameter_count());
  for (auto _ : state) {
    MlpCache cache;
    const Matrix y = net.forward(x, &cache);
    net.backward(cache, Matrix(batch, 1, 1.0), grad, nullptr);
    benchmark::DoNotOptimize(grad.data());
  }
}

}  // namespace

BENCHMARK(BM_Gemm<kernels::gemm>)->Name("gemm/kernels")->Args({64, 256})->Args({256, 512});
BENCHMARK(BM_Gemm<reference::gemm>)->Name("gemm/reference")->Args({64, 256})->Args({256, 512});
BENCHMARK(BM_Adam<kernels::adam_update>)->Name("adam/kernels")->Arg(1 << 20);
BENCHMARK(BM_Adam<reference::adam_update>)->Name("adam/reference")->Arg(1 << 20);
BENCHMARK(BM_SoftUpdate<kernels::soft_update>)->Name("soft_update/kernels")->Arg(1 << 20);
BENCHMARK(BM_SoftUpdate<reference::soft_update>)->Name("soft_update/reference")->Arg(1 << 20);
BENCHMARK(BM_ReluBackward<kernels::relu_backward>)->Name("relu_backward/kernels")->Arg(256);
BENCHMARK(BM_ReluBackward<reference::relu_backward>)->Name("relu_backward/reference")->Arg(256);
BENCHMARK(BM_CriticForwardBackward)->Name("critic_step")->Args({256, 64})->Args({512, 256});

BENCHMARK_MAIN();
