#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "risv2x/errors.hpp"
#include "risv2x/mlp.hpp"

using namespace risv2x;

namespace {

// Plain triple-loop forward pass used as the oracle.
std::vector<double> naive_forward(const Mlp& net, std::vector<double> x) {
  for (std::size_t l = 0; l < net.layers(); ++l) {
    const std::size_t in = net.sizes()[l], out = net.sizes()[l + 1];
    std::vector<double> y(out);
    for (std::size_t j = 0; j < out; ++j) {
      double s = net.bias(l)[j];
      for (std::size_t i = 0; i < in; ++i) s += x[i] * net.weights(l)[i * out + j];
      y[j] = (l + 1 < net.layers() && s < 0.0) ? 0.0 : s;
    }
    x = std::move(y);
  }
  return x;
}

Matrix rows(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (double& x : m.data) x = n(rng);
  return m;
}

// Loss = sum_i sum_j w_ij * out_ij with fixed random weights w.
double weighted_output(const Mlp& net, const Matrix& x, const Matrix& w) {
  const Matrix y = net.forward(x);
  double s = 0.0;
  for (std::size_t i = 0; i < y.data.size(); ++i) s += y.data[i] * w.data[i];
  return s;
}

}  // namespace

TEST_CASE("zero weights give zero output") {
  const Mlp net({5, 8, 8, 3});
  const auto y = net.forward(std::vector<double>{1, 2, 3, 4, 5});
  for (double v : y) CHECK(v == 0.0);
}

TEST_CASE("single linear layer with identity weights passes the input through") {
  Mlp net({3, 3});
  for (int i = 0; i < 3; ++i) net.weights(0)[i * 3 + i] = 1.0;
  CHECK(net.forward(std::vector<double>{-1.5, 0.0, 2.25}) == std::vector<double>{-1.5, 0.0, 2.25});
}

TEST_CASE("forward matches a naive matrix-product oracle") {
  Rng rng(4);
  const Mlp net = Mlp::random({7, 16, 12, 4}, rng);
  std::mt19937_64 g(5);
  const Matrix x = rows(20, 7, g);
  const Matrix y = net.forward(x);
  for (std::size_t i = 0; i < 20; ++i) {
    const auto ref = naive_forward(net, std::vector<double>(x.row(i).begin(), x.row(i).end()));
    for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(y(i, j) - ref[j]) < 1e-12);
  }
}

TEST_CASE("parameter and input gradients match central differences") {
  Rng rng(6);
  Mlp net = Mlp::random({4, 6, 6, 2}, rng);
  std::mt19937_64 g(7);
  const Matrix x = rows(5, 4, g);
  const Matrix w = rows(5, 2, g);
  MlpCache cache;
  net.forward(x, &cache);
  std::vector<double> grad(net.parameter_count());
  Matrix dx;
  net.backward(cache, w, grad, &dx);

  const double h = 1e-5;
  for (std::size_t p = 0; p < net.parameter_count(); ++p) {
    const double keep = net.params()[p];
    net.params()[p] = keep + h;
    const double up = weighted_output(net, x, w);
    net.params()[p] = keep - h;
    const double down = weighted_output(net, x, w);
    net.params()[p] = keep;
    CHECK(std::abs((up - down) / (2 * h) - grad[p]) < 1e-4);
  }
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    Matrix xp = x, xm = x;
    xp.data[i] += h;
    xm.data[i] -= h;
    const double fd = (weighted_output(net, xp, w) - weighted_output(net, xm, w)) / (2 * h);
    CHECK(std::abs(fd - dx.data[i]) < 1e-4);
  }
}

TEST_CASE("input gradient of a linear network is the transposed weight") {
  Rng rng(8);
  const Mlp net = Mlp::random({3, 2}, rng);
  Matrix x(1, 3, 0.5);
  MlpCache cache;
  net.forward(x, &cache);
  Matrix go(1, 2);
  go.data = {1.0, 0.0};
  Matrix dx;
  net.backward(cache, go, {}, &dx);
  for (int i = 0; i < 3; ++i) CHECK(dx.data[i] == doctest::Approx(net.weights(0)[i * 2 + 0]).epsilon(1e-15));
}

TEST_CASE("zero output gradient gives zero parameter gradient") {
  Rng rng(9);
  const Mlp net = Mlp::random({3, 5, 2}, rng);
  std::mt19937_64 g(1);
  MlpCache cache;
  net.forward(rows(4, 3, g), &cache);
  std::vector<double> grad(net.parameter_count(), 7.0);
  net.backward(cache, Matrix(4, 2), grad, nullptr);
  for (double v : grad) CHECK(v == 0.0);
}

TEST_CASE("shape errors") {
  const Mlp net({3, 4, 2});
  CHECK_THROWS_AS(net.forward(Matrix(2, 4)), DimensionMismatch);
  CHECK_THROWS_AS(Mlp({3}), ConfigError);
  CHECK_THROWS_AS(Mlp({3, 0, 1}), ConfigError);
}

TEST_CASE("Adam leaves parameters alone for a zero gradient") {
  Adam opt(3, AdamConfig{});
  std::vector<double> p{1.0, -2.0, 3.0};
  const auto before = p;
  for (int i = 0; i < 10; ++i) opt.step(p, std::vector<double>(3, 0.0));
  CHECK(p == before);
}

TEST_CASE("Adam's first step moves each parameter by the learning rate against the gradient sign") {
  Adam opt(3, AdamConfig{});
  std::vector<double> p{0.0, 0.0, 0.0};
  opt.step(p, std::vector<double>{2.0, -0.5, 1e-3});
  CHECK(p[0] == doctest::Approx(-3e-4).epsilon(1e-6));
  CHECK(p[1] == doctest::Approx(3e-4).epsilon(1e-6));
  CHECK(p[2] == doctest::Approx(-3e-4 * 1e-3 / (1e-3 + 1e-8)).epsilon(1e-6));
}

TEST_CASE("Adam under a constant gradient takes steps of the learning rate") {
  Adam opt(1, AdamConfig{0.01, 0.9, 0.999, 1e-8});
  std::vector<double> p{5.0};
  for (int i = 0; i < 100; ++i) opt.step(p, std::vector<double>{3.0});
  CHECK(p[0] == doctest::Approx(5.0 - 100 * 0.01).epsilon(1e-6));
  CHECK(opt.steps() == 100);
}

TEST_CASE("Adam rejects a non-finite gradient without touching its state") {
  Adam opt(2, AdamConfig{});
  std::vector<double> p{1.0, 1.0};
  opt.step(p, std::vector<double>{0.1, 0.2});
  const auto p0 = p;
  const std::vector<double> m0(opt.first_moment().begin(), opt.first_moment().end());
  CHECK_THROWS_AS(opt.step(p, std::vector<double>{std::numeric_limits<double>::quiet_NaN(), 0.0}), TrainingFault);
  CHECK_THROWS_AS(opt.step(p, std::vector<double>{0.0, std::numeric_limits<double>::infinity()}), TrainingFault);
  CHECK(p == p0);
  CHECK(std::vector<double>(opt.first_moment().begin(), opt.first_moment().end()) == m0);
  CHECK(opt.steps() == 1);
  CHECK_THROWS_AS(opt.step(p, std::vector<double>{0.0}), DimensionMismatch);
}

TEST_CASE("network and optimizer checkpoints round-trip bit for bit") {
  Rng rng(10);
  const Mlp net = Mlp::random({4, 9, 3}, rng);
  Adam opt(net.parameter_count(), AdamConfig{});
  std::vector<double> p(net.params().begin(), net.params().end());
  opt.step(p, std::vector<double>(p.size(), 0.3));
  std::stringstream ss;
  net.save(ss);
  opt.save(ss);
  const Mlp net2 = Mlp::load(ss);
  const Adam opt2 = Adam::load(ss);
  CHECK(net2.sizes() == net.sizes());
  CHECK(std::equal(net.params().begin(), net.params().end(), net2.params().begin()));
  CHECK(opt2.steps() == 1);
  CHECK(std::equal(opt.second_moment().begin(), opt.second_moment().end(), opt2.second_moment().begin()));
  std::stringstream bad("garbage");
  CHECK_THROWS(Mlp::load(bad));
}

TEST_CASE("initialisation is deterministic and respects the fan-in bound") {
  Rng a(11), b(11);
  const Mlp n1 = Mlp::random({16, 32, 1}, a);
  const Mlp n2 = Mlp::random({16, 32, 1}, b);
  CHECK(std::equal(n1.params().begin(), n1.params().end(), n2.params().begin()));
  for (std::size_t i = 0; i < 16 * 32 + 32; ++i) CHECK(std::abs(n1.params()[i]) <= 0.25);
}

TEST_CASE("ten thousand regression updates stay finite") {
  Rng rng(12);
  Mlp net = Mlp::random({3, 16, 16, 1}, rng);
  Adam opt(net.parameter_count(), AdamConfig{1e-3});
  std::mt19937_64 g(13);
  std::vector<double> grad(net.parameter_count());
  double first = 0.0, last = 0.0;
  for (int it = 0; it < 10000; ++it) {
    const Matrix x = rows(16, 3, g);
    MlpCache cache;
    const Matrix y = net.forward(x, &cache);
    Matrix dy(16, 1);
    double loss = 0.0;
    for (std::size_t i = 0; i < 16; ++i) {
      const double target = x(i, 0) - 2.0 * x(i, 1) + 0.5 * x(i, 2) * x(i, 2);
      const double e = y.data[i] - target;
      loss += 0.5 * e * e / 16;
      dy.data[i] = e / 16;
    }
    if (it == 0) first = loss;
    last = loss;
    net.backward(cache, dy, grad, nullptr);
    opt.step(net.params(), grad);
  }
  CHECK(std::isfinite(last));
  CHECK(last < 0.1 * first);
  CHECK(kernels::all_finite(net.params()));
}
