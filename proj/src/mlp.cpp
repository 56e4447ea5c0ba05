#include "risv2x/mlp.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "risv2x/binary_io.hpp"
#include "risv2x/errors.hpp"

namespace risv2x {

Mlp::Mlp(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw ConfigError("network needs at least an input and an output layer");
  std::size_t total = 0;
  for (std::size_t i = 0; i + 1 < sizes_.size(); ++i) {
    if (sizes_[i] == 0 || sizes_[i + 1] == 0) throw ConfigError("layer widths must be positive");
    offsets_.push_back(total);
    total += sizes_[i] * sizes_[i + 1] + sizes_[i + 1];
  }
  params_.assign(total, 0.0);
}

Mlp Mlp::random(std::vector<std::size_t> sizes, Rng& rng, double scale) {
  Mlp net(std::move(sizes));
  for (std::size_t l = 0; l < net.layers(); ++l) {
    const std::size_t in = net.sizes_[l];
    const std::size_t out = net.sizes_[l + 1];
    const double bound = scale / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> u(-bound, bound);
    double* w = net.weights(l);
    for (std::size_t i = 0; i < in * out + out; ++i) w[i] = u(rng);
  }
  return net;
}

Matrix Mlp::forward(const Matrix& x, MlpCache* cache) const {
  if (x.cols != input_dim()) throw DimensionMismatch("network input", input_dim(), x.cols);
  if (cache) cache->inputs.assign(layers(), Matrix());
  Matrix a = x;
  for (std::size_t l = 0; l < layers(); ++l) {
    const std::size_t in = sizes_[l];
    const std::size_t out = sizes_[l + 1];
    Matrix y(a.rows, out);
    GemmArgs g;
    g.m = a.rows;
    g.n = out;
    g.k = in;
    g.a = a.data.data();
    g.lda = in;
    g.b = weights(l);
    g.ldb = out;
    g.c = y.data.data();
    g.ldc = out;
    kernels::gemm(g);
    kernels::add_row_bias(y, {bias(l), out});
    if (l + 1 < layers()) kernels::relu_inplace(y);
    if (cache) cache->inputs[l] = std::move(a);
    a = std::move(y);
  }
  return a;
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
  Matrix m(1, x.size());
  std::copy(x.begin(), x.end(), m.data.begin());
  return forward(m).data;
}

void Mlp::backward(const MlpCache& cache, const Matrix& grad_output, std::span<double> grad_params,
                   Matrix* grad_input) const {
  if (cache.inputs.size() != layers()) throw std::logic_error("backward: cache is from a different network");
  if (grad_output.cols != output_dim()) throw DimensionMismatch("output gradient", output_dim(), grad_output.cols);
  const bool want_params = !grad_params.empty();
  if (want_params && grad_params.size() != params_.size())
    throw DimensionMismatch("parameter gradient", params_.size(), grad_params.size());

  Matrix g = grad_output;
  for (std::size_t l = layers(); l-- > 0;) {
    const std::size_t in = sizes_[l];
    const std::size_t out = sizes_[l + 1];
    const Matrix& a = cache.inputs[l];
    if (a.rows != g.rows) throw std::logic_error("backward: batch size differs from the cached pass");
    if (want_params) {
      double* dw = grad_params.data() + offsets_[l];
      GemmArgs gw;
      gw.trans_a = Trans::kYes;
      gw.m = in;
      gw.n = out;
      gw.k = a.rows;
      gw.a = a.data.data();
      gw.lda = in;
      gw.b = g.data.data();
      gw.ldb = out;
      gw.c = dw;
      gw.ldc = out;
      kernels::gemm(gw);
      kernels::column_sums(g, {dw + in * out, out});
    }
    if (l == 0 && !grad_input) break;
    Matrix prev(g.rows, in);
    GemmArgs gx;
    gx.trans_b = Trans::kYes;
    gx.m = g.rows;
    gx.n = in;
    gx.k = out;
    gx.a = g.data.data();
    gx.lda = out;
    gx.b = weights(l);
    gx.ldb = out;
    gx.c = prev.data.data();
    gx.ldc = in;
    kernels::gemm(gx);
    if (l > 0) kernels::relu_backward(a, prev);
    g = std::move(prev);
  }
  if (grad_input) *grad_input = std::move(g);
}

void Mlp::save(std::ostream& os) const {
  io::write_tag(os, "mlp");
  io::write_u64(os, sizes_.size());
  for (std::size_t s : sizes_) io::write_u64(os, s);
  io::write_doubles(os, params_);
}

Mlp Mlp::load(std::istream& is) {
  io::expect_tag(is, "mlp");
  const std::uint64_t n = io::read_u64(is);
  if (n < 2 || n > 64) throw std::runtime_error("checkpoint: bad layer count");
  std::vector<std::size_t> sizes(n);
  for (auto& s : sizes) s = io::read_u64(is);
  Mlp net(sizes);
  std::vector<double> p = io::read_doubles(is);
  if (p.size() != net.params_.size()) throw DimensionMismatch("checkpoint parameters", net.params_.size(), p.size());
  net.params_ = std::move(p);
  return net;
}

Adam::Adam(std::size_t n, AdamConfig config) : config_(config), m_(n, 0.0), v_(n, 0.0) {
  if (!(config.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(config.beta1 >= 0.0 && config.beta1 < 1.0 && config.beta2 >= 0.0 && config.beta2 < 1.0))
    throw ConfigError("Adam betas must lie in [0, 1)");
}

void Adam::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != m_.size()) throw DimensionMismatch("Adam parameters", m_.size(), params.size());
  if (grads.size() != m_.size()) throw DimensionMismatch("Adam gradient", m_.size(), grads.size());
  if (!kernels::all_finite(grads)) throw TrainingFault("non-finite gradient rejected by optimiser");
  ++steps_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  kernels::adam_update(params, grads, m_, v_, config_.learning_rate, config_.beta1, config_.beta2,
                       config_.epsilon, bc1, bc2);
}

void Adam::save(std::ostream& os) const {
  io::write_tag(os, "adam");
  io::write_f64(os, config_.learning_rate);
  io::write_f64(os, config_.beta1);
  io::write_f64(os, config_.beta2);
  io::write_f64(os, config_.epsilon);
  io::write_u64(os, static_cast<std::uint64_t>(steps_));
  io::write_doubles(os, m_);
  io::write_doubles(os, v_);
}

Adam Adam::load(std::istream& is) {
  io::expect_tag(is, "adam");
  Adam a;
  a.config_.learning_rate = io::read_f64(is);
  a.config_.beta1 = io::read_f64(is);
  a.config_.beta2 = io::read_f64(is);
  a.config_.epsilon = io::read_f64(is);
  a.steps_ = static_cast<long>(io::read_u64(is));
  a.m_ = io::read_doubles(is);
  a.v_ = io::read_doubles(is);
  if (a.m_.size() != a.v_.size()) throw std::runtime_error("checkpoint: Adam moments differ in length");
  return a;
}

}  // namespace risv2x
