#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <vector>

#include "risv2x/kernels.hpp"
#include "risv2x/rng.hpp"

namespace risv2x {

/// Activations kept from a forward pass; inputs[i] is what layer i consumed.
struct MlpCache {
  std::vector<Matrix> inputs;
};

/// Fully connected ReLU network with a linear output layer. All weights and
/// biases live in one flat parameter vector: per layer, W (in x out, row
/// major) followed by b (out).
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<std::size_t> sizes);

  /// Uniform fan-in initialisation U(-s/sqrt(in), s/sqrt(in)) for W and b.
  static Mlp random(std::vector<std::size_t> sizes, Rng& rng, double scale = 1.0);

  std::size_t input_dim() const { return sizes_.front(); }
  std::size_t output_dim() const { return sizes_.back(); }
  std::size_t layers() const { return sizes_.size() - 1; }
  const std::vector<std::size_t>& sizes() const { return sizes_; }
  std::size_t parameter_count() const { return params_.size(); }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  double* weights(std::size_t layer) { return params_.data() + offsets_[layer]; }
  const double* weights(std::size_t layer) const { return params_.data() + offsets_[layer]; }
  double* bias(std::size_t layer) { return weights(layer) + sizes_[layer] * sizes_[layer + 1]; }
  const double* bias(std::size_t layer) const {
    return weights(layer) + sizes_[layer] * sizes_[layer + 1];
  }

  /// Batch forward: rows of `x` are samples.
  Matrix forward(const Matrix& x, MlpCache* cache = nullptr) const;
  std::vector<double> forward(std::span<const double> x) const;

  /// Reverse pass. `grad_params` (if non-empty) receives dLoss/dparams,
  /// overwriting its contents; `grad_input` (if non-null) receives dLoss/dx.
  void backward(const MlpCache& cache, const Matrix& grad_output, std::span<double> grad_params,
                Matrix* grad_input) const;

  void save(std::ostream& os) const;
  static Mlp load(std::istream& is);

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction. A non-finite gradient is rejected with
/// TrainingFault and leaves parameters and moments untouched.
class Adam {
 public:
  Adam() = default;
  Adam(std::size_t n, AdamConfig config);

  void step(std::span<double> params, std::span<const double> grads);

  long steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }
  std::span<const double> first_moment() const { return m_; }
  std::span<const double> second_moment() const { return v_; }

  void save(std::ostream& os) const;
  static Adam load(std::istream& is);

 private:
  AdamConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  long steps_ = 0;
};

}  // namespace risv2x
