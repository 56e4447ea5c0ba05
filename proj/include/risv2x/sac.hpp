#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "risv2x/env.hpp"
#include "risv2x/kernels.hpp"
#include "risv2x/mlp.hpp"
#include "risv2x/rng.hpp"

namespace risv2x {

struct SacConfig {
  std::vector<std::size_t> hidden{512, 512, 512};
  double gamma = 0.99;
  double tau = 0.01;
  double actor_lr = 3e-4;
  double critic_lr = 3e-4;
  double alpha_lr = 3e-4;
  double initial_alpha = 0.2;
  // Target entropy is -dim(a) unless overridden; `literal_entropy_target`
  // switches to +dim(a).
  bool literal_entropy_target = false;
  double target_entropy_override = 0.0;
  bool use_target_entropy_override = false;
  std::size_t batch_size = 256;
  std::size_t buffer_capacity = 1'000'000;
  double init_scale = 1.0;

  void validate() const;
};

/// Stacked minibatch; rows are samples.
struct Batch {
  Matrix s;
  Matrix a;
  std::vector<double> r;
  Matrix s_next;
  std::vector<double> done;

  std::size_t size() const { return r.size(); }
};

/// Uniform-sampling ring buffer. Storage grows on demand up to capacity.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::size_t state_dim, std::size_t action_dim);

  void push(std::span<const double> s, std::span<const double> a, double r, std::span<const double> s_next,
            bool done);
  void push(const Transition& t) { push(t.s, t.a, t.r, t.s_next, t.done); }

  /// Draws `n` transitions uniformly with replacement; requires size() >= n.
  Batch sample(std::size_t n, Rng& rng) const;

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  std::size_t sdim_;
  std::size_t adim_;
  std::size_t size_ = 0;
  std::size_t next_ = 0;
  std::vector<double> s_, a_, r_, s2_, d_;
};

/// Output of the squashed Gaussian policy for a batch under given noise.
struct PolicyEval {
  Matrix mean;     // mu
  Matrix log_std;  // clamped log sigma
  Matrix pre;      // u = mu + sigma * xi
  Matrix action;   // tanh(u)
  std::vector<double> log_prob;
  std::vector<char> clamped;  // per entry: log-std hit the clamp
  MlpCache cache;
};

struct SacLosses {
  double critic1 = 0.0;
  double critic2 = 0.0;
  double actor = 0.0;
  double alpha_loss = 0.0;
  double alpha = 0.0;
  double mean_log_prob = 0.0;
};

class SacAgent {
 public:
  static constexpr double kLogStdMin = -20.0;
  static constexpr double kLogStdMax = 2.0;

  SacAgent(std::size_t state_dim, std::size_t action_dim, SacConfig config, std::uint64_t seed);

  std::size_t state_dim() const { return sdim_; }
  std::size_t action_dim() const { return adim_; }
  const SacConfig& config() const { return config_; }

  double alpha() const;
  double log_alpha() const { return log_alpha_[0]; }
  void set_log_alpha(double v) { log_alpha_[0] = v; }
  double target_entropy() const;
  void set_target_entropy(double h0);

  Mlp& actor() { return actor_; }
  Mlp& critic(int i) { return i == 0 ? critic1_ : critic2_; }
  Mlp& target(int i) { return i == 0 ? target1_ : target2_; }
  const Mlp& actor() const { return actor_; }
  const Mlp& critic(int i) const { return i == 0 ? critic1_ : critic2_; }
  const Mlp& target(int i) const { return i == 0 ? target1_ : target2_; }

  /// Policy forward under explicit noise (rows x action_dim). Zero noise gives
  /// the deterministic action tanh(mu).
  PolicyEval evaluate_policy(const Matrix& states, const Matrix& noise) const;

  struct Sampled {
    std::vector<double> action;
    double log_prob = 0.0;
  };
  Sampled sample_action(std::span<const double> state, Rng& rng, bool deterministic) const;

  Matrix draw_noise(std::size_t rows, Rng& rng) const;

  /// min(Q_t1, Q_t2)(s', a') - alpha * log pi(a'|s'), a' drawn with `noise`.
  std::vector<double> target_value(const Matrix& s_next, const Matrix& noise) const;
  /// Bellman targets r + gamma (1 - done) target_value.
  std::vector<double> bellman_targets(const Batch& batch, const Matrix& noise) const;

  /// 0.5 mean (Q(s,a) - y)^2 and its parameter gradient (if `grad` non-empty).
  static double critic_loss(const Mlp& critic, const Batch& batch, std::span<const double> y,
                            std::span<double> grad);
  /// mean(alpha log pi(a|s) - min Q(s,a)) via the reparameterised path.
  double actor_loss(const Matrix& states, const Matrix& noise, std::span<double> grad) const;
  /// J = mean(-alpha (log pi + H0)); writes dJ/dlog(alpha) to `grad`.
  double temperature_loss(std::span<const double> log_probs, double* grad) const;

  /// One update step: temperature, actor, critics, targets.
  SacLosses update(const Batch& batch, Rng& rng);
  void soft_update_targets();
  void sync_targets();

  void save(std::ostream& os) const;
  static SacAgent load(std::istream& is);
  /// Rows of [s | a], the critic's input layout.
  Matrix critic_input(const Matrix& s, const Matrix& a) const;

  void save_file(const std::string& path) const;
  static SacAgent load_file(const std::string& path);

 private:
  SacAgent() = default;

  std::size_t sdim_ = 0;
  std::size_t adim_ = 0;
  SacConfig config_;
  double target_entropy_ = 0.0;
  Mlp actor_, critic1_, critic2_, target1_, target2_;
  Adam actor_opt_, critic1_opt_, critic2_opt_, alpha_opt_;
  std::vector<double> log_alpha_{0.0};
};

struct EpisodeLog {
  long episode = 0;
  double episode_return = 0.0;
  double critic1_loss = 0.0;
  double critic2_loss = 0.0;
  double actor_loss = 0.0;
  double alpha = 0.0;
  long updates = 0;
};

struct TrainOptions {
  long episodes = 1000;
  std::uint64_t seed = 0;
  std::uint64_t episode_seed_offset = 0;
  // Where to write the last good agent if training faults; empty disables.
  std::string fault_checkpoint;
  std::function<void(const EpisodeLog&)> on_episode;
};

/// Runs episodes against `env`, acting stochastically and updating once per
/// step once the buffer holds more than batch_size transitions.
std::vector<EpisodeLog> train(SacAgent& agent, Environment& env, const TrainOptions& options);

}  // namespace risv2x
