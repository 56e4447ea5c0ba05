#include "risv2x/sac.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "risv2x/binary_io.hpp"
#include "risv2x/errors.hpp"

namespace risv2x {

namespace {

constexpr std::uint64_t kCheckpointVersion = 1;
const std::string kMagic = "risv2x-sac";

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

std::vector<std::size_t> layer_sizes(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
  std::vector<std::size_t> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw TrainingFault(std::string("non-finite ") + what);
}

}  // namespace

void SacConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in (0, 1]");
  if (!(actor_lr > 0.0 && critic_lr > 0.0 && alpha_lr > 0.0)) throw ConfigError("learning rates must be positive");
  if (!(initial_alpha > 0.0)) throw ConfigError("initial alpha must be positive");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (buffer_capacity < batch_size) throw ConfigError("buffer capacity must be at least the batch size");
  for (std::size_t h : hidden)
    if (h == 0) throw ConfigError("hidden layer widths must be positive");
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t state_dim, std::size_t action_dim)
    : capacity_(capacity), sdim_(state_dim), adim_(action_dim) {
  if (capacity == 0) throw ConfigError("replay capacity must be positive");
}

void ReplayBuffer::push(std::span<const double> s, std::span<const double> a, double r,
                        std::span<const double> s_next, bool done) {
  if (s.size() != sdim_) throw DimensionMismatch("replay state", sdim_, s.size());
  if (s_next.size() != sdim_) throw DimensionMismatch("replay next state", sdim_, s_next.size());
  if (a.size() != adim_) throw DimensionMismatch("replay action", adim_, a.size());
  if (size_ < capacity_ && next_ == size_) {
    s_.insert(s_.end(), s.begin(), s.end());
    a_.insert(a_.end(), a.begin(), a.end());
    r_.push_back(r);
    s2_.insert(s2_.end(), s_next.begin(), s_next.end());
    d_.push_back(done ? 1.0 : 0.0);
  } else {
    std::copy(s.begin(), s.end(), s_.begin() + static_cast<std::ptrdiff_t>(next_ * sdim_));
    std::copy(a.begin(), a.end(), a_.begin() + static_cast<std::ptrdiff_t>(next_ * adim_));
    r_[next_] = r;
    std::copy(s_next.begin(), s_next.end(), s2_.begin() + static_cast<std::ptrdiff_t>(next_ * sdim_));
    d_[next_] = done ? 1.0 : 0.0;
  }
  next_ = (next_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

Batch ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  if (n == 0 || size_ < n) throw ProtocolError("replay buffer holds fewer transitions than the batch size");
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  Batch b;
  b.s.resize(n, sdim_);
  b.a.resize(n, adim_);
  b.s_next.resize(n, sdim_);
  b.r.resize(n);
  b.done.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = pick(rng);
    std::copy_n(s_.begin() + static_cast<std::ptrdiff_t>(j * sdim_), sdim_, b.s.row(i).begin());
    std::copy_n(a_.begin() + static_cast<std::ptrdiff_t>(j * adim_), adim_, b.a.row(i).begin());
    std::copy_n(s2_.begin() + static_cast<std::ptrdiff_t>(j * sdim_), sdim_, b.s_next.row(i).begin());
    b.r[i] = r_[j];
    b.done[i] = d_[j];
  }
  return b;
}

SacAgent::SacAgent(std::size_t state_dim, std::size_t action_dim, SacConfig config, std::uint64_t seed)
    : sdim_(state_dim), adim_(action_dim), config_(std::move(config)) {
  config_.validate();
  if (sdim_ == 0 || adim_ == 0) throw ConfigError("state and action dimensions must be positive");
  Rng init = make_rng(seed, Stream::kInit);
  actor_ = Mlp::random(layer_sizes(sdim_, config_.hidden, 2 * adim_), init, config_.init_scale);
  critic1_ = Mlp::random(layer_sizes(sdim_ + adim_, config_.hidden, 1), init, config_.init_scale);
  critic2_ = Mlp::random(layer_sizes(sdim_ + adim_, config_.hidden, 1), init, config_.init_scale);
  sync_targets();
  actor_opt_ = Adam(actor_.parameter_count(), {config_.actor_lr});
  critic1_opt_ = Adam(critic1_.parameter_count(), {config_.critic_lr});
  critic2_opt_ = Adam(critic2_.parameter_count(), {config_.critic_lr});
  alpha_opt_ = Adam(1, {config_.alpha_lr});
  log_alpha_[0] = std::log(config_.initial_alpha);
  const double dim = static_cast<double>(adim_);
  target_entropy_ = config_.use_target_entropy_override ? config_.target_entropy_override
                    : config_.literal_entropy_target     ? dim
                                                         : -dim;
}

double SacAgent::alpha() const { return std::exp(log_alpha_[0]); }
double SacAgent::target_entropy() const { return target_entropy_; }
void SacAgent::set_target_entropy(double h0) { target_entropy_ = h0; }

void SacAgent::sync_targets() {
  target1_ = critic1_;
  target2_ = critic2_;
}

void SacAgent::soft_update_targets() {
  kernels::soft_update(target1_.params(), critic1_.params(), config_.tau);
  kernels::soft_update(target2_.params(), critic2_.params(), config_.tau);
}

Matrix SacAgent::critic_input(const Matrix& s, const Matrix& a) const {
  if (s.cols != sdim_) throw DimensionMismatch("critic state input", sdim_, s.cols);
  if (a.cols != adim_) throw DimensionMismatch("critic action input", adim_, a.cols);
  Matrix x(s.rows, sdim_ + adim_);
  for (std::size_t i = 0; i < s.rows; ++i) {
    std::copy(s.row(i).begin(), s.row(i).end(), x.row(i).begin());
    std::copy(a.row(i).begin(), a.row(i).end(), x.row(i).begin() + static_cast<std::ptrdiff_t>(sdim_));
  }
  return x;
}

Matrix SacAgent::draw_noise(std::size_t rows, Rng& rng) const {
  std::normal_distribution<double> n01(0.0, 1.0);
  Matrix xi(rows, adim_);
  for (double& x : xi.data) x = n01(rng);
  return xi;
}

PolicyEval SacAgent::evaluate_policy(const Matrix& states, const Matrix& noise) const {
  if (states.cols != sdim_) throw DimensionMismatch("policy state input", sdim_, states.cols);
  if (noise.rows != states.rows || noise.cols != adim_) throw DimensionMismatch("policy noise", adim_, noise.cols);
  PolicyEval pe;
  const Matrix head = actor_.forward(states, &pe.cache);
  const std::size_t B = states.rows;
  pe.mean.resize(B, adim_);
  pe.log_std.resize(B, adim_);
  pe.pre.resize(B, adim_);
  pe.action.resize(B, adim_);
  pe.log_prob.assign(B, 0.0);
  pe.clamped.assign(B * adim_, 0);
  const double below_one = std::nextafter(1.0, 0.0);
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  for (std::size_t i = 0; i < B; ++i) {
    double lp = 0.0;
    for (std::size_t j = 0; j < adim_; ++j) {
      const double mu = head(i, j);
      const double raw = head(i, adim_ + j);
      const double ls = std::clamp(raw, kLogStdMin, kLogStdMax);
      pe.clamped[i * adim_ + j] = (raw < kLogStdMin || raw > kLogStdMax) ? 1 : 0;
      const double xi = noise(i, j);
      const double u = mu + std::exp(ls) * xi;
      pe.mean(i, j) = mu;
      pe.log_std(i, j) = ls;
      pe.pre(i, j) = u;
      pe.action(i, j) = std::clamp(std::tanh(u), -below_one, below_one);
      lp += -0.5 * xi * xi - ls - half_log_2pi - 2.0 * (std::numbers::ln2 - u - softplus(-2.0 * u));
    }
    pe.log_prob[i] = lp;
  }
  return pe;
}

SacAgent::Sampled SacAgent::sample_action(std::span<const double> state, Rng& rng, bool deterministic) const {
  if (state.size() != sdim_) throw DimensionMismatch("policy state input", sdim_, state.size());
  Matrix s(1, sdim_);
  std::copy(state.begin(), state.end(), s.data.begin());
  const Matrix xi = deterministic ? Matrix(1, adim_) : draw_noise(1, rng);
  PolicyEval pe = evaluate_policy(s, xi);
  return {std::move(pe.action.data), pe.log_prob[0]};
}

std::vector<double> SacAgent::target_value(const Matrix& s_next, const Matrix& noise) const {
  const PolicyEval pe = evaluate_policy(s_next, noise);
  const Matrix x = critic_input(s_next, pe.action);
  const Matrix q1 = target1_.forward(x);
  const Matrix q2 = target2_.forward(x);
  const double a = alpha();
  std::vector<double> v(s_next.rows);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::min(q1.data[i], q2.data[i]) - a * pe.log_prob[i];
  return v;
}

std::vector<double> SacAgent::bellman_targets(const Batch& batch, const Matrix& noise) const {
  std::vector<double> y = target_value(batch.s_next, noise);
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] = batch.r[i] + config_.gamma * (1.0 - batch.done[i]) * y[i];
  return y;
}

double SacAgent::critic_loss(const Mlp& critic, const Batch& batch, std::span<const double> y,
                             std::span<double> grad) {
  const std::size_t B = batch.size();
  if (y.size() != B) throw DimensionMismatch("critic targets", B, y.size());
  Matrix x(B, batch.s.cols + batch.a.cols);
  for (std::size_t i = 0; i < B; ++i) {
    std::copy(batch.s.row(i).begin(), batch.s.row(i).end(), x.row(i).begin());
    std::copy(batch.a.row(i).begin(), batch.a.row(i).end(),
              x.row(i).begin() + static_cast<std::ptrdiff_t>(batch.s.cols));
  }
  MlpCache cache;
  const Matrix q = critic.forward(x, grad.empty() ? nullptr : &cache);
  Matrix dq(B, 1);
  double loss = 0.0;
  for (std::size_t i = 0; i < B; ++i) {
    const double e = q.data[i] - y[i];
    loss += 0.5 * e * e;
    dq.data[i] = e / static_cast<double>(B);
  }
  if (!grad.empty()) critic.backward(cache, dq, grad, nullptr);
  return loss / static_cast<double>(B);
}

double SacAgent::actor_loss(const Matrix& states, const Matrix& noise, std::span<double> grad) const {
  const PolicyEval pe = evaluate_policy(states, noise);
  const std::size_t B = states.rows;
  const Matrix x = critic_input(states, pe.action);
  MlpCache c1, c2;
  const Matrix q1 = critic1_.forward(x, grad.empty() ? nullptr : &c1);
  const Matrix q2 = critic2_.forward(x, grad.empty() ? nullptr : &c2);
  const double a = alpha();
  const double inv_b = 1.0 / static_cast<double>(B);
  double loss = 0.0;
  for (std::size_t i = 0; i < B; ++i) loss += a * pe.log_prob[i] - std::min(q1.data[i], q2.data[i]);
  loss *= inv_b;
  if (grad.empty()) return loss;

  // The minimum routes each sample's gradient through exactly one critic.
  Matrix g1(B, 1), g2(B, 1);
  for (std::size_t i = 0; i < B; ++i) (q1.data[i] <= q2.data[i] ? g1 : g2).data[i] = -inv_b;
  Matrix dx1, dx2;
  critic1_.backward(c1, g1, {}, &dx1);
  critic2_.backward(c2, g2, {}, &dx2);

  Matrix dhead(B, 2 * adim_);
  const double dlogp = a * inv_b;
  for (std::size_t i = 0; i < B; ++i)
    for (std::size_t j = 0; j < adim_; ++j) {
      const double act = pe.action(i, j);
      const double da = dx1(i, sdim_ + j) + dx2(i, sdim_ + j);
      const double du = da * (1.0 - act * act) + dlogp * 2.0 * act;
      const double sigma = std::exp(pe.log_std(i, j));
      dhead(i, j) = du;
      double dls = -dlogp + du * sigma * noise(i, j);
      // Past the clamp only a gradient that steers back inside gets through;
      // otherwise an overshooting log-std would be stuck there for good.
      if (pe.clamped[i * adim_ + j]) {
        const bool above = pe.log_std(i, j) == kLogStdMax;
        if (above ? dls < 0.0 : dls > 0.0) dls = 0.0;
      }
      dhead(i, adim_ + j) = dls;
    }
  actor_.backward(pe.cache, dhead, grad, nullptr);
  return loss;
}

double SacAgent::temperature_loss(std::span<const double> log_probs, double* grad) const {
  double s = 0.0;
  for (double lp : log_probs) s += lp + target_entropy_;
  const double j = -alpha() * s / static_cast<double>(log_probs.size());
  // J is proportional to alpha, so dJ/dlog(alpha) = J.
  if (grad) *grad = j;
  return j;
}

SacLosses SacAgent::update(const Batch& batch, Rng& rng) {
  const std::size_t B = batch.size();
  if (B == 0) throw ProtocolError("empty batch");
  SacLosses out;

  const Matrix xi = draw_noise(B, rng);
  {
    const PolicyEval pe = evaluate_policy(batch.s, xi);
    double g = 0.0;
    out.alpha_loss = temperature_loss(pe.log_prob, &g);
    out.mean_log_prob = mean(pe.log_prob);
    require_finite(out.alpha_loss, "temperature loss");
    const double dg[1] = {g};
    alpha_opt_.step(log_alpha_, dg);
  }

  std::vector<double> ga(actor_.parameter_count());
  out.actor = actor_loss(batch.s, xi, ga);
  require_finite(out.actor, "actor loss");
  actor_opt_.step(actor_.params(), ga);

  const std::vector<double> y = bellman_targets(batch, draw_noise(B, rng));
  std::vector<double> g1(critic1_.parameter_count()), g2(critic2_.parameter_count());
  out.critic1 = critic_loss(critic1_, batch, y, g1);
  out.critic2 = critic_loss(critic2_, batch, y, g2);
  require_finite(out.critic1, "critic loss");
  require_finite(out.critic2, "critic loss");
  critic1_opt_.step(critic1_.params(), g1);
  critic2_opt_.step(critic2_.params(), g2);

  soft_update_targets();
  out.alpha = alpha();
  return out;
}

void SacAgent::save(std::ostream& os) const {
  io::write_tag(os, kMagic);
  io::write_u64(os, kCheckpointVersion);
  io::write_u64(os, sdim_);
  io::write_u64(os, adim_);
  io::write_u64(os, config_.hidden.size());
  for (std::size_t h : config_.hidden) io::write_u64(os, h);
  for (double v : {config_.gamma, config_.tau, config_.actor_lr, config_.critic_lr, config_.alpha_lr,
                   config_.initial_alpha, config_.target_entropy_override, config_.init_scale})
    io::write_f64(os, v);
  io::write_u64(os, config_.literal_entropy_target ? 1 : 0);
  io::write_u64(os, config_.use_target_entropy_override ? 1 : 0);
  io::write_u64(os, config_.batch_size);
  io::write_u64(os, config_.buffer_capacity);
  io::write_f64(os, target_entropy_);
  io::write_f64(os, log_alpha_[0]);
  for (const Mlp* m : {&actor_, &critic1_, &critic2_, &target1_, &target2_}) m->save(os);
  for (const Adam* a : {&actor_opt_, &critic1_opt_, &critic2_opt_, &alpha_opt_}) a->save(os);
}

SacAgent SacAgent::load(std::istream& is) {
  io::expect_tag(is, kMagic);
  const std::uint64_t version = io::read_u64(is);
  if (version != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  SacAgent ag;
  ag.sdim_ = io::read_u64(is);
  ag.adim_ = io::read_u64(is);
  const std::uint64_t nh = io::read_u64(is);
  if (nh > 64) throw std::runtime_error("checkpoint: bad hidden layer count");
  ag.config_.hidden.resize(nh);
  for (auto& h : ag.config_.hidden) h = io::read_u64(is);
  for (double* v : {&ag.config_.gamma, &ag.config_.tau, &ag.config_.actor_lr, &ag.config_.critic_lr,
                    &ag.config_.alpha_lr, &ag.config_.initial_alpha, &ag.config_.target_entropy_override,
                    &ag.config_.init_scale})
    *v = io::read_f64(is);
  ag.config_.literal_entropy_target = io::read_u64(is) != 0;
  ag.config_.use_target_entropy_override = io::read_u64(is) != 0;
  ag.config_.batch_size = io::read_u64(is);
  ag.config_.buffer_capacity = io::read_u64(is);
  ag.target_entropy_ = io::read_f64(is);
  ag.log_alpha_[0] = io::read_f64(is);
  for (Mlp* m : {&ag.actor_, &ag.critic1_, &ag.critic2_, &ag.target1_, &ag.target2_}) *m = Mlp::load(is);
  for (Adam* a : {&ag.actor_opt_, &ag.critic1_opt_, &ag.critic2_opt_, &ag.alpha_opt_}) *a = Adam::load(is);
  if (ag.actor_.input_dim() != ag.sdim_) throw DimensionMismatch("checkpoint actor input", ag.sdim_, ag.actor_.input_dim());
  if (ag.actor_.output_dim() != 2 * ag.adim_)
    throw DimensionMismatch("checkpoint actor output", 2 * ag.adim_, ag.actor_.output_dim());
  return ag;
}

void SacAgent::save_file(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write checkpoint " + path);
  save(os);
  if (!os) throw std::runtime_error("failed writing checkpoint " + path);
}

SacAgent SacAgent::load_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path);
  return load(is);
}

std::vector<EpisodeLog> train(SacAgent& agent, Environment& env, const TrainOptions& options) {
  if (env.state_dim() != agent.state_dim()) throw DimensionMismatch("environment state", agent.state_dim(), env.state_dim());
  if (env.action_dim() != agent.action_dim())
    throw DimensionMismatch("environment action", agent.action_dim(), env.action_dim());
  Rng act_rng = make_rng(options.seed, Stream::kPolicy, 0);
  Rng update_rng = make_rng(options.seed, Stream::kPolicy, 1);
  Rng replay_rng = make_rng(options.seed, Stream::kReplay);
  const std::size_t batch = agent.config().batch_size;
  ReplayBuffer buffer(agent.config().buffer_capacity, agent.state_dim(), agent.action_dim());

  std::vector<EpisodeLog> logs;
  for (long ep = 0; ep < options.episodes; ++ep) {
    const SacAgent last_good = agent;
    EpisodeLog log;
    log.episode = ep;
    try {
      std::vector<double> s = env.reset(options.episode_seed_offset + static_cast<std::uint64_t>(ep));
      bool done = false;
      while (!done) {
        const auto sampled = agent.sample_action(s, act_rng, false);
        Environment::Step st = env.step(sampled.action);
        log.episode_return += st.reward;
        buffer.push(s, sampled.action, st.reward, st.next_state, st.terminal);
        if (buffer.size() > batch) {
          const SacLosses l = agent.update(buffer.sample(batch, replay_rng), update_rng);
          log.critic1_loss += l.critic1;
          log.critic2_loss += l.critic2;
          log.actor_loss += l.actor;
          ++log.updates;
        }
        s = std::move(st.next_state);
        done = st.done;
      }
    } catch (const TrainingFault&) {
      if (!options.fault_checkpoint.empty()) last_good.save_file(options.fault_checkpoint);
      agent = last_good;
      throw;
    }
    if (log.updates > 0) {
      log.critic1_loss /= static_cast<double>(log.updates);
      log.critic2_loss /= static_cast<double>(log.updates);
      log.actor_loss /= static_cast<double>(log.updates);
    }
    log.alpha = agent.alpha();
    if (options.on_episode) options.on_episode(log);
    logs.push_back(log);
  }
  return logs;
}

}  // namespace risv2x
