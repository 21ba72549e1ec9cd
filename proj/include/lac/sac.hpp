#pragma once

// Soft actor-critic over a motion-state vector plus an encoded force
// series. Follows the centralized layout: the actor and each critic own
// their force-series encoder, and the target critics carry target copies
// of the critic encoders.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "lac/errors.hpp"
#include "lac/nn.hpp"

namespace lac {

struct SacConfig {
  int lstm_hidden = 16;
  int lstm_feature = 3;
  std::vector<int> actor_hidden{256, 256};
  std::vector<int> critic_hidden{256, 256};
  double lr_actor = 1e-3;
  double lr_critic = 5e-4;
  double lr_alpha = 3e-4;
  double gamma = 0.995;
  double polyak = 0.995;
  int batch = 128;
  std::size_t buffer_capacity = 1000000;
  int warmup_steps = 1000;
  int updates_per_step = 1;
  bool alpha_auto = true;
  double alpha_init = 0.2;
  double target_entropy = 0.0;  // 0 = use -action_dim
};

// Flat ring buffer of transitions:
// (m, force series [L x 6], action, reward, next m, next series, done).
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, int m_dim, int f_len, int f_dim)
      : capacity_(capacity), m_dim_(m_dim), f_len_(f_len), f_dim_(f_dim) {}

  void push(std::span<const float> m, std::span<const float> f,
            std::span<const float> a, float r, std::span<const float> m2,
            std::span<const float> f2, bool done) {
    if (static_cast<int>(m.size()) != m_dim_ ||
        static_cast<int>(f.size()) != f_len_ * f_dim_ ||
        static_cast<int>(m2.size()) != m_dim_ ||
        static_cast<int>(f2.size()) != f_len_ * f_dim_)
      throw ObservationSpecError("replay push: layout mismatch");
    if (a_dim_ == 0) a_dim_ = static_cast<int>(a.size());

    if (size_ < capacity_) {
      grow_one();
      ++size_;
    }
    const std::size_t i = next_;
    next_ = (next_ + 1) % capacity_;

    std::copy(m.begin(), m.end(), m_.begin() + i * m_dim_);
    std::copy(f.begin(), f.end(), f_.begin() + i * f_len_ * f_dim_);
    std::copy(a.begin(), a.end(), a_.begin() + i * a_dim_);
    r_[i] = r;
    std::copy(m2.begin(), m2.end(), m2_.begin() + i * m_dim_);
    std::copy(f2.begin(), f2.end(), f2_.begin() + i * f_len_ * f_dim_);
    done_[i] = done ? 1.0f : 0.0f;
  }

  std::vector<std::size_t> sample_indices(std::size_t batch, nn::Rng& rng) const {
    if (size_ < batch) throw BufferUnderfull("replay buffer underfull");
    std::vector<std::size_t> idx(batch);
    for (auto& i : idx) i = rng.integer(size_);
    return idx;
  }

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  int m_dim() const { return m_dim_; }
  int f_len() const { return f_len_; }
  int f_dim() const { return f_dim_; }
  int a_dim() const { return a_dim_; }

  const float* m_at(std::size_t i) const { return m_.data() + i * m_dim_; }
  const float* f_at(std::size_t i) const { return f_.data() + i * f_len_ * f_dim_; }
  const float* a_at(std::size_t i) const { return a_.data() + i * a_dim_; }
  float r_at(std::size_t i) const { return r_[i]; }
  const float* m2_at(std::size_t i) const { return m2_.data() + i * m_dim_; }
  const float* f2_at(std::size_t i) const { return f2_.data() + i * f_len_ * f_dim_; }
  float done_at(std::size_t i) const { return done_[i]; }

 private:
  void grow_one() {
    m_.resize(m_.size() + m_dim_);
    f_.resize(f_.size() + f_len_ * f_dim_);
    a_.resize(a_.size() + (a_dim_ > 0 ? a_dim_ : 1));
    r_.resize(r_.size() + 1);
    m2_.resize(m2_.size() + m_dim_);
    f2_.resize(f2_.size() + f_len_ * f_dim_);
    done_.resize(done_.size() + 1);
  }

  std::size_t capacity_;
  int m_dim_, f_len_, f_dim_;
  int a_dim_ = 0;
  std::size_t size_ = 0, next_ = 0;
  std::vector<float> m_, f_, a_, r_, m2_, f2_, done_;
};

struct LossReport {
  double critic1_loss = 0.0;
  double critic2_loss = 0.0;
  double actor_loss = 0.0;
  double alpha = 0.0;
  double entropy = 0.0;  // -mean logp estimate
};

template <typename T>
class SacAgent {
 public:
  using Matrix = nn::Matrix<T>;

  SacAgent(int motion_dim, int action_dim, int force_len,
           nn::FeatureMode mode, const SacConfig& cfg, nn::Rng& rng)
      : cfg_(cfg),
        motion_dim_(motion_dim),
        action_dim_(action_dim),
        force_len_(force_len),
        opt_actor_(cfg.lr_actor),
        opt_critic_(cfg.lr_critic),
        opt_alpha_(cfg.lr_alpha) {
    enc_actor_.mode = enc_c1_.mode = enc_c2_.mode = mode;
    enc_c1_t_.mode = enc_c2_t_.mode = mode;
    for (auto* e : {&enc_actor_, &enc_c1_, &enc_c2_, &enc_c1_t_, &enc_c2_t_})
      e->init(kForceDim, cfg.lstm_hidden, cfg.lstm_feature, rng);
    feature_dim_ = enc_actor_.feature_dim(cfg.lstm_feature);

    const int obs = motion_dim_ + feature_dim_;
    actor_.init(obs, cfg.actor_hidden, action_dim_, rng);
    critic1_.init(obs + action_dim_, cfg.critic_hidden, 1, rng);
    critic2_.init(obs + action_dim_, cfg.critic_hidden, 1, rng);
    critic1_t_ = critic1_;
    critic2_t_ = critic2_;
    enc_c1_t_ = enc_c1_;
    enc_c2_t_ = enc_c2_;

    log_alpha_ = Matrix::Constant(1, 1, T(std::log(cfg.alpha_init)));
    dlog_alpha_ = Matrix::Zero(1, 1);
    target_entropy_ = cfg.target_entropy != 0.0
                          ? cfg.target_entropy
                          : -static_cast<double>(action_dim_);

    actor_.visit("actor", actor_params_);
    enc_actor_.visit("enc_actor", actor_params_);
    critic1_.visit("critic1", critic_params_);
    critic2_.visit("critic2", critic_params_);
    enc_c1_.visit("enc_critic1", critic_params_);
    enc_c2_.visit("enc_critic2", critic_params_);
    critic1_t_.visit("critic1_t", target_params_);
    critic2_t_.visit("critic2_t", target_params_);
    enc_c1_t_.visit("enc_critic1_t", target_params_);
    enc_c2_t_.visit("enc_critic2_t", target_params_);
    alpha_params_.push_back({"log_alpha", &log_alpha_, &dlog_alpha_});
  }

  // A minibatch laid out for the networks: one column per transition, and
  // the force series as one [6 x B] matrix per time step.
  struct Batch {
    Matrix m, a, m2;
    Eigen::Matrix<T, 1, Eigen::Dynamic> r, done;
    std::vector<Matrix> seq, seq2;
    int size = 0;
  };

  Batch make_batch(const ReplayBuffer& buf,
                   const std::vector<std::size_t>& idx) const {
    const int B = static_cast<int>(idx.size());
    Batch b;
    b.size = B;
    b.m.resize(motion_dim_, B);
    b.m2.resize(motion_dim_, B);
    b.a.resize(action_dim_, B);
    b.r.resize(1, B);
    b.done.resize(1, B);
    b.seq.assign(force_len_, Matrix(kForceDim, B));
    b.seq2.assign(force_len_, Matrix(kForceDim, B));
    for (int c = 0; c < B; ++c) {
      const std::size_t i = idx[c];
      for (int r = 0; r < motion_dim_; ++r) {
        b.m(r, c) = static_cast<T>(buf.m_at(i)[r]);
        b.m2(r, c) = static_cast<T>(buf.m2_at(i)[r]);
      }
      for (int r = 0; r < action_dim_; ++r)
        b.a(r, c) = static_cast<T>(buf.a_at(i)[r]);
      b.r(0, c) = static_cast<T>(buf.r_at(i));
      b.done(0, c) = static_cast<T>(buf.done_at(i));
      for (int t = 0; t < force_len_; ++t)
        for (int k = 0; k < kForceDim; ++k) {
          b.seq[t](k, c) = static_cast<T>(buf.f_at(i)[t * kForceDim + k]);
          b.seq2[t](k, c) = static_cast<T>(buf.f2_at(i)[t * kForceDim + k]);
        }
    }
    return b;
  }

  // c = concat(m, encoder(f)); the encoder output ordering is part of the
  // observation contract.
  Matrix encode(nn::ForceEncoder<T>& enc, const Matrix& m,
                const std::vector<Matrix>& seq, bool cache) const {
    if (m.rows() != motion_dim_)
      throw ObservationSpecError("encode: motion dim mismatch");
    if (static_cast<int>(seq.size()) != force_len_)
      throw ObservationSpecError("encode: force series length mismatch");
    Matrix c(motion_dim_ + feature_dim_, m.cols());
    c.topRows(motion_dim_) = m;
    if (feature_dim_ > 0)
      c.bottomRows(feature_dim_) = enc.forward(seq, cache);
    return c;
  }

  // Single-observation action. Deterministic mode returns tanh(mean).
  std::vector<double> act(std::span<const float> m, std::span<const float> f,
                          nn::Rng& rng, bool deterministic) {
    Matrix mm(motion_dim_, 1);
    for (int r = 0; r < motion_dim_; ++r) mm(r, 0) = static_cast<T>(m[r]);
    std::vector<Matrix> seq(force_len_, Matrix(kForceDim, 1));
    for (int t = 0; t < force_len_; ++t)
      for (int k = 0; k < kForceDim; ++k)
        seq[t](k, 0) = static_cast<T>(f[t * kForceDim + k]);
    const Matrix c = encode(enc_actor_, mm, seq, false);
    Matrix a;
    if (deterministic) {
      a = actor_.mean_action(c);
    } else {
      a = actor_.sample(c, rng).action;
    }
    std::vector<double> out(action_dim_);
    for (int r = 0; r < action_dim_; ++r)
      out[r] = std::clamp(static_cast<double>(a(r, 0)), -1.0, 1.0);
    return out;
  }

  // Critic loss (sum of the two MSE terms) for a fixed next-action noise.
  // with_grads fills critic and critic-encoder gradients.
  T critic_loss(const Batch& b, const Matrix& eps_next, bool with_grads,
                T* loss1_out = nullptr, T* loss2_out = nullptr) {
    const int B = b.size;
    const T alpha = std::exp(log_alpha_(0, 0));

    // y = r + gamma (1 - done) (min Q' - alpha logp')
    const Matrix c_a2 = encode(enc_actor_, b.m2, b.seq2, false);
    auto ev2 = actor_.sample_with_noise(c_a2, eps_next);
    const Matrix q1t = critic1_t_.forward(
        critic_input(b.m2, enc_c1_t_.forward(b.seq2, false), ev2.action), false);
    const Matrix q2t = critic2_t_.forward(
        critic_input(b.m2, enc_c2_t_.forward(b.seq2, false), ev2.action), false);
    Eigen::Matrix<T, 1, Eigen::Dynamic> y(1, B);
    for (int c = 0; c < B; ++c) {
      const T qmin = std::min(q1t(0, c), q2t(0, c));
      y(0, c) = b.r(0, c) + T(cfg_.gamma) * (T(1) - b.done(0, c)) *
                                (qmin - alpha * ev2.logp(0, c));
    }

    const Matrix in1 = critic_input(b.m, enc_c1_.forward(b.seq, with_grads), b.a);
    const Matrix in2 = critic_input(b.m, enc_c2_.forward(b.seq, with_grads), b.a);
    const Matrix q1 = critic1_.forward(in1, with_grads);
    const Matrix q2 = critic2_.forward(in2, with_grads);

    const Eigen::Matrix<T, 1, Eigen::Dynamic> e1 = q1.row(0) - y;
    const Eigen::Matrix<T, 1, Eigen::Dynamic> e2 = q2.row(0) - y;
    const T loss1 = e1.array().square().mean();
    const T loss2 = e2.array().square().mean();
    if (loss1_out) *loss1_out = loss1;
    if (loss2_out) *loss2_out = loss2;

    if (with_grads) {
      critic1_.zero_grad();
      critic2_.zero_grad();
      enc_c1_.zero_grad();
      enc_c2_.zero_grad();
      const Matrix dq1 = (T(2) / T(B)) * e1;
      const Matrix dq2 = (T(2) / T(B)) * e2;
      const Matrix din1 = critic1_.backward(dq1, true);
      const Matrix din2 = critic2_.backward(dq2, true);
      if (feature_dim_ > 0) {
        enc_c1_.backward(din1.middleRows(motion_dim_, feature_dim_), true);
        enc_c2_.backward(din2.middleRows(motion_dim_, feature_dim_), true);
      }
    }
    return loss1 + loss2;
  }

  // Actor loss mean(alpha logp - min Q(s, a_new)) for fixed noise.
  // with_grads fills actor and actor-encoder gradients; critic parameters
  // only route gradients to the action.
  T actor_loss(const Batch& b, const Matrix& eps_new, bool with_grads,
               T* mean_logp_out = nullptr) {
    const int B = b.size;
    const T alpha = std::exp(log_alpha_(0, 0));

    const Matrix c_a = encode(enc_actor_, b.m, b.seq, with_grads);
    auto ev = actor_.sample_with_noise(c_a, eps_new);

    const Matrix in1 =
        critic_input(b.m, enc_c1_.forward(b.seq, true), ev.action);
    const Matrix in2 =
        critic_input(b.m, enc_c2_.forward(b.seq, true), ev.action);
    const Matrix q1 = critic1_.forward(in1, true);
    const Matrix q2 = critic2_.forward(in2, true);

    T loss = T(0);
    Matrix dq1 = Matrix::Zero(1, B);
    Matrix dq2 = Matrix::Zero(1, B);
    for (int c = 0; c < B; ++c) {
      const bool first = q1(0, c) <= q2(0, c);
      const T qmin = first ? q1(0, c) : q2(0, c);
      loss += alpha * ev.logp(0, c) - qmin;
      (first ? dq1 : dq2)(0, c) = T(-1) / T(B);
    }
    loss /= T(B);
    if (mean_logp_out) *mean_logp_out = ev.logp.mean();

    if (with_grads) {
      actor_.zero_grad();
      enc_actor_.zero_grad();
      const Matrix din1 = critic1_.backward(dq1, false);
      const Matrix din2 = critic2_.backward(dq2, false);
      const Matrix da = din1.bottomRows(action_dim_) +
                        din2.bottomRows(action_dim_);
      Eigen::Matrix<T, 1, Eigen::Dynamic> dlogp =
          Eigen::Matrix<T, 1, Eigen::Dynamic>::Constant(1, B, alpha / T(B));
      const Matrix dc = actor_.backward(ev, da, dlogp, true);
      if (feature_dim_ > 0)
        enc_actor_.backward(dc.bottomRows(feature_dim_), true);
    }
    return loss;
  }

  LossReport update(ReplayBuffer& buf, nn::Rng& rng) {
    const auto idx = buf.sample_indices(cfg_.batch, rng);
    const Batch b = make_batch(buf, idx);
    return update_batch(b, rng);
  }

  LossReport update_batch(const Batch& b, nn::Rng& rng) {
    LossReport rep;
    const Matrix eps_next = draw_noise(b.size, rng);

    T l1 = 0, l2 = 0;
    critic_loss(b, eps_next, true, &l1, &l2);
    rep.critic1_loss = static_cast<double>(l1);
    rep.critic2_loss = static_cast<double>(l2);
    opt_critic_.step(critic_params_);

    const Matrix eps_new = draw_noise(b.size, rng);
    T mean_logp = 0;
    rep.actor_loss =
        static_cast<double>(actor_loss(b, eps_new, true, &mean_logp));
    opt_actor_.step(actor_params_);

    if (cfg_.alpha_auto) {
      dlog_alpha_(0, 0) = -(mean_logp + T(target_entropy_));
      opt_alpha_.step(alpha_params_);
    }
    rep.alpha = static_cast<double>(std::exp(log_alpha_(0, 0)));
    rep.entropy = -static_cast<double>(mean_logp);

    if (!std::isfinite(rep.critic1_loss) || !std::isfinite(rep.critic2_loss) ||
        !std::isfinite(rep.actor_loss) || !std::isfinite(rep.alpha))
      throw NonFiniteLoss("sac update produced non-finite losses");

    nn::polyak_update(critic_params_, target_params_, cfg_.polyak);
    return rep;
  }

  nn::ParamList<T>& actor_params() { return actor_params_; }
  nn::ParamList<T>& critic_params() { return critic_params_; }
  nn::ParamList<T>& target_params() { return target_params_; }

  // Every parameter tensor, stable order, for checkpoints.
  nn::ParamList<T> all_params() {
    nn::ParamList<T> all = actor_params_;
    all.insert(all.end(), critic_params_.begin(), critic_params_.end());
    all.insert(all.end(), target_params_.begin(), target_params_.end());
    all.push_back({"log_alpha", &log_alpha_, &dlog_alpha_});
    return all;
  }

  int feature_dim() const { return feature_dim_; }
  int obs_dim() const { return motion_dim_ + feature_dim_; }
  int action_dim() const { return action_dim_; }
  double alpha() const { return std::exp(static_cast<double>(log_alpha_(0, 0))); }
  const SacConfig& config() const { return cfg_; }

  nn::ForceEncoder<T>& actor_encoder() { return enc_actor_; }

  static constexpr int kForceDim = 6;

  SacAgent(const SacAgent&) = delete;
  SacAgent& operator=(const SacAgent&) = delete;

 private:
  Matrix critic_input(const Matrix& m, const Matrix& feat, const Matrix& a) const {
    Matrix in(motion_dim_ + feature_dim_ + action_dim_, m.cols());
    in.topRows(motion_dim_) = m;
    if (feature_dim_ > 0) in.middleRows(motion_dim_, feature_dim_) = feat;
    in.bottomRows(action_dim_) = a;
    return in;
  }

  Matrix draw_noise(int batch, nn::Rng& rng) const {
    Matrix eps(action_dim_, batch);
    for (int c = 0; c < batch; ++c)
      for (int r = 0; r < action_dim_; ++r)
        eps(r, c) = static_cast<T>(rng.normal());
    return eps;
  }

  SacConfig cfg_;
  int motion_dim_, action_dim_, force_len_;
  int feature_dim_ = 0;
  double target_entropy_ = 0.0;

  nn::ForceEncoder<T> enc_actor_, enc_c1_, enc_c2_, enc_c1_t_, enc_c2_t_;
  nn::GaussianPolicy<T> actor_;
  nn::Mlp<T> critic1_, critic2_, critic1_t_, critic2_t_;
  Matrix log_alpha_, dlog_alpha_;

  nn::Adam<T> opt_actor_, opt_critic_, opt_alpha_;
  nn::ParamList<T> actor_params_, critic_params_, target_params_, alpha_params_;

 public:
  nn::GaussianPolicy<T>& policy() { return actor_; }
};

}  // namespace lac
