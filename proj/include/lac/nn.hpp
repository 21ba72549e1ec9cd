#pragma once

// Minimal neural-network stack written against Eigen matrices: linear
// layers, ReLU MLPs, a single-layer LSTM with BPTT, a tanh-squashed
// Gaussian head and Adam. Everything is templated on the scalar so the
// same code runs in float for training and double for gradient checks.
//
// Matrices are column-major with one sample per column: a batch of B
// feature vectors of size D is a [D x B] matrix.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace lac::nn {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

// Deterministic RNG: uniforms straight from mt19937_64, Gaussians via
// Box-Muller. Avoids distribution implementations we do not control.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  double uniform() {  // [0, 1)
    return (engine_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t integer(std::uint64_t n) {  // [0, n)
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
  }
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

template <typename T>
struct ParamRef {
  std::string name;
  Matrix<T>* value;
  Matrix<T>* grad;
};

template <typename T>
using ParamList = std::vector<ParamRef<T>>;

template <typename T>
struct Linear {
  Matrix<T> w, b;
  Matrix<T> dw, db;
  Matrix<T> x_cache;

  void init(int in, int out, Rng& rng) {
    // fan-in uniform, like common Linear defaults
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    w.resize(out, in);
    b.resize(out, 1);
    for (int r = 0; r < out; ++r) {
      b(r, 0) = static_cast<T>(rng.uniform(-bound, bound));
      for (int c = 0; c < in; ++c)
        w(r, c) = static_cast<T>(rng.uniform(-bound, bound));
    }
    dw = Matrix<T>::Zero(out, in);
    db = Matrix<T>::Zero(out, 1);
  }

  Matrix<T> forward(const Matrix<T>& x, bool cache = true) {
    if (cache) x_cache = x;
    return (w * x).colwise() + Eigen::Matrix<T, Eigen::Dynamic, 1>(b.col(0));
  }

  // Returns dL/dx; accumulates dL/dw, dL/db unless param grads are off
  // (used when a network only routes gradients to its inputs).
  Matrix<T> backward(const Matrix<T>& dy, bool accumulate = true) {
    if (accumulate) {
      dw.noalias() += dy * x_cache.transpose();
      db.col(0).noalias() += dy.rowwise().sum();
    }
    return w.transpose() * dy;
  }

  void zero_grad() {
    dw.setZero();
    db.setZero();
  }
  void visit(const std::string& prefix, ParamList<T>& out) {
    out.push_back({prefix + ".w", &w, &dw});
    out.push_back({prefix + ".b", &b, &db});
  }
};

// Feed-forward net with ReLU on all hidden layers, linear output.
template <typename T>
struct Mlp {
  std::vector<Linear<T>> layers;
  std::vector<Matrix<T>> act_cache;  // post-ReLU activations per hidden layer

  void init(int in, const std::vector<int>& hidden, int out, Rng& rng) {
    layers.clear();
    int d = in;
    for (int h : hidden) {
      layers.emplace_back();
      layers.back().init(d, h, rng);
      d = h;
    }
    layers.emplace_back();
    layers.back().init(d, out, rng);
  }

  Matrix<T> forward(const Matrix<T>& x, bool cache = true) {
    if (cache) act_cache.assign(layers.size() - 1, {});
    Matrix<T> h = x;
    for (size_t i = 0; i + 1 < layers.size(); ++i) {
      h = layers[i].forward(h, cache).cwiseMax(T(0));
      if (cache) act_cache[i] = h;
    }
    return layers.back().forward(h, cache);
  }

  Matrix<T> backward(const Matrix<T>& dy, bool accumulate = true) {
    Matrix<T> d = layers.back().backward(dy, accumulate);
    for (int i = static_cast<int>(layers.size()) - 2; i >= 0; --i) {
      d = d.cwiseProduct(
          (act_cache[i].array() > T(0)).template cast<T>().matrix());
      d = layers[i].backward(d, accumulate);
    }
    return d;
  }

  void zero_grad() {
    for (auto& l : layers) l.zero_grad();
  }
  void visit(const std::string& prefix, ParamList<T>& out) {
    for (size_t i = 0; i < layers.size(); ++i)
      layers[i].visit(prefix + ".l" + std::to_string(i), out);
  }
};

// Single-layer LSTM processed over a sequence; returns the final hidden
// state. Gate order in the stacked weights: input, forget, cell, output.
template <typename T>
struct Lstm {
  int in_dim = 0, hidden = 0;
  Matrix<T> w_x, w_h, b;
  Matrix<T> dw_x, dw_h, db;

  struct Cache {
    std::vector<Matrix<T>> x, gi, gf, gg, go, c, h;
  } cache;

  void init(int in, int h, Rng& rng) {
    in_dim = in;
    hidden = h;
    const double bound = 1.0 / std::sqrt(static_cast<double>(h));
    auto fill = [&](Matrix<T>& m, int rows, int cols) {
      m.resize(rows, cols);
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
          m(r, c) = static_cast<T>(rng.uniform(-bound, bound));
    };
    fill(w_x, 4 * h, in);
    fill(w_h, 4 * h, h);
    fill(b, 4 * h, 1);
    dw_x = Matrix<T>::Zero(4 * h, in);
    dw_h = Matrix<T>::Zero(4 * h, h);
    db = Matrix<T>::Zero(4 * h, 1);
  }

  static Matrix<T> sigmoid(const Matrix<T>& m) {
    return ((-m.array()).exp() + T(1)).inverse().matrix();
  }

  // seq: one [in_dim x B] matrix per time step, earliest first.
  Matrix<T> forward(const std::vector<Matrix<T>>& seq, bool keep = true) {
    const int B = static_cast<int>(seq.front().cols());
    const int L = static_cast<int>(seq.size());
    Matrix<T> h = Matrix<T>::Zero(hidden, B);
    Matrix<T> c = Matrix<T>::Zero(hidden, B);
    if (keep) {
      cache = Cache{};
      cache.x.reserve(L);
      cache.c.reserve(L + 1);
      cache.h.reserve(L + 1);
      cache.c.push_back(c);
      cache.h.push_back(h);
    }
    for (int t = 0; t < L; ++t) {
      Matrix<T> z = w_x * seq[t] + w_h * h;
      z.colwise() += Eigen::Matrix<T, Eigen::Dynamic, 1>(b.col(0));
      const Matrix<T> gi = sigmoid(z.topRows(hidden));
      const Matrix<T> gf = sigmoid(z.middleRows(hidden, hidden));
      const Matrix<T> gg = z.middleRows(2 * hidden, hidden).array().tanh().matrix();
      const Matrix<T> go = sigmoid(z.bottomRows(hidden));
      c = gf.cwiseProduct(c) + gi.cwiseProduct(gg);
      h = go.cwiseProduct(c.array().tanh().matrix());
      if (keep) {
        cache.x.push_back(seq[t]);
        cache.gi.push_back(gi);
        cache.gf.push_back(gf);
        cache.gg.push_back(gg);
        cache.go.push_back(go);
        cache.c.push_back(c);
        cache.h.push_back(h);
      }
    }
    return h;
  }

  // BPTT from the gradient at the final hidden state. Inputs are data, so
  // no dx is produced.
  void backward(const Matrix<T>& dh_last, bool accumulate = true) {
    const int L = static_cast<int>(cache.x.size());
    const int B = static_cast<int>(dh_last.cols());
    Matrix<T> dh = dh_last;
    Matrix<T> dc = Matrix<T>::Zero(hidden, B);
    for (int t = L - 1; t >= 0; --t) {
      const Matrix<T>& c_now = cache.c[t + 1];
      const Matrix<T>& c_prev = cache.c[t];
      const Matrix<T> tanh_c = c_now.array().tanh().matrix();
      const Matrix<T>& gi = cache.gi[t];
      const Matrix<T>& gf = cache.gf[t];
      const Matrix<T>& gg = cache.gg[t];
      const Matrix<T>& go = cache.go[t];

      const Matrix<T> dgo = dh.cwiseProduct(tanh_c);
      dc += dh.cwiseProduct(go).cwiseProduct(
          (T(1) - tanh_c.array().square()).matrix());
      const Matrix<T> dgi = dc.cwiseProduct(gg);
      const Matrix<T> dgg = dc.cwiseProduct(gi);
      const Matrix<T> dgf = dc.cwiseProduct(c_prev);

      Matrix<T> dz(4 * hidden, B);
      dz.topRows(hidden) = dgi.cwiseProduct(gi).cwiseProduct((T(1) - gi.array()).matrix());
      dz.middleRows(hidden, hidden) =
          dgf.cwiseProduct(gf).cwiseProduct((T(1) - gf.array()).matrix());
      dz.middleRows(2 * hidden, hidden) =
          dgg.cwiseProduct((T(1) - gg.array().square()).matrix());
      dz.bottomRows(hidden) =
          dgo.cwiseProduct(go).cwiseProduct((T(1) - go.array()).matrix());

      if (accumulate) {
        dw_x.noalias() += dz * cache.x[t].transpose();
        dw_h.noalias() += dz * cache.h[t].transpose();
        db.col(0).noalias() += dz.rowwise().sum();
      }
      dh = w_h.transpose() * dz;
      dc = dc.cwiseProduct(gf);
    }
  }

  void zero_grad() {
    dw_x.setZero();
    dw_h.setZero();
    db.setZero();
  }
  void visit(const std::string& prefix, ParamList<T>& out) {
    out.push_back({prefix + ".w_x", &w_x, &dw_x});
    out.push_back({prefix + ".w_h", &w_h, &dw_h});
    out.push_back({prefix + ".b", &b, &db});
  }
};

enum class FeatureMode { lstm, last_sample, none };

// Force-series encoder: LSTM over the series followed by a linear
// projection of the final hidden state. In last_sample mode the series is
// represented by its newest sample instead (the no-LSTM ablation); in
// none mode the series is ignored.
template <typename T>
struct ForceEncoder {
  FeatureMode mode = FeatureMode::lstm;
  int force_dim = 6;
  Lstm<T> lstm;
  Linear<T> proj;

  void init(int f_dim, int hidden, int feature, Rng& rng) {
    force_dim = f_dim;
    if (mode != FeatureMode::lstm) return;
    lstm.init(f_dim, hidden, rng);
    proj.init(hidden, feature, rng);
  }

  int feature_dim(int lstm_feature) const {
    switch (mode) {
      case FeatureMode::lstm: return lstm_feature;
      case FeatureMode::last_sample: return force_dim;
      case FeatureMode::none: return 0;
    }
    return 0;
  }

  Matrix<T> forward(const std::vector<Matrix<T>>& seq, bool cache = true) {
    switch (mode) {
      case FeatureMode::lstm:
        return proj.forward(lstm.forward(seq, cache), cache);
      case FeatureMode::last_sample:
        return seq.back();
      case FeatureMode::none:
        return Matrix<T>(0, seq.empty() ? 0 : seq.back().cols());
    }
    return {};
  }

  void backward(const Matrix<T>& dfeature, bool accumulate = true) {
    if (mode != FeatureMode::lstm) return;
    lstm.backward(proj.backward(dfeature, accumulate), accumulate);
  }

  void zero_grad() {
    if (mode != FeatureMode::lstm) return;
    lstm.zero_grad();
    proj.zero_grad();
  }
  void visit(const std::string& prefix, ParamList<T>& out) {
    if (mode != FeatureMode::lstm) return;
    lstm.visit(prefix + ".lstm", out);
    proj.visit(prefix + ".proj", out);
  }
};

// Tanh-squashed Gaussian policy. The trunk ends in ReLU; mean and log-std
// come from separate linear heads, with log-std clamped to [-20, 2].
template <typename T>
struct GaussianPolicy {
  Mlp<T> trunk;  // in -> hidden...; output layer is the last hidden (ReLU'd here)
  Linear<T> mean_head, logstd_head;
  static constexpr double kLogStdMin = -20.0;
  static constexpr double kLogStdMax = 2.0;
  static constexpr double kSquashEps = 1e-6;

  struct Eval {
    Matrix<T> trunk_out;   // post-ReLU
    Matrix<T> mean, logstd, std, eps, action;
    Matrix<T> logstd_raw;  // pre-clamp, for the clamp mask
    Eigen::Matrix<T, 1, Eigen::Dynamic> logp;
  };

  void init(int in, const std::vector<int>& hidden, int action_dim, Rng& rng) {
    // trunk maps in -> hidden.back() with ReLU between layers; we apply the
    // final ReLU ourselves in forward_trunk
    std::vector<int> trunk_hidden(hidden.begin(), hidden.end() - 1);
    trunk.init(in, trunk_hidden, hidden.back(), rng);
    mean_head.init(hidden.back(), action_dim, rng);
    logstd_head.init(hidden.back(), action_dim, rng);
  }

  Matrix<T> forward_trunk(const Matrix<T>& x, bool cache) {
    return trunk.forward(x, cache).cwiseMax(T(0));
  }

  // Reparameterized sample with exact change-of-variables log density.
  Eval sample(const Matrix<T>& x, Rng& rng) {
    Eval ev;
    ev.trunk_out = forward_trunk(x, true);
    ev.mean = mean_head.forward(ev.trunk_out, true);
    ev.logstd_raw = logstd_head.forward(ev.trunk_out, true);
    ev.logstd = ev.logstd_raw.cwiseMax(T(kLogStdMin)).cwiseMin(T(kLogStdMax));
    ev.std = ev.logstd.array().exp().matrix();
    ev.eps.resize(ev.mean.rows(), ev.mean.cols());
    for (Eigen::Index c = 0; c < ev.eps.cols(); ++c)
      for (Eigen::Index r = 0; r < ev.eps.rows(); ++r)
        ev.eps(r, c) = static_cast<T>(rng.normal());
    finish_sample(ev);
    return ev;
  }

  // Same as sample() but with caller-provided noise (gradient checks).
  Eval sample_with_noise(const Matrix<T>& x, const Matrix<T>& eps) {
    Eval ev;
    ev.trunk_out = forward_trunk(x, true);
    ev.mean = mean_head.forward(ev.trunk_out, true);
    ev.logstd_raw = logstd_head.forward(ev.trunk_out, true);
    ev.logstd = ev.logstd_raw.cwiseMax(T(kLogStdMin)).cwiseMin(T(kLogStdMax));
    ev.std = ev.logstd.array().exp().matrix();
    ev.eps = eps;
    finish_sample(ev);
    return ev;
  }

  void finish_sample(Eval& ev) {
    const Matrix<T> z = ev.mean + ev.std.cwiseProduct(ev.eps);
    ev.action = z.array().tanh().matrix();
    // logp = sum_i [ -0.5 eps^2 - logstd - 0.5 log(2 pi) - log(1 - a^2 + eps_sq) ]
    const auto a2 = ev.action.array().square();
    Matrix<T> per = (-T(0.5) * ev.eps.array().square() - ev.logstd.array() -
                     T(0.5) * std::log(2.0 * M_PI) -
                     (T(1) - a2 + T(kSquashEps)).log())
                        .matrix();
    ev.logp = per.colwise().sum();
  }

  // Deterministic evaluation action: tanh(mean).
  Matrix<T> mean_action(const Matrix<T>& x) {
    const Matrix<T> t = forward_trunk(x, false);
    return mean_head.forward(t, false).array().tanh().matrix();
  }

  // Backward given dL/daction and dL/dlogp (one value per column). Returns
  // dL/dx so a shared encoder upstream can keep propagating.
  Matrix<T> backward(const Eval& ev, const Matrix<T>& daction,
                     const Eigen::Matrix<T, 1, Eigen::Dynamic>& dlogp,
                     bool accumulate = true) {
    const auto a = ev.action.array();
    const auto one_m_a2 = T(1) - a.square();
    const auto u = one_m_a2 + T(kSquashEps);

    // dz from the action path and from the squash correction in logp
    Matrix<T> dz = daction.cwiseProduct(one_m_a2.matrix());
    Matrix<T> dlogp_dz = (T(2) * a * one_m_a2 / u).matrix();
    for (Eigen::Index c = 0; c < dz.cols(); ++c)
      dz.col(c) += dlogp(0, c) * dlogp_dz.col(c);

    // z = mean + std * eps
    Matrix<T> dmean = dz;
    Matrix<T> dlogstd = dz.cwiseProduct(ev.std).cwiseProduct(ev.eps);
    for (Eigen::Index c = 0; c < dlogstd.cols(); ++c)
      dlogstd.col(c).array() -= dlogp(0, c);  // -logstd term in logp

    // clamp mask on logstd
    dlogstd = dlogstd.cwiseProduct(((ev.logstd_raw.array() > T(kLogStdMin)) &&
                                    (ev.logstd_raw.array() < T(kLogStdMax)))
                                       .template cast<T>()
                                       .matrix());

    Matrix<T> dtrunk = mean_head.backward(dmean, accumulate) +
                       logstd_head.backward(dlogstd, accumulate);
    dtrunk = dtrunk.cwiseProduct(
        (ev.trunk_out.array() > T(0)).template cast<T>().matrix());
    return trunk.backward(dtrunk, accumulate);
  }

  void zero_grad() {
    trunk.zero_grad();
    mean_head.zero_grad();
    logstd_head.zero_grad();
  }
  void visit(const std::string& prefix, ParamList<T>& out) {
    trunk.visit(prefix + ".trunk", out);
    mean_head.visit(prefix + ".mean", out);
    logstd_head.visit(prefix + ".logstd", out);
  }
};

template <typename T>
class Adam {
 public:
  explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(ParamList<T>& params) {
    if (m_.empty()) {
      for (auto& p : params) {
        m_.push_back(Matrix<T>::Zero(p.value->rows(), p.value->cols()));
        v_.push_back(Matrix<T>::Zero(p.value->rows(), p.value->cols()));
      }
    }
    ++t_;
    const T bc1 = T(1) - static_cast<T>(std::pow(beta1_, t_));
    const T bc2 = T(1) - static_cast<T>(std::pow(beta2_, t_));
    for (size_t i = 0; i < params.size(); ++i) {
      const Matrix<T>& g = *params[i].grad;
      m_[i] = T(beta1_) * m_[i] + T(1 - beta1_) * g;
      v_[i] = T(beta2_) * v_[i] + (T(1 - beta2_) * g.array().square()).matrix();
      params[i].value->array() -=
          T(lr_) * (m_[i].array() / bc1) /
          ((v_[i].array() / bc2).sqrt() + T(eps_));
    }
  }

  double lr() const { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  std::vector<Matrix<T>> m_, v_;
};

// target <- factor * target + (1 - factor) * online, elementwise.
template <typename T>
void polyak_update(ParamList<T>& online, ParamList<T>& target, double factor) {
  if (online.size() != target.size())
    throw std::invalid_argument("polyak_update: parameter lists differ");
  for (size_t i = 0; i < online.size(); ++i)
    *target[i].value = T(factor) * *target[i].value +
                       T(1.0 - factor) * *online[i].value;
}

template <typename T>
void copy_params(ParamList<T>& src, ParamList<T>& dst) {
  for (size_t i = 0; i < src.size(); ++i) *dst[i].value = *src[i].value;
}

}  // namespace lac::nn
