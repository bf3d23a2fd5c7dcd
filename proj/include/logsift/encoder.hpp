#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "logsift/rng.hpp"
#include "logsift/types.hpp"

namespace logsift {

// Row-major throughout: the attention kernels walk raw row pointers.
using Mat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using IdMatrix =
    Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ModelConfig {
  std::size_t max_len = 12;   // tokens per line including [CLS]
  std::size_t embed_dim = 128;
  std::size_t hidden_dim = 256;
  std::size_t n_layers = 1;
  std::size_t n_heads = 2;
  double dropout_rate = 0.1;
  std::size_t batch_size = 1024;
  std::size_t epochs = 8;
  double learning_rate = 1e-4;
  double weight_decay = 5e-5;
  std::uint64_t seed = 1;
  std::string threshold_mode = "crossover"; // or "fixed"
  double fixed_threshold = 0.0;

  void validate() const {
    if (max_len < 2) usage_error("model: max_len must be >= 2");
    if (embed_dim == 0 || n_heads == 0 || embed_dim % n_heads != 0)
      usage_error("model: embed_dim must be divisible by n_heads");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
      usage_error("model: dropout_rate must be in [0,1)");
    if (n_layers == 0) usage_error("model: n_layers must be >= 1");
    if (batch_size == 0) usage_error("model: batch_size must be >= 1");
    if (learning_rate <= 0.0) usage_error("model: learning_rate must be > 0");
    if (threshold_mode != "crossover" && threshold_mode != "fixed")
      usage_error("model: threshold_mode must be 'crossover' or 'fixed'");
  }
};

// Guard inside the q^2/||z|| objective branch; keeps gradients bounded when a
// score collapses to zero.
inline constexpr double kNormEpsilon = 1e-6;

struct LayerTensors {
  Mat wq, wk, wv, wo; // d x d
  Mat bq, bk, bv, bo; // 1 x d
  Mat ln1_g, ln1_b;   // 1 x d
  Mat w1;             // d x f
  Mat b1;             // 1 x f
  Mat w2;             // f x d
  Mat b2;             // 1 x d
  Mat ln2_g, ln2_b;   // 1 x d
};

/// All trainable tensors of the encoder. The same container shape doubles as
/// the gradient and optimizer-moment storage.
struct EncoderTensors {
  Mat embedding; // vocab x d
  std::vector<LayerTensors> layers;
};

template <typename Tensors, typename Fn>
void for_each_tensor(Tensors& t, Fn&& fn) {
  fn("embedding", t.embedding);
  for (std::size_t l = 0; l < t.layers.size(); ++l) {
    auto& L = t.layers[l];
    const std::string p = "layer" + std::to_string(l) + ".";
    fn(p + "wq", L.wq);
    fn(p + "bq", L.bq);
    fn(p + "wk", L.wk);
    fn(p + "bk", L.bk);
    fn(p + "wv", L.wv);
    fn(p + "bv", L.bv);
    fn(p + "wo", L.wo);
    fn(p + "bo", L.bo);
    fn(p + "ln1_g", L.ln1_g);
    fn(p + "ln1_b", L.ln1_b);
    fn(p + "w1", L.w1);
    fn(p + "b1", L.b1);
    fn(p + "w2", L.w2);
    fn(p + "b2", L.b2);
    fn(p + "ln2_g", L.ln2_g);
    fn(p + "ln2_b", L.ln2_b);
  }
}

inline EncoderTensors make_tensors(const ModelConfig& cfg,
                                   std::size_t vocab_size) {
  const auto d = static_cast<Eigen::Index>(cfg.embed_dim);
  const auto f = static_cast<Eigen::Index>(cfg.hidden_dim);
  EncoderTensors t;
  t.embedding = Mat::Zero(static_cast<Eigen::Index>(vocab_size), d);
  t.layers.resize(cfg.n_layers);
  for (auto& L : t.layers) {
    L.wq = L.wk = L.wv = L.wo = Mat::Zero(d, d);
    L.bq = L.bk = L.bv = L.bo = Mat::Zero(1, d);
    L.ln1_g = L.ln1_b = L.ln2_g = L.ln2_b = Mat::Zero(1, d);
    L.w1 = Mat::Zero(d, f);
    L.b1 = Mat::Zero(1, f);
    L.w2 = Mat::Zero(f, d);
    L.b2 = Mat::Zero(1, d);
  }
  return t;
}

/// Weight matrices and embeddings start uniform in [-1/sqrt(d), 1/sqrt(d)];
/// biases start at zero and LayerNorm gains at one so the residual stream is
/// well-scaled from the first step.
///
/// With zero_residual set (the training default), the output projection of
/// each residual branch starts at zero: every line then scores exactly
/// ||embedding[CLS]|| at step one, safely below the decision threshold, and
/// only unknown-class content has to climb. Without it the initial score
/// norm sits far above any reachable threshold for short training budgets.
inline EncoderTensors init_params(const ModelConfig& cfg, std::size_t vocab_size,
                                  std::uint64_t seed,
                                  bool zero_residual = true) {
  EncoderTensors t = make_tensors(cfg, vocab_size);
  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.embed_dim));
  auto fill = [&](Mat& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        m(r, c) = rng.uniform(-bound, bound);
  };
  fill(t.embedding);
  for (auto& L : t.layers) {
    fill(L.wq);
    fill(L.wk);
    fill(L.wv);
    fill(L.wo);
    fill(L.w1);
    fill(L.w2);
    if (zero_residual) {
      L.wo.setZero();
      L.w2.setZero();
    }
    L.ln1_g.setOnes();
    L.ln2_g.setOnes();
  }
  return t;
}

// Positional vectors are damped so token identity dominates the mix with the
// [-1/sqrt(d), 1/sqrt(d)] embedding scale; the [CLS] slot gets none at all
// since its position never varies.
inline constexpr double kPositionScale = 0.1;

inline Mat sinusoidal_positions(std::size_t max_len, std::size_t dim) {
  Mat pos(static_cast<Eigen::Index>(max_len), static_cast<Eigen::Index>(dim));
  for (std::size_t t = 0; t < max_len; ++t) {
    for (std::size_t i = 0; i < dim; i += 2) {
      const double angle =
          static_cast<double>(t) /
          std::pow(10000.0, static_cast<double>(i) / static_cast<double>(dim));
      pos(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)) =
          std::sin(angle);
      if (i + 1 < dim)
        pos(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i + 1)) =
            std::cos(angle);
    }
  }
  return pos;
}

namespace nn {

inline double gelu(double x) {
  return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2));
}

inline double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  return cdf + x * pdf;
}

inline constexpr double kLnEpsilon = 1e-5;

struct LayerCache {
  Mat x_in;             // (B*T) x d
  Mat n1, q, k, v;      // (B*T) x d
  Mat concat, attn_out; // (B*T) x d
  Mat x_mid;            // residual after attention
  Mat n2;               // (B*T) x d
  Mat hpre, hact;       // (B*T) x f
  Mat x_out;            // residual after feed-forward
  Eigen::VectorXd ln1_mu, ln1_inv, ln2_mu, ln2_inv;
  std::vector<Mat> probs;      // B*H of T x T, zero at masked columns
  std::vector<Mat> mask_probs; // dropout multipliers (train only)
  Mat mask_attn_out, mask_ff;
};

struct ForwardCache {
  Mat x0;
  Mat mask_emb;
  std::vector<LayerCache> layers;
  Mat z; // B x d
};

inline void layer_norm_forward(const Mat& x, const Mat& gain, const Mat& bias,
                               Mat& out, Eigen::VectorXd& mu,
                               Eigen::VectorXd& inv) {
  const Eigen::Index rows = x.rows();
  const Eigen::Index d = x.cols();
  out.resize(rows, d);
  mu.resize(rows);
  inv.resize(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double m = x.row(r).mean();
    const double var = (x.row(r).array() - m).square().mean();
    const double is = 1.0 / std::sqrt(var + kLnEpsilon);
    mu(r) = m;
    inv(r) = is;
    out.row(r) =
        ((x.row(r).array() - m) * is * gain.array() + bias.array()).matrix();
  }
}

inline void layer_norm_backward(const Mat& dy, const Mat& x,
                                const Eigen::VectorXd& mu,
                                const Eigen::VectorXd& inv, const Mat& gain,
                                Mat& dx, Mat& dgain, Mat& dbias) {
  const Eigen::Index rows = x.rows();
  const Eigen::Index d = x.cols();
  dx.resize(rows, d);
  for (Eigen::Index r = 0; r < rows; ++r) {
    Eigen::ArrayXd xhat = (x.row(r).array() - mu(r)) * inv(r);
    Eigen::ArrayXd dyr = dy.row(r).array();
    dgain.array() += (dyr * xhat).transpose();
    dbias.array() += dyr.transpose();
    Eigen::ArrayXd dxhat = dyr * gain.array().transpose();
    const double m1 = dxhat.mean();
    const double m2 = (dxhat * xhat).mean();
    dx.row(r) = ((dxhat - m1 - xhat * m2) * inv(r)).matrix().transpose();
  }
}

inline void add_row_bias(Mat& x, const Mat& bias) {
  x.rowwise() += bias.row(0);
}

/// Inverted-dropout multiplier matrix: entries are 0 or 1/(1-p).
inline Mat dropout_mask(Eigen::Index rows, Eigen::Index cols, double p,
                        Rng& rng) {
  Mat m(rows, cols);
  const double keep = 1.0 / (1.0 - p);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = rng.next_double() < p ? 0.0 : keep;
  return m;
}

} // namespace nn

/// Encoder forward pass. Rows of `ids` are [CLS]-prefixed, [PAD]-padded token
/// id sequences; [PAD] columns are attention-masked, so trailing padding can
/// never leak into z. Returns one d-dimensional z vector per row (the output
/// at the [CLS] position). With train_mode set, dropout draws come from `rng`
/// and every intermediate needed by the backward pass lands in `cache`.
inline const Mat& encoder_forward(const EncoderTensors& params,
                                  const ModelConfig& cfg, const IdMatrix& ids,
                                  const Mat& positions, bool train_mode,
                                  Rng* rng, nn::ForwardCache& cache) {
  const Eigen::Index B = ids.rows();
  const Eigen::Index T = ids.cols();
  const auto d = static_cast<Eigen::Index>(cfg.embed_dim);
  const auto H = static_cast<Eigen::Index>(cfg.n_heads);
  const Eigen::Index dk = d / H;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  const bool dropout = train_mode && cfg.dropout_rate > 0.0;
  if (dropout && rng == nullptr)
    numeric_error("encoder: dropout requested without an rng");

  cache.layers.resize(cfg.n_layers);
  if (!dropout) cache.mask_emb.resize(0, 0); // flag for the backward pass
  cache.x0.resize(B * T, d);
  for (Eigen::Index b = 0; b < B; ++b)
    for (Eigen::Index t = 0; t < T; ++t) {
      cache.x0.row(b * T + t) = params.embedding.row(ids(b, t));
      if (t > 0)
        cache.x0.row(b * T + t) += kPositionScale * positions.row(t);
    }
  if (dropout) {
    cache.mask_emb = nn::dropout_mask(B * T, d, cfg.dropout_rate, *rng);
    cache.x0 = cache.x0.cwiseProduct(cache.mask_emb);
  }

  const Mat* x = &cache.x0;
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    const auto& P = params.layers[l];
    auto& C = cache.layers[l];
    C.x_in = *x;

    nn::layer_norm_forward(C.x_in, P.ln1_g, P.ln1_b, C.n1, C.ln1_mu, C.ln1_inv);
    C.q.noalias() = C.n1 * P.wq;
    nn::add_row_bias(C.q, P.bq);
    C.k.noalias() = C.n1 * P.wk;
    nn::add_row_bias(C.k, P.bk);
    C.v.noalias() = C.n1 * P.wv;
    nn::add_row_bias(C.v, P.bv);

    C.concat.resize(B * T, d);
    C.probs.assign(static_cast<std::size_t>(B * H), Mat());
    if (dropout) C.mask_probs.assign(static_cast<std::size_t>(B * H), Mat());

    for (Eigen::Index b = 0; b < B; ++b) {
      for (Eigen::Index h = 0; h < H; ++h) {
        Mat& prob = C.probs[static_cast<std::size_t>(b * H + h)];
        prob = Mat::Zero(T, T);
        // Scores and softmax over unmasked columns only; explicit loops keep
        // the accumulation order independent of the padded length.
        for (Eigen::Index i = 0; i < T; ++i) {
          double row_max = -std::numeric_limits<double>::infinity();
          for (Eigen::Index j = 0; j < T; ++j) {
            if (ids(b, j) == 0 && j != 0) continue; // [PAD]
            double s = 0.0;
            const double* qp = &C.q(b * T + i, h * dk);
            const double* kp = &C.k(b * T + j, h * dk);
            for (Eigen::Index c = 0; c < dk; ++c) s += qp[c] * kp[c];
            s *= scale;
            prob(i, j) = s;
            if (s > row_max) row_max = s;
          }
          double denom = 0.0;
          for (Eigen::Index j = 0; j < T; ++j) {
            if (ids(b, j) == 0 && j != 0) {
              prob(i, j) = 0.0;
              continue;
            }
            prob(i, j) = std::exp(prob(i, j) - row_max);
            denom += prob(i, j);
          }
          for (Eigen::Index j = 0; j < T; ++j) prob(i, j) /= denom;
        }

        const Mat* attn = &prob;
        Mat dropped;
        if (dropout) {
          Mat& mask = C.mask_probs[static_cast<std::size_t>(b * H + h)];
          mask = nn::dropout_mask(T, T, cfg.dropout_rate, *rng);
          dropped = prob.cwiseProduct(mask);
          attn = &dropped;
        }
        for (Eigen::Index i = 0; i < T; ++i) {
          double* out = &C.concat(b * T + i, h * dk);
          for (Eigen::Index c = 0; c < dk; ++c) out[c] = 0.0;
          for (Eigen::Index j = 0; j < T; ++j) {
            const double w = (*attn)(i, j);
            if (w == 0.0) continue;
            const double* vp = &C.v(b * T + j, h * dk);
            for (Eigen::Index c = 0; c < dk; ++c) out[c] += w * vp[c];
          }
        }
      }
    }

    C.attn_out.noalias() = C.concat * P.wo;
    nn::add_row_bias(C.attn_out, P.bo);
    if (dropout) {
      C.mask_attn_out = nn::dropout_mask(B * T, d, cfg.dropout_rate, *rng);
      C.attn_out = C.attn_out.cwiseProduct(C.mask_attn_out);
    }
    C.x_mid = C.x_in + C.attn_out;

    nn::layer_norm_forward(C.x_mid, P.ln2_g, P.ln2_b, C.n2, C.ln2_mu, C.ln2_inv);
    C.hpre.noalias() = C.n2 * P.w1;
    nn::add_row_bias(C.hpre, P.b1);
    C.hact = C.hpre.unaryExpr([](double v) { return nn::gelu(v); });
    Mat ff;
    ff.noalias() = C.hact * P.w2;
    nn::add_row_bias(ff, P.b2);
    if (dropout) {
      C.mask_ff = nn::dropout_mask(B * T, d, cfg.dropout_rate, *rng);
      ff = ff.cwiseProduct(C.mask_ff);
    }
    C.x_out = C.x_mid + ff;
    x = &C.x_out;
  }

  cache.z.resize(B, d);
  for (Eigen::Index b = 0; b < B; ++b) cache.z.row(b) = x->row(b * T);
  return cache.z;
}

/// Backward pass matching encoder_forward; `dz` is dLoss/dz per batch row.
/// Gradients accumulate into `grads` (caller zeroes them per step).
inline void encoder_backward(const EncoderTensors& params, const ModelConfig& cfg,
                             const IdMatrix& ids, const nn::ForwardCache& cache,
                             const Mat& dz, EncoderTensors& grads) {
  const Eigen::Index B = ids.rows();
  const Eigen::Index T = ids.cols();
  const auto d = static_cast<Eigen::Index>(cfg.embed_dim);
  const auto H = static_cast<Eigen::Index>(cfg.n_heads);
  const Eigen::Index dk = d / H;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  const bool dropout = cache.mask_emb.size() > 0;

  Mat dx = Mat::Zero(B * T, d);
  for (Eigen::Index b = 0; b < B; ++b) dx.row(b * T) = dz.row(b);

  for (std::size_t li = cfg.n_layers; li-- > 0;) {
    const auto& P = params.layers[li];
    const auto& C = cache.layers[li];
    auto& G = grads.layers[li];

    // Feed-forward block.
    Mat dff = dropout ? dx.cwiseProduct(C.mask_ff) : dx;
    Mat dhact;
    dhact.noalias() = dff * P.w2.transpose();
    G.w2.noalias() += C.hact.transpose() * dff;
    G.b2.row(0) += dff.colwise().sum();
    Mat dhpre =
        dhact.cwiseProduct(C.hpre.unaryExpr([](double v) { return nn::gelu_grad(v); }));
    Mat dn2;
    dn2.noalias() = dhpre * P.w1.transpose();
    G.w1.noalias() += C.n2.transpose() * dhpre;
    G.b1.row(0) += dhpre.colwise().sum();
    Mat dx_mid;
    nn::layer_norm_backward(dn2, C.x_mid, C.ln2_mu, C.ln2_inv, P.ln2_g, dx_mid,
                            G.ln2_g, G.ln2_b);
    dx_mid += dx;

    // Attention block.
    Mat da = dropout ? dx_mid.cwiseProduct(C.mask_attn_out) : dx_mid;
    Mat dconcat;
    dconcat.noalias() = da * P.wo.transpose();
    G.wo.noalias() += C.concat.transpose() * da;
    G.bo.row(0) += da.colwise().sum();

    Mat dq = Mat::Zero(B * T, d);
    Mat dk_ = Mat::Zero(B * T, d);
    Mat dv = Mat::Zero(B * T, d);
    Mat dprob(T, T), ds(T, T);
    for (Eigen::Index b = 0; b < B; ++b) {
      for (Eigen::Index h = 0; h < H; ++h) {
        const Mat& prob = C.probs[static_cast<std::size_t>(b * H + h)];

        // dP (post-dropout) and dV.
        for (Eigen::Index i = 0; i < T; ++i) {
          const double* dcp = &dconcat(b * T + i, h * dk);
          for (Eigen::Index j = 0; j < T; ++j) {
            double pd = prob(i, j);
            if (dropout)
              pd *= C.mask_probs[static_cast<std::size_t>(b * H + h)](i, j);
            if (pd != 0.0) {
              double* dvp = &dv(b * T + j, h * dk);
              for (Eigen::Index c = 0; c < dk; ++c) dvp[c] += pd * dcp[c];
            }
            const double* vp = &C.v(b * T + j, h * dk);
            double acc = 0.0;
            for (Eigen::Index c = 0; c < dk; ++c) acc += dcp[c] * vp[c];
            dprob(i, j) = acc;
          }
        }
        if (dropout)
          dprob = dprob.cwiseProduct(
              C.mask_probs[static_cast<std::size_t>(b * H + h)]);

        // Softmax backward; masked columns carry prob == 0 and drop out.
        for (Eigen::Index i = 0; i < T; ++i) {
          double inner = 0.0;
          for (Eigen::Index j = 0; j < T; ++j)
            inner += dprob(i, j) * prob(i, j);
          for (Eigen::Index j = 0; j < T; ++j)
            ds(i, j) = prob(i, j) * (dprob(i, j) - inner);
        }

        for (Eigen::Index i = 0; i < T; ++i) {
          double* dqp = &dq(b * T + i, h * dk);
          for (Eigen::Index j = 0; j < T; ++j) {
            const double g = ds(i, j) * scale;
            if (g == 0.0) continue;
            const double* kp = &C.k(b * T + j, h * dk);
            double* dkp = &dk_(b * T + j, h * dk);
            const double* qp = &C.q(b * T + i, h * dk);
            for (Eigen::Index c = 0; c < dk; ++c) {
              dqp[c] += g * kp[c];
              dkp[c] += g * qp[c];
            }
          }
        }
      }
    }

    Mat dn1;
    dn1.noalias() = dq * P.wq.transpose();
    dn1.noalias() += dk_ * P.wk.transpose();
    dn1.noalias() += dv * P.wv.transpose();
    G.wq.noalias() += C.n1.transpose() * dq;
    G.bq.row(0) += dq.colwise().sum();
    G.wk.noalias() += C.n1.transpose() * dk_;
    G.bk.row(0) += dk_.colwise().sum();
    G.wv.noalias() += C.n1.transpose() * dv;
    G.bv.row(0) += dv.colwise().sum();

    Mat dx_in;
    nn::layer_norm_backward(dn1, C.x_in, C.ln1_mu, C.ln1_inv, P.ln1_g, dx_in,
                            G.ln1_g, G.ln1_b);
    dx = dx_in + dx_mid;
  }

  if (dropout) dx = dx.cwiseProduct(cache.mask_emb);
  for (Eigen::Index b = 0; b < B; ++b)
    for (Eigen::Index t = 0; t < T; ++t)
      grads.embedding.row(ids(b, t)) += dx.row(b * T + t);
}

template <typename Tensors>
inline std::vector<Mat*> tensor_list(Tensors& t) {
  std::vector<Mat*> out;
  for_each_tensor(t, [&](const std::string&, Mat& m) { out.push_back(&m); });
  return out;
}

/// Decoupled-weight-decay adaptive-moment update.
class AdamW {
public:
  AdamW(const ModelConfig& cfg, std::size_t vocab_size)
      : lr_(cfg.learning_rate), wd_(cfg.weight_decay),
        m_(make_tensors(cfg, vocab_size)),
        v_(make_tensors(cfg, vocab_size)) {}

  void step(EncoderTensors& params, EncoderTensors& grads) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    auto ps = tensor_list(params);
    auto gs = tensor_list(grads);
    auto ms = tensor_list(m_);
    auto vs = tensor_list(v_);
    for (std::size_t i = 0; i < ps.size(); ++i) {
      Mat& p = *ps[i];
      const Mat& g = *gs[i];
      Mat& gm = *ms[i];
      Mat& gv = *vs[i];
      gm = beta1_ * gm + (1.0 - beta1_) * g;
      gv = beta2_ * gv + (1.0 - beta2_) * g.cwiseProduct(g);
      p.array() -=
          lr_ * ((gm.array() / bc1) / ((gv.array() / bc2).sqrt() + eps_) +
                 wd_ * p.array());
    }
  }

private:
  double lr_, wd_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
  EncoderTensors m_, v_;
};

} // namespace logsift
