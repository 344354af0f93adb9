#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "toxspan/error.hpp"

// A small bidirectional transformer encoder for per-token classification,
// trained from scratch. Architecture: learned token + position
// embeddings, post-layer-norm blocks (self-attention, then a GELU
// feed-forward, each wrapped in residual + layer norm), and a multi-depth
// classification head: the hidden outputs of a chosen set of blocks are
// concatenated per token (ascending block order), passed through dropout
// and a single linear layer. The classifier input width is therefore
// |depth_set| * hidden_dim.
//
// Everything is templated on the scalar type: float for training,
// double for gradient checking. forward/backward are pure functions of
// (parameters, batch, seed); backward returns exact analytic gradients.

namespace toxspan {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

struct EncoderConfig {
  int32_t vocab_size = 0;
  int32_t hidden_dim = 0;
  int32_t num_blocks = 0;
  int32_t num_heads = 0;
  int32_t ff_dim = 0;  // 0 means 4 * hidden_dim
  int32_t max_len = 128;
  // Block indices whose hidden outputs feed the classifier. 1..num_blocks
  // are transformer blocks; 0 addresses the embedding output and is
  // allowed as an explicit extension (last_n_depth_set never produces it).
  std::vector<int32_t> depth_set;
  float dropout_rate = 0.25f;
  int32_t num_classes = 2;

  int32_t effective_ff_dim() const { return ff_dim > 0 ? ff_dim : 4 * hidden_dim; }

  std::vector<int32_t> normalized_depth_set() const {
    std::vector<int32_t> k = depth_set;
    std::sort(k.begin(), k.end());
    k.erase(std::unique(k.begin(), k.end()), k.end());
    return k;
  }

  int32_t head_input_dim() const {
    return static_cast<int32_t>(normalized_depth_set().size()) * hidden_dim;
  }

  static std::vector<int32_t> last_n_depth_set(int32_t num_blocks, int32_t n) {
    if (n < 1 || n > num_blocks) {
      throw Error("last-N depth set needs 1 <= N <= " + std::to_string(num_blocks) + ", got " +
                  std::to_string(n));
    }
    std::vector<int32_t> k;
    for (int32_t b = num_blocks - n + 1; b <= num_blocks; ++b) k.push_back(b);
    return k;
  }

  /// Throws one Error listing every violation.
  void validate() const {
    std::vector<std::string> problems;
    if (vocab_size < 1) problems.push_back("vocab_size must be >= 1");
    if (hidden_dim < 1) problems.push_back("hidden_dim must be >= 1");
    if (num_blocks < 1) problems.push_back("num_blocks must be >= 1");
    if (num_heads < 1) problems.push_back("num_heads must be >= 1");
    if (num_heads >= 1 && hidden_dim >= 1 && hidden_dim % num_heads != 0) {
      problems.push_back("num_heads must divide hidden_dim");
    }
    if (ff_dim < 0) problems.push_back("ff_dim must be >= 0 (0 selects 4*hidden_dim)");
    if (max_len < 1) problems.push_back("max_len must be >= 1");
    if (depth_set.empty()) problems.push_back("depth_set must be non-empty");
    for (int32_t k : depth_set) {
      if (k < 0 || k > num_blocks) {
        problems.push_back("depth_set entry " + std::to_string(k) + " outside [0, " +
                           std::to_string(num_blocks) + "]");
      }
    }
    if (!(dropout_rate >= 0.0f && dropout_rate < 1.0f)) {
      problems.push_back("dropout_rate must be in [0, 1)");
    }
    if (num_classes < 2) problems.push_back("num_classes must be >= 2");
    if (!problems.empty()) {
      std::string msg = "invalid encoder config:";
      for (const std::string& p : problems) msg += "\n  - " + p;
      throw Error(msg);
    }
  }

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

/// Right-padded batch, row-major [b * seq_len + t].
struct TokenBatch {
  int32_t batch_size = 0;
  int32_t seq_len = 0;
  std::vector<int32_t> ids;
  std::vector<uint8_t> mask;  // 1 = real token

  static TokenBatch pack(const std::vector<std::vector<int32_t>>& sequences, int32_t pad_id,
                         int32_t max_len) {
    TokenBatch batch;
    batch.batch_size = static_cast<int32_t>(sequences.size());
    for (const auto& seq : sequences) {
      batch.seq_len = std::max(
          batch.seq_len, std::min(static_cast<int32_t>(seq.size()), max_len));
    }
    batch.ids.assign(static_cast<std::size_t>(batch.batch_size) * batch.seq_len, pad_id);
    batch.mask.assign(batch.ids.size(), 0);
    for (int32_t b = 0; b < batch.batch_size; ++b) {
      const auto& seq = sequences[b];
      const auto len = std::min(static_cast<int32_t>(seq.size()), batch.seq_len);
      for (int32_t t = 0; t < len; ++t) {
        batch.ids[b * batch.seq_len + t] = seq[t];
        batch.mask[b * batch.seq_len + t] = 1;
      }
    }
    return batch;
  }

  int32_t rows() const { return batch_size * seq_len; }
};

template <typename S>
struct BlockParams {
  Mat<S> wq, wk, wv, wo;              // hidden x hidden
  Mat<S> bq, bk, bv, bo;              // hidden x 1
  Mat<S> w1, b1;                      // hidden x ff, ff x 1
  Mat<S> w2, b2;                      // ff x hidden, hidden x 1
  Mat<S> ln1_gain, ln1_bias;          // hidden x 1
  Mat<S> ln2_gain, ln2_bias;          // hidden x 1
};

template <typename S>
struct Parameters {
  Mat<S> tok_emb;                     // vocab x hidden
  Mat<S> pos_emb;                     // max_len x hidden
  std::vector<BlockParams<S>> blocks;
  Mat<S> head_w;                      // (|K| * hidden) x classes
  Mat<S> head_b;                      // classes x 1

  /// Visits every tensor in a fixed order; f(name, Mat&). The order is
  /// the serialization order.
  template <typename F>
  void for_each_tensor(F&& f) {
    for_each_impl(*this, f);
  }
  template <typename F>
  void for_each_tensor(F&& f) const {
    for_each_impl(*this, f);
  }

  /// All-zero parameters with the shapes the config dictates; used for
  /// gradient and optimizer-state buffers.
  static Parameters zeros(const EncoderConfig& config) {
    config.validate();
    const int32_t d = config.hidden_dim;
    const int32_t ff = config.effective_ff_dim();
    Parameters p;
    p.tok_emb = Mat<S>::Zero(config.vocab_size, d);
    p.pos_emb = Mat<S>::Zero(config.max_len, d);
    p.blocks.resize(config.num_blocks);
    for (auto& blk : p.blocks) {
      blk.wq = Mat<S>::Zero(d, d);
      blk.wk = Mat<S>::Zero(d, d);
      blk.wv = Mat<S>::Zero(d, d);
      blk.wo = Mat<S>::Zero(d, d);
      blk.bq = Mat<S>::Zero(d, 1);
      blk.bk = Mat<S>::Zero(d, 1);
      blk.bv = Mat<S>::Zero(d, 1);
      blk.bo = Mat<S>::Zero(d, 1);
      blk.w1 = Mat<S>::Zero(d, ff);
      blk.b1 = Mat<S>::Zero(ff, 1);
      blk.w2 = Mat<S>::Zero(ff, d);
      blk.b2 = Mat<S>::Zero(d, 1);
      blk.ln1_gain = Mat<S>::Zero(d, 1);
      blk.ln1_bias = Mat<S>::Zero(d, 1);
      blk.ln2_gain = Mat<S>::Zero(d, 1);
      blk.ln2_bias = Mat<S>::Zero(d, 1);
    }
    p.head_w = Mat<S>::Zero(config.head_input_dim(), config.num_classes);
    p.head_b = Mat<S>::Zero(config.num_classes, 1);
    return p;
  }

  template <typename U>
  Parameters<U> cast() const {
    Parameters<U> out;
    out.tok_emb = tok_emb.template cast<U>();
    out.pos_emb = pos_emb.template cast<U>();
    out.blocks.resize(blocks.size());
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const auto& src = blocks[i];
      auto& dst = out.blocks[i];
      dst.wq = src.wq.template cast<U>();
      dst.wk = src.wk.template cast<U>();
      dst.wv = src.wv.template cast<U>();
      dst.wo = src.wo.template cast<U>();
      dst.bq = src.bq.template cast<U>();
      dst.bk = src.bk.template cast<U>();
      dst.bv = src.bv.template cast<U>();
      dst.bo = src.bo.template cast<U>();
      dst.w1 = src.w1.template cast<U>();
      dst.b1 = src.b1.template cast<U>();
      dst.w2 = src.w2.template cast<U>();
      dst.b2 = src.b2.template cast<U>();
      dst.ln1_gain = src.ln1_gain.template cast<U>();
      dst.ln1_bias = src.ln1_bias.template cast<U>();
      dst.ln2_gain = src.ln2_gain.template cast<U>();
      dst.ln2_bias = src.ln2_bias.template cast<U>();
    }
    out.head_w = head_w.template cast<U>();
    out.head_b = head_b.template cast<U>();
    return out;
  }

 private:
  template <typename Self, typename F>
  static void for_each_impl(Self& self, F& f) {
    f("tok_emb", self.tok_emb);
    f("pos_emb", self.pos_emb);
    for (std::size_t i = 0; i < self.blocks.size(); ++i) {
      auto& blk = self.blocks[i];
      const std::string prefix = "blocks[" + std::to_string(i) + "].";
      f(prefix + "wq", blk.wq);
      f(prefix + "bq", blk.bq);
      f(prefix + "wk", blk.wk);
      f(prefix + "bk", blk.bk);
      f(prefix + "wv", blk.wv);
      f(prefix + "bv", blk.bv);
      f(prefix + "wo", blk.wo);
      f(prefix + "bo", blk.bo);
      f(prefix + "w1", blk.w1);
      f(prefix + "b1", blk.b1);
      f(prefix + "w2", blk.w2);
      f(prefix + "b2", blk.b2);
      f(prefix + "ln1_gain", blk.ln1_gain);
      f(prefix + "ln1_bias", blk.ln1_bias);
      f(prefix + "ln2_gain", blk.ln2_gain);
      f(prefix + "ln2_bias", blk.ln2_bias);
    }
    f("head_w", self.head_w);
    f("head_b", self.head_b);
  }
};

/// Weights ~ Normal(0, 0.02), biases zero, layer-norm gains one.
/// Deterministic for a given (config, seed).
template <typename S>
Parameters<S> init_parameters(const EncoderConfig& config, uint64_t seed) {
  Parameters<S> p = Parameters<S>::zeros(config);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.02);
  const auto fill_normal = [&](Mat<S>& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<S>(normal(rng));
  };
  fill_normal(p.tok_emb);
  fill_normal(p.pos_emb);
  for (auto& blk : p.blocks) {
    fill_normal(blk.wq);
    fill_normal(blk.wk);
    fill_normal(blk.wv);
    fill_normal(blk.wo);
    fill_normal(blk.w1);
    fill_normal(blk.w2);
    blk.ln1_gain.setOnes();
    blk.ln2_gain.setOnes();
  }
  fill_normal(p.head_w);
  return p;
}

template <typename S>
struct HiddenStack {
  /// layers[0] is the embedding output; layers[b] is block b's output.
  std::vector<Mat<S>> layers;
};

template <typename S>
struct ForwardResult {
  Mat<S> logits;  // rows x classes
  HiddenStack<S> hidden;
};

struct DropoutSpec {
  bool train_mode = false;
  uint64_t seed = 0;
};

struct LossOptions {
  double epsilon = 0.0;  // label smoothing
  bool train_mode = false;
  uint64_t dropout_seed = 0;
};

namespace detail {

template <typename S>
S gelu_scalar(S x) {
  return x * S(0.5) * std::erfc(-x * S(M_SQRT1_2));
}

template <typename S>
S gelu_grad_scalar(S x) {
  const S cdf = S(0.5) * std::erfc(-x * S(M_SQRT1_2));
  const S pdf = std::exp(-x * x * S(0.5)) * S(0.3989422804014327);
  return cdf + x * pdf;
}

// Caches every activation the backward pass needs.
template <typename S>
struct BlockCache {
  Mat<S> q, k, v;            // rows x hidden
  std::vector<Mat<S>> attn;  // batch*heads entries, seq x seq (softmaxed)
  Mat<S> attn_concat;        // rows x hidden, heads concatenated, pre-Wo
  Mat<S> ln1_xhat, ln1_inv_std;
  Mat<S> x_mid;              // after first layer norm
  Mat<S> ff_pre;             // rows x ff
  Mat<S> ff_act;             // gelu(ff_pre)
  Mat<S> ln2_xhat, ln2_inv_std;
};

template <typename S>
struct ForwardCache {
  std::vector<BlockCache<S>> blocks;
  Mat<S> head_in;       // post-dropout classifier input
  Mat<S> dropout_mask;  // empty when dropout is off
};

template <typename S>
void layer_norm_forward(const Mat<S>& x, const Mat<S>& gain, const Mat<S>& bias, Mat<S>& y,
                        Mat<S>& xhat, Mat<S>& inv_std) {
  const S eps = S(1e-5);
  Mat<S> mean = x.rowwise().mean();
  Mat<S> centered = x.colwise() - mean.col(0);
  Mat<S> var = centered.array().square().rowwise().mean();
  inv_std = (var.array() + eps).rsqrt();
  xhat = centered.array().colwise() * inv_std.col(0).array();
  y = (xhat.array().rowwise() * gain.col(0).transpose().array()).rowwise() +
      bias.col(0).transpose().array();
}

/// dX for y = gain * xhat + bias; accumulates parameter gradients.
template <typename S>
Mat<S> layer_norm_backward(const Mat<S>& dy, const Mat<S>& xhat, const Mat<S>& inv_std,
                           const Mat<S>& gain, Mat<S>& d_gain, Mat<S>& d_bias) {
  d_gain += (dy.array() * xhat.array()).colwise().sum().transpose().matrix();
  d_bias += dy.colwise().sum().transpose();
  Mat<S> dxhat = dy.array().rowwise() * gain.col(0).transpose().array();
  Mat<S> m1 = dxhat.rowwise().mean();
  Mat<S> m2 = (dxhat.array() * xhat.array()).rowwise().mean();
  Mat<S> dx = ((dxhat.array().colwise() - m1.col(0).array()) -
               (xhat.array().colwise() * m2.col(0).array()))
                  .colwise() *
              inv_std.col(0).array();
  return dx;
}

template <typename S>
void check_batch(const Parameters<S>& params, const EncoderConfig& config,
                 const TokenBatch& batch) {
  if (batch.seq_len > config.max_len) {
    throw Error("sequence length " + std::to_string(batch.seq_len) + " exceeds max_len " +
                std::to_string(config.max_len));
  }
  if (batch.ids.size() != static_cast<std::size_t>(batch.rows()) ||
      batch.mask.size() != batch.ids.size()) {
    throw Error("token batch ids/mask sized inconsistently with batch_size*seq_len");
  }
  for (int32_t id : batch.ids) {
    if (id < 0 || id >= config.vocab_size) {
      throw Error("token id " + std::to_string(id) + " outside vocab of size " +
                  std::to_string(config.vocab_size));
    }
  }
  (void)params;
}

template <typename S>
Mat<S> run_forward(const Parameters<S>& params, const EncoderConfig& config,
                   const TokenBatch& batch, const DropoutSpec& dropout,
                   HiddenStack<S>* hidden_out, ForwardCache<S>* cache) {
  check_batch(params, config, batch);
  const int32_t B = batch.batch_size;
  const int32_t T = batch.seq_len;
  const int32_t N = B * T;
  const int32_t d = config.hidden_dim;
  const int32_t H = config.num_heads;
  const int32_t dh = d / H;
  const S inv_sqrt_dh = S(1) / std::sqrt(S(dh));
  const std::vector<int32_t> depth = config.normalized_depth_set();

  std::vector<Mat<S>> hidden(config.num_blocks + 1);
  hidden[0].resize(N, d);
  for (int32_t n = 0; n < N; ++n) {
    hidden[0].row(n) = params.tok_emb.row(batch.ids[n]) + params.pos_emb.row(n % T);
  }

  if (cache) cache->blocks.resize(config.num_blocks);
  for (int32_t b = 0; b < config.num_blocks; ++b) {
    const BlockParams<S>& blk = params.blocks[b];
    const Mat<S>& x = hidden[b];

    Mat<S> q = x * blk.wq;
    q.rowwise() += blk.bq.col(0).transpose();
    Mat<S> k = x * blk.wk;
    k.rowwise() += blk.bk.col(0).transpose();
    Mat<S> v = x * blk.wv;
    v.rowwise() += blk.bv.col(0).transpose();

    Mat<S> attn_concat(N, d);
    std::vector<Mat<S>> attn_probs(static_cast<std::size_t>(B) * H);
    for (int32_t s = 0; s < B; ++s) {
      const int32_t row0 = s * T;
      for (int32_t h = 0; h < H; ++h) {
        const int32_t col0 = h * dh;
        Mat<S> scores = q.block(row0, col0, T, dh) * k.block(row0, col0, T, dh).transpose();
        scores *= inv_sqrt_dh;
        Mat<S>& probs = attn_probs[static_cast<std::size_t>(s) * H + h];
        probs = Mat<S>::Zero(T, T);
        for (int32_t i = 0; i < T; ++i) {
          S max_score = std::numeric_limits<S>::lowest();
          bool any = false;
          for (int32_t j = 0; j < T; ++j) {
            if (batch.mask[row0 + j]) {
              any = true;
              max_score = std::max(max_score, scores(i, j));
            }
          }
          if (!any) continue;  // fully masked row attends to nothing
          S z = S(0);
          for (int32_t j = 0; j < T; ++j) {
            if (!batch.mask[row0 + j]) continue;
            const S e = std::exp(scores(i, j) - max_score);
            probs(i, j) = e;
            z += e;
          }
          probs.row(i) /= z;
        }
        attn_concat.block(row0, col0, T, dh).noalias() = probs * v.block(row0, col0, T, dh);
      }
    }

    Mat<S> attn_out = attn_concat * blk.wo;
    attn_out.rowwise() += blk.bo.col(0).transpose();

    Mat<S> res1 = x + attn_out;
    Mat<S> x_mid, ln1_xhat, ln1_inv_std;
    layer_norm_forward(res1, blk.ln1_gain, blk.ln1_bias, x_mid, ln1_xhat, ln1_inv_std);

    Mat<S> ff_pre = x_mid * blk.w1;
    ff_pre.rowwise() += blk.b1.col(0).transpose();
    Mat<S> ff_act = ff_pre.unaryExpr([](S e) { return gelu_scalar(e); });
    Mat<S> ff_out = ff_act * blk.w2;
    ff_out.rowwise() += blk.b2.col(0).transpose();

    Mat<S> res2 = x_mid + ff_out;
    Mat<S> ln2_xhat, ln2_inv_std;
    layer_norm_forward(res2, blk.ln2_gain, blk.ln2_bias, hidden[b + 1], ln2_xhat, ln2_inv_std);

    if (cache) {
      BlockCache<S>& bc = cache->blocks[b];
      bc.q = std::move(q);
      bc.k = std::move(k);
      bc.v = std::move(v);
      bc.attn = std::move(attn_probs);
      bc.attn_concat = std::move(attn_concat);
      bc.ln1_xhat = std::move(ln1_xhat);
      bc.ln1_inv_std = std::move(ln1_inv_std);
      bc.x_mid = std::move(x_mid);
      bc.ff_pre = std::move(ff_pre);
      bc.ff_act = std::move(ff_act);
      bc.ln2_xhat = std::move(ln2_xhat);
      bc.ln2_inv_std = std::move(ln2_inv_std);
    }
  }

  Mat<S> head_in(N, config.head_input_dim());
  for (std::size_t j = 0; j < depth.size(); ++j) {
    head_in.middleCols(static_cast<int32_t>(j) * d, d) = hidden[depth[j]];
  }

  Mat<S> dropout_mask;
  if (dropout.train_mode && config.dropout_rate > 0.0f) {
    const double p = config.dropout_rate;
    const S scale = S(1.0 / (1.0 - p));
    dropout_mask.resize(head_in.rows(), head_in.cols());
    std::mt19937_64 rng(dropout.seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (Eigen::Index i = 0; i < dropout_mask.size(); ++i) {
      dropout_mask.data()[i] = uniform(rng) < p ? S(0) : scale;
    }
    head_in.array() *= dropout_mask.array();
  }

  Mat<S> logits = head_in * params.head_w;
  logits.rowwise() += params.head_b.col(0).transpose();

  if (hidden_out) hidden_out->layers = std::move(hidden);
  if (cache) {
    cache->head_in = std::move(head_in);
    cache->dropout_mask = std::move(dropout_mask);
  }
  return logits;
}

/// Smoothed cross-entropy over unmasked rows plus d(loss)/d(logits).
/// Writes dlogits only when requested.
template <typename S>
double loss_and_dlogits(const Mat<S>& logits, const TokenBatch& batch,
                        const std::vector<uint8_t>& labels, double epsilon, int32_t num_classes,
                        Mat<S>* dlogits) {
  if (labels.size() != static_cast<std::size_t>(batch.rows())) {
    throw Error("labels size " + std::to_string(labels.size()) + " != batch rows " +
                std::to_string(batch.rows()));
  }
  int64_t n_active = 0;
  for (uint8_t m : batch.mask) n_active += m;
  if (dlogits) *dlogits = Mat<S>::Zero(logits.rows(), logits.cols());
  if (n_active == 0) return 0.0;

  const double off_target = epsilon / (num_classes - 1);
  double total = 0.0;
  for (int32_t n = 0; n < batch.rows(); ++n) {
    if (!batch.mask[n]) continue;
    const int32_t label = labels[n];
    if (label < 0 || label >= num_classes) {
      throw Error("label " + std::to_string(label) + " outside [0, " +
                  std::to_string(num_classes) + ")");
    }
    const S max_logit = logits.row(n).maxCoeff();
    double z = 0.0;
    for (int32_t c = 0; c < num_classes; ++c) {
      z += std::exp(static_cast<double>(logits(n, c) - max_logit));
    }
    const double lse = static_cast<double>(max_logit) + std::log(z);
    for (int32_t c = 0; c < num_classes; ++c) {
      const double target = (c == label) ? 1.0 - epsilon : off_target;
      const double log_prob = static_cast<double>(logits(n, c)) - lse;
      total -= target * log_prob;
      if (dlogits) {
        const double prob = std::exp(log_prob);
        (*dlogits)(n, c) = static_cast<S>((prob - target) / static_cast<double>(n_active));
      }
    }
  }
  return total / static_cast<double>(n_active);
}

}  // namespace detail

template <typename S>
ForwardResult<S> forward(const Parameters<S>& params, const EncoderConfig& config,
                         const TokenBatch& batch, const DropoutSpec& dropout = {}) {
  ForwardResult<S> result;
  result.logits = detail::run_forward(params, config, batch, dropout, &result.hidden,
                                      static_cast<detail::ForwardCache<S>*>(nullptr));
  return result;
}

/// Argmax per unmasked token, eval mode; ties break toward the lowest
/// class index (non-toxic for the binary task). One vector per sequence,
/// masked positions excluded.
template <typename S>
std::vector<std::vector<uint8_t>> predict_labels(const Parameters<S>& params,
                                                 const EncoderConfig& config,
                                                 const TokenBatch& batch) {
  Mat<S> logits =
      detail::run_forward(params, config, batch, DropoutSpec{},
                          static_cast<HiddenStack<S>*>(nullptr),
                          static_cast<detail::ForwardCache<S>*>(nullptr));
  std::vector<std::vector<uint8_t>> out(batch.batch_size);
  for (int32_t b = 0; b < batch.batch_size; ++b) {
    for (int32_t t = 0; t < batch.seq_len; ++t) {
      const int32_t n = b * batch.seq_len + t;
      if (!batch.mask[n]) continue;
      int32_t best = 0;
      for (int32_t c = 1; c < config.num_classes; ++c) {
        if (logits(n, c) > logits(n, best)) best = c;
      }
      out[b].push_back(static_cast<uint8_t>(best));
    }
  }
  return out;
}

/// Loss of forward + smoothed cross-entropy, without gradients. Used by
/// the finite-difference tests and epoch reporting.
template <typename S>
double compute_loss(const Parameters<S>& params, const EncoderConfig& config,
                    const TokenBatch& batch, const std::vector<uint8_t>& labels,
                    const LossOptions& options) {
  Mat<S> logits =
      detail::run_forward(params, config, batch,
                          DropoutSpec{options.train_mode, options.dropout_seed},
                          static_cast<HiddenStack<S>*>(nullptr),
                          static_cast<detail::ForwardCache<S>*>(nullptr));
  return detail::loss_and_dlogits(logits, batch, labels, options.epsilon, config.num_classes,
                                  static_cast<Mat<S>*>(nullptr));
}

template <typename S>
struct BackwardResult {
  double loss = 0.0;
  Parameters<S> grads;
};

/// Exact reverse-mode gradients of the smoothed cross-entropy loss with
/// respect to every parameter. Padding positions contribute nothing.
template <typename S>
BackwardResult<S> backward(const Parameters<S>& params, const EncoderConfig& config,
                           const TokenBatch& batch, const std::vector<uint8_t>& labels,
                           const LossOptions& options) {
  const int32_t B = batch.batch_size;
  const int32_t T = batch.seq_len;
  const int32_t d = config.hidden_dim;
  const int32_t H = config.num_heads;
  const int32_t dh = H > 0 ? d / H : 0;
  const S inv_sqrt_dh = S(1) / std::sqrt(S(dh));
  const std::vector<int32_t> depth = config.normalized_depth_set();

  HiddenStack<S> hidden;
  detail::ForwardCache<S> cache;
  Mat<S> logits = detail::run_forward(params, config, batch,
                                      DropoutSpec{options.train_mode, options.dropout_seed},
                                      &hidden, &cache);

  BackwardResult<S> result;
  result.grads = Parameters<S>::zeros(config);
  Mat<S> dlogits;
  result.loss = detail::loss_and_dlogits(logits, batch, labels, options.epsilon,
                                         config.num_classes, &dlogits);

  // Head.
  result.grads.head_w.noalias() = cache.head_in.transpose() * dlogits;
  result.grads.head_b = dlogits.colwise().sum().transpose();
  Mat<S> d_head_in = dlogits * params.head_w.transpose();
  if (cache.dropout_mask.size() > 0) d_head_in.array() *= cache.dropout_mask.array();

  // d(loss)/d(hidden[k]) contributions from the classifier, by depth.
  std::vector<Mat<S>> head_contrib(config.num_blocks + 1);
  for (std::size_t j = 0; j < depth.size(); ++j) {
    head_contrib[depth[j]] = d_head_in.middleCols(static_cast<int32_t>(j) * d, d);
  }

  Mat<S> dx = Mat<S>::Zero(batch.rows(), d);
  for (int32_t b = config.num_blocks - 1; b >= 0; --b) {
    if (head_contrib[b + 1].size() > 0) dx += head_contrib[b + 1];

    const BlockParams<S>& blk = params.blocks[b];
    BlockParams<S>& gblk = result.grads.blocks[b];
    const detail::BlockCache<S>& bc = cache.blocks[b];
    const Mat<S>& x = hidden.layers[b];

    // Second layer norm: hidden[b+1] = LN2(x_mid + ff_out).
    Mat<S> d_res2 =
        detail::layer_norm_backward(dx, bc.ln2_xhat, bc.ln2_inv_std, blk.ln2_gain,
                                    gblk.ln2_gain, gblk.ln2_bias);

    // Feed-forward.
    Mat<S> d_x_mid = d_res2;  // residual branch
    gblk.w2.noalias() = bc.ff_act.transpose() * d_res2;
    gblk.b2 = d_res2.colwise().sum().transpose();
    Mat<S> d_ff_act = d_res2 * blk.w2.transpose();
    Mat<S> d_ff_pre =
        d_ff_act.array() *
        bc.ff_pre.unaryExpr([](S e) { return detail::gelu_grad_scalar(e); }).array();
    gblk.w1.noalias() = bc.x_mid.transpose() * d_ff_pre;
    gblk.b1 = d_ff_pre.colwise().sum().transpose();
    d_x_mid.noalias() += d_ff_pre * blk.w1.transpose();

    // First layer norm: x_mid = LN1(x + attn_out).
    Mat<S> d_res1 =
        detail::layer_norm_backward(d_x_mid, bc.ln1_xhat, bc.ln1_inv_std, blk.ln1_gain,
                                    gblk.ln1_gain, gblk.ln1_bias);

    Mat<S> d_x_in = d_res1;  // residual branch
    gblk.wo.noalias() = bc.attn_concat.transpose() * d_res1;
    gblk.bo = d_res1.colwise().sum().transpose();
    Mat<S> d_attn_concat = d_res1 * blk.wo.transpose();

    // Attention, per sequence and head.
    Mat<S> dq = Mat<S>::Zero(batch.rows(), d);
    Mat<S> dk = Mat<S>::Zero(batch.rows(), d);
    Mat<S> dv = Mat<S>::Zero(batch.rows(), d);
    for (int32_t s = 0; s < B; ++s) {
      const int32_t row0 = s * T;
      for (int32_t h = 0; h < H; ++h) {
        const int32_t col0 = h * dh;
        const Mat<S>& probs = bc.attn[static_cast<std::size_t>(s) * H + h];
        const auto d_ah = d_attn_concat.block(row0, col0, T, dh);
        const auto vh = bc.v.block(row0, col0, T, dh);
        Mat<S> d_probs = d_ah * vh.transpose();
        dv.block(row0, col0, T, dh).noalias() += probs.transpose() * d_ah;
        Mat<S> d_scores(T, T);
        for (int32_t i = 0; i < T; ++i) {
          const S row_dot = (d_probs.row(i).array() * probs.row(i).array()).sum();
          d_scores.row(i) =
              probs.row(i).array() * (d_probs.row(i).array() - row_dot);
        }
        d_scores *= inv_sqrt_dh;
        dq.block(row0, col0, T, dh).noalias() += d_scores * bc.k.block(row0, col0, T, dh);
        dk.block(row0, col0, T, dh).noalias() +=
            d_scores.transpose() * bc.q.block(row0, col0, T, dh);
      }
    }

    gblk.wq.noalias() = x.transpose() * dq;
    gblk.bq = dq.colwise().sum().transpose();
    gblk.wk.noalias() = x.transpose() * dk;
    gblk.bk = dk.colwise().sum().transpose();
    gblk.wv.noalias() = x.transpose() * dv;
    gblk.bv = dv.colwise().sum().transpose();
    d_x_in.noalias() += dq * blk.wq.transpose();
    d_x_in.noalias() += dk * blk.wk.transpose();
    d_x_in.noalias() += dv * blk.wv.transpose();

    dx = std::move(d_x_in);
  }
  if (head_contrib[0].size() > 0) dx += head_contrib[0];

  // Embeddings.
  for (int32_t n = 0; n < batch.rows(); ++n) {
    result.grads.tok_emb.row(batch.ids[n]) += dx.row(n);
    result.grads.pos_emb.row(n % T) += dx.row(n);
  }
  return result;
}

}  // namespace toxspan
