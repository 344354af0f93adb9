#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "toxspan/checkpoint.hpp"
#include "toxspan/corpus.hpp"
#include "toxspan/encoder.hpp"
#include "toxspan/inference.hpp"
#include "toxspan/metrics.hpp"
#include "toxspan/tokenizer.hpp"

// Training loop: label-smoothed cross-entropy, Adam with bias
// correction, shuffled mini-batches, and checkpoint selection by
// character-offset F1 on a held-out trial set after every epoch
// (earliest epoch wins ties). Fully deterministic for a given seed.

namespace toxspan {

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double label_smoothing = 0.1;
  int32_t batch_size = 8;
  int32_t epochs = 8;
  uint64_t seed = 0;

  void validate() const {
    std::vector<std::string> problems;
    if (!(learning_rate > 0.0)) problems.push_back("learning_rate must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) problems.push_back("beta1 must be in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) problems.push_back("beta2 must be in [0, 1)");
    if (!(adam_epsilon > 0.0)) problems.push_back("adam_epsilon must be > 0");
    if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) {
      problems.push_back("label_smoothing must be in [0, 1)");
    }
    if (batch_size < 1) problems.push_back("batch_size must be >= 1");
    if (epochs < 1) problems.push_back("epochs must be >= 1");
    if (!problems.empty()) {
      std::string msg = "invalid train config:";
      for (const std::string& p : problems) msg += "\n  - " + p;
      throw Error(msg);
    }
  }
};

/// Smoothed one-hot distribution: 1-eps on the label, eps/(C-1) elsewhere.
inline std::vector<double> smoothed_targets(int32_t label, int32_t num_classes, double epsilon) {
  if (num_classes < 2) throw Error("num_classes must be >= 2");
  if (label < 0 || label >= num_classes) throw Error("label outside class range");
  std::vector<double> t(num_classes, epsilon / (num_classes - 1));
  t[label] = 1.0 - epsilon;
  return t;
}

/// Deterministic stream splitter for per-(epoch, batch) dropout seeds.
inline uint64_t mix_seed(uint64_t seed, uint64_t a, uint64_t b) {
  uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (a + 1) + 0x85ebca87c2b2ae63ULL * (b + 1);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

/// One Adam update on a single tensor, with bias correction. `step` is
/// 1-based and must be the same for every tensor in a training step.
template <typename S>
void adam_update(Mat<S>& param, Mat<S>& m, Mat<S>& v, const Mat<S>& grad, int64_t step,
                 const TrainConfig& cfg) {
  const double b1 = cfg.beta1;
  const double b2 = cfg.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(step));
  for (Eigen::Index i = 0; i < param.size(); ++i) {
    const double g = static_cast<double>(grad.data()[i]);
    const double mi = b1 * static_cast<double>(m.data()[i]) + (1.0 - b1) * g;
    const double vi = b2 * static_cast<double>(v.data()[i]) + (1.0 - b2) * g * g;
    m.data()[i] = static_cast<S>(mi);
    v.data()[i] = static_cast<S>(vi);
    const double update = cfg.learning_rate * (mi / bc1) / (std::sqrt(vi / bc2) + cfg.adam_epsilon);
    param.data()[i] = static_cast<S>(static_cast<double>(param.data()[i]) - update);
  }
}

template <typename S>
struct AdamState {
  Parameters<S> m;
  Parameters<S> v;
  int64_t step = 0;

  static AdamState zeros(const EncoderConfig& config) {
    AdamState s;
    s.m = Parameters<S>::zeros(config);
    s.v = Parameters<S>::zeros(config);
    return s;
  }
};

namespace detail {

template <typename MatT, typename P>
std::vector<MatT*> tensor_ptrs(P& params) {
  std::vector<MatT*> out;
  params.for_each_tensor([&](const std::string&, MatT& m) { out.push_back(&m); });
  return out;
}

}  // namespace detail

template <typename S>
void adam_step(Parameters<S>& params, const Parameters<S>& grads, AdamState<S>& state,
               const TrainConfig& cfg) {
  ++state.step;
  auto p = detail::tensor_ptrs<Mat<S>>(params);
  auto m = detail::tensor_ptrs<Mat<S>>(state.m);
  auto v = detail::tensor_ptrs<Mat<S>>(state.v);
  auto g = detail::tensor_ptrs<const Mat<S>>(grads);
  for (std::size_t i = 0; i < p.size(); ++i) {
    adam_update(*p[i], *m[i], *v[i], *g[i], state.step, cfg);
  }
}

/// Keeps the best (score, epoch) pair; strictly-greater wins, so the
/// earliest epoch is kept on ties.
struct BestTracker {
  double best_score = -1.0;
  int32_t best_epoch = -1;

  bool observe(int32_t epoch, double score) {
    if (score > best_score) {
      best_score = score;
      best_epoch = epoch;
      return true;
    }
    return false;
  }
};

struct EpochStats {
  double mean_loss = 0.0;
  double trial_f1 = 0.0;
};

struct TrainResult {
  Checkpoint best;
  std::vector<EpochStats> epochs;
  int32_t best_epoch = -1;
};

/// Trains from scratch and returns the checkpoint from the epoch with
/// the highest trial F1. If `trial` is empty the training set doubles as
/// the trial set. Logs one line per epoch to `log` when non-null.
inline TrainResult train(const std::vector<Comment>& train_set,
                         const std::vector<Comment>& trial_set, const Vocab& vocab,
                         const EncoderConfig& config, const TrainConfig& train_cfg,
                         std::ostream* log = nullptr) {
  config.validate();
  train_cfg.validate();
  if (train_set.empty()) throw Error("training corpus is empty");
  if (config.vocab_size != static_cast<int32_t>(vocab.size())) {
    throw Error("config vocab_size " + std::to_string(config.vocab_size) +
                " != vocabulary size " + std::to_string(vocab.size()));
  }
  const std::vector<Comment>& trial = trial_set.empty() ? train_set : trial_set;

  std::vector<EncodedComment> encoded;
  std::vector<std::size_t> usable;
  for (const Comment& c : train_set) {
    encoded.push_back(encode_comment(c, vocab, config.max_len));
    if (!encoded.back().seq.tokens.empty()) usable.push_back(encoded.size() - 1);
  }
  if (usable.empty()) throw Error("training corpus has no tokenizable comments");

  std::vector<OffsetSet> trial_gold;
  for (const Comment& c : trial) trial_gold.push_back(c.toxic_offsets);

  Parameters<float> params = init_parameters<float>(config, train_cfg.seed);
  AdamState<float> adam = AdamState<float>::zeros(config);
  std::mt19937_64 shuffle_rng(mix_seed(train_cfg.seed, 0x51, 0));

  TrainResult result;
  BestTracker tracker;
  for (int32_t epoch = 1; epoch <= train_cfg.epochs; ++epoch) {
    std::vector<std::size_t> order = usable;
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0;
    int64_t token_sum = 0;
    int32_t batch_index = 0;
    for (std::size_t begin = 0; begin < order.size();
         begin += static_cast<std::size_t>(train_cfg.batch_size), ++batch_index) {
      const std::size_t end =
          std::min(order.size(), begin + static_cast<std::size_t>(train_cfg.batch_size));
      std::vector<EncodedComment> chunk;
      std::vector<std::vector<int32_t>> id_seqs;
      for (std::size_t i = begin; i < end; ++i) {
        chunk.push_back(encoded[order[i]]);
        id_seqs.push_back(chunk.back().ids);
      }
      const TokenBatch batch = TokenBatch::pack(id_seqs, vocab.pad_id(), config.max_len);
      const std::vector<uint8_t> labels = pack_labels(chunk, batch);

      LossOptions opts;
      opts.epsilon = train_cfg.label_smoothing;
      opts.train_mode = true;
      opts.dropout_seed = mix_seed(train_cfg.seed, static_cast<uint64_t>(epoch),
                                   static_cast<uint64_t>(batch_index));
      BackwardResult<float> back = backward(params, config, batch, labels, opts);
      adam_step(params, back.grads, adam, train_cfg);

      int64_t active = 0;
      for (uint8_t mask : batch.mask) active += mask;
      loss_sum += back.loss * static_cast<double>(active);
      token_sum += active;
    }
    const double mean_loss = token_sum > 0 ? loss_sum / static_cast<double>(token_sum) : 0.0;

    const std::vector<OffsetSet> trial_pred =
        predict_corpus(params, config, vocab, trial, train_cfg.batch_size);
    const double trial_f1 = evaluate_corpus(trial_gold, trial_pred).mean_f1;
    result.epochs.push_back(EpochStats{mean_loss, trial_f1});
    if (log) {
      char line[128];
      std::snprintf(line, sizeof(line), "epoch=%d mean_loss=%.6f trial_f1=%.4f", epoch, mean_loss,
                    trial_f1);
      (*log) << line << '\n';
    }

    if (tracker.observe(epoch, trial_f1)) {
      result.best.config = config;
      result.best.seed = train_cfg.seed;
      result.best.epoch = epoch;
      result.best.trial_f1 = trial_f1;
      result.best.vocab_fingerprint = vocab.fingerprint();
      result.best.params = params;
    }
  }
  result.best_epoch = tracker.best_epoch;
  return result;
}

struct DepthGridEntry {
  int32_t last_n = 0;
  std::vector<int32_t> depth_set;
  double trial_f1 = 0.0;
  int32_t best_epoch = 0;
};

/// Trains one model per "last N blocks" depth set, N = 1..num_blocks,
/// and reports the trial F1 each one reaches. Same seed throughout so
/// the runs differ only in depth set.
inline std::vector<DepthGridEntry> run_depth_grid(const std::vector<Comment>& train_set,
                                                  const std::vector<Comment>& trial_set,
                                                  const Vocab& vocab, EncoderConfig config,
                                                  const TrainConfig& train_cfg,
                                                  std::ostream* log = nullptr) {
  std::vector<DepthGridEntry> grid;
  for (int32_t n = 1; n <= config.num_blocks; ++n) {
    config.depth_set = EncoderConfig::last_n_depth_set(config.num_blocks, n);
    const TrainResult r = train(train_set, trial_set, vocab, config, train_cfg, nullptr);
    DepthGridEntry entry{n, config.depth_set, r.best.trial_f1, r.best.epoch};
    grid.push_back(entry);
    if (log) {
      char line[128];
      std::snprintf(line, sizeof(line), "depth_last_n=%d trial_f1=%.4f best_epoch=%d", n,
                    entry.trial_f1, entry.best_epoch);
      (*log) << line << '\n';
    }
  }
  return grid;
}

}  // namespace toxspan
