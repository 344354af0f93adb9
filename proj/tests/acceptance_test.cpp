// Acceptance suite: ten end-to-end behavioral criteria, each printed as
// one [PASS]/[FAIL] line with its wall-clock time and checked against a
// runtime budget. The process exits with the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "testutil.hpp"
#include "toxspan/clean.hpp"
#include "toxspan/encoder.hpp"
#include "toxspan/ensemble.hpp"
#include "toxspan/inference.hpp"
#include "toxspan/labeling.hpp"
#include "toxspan/metrics.hpp"
#include "toxspan/pipeline.hpp"
#include "toxspan/training.hpp"

using namespace toxspan;
using testutil::make_planted_corpus;
using testutil::offs;
using testutil::offs_range;
using testutil::read_file;
using testutil::TempDir;

namespace {

struct CriterionFailure {
  std::string reason;
};

void check(bool ok, const std::string& reason) {
  if (!ok) throw CriterionFailure{reason};
}

std::vector<std::string> g_info;  // extra lines printed under a criterion

void info(const std::string& line) { g_info.push_back(line); }

// ---------------------------------------------------------------- helpers

std::u32string random_text(std::mt19937_64& rng, int32_t max_len) {
  static const std::u32string pool =
      U"abcdefghijkXYZ0123  \t.,!?-_éß中ア\n";
  const int32_t len = static_cast<int32_t>(rng() % static_cast<uint64_t>(max_len + 1));
  std::u32string text;
  for (int32_t i = 0; i < len; ++i) text += pool[rng() % pool.size()];
  return text;
}

OffsetSet random_offsets(std::mt19937_64& rng, int32_t universe, uint32_t denom) {
  std::vector<int32_t> v;
  for (int32_t i = 0; i < universe; ++i) {
    if (rng() % denom == 0) v.push_back(i);
  }
  return OffsetSet::from_unsorted(std::move(v));
}

// ------------------------------------------------------------- criteria

// Documented cleaning behavior on "You are an idiot" plus fuzzed
// invariants: surviving runs are word-aligned, never start or end on
// whitespace, never have length 1, and cleaning is idempotent.
void criterion_cleaning() {
  const std::u32string text = testutil::u32("You are an idiot");
  check(clean_offsets(text, offs_range(10, 15)).first == offs_range(11, 15),
        "boundary whitespace was not trimmed to {11..15}");
  check(clean_offsets(text, offs({4})).first == OffsetSet{},
        "singleton character was not dropped");
  check(clean_offsets(text, offs_range(1, 15)).first == offs_range(0, 15),
        "partial word was not expanded to {0..15}");

  std::mt19937_64 rng(20210705);
  for (int iter = 0; iter < 10000; ++iter) {
    const std::u32string t = random_text(rng, 60);
    const OffsetSet input = random_offsets(rng, static_cast<int32_t>(t.size()), 3);
    const OffsetSet cleaned = clean_offsets(t, input).first;
    const auto runs = offsets_to_spans(cleaned);
    for (const Span& run : runs) {
      check(run.length() >= 2, "cleaned output contains a singleton run");
      check(!uni::is_whitespace(t[run.start]) && !uni::is_whitespace(t[run.end]),
            "cleaned run starts or ends on whitespace");
      check(run.start == 0 || !uni::is_word_char(t[run.start - 1]),
            "cleaned run starts mid-word");
      check(run.end == static_cast<int32_t>(t.size()) - 1 ||
                !uni::is_word_char(t[run.end + 1]),
            "cleaned run ends mid-word");
    }
    check(clean_offsets(t, cleaned).first == cleaned, "cleaning is not idempotent");
  }
}

// comment_f1 against an independent brute-force scorer on 10,000 random
// pairs, and against hand-computed values covering the empty-set
// conventions.
void criterion_metric() {
  struct Case {
    OffsetSet gold, pred;
    double expected;
  };
  const std::vector<Case> cases = {
      {offs({}), offs({}), 1.0},
      {offs({}), offs({0}), 0.0},
      {offs({0}), offs({}), 0.0},
      {offs({3, 4, 5}), offs({3, 4, 5}), 1.0},
      {offs({0, 1}), offs({5, 6}), 0.0},
      {offs_range(0, 9), offs_range(0, 4), 0.66666666666666663},
      {offs_range(0, 4), offs_range(0, 9), 0.66666666666666663},
      {offs({0, 1, 2}), offs({2, 3}), 0.40000000000000002},
      {offs({5}), offs({5}), 1.0},
      {offs_range(10, 19), offs({12, 13}), 0.33333333333333331},
      {offs({0, 2, 4}), offs({0, 1, 2}), 0.66666666666666663},
      {offs_range(0, 99), offs_range(50, 149), 0.5},
      {offs({7}), offs({8}), 0.0},
      {offs({1, 2, 3, 4}), offs({2, 3}), 0.66666666666666663},
      {offs({2, 3}), offs({1, 2, 3, 4}), 0.66666666666666663},
      {offs_range(0, 2), offs_range(0, 6), 0.59999999999999998},
      {offs({10, 11, 12, 20, 21}), offs({11, 12, 13, 21}), 0.66666666666666663},
      {offs({0}), offs_range(0, 9), 0.18181818181818182},
      {offs_range(1000, 1009), offs_range(1005, 1014), 0.5},
      {offs({4, 5, 6}), offs({6}), 0.5},
      {offs({42}), offs({41, 42, 43}), 0.5},
      {offs({0, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20, 22, 24, 26, 28, 30, 32, 34, 36, 38, 40, 42,
             44, 46, 48}),
       offs({0, 3, 6, 9, 12, 15, 18, 21, 24, 27, 30, 33, 36, 39, 42, 45, 48}),
       0.42857142857142855},
  };
  for (std::size_t i = 0; i < cases.size(); ++i) {
    check(std::abs(comment_f1(cases[i].gold, cases[i].pred) - cases[i].expected) <= 1e-12,
          "handmade case " + std::to_string(i) + " disagrees with the scorer");
  }

  std::mt19937_64 rng(191);
  for (int iter = 0; iter < 10000; ++iter) {
    const OffsetSet gold = random_offsets(rng, 40, 4);
    const OffsetSet pred = random_offsets(rng, 40, 4);
    check(std::abs(comment_f1(gold, pred) - brute_force_f1(gold, pred)) <= 1e-12,
          "random pair " + std::to_string(iter) + ": the two F1 routes disagree");
  }
}

// Full-sweep gradient check: every coordinate of every tensor, central
// finite differences at step 1e-5, double precision, three seeds.
void criterion_gradients() {
  EncoderConfig cfg;
  cfg.vocab_size = 50;
  cfg.hidden_dim = 16;
  cfg.num_blocks = 3;
  cfg.num_heads = 2;
  cfg.max_len = 12;
  cfg.depth_set = {1, 2, 3};
  cfg.dropout_rate = 0.0f;

  std::mt19937_64 rng(4242);
  std::vector<int32_t> full(12), part(7);
  for (auto& id : full) id = 1 + static_cast<int32_t>(rng() % 49);
  for (auto& id : part) id = 1 + static_cast<int32_t>(rng() % 49);
  const TokenBatch batch = TokenBatch::pack({full, part}, 0, cfg.max_len);
  std::vector<uint8_t> labels(batch.rows());
  for (auto& l : labels) l = static_cast<uint8_t>(rng() % 2);

  LossOptions opts;
  opts.epsilon = 0.1;
  const double h = 1e-5;
  double worst = 0.0;
  int64_t coords = 0;

  for (uint64_t seed : {101ULL, 102ULL, 103ULL}) {
    Parameters<double> params = init_parameters<double>(cfg, seed);
    const BackwardResult<double> analytic = backward(params, cfg, batch, labels, opts);

    std::vector<Mat<double>*> tensors;
    std::vector<std::string> names;
    params.for_each_tensor([&](const std::string& n, Mat<double>& m) {
      tensors.push_back(&m);
      names.push_back(n);
    });
    std::vector<const Mat<double>*> grads;
    analytic.grads.for_each_tensor(
        [&](const std::string&, const Mat<double>& g) { grads.push_back(&g); });

    for (std::size_t t = 0; t < tensors.size(); ++t) {
      Mat<double>& m = *tensors[t];
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        const double original = m.data()[i];
        m.data()[i] = original + h;
        const double up = compute_loss(params, cfg, batch, labels, opts);
        m.data()[i] = original - h;
        const double down = compute_loss(params, cfg, batch, labels, opts);
        m.data()[i] = original;
        const double numeric = (up - down) / (2 * h);
        const double exact = grads[t]->data()[i];
        const double scale = std::max(std::abs(numeric), std::abs(exact));
        const double err = std::abs(numeric - exact);
        if (scale > 1e-3) worst = std::max(worst, err / scale);
        ++coords;
        check(err <= std::max(1e-7, 1e-4 * scale),
              "seed " + std::to_string(seed) + " " + names[t] + "[" + std::to_string(i) +
                  "]: analytic " + std::to_string(exact) + " vs numeric " +
                  std::to_string(numeric));
      }
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "checked %lld coordinates, worst relative error %.2e",
                static_cast<long long>(coords), worst);
  info(buf);
}

// Classifier input width is |K| * d for every nonempty depth subset of a
// four-block model.
void criterion_head_width() {
  EncoderConfig cfg;
  cfg.vocab_size = 11;
  cfg.hidden_dim = 8;
  cfg.num_blocks = 4;
  cfg.num_heads = 2;
  cfg.max_len = 8;
  cfg.dropout_rate = 0.0f;

  const TokenBatch batch = TokenBatch::pack({{1, 2, 3}}, 0, cfg.max_len);
  int subsets = 0;
  for (int bits = 1; bits < 16; ++bits) {
    std::vector<int32_t> depth;
    for (int b = 0; b < 4; ++b) {
      if (bits & (1 << b)) depth.push_back(b + 1);
    }
    cfg.depth_set = depth;
    cfg.validate();
    const auto width = static_cast<int32_t>(depth.size()) * cfg.hidden_dim;
    check(cfg.head_input_dim() == width,
          "head_input_dim wrong for a depth set of size " + std::to_string(depth.size()));
    const auto params = Parameters<float>::zeros(cfg);
    check(params.head_w.rows() == width, "head weight rows do not match |K|*d");
    const auto result = forward(params, cfg, batch);
    check(result.logits.rows() == 3 && result.logits.cols() == 2,
          "forward output shape wrong");
    ++subsets;
  }
  check(subsets == 15, "expected 15 nonempty subsets");
}

// A small multi-depth model memorizes a 32-sentence planted-lexicon
// corpus: training-set character F1 reaches 0.95 within 200 epochs.
void criterion_overfit() {
  const std::vector<Comment> corpus = make_planted_corpus(32, 20210706);
  const Vocab vocab = Vocab::from_pieces(build_vocab_pieces(corpus, 1));

  EncoderConfig cfg;
  cfg.vocab_size = static_cast<int32_t>(vocab.size());
  cfg.hidden_dim = 32;
  cfg.num_blocks = 3;
  cfg.num_heads = 4;
  cfg.max_len = 32;
  cfg.depth_set = EncoderConfig::last_n_depth_set(3, 3);
  cfg.dropout_rate = 0.0f;

  TrainConfig tc;
  tc.learning_rate = 3e-3;
  tc.epochs = 200;
  tc.batch_size = 8;
  tc.seed = 11;

  const TrainResult result = train(corpus, {}, vocab, cfg, tc);
  char buf[96];
  std::snprintf(buf, sizeof(buf), "best train F1 %.4f at epoch %d", result.best.trial_f1,
                result.best_epoch);
  info(buf);
  check(result.best.trial_f1 >= 0.95,
        std::string("train F1 stalled at ") + std::to_string(result.best.trial_f1));
}

// At epsilon 0 the loss equals plain cross-entropy computed directly from
// the public forward output; epsilon 0.1 two-class targets are [0.9, 0.1].
void criterion_label_smoothing() {
  check(smoothed_targets(0, 2, 0.1) == std::vector<double>{0.9, 0.1},
        "two-class targets at epsilon 0.1 are not [0.9, 0.1]");

  EncoderConfig cfg;
  cfg.vocab_size = 19;
  cfg.hidden_dim = 16;
  cfg.num_blocks = 2;
  cfg.num_heads = 2;
  cfg.max_len = 10;
  cfg.depth_set = {1, 2};
  cfg.dropout_rate = 0.0f;
  const auto params = init_parameters<double>(cfg, 3);
  const TokenBatch batch = TokenBatch::pack({{1, 2, 3, 4, 5, 6}, {7, 8, 9}}, 0, cfg.max_len);
  const std::vector<uint8_t> labels = {0, 1, 1, 0, 0, 1, 1, 0, 1, 0, 0, 0};

  const auto fwd = forward(params, cfg, batch);
  double ce = 0.0;
  int active = 0;
  for (int r = 0; r < batch.rows(); ++r) {
    if (!batch.mask[r]) continue;
    const double a = fwd.logits(r, 0), b = fwd.logits(r, 1);
    const double mx = std::max(a, b);
    ce += mx + std::log(std::exp(a - mx) + std::exp(b - mx)) - fwd.logits(r, labels[r]);
    ++active;
  }
  ce /= active;

  LossOptions opts;
  opts.epsilon = 0.0;
  const double loss = compute_loss(params, cfg, batch, labels, opts);
  check(std::abs(loss - ce) <= 1e-6, "epsilon 0 loss differs from independent cross-entropy by " +
                                         std::to_string(std::abs(loss - ce)));
}

// Majority vote: between intersection and union, order-independent,
// identity for one member, and the documented three-member case.
void criterion_ensemble() {
  const std::vector<OffsetSet> trio = {offs({1, 2}), offs({2, 3}), offs({2, 4})};
  check(majority_vote(trio, VoteConfig::majority(3)) == offs({2}),
        "three-member majority case did not yield {2}");

  std::mt19937_64 rng(55);
  for (int iter = 0; iter < 500; ++iter) {
    const int k = 1 + 2 * static_cast<int>(rng() % 3);  // 1, 3, or 5
    std::vector<OffsetSet> members;
    for (int m = 0; m < k; ++m) members.push_back(random_offsets(rng, 30, 3));
    const VoteConfig vote = VoteConfig::majority(k);
    const OffsetSet merged = majority_vote(members, vote);

    if (k == 1) check(merged == members[0], "single-member vote is not the identity");

    OffsetSet inter = members[0], uni_all = members[0];
    for (const OffsetSet& m : members) {
      std::vector<int32_t> keep;
      for (int32_t o : inter.values()) {
        if (m.contains(o)) keep.push_back(o);
      }
      inter = OffsetSet::from_unsorted(std::move(keep));
      for (int32_t o : m.values()) uni_all.insert(o);
    }
    for (int32_t o : inter.values()) {
      check(merged.contains(o), "vote dropped a unanimous offset");
    }
    for (int32_t o : merged.values()) {
      check(uni_all.contains(o), "vote invented an offset no member proposed");
    }

    std::vector<OffsetSet> shuffled = members;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    check(majority_vote(shuffled, vote) == merged, "vote depends on member order");
  }
}

// Whitespace fill: the hand-indexed two-token case bridges exactly the
// space between them, and fill never adds a non-whitespace character.
void criterion_postprocess() {
  const Vocab vocab = Vocab::from_pieces(
      {"[PAD]", "[UNK]", "could", "you", "please", "kill", "yourself", "?"});
  const std::u32string text = testutil::u32("Could you please kill yourself?");
  LabeledSequence seq;
  seq.tokens = tokenize(text, vocab);
  check(seq.tokens.size() == 6, "tokenizer did not produce 6 tokens");
  for (const TokenAlignment& tok : seq.tokens) {
    const bool toxic = (tok.start == 17 && tok.end == 20) || (tok.start == 22 && tok.end == 29);
    seq.labels.push_back(toxic ? 1 : 0);
  }
  const OffsetSet out = labels_to_offsets(text, seq);
  check(out == offs_range(17, 29), "did not produce the contiguous run {17..29}");
  check(out.contains(21), "space between the two tokens missing");

  const Vocab chars = Vocab::from_pieces({"[PAD]", "[UNK]"});
  std::mt19937_64 rng(77);
  for (int iter = 0; iter < 10000; ++iter) {
    const std::u32string t = random_text(rng, 50);
    LabeledSequence fuzz;
    fuzz.tokens = tokenize(t, chars);
    for (std::size_t i = 0; i < fuzz.tokens.size(); ++i) {
      fuzz.labels.push_back(static_cast<uint8_t>(rng() % 2));
    }
    OffsetSet base;
    for (std::size_t i = 0; i < fuzz.tokens.size(); ++i) {
      if (!fuzz.labels[i]) continue;
      for (int32_t o = fuzz.tokens[i].start; o <= fuzz.tokens[i].end; ++o) base.insert(o);
    }
    const OffsetSet filled = labels_to_offsets(t, fuzz);
    for (int32_t o : base.values()) {
      check(filled.contains(o), "fill removed a predicted offset");
    }
    for (int32_t o : filled.values()) {
      if (!base.contains(o)) {
        check(uni::is_whitespace(t[o]), "fill added a non-whitespace character");
      }
    }
  }
}

// Two identical seeded end-to-end runs (clean, build vocabulary, train 3
// epochs, predict, evaluate) produce byte-identical prediction files.
void criterion_determinism() {
  auto run = [](const TempDir& dir) {
    std::vector<Comment> raw = make_planted_corpus(12, 31);
    // Dirty up a few annotations so the cleaning stage has work to do.
    for (std::size_t i = 0; i < raw.size(); i += 3) {
      OffsetSet dirty = raw[i].toxic_offsets;
      if (!dirty.values().empty() && dirty.values().front() > 0) {
        dirty.insert(dirty.values().front() - 1);  // leading space
      }
      raw[i].toxic_offsets = dirty;
    }
    write_tsd_csv_file(dir.file("raw.csv"), raw);

    std::stringstream log;
    cmd_clean({dir.file("raw.csv"), dir.file("clean.csv"), false}, log);
    cmd_build_vocab({dir.file("clean.csv"), dir.file("vocab.txt"), 1}, log);

    TrainArgs targs;
    targs.train_csv = dir.file("clean.csv");
    targs.vocab_path = dir.file("vocab.txt");
    targs.checkpoint_out = dir.file("model.ckpt");
    targs.encoder.hidden_dim = 16;
    targs.encoder.num_blocks = 2;
    targs.encoder.num_heads = 2;
    targs.encoder.max_len = 24;
    targs.encoder.depth_set = {1, 2};
    targs.trainer.epochs = 3;
    targs.trainer.seed = 99;
    cmd_train(targs, log);

    cmd_predict({dir.file("clean.csv"), dir.file("vocab.txt"), dir.file("model.ckpt"),
                 dir.file("preds.tsv"), 4},
                log);
    std::stringstream eval_out;
    cmd_eval({dir.file("clean.csv"), dir.file("preds.tsv")}, eval_out, log);
    return std::pair(read_file(dir.file("preds.tsv")), eval_out.str());
  };

  TempDir a, b;
  const auto first = run(a);
  const auto second = run(b);
  check(!first.first.empty(), "first run produced an empty prediction file");
  check(first.first == second.first, "prediction files differ between identical runs");
  check(first.second == second.second, "evaluation output differs between identical runs");
}

// The depth-selection harness trains one model per last-N depth set and
// reports F1 for every N; informational, passes when all complete.
void criterion_depth_grid() {
  const std::vector<Comment> corpus = make_planted_corpus(16, 63);
  const Vocab vocab = Vocab::from_pieces(build_vocab_pieces(corpus, 1));

  EncoderConfig cfg;
  cfg.vocab_size = static_cast<int32_t>(vocab.size());
  cfg.hidden_dim = 16;
  cfg.num_blocks = 3;
  cfg.num_heads = 2;
  cfg.max_len = 24;
  cfg.dropout_rate = 0.1f;
  TrainConfig tc;
  tc.epochs = 2;
  tc.seed = 8;

  const auto grid = run_depth_grid(corpus, {}, vocab, cfg, tc);
  check(grid.size() == 3, "expected one result per depth setting");
  for (const DepthGridEntry& e : grid) {
    check(std::isfinite(e.trial_f1) && e.trial_f1 >= 0.0 && e.trial_f1 <= 1.0,
          "depth " + std::to_string(e.last_n) + " reported an invalid F1");
    char buf[64];
    std::snprintf(buf, sizeof(buf), "last_n=%d trial_f1=%.4f best_epoch=%d", e.last_n,
                  e.trial_f1, e.best_epoch);
    info(buf);
  }
}

struct Criterion {
  int id;
  std::string label;
  double budget_seconds;
  std::function<void()> body;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "annotation cleaning: documented examples and 10000-case fuzz", 5.0,
       criterion_cleaning},
      {2, "character F1: brute-force agreement and handmade scorer cases", 5.0,
       criterion_metric},
      {3, "gradients: full finite-difference sweep, 3 seeds", 120.0, criterion_gradients},
      {4, "multi-depth head width |K|*d over all 15 depth subsets", 1.0,
       criterion_head_width},
      {5, "overfit: planted corpus reaches train F1 0.95 in 200 epochs", 120.0,
       criterion_overfit},
      {6, "label smoothing: eps 0 equals plain CE; [0.9, 0.1] targets", 5.0,
       criterion_label_smoothing},
      {7, "ensemble: between-ness, order independence, k=1, vote case", 5.0,
       criterion_ensemble},
      {8, "postprocessing: whitespace bridge case and 10000-case fuzz", 5.0,
       criterion_postprocess},
      {9, "determinism: byte-identical predictions across seeded reruns", 60.0,
       criterion_determinism},
      {10, "depth grid: last-N sweep completes and reports F1 per N", 60.0,
       criterion_depth_grid},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    g_info.clear();
    const auto start = std::chrono::steady_clock::now();
    std::string failure;
    try {
      c.body();
    } catch (const CriterionFailure& f) {
      failure = f.reason;
    } catch (const std::exception& e) {
      failure = std::string("unexpected error: ") + e.what();
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (failure.empty() && elapsed > c.budget_seconds) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "exceeded %.0fs budget", c.budget_seconds);
      failure = buf;
    }
    char line[256];
    if (failure.empty()) {
      std::snprintf(line, sizeof(line), "[PASS] %2d %s (%.2fs)", c.id, c.label.c_str(), elapsed);
    } else {
      std::snprintf(line, sizeof(line), "[FAIL] %2d %s (%.2fs): %s", c.id, c.label.c_str(),
                    elapsed, failure.c_str());
      ++failures;
    }
    std::printf("%s\n", line);
    for (const std::string& extra : g_info) std::printf("          %s\n", extra.c_str());
    std::fflush(stdout);
  }

  std::printf("%d/10 criteria passed\n", 10 - failures);
  return failures;
}
