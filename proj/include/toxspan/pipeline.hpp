#pragma once

#include <cstdlib>
#include <fstream>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "toxspan/checkpoint.hpp"
#include "toxspan/clean.hpp"
#include "toxspan/corpus.hpp"
#include "toxspan/ensemble.hpp"
#include "toxspan/error.hpp"
#include "toxspan/highlight.hpp"
#include "toxspan/inference.hpp"
#include "toxspan/metrics.hpp"
#include "toxspan/predictions.hpp"
#include "toxspan/tokenizer.hpp"
#include "toxspan/training.hpp"
#include "toxspan/unicode.hpp"

// The CLI subcommands as plain functions, so end-to-end behavior is
// testable without spawning processes. Each takes a filled-in args
// struct; human-readable progress goes to `log` (stderr in the binary),
// machine-readable results to `out` (stdout).

namespace toxspan {

/// Settings may come from (highest to lowest): a command-line flag, the
/// TOXSPAN_SEED environment variable (seed only), a JSON config file,
/// built-in defaults.
inline uint64_t resolve_seed(std::optional<uint64_t> flag_seed, const nlohmann::json* config,
                             uint64_t fallback) {
  if (flag_seed) return *flag_seed;
  if (const char* env = std::getenv("TOXSPAN_SEED")) {
    try {
      std::size_t used = 0;
      const std::string s(env);
      const uint64_t v = std::stoull(s, &used);
      if (used != s.size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw Error(std::string("TOXSPAN_SEED is not a valid unsigned integer: '") + env + "'");
    }
  }
  if (config && config->contains("seed")) return config->at("seed").get<uint64_t>();
  return fallback;
}

inline nlohmann::json load_config_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open config file: " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("config file " + path + " is not valid JSON: " + e.what());
  }
}

/// Applies the keys present in `j` onto `c`, leaving the rest untouched.
/// "depth_last_n" is sugar for the last N block indices.
inline void apply_encoder_json(const nlohmann::json& j, EncoderConfig& c) {
  try {
    if (j.contains("hidden_dim")) j.at("hidden_dim").get_to(c.hidden_dim);
    if (j.contains("num_blocks")) j.at("num_blocks").get_to(c.num_blocks);
    if (j.contains("num_heads")) j.at("num_heads").get_to(c.num_heads);
    if (j.contains("ff_dim")) j.at("ff_dim").get_to(c.ff_dim);
    if (j.contains("max_len")) j.at("max_len").get_to(c.max_len);
    if (j.contains("dropout_rate")) j.at("dropout_rate").get_to(c.dropout_rate);
    if (j.contains("depth_set")) j.at("depth_set").get_to(c.depth_set);
    if (j.contains("depth_last_n")) {
      c.depth_set = EncoderConfig::last_n_depth_set(c.num_blocks, j.at("depth_last_n").get<int32_t>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("bad encoder config: ") + e.what());
  }
}

inline void apply_train_json(const nlohmann::json& j, TrainConfig& c) {
  try {
    if (j.contains("learning_rate")) j.at("learning_rate").get_to(c.learning_rate);
    if (j.contains("label_smoothing")) j.at("label_smoothing").get_to(c.label_smoothing);
    if (j.contains("batch_size")) j.at("batch_size").get_to(c.batch_size);
    if (j.contains("epochs")) j.at("epochs").get_to(c.epochs);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("bad train config: ") + e.what());
  }
}

struct CleanArgs {
  std::string input;
  std::string output;
  bool discard_partial_words = false;
};

inline int cmd_clean(const CleanArgs& args, std::ostream& log) {
  std::vector<Comment> comments = parse_tsd_csv_file(args.input);
  CleanReport total;
  int64_t changed = 0;
  for (Comment& c : comments) {
    const std::u32string text32 = uni::decode_utf8(c.text);
    auto [cleaned, report] = args.discard_partial_words
                                 ? clean_offsets_discard_partial(text32, c.toxic_offsets)
                                 : clean_offsets(text32, c.toxic_offsets);
    if (!(cleaned == c.toxic_offsets)) ++changed;
    c.toxic_offsets = std::move(cleaned);
    total += report;
  }
  write_tsd_csv_file(args.output, comments);
  log << "cleaned " << comments.size() << " comments, " << changed << " changed ("
      << "trimmed_whitespace=" << total.trimmed_whitespace
      << " dropped_singletons=" << total.dropped_singletons
      << " expanded_left=" << total.expanded_left << " expanded_right=" << total.expanded_right
      << ")\n";
  return 0;
}

struct BuildVocabArgs {
  std::string input;
  std::string output;
  int32_t min_count = 2;
};

inline int cmd_build_vocab(const BuildVocabArgs& args, std::ostream& log) {
  const std::vector<Comment> comments = parse_tsd_csv_file(args.input);
  const std::vector<std::string> pieces = build_vocab_pieces(comments, args.min_count);
  const Vocab vocab = Vocab::from_pieces(pieces);
  vocab.save_file(args.output);
  log << "vocab_size=" << vocab.size() << "\n";
  return 0;
}

struct TrainArgs {
  std::string train_csv;
  std::string trial_csv;  // empty: trial F1 is measured on the training set
  std::string vocab_path;
  std::string checkpoint_out;
  EncoderConfig encoder;  // vocab_size is filled in from the vocab file
  TrainConfig trainer;
};

inline int cmd_train(const TrainArgs& args, std::ostream& log) {
  const Vocab vocab = Vocab::load_file(args.vocab_path);
  const std::vector<Comment> train_set = parse_tsd_csv_file(args.train_csv);
  std::vector<Comment> trial_set;
  if (!args.trial_csv.empty()) trial_set = parse_tsd_csv_file(args.trial_csv);

  EncoderConfig config = args.encoder;
  config.vocab_size = vocab.size();
  config.validate();

  const TrainResult result = train(train_set, trial_set, vocab, config, args.trainer, &log);
  save_checkpoint_file(args.checkpoint_out, result.best);
  char line[96];
  std::snprintf(line, sizeof(line), "best_epoch=%d best_trial_f1=%.4f", result.best_epoch,
                result.best.trial_f1);
  log << line << "\n";
  return 0;
}

struct PredictArgs {
  std::string corpus_csv;
  std::string vocab_path;
  std::string checkpoint_path;
  std::string output_tsv;
  int32_t batch_size = 8;
};

inline int cmd_predict(const PredictArgs& args, std::ostream& log) {
  const Vocab vocab = Vocab::load_file(args.vocab_path);
  const Checkpoint ckpt = load_checkpoint_file(args.checkpoint_path);
  if (ckpt.vocab_fingerprint != vocab.fingerprint()) {
    throw Error("checkpoint " + args.checkpoint_path +
                " was trained with a different vocabulary than " + args.vocab_path);
  }
  const std::vector<Comment> comments = parse_tsd_csv_file(args.corpus_csv);
  const std::vector<OffsetSet> preds =
      predict_corpus(ckpt.params, ckpt.config, vocab, comments, args.batch_size);
  write_predictions_file(args.output_tsv, preds);
  log << "predicted " << preds.size() << " comments\n";
  return 0;
}

struct EvalArgs {
  std::string gold_csv;
  std::string pred_tsv;
};

inline int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& log) {
  const std::vector<Comment> comments = parse_tsd_csv_file(args.gold_csv);
  const std::vector<OffsetSet> preds =
      predictions_in_order(parse_predictions_file(args.pred_tsv), args.pred_tsv);
  if (preds.size() != comments.size()) {
    throw Error("prediction count " + std::to_string(preds.size()) + " != corpus size " +
                std::to_string(comments.size()));
  }
  std::vector<OffsetSet> golds;
  golds.reserve(comments.size());
  for (const Comment& c : comments) golds.push_back(c.toxic_offsets);
  const EvalResult result = evaluate_corpus(golds, preds);
  char line[64];
  std::snprintf(line, sizeof(line), "mean_f1=%.4f", result.mean_f1);
  out << line << "\n";
  log << "comments=" << golds.size() << " empty_gold=" << result.empty_gold_count
      << " empty_pred=" << result.empty_pred_count << "\n";
  return 0;
}

struct EnsembleArgs {
  std::vector<std::string> member_tsvs;
  std::string output_tsv;
};

inline int cmd_ensemble(const EnsembleArgs& args, std::ostream& log) {
  if (args.member_tsvs.empty()) throw Error("ensemble needs at least one member file");
  std::vector<std::vector<OffsetSet>> members;
  for (const std::string& path : args.member_tsvs) {
    members.push_back(predictions_in_order(parse_predictions_file(path), path));
  }
  const VoteConfig vote = VoteConfig::majority(static_cast<int32_t>(members.size()));
  const std::vector<OffsetSet> merged = majority_vote_corpus(members, vote);
  write_predictions_file(args.output_tsv, merged);
  log << "ensembled " << members.size() << " members (threshold=" << vote.threshold << ") over "
      << merged.size() << " comments\n";
  return 0;
}

struct HighlightArgs {
  std::string corpus_csv;
  std::string pred_tsv;
  bool show_gold = false;  // underline the corpus spans as well
  HighlightMode mode = HighlightMode::kTerminal;
};

inline int cmd_highlight(const HighlightArgs& args, std::ostream& out) {
  const std::vector<Comment> comments = parse_tsd_csv_file(args.corpus_csv);
  const std::vector<OffsetSet> preds =
      predictions_in_order(parse_predictions_file(args.pred_tsv), args.pred_tsv);
  if (preds.size() != comments.size()) {
    throw Error("prediction count " + std::to_string(preds.size()) + " != corpus size " +
                std::to_string(comments.size()));
  }
  std::vector<OffsetSet> golds;
  if (args.show_gold) {
    for (const Comment& c : comments) golds.push_back(c.toxic_offsets);
  }
  if (args.mode == HighlightMode::kHtml) {
    out << highlight_html_page(comments, preds, golds);
  } else {
    for (std::size_t i = 0; i < comments.size(); ++i) {
      const std::u32string text32 = uni::decode_utf8(comments[i].text);
      const OffsetSet* gold = args.show_gold ? &golds[i] : nullptr;
      out << comments[i].id << '\t'
          << highlight_comment(text32, preds[i], gold, HighlightMode::kTerminal) << '\n';
    }
  }
  return 0;
}

}  // namespace toxspan
