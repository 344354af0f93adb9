#include <catch_amalgamated.hpp>
#include <cstdlib>
#include <sstream>

#include "testutil.hpp"
#include "toxspan/pipeline.hpp"

using namespace toxspan;
using testutil::offs;
using testutil::offs_range;
using testutil::read_file;
using testutil::TempDir;
using testutil::write_file;

namespace {

/// Corpus with one clearly toxic word per toxic row, gold offsets
/// pre-cleaned, small enough to train on in a test.
void write_demo_csv(const std::string& path, int copies) {
  std::vector<Comment> comments;
  const std::vector<std::pair<std::string, std::pair<int32_t, int32_t>>> rows = {
      {"you are an idiot today", {11, 15}},
      {"what a lovely day", {-1, -1}},
      {"such a moron again", {7, 11}},
      {"thanks my friend", {-1, -1}},
      {"a total clown move", {8, 12}},
      {"very kind person", {-1, -1}},
  };
  int32_t id = 0;
  for (int c = 0; c < copies; ++c) {
    for (const auto& [text, span] : rows) {
      Comment comment;
      comment.id = id++;
      comment.text = text;
      if (span.first >= 0) comment.toxic_offsets = testutil::offs_range(span.first, span.second);
      comments.push_back(std::move(comment));
    }
  }
  write_tsd_csv_file(path, comments);
}

struct EnvGuard {
  EnvGuard() { unsetenv("TOXSPAN_SEED"); }
  ~EnvGuard() { unsetenv("TOXSPAN_SEED"); }
};

}  // namespace

TEST_CASE("prediction files round-trip") {
  const std::vector<OffsetSet> preds = {offs({0, 1, 2}), {}, offs({5, 9})};
  std::stringstream s;
  write_predictions(s, preds);
  REQUIRE(s.str() == "0\t[0, 1, 2]\n1\t[]\n2\t[5, 9]\n");
  const auto records = parse_predictions(s);
  REQUIRE(predictions_in_order(records) == preds);
}

TEST_CASE("prediction parsing reports the offending line") {
  std::stringstream missing_tab("0\t[]\njunk\n");
  REQUIRE_THROWS_WITH(parse_predictions(missing_tab, "preds.tsv"),
                      Catch::Matchers::ContainsSubstring("preds.tsv line 2"));

  std::stringstream bad_id("x7\t[]\n");
  REQUIRE_THROWS_WITH(parse_predictions(bad_id), Catch::Matchers::ContainsSubstring("comment id"));

  std::stringstream bad_offsets("0\t[1, b]\n");
  REQUIRE_THROWS_AS(parse_predictions(bad_offsets), Error);

  std::stringstream crlf_blank("0\t[1]\r\n\r\n1\t[]\r\n");
  REQUIRE(parse_predictions(crlf_blank).size() == 2);

  const std::vector<PredictionRecord> out_of_order = {{1, {}}, {0, {}}};
  REQUIRE_THROWS_WITH(predictions_in_order(out_of_order, "p"),
                      Catch::Matchers::ContainsSubstring("expected 0"));
}

TEST_CASE("seed resolution order: flag, environment, config, fallback") {
  EnvGuard guard;
  const nlohmann::json config = {{"seed", 33}};

  REQUIRE(resolve_seed(std::nullopt, nullptr, 7) == 7);
  REQUIRE(resolve_seed(std::nullopt, &config, 7) == 33);
  REQUIRE(resolve_seed(11, &config, 7) == 11);

  setenv("TOXSPAN_SEED", "99", 1);
  REQUIRE(resolve_seed(std::nullopt, &config, 7) == 99);
  REQUIRE(resolve_seed(11, &config, 7) == 11);

  setenv("TOXSPAN_SEED", "12abc", 1);
  REQUIRE_THROWS_WITH(resolve_seed(std::nullopt, nullptr, 7),
                      Catch::Matchers::ContainsSubstring("TOXSPAN_SEED"));
}

TEST_CASE("encoder json overrides only the keys present") {
  EncoderConfig cfg;
  cfg.hidden_dim = 64;
  cfg.num_blocks = 2;
  cfg.num_heads = 2;
  cfg.depth_set = {1, 2};

  apply_encoder_json(nlohmann::json{{"hidden_dim", 32}, {"num_blocks", 6}}, cfg);
  REQUIRE(cfg.hidden_dim == 32);
  REQUIRE(cfg.num_blocks == 6);
  REQUIRE(cfg.num_heads == 2);

  apply_encoder_json(nlohmann::json{{"depth_last_n", 2}}, cfg);
  REQUIRE(cfg.depth_set == std::vector<int32_t>{5, 6});

  apply_encoder_json(nlohmann::json{{"depth_set", {1, 3}}}, cfg);
  REQUIRE(cfg.depth_set == std::vector<int32_t>{1, 3});

  REQUIRE_THROWS_WITH(apply_encoder_json(nlohmann::json{{"hidden_dim", "big"}}, cfg),
                      Catch::Matchers::ContainsSubstring("encoder config"));

  TrainConfig tc;
  apply_train_json(nlohmann::json{{"learning_rate", 0.5}, {"epochs", 2}}, tc);
  REQUIRE(tc.learning_rate == 0.5);
  REQUIRE(tc.epochs == 2);
  REQUIRE(tc.batch_size == 8);
}

TEST_CASE("clean command rewrites the spans column") {
  TempDir dir;
  // "You are an idiot" with gold {10..15}: leading space is trimmed,
  // then nothing else changes; {4} alone is a dropped singleton.
  write_file(dir.file("in.csv"),
             "spans,text\n"
             "\"[10, 11, 12, 13, 14, 15]\",\"You are an idiot\"\n"
             "\"[4]\",\"You are an idiot\"\n");
  std::stringstream log;
  CleanArgs args{dir.file("in.csv"), dir.file("out.csv"), false};
  REQUIRE(cmd_clean(args, log) == 0);

  const auto cleaned = parse_tsd_csv_file(dir.file("out.csv"));
  REQUIRE(cleaned.size() == 2);
  REQUIRE(cleaned[0].toxic_offsets == offs_range(11, 15));
  REQUIRE(cleaned[1].toxic_offsets == OffsetSet{});
  REQUIRE(log.str().find("cleaned 2 comments") != std::string::npos);
  REQUIRE(log.str().find("dropped_singletons=1") != std::string::npos);
}

TEST_CASE("pipeline commands compose end to end") {
  TempDir dir;
  const std::string corpus = dir.file("corpus.csv");
  const std::string vocab_path = dir.file("vocab.txt");
  const std::string ckpt = dir.file("model.ckpt");
  const std::string preds = dir.file("preds.tsv");
  write_demo_csv(corpus, 4);

  std::stringstream log;
  REQUIRE(cmd_build_vocab({corpus, vocab_path, 1}, log) == 0);
  REQUIRE(log.str().find("vocab_size=") != std::string::npos);

  TrainArgs targs;
  targs.train_csv = corpus;
  targs.vocab_path = vocab_path;
  targs.checkpoint_out = ckpt;
  targs.encoder.hidden_dim = 16;
  targs.encoder.num_blocks = 2;
  targs.encoder.num_heads = 2;
  targs.encoder.max_len = 16;
  targs.encoder.depth_set = {1, 2};
  targs.trainer.epochs = 2;
  targs.trainer.seed = 4;
  std::stringstream train_log;
  REQUIRE(cmd_train(targs, train_log) == 0);
  REQUIRE(train_log.str().find("epoch=1 ") != std::string::npos);
  REQUIRE(train_log.str().find("best_epoch=") != std::string::npos);

  std::stringstream predict_log;
  REQUIRE(cmd_predict({corpus, vocab_path, ckpt, preds, 8}, predict_log) == 0);
  const auto records = parse_predictions_file(preds);
  REQUIRE(records.size() == 24);

  std::stringstream eval_out, eval_log;
  REQUIRE(cmd_eval({corpus, preds}, eval_out, eval_log) == 0);
  REQUIRE(eval_out.str().rfind("mean_f1=", 0) == 0);
  REQUIRE(eval_log.str().find("comments=24") != std::string::npos);

  // Gold scored against itself is a perfect 1.0.
  const std::string gold_preds = dir.file("gold.tsv");
  std::vector<OffsetSet> gold;
  for (const Comment& c : parse_tsd_csv_file(corpus)) gold.push_back(c.toxic_offsets);
  write_predictions_file(gold_preds, gold);
  std::stringstream self_out, self_log;
  REQUIRE(cmd_eval({corpus, gold_preds}, self_out, self_log) == 0);
  REQUIRE(self_out.str() == "mean_f1=1.0000\n");
}

TEST_CASE("predict refuses a vocabulary the model was not trained with") {
  TempDir dir;
  const std::string corpus = dir.file("corpus.csv");
  write_demo_csv(corpus, 1);

  std::stringstream log;
  REQUIRE(cmd_build_vocab({corpus, dir.file("vocab.txt"), 1}, log) == 0);

  TrainArgs targs;
  targs.train_csv = corpus;
  targs.vocab_path = dir.file("vocab.txt");
  targs.checkpoint_out = dir.file("model.ckpt");
  targs.encoder.hidden_dim = 8;
  targs.encoder.num_blocks = 1;
  targs.encoder.num_heads = 1;
  targs.encoder.max_len = 16;
  targs.encoder.depth_set = {1};
  targs.trainer.epochs = 1;
  REQUIRE(cmd_train(targs, log) == 0);

  const Vocab other = Vocab::from_pieces({"[PAD]", "[UNK]", "zzz"});
  other.save_file(dir.file("other_vocab.txt"));
  REQUIRE_THROWS_WITH(
      cmd_predict({corpus, dir.file("other_vocab.txt"), dir.file("model.ckpt"),
                   dir.file("p.tsv"), 8},
                  log),
      Catch::Matchers::ContainsSubstring("different vocabulary"));
}

TEST_CASE("ensemble command takes the majority across member files") {
  TempDir dir;
  const std::vector<std::vector<OffsetSet>> members = {
      {offs({1, 2}), offs({7})},
      {offs({2, 3}), offs({7})},
      {offs({2, 4}), {}},
  };
  std::vector<std::string> paths;
  for (std::size_t i = 0; i < members.size(); ++i) {
    paths.push_back(dir.file("m" + std::to_string(i) + ".tsv"));
    write_predictions_file(paths.back(), members[i]);
  }
  std::stringstream log;
  REQUIRE(cmd_ensemble({paths, dir.file("vote.tsv")}, log) == 0);
  REQUIRE(log.str().find("threshold=2") != std::string::npos);

  const auto merged = predictions_in_order(parse_predictions_file(dir.file("vote.tsv")));
  REQUIRE(merged == std::vector<OffsetSet>{offs({2}), offs({7})});

  REQUIRE_THROWS_WITH(cmd_ensemble({{}, dir.file("x.tsv")}, log),
                      Catch::Matchers::ContainsSubstring("at least one"));
}

TEST_CASE("highlight command marks predicted spans") {
  TempDir dir;
  write_file(dir.file("c.csv"),
             "spans,text\n"
             "\"[8, 9, 10, 11, 12, 13]\",\"you are stupid\"\n");
  write_file(dir.file("p.tsv"), "0\t[8, 9, 10, 11, 12, 13]\n");

  std::stringstream term;
  REQUIRE(cmd_highlight({dir.file("c.csv"), dir.file("p.tsv"), false,
                         HighlightMode::kTerminal},
                        term) == 0);
  REQUIRE(term.str().rfind("0\t", 0) == 0);
  REQUIRE(term.str().find("\x1b[31mstupid\x1b[0m") != std::string::npos);

  std::stringstream both;
  REQUIRE(cmd_highlight({dir.file("c.csv"), dir.file("p.tsv"), true,
                         HighlightMode::kTerminal},
                        both) == 0);
  REQUIRE(both.str().find("\x1b[4;31mstupid\x1b[0m") != std::string::npos);

  std::stringstream html;
  REQUIRE(cmd_highlight({dir.file("c.csv"), dir.file("p.tsv"), false, HighlightMode::kHtml},
                        html) == 0);
  REQUIRE(html.str().find("<!DOCTYPE html>") != std::string::npos);
  REQUIRE(html.str().find("<span class=\"pred\">stupid</span>") != std::string::npos);
}

TEST_CASE("highlight escapes html in comment text") {
  const std::u32string text = testutil::u32("a <b> & c");
  const std::string html = highlight_comment(text, offs({0}), nullptr, HighlightMode::kHtml);
  REQUIRE(html.find("&lt;b&gt;") != std::string::npos);
  REQUIRE(html.find("&amp;") != std::string::npos);
  REQUIRE(html.find("<span class=\"pred\">a</span>") != std::string::npos);
}
