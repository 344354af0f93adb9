// Command-line front end. Subcommands mirror the pipeline stages:
//
//   toxspan clean        rewrite noisy span annotations
//   toxspan build-vocab  build a wordpiece vocabulary from a corpus
//   toxspan train        train a token classifier, keep the best epoch
//   toxspan predict      write predicted offsets for a corpus
//   toxspan eval         score predictions against gold annotations
//   toxspan ensemble     majority-vote several prediction files
//   toxspan highlight    render predictions as marked-up text
//
// Settings resolve as: command-line flag, then TOXSPAN_SEED (seed only),
// then --config JSON, then built-in defaults.

#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "toxspan/pipeline.hpp"

namespace {

struct TrainCli {
  toxspan::TrainArgs args;
  std::string config_path;
  std::vector<int32_t> depth_set;
  int32_t depth_last_n = 0;
  uint64_t seed = 0;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"toxspan: character-level toxic span tagging"};
  app.require_subcommand(1);

  toxspan::CleanArgs clean_args;
  CLI::App* clean = app.add_subcommand("clean", "Rewrite noisy span annotations");
  clean->add_option("-i,--input", clean_args.input, "Corpus CSV (spans,text)")->required();
  clean->add_option("-o,--output", clean_args.output, "Cleaned corpus CSV")->required();
  clean->add_flag("--discard-partial-words", clean_args.discard_partial_words,
                  "Drop partially-annotated words instead of expanding them");

  toxspan::BuildVocabArgs vocab_args;
  CLI::App* build_vocab = app.add_subcommand("build-vocab", "Build a wordpiece vocabulary");
  build_vocab->add_option("-i,--input", vocab_args.input, "Corpus CSV")->required();
  build_vocab->add_option("-o,--output", vocab_args.output, "Vocabulary file, one piece per line")
      ->required();
  build_vocab->add_option("--min-count", vocab_args.min_count,
                          "Keep whole words seen at least this often");

  TrainCli train_cli;
  CLI::App* train = app.add_subcommand("train", "Train a token classifier");
  train->add_option("--train", train_cli.args.train_csv, "Training corpus CSV")->required();
  train->add_option("--trial", train_cli.args.trial_csv,
                    "Held-out corpus for checkpoint selection");
  train->add_option("--vocab", train_cli.args.vocab_path, "Vocabulary file")->required();
  train->add_option("-o,--output", train_cli.args.checkpoint_out, "Checkpoint path")->required();
  train->add_option("--config", train_cli.config_path, "JSON config file");
  auto* opt_hidden = train->add_option("--hidden-dim", train_cli.args.encoder.hidden_dim);
  auto* opt_blocks = train->add_option("--blocks", train_cli.args.encoder.num_blocks);
  auto* opt_heads = train->add_option("--heads", train_cli.args.encoder.num_heads);
  auto* opt_ff = train->add_option("--ff-dim", train_cli.args.encoder.ff_dim);
  auto* opt_max_len = train->add_option("--max-len", train_cli.args.encoder.max_len);
  auto* opt_dropout = train->add_option("--dropout", train_cli.args.encoder.dropout_rate);
  auto* opt_depth = train->add_option("--depth-set", train_cli.depth_set,
                                      "Block outputs fed to the classifier, e.g. 1,2,3")
                        ->delimiter(',');
  auto* opt_last_n =
      train->add_option("--depth-last-n", train_cli.depth_last_n, "Use the last N block outputs");
  opt_depth->excludes(opt_last_n);
  auto* opt_lr = train->add_option("--lr", train_cli.args.trainer.learning_rate);
  auto* opt_smooth =
      train->add_option("--label-smoothing", train_cli.args.trainer.label_smoothing);
  auto* opt_batch = train->add_option("--batch-size", train_cli.args.trainer.batch_size);
  auto* opt_epochs = train->add_option("--epochs", train_cli.args.trainer.epochs);
  auto* opt_seed = train->add_option("--seed", train_cli.seed, "Random seed");

  toxspan::PredictArgs predict_args;
  CLI::App* predict = app.add_subcommand("predict", "Write predicted offsets for a corpus");
  predict->add_option("-i,--input", predict_args.corpus_csv, "Corpus CSV")->required();
  predict->add_option("--vocab", predict_args.vocab_path, "Vocabulary file")->required();
  predict->add_option("--checkpoint", predict_args.checkpoint_path, "Trained checkpoint")
      ->required();
  predict->add_option("-o,--output", predict_args.output_tsv, "Predictions TSV")->required();
  predict->add_option("--batch-size", predict_args.batch_size);

  toxspan::EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "Score predictions against gold annotations");
  eval->add_option("--gold", eval_args.gold_csv, "Gold corpus CSV")->required();
  eval->add_option("--pred", eval_args.pred_tsv, "Predictions TSV")->required();

  toxspan::EnsembleArgs ensemble_args;
  CLI::App* ensemble = app.add_subcommand("ensemble", "Majority-vote several prediction files");
  ensemble->add_option("members", ensemble_args.member_tsvs, "Member prediction TSVs")
      ->required()
      ->expected(-1);
  ensemble->add_option("-o,--output", ensemble_args.output_tsv, "Merged predictions TSV")
      ->required();

  toxspan::HighlightArgs highlight_args;
  bool highlight_html = false;
  CLI::App* highlight = app.add_subcommand("highlight", "Render predictions as marked-up text");
  highlight->add_option("-i,--input", highlight_args.corpus_csv, "Corpus CSV")->required();
  highlight->add_option("--pred", highlight_args.pred_tsv, "Predictions TSV")->required();
  highlight->add_flag("--show-gold", highlight_args.show_gold,
                      "Underline the corpus annotations as well");
  highlight->add_flag("--html", highlight_html, "Emit an HTML page instead of terminal codes");

  CLI11_PARSE(app, argc, argv);

  try {
    if (clean->parsed()) return toxspan::cmd_clean(clean_args, std::cerr);
    if (build_vocab->parsed()) return toxspan::cmd_build_vocab(vocab_args, std::cerr);
    if (train->parsed()) {
      // Defaults, then config file, then explicit flags.
      toxspan::EncoderConfig enc;
      enc.hidden_dim = 64;
      enc.num_blocks = 2;
      enc.num_heads = 2;
      toxspan::TrainConfig trainer;
      nlohmann::json config;
      if (!train_cli.config_path.empty()) {
        config = toxspan::load_config_json(train_cli.config_path);
        if (config.contains("encoder")) toxspan::apply_encoder_json(config.at("encoder"), enc);
        if (config.contains("trainer")) toxspan::apply_train_json(config.at("trainer"), trainer);
      }
      if (opt_hidden->count()) enc.hidden_dim = train_cli.args.encoder.hidden_dim;
      if (opt_blocks->count()) enc.num_blocks = train_cli.args.encoder.num_blocks;
      if (opt_heads->count()) enc.num_heads = train_cli.args.encoder.num_heads;
      if (opt_ff->count()) enc.ff_dim = train_cli.args.encoder.ff_dim;
      if (opt_max_len->count()) enc.max_len = train_cli.args.encoder.max_len;
      if (opt_dropout->count()) enc.dropout_rate = train_cli.args.encoder.dropout_rate;
      if (opt_depth->count()) {
        enc.depth_set = train_cli.depth_set;
      } else if (opt_last_n->count()) {
        enc.depth_set = toxspan::EncoderConfig::last_n_depth_set(enc.num_blocks,
                                                                 train_cli.depth_last_n);
      } else if (enc.depth_set.empty()) {
        enc.depth_set = toxspan::EncoderConfig::last_n_depth_set(enc.num_blocks, enc.num_blocks);
      }
      if (opt_lr->count()) trainer.learning_rate = train_cli.args.trainer.learning_rate;
      if (opt_smooth->count()) trainer.label_smoothing = train_cli.args.trainer.label_smoothing;
      if (opt_batch->count()) trainer.batch_size = train_cli.args.trainer.batch_size;
      if (opt_epochs->count()) trainer.epochs = train_cli.args.trainer.epochs;
      std::optional<uint64_t> flag_seed;
      if (opt_seed->count()) flag_seed = train_cli.seed;
      trainer.seed = toxspan::resolve_seed(flag_seed, &config, 0);

      toxspan::TrainArgs args = train_cli.args;
      args.encoder = enc;
      args.trainer = trainer;
      return toxspan::cmd_train(args, std::cerr);
    }
    if (predict->parsed()) return toxspan::cmd_predict(predict_args, std::cerr);
    if (eval->parsed()) return toxspan::cmd_eval(eval_args, std::cout, std::cerr);
    if (ensemble->parsed()) return toxspan::cmd_ensemble(ensemble_args, std::cerr);
    if (highlight->parsed()) {
      highlight_args.mode =
          highlight_html ? toxspan::HighlightMode::kHtml : toxspan::HighlightMode::kTerminal;
      return toxspan::cmd_highlight(highlight_args, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
