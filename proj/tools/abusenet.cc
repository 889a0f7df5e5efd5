// Command-line front end: prepare, train, predict, evaluate and
// inspect-embeddings.

#include <iostream>

#include <CLI11.hpp>

#include "abusenet/commands.h"

int main(int argc, char** argv) {
  using namespace abusenet;

  CLI::App app{"Gendered-abuse detection toolkit (CNN-BiLSTM)"};
  app.require_subcommand(1);

  PrepareOptions prep;
  auto* prepare = app.add_subcommand("prepare", "Build a labeled dataset and an 80/20 split");
  prepare->add_option("--input", prep.input, "Multi-annotator CSV")->required()->check(CLI::ExistingFile);
  prepare->add_option("--language", prep.language, "en, hi or ta")->required();
  prepare->add_option("--task", prep.task, "1, 2 or 3")->required();
  prepare->add_option("--external", prep.external, "Extra corpus as SOURCE:PATH (macd, multilate); task 2");
  prepare->add_option("--out", prep.out, "Output directory")->required();
  prepare->add_option("--seed", prep.seed, "Split seed")->capture_default_str();
  prepare->add_option("--ratio", prep.ratio, "Training fraction")->capture_default_str();
  prepare->add_flag("--stratified", prep.stratified, "Stratify the split by label");

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Cross-validate and save fold checkpoints");
  train_cmd->add_option("--config", train.config, "Run config JSON")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out-dir", train.out_dir, "Run directory (overrides output_dir)");
  train_cmd->add_option("--prepared", train.prepared, "Directory written by prepare (overrides data.prepared)");
  train_cmd->add_option("--seed", train.seed, "Seed for model init, folds and shuffling");
  train_cmd->add_option("--threads", train.threads,
                        "Folds trained in parallel (default: ABUSE_DETECT_THREADS or 1)");
  train_cmd->add_flag("--quiet", train.quiet, "No per-epoch progress");

  PredictOptions pred;
  auto* predict = app.add_subcommand("predict", "Label a CSV of id,text with the fold ensemble");
  predict->add_option("--run-dir", pred.run_dir, "Directory written by train")->required();
  predict->add_option("--input", pred.input, "CSV with id and text columns")->required()->check(CLI::ExistingFile);
  predict->add_option("--out", pred.out, "Submission CSV (default stdout)");

  EvaluateOptions eval;
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against gold labels");
  evaluate->add_option("--gold", eval.gold, "Gold CSV")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--pred", eval.pred, "Prediction CSV")->required()->check(CLI::ExistingFile);

  InspectOptions insp;
  auto* inspect = app.add_subcommand("inspect-embeddings", "Summarize a word-vector file");
  inspect->add_option("--file", insp.file, "Word-vector text file")->required()->check(CLI::ExistingFile);
  inspect->add_option("--vocab", insp.vocab, "Vocabulary file, one token per line")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (*prepare) return cmd_prepare(prep, std::cout, std::cerr);
  if (*train_cmd) return cmd_train(train, std::cout, std::cerr);
  if (*predict) return cmd_predict(pred, std::cout, std::cerr);
  if (*evaluate) return cmd_evaluate(eval, std::cout, std::cerr);
  if (*inspect) return cmd_inspect_embeddings(insp, std::cout, std::cerr);
  return kExitUsage;
}
