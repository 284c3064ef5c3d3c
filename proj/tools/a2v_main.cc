#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "a2v/runner.h"

int main(int argc, char** argv) {
  CLI::App app{"animal2vec-style bioacoustic pretrain/finetune/evaluate toolkit"};
  app.require_subcommand(1);

  a2v::RunOptions options;
  std::string mode;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", options.config_path, "config file (key = value)")
        ->required();
    cmd->add_option("--out", options.out_dir, "output directory")->required();
    cmd->add_option("--seed", options.seed, "run seed");
  };

  auto* pretrain = app.add_subcommand("pretrain", "mean-teacher self-distillation");
  add_common(pretrain);
  pretrain->add_option("--resume", options.resume, "resume from a checkpoint");

  auto* finetune = app.add_subcommand("finetune", "supervised finetuning");
  add_common(finetune);
  finetune->add_option("--checkpoint", options.checkpoint,
                       "pretrained checkpoint (omit for random init)");
  finetune->add_option("--resume", options.resume, "resume from a checkpoint");
  finetune->add_option("--labels-fraction", options.labels_fraction,
                       "stratified few-shot label fraction in (0,1]");
  finetune->add_option("--fold", options.fold, "held-out fold index");

  auto* evaluate = app.add_subcommand("evaluate", "per-event metrics");
  add_common(evaluate);
  evaluate->add_option("--checkpoint", options.checkpoint, "finetuned checkpoint")
      ->required();
  evaluate->add_option("--fold", options.fold, "held-out fold index");
  evaluate->add_option("--manifest", options.manifest_override,
                       "evaluate on this manifest instead of the fold split");

  auto* mask_stats = app.add_subcommand("mask-stats", "empirical masking statistics");
  add_common(mask_stats);

  auto* cfr = app.add_subcommand("cfr", "cumulative frequency response export");
  add_common(cfr);
  cfr->add_option("--checkpoint", options.checkpoint,
                  "checkpoint (omit for the Mel-initialized bank)");

  auto* attention = app.add_subcommand("attention", "attention map export");
  add_common(attention);
  attention->add_option("--checkpoint", options.checkpoint, "checkpoint")->required();
  attention->add_option("--wav", options.wav, "input clip")->required();

  auto* synth = app.add_subcommand("synth", "generate the synthetic corpus");
  add_common(synth);

  CLI11_PARSE(app, argc, argv);

  try {
    if (pretrain->parsed()) return a2v::run_pretrain(options);
    if (finetune->parsed()) return a2v::run_finetune(options);
    if (evaluate->parsed()) return a2v::run_evaluate(options);
    if (mask_stats->parsed()) return a2v::run_mask_stats(options);
    if (cfr->parsed()) return a2v::run_cfr(options);
    if (attention->parsed()) return a2v::run_attention(options);
    if (synth->parsed()) return a2v::run_synth(options);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
