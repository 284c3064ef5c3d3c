#include "a2v/runner.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include <array>

#include <json.hpp>

#include "a2v/checkpoint.h"
#include "a2v/error.h"
#include "a2v/evaluate.h"
#include "a2v/resample.h"
#include "a2v/split.h"
#include "a2v/synthdata.h"
#include "a2v/wav.h"

namespace a2v {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string format_double(double x) {
  char buf[64];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, x);
    if (std::stod(buf) == x) return buf;
  }
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  out << content;
}

std::string provenance_line(const Config& config, uint64_t seed) {
  return "# config_hash=" + config.hash() + " seed=" + std::to_string(seed) + "\n";
}

std::vector<ConvLayerSpec> parse_conv_layout(const std::string& text) {
  std::vector<ConvLayerSpec> layers;
  size_t pos = 0;
  while ((pos = text.find('(', pos)) != std::string::npos) {
    const size_t end = text.find(')', pos);
    if (end == std::string::npos) throw FormatError("bad conv layout: " + text);
    const std::string triple = text.substr(pos + 1, end - pos - 1);
    ConvLayerSpec layer;
    if (std::sscanf(triple.c_str(), "%d ,%d ,%d", &layer.channels, &layer.width,
                    &layer.stride) != 3 &&
        std::sscanf(triple.c_str(), "%d,%d,%d", &layer.channels, &layer.width,
                    &layer.stride) != 3) {
      throw FormatError("bad conv layout triple: " + triple);
    }
    layers.push_back(layer);
    pos = end + 1;
  }
  if (layers.empty()) throw FormatError("empty conv layout: " + text);
  return layers;
}

Corpus load_corpus(const Config& config) {
  const std::string dir = config.get_string("data.dir", "");
  if (dir.empty()) throw FormatError("config: data.dir is required");
  const std::string manifest = config.get_string("data.manifest", dir + "/manifest.csv");
  const std::string classes = config.get_string("data.classes", dir + "/classes.txt");
  const int rate = static_cast<int>(config.get_int("data.sample_rate", 8000));
  return Corpus::load(dir, manifest, classes, rate, data_workers());
}

ClipLabels clip_labels_of(const Corpus& corpus) {
  ClipLabels labels;
  for (const auto& id : corpus.ids) {
    std::vector<int> classes;
    for (const auto& ev : corpus.events_of(id)) classes.push_back(ev.class_id);
    labels.emplace_back(id, std::move(classes));
  }
  return labels;
}

struct LogWriter {
  std::ofstream out;

  LogWriter(const std::string& path, const Config& config, uint64_t seed) {
    out.open(path, std::ios::binary);
    if (!out) throw FormatError("cannot write log " + path);
    json meta;
    meta["config_hash"] = config.hash();
    meta["seed"] = seed;
    out << meta.dump() << "\n";
  }

  void line(const json& entry) { out << entry.dump() << "\n"; out.flush(); }
};

void retain_last_checkpoints(const std::string& out_dir, int keep) {
  std::vector<fs::path> periodic;
  for (const auto& entry : fs::directory_iterator(out_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("checkpoint_step", 0) == 0) periodic.push_back(entry.path());
  }
  std::sort(periodic.begin(), periodic.end());
  while (static_cast<int>(periodic.size()) > keep) {
    fs::remove(periodic.front());
    periodic.erase(periodic.begin());
  }
}

std::vector<LabelEvent> truth_for_class(const std::vector<LabelEvent>& events,
                                        int class_id, const ClassTable& table) {
  std::vector<LabelEvent> out;
  for (const auto& ev : events) {
    if (table.is_focal(class_id)) {
      if (ev.focal) {
        LabelEvent remapped = ev;
        remapped.class_id = class_id;
        out.push_back(remapped);
      }
    } else if (ev.class_id == class_id) {
      out.push_back(ev);
    }
  }
  return out;
}

struct EvalOutcome {
  json summary;
  std::string metrics_csv;
  std::string pr_csv;
};

EvalOutcome evaluate_model(const ModelState& model, const Corpus& corpus,
                           const std::vector<std::string>& eval_ids,
                           const Config& config) {
  const double pool_s = config.get_double("eval.pool_seconds", 0.1);
  const double threshold = config.get_double("eval.threshold", 0.5);
  const double iou_min = config.get_double("eval.iou_min", 0.5);
  const int n_levels = static_cast<int>(config.get_int("eval.recall_levels", 101));
  const int avg_k = static_cast<int>(config.get_int("layer_average.K", 0));
  const double rate = model.frontend_cfg.effective_rate();
  const int n_classes = corpus.table.size();

  if (eval_ids.empty()) throw MetricError("evaluate: empty evaluation split");
  int64_t total_truth = 0;
  std::map<int, DetectionPool> pools;
  std::map<int, std::array<int64_t, 3>> counts;  // tp, fp, fn at threshold
  for (int c = 0; c < n_classes; ++c) {
    pools[c] = DetectionPool{};
    counts[c] = {0, 0, 0};
  }

  for (const auto& id : eval_ids) {
    const Tensor likelihood = predict_likelihoods(corpus.clip(id), model, avg_k);
    const auto& events = corpus.events_of(id);
    total_truth += static_cast<int64_t>(events.size());
    for (int c = 0; c < n_classes; ++c) {
      std::vector<double> trace(static_cast<size_t>(likelihood.rows()));
      for (int64_t t = 0; t < likelihood.rows(); ++t) {
        trace[static_cast<size_t>(t)] = likelihood.at(t, c);
      }
      const auto predictions = extract_events(trace, rate, pool_s, threshold, c);
      const auto truth = truth_for_class(events, c, corpus.table);
      const auto match = match_events(predictions, truth, c, iou_min);
      pools[c].add(match);
      counts[c][0] += static_cast<int64_t>(match.true_positives.size());
      counts[c][1] += static_cast<int64_t>(match.false_positives.size());
      counts[c][2] += static_cast<int64_t>(match.false_negatives.size());
    }
  }
  if (total_truth == 0) {
    throw MetricError("evaluate: no ground-truth events in evaluation split");
  }

  EvalOutcome outcome;
  outcome.metrics_csv = "class,ap,n_truth,n_tp,n_fp,n_fn\n";
  outcome.pr_csv = "class,threshold,precision,recall\n";
  json class_rows = json::array();
  for (int c = 0; c < n_classes; ++c) {
    const auto& pool = pools[c];
    double ap = 0.0;
    PRCurve curve;
    if (pool.n_truth > 0) {
      curve = pr_curve(pool, n_levels);
      ap = curve.ap;
    }
    const std::string& name = corpus.table.names[static_cast<size_t>(c)];
    outcome.metrics_csv += name + "," + format_double(ap) + "," +
                           std::to_string(pool.n_truth) + "," +
                           std::to_string(counts[c][0]) + "," +
                           std::to_string(counts[c][1]) + "," +
                           std::to_string(counts[c][2]) + "\n";
    for (const auto& point : curve.points) {
      outcome.pr_csv += name + "," + format_double(point.threshold) + "," +
                        format_double(point.precision) + "," +
                        format_double(point.recall) + "\n";
    }
    json row;
    row["name"] = name;
    row["ap"] = ap;
    row["n_truth"] = pool.n_truth;
    row["n_tp"] = counts[c][0];
    row["n_fp"] = counts[c][1];
    row["n_fn"] = counts[c][2];
    class_rows.push_back(row);
  }
  const auto aggregated = aggregate(pools, corpus.table, n_levels);
  outcome.summary["micro_ap"] = aggregated.micro.ap;
  outcome.summary["macro_ap"] = aggregated.macro_ap;
  outcome.summary["classes"] = class_rows;
  return outcome;
}

ModelState model_from_config(const Config& config, int n_classes, uint64_t seed) {
  const FrontendConfig fcfg = frontend_config_from(config);
  const NetworkConfig ncfg = network_config_from(config, n_classes);
  return init_model(fcfg, ncfg, seed);
}

}  // namespace

int data_workers() {
  const char* env = std::getenv("A2V_WORKERS");
  if (env == nullptr) return 0;
  try {
    return std::max(0, std::stoi(env));
  } catch (const std::exception&) {
    return 0;
  }
}

FrontendConfig frontend_config_from(const Config& config) {
  FrontendConfig fcfg;
  fcfg.n_filters = static_cast<int>(config.get_int("model.n_filters", 32));
  fcfg.sample_rate = static_cast<int>(config.get_int("data.sample_rate", 8000));
  fcfg.conv_activation = config.get_string("model.conv_activation", "gelu");
  const std::string layout = config.get_string(
      "model.conv_layers", "(48,10,5)(48,3,2)(48,3,2)(48,3,2)(48,3,1)(48,2,1)(48,2,1)");
  fcfg.conv_layers = parse_conv_layout(layout);
  return fcfg;
}

NetworkConfig network_config_from(const Config& config, int n_classes) {
  NetworkConfig ncfg;
  ncfg.layers = static_cast<int>(config.get_int("model.layers", 2));
  ncfg.heads = static_cast<int>(config.get_int("model.heads", 4));
  ncfg.embed_dim = static_cast<int>(config.get_int("model.embed_dim", 64));
  ncfg.ffn_dim = static_cast<int>(config.get_int("model.ffn_dim", 4 * ncfg.embed_dim));
  ncfg.dropout = config.get_double("model.dropout", 0.1);
  ncfg.layerdrop = config.get_double("model.layerdrop", 0.0);
  ncfg.pos_kernel = static_cast<int>(config.get_int("model.pos_kernel", 19));
  ncfg.pos_groups = static_cast<int>(config.get_int("model.pos_groups", 8));
  ncfg.decoder_dim = static_cast<int>(config.get_int("model.decoder_dim", ncfg.embed_dim));
  ncfg.decoder_kernel = static_cast<int>(config.get_int("model.decoder_kernel", 7));
  ncfg.decoder_groups = static_cast<int>(config.get_int("model.decoder_groups", 4));
  ncfg.decoder_layers = static_cast<int>(config.get_int("model.decoder_layers", 2));
  ncfg.n_classes = n_classes;
  const FrontendConfig fcfg = frontend_config_from(config);
  ncfg.input_dim = fcfg.output_channels();
  return ncfg;
}

PretrainConfig pretrain_config_from(const Config& config) {
  PretrainConfig pcfg;
  pcfg.optim.lr_peak = config.get_double("pretrain.lr", 1e-4);
  pcfg.optim.weight_decay = config.get_double("pretrain.weight_decay", 0.01);
  pcfg.optim.warmup_steps = config.get_int("pretrain.warmup_steps", 10000);
  pcfg.optim.total_steps = config.get_int("pretrain.total_steps", 408000);
  pcfg.optim.clip_norm = config.get_double("pretrain.clip_norm", 1.0);
  pcfg.optim.beta1 = config.get_double("pretrain.beta1", 0.9);
  pcfg.optim.beta2 = config.get_double("pretrain.beta2", 0.98);
  pcfg.ema.tau_start = config.get_double("pretrain.tau_start", 0.999);
  pcfg.ema.tau_end = config.get_double("pretrain.tau_end", 0.9999);
  pcfg.ema.anneal_steps = config.get_int(
      "pretrain.tau_anneal",
      static_cast<int64_t>(0.3 * static_cast<double>(pcfg.optim.total_steps)));
  pcfg.mask.p = config.get_double("mask.p", 0.15);
  pcfg.mask.span_length = static_cast<int>(config.get_int("mask.M", 2));
  pcfg.mask.clones = static_cast<int>(config.get_int("mask.clones", 8));
  pcfg.bcl.input_strength = config.get_double("bcl.input_strength", 0.5);
  pcfg.bcl.target_strength = config.get_double("bcl.target_strength", 0.0);
  pcfg.bcl.token_prob = config.get_double("bcl.token_prob", 0.0);
  pcfg.bcl.window_s = config.get_double("bcl.window_s", 0.05);
  pcfg.batch_clips = config.get_int("pretrain.batch_clips", 4);
  pcfg.crop_seconds = config.get_double("pretrain.crop_seconds", 1.5);
  pcfg.loss_masked_only = config.get_bool("pretrain.loss_masked_only", true);
  pcfg.teacher_top_k = static_cast<int>(config.get_int("pretrain.teacher_top_k", 0));
  pcfg.checkpoint_every = config.get_int("pretrain.checkpoint_every", 500);
  return pcfg;
}

FinetuneConfig finetune_config_from(const Config& config) {
  FinetuneConfig fcfg;
  fcfg.optim.lr_peak = config.get_double("finetune.lr", 3e-5);
  fcfg.optim.weight_decay = config.get_double("finetune.weight_decay", 0.01);
  fcfg.optim.warmup_steps = config.get_int("finetune.warmup_steps", 2000);
  fcfg.optim.total_steps = config.get_int("finetune.total_steps", 30000);
  fcfg.optim.clip_norm = config.get_double("finetune.clip_norm", 1.0);
  fcfg.optim.beta1 = config.get_double("finetune.beta1", 0.9);
  fcfg.optim.beta2 = config.get_double("finetune.beta2", 0.98);
  fcfg.schedule.warmup_steps = fcfg.optim.warmup_steps;
  fcfg.schedule.frozen_steps = config.get_int("finetune.frozen_steps", 10000);
  fcfg.schedule.total_steps = fcfg.optim.total_steps;
  fcfg.schedule.mask_p = config.get_double("finetune.mask.p", 0.0825);
  fcfg.schedule.mask_span = static_cast<int>(config.get_int("finetune.mask.M", 4));
  fcfg.focal.gamma = config.get_double("focal.gamma", 2.0);
  // BCL knobs may differ between phases; finetune.bcl.* overrides bcl.*.
  fcfg.bcl.input_strength = config.get_double(
      "finetune.bcl.input_strength", config.get_double("bcl.input_strength", 0.5));
  fcfg.bcl.target_strength = config.get_double(
      "finetune.bcl.target_strength", config.get_double("bcl.target_strength", 0.5));
  fcfg.bcl.token_prob = config.get_double(
      "finetune.bcl.token_prob", config.get_double("bcl.token_prob", 0.0));
  fcfg.bcl.window_s = config.get_double(
      "finetune.bcl.window_s", config.get_double("bcl.window_s", 0.05));
  fcfg.layer_average_k = static_cast<int>(config.get_int("layer_average.K", 0));
  fcfg.batch_clips = config.get_int("finetune.batch_clips", 4);
  fcfg.crop_seconds = config.get_double("finetune.crop_seconds", 1.5);
  fcfg.event_crop_bias = config.get_double("finetune.event_crop_bias", 0.5);
  return fcfg;
}

int run_pretrain(const RunOptions& options) {
  const Config config = Config::load(options.config_path);
  const Corpus corpus = load_corpus(config);  // validates inputs up front
  const PretrainConfig pcfg = pretrain_config_from(config);

  fs::create_directories(options.out_dir);
  ModelState model = model_from_config(config, corpus.table.size(), options.seed);
  AdamState adam;
  Rng rng(options.seed);
  int64_t start_step = 0;
  if (!options.resume.empty()) {
    const Checkpoint checkpoint = load_checkpoint(options.resume);
    restore_checkpoint(checkpoint, model, &adam, &rng, /*strict=*/true);
    start_step = checkpoint.step;
  }

  LogWriter log((fs::path(options.out_dir) / "pretrain.log.jsonl").string(),
                config, options.seed);
  const std::string final_path =
      (fs::path(options.out_dir) / "checkpoint_final.ckpt").string();
  try {
    for (int64_t step = start_step; step < pcfg.optim.total_steps; ++step) {
      const DistillBatch batch = make_pretrain_batch(corpus, corpus.ids, pcfg, rng);
      const DistillStats stats = distill_step(model, adam, batch, pcfg, step, rng);
      json entry;
      entry["step"] = step;
      entry["loss"] = stats.loss;
      entry["lr"] = stats.lr;
      entry["tau"] = stats.tau;
      entry["collapse"] = stats.collapse;
      entry["grad_norm"] = stats.grad_norm;
      log.line(entry);
      const int64_t done = step + 1;
      if (pcfg.checkpoint_every > 0 && done % pcfg.checkpoint_every == 0 &&
          done < pcfg.optim.total_steps) {
        char name[64];
        std::snprintf(name, sizeof(name), "checkpoint_step%08lld.ckpt",
                      static_cast<long long>(done));
        save_checkpoint((fs::path(options.out_dir) / name).string(),
                        make_checkpoint(model, adam, config, done, rng));
        retain_last_checkpoints(options.out_dir, 2);
      }
    }
  } catch (const DivergenceError& e) {
    std::cerr << "pretrain diverged at step " << e.step << ": " << e.what()
              << "\n";
    return 2;  // last periodic checkpoint is retained
  }
  save_checkpoint(final_path, make_checkpoint(model, adam, config,
                                              pcfg.optim.total_steps, rng));
  return 0;
}

int run_finetune(const RunOptions& options) {
  const Config config = Config::load(options.config_path);
  const Corpus corpus = load_corpus(config);
  const FinetuneConfig fcfg = finetune_config_from(config);
  const int folds = static_cast<int>(config.get_int("corpus.folds", 5));

  const SplitPlan plan =
      stratified_kfold(clip_labels_of(corpus), folds, options.seed);
  std::vector<std::string> train_ids, eval_ids;
  for (const auto& [id, fold] : plan.fold_assignments) {
    (fold == options.fold ? eval_ids : train_ids).push_back(id);
  }
  // Training uses labeled clips; unlabeled ones carry no gradient signal.
  std::map<std::string, std::vector<int>> labels_by_id;
  std::vector<std::string> labeled_train;
  for (const auto& id : train_ids) {
    const auto& events = corpus.events_of(id);
    if (events.empty()) continue;
    labeled_train.push_back(id);
    auto& classes = labels_by_id[id];
    for (const auto& ev : events) classes.push_back(ev.class_id);
  }
  if (labeled_train.empty()) {
    std::cerr << "finetune: no labeled clips in training split\n";
    return 2;
  }
  std::vector<std::string> finetune_ids = labeled_train;
  if (options.labels_fraction < 1.0) {
    finetune_ids = fewshot_subsample(labeled_train, labels_by_id,
                                     options.labels_fraction, options.seed);
  }

  fs::create_directories(options.out_dir);
  ModelState model = model_from_config(config, corpus.table.size(), options.seed);
  // Regularization strengths may differ between phases.
  model.net_cfg.dropout =
      config.get_double("finetune.dropout", model.net_cfg.dropout);
  model.net_cfg.layerdrop =
      config.get_double("finetune.layerdrop", model.net_cfg.layerdrop);
  AdamState adam;
  Rng rng(options.seed);
  int64_t start_step = 0;
  if (!options.checkpoint.empty()) {
    const Checkpoint pretrained = load_checkpoint(options.checkpoint);
    restore_checkpoint(pretrained, model, nullptr, nullptr, /*strict=*/false);
  }
  if (!options.resume.empty()) {
    const Checkpoint checkpoint = load_checkpoint(options.resume);
    restore_checkpoint(checkpoint, model, &adam, &rng, /*strict=*/true);
    start_step = checkpoint.step;
  }

  LogWriter log((fs::path(options.out_dir) / "finetune.log.jsonl").string(),
                config, options.seed);
  try {
    for (int64_t step = start_step; step < fcfg.optim.total_steps; ++step) {
      const LabeledBatch batch = make_finetune_batch(
          corpus, finetune_ids, fcfg, model.frontend_cfg, rng);
      const FinetuneStats stats = finetune_step(model, adam, batch, fcfg, step, rng);
      json entry;
      entry["step"] = step;
      entry["loss"] = stats.loss;
      entry["lr"] = stats.lr;
      entry["grad_norm"] = stats.grad_norm;
      log.line(entry);
    }
  } catch (const DivergenceError& e) {
    std::cerr << "finetune diverged at step " << e.step << ": " << e.what() << "\n";
    return 2;
  }
  save_checkpoint((fs::path(options.out_dir) / "checkpoint_final.ckpt").string(),
                  make_checkpoint(model, adam, config, fcfg.optim.total_steps, rng));

  // Evaluation AP on the held-out fold is part of the finetune report.
  EvalOutcome outcome = evaluate_model(model, corpus, eval_ids, config);
  outcome.summary["config_hash"] = config.hash();
  outcome.summary["seed"] = options.seed;
  write_text((fs::path(options.out_dir) / "summary.json").string(),
             outcome.summary.dump(2) + "\n");
  write_text((fs::path(options.out_dir) / "metrics.csv").string(),
             provenance_line(config, options.seed) + outcome.metrics_csv);
  write_text((fs::path(options.out_dir) / "pr.csv").string(),
             provenance_line(config, options.seed) + outcome.pr_csv);
  return 0;
}

int run_evaluate(const RunOptions& options) {
  const Config config = Config::load(options.config_path);
  Corpus corpus = load_corpus(config);
  if (!options.manifest_override.empty()) {
    corpus.labels = load_label_manifest(options.manifest_override, corpus.table);
  }
  if (options.checkpoint.empty()) {
    std::cerr << "evaluate: --checkpoint is required\n";
    return 2;
  }
  const Checkpoint checkpoint = load_checkpoint(options.checkpoint);
  ModelState model = model_from_config(config, corpus.table.size(), options.seed);
  restore_checkpoint(checkpoint, model, nullptr, nullptr, /*strict=*/true);

  std::vector<std::string> eval_ids;
  if (!options.manifest_override.empty()) {
    for (const auto& [id, events] : corpus.labels) {
      if (corpus.clips.count(id) > 0) eval_ids.push_back(id);
    }
  } else {
    const int folds = static_cast<int>(config.get_int("corpus.folds", 5));
    const SplitPlan plan =
        stratified_kfold(clip_labels_of(corpus), folds, options.seed);
    for (const auto& [id, fold] : plan.fold_assignments) {
      if (fold == options.fold) eval_ids.push_back(id);
    }
  }

  fs::create_directories(options.out_dir);
  EvalOutcome outcome = evaluate_model(model, corpus, eval_ids, config);
  outcome.summary["config_hash"] = config.hash();
  outcome.summary["seed"] = options.seed;
  write_text((fs::path(options.out_dir) / "summary.json").string(),
             outcome.summary.dump(2) + "\n");
  write_text((fs::path(options.out_dir) / "metrics.csv").string(),
             provenance_line(config, options.seed) + outcome.metrics_csv);
  write_text((fs::path(options.out_dir) / "pr.csv").string(),
             provenance_line(config, options.seed) + outcome.pr_csv);
  return 0;
}

int run_mask_stats(const RunOptions& options) {
  const Config config = Config::load(options.config_path);
  MaskConfig mask_cfg;
  mask_cfg.p = config.get_double("mask.p", 0.15);
  mask_cfg.span_length = static_cast<int>(config.get_int("mask.M", 2));
  mask_cfg.clones = static_cast<int>(config.get_int("mask.clones", 8));
  mask_cfg.seed = options.seed;
  const int64_t frames = config.get_int("mask_stats.frames", 1000000);
  const FrontendConfig fcfg = frontend_config_from(config);
  const double frame_ms =
      config.get_double("mask_stats.frame_ms", 1000.0 / fcfg.effective_rate());

  const MaskPlan plan = sample_mask(frames, mask_cfg);
  const MaskStatistics stats = mask_statistics(plan, frame_ms);

  fs::create_directories(options.out_dir);
  std::string csv = provenance_line(config, options.seed) +
                    "run_length_frames,count\n";
  for (const auto& [run, count] : stats.run_length_histogram) {
    csv += std::to_string(run) + "," + std::to_string(count) + "\n";
  }
  write_text((fs::path(options.out_dir) / "mask_stats.csv").string(), csv);
  const std::string summary =
      "coverage=" + format_double(stats.coverage) +
      " mode_ms=" + format_double(stats.mode_ms) +
      " union_coverage=" + format_double(stats.union_coverage) + "\n";
  write_text((fs::path(options.out_dir) / "mask_stats_summary.txt").string(),
             provenance_line(config, options.seed) + summary);
  std::cout << summary;
  return 0;
}

int run_cfr(const RunOptions& options) {
  const Config config = Config::load(options.config_path);
  const FrontendConfig fcfg = frontend_config_from(config);
  const int n_bins = static_cast<int>(config.get_int("cfr.bins", 512));

  std::vector<SincFilter> filters;
  if (!options.checkpoint.empty()) {
    const Checkpoint checkpoint = load_checkpoint(options.checkpoint);
    const Tensor* f_low = checkpoint.find("frontend.sinc.f_low");
    const Tensor* bw = checkpoint.find("frontend.sinc.bandwidth");
    if (f_low == nullptr || bw == nullptr) {
      std::cerr << "cfr: checkpoint has no sinc parameters\n";
      return 2;
    }
    const int k = sinc_kernel_length(fcfg.sample_rate);
    for (int64_t i = 0; i < f_low->numel(); ++i) {
      filters.push_back({f_low->at(i), bw->at(i), k});
    }
  } else {
    filters = mel_initialize(fcfg);
  }
  const auto cfr = cumulative_frequency_response(filters, fcfg.sample_rate, n_bins);

  fs::create_directories(options.out_dir);
  std::string csv = provenance_line(config, options.seed) + "freq_hz,response\n";
  const double nyq = fcfg.sample_rate / 2.0;
  for (int b = 0; b < n_bins; ++b) {
    csv += format_double(nyq * b / (n_bins - 1)) + "," +
           format_double(cfr[static_cast<size_t>(b)]) + "\n";
  }
  write_text((fs::path(options.out_dir) / "cfr.csv").string(), csv);
  return 0;
}

int run_attention(const RunOptions& options) {
  const Config config = Config::load(options.config_path);
  if (options.checkpoint.empty() || options.wav.empty()) {
    std::cerr << "attention: --checkpoint and --wav are required\n";
    return 2;
  }
  const Checkpoint checkpoint = load_checkpoint(options.checkpoint);
  AudioClip clip = load_clip(options.wav);
  const int n_classes = static_cast<int>(config.get_int(
      "model.n_classes", [&] {
        const Tensor* head = checkpoint.find("head.head.b");
        return head ? head->numel() : 3;
      }()));
  ModelState model = model_from_config(config, n_classes, options.seed);
  restore_checkpoint(checkpoint, model, nullptr, nullptr, /*strict=*/true);
  if (clip.sample_rate != model.frontend_cfg.sample_rate) {
    clip = resample(clip, model.frontend_cfg.sample_rate);
  }

  // Constant-parameter eval pass with attention collection.
  ParamSet frontend_view, transformer_view;
  for (const auto& [name, var] : model.frontend.items) {
    frontend_view.items.emplace_back(name, ad::Var::constant(var.value()));
  }
  for (const auto& [name, var] : model.transformer.items) {
    transformer_view.items.emplace_back(name, ad::Var::constant(var.value()));
  }
  Tensor wave = Tensor::from_vector(clip.samples);
  auto features = frontend_forward(wave, frontend_view, model.frontend_cfg);
  AttentionMaps maps;
  transformer_forward(features, transformer_view, model.net_cfg,
                      /*train=*/false, nullptr, &maps);

  fs::create_directories(options.out_dir);
  Checkpoint container;
  container.step = 0;
  container.config = config.entries();
  container.rng_state = Rng(options.seed).state();
  for (int l = 0; l < maps.layers; ++l) {
    for (int h = 0; h < maps.heads; ++h) {
      container.arrays.emplace_back(
          "attn.layer" + std::to_string(l) + ".head" + std::to_string(h),
          maps.map(l, h));
    }
  }
  container.arrays.emplace_back("attn.averaged", maps.averaged);
  save_checkpoint((fs::path(options.out_dir) / "attention.bin").string(),
                  container);

  std::string csv = provenance_line(config, options.seed);
  const int64_t L = maps.averaged.rows();
  for (int64_t i = 0; i < L; ++i) {
    for (int64_t j = 0; j < L; ++j) {
      csv += format_double(maps.averaged.at(i, j));
      csv += (j + 1 < L) ? ',' : '\n';
    }
  }
  write_text((fs::path(options.out_dir) / "attention_averaged.csv").string(), csv);
  return 0;
}

int run_synth(const RunOptions& options) {
  const Config config = Config::load(options.config_path);
  SynthSpec spec = SynthSpec::defaults();
  spec.n_clips = static_cast<int>(config.get_int("synth.n_clips", spec.n_clips));
  spec.clip_s = config.get_double("synth.clip_seconds", spec.clip_s);
  spec.sample_rate = static_cast<int>(config.get_int("data.sample_rate", spec.sample_rate));
  spec.bursts_per_clip = config.get_double("synth.bursts_per_clip", spec.bursts_per_clip);
  spec.burst_amplitude = config.get_double("synth.burst_amplitude", spec.burst_amplitude);
  spec.background_rms = config.get_double("synth.background_rms", spec.background_rms);
  spec.seed = options.seed;
  const std::string classes = config.get_string("synth.classes", "");
  if (!classes.empty()) {
    spec.classes.clear();
    size_t pos = 0;
    while (pos < classes.size()) {
      size_t end = classes.find(';', pos);
      if (end == std::string::npos) end = classes.size();
      const std::string item = classes.substr(pos, end - pos);
      SynthClass cls;
      char name[64];
      if (std::sscanf(item.c_str(), "%63[^:]:%lf:%lf:%lf:%lf:%lf", name,
                      &cls.band_lo_hz, &cls.band_hi_hz, &cls.dur_lo_ms,
                      &cls.dur_hi_ms, &cls.calls_per_clip) != 6) {
        std::cerr << "synth: bad class spec '" << item << "'\n";
        return 2;
      }
      cls.name = name;
      spec.classes.push_back(cls);
      pos = end + 1;
    }
  }
  const SynthResult result = generate(spec, options.out_dir);
  std::cout << "generated " << result.clip_ids.size() << " clips, "
            << result.n_events << " events\n";
  return 0;
}

}  // namespace a2v
