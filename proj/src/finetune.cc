#include "a2v/finetune.h"

#include <algorithm>
#include <cmath>

#include "a2v/error.h"
#include "a2v/masking.h"
#include "a2v/pretrain.h"

namespace a2v {

double focal_loss(double likelihood, double target, double gamma) {
  const double eps = 1e-7;
  const double p = std::clamp(likelihood, eps, 1.0 - eps);
  const double pt = p * target + (1.0 - p) * (1.0 - target);
  const double ce = -(target * std::log(p) + (1.0 - target) * std::log(1.0 - p));
  return std::pow(1.0 - pt, gamma) * ce;
}

Tensor crop_frame_targets(const std::vector<LabelEvent>& events,
                          int64_t crop_start, int64_t crop_len,
                          const FrontendConfig& frontend_cfg,
                          const ClassTable& table) {
  const double rate = frontend_cfg.sample_rate;
  const double crop_onset_s = static_cast<double>(crop_start) / rate;
  const double crop_s = static_cast<double>(crop_len) / rate;
  std::vector<LabelEvent> shifted;
  for (const auto& ev : events) {
    LabelEvent e = ev;
    e.onset_s = std::max(0.0, ev.onset_s - crop_onset_s);
    e.offset_s = std::min(crop_s, ev.offset_s - crop_onset_s);
    if (e.offset_s > e.onset_s) shifted.push_back(e);
  }
  FrameTargets targets =
      frame_targets(shifted, crop_s, frontend_cfg.effective_rate(), table);
  const int64_t frames = frontend_output_length(
      frontend_cfg, crop_len, sinc_kernel_length(frontend_cfg.sample_rate));
  // The valid-conv grid is slightly shorter than round(duration * rate).
  Tensor out({frames, targets.frames.cols()}, 0.0);
  const int64_t copy_rows = std::min(frames, targets.frames.rows());
  std::copy_n(targets.frames.data(), copy_rows * targets.frames.cols(),
              out.data());
  return out;
}

LabeledBatch make_finetune_batch(const Corpus& corpus,
                                 const std::vector<std::string>& ids,
                                 const FinetuneConfig& config,
                                 const FrontendConfig& frontend_cfg, Rng& rng) {
  if (ids.empty()) throw ArgumentError("make_finetune_batch: no clips");
  const int64_t crop_len = static_cast<int64_t>(
      std::llround(config.crop_seconds * corpus.sample_rate));
  LabeledBatch batch;
  batch.examples.resize(static_cast<size_t>(config.batch_clips));
  for (auto& ex : batch.examples) {
    const auto& id = ids[static_cast<size_t>(
        rng.uniform_int(static_cast<int64_t>(ids.size())))];
    const auto& clip = corpus.clip(id);
    const auto& events = corpus.events_of(id);
    int64_t start = 0;
    if (!events.empty() && rng.uniform() < config.event_crop_bias &&
        crop_len < static_cast<int64_t>(clip.samples.size())) {
      // Event-centered crop: place the window so a random event's center is
      // inside it, jittered uniformly.
      const auto& ev = events[static_cast<size_t>(
          rng.uniform_int(static_cast<int64_t>(events.size())))];
      const int64_t center = static_cast<int64_t>(
          0.5 * (ev.onset_s + ev.offset_s) * corpus.sample_rate);
      const int64_t lo = std::max<int64_t>(0, center - crop_len);
      const int64_t hi = std::min<int64_t>(
          static_cast<int64_t>(clip.samples.size()) - crop_len,
          std::max<int64_t>(lo, center));
      start = lo + (hi > lo ? rng.uniform_int(hi - lo + 1) : 0);
      ex.wave.assign(clip.samples.begin() + start,
                     clip.samples.begin() + start + crop_len);
    } else {
      start = crop_wave(clip.samples, crop_len, rng, ex.wave);
    }
    ex.targets = crop_frame_targets(events, start,
                                    static_cast<int64_t>(ex.wave.size()),
                                    frontend_cfg, corpus.table);
  }
  if (config.bcl.token_prob > 0.0 && batch.examples.size() > 1) {
    const auto originals = batch.examples;
    for (size_t i = 0; i < batch.examples.size(); ++i) {
      if (!rng.bernoulli(config.bcl.token_prob)) continue;
      size_t j = static_cast<size_t>(
          rng.uniform_int(static_cast<int64_t>(originals.size()) - 1));
      if (j >= i) ++j;
      const double u = rng.uniform();
      const double r = 1.0 - config.bcl.input_strength * u;
      if (r <= 0.0 || r >= 1.0) continue;
      if (originals[i].wave.size() != originals[j].wave.size()) continue;
      const double g1 = a_weighted_level(originals[i].wave, corpus.sample_rate,
                                         config.bcl.window_s);
      const double g2 = a_weighted_level(originals[j].wave, corpus.sample_rate,
                                         config.bcl.window_s);
      batch.examples[i].wave =
          bc_mix(originals[i].wave, originals[j].wave, r, g1, g2);
      batch.examples[i].targets =
          mix_targets(originals[i].targets, originals[j].targets, r,
                      config.bcl.target_strength);
    }
  }
  return batch;
}

FinetuneStats finetune_step(ModelState& model, AdamState& adam,
                            const LabeledBatch& batch,
                            const FinetuneConfig& config, int64_t step,
                            Rng& rng) {
  if (batch.examples.empty()) throw ArgumentError("finetune_step: empty batch");
  const bool transformer_frozen = step < config.schedule.frozen_steps;

  model.frontend.set_requires_grad(false);  // frozen feature extractor
  model.transformer.set_requires_grad(!transformer_frozen);
  model.head.set_requires_grad(true);
  if (!transformer_frozen) model.transformer.zero_grad();
  model.head.zero_grad();

  const int layers = model.net_cfg.layers;
  const int avg_k = (config.layer_average_k <= 0 ||
                     config.layer_average_k > layers)
                        ? layers
                        : config.layer_average_k;

  ad::Var total;
  for (const auto& ex : batch.examples) {
    Tensor wave_t = Tensor::from_vector(ex.wave);
    auto features = frontend_forward(wave_t, model.frontend, model.frontend_cfg);
    const int64_t frames = features.rows();

    ad::Var net_in = features;
    if (config.schedule.mask_p > 0.0) {
      MaskConfig mask_cfg;
      mask_cfg.p = config.schedule.mask_p;
      mask_cfg.span_length = config.schedule.mask_span;
      mask_cfg.clones = 1;
      mask_cfg.seed = rng.next_u64();
      const auto plan = sample_mask(frames, mask_cfg);
      const auto& mask = plan.masks[0];
      auto kept = kept_indices(mask);
      if (!kept.empty() && kept.size() < mask.size()) {
        Tensor base = fill_masked_noise(
            Tensor({frames, model.net_cfg.input_dim}, 0.0), mask,
            rng.next_u64());
        net_in = ad::scatter_rows(ad::gather_rows(features, kept), kept, base);
      }
    }

    auto outputs = transformer_forward(net_in, model.transformer, model.net_cfg,
                                       /*train=*/true, &rng);
    auto pooled = layer_average(outputs, avg_k);
    auto logits = head_logits(pooled, model.head);
    auto loss = ad::focal_loss_from_logits(logits, ex.targets,
                                           config.focal.gamma);
    total = total.defined() ? ad::add(total, loss) : loss;
  }
  total = ad::scale(total, 1.0 / static_cast<double>(batch.examples.size()));

  FinetuneStats stats;
  stats.loss = total.value().at(0);
  if (!std::isfinite(stats.loss)) {
    throw DivergenceError("finetune_step: non-finite loss", step);
  }
  ad::backward(total);

  std::vector<ParamSet*> sets{&model.head};
  if (!transformer_frozen) sets.push_back(&model.transformer);
  stats.grad_norm = clip_global_norm(sets, config.optim.clip_norm);
  stats.lr = cosine_lr(step, config.optim);
  adamw_step(adam, sets, config.optim, stats.lr,
             {"pswish.alpha", "pswish.beta"});
  return stats;
}

Tensor predict_likelihoods(const AudioClip& clip, const ModelState& model,
                           int layer_average_k) {
  // Eval mode: every parameter treated as constant, no dropout or LayerDrop.
  ParamSet frontend_view;
  for (const auto& [name, var] : model.frontend.items) {
    frontend_view.items.emplace_back(name, ad::Var::constant(var.value()));
  }
  ParamSet transformer_view;
  for (const auto& [name, var] : model.transformer.items) {
    transformer_view.items.emplace_back(name, ad::Var::constant(var.value()));
  }
  ParamSet head_view;
  for (const auto& [name, var] : model.head.items) {
    head_view.items.emplace_back(name, ad::Var::constant(var.value()));
  }

  Tensor wave_t = Tensor::from_vector(clip.samples);
  auto features = frontend_forward(wave_t, frontend_view, model.frontend_cfg);
  auto outputs = transformer_forward(features, transformer_view, model.net_cfg,
                                     /*train=*/false, nullptr);
  const int layers = model.net_cfg.layers;
  const int avg_k =
      (layer_average_k <= 0 || layer_average_k > layers) ? layers : layer_average_k;
  auto pooled = layer_average(outputs, avg_k);
  auto likelihood = classification_head(pooled, head_view);
  return likelihood.value();
}

}  // namespace a2v
