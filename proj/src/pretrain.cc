#include "a2v/pretrain.h"

#include <atomic>
#include <cmath>

#include "a2v/error.h"

namespace a2v {

namespace {
std::atomic<int64_t> g_teacher_forwards{0};
}

double tau_schedule(int64_t step, const EmaConfig& config) {
  if (step < 0) throw ArgumentError("tau_schedule: negative step");
  if (config.anneal_steps <= 0 || step >= config.anneal_steps) {
    return config.tau_end;
  }
  const double f = static_cast<double>(step) /
                   static_cast<double>(config.anneal_steps);
  return config.tau_start + f * (config.tau_end - config.tau_start);
}

void ema_update(std::vector<Tensor>& teacher, const ParamSet& student,
                double tau) {
  if (teacher.size() != student.items.size()) {
    throw StateError("ema_update: teacher/student tree size mismatch");
  }
  for (size_t i = 0; i < teacher.size(); ++i) {
    const Tensor& s = student.items[i].second.value();
    Tensor& t = teacher[i];
    if (!t.same_shape(s)) {
      throw StateError("ema_update: shape mismatch at " + student.items[i].first);
    }
    for (size_t j = 0; j < t.v.size(); ++j) {
      t.v[j] = tau * t.v[j] + (1.0 - tau) * s.v[j];
    }
  }
}

int64_t teacher_forward_count() { return g_teacher_forwards.load(); }
void reset_teacher_forward_count() { g_teacher_forwards.store(0); }

Tensor teacher_targets(const Tensor& frontend_frames, const ModelState& model,
                       int top_k) {
  g_teacher_forwards.fetch_add(1);
  ParamSet teacher = teacher_view(model);
  auto outputs = transformer_forward(ad::Var::constant(frontend_frames), teacher,
                                     model.net_cfg, /*train=*/false, nullptr);
  const int n = static_cast<int>(outputs.per_layer.size());
  const int k = (top_k <= 0 || top_k > n) ? n : top_k;
  Tensor acc(outputs.per_layer[0].value().shape, 0.0);
  for (int l = n - k; l < n; ++l) {
    const Tensor normed = instance_norm_time(outputs.per_layer[static_cast<size_t>(l)].value());
    for (size_t i = 0; i < acc.v.size(); ++i) acc.v[i] += normed.v[i];
  }
  for (auto& v : acc.v) v /= static_cast<double>(k);
  return acc;
}

double collapse_monitor(const std::vector<Tensor>& targets) {
  if (targets.empty()) throw ArgumentError("collapse_monitor: empty batch");
  const int64_t d = targets[0].cols();
  int64_t rows = 0;
  for (const auto& t : targets) rows += t.rows();
  double acc = 0.0;
  for (int64_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (const auto& t : targets) {
      for (int64_t r = 0; r < t.rows(); ++r) mean += t.at(r, j);
    }
    mean /= static_cast<double>(rows);
    double var = 0.0;
    for (const auto& t : targets) {
      for (int64_t r = 0; r < t.rows(); ++r) {
        const double dv = t.at(r, j) - mean;
        var += dv * dv;
      }
    }
    var /= static_cast<double>(rows);
    acc += std::sqrt(var);
  }
  return acc / static_cast<double>(d);
}

int64_t crop_wave(const std::vector<double>& samples, int64_t crop_len, Rng& rng,
                  std::vector<double>& out) {
  const int64_t n = static_cast<int64_t>(samples.size());
  if (crop_len >= n) {
    out = samples;
    return 0;
  }
  const int64_t start = rng.uniform_int(n - crop_len + 1);
  out.assign(samples.begin() + start, samples.begin() + start + crop_len);
  return start;
}

DistillBatch make_pretrain_batch(const Corpus& corpus,
                                 const std::vector<std::string>& ids,
                                 const PretrainConfig& config, Rng& rng) {
  if (ids.empty()) throw ArgumentError("make_pretrain_batch: no clips");
  const int64_t crop_len = static_cast<int64_t>(
      std::llround(config.crop_seconds * corpus.sample_rate));
  DistillBatch batch;
  batch.waves.resize(static_cast<size_t>(config.batch_clips));
  for (auto& wave : batch.waves) {
    const auto& id = ids[static_cast<size_t>(rng.uniform_int(
        static_cast<int64_t>(ids.size())))];
    crop_wave(corpus.clip(id).samples, crop_len, rng, wave);
  }
  // BC mixing against another sample of the same batch, input side only.
  if (config.bcl.token_prob > 0.0 && batch.waves.size() > 1) {
    const auto originals = batch.waves;
    for (size_t i = 0; i < batch.waves.size(); ++i) {
      if (!rng.bernoulli(config.bcl.token_prob)) continue;
      size_t j = static_cast<size_t>(rng.uniform_int(
          static_cast<int64_t>(originals.size()) - 1));
      if (j >= i) ++j;
      const double u = rng.uniform();
      const double r = 1.0 - config.bcl.input_strength * u;
      if (r <= 0.0 || r >= 1.0) continue;
      if (originals[i].size() != originals[j].size()) continue;
      const double g1 = a_weighted_level(originals[i], corpus.sample_rate,
                                         config.bcl.window_s);
      const double g2 = a_weighted_level(originals[j], corpus.sample_rate,
                                         config.bcl.window_s);
      batch.waves[i] = bc_mix(originals[i], originals[j], r, g1, g2);
    }
  }
  return batch;
}

DistillStats distill_step(ModelState& model, AdamState& adam,
                          const DistillBatch& batch, const PretrainConfig& config,
                          int64_t step, Rng& rng) {
  if (batch.waves.empty()) throw ArgumentError("distill_step: empty batch");
  const int64_t before_teacher = teacher_forward_count();

  model.frontend.set_requires_grad(true);
  model.transformer.set_requires_grad(true);
  model.decoder.set_requires_grad(true);
  model.frontend.zero_grad();
  model.transformer.zero_grad();
  model.decoder.zero_grad();

  std::vector<Tensor> batch_targets;
  ad::Var total;
  for (const auto& wave : batch.waves) {
    Tensor wave_t = Tensor::from_vector(wave);
    auto features = frontend_forward(wave_t, model.frontend, model.frontend_cfg);
    const int64_t frames = features.rows();

    Tensor targets = teacher_targets(features.value(), model, config.teacher_top_k);
    batch_targets.push_back(targets);

    MaskConfig mask_cfg = config.mask;
    mask_cfg.seed = rng.next_u64();
    MaskPlan plan = sample_mask(frames, mask_cfg);

    ad::Var clip_loss;
    for (int c = 0; c < config.mask.clones; ++c) {
      const auto& mask = plan.masks[static_cast<size_t>(c)];
      auto kept = kept_indices(mask);
      auto masked = masked_indices(mask);
      if (kept.empty()) {
        throw StateError("distill_step: clone masked every frame");
      }
      auto student_in = ad::gather_rows(features, kept);
      auto outputs = transformer_forward(student_in, model.transformer,
                                         model.net_cfg, /*train=*/true, &rng);
      // Full-length sequence: student rows scattered back, masked rows filled
      // with Gaussian noise before the decoder.
      Tensor base =
          fill_masked_noise(Tensor({frames, model.net_cfg.embed_dim}, 0.0), mask,
                            rng.next_u64());
      auto full = ad::scatter_rows(outputs.final, kept, base);
      auto pred = conv_decoder(full, model.decoder, model.net_cfg);
      auto loss = config.loss_masked_only
                      ? ad::mse_rows(pred, targets, masked)
                      : ad::mse_rows(pred, targets, [&] {
                          std::vector<int64_t> all(static_cast<size_t>(frames));
                          for (int64_t i = 0; i < frames; ++i) all[static_cast<size_t>(i)] = i;
                          return all;
                        }());
      clip_loss = clip_loss.defined() ? ad::add(clip_loss, loss) : loss;
    }
    clip_loss = ad::scale(clip_loss, 1.0 / config.mask.clones);
    total = total.defined() ? ad::add(total, clip_loss) : clip_loss;
  }
  total = ad::scale(total, 1.0 / static_cast<double>(batch.waves.size()));

  DistillStats stats;
  stats.loss = total.value().at(0);
  if (!std::isfinite(stats.loss)) {
    throw DivergenceError("distill_step: non-finite loss", step);
  }
  ad::backward(total);

  stats.collapse = collapse_monitor(batch_targets);
  std::vector<ParamSet*> sets{&model.frontend, &model.transformer, &model.decoder};
  stats.grad_norm = clip_global_norm(sets, config.optim.clip_norm);
  stats.lr = cosine_lr(step, config.optim);
  adamw_step(adam, sets, config.optim, stats.lr,
             {"pswish.alpha", "pswish.beta"});
  stats.tau = tau_schedule(step, config.ema);
  ema_update(model.teacher, model.transformer, stats.tau);
  stats.teacher_forwards = teacher_forward_count() - before_teacher;
  return stats;
}

}  // namespace a2v
