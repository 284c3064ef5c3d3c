#ifndef A2V_FINETUNE_H_
#define A2V_FINETUNE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "a2v/augment.h"
#include "a2v/corpus.h"
#include "a2v/model.h"
#include "a2v/optim.h"
#include "a2v/rng.h"

namespace a2v {

struct FocalConfig {
  double gamma = 2.0;  // 0 reduces to plain binary cross-entropy
};

struct FinetuneSchedule {
  int64_t warmup_steps = 0;  // learning-rate warmup
  int64_t frozen_steps = 0;  // steps with a fixed transformer
  int64_t total_steps = 1;
  double mask_p = 0.0;  // masking used purely as regularization
  int mask_span = 1;
};

struct FinetuneConfig {
  OptimConfig optim;
  FinetuneSchedule schedule;
  FocalConfig focal;
  MixConfig bcl;
  int layer_average_k = 0;  // 0 = all layers
  int64_t batch_clips = 4;
  double crop_seconds = 1.5;
  // Fraction of crops centered on a labeled event rather than placed
  // uniformly; counters the extreme frame imbalance of sparse corpora.
  double event_crop_bias = 0.5;
};

// Pointwise focal loss on a likelihood already in (0,1); target may be soft.
// With p_t = p*y + (1-p)(1-y): loss = -(1-p_t)^gamma (y ln p + (1-y) ln(1-p)).
double focal_loss(double likelihood, double target, double gamma);

struct LabeledExample {
  std::vector<double> wave;
  Tensor targets;  // [frames, n_classes], soft values in [0,1]
};

struct LabeledBatch {
  std::vector<LabeledExample> examples;
};

struct FinetuneStats {
  double loss = 0.0;
  double lr = 0.0;
  double grad_norm = 0.0;
};

// Random label-aligned crops with BC mixing of inputs and targets.
LabeledBatch make_finetune_batch(const Corpus& corpus,
                                 const std::vector<std::string>& ids,
                                 const FinetuneConfig& config,
                                 const FrontendConfig& frontend_cfg, Rng& rng);

// Supervised step: frontend always frozen, transformer frozen while
// step < frozen_steps, layer-averaged features into the sigmoid head,
// focal loss on (possibly mixed) soft targets, masking as regularization.
FinetuneStats finetune_step(ModelState& model, AdamState& adam,
                            const LabeledBatch& batch,
                            const FinetuneConfig& config, int64_t step,
                            Rng& rng);

// Frame targets for a crop of a labeled clip, truncated to the frontend's
// output length for that crop.
Tensor crop_frame_targets(const std::vector<LabelEvent>& events,
                          int64_t crop_start, int64_t crop_len,
                          const FrontendConfig& frontend_cfg,
                          const ClassTable& table);

// Deterministic eval-mode likelihoods [frames, n_classes] at the effective
// rate.
Tensor predict_likelihoods(const AudioClip& clip, const ModelState& model,
                           int layer_average_k);

}  // namespace a2v

#endif  // A2V_FINETUNE_H_
