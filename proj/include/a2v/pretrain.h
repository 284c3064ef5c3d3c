#ifndef A2V_PRETRAIN_H_
#define A2V_PRETRAIN_H_

#include <cstdint>
#include <string>
#include <vector>

#include "a2v/augment.h"
#include "a2v/corpus.h"
#include "a2v/masking.h"
#include "a2v/model.h"
#include "a2v/optim.h"
#include "a2v/rng.h"

namespace a2v {

struct EmaConfig {
  double tau_start = 0.999;
  double tau_end = 0.9999;
  int64_t anneal_steps = 0;
};

// Linear interpolation tau_start -> tau_end over anneal_steps, then constant.
double tau_schedule(int64_t step, const EmaConfig& config);

// theta_T <- tau * theta_T + (1 - tau) * theta_S, elementwise.
void ema_update(std::vector<Tensor>& teacher, const ParamSet& student,
                double tau);

struct PretrainConfig {
  OptimConfig optim;
  EmaConfig ema;
  MaskConfig mask;
  MixConfig bcl;
  int64_t batch_clips = 4;
  double crop_seconds = 1.5;
  bool loss_masked_only = true;
  int teacher_top_k = 0;  // 0 = average all layers
  int64_t checkpoint_every = 500;
};

struct DistillBatch {
  std::vector<std::vector<double>> waves;
};

struct DistillStats {
  double loss = 0.0;
  double lr = 0.0;
  double tau = 0.0;
  double collapse = 0.0;
  double grad_norm = 0.0;
  int64_t teacher_forwards = 0;
};

// Teacher regression target: full-sequence teacher transformer pass,
// per-layer outputs instance-normalized over time, averaged over the top
// top_k layers (0 = all). No gradient flows into the teacher.
Tensor teacher_targets(const Tensor& frontend_frames, const ModelState& model,
                       int top_k);

// Process-wide count of teacher transformer passes (multi-mask reuse check).
int64_t teacher_forward_count();
void reset_teacher_forward_count();

// Mean over dimensions of the std of target vectors across (batch, time).
double collapse_monitor(const std::vector<Tensor>& targets);

// One mean-teacher update: shared frontend pass per clip, one teacher target
// per clip, per-clone student passes on kept frames, decoder regression on
// masked frames, AdamW with decoupled decay (PSwish alpha/beta excluded),
// gradient clipping, then the EMA teacher update.
DistillStats distill_step(ModelState& model, AdamState& adam,
                          const DistillBatch& batch, const PretrainConfig& config,
                          int64_t step, Rng& rng);

// Random crops with optional BC mixing (input side only during pretraining).
DistillBatch make_pretrain_batch(const Corpus& corpus,
                                 const std::vector<std::string>& ids,
                                 const PretrainConfig& config, Rng& rng);

// Random crop helper shared with finetuning; returns the crop start sample.
int64_t crop_wave(const std::vector<double>& samples, int64_t crop_len, Rng& rng,
                  std::vector<double>& out);

}  // namespace a2v

#endif  // A2V_PRETRAIN_H_
