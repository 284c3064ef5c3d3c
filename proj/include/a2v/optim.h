#ifndef A2V_OPTIM_H_
#define A2V_OPTIM_H_

#include <cstdint>
#include <string>
#include <vector>

#include "a2v/params.h"

namespace a2v {

struct OptimConfig {
  double lr_peak = 1e-4;
  double weight_decay = 0.01;
  int64_t warmup_steps = 0;
  int64_t total_steps = 1;
  double clip_norm = 1.0;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-8;
};

// Linear warmup to lr_peak, then cosine decay to 0 at total_steps; 0 beyond.
double cosine_lr(int64_t step, const OptimConfig& config);

// One optimizer slot per parameter, keyed by name so checkpoints can restore
// across runs.
struct AdamSlot {
  std::string name;
  Tensor m;
  Tensor v;
};

struct AdamState {
  std::vector<AdamSlot> slots;
  int64_t t = 0;

  AdamSlot& slot_for(const std::string& name, const Tensor& like);
};

// Global-norm gradient clipping over every parameter in the sets; returns
// the pre-clip norm.
double clip_global_norm(const std::vector<ParamSet*>& sets, double max_norm);

// Decoupled AdamW update at learning rate lr: the weight-decay term
// lr * wd * theta is applied independently of the gradient moments.
// Parameters whose name appears in no_decay are excluded from decay.
void adamw_step(AdamState& state, const std::vector<ParamSet*>& sets,
                const OptimConfig& config, double lr,
                const std::vector<std::string>& no_decay_suffixes);

bool decays(const std::string& name,
            const std::vector<std::string>& no_decay_suffixes);

}  // namespace a2v

#endif  // A2V_OPTIM_H_
