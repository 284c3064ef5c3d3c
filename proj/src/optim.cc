#include "a2v/optim.h"

#include <cmath>

#include "a2v/error.h"

namespace a2v {

double cosine_lr(int64_t step, const OptimConfig& config) {
  if (step < 0) throw ArgumentError("cosine_lr: negative step");
  if (step > config.total_steps) return 0.0;
  if (config.warmup_steps > 0 && step <= config.warmup_steps) {
    return config.lr_peak * static_cast<double>(step) /
           static_cast<double>(config.warmup_steps);
  }
  const double span =
      static_cast<double>(config.total_steps - config.warmup_steps);
  if (span <= 0.0) return config.lr_peak;
  const double progress = static_cast<double>(step - config.warmup_steps) / span;
  return config.lr_peak * 0.5 * (1.0 + std::cos(M_PI * progress));
}

AdamSlot& AdamState::slot_for(const std::string& name, const Tensor& like) {
  for (auto& s : slots) {
    if (s.name == name) return s;
  }
  slots.push_back({name, Tensor(like.shape, 0.0), Tensor(like.shape, 0.0)});
  return slots.back();
}

double clip_global_norm(const std::vector<ParamSet*>& sets, double max_norm) {
  double sq = 0.0;
  for (auto* set : sets) {
    for (auto& [name, var] : set->items) {
      for (double g : var.grad().v) sq += g * g;
    }
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double factor = max_norm / norm;
    for (auto* set : sets) {
      for (auto& [name, var] : set->items) {
        for (auto& g : var.grad().v) g *= factor;
      }
    }
  }
  return norm;
}

bool decays(const std::string& name,
            const std::vector<std::string>& no_decay_suffixes) {
  for (const auto& suffix : no_decay_suffixes) {
    if (name.size() >= suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
      return false;
    }
  }
  return true;
}

void adamw_step(AdamState& state, const std::vector<ParamSet*>& sets,
                const OptimConfig& config, double lr,
                const std::vector<std::string>& no_decay_suffixes) {
  state.t += 1;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
  for (auto* set : sets) {
    for (auto& [name, var] : set->items) {
      auto& slot = state.slot_for(name, var.value());
      Tensor& theta = var.mutable_value();
      const Tensor& grad = var.grad();
      const bool decay = decays(name, no_decay_suffixes);
      for (size_t i = 0; i < theta.v.size(); ++i) {
        slot.m.v[i] = config.beta1 * slot.m.v[i] + (1.0 - config.beta1) * grad.v[i];
        slot.v.v[i] = config.beta2 * slot.v.v[i] +
                      (1.0 - config.beta2) * grad.v[i] * grad.v[i];
        const double mhat = slot.m.v[i] / bc1;
        const double vhat = slot.v.v[i] / bc2;
        theta.v[i] -= lr * mhat / (std::sqrt(vhat) + config.eps);
        if (decay) theta.v[i] -= lr * config.weight_decay * theta.v[i];
      }
    }
  }
}

}  // namespace a2v
