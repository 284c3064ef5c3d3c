#include "a2v/model.h"

#include <cmath>

#include "a2v/error.h"

namespace a2v {

ad::Var ParamSet::add(const std::string& name, Tensor init) {
  if (has(name)) throw StateError("duplicate parameter " + name);
  items.emplace_back(name, ad::Var::param(std::move(init)));
  return items.back().second;
}

ad::Var ParamSet::get(const std::string& name) const {
  for (const auto& [n, v] : items) {
    if (n == name) return v;
  }
  throw StateError("unknown parameter " + name);
}

bool ParamSet::has(const std::string& name) const {
  for (const auto& [n, v] : items) {
    if (n == name) return true;
  }
  return false;
}

void ParamSet::zero_grad() {
  for (auto& [n, v] : items) v.grad().fill(0.0);
}

void ParamSet::set_requires_grad(bool enabled) {
  for (auto& [n, v] : items) v.node()->requires_grad = enabled;
}

std::vector<Tensor> ParamSet::values() const {
  std::vector<Tensor> out;
  out.reserve(items.size());
  for (const auto& [n, v] : items) out.push_back(v.value());
  return out;
}

int64_t ParamSet::numel() const {
  int64_t n = 0;
  for (const auto& [name, v] : items) n += v.value().numel();
  return n;
}

ModelState init_model(const FrontendConfig& fcfg, const NetworkConfig& ncfg,
                      uint64_t seed) {
  ModelState model;
  model.frontend_cfg = fcfg;
  model.net_cfg = ncfg;
  if (ncfg.input_dim != fcfg.output_channels()) {
    throw StateError("init_model: transformer input_dim must equal frontend channels");
  }
  Rng rng(seed);
  model.frontend = init_frontend_params(fcfg, rng);
  model.transformer = init_transformer_params(ncfg, rng);
  model.decoder = init_decoder_params(ncfg, rng);
  model.head = init_head_params(ncfg, rng);
  model.reset_teacher();
  return model;
}

void ModelState::reset_teacher() {
  teacher = transformer.values();
}

ParamSet teacher_view(const ModelState& model) {
  ParamSet view;
  if (model.teacher.size() != model.transformer.items.size()) {
    throw StateError("teacher_view: teacher/student structure mismatch");
  }
  view.items.reserve(model.teacher.size());
  for (size_t i = 0; i < model.teacher.size(); ++i) {
    view.items.emplace_back(model.transformer.items[i].first,
                            ad::Var::constant(model.teacher[i]));
  }
  return view;
}

}  // namespace a2v
