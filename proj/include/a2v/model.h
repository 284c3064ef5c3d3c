#ifndef A2V_MODEL_H_
#define A2V_MODEL_H_

#include <cstdint>
#include <vector>

#include "a2v/frontend.h"
#include "a2v/network.h"
#include "a2v/params.h"

namespace a2v {

// All trainable parameters plus the EMA teacher copy of the transformer
// (input projection, positional conv, blocks, final norm). The frontend is
// shared between the student and teacher paths, the decoder exists only for
// pretraining and the head only for finetuning.
struct ModelState {
  FrontendConfig frontend_cfg;
  NetworkConfig net_cfg;
  ParamSet frontend;
  ParamSet transformer;
  ParamSet decoder;
  ParamSet head;
  std::vector<Tensor> teacher;  // aligned with transformer.items

  void reset_teacher();
};

ModelState init_model(const FrontendConfig& fcfg, const NetworkConfig& ncfg,
                      uint64_t seed);

// Constant-parameter view of the teacher, usable with transformer_forward.
ParamSet teacher_view(const ModelState& model);

}  // namespace a2v

#endif  // A2V_MODEL_H_
