#ifndef A2V_CHECKPOINT_H_
#define A2V_CHECKPOINT_H_

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "a2v/config.h"
#include "a2v/model.h"
#include "a2v/optim.h"
#include "a2v/rng.h"

namespace a2v {

// Single-file checkpoint: magic "A2VCKPT1", little-endian u64 header length,
// JSON header (format_version, step, config snapshot, rng state, array
// directory with shapes/dtype/offsets) followed by raw f64 data. Round-trips
// are bit-exact, including the RNG state.
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  int format_version = kCheckpointVersion;
  int64_t step = 0;
  std::map<std::string, std::string> config;
  std::array<uint64_t, 4> rng_state{};
  // Name -> tensor; parameter names are prefixed by their set
  // ("frontend.", "transformer.", "decoder.", "head.", "teacher.",
  // "adam.m.", "adam.v."), plus the scalar "adam.t".
  std::vector<std::pair<std::string, Tensor>> arrays;

  const Tensor* find(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

// Assembles a checkpoint from live training state. Sets that are empty are
// skipped (a finetune checkpoint has no decoder or teacher).
Checkpoint make_checkpoint(const ModelState& model, const AdamState& adam,
                           const Config& config, int64_t step, const Rng& rng);

// Restores parameters (and, when present, teacher/optimizer/rng) into an
// already-built model of the same architecture. Arrays with mismatched
// shapes raise StateError naming the offending array. When strict is false,
// checkpoint arrays with no counterpart in the model are ignored (loading a
// pretraining checkpoint for finetuning).
void restore_checkpoint(const Checkpoint& checkpoint, ModelState& model,
                        AdamState* adam, Rng* rng, bool strict);

}  // namespace a2v

#endif  // A2V_CHECKPOINT_H_
