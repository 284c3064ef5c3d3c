#ifndef A2V_MASKING_H_
#define A2V_MASKING_H_

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "a2v/tensor.h"

namespace a2v {

struct MaskConfig {
  double p = 0.15;    // per-frame span start probability
  int span_length = 2;  // M, frames per span
  int clones = 8;     // multi-mask count
  uint64_t seed = 0;
};

// clones x T boolean masks (true = masked) plus the sampled span starts the
// masks were derived from.
struct MaskPlan {
  std::vector<std::vector<bool>> masks;
  std::vector<std::vector<int64_t>> starts;

  int64_t frames() const {
    return masks.empty() ? 0 : static_cast<int64_t>(masks[0].size());
  }
};

// Independent per-frame Bernoulli(p) span starts, spans of M frames truncated
// at the sequence end, overlaps unioned. A clone drawing an empty mask is
// redrawn once. Deterministic for a fixed seed.
MaskPlan sample_mask(int64_t frames, const MaskConfig& config);

struct MaskStatistics {
  double coverage = 0.0;        // masked fraction over all clones
  double union_coverage = 0.0;  // fraction masked in at least one clone
  std::map<int64_t, int64_t> run_length_histogram;
  double mode_ms = 0.0;
};

MaskStatistics mask_statistics(const MaskPlan& plan, double frame_ms);

// Rows where mask is false, order preserved, plus the index map back into
// the original positions. Throws when everything is masked.
std::pair<Tensor, std::vector<int64_t>> apply_mask_student(
    const Tensor& frames, const std::vector<bool>& mask);

std::vector<int64_t> kept_indices(const std::vector<bool>& mask);
std::vector<int64_t> masked_indices(const std::vector<bool>& mask);

// Masked rows replaced by iid standard normal draws; unmasked rows are
// bit-identical. Deterministic for a fixed seed.
Tensor fill_masked_noise(const Tensor& frames, const std::vector<bool>& mask,
                         uint64_t seed);

}  // namespace a2v

#endif  // A2V_MASKING_H_
